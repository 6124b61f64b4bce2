"""
Base classes and interfaces for result exporters.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

HEADER_PREFIX = "# pgm-regularization"


def header_line(config_hash: str, kind: str) -> str:
    """Comment line that opens every text output."""
    return f"{HEADER_PREFIX} config_hash={config_hash} kind={kind}"


def parse_header_line(line: str) -> Dict[str, str]:
    """Inverse of header_line; returns {} for lines without the prefix."""
    if not line.startswith(HEADER_PREFIX):
        return {}
    pairs = (token.split("=", 1) for token in line[len(HEADER_PREFIX):].split() if "=" in token)
    return {key: value for key, value in pairs}


@dataclass
class Series:
    """One plotted line."""

    label: str
    x: Sequence[float]
    y: Sequence[float]
    style: str = "-"


@dataclass
class PlotPanel:
    """One set of axes of a figure."""

    title: str
    x_label: str
    y_label: str
    series: List[Series] = field(default_factory=list)
    vertical_lines: Dict[str, float] = field(default_factory=dict)
    horizontal_lines: Dict[str, float] = field(default_factory=dict)
    log_x: bool = True
    log_y: bool = False


@dataclass
class RunArtifacts:
    """Everything one run can emit; exporters pick the part they write.

    Attributes:
        name: File stem of the outputs.
        kind: Run kind recorded in headers (scan, potts_scan, posterior, ...).
        config_hash: Hash of the generating configuration.
        table: Tabular records for CSV.
        summary: Scalars for the key-value summary.
        panels: Figure panels for SVG.
        matrices: Named matrices for the binary container.
    """

    name: str
    kind: str
    config_hash: str
    table: Optional[pd.DataFrame] = None
    summary: Dict[str, Any] = field(default_factory=dict)
    panels: List[PlotPanel] = field(default_factory=list)
    matrices: Dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class ExportConfig:
    """Configuration for export operations."""

    output_path: Path
    format_type: str
    format_options: Dict[str, Any] = field(default_factory=dict)
    validate_output: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            'output_path': str(self.output_path),
            'format_type': self.format_type,
            'format_options': self.format_options,
            'validate_output': self.validate_output,
        }


@dataclass
class ExportResult:
    """Result of an export operation."""

    success: bool
    format_type: str
    output_path: Path
    execution_time: float
    file_size_bytes: int
    records_written: int = 0

    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    stats: Dict[str, Any] = field(default_factory=dict)

    export_timestamp: datetime = field(default_factory=datetime.now)
    config: Optional[ExportConfig] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'success': self.success,
            'format_type': self.format_type,
            'output_path': str(self.output_path),
            'execution_time': self.execution_time,
            'file_size_bytes': self.file_size_bytes,
            'records_written': self.records_written,
            'errors': self.errors,
            'warnings': self.warnings,
            'stats': self.stats,
            'export_timestamp': self.export_timestamp.isoformat(),
            'config': self.config.to_dict() if self.config else None,
        }


class BaseExporter(ABC):
    """Abstract base class for all exporters."""

    def __init__(self, config: ExportConfig):
        self.config = config
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    @property
    @abstractmethod
    def supported_formats(self) -> List[str]:
        """Return list of supported format types."""

    @property
    @abstractmethod
    def file_extension(self) -> str:
        """Return the file extension for this export format."""

    @abstractmethod
    def has_content(self, artifacts: RunArtifacts) -> bool:
        """Whether the artifacts carry anything this exporter writes."""

    @abstractmethod
    def export(self, artifacts: RunArtifacts) -> ExportResult:
        """
        Write the exporter's part of a run.

        Args:
            artifacts: Records of one run

        Returns:
            ExportResult with success status and metadata
        """

    def validate_config(self) -> List[str]:
        """Validate export configuration. Returns list of validation errors."""
        errors = []

        if not self.config.output_path:
            errors.append("Output path is required")

        if self.config.format_type not in self.supported_formats:
            errors.append(f"Format '{self.config.format_type}' not supported by {self.__class__.__name__}")

        return errors

    def prepare_output_path(self) -> Path:
        """Prepare and validate output path."""
        output_path = Path(self.config.output_path)

        if not output_path.name.endswith(self.file_extension):
            output_path = output_path.with_name(output_path.name + self.file_extension)

        output_path.parent.mkdir(parents=True, exist_ok=True)

        return output_path

    def validate_output(self, output_path: Path) -> List[str]:
        """Validate the exported output. Returns list of validation errors."""
        errors = []

        if not output_path.exists():
            errors.append("Output file was not created")
        elif output_path.stat().st_size == 0:
            errors.append("Output file is empty")

        return errors

    def get_file_size(self, output_path: Path) -> int:
        try:
            return output_path.stat().st_size
        except OSError:
            return 0

    def create_export_result(self, success: bool, output_path: Path, execution_time: float,
                             records_written: int = 0, errors: List[str] = None,
                             warnings: List[str] = None, stats: Dict[str, Any] = None) -> ExportResult:
        """Create a standardized export result."""
        if success and self.config.validate_output:
            problems = self.validate_output(output_path)
            if problems:
                success = False
                errors = (errors or []) + problems
        return ExportResult(
            success=success,
            format_type=self.config.format_type,
            output_path=output_path,
            execution_time=execution_time,
            file_size_bytes=self.get_file_size(output_path) if output_path.exists() else 0,
            records_written=records_written,
            errors=errors or [],
            warnings=warnings or [],
            stats=stats or {},
            config=self.config,
        )
