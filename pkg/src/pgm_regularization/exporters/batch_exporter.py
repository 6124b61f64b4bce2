"""
Batch Export System
Writes every requested format of a run and collects the per-format results
"""

import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .base import BaseExporter, ExportConfig, ExportResult, RunArtifacts
from .csv_exporter import CSVExporter
from .matrix_io import MatrixExporter
from .summary_exporter import SummaryExporter
from .svg_exporter import SVGExporter

logger = logging.getLogger(__name__)


class BatchExportResult:
    """Result of a batch export operation."""

    def __init__(self):
        self.success: bool = True
        self.total_exports: int = 0
        self.successful_exports: int = 0
        self.failed_exports: int = 0
        self.export_results: Dict[str, ExportResult] = {}
        self.execution_time: float = 0.0
        self.start_time: datetime = datetime.now()
        self.end_time: Optional[datetime] = None
        self.errors: List[str] = []
        self.warnings: List[str] = []
        # files written outside the exporters, e.g. Potts model inputs
        self.extra_paths: List[Path] = []

    def add_result(self, key: str, result: ExportResult):
        """Add an individual export result."""
        self.export_results[key] = result
        self.total_exports += 1

        if result.success:
            self.successful_exports += 1
        else:
            self.failed_exports += 1
            self.success = False
            self.errors.extend(result.errors)

    def merge(self, other: "BatchExportResult"):
        for key, result in other.export_results.items():
            self.add_result(key, result)
        self.errors.extend(e for e in other.errors if e not in self.errors)
        self.warnings.extend(other.warnings)
        self.extra_paths.extend(other.extra_paths)
        if not other.success:
            self.success = False

    @property
    def paths(self) -> List[Path]:
        files = []
        for result in self.export_results.values():
            if not result.success:
                continue
            files.extend(Path(p) for p in result.stats.get('files', [result.output_path]))
        return files + list(self.extra_paths)

    def finalize(self):
        """Finalize the batch result."""
        self.end_time = datetime.now()
        self.execution_time = (self.end_time - self.start_time).total_seconds()

        if self.failed_exports > 0:
            self.success = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            'success': self.success,
            'total_exports': self.total_exports,
            'successful_exports': self.successful_exports,
            'failed_exports': self.failed_exports,
            'execution_time': self.execution_time,
            'start_time': self.start_time.isoformat(),
            'end_time': self.end_time.isoformat() if self.end_time else None,
            'export_results': {k: v.to_dict() for k, v in self.export_results.items()},
            'errors': self.errors,
            'warnings': self.warnings,
        }


class BatchExporter:
    """Batch exporter for multiple export formats."""

    EXPORTERS = {
        'csv': CSVExporter,
        'summary': SummaryExporter,
        'svg': SVGExporter,
        'matrix': MatrixExporter,
    }

    def __init__(self, output_directory: Path):
        self.output_directory = Path(output_directory)
        self.logger = logging.getLogger(__name__)

    def _create_exporter(self, format_name: str, stem: str) -> BaseExporter:
        exporter_class = self.EXPORTERS[format_name]
        return exporter_class(ExportConfig(output_path=self.output_directory / stem, format_type=format_name))

    def export_run(self, artifacts: RunArtifacts, formats: Sequence[str]) -> BatchExportResult:
        """
        Write one run in every requested format that it has content for.

        Args:
            artifacts: Records of the run
            formats: Format names from EXPORTERS

        Returns:
            BatchExportResult keyed by "<name>.<format>"
        """
        batch_result = BatchExportResult()

        invalid_formats = [f for f in formats if f not in self.EXPORTERS]
        if invalid_formats:
            batch_result.success = False
            batch_result.errors.append(f"Invalid formats: {', '.join(invalid_formats)}")
            batch_result.finalize()
            return batch_result

        self.output_directory.mkdir(parents=True, exist_ok=True)
        for format_name in formats:
            exporter = self._create_exporter(format_name, artifacts.name)
            if not exporter.has_content(artifacts):
                continue
            try:
                result = exporter.export(artifacts)
            except Exception as e:
                self.logger.error(f"{format_name} export of {artifacts.name} failed: {e}")
                result = exporter.create_export_result(False, Path(exporter.config.output_path), 0.0,
                                                       errors=[f"{type(e).__name__}: {e}"])
            batch_result.add_result(f"{artifacts.name}.{format_name}", result)

        batch_result.finalize()
        return batch_result

    def export_runs(self, runs: Sequence[RunArtifacts], formats: Sequence[str]) -> BatchExportResult:
        """Export several runs in order, sequentially on the calling thread."""
        combined = BatchExportResult()
        for artifacts in runs:
            combined.merge(self.export_run(artifacts, formats))
        combined.finalize()
        self.logger.info(f"Exported {combined.successful_exports}/{combined.total_exports} files "
                         f"to {self.output_directory}")
        return combined
