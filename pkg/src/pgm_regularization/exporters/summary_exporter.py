"""
Key-value summary records.

One `key = value` line per scalar after the common header comment. Floats use
17 significant digits and missing values are written as `none`.
"""

import math
import time
from numbers import Integral, Real
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from .base import BaseExporter, ExportResult, RunArtifacts, header_line, parse_header_line

NONE_TOKEN = "none"


def format_value(value: Any) -> str:
    if value is None:
        return NONE_TOKEN
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, Integral):
        return str(int(value))
    if isinstance(value, Real):
        value = float(value)
        return NONE_TOKEN if math.isnan(value) else format(value, ".17g")
    if isinstance(value, (list, tuple, np.ndarray)):
        return ", ".join(format_value(v) for v in value)
    return str(value)


def parse_value(text: str) -> Any:
    if text == NONE_TOKEN:
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_summary(path: Path, record: Dict[str, Any], config_hash: str, kind: str) -> int:
    lines = [header_line(config_hash, kind)]
    lines.extend(f"{key} = {format_value(value)}" for key, value in record.items())
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write("\n".join(lines) + "\n")
    return len(record)


def read_summary(path: Path) -> Dict[str, Any]:
    """Parse a summary file back into a dict; list values stay as strings."""
    record = {}
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition(" = ")
            record[key] = parse_value(value)
    return record


def read_summary_header(path: Path) -> Dict[str, str]:
    with open(path, 'r', encoding='utf-8') as f:
        return parse_header_line(f.readline().rstrip("\n"))


class SummaryExporter(BaseExporter):
    """Export located roots, predictions and aggregates as key-value text."""

    @property
    def supported_formats(self) -> List[str]:
        return ['summary']

    @property
    def file_extension(self) -> str:
        return '.summary.txt'

    def has_content(self, artifacts: RunArtifacts) -> bool:
        return bool(artifacts.summary)

    def export(self, artifacts: RunArtifacts) -> ExportResult:
        start_time = time.time()

        errors = self.validate_config()
        if errors:
            return self.create_export_result(False, Path(self.config.output_path), 0, errors=errors)

        output_path = self.prepare_output_path()
        try:
            count = write_summary(output_path, artifacts.summary, artifacts.config_hash, artifacts.kind)
        except OSError as e:
            self.logger.error(f"Summary export failed: {e}")
            return self.create_export_result(False, output_path, time.time() - start_time, errors=[str(e)])

        return self.create_export_result(True, output_path, time.time() - start_time, records_written=count)
