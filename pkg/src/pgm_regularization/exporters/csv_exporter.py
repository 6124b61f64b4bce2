"""
CSV export of run tables.
"""

import time
from pathlib import Path
from typing import Dict, List, Tuple

import pandas as pd

from .base import BaseExporter, ExportResult, RunArtifacts, header_line, parse_header_line

FLOAT_FORMAT = "%.17g"


def write_csv_table(path: Path, frame: pd.DataFrame, config_hash: str, kind: str) -> int:
    """Write a commented header line followed by the table; returns the row count."""
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(header_line(config_hash, kind) + "\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT)
    return len(frame)


def read_csv_table(path: Path) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """Read a table written by write_csv_table together with its header fields."""
    with open(path, 'r', encoding='utf-8') as f:
        header = parse_header_line(f.readline().rstrip("\n"))
    return pd.read_csv(path, comment="#"), header


class CSVExporter(BaseExporter):
    """Export run tables to CSV with full float precision."""

    @property
    def supported_formats(self) -> List[str]:
        return ['csv']

    @property
    def file_extension(self) -> str:
        return '.csv'

    def has_content(self, artifacts: RunArtifacts) -> bool:
        return artifacts.table is not None

    def export(self, artifacts: RunArtifacts) -> ExportResult:
        start_time = time.time()

        errors = self.validate_config()
        if errors:
            return self.create_export_result(False, Path(self.config.output_path), 0, errors=errors)
        if artifacts.table is None:
            return self.create_export_result(False, Path(self.config.output_path), 0,
                                             errors=["Run carries no table"])

        output_path = self.prepare_output_path()
        try:
            rows = write_csv_table(output_path, artifacts.table, artifacts.config_hash, artifacts.kind)
        except OSError as e:
            self.logger.error(f"CSV export failed: {e}")
            return self.create_export_result(False, output_path, time.time() - start_time, errors=[str(e)])

        self.logger.debug(f"Wrote {rows} rows to {output_path}")
        return self.create_export_result(True, output_path, time.time() - start_time,
                                         records_written=rows,
                                         stats={'columns': list(artifacts.table.columns)})
