"""
Exporters for scan tables, summaries, figures and binary containers.
"""

from .base import BaseExporter, ExportConfig, ExportResult, PlotPanel, RunArtifacts, Series
from .batch_exporter import BatchExporter, BatchExportResult
from .csv_exporter import CSVExporter, read_csv_table
from .matrix_io import MatrixExporter, read_matrix, read_samples, write_matrix, write_samples
from .potts_io import read_potts_params, read_potts_samples, write_potts_params, write_potts_samples
from .summary_exporter import SummaryExporter, read_summary
from .svg_exporter import SVGExporter

__all__ = [
    "BaseExporter", "ExportConfig", "ExportResult",
    "PlotPanel", "RunArtifacts", "Series",
    "BatchExporter", "BatchExportResult",
    "CSVExporter", "SummaryExporter", "SVGExporter", "MatrixExporter",
    "read_csv_table", "read_summary",
    "read_matrix", "read_samples", "write_matrix", "write_samples",
    "read_potts_params", "read_potts_samples", "write_potts_params", "write_potts_samples",
]
