"""
SVG figures of scans and traces.
"""

import time
from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .base import BaseExporter, ExportResult, PlotPanel, RunArtifacts  # noqa: E402

# Fixed salt keeps element ids identical across reruns
SVG_HASH_SALT = "pgm-regularization"
PANEL_HEIGHT = 3.2
FIGURE_WIDTH = 6.4


def _draw_panel(ax, panel: PlotPanel) -> None:
    for series in panel.series:
        x = np.asarray(series.x, dtype=float)
        y = np.asarray(series.y, dtype=float)
        ax.plot(x, y, series.style, label=series.label)
    colors = plt.rcParams['axes.prop_cycle'].by_key()['color']
    for k, (label, value) in enumerate(panel.vertical_lines.items()):
        if value is not None and np.isfinite(value):
            ax.axvline(value, linestyle="--", linewidth=1, color=colors[k % len(colors)], label=label)
    for k, (label, value) in enumerate(panel.horizontal_lines.items()):
        if value is not None and np.isfinite(value):
            ax.axhline(value, linestyle=":", linewidth=1, color=colors[-1 - k % len(colors)], label=label)
    if panel.log_x:
        ax.set_xscale("log")
    if panel.log_y:
        ax.set_yscale("log")
    ax.set_title(panel.title)
    ax.set_xlabel(panel.x_label)
    ax.set_ylabel(panel.y_label)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize="small")


def render_svg(path: Path, panels: List[PlotPanel]) -> None:
    """Stack the panels vertically and save them as a reproducible SVG."""
    with plt.rc_context({'svg.hashsalt': SVG_HASH_SALT, 'svg.fonttype': 'path'}):
        fig, axes = plt.subplots(len(panels), 1, figsize=(FIGURE_WIDTH, PANEL_HEIGHT * len(panels)),
                                 squeeze=False)
        try:
            for ax, panel in zip(axes[:, 0], panels):
                _draw_panel(ax, panel)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={'Date': None})
        finally:
            plt.close(fig)


class SVGExporter(BaseExporter):
    """Export figure panels with matplotlib's SVG backend."""

    @property
    def supported_formats(self) -> List[str]:
        return ['svg']

    @property
    def file_extension(self) -> str:
        return '.svg'

    def has_content(self, artifacts: RunArtifacts) -> bool:
        return bool(artifacts.panels)

    def export(self, artifacts: RunArtifacts) -> ExportResult:
        start_time = time.time()

        errors = self.validate_config()
        if errors:
            return self.create_export_result(False, Path(self.config.output_path), 0, errors=errors)
        if not artifacts.panels:
            return self.create_export_result(False, Path(self.config.output_path), 0,
                                             errors=["Run carries no figure panels"])

        output_path = self.prepare_output_path()
        try:
            render_svg(output_path, artifacts.panels)
        except (OSError, ValueError) as e:
            self.logger.error(f"SVG export failed: {e}")
            return self.create_export_result(False, output_path, time.time() - start_time, errors=[str(e)])

        return self.create_export_result(True, output_path, time.time() - start_time,
                                         records_written=len(artifacts.panels))
