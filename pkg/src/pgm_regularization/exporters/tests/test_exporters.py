"""
Test suite for export system functionality.
"""

import pytest
import tempfile
from pathlib import Path
import shutil

import numpy as np
import pandas as pd

from ..base import ExportConfig, PlotPanel, RunArtifacts, Series, header_line, parse_header_line
from ..batch_exporter import BatchExporter
from ..csv_exporter import CSVExporter, read_csv_table
from ..matrix_io import MatrixExporter, read_matrix, read_samples, write_matrix, write_samples
from ..potts_io import read_potts_params, read_potts_samples, write_potts_params, write_potts_samples
from ..summary_exporter import SummaryExporter, format_value, read_summary, read_summary_header
from ..svg_exporter import SVGExporter
from ...exceptions import InvalidInputError
from ...potts import PottsSampleSet, generate_er_potts


class TestExportBase:
    """Test base export functionality."""

    @pytest.fixture
    def sample_artifacts(self):
        """One small scan run."""
        gammas = np.logspace(-2, 2, 5)
        table = pd.DataFrame({
            'gamma': gammas,
            'l_train': -1.0 - 1.0 / (1.0 + gammas),
            'l_test': -1.5 - 0.01 * np.log(gammas) ** 2,
            'l_gen': np.full(5, -1.4),
        })
        panel = PlotPanel(
            title="Likelihoods", x_label="gamma", y_label="log-likelihood per site",
            series=[Series(label=col, x=gammas, y=table[col]) for col in ('l_train', 'l_test', 'l_gen')],
            vertical_lines={'gamma_cross': 1.0, 'gamma_half': None},
        )
        return RunArtifacts(
            name="scan_seed0",
            kind="scan",
            config_hash="0123456789abcdef",
            table=table,
            summary={'seed': 0, 'gamma_cross': 1.0 / 3.0, 'gamma_half': None, 'condensed': False},
            panels=[panel],
            matrices={'J_true': np.eye(3), 'samples': np.arange(6, dtype=float).reshape(2, 3)},
        )

    @pytest.fixture
    def temp_dir(self):
        """Temporary directory for test outputs."""
        temp_dir = tempfile.mkdtemp()
        yield Path(temp_dir)
        shutil.rmtree(temp_dir)


class TestHeaders(TestExportBase):
    """Header comment lines."""

    def test_header_round_trip(self):
        line = header_line("abc", "scan")
        assert line.startswith("#")
        assert parse_header_line(line) == {'config_hash': 'abc', 'kind': 'scan'}

    def test_foreign_line(self):
        assert parse_header_line("gamma,l_train") == {}

    def test_export_config_to_dict(self, temp_dir):
        config = ExportConfig(output_path=temp_dir / "x", format_type="csv")
        assert config.to_dict()['format_type'] == "csv"


class TestCSVExporter(TestExportBase):
    """Test CSV table export."""

    def test_csv_export(self, sample_artifacts, temp_dir):
        config = ExportConfig(output_path=temp_dir / "scan", format_type="csv")
        result = CSVExporter(config).export(sample_artifacts)

        assert result.success
        assert result.output_path.suffix == ".csv"
        assert result.records_written == 5

        first_line = result.output_path.read_text().splitlines()[0]
        assert first_line == "# pgm-regularization config_hash=0123456789abcdef kind=scan"

    def test_csv_keeps_full_precision(self, sample_artifacts, temp_dir):
        config = ExportConfig(output_path=temp_dir / "scan", format_type="csv")
        result = CSVExporter(config).export(sample_artifacts)
        frame, header = read_csv_table(result.output_path)
        assert header['kind'] == "scan"
        assert list(frame.columns) == ['gamma', 'l_train', 'l_test', 'l_gen']
        assert np.array_equal(frame['l_train'].to_numpy(), sample_artifacts.table['l_train'].to_numpy())

    def test_missing_table(self, sample_artifacts, temp_dir):
        sample_artifacts.table = None
        config = ExportConfig(output_path=temp_dir / "scan", format_type="csv")
        result = CSVExporter(config).export(sample_artifacts)
        assert not result.success
        assert "no table" in result.errors[0]

    def test_wrong_format(self, temp_dir):
        exporter = CSVExporter(ExportConfig(output_path=temp_dir / "scan", format_type="svg"))
        assert exporter.validate_config()


class TestSummaryExporter(TestExportBase):
    """Test key-value summaries."""

    def test_value_formatting(self):
        assert format_value(None) == "none"
        assert format_value(float("nan")) == "none"
        assert format_value(True) == "true"
        assert format_value(np.int64(3)) == "3"
        assert format_value(0.1) == "0.10000000000000001"
        assert format_value([1, 2.5]) == "1, 2.5"

    def test_summary_round_trip(self, sample_artifacts, temp_dir):
        config = ExportConfig(output_path=temp_dir / "scan", format_type="summary")
        result = SummaryExporter(config).export(sample_artifacts)

        assert result.success
        assert result.output_path.name == "scan.summary.txt"
        record = read_summary(result.output_path)
        assert record == {'seed': 0, 'gamma_cross': 1.0 / 3.0, 'gamma_half': None, 'condensed': False}
        assert read_summary_header(result.output_path)['config_hash'] == "0123456789abcdef"


class TestSVGExporter(TestExportBase):
    """Test figure export."""

    def test_svg_export(self, sample_artifacts, temp_dir):
        config = ExportConfig(output_path=temp_dir / "scan", format_type="svg")
        result = SVGExporter(config).export(sample_artifacts)

        assert result.success
        content = result.output_path.read_text()
        assert content.lstrip().startswith("<?xml")
        assert "<svg" in content

    def test_svg_is_reproducible(self, sample_artifacts, temp_dir):
        first = SVGExporter(ExportConfig(output_path=temp_dir / "a", format_type="svg")).export(sample_artifacts)
        second = SVGExporter(ExportConfig(output_path=temp_dir / "b", format_type="svg")).export(sample_artifacts)
        assert first.output_path.read_bytes() == second.output_path.read_bytes()

    def test_no_panels(self, sample_artifacts, temp_dir):
        sample_artifacts.panels = []
        result = SVGExporter(ExportConfig(output_path=temp_dir / "scan", format_type="svg")).export(sample_artifacts)
        assert not result.success


class TestMatrixContainers(TestExportBase):
    """Test the GRL1 binary containers."""

    def test_matrix_layout(self, temp_dir):
        path = write_matrix(temp_dir / "m.bin", np.array([[1.0, 2.0], [3.0, 4.0]]))
        raw = path.read_bytes()
        assert raw[:4] == b"GRL1"
        assert int.from_bytes(raw[4:8], "little") == 2
        assert len(raw) == 8 + 4 * 8
        assert np.array_equal(read_matrix(path), [[1.0, 2.0], [3.0, 4.0]])

    def test_samples_layout(self, temp_dir):
        data = np.random.default_rng(0).normal(size=(4, 3))
        path = write_samples(temp_dir / "s.bin", data)
        raw = path.read_bytes()
        assert int.from_bytes(raw[4:8], "little") == 4
        assert int.from_bytes(raw[8:12], "little") == 3
        assert np.array_equal(read_samples(path), data)

    def test_rejects_bad_input(self, temp_dir):
        with pytest.raises(InvalidInputError):
            write_matrix(temp_dir / "m.bin", np.zeros((2, 3)))
        bogus = temp_dir / "bogus.bin"
        bogus.write_bytes(b"NOPE" + bytes(12))
        with pytest.raises(InvalidInputError):
            read_matrix(bogus)

    def test_matrix_exporter(self, sample_artifacts, temp_dir):
        config = ExportConfig(output_path=temp_dir / "scan_seed0", format_type="matrix")
        result = MatrixExporter(config).export(sample_artifacts)

        assert result.success
        assert result.records_written == 2
        assert np.array_equal(read_matrix(temp_dir / "scan_seed0_J_true.bin"), np.eye(3))
        assert read_samples(temp_dir / "scan_seed0_samples.bin").shape == (2, 3)


class TestPottsFormats(TestExportBase):
    """Test Potts parameter and sample files."""

    def test_params_round_trip(self, temp_dir):
        params = generate_er_potts(6, 3, 2.0, seed=0)
        path = write_potts_params(temp_dir / "truth.yaml", params, config_hash="abc")
        restored = read_potts_params(path)
        assert np.allclose(restored.h, params.h)
        assert np.allclose(restored.J, params.J)
        assert restored.edges() == params.edges()

    def test_samples_round_trip(self, temp_dir):
        samples = PottsSampleSet(data=np.random.default_rng(1).integers(0, 3, size=(10, 4)), q=3)
        path = write_potts_samples(temp_dir / "train.csv", samples)
        restored = read_potts_samples(path, q=3)
        assert np.array_equal(restored.data, samples.data)

    def test_malformed_document(self, temp_dir):
        path = temp_dir / "bad.yaml"
        path.write_text("sites: 2\nstates: 2\n")
        with pytest.raises(InvalidInputError):
            read_potts_params(path)


class TestBatchExporter(TestExportBase):
    """Test batch export functionality."""

    def test_batch_export(self, sample_artifacts, temp_dir):
        exporter = BatchExporter(temp_dir)
        result = exporter.export_run(sample_artifacts, ['csv', 'summary', 'svg', 'matrix'])

        assert result.success
        assert result.total_exports == 4
        assert result.successful_exports == 4
        names = {p.name for p in result.paths}
        assert {"scan_seed0.csv", "scan_seed0.summary.txt", "scan_seed0.svg",
                "scan_seed0_J_true.bin", "scan_seed0_samples.bin"} <= names

    def test_invalid_formats(self, sample_artifacts, temp_dir):
        result = BatchExporter(temp_dir).export_run(sample_artifacts, ['csv', 'docx'])
        assert not result.success
        assert "docx" in result.errors[0]
        assert result.total_exports == 0

    def test_skips_formats_without_content(self, sample_artifacts, temp_dir):
        sample_artifacts.panels = []
        sample_artifacts.matrices = {}
        result = BatchExporter(temp_dir).export_run(sample_artifacts, ['csv', 'svg', 'matrix'])
        assert result.success
        assert result.total_exports == 1

    def test_export_runs_merges(self, sample_artifacts, temp_dir):
        other = RunArtifacts(name="scan_seed1", kind="scan", config_hash="x", table=sample_artifacts.table)
        result = BatchExporter(temp_dir).export_runs([sample_artifacts, other], ['csv'])
        assert result.successful_exports == 2
        assert result.to_dict()['failed_exports'] == 0
