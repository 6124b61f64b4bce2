"""
Tests for the command-line interface.
"""

import json
from pathlib import Path

import pytest
import yaml

from ..cli import create_parser, main
from ..exporters.summary_exporter import read_summary


class TestCLI:
    """Argument parsing and exit codes."""

    @pytest.fixture
    def config_file(self, tmp_path):
        path = tmp_path / "experiment.yaml"
        path.write_text(yaml.safe_dump({
            'generator': {'kind': 'goe', 'n': 8, 'sigma': 0.5},
            'sampling': {'alpha': 4.0, 'seeds': [0]},
            'scan': {'gamma_min': 0.01, 'gamma_max': 100.0, 'points': 7},
        }))
        return path

    def test_parser(self):
        args = create_parser().parse_args(["scan", "--seeds", "0,1", "-j", "2", "--no-progress"])
        assert args.command == "scan"
        assert args.seeds == "0,1"
        assert args.jobs == 2
        assert args.no_progress

    def test_figure_argument(self):
        args = create_parser().parse_args(["reproduce-figure", "4", "--out", "results"])
        assert args.figure == 4
        with pytest.raises(SystemExit):
            create_parser().parse_args(["reproduce-figure", "3"])

    def test_command_required(self):
        with pytest.raises(SystemExit):
            create_parser().parse_args([])

    def test_find_gammas(self, config_file, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["find-gammas", "-c", str(config_file), "-o", str(out), "--no-progress"])
        assert code == 0
        assert "gamma_cross" in capsys.readouterr().out
        assert read_summary(out / "gammas.summary.txt")['n'] == 8

    def test_seed_override(self, config_file, tmp_path):
        out = tmp_path / "out"
        code = main(["scan", "-c", str(config_file), "-o", str(out), "--seeds", "2,3",
                     "--format", "csv", "--no-progress"])
        assert code == 0
        assert sorted(p.name for p in out.iterdir()) == ["scan_seed2.csv", "scan_seed3.csv"]

    def test_invalid_config(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump({'generator': {'kind': 'wishart'}}))
        assert main(["scan", "-c", str(path), "-o", str(tmp_path / "out"), "--no-progress"]) == 1

    def test_missing_config(self, tmp_path):
        assert main(["scan", "-c", str(tmp_path / "missing.yaml"), "--no-progress"]) == 1

    def test_bad_seed_list(self, config_file, tmp_path):
        assert main(["scan", "-c", str(config_file), "-o", str(tmp_path), "--seeds", "a,b",
                     "--no-progress"]) == 1

    def test_run_report(self, config_file, tmp_path):
        out = tmp_path / "out"
        report_path = tmp_path / "reports" / "run.json"
        code = main(["scan", "-c", str(config_file), "-o", str(out), "--format", "csv",
                     "--report", str(report_path), "--no-progress"])
        assert code == 0
        reports = json.loads(report_path.read_text())
        assert [r['kind'] for r in reports] == ["scan"]
        assert reports[0]['seeds'] == [0]
        export = reports[0]['export']
        assert export['failed_exports'] == 0
        results = list(export['export_results'].values())
        assert results and all(r['config']['format_type'] == "csv" for r in results)
        assert "scan_seed0.csv" in [Path(f).name for f in reports[0]['files']]
