"""
Tests for the configuration-driven experiment runners.
"""

import numpy as np
import pandas as pd
import pytest

from .. import experiments
from ..config import ExperimentConfig
from ..exceptions import InvalidInputError
from ..exporters.csv_exporter import read_csv_table
from ..exporters.matrix_io import read_matrix
from ..exporters.potts_io import read_potts_params
from ..exporters.summary_exporter import read_summary
from ..experiments import ExperimentRunner, build_gaussian_instance, reproduce_figure


def _gaussian_config(**overrides) -> ExperimentConfig:
    data = {
        'generator': {'kind': 'goe', 'n': 10, 'sigma': 0.5},
        'sampling': {'alpha': 5.0, 'seeds': [0]},
        'scan': {'gamma_min': 1e-2, 'gamma_max': 1e2, 'points': 9},
        'posterior': {'gamma': 2.0, 'betas': [100.0, 1000.0], 'steps': 20, 'burn_in': 10,
                      'record_every': 2},
        'potts': {'n': 5, 'q': 2, 'd': 2.0, 'p': 200, 'burn_in': 50, 'thinning': 2, 'chains': 20,
                  'gamma_min': 0.1, 'gamma_max': 10.0, 'points': 4, 'kl_method': 'exact'},
    }
    for section, values in overrides.items():
        data.setdefault(section, {}).update(values)
    return ExperimentConfig.from_dict(data)


def _runner(config: ExperimentConfig, out, **kwargs) -> ExperimentRunner:
    return ExperimentRunner(config, output_dir=out, show_progress=False, **kwargs)


class TestGaussianInstance:
    """Ground truth and training data of one seed."""

    def test_reproducible(self):
        config = _gaussian_config()
        first = build_gaussian_instance(config.generator, config.sampling, 3)
        second = build_gaussian_instance(config.generator, config.sampling, 3)
        assert np.array_equal(first.C_emp, second.C_emp)
        assert first.samples.p == 50
        assert first.alpha == pytest.approx(5.0)

    def test_rescaled_trace(self):
        config = _gaussian_config(sampling={'rescale_trace': True})
        instance = build_gaussian_instance(config.generator, config.sampling, 0)
        assert np.trace(instance.C_emp) == pytest.approx(10.0)


class TestGaussianRuns:
    """generate, scan and find-gammas."""

    def test_generate(self, tmp_path):
        config = _gaussian_config(outputs={'formats': ['matrix', 'summary']})
        report = _runner(config, tmp_path).generate()
        assert not report.errors
        J = read_matrix(tmp_path / "generate_seed0_j_tr.bin")
        assert J.shape == (10, 10)
        assert np.allclose(np.diag(J), 0.0)
        summary = read_summary(tmp_path / "generate_seed0.summary.txt")
        assert summary['p'] == 50

    def test_scan_writes_outputs(self, tmp_path):
        report = _runner(_gaussian_config(), tmp_path).run_gaussian_scan()
        assert not report.errors
        for name in ("scan_seed0.csv", "scan.summary.txt", "scan.svg"):
            assert (tmp_path / name).exists()
        frame, header = read_csv_table(tmp_path / "scan_seed0.csv")
        assert header['config_hash'] == report.config_hash
        assert len(frame) == 9
        assert {'gamma', 'l_train', 'l_test', 'l_gen', 'l_train_per_site'} <= set(frame.columns)
        assert np.all(np.diff(frame['l_train']) <= 1e-9)

    def test_rerun_is_byte_identical(self, tmp_path):
        config = _gaussian_config(sampling={'seeds': [0, 1]})
        _runner(config, tmp_path / "a").run_gaussian_scan()
        _runner(config, tmp_path / "b", jobs=2).run_gaussian_scan()
        for name in ("scan_seed0.csv", "scan_seed1.csv", "scan.summary.txt"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_parallel_run_matches_serial(self, tmp_path):
        config = _gaussian_config(sampling={'seeds': [0, 1, 2, 3]})
        _runner(config, tmp_path / "serial", jobs=1).run_gaussian_scan()
        _runner(config, tmp_path / "parallel", jobs=4).run_gaussian_scan()
        names = sorted(path.name for path in (tmp_path / "serial").glob("*.csv"))
        assert names == [f"scan_seed{seed}.csv" for seed in range(4)]
        for name in names + ["scan.summary.txt"]:
            assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "parallel" / name).read_bytes()

    def test_l1_scan(self, tmp_path):
        config = _gaussian_config(scan={'penalty': 'l1', 'gamma_min': 1e-3, 'gamma_max': 1.0, 'points': 5})
        report = _runner(config, tmp_path, formats=['csv']).run_gaussian_scan()
        assert not report.errors
        frame, _ = read_csv_table(tmp_path / "scan_seed0.csv")
        assert 'gamma1' in frame.columns

    def test_find_gammas_writes_summary_only(self, tmp_path):
        report = _runner(_gaussian_config(), tmp_path).find_gammas()
        assert [p.name for p in report.paths] == ["gammas.summary.txt"]
        summary = read_summary(tmp_path / "gammas.summary.txt")
        assert summary['generator'] == "goe"
        assert 'seed0_gamma_cross_infinite' in summary

    def test_failing_seed_is_recorded(self, tmp_path, monkeypatch):
        original = experiments.build_gaussian_instance

        def flaky(generator, sampling, seed):
            if seed == 1:
                raise InvalidInputError("boom")
            return original(generator, sampling, seed)

        monkeypatch.setattr(experiments, "build_gaussian_instance", flaky)
        report = _runner(_gaussian_config(sampling={'seeds': [0, 1]}), tmp_path).run_gaussian_scan()
        assert [o.seed for o in report.succeeded] == [0]
        assert not report.all_failed
        assert any("boom" in e for e in report.errors)
        assert read_summary(tmp_path / "scan.summary.txt")['failed_seeds'] == 1

    def test_all_seeds_failing(self, tmp_path, monkeypatch):
        def broken(generator, sampling, seed):
            raise InvalidInputError("boom")

        monkeypatch.setattr(experiments, "build_gaussian_instance", broken)
        report = _runner(_gaussian_config(sampling={'seeds': [0, 1]}), tmp_path).run_gaussian_scan()
        assert report.all_failed
        assert report.paths == []


class TestPosteriorRun:
    """Posterior traces."""

    def test_one_file_per_beta(self, tmp_path):
        report = _runner(_gaussian_config(), tmp_path, formats=['csv', 'summary']).run_posterior()
        assert not report.errors
        first, _ = read_csv_table(tmp_path / "posterior_seed0_beta0.csv")
        second, _ = read_csv_table(tmp_path / "posterior_seed0_beta1.csv")
        assert len(first) == len(second) == 10
        summary = read_summary(tmp_path / "posterior.summary.txt")
        assert summary['seed0_beta1_beta'] == 1000.0

    def test_zero_steps_gives_header_only(self, tmp_path):
        config = _gaussian_config(posterior={'steps': 0, 'burn_in': 0, 'betas': [100.0]})
        report = _runner(config, tmp_path, formats=['csv']).run_posterior()
        assert not report.errors
        frame, _ = read_csv_table(tmp_path / "posterior_seed0_beta0.csv")
        assert len(frame) == 0
        assert list(frame.columns) == ['step', 'train_energy', 'test_energy', 'distance', 'acceptance']


class TestPottsRun:
    """PLM over a gamma grid with exact KL."""

    def test_potts_scan(self, tmp_path):
        config = _gaussian_config(outputs={'formats': ['csv', 'summary', 'matrix']})
        report = _runner(config, tmp_path).run_potts_scan()
        assert not report.errors
        frame, _ = read_csv_table(tmp_path / "potts_seed0.csv")
        assert len(frame) == 4
        assert (frame['kl'] >= -1e-10).all()
        assert (frame['kl_method'] == "exact").all()
        assert np.all(np.diff(frame['coupling_norm_sq']) < 0)
        truth = read_potts_params(tmp_path / "potts_truth_seed0.yaml")
        assert truth.n == 5
        assert (tmp_path / "potts_train_seed0.csv") in report.paths
        summary = read_summary(tmp_path / "potts_scan.summary.txt")
        assert summary['prediction_inverse_degree'] == pytest.approx(0.5)

    @pytest.mark.slow
    def test_kl_minimum_near_inverse_degree(self, tmp_path):
        config = ExperimentConfig.from_dict({
            'sampling': {'seeds': [0, 1, 2]},
            'potts': {'n': 10, 'q': 3, 'd': 2.5, 'p': 1000, 'kl_method': 'exact'},
            'outputs': {'formats': ['summary']},
        })
        report = _runner(config, tmp_path).run_potts_scan()
        assert not report.errors
        for outcome in report.outcomes:
            argmin = outcome.records['kl_argmin']
            assert argmin is not None
            assert 0.4 / 3.0 <= argmin <= 0.4 * 3.0

    @pytest.mark.slow
    def test_likelihood_ordering_at_extreme_gammas(self, tmp_path):
        config = ExperimentConfig.from_dict({
            'sampling': {'seeds': [0, 1, 2]},
            'potts': {'n': 10, 'q': 3, 'd': 2.5, 'p': 1000, 'kl_method': 'exact', 'likelihoods': True,
                      'gamma_min': 1e-3, 'gamma_max': 1e3, 'points': 2},
            'outputs': {'formats': ['summary']},
        })
        report = _runner(config, tmp_path).run_potts_scan()
        assert not report.errors
        frame = pd.concat([outcome.extras['frame'] for outcome in report.outcomes])
        weak = frame[frame['gamma'] == frame['gamma'].min()].mean(numeric_only=True)
        strong = frame[frame['gamma'] == frame['gamma'].max()].mean(numeric_only=True)
        assert weak['l_train'] > weak['l_test']
        assert weak['l_gen'] > weak['l_test']
        assert abs(weak['l_train'] - weak['l_gen']) < 0.5 * (weak['l_train'] - weak['l_test'])
        assert strong['l_gen'] < strong['l_test']


class TestFigurePresets:
    """Preset dispatch."""

    def test_unknown_figure(self, tmp_path):
        with pytest.raises(InvalidInputError):
            reproduce_figure(3, output_dir=tmp_path)
