"""
Tests for Metropolis sampling of the coupling posterior.
"""

import numpy as np
import pytest

from ..exceptions import InvalidInputError
from ..map_l2 import map_energy, solve_map
from ..posterior import (
    TRACE_COLUMNS,
    PosteriorTrace,
    initial_state,
    metropolis_accept,
    metropolis_posterior,
    sparse_symmetric_perturbation,
    stationarity_zscore,
    window_means,
)
from ..sampling import empirical_covariance, sample_gaussian
from ..spherical import covariance_from_interaction, generate_goe


class TestPosteriorBase:
    """Shared small Gaussian instance."""

    @pytest.fixture
    def instance(self):
        model = covariance_from_interaction(generate_goe(6, 0.5, seed=0))
        C_emp = empirical_covariance(sample_gaussian(model, 30, seed=1))
        return C_emp, model.covariance, 5.0


class TestMetropolisRule(TestPosteriorBase):
    """Acceptance rule and proposals."""

    def test_downhill_always_accepted(self):
        rng = np.random.default_rng(0)
        assert all(metropolis_accept(-1.0, 10.0, rng) for _ in range(100))

    def test_downhill_draws_nothing(self):
        rng = np.random.default_rng(0)
        state = rng.bit_generator.state
        metropolis_accept(-0.5, 1.0, rng)
        assert rng.bit_generator.state == state

    def test_uphill_rate(self):
        rng = np.random.default_rng(1)
        accepted = np.mean([metropolis_accept(1.0, np.log(4.0), rng) for _ in range(20_000)])
        assert accepted == pytest.approx(0.25, abs=0.02)

    def test_perturbation_is_symmetric_and_sparse(self):
        step = sparse_symmetric_perturbation(10, 0.1, 0.05, np.random.default_rng(2))
        assert np.array_equal(step, step.T)
        assert 0 < np.count_nonzero(np.triu(step)) <= 3

    def test_initial_state_map(self, instance):
        C_emp, _, alpha = instance
        sol = solve_map(C_emp, alpha, 1.0)
        assert np.allclose(initial_state(sol, np.random.default_rng(0), "map"), sol.J_star.entries)

    def test_initial_state_unknown(self, instance):
        C_emp, _, alpha = instance
        with pytest.raises(InvalidInputError):
            initial_state(solve_map(C_emp, alpha, 1.0), np.random.default_rng(0), "uniform")


class TestMetropolisPosterior(TestPosteriorBase):
    """Chains over interaction matrices."""

    def test_zero_steps(self, instance):
        C_emp, C_tr, alpha = instance
        trace = metropolis_posterior(C_emp, C_tr, alpha, 1.0, beta=100.0, steps=0)
        assert len(trace) == 0
        assert list(trace.to_frame().columns) == TRACE_COLUMNS

    def test_records_after_burn_in(self, instance):
        C_emp, C_tr, alpha = instance
        trace = metropolis_posterior(C_emp, C_tr, alpha, 1.0, beta=100.0, steps=50, burn_in=20,
                                     record_every=5, seed=3)
        assert len(trace) == 10
        assert trace.column('step')[0] == 0
        assert np.all(np.diff(trace.column('step')) == 5)

    def test_deterministic(self, instance):
        C_emp, C_tr, alpha = instance
        first = metropolis_posterior(C_emp, C_tr, alpha, 1.0, beta=50.0, steps=40, seed=4)
        second = metropolis_posterior(C_emp, C_tr, alpha, 1.0, beta=50.0, steps=40, seed=4)
        assert first.to_frame().equals(second.to_frame())

    def test_map_energies(self, instance):
        C_emp, C_tr, alpha = instance
        sol = solve_map(C_emp, alpha, 2.0)
        trace = metropolis_posterior(C_emp, C_tr, alpha, 2.0, beta=10.0, steps=1, solution=sol)
        assert trace.map_train_energy == pytest.approx(map_energy(sol.J_star, C_emp, alpha, 2.0))
        relative = trace.relative_to()
        assert relative['train_energy'].iloc[0] == pytest.approx(
            trace.records[0]['train_energy'] - trace.map_train_energy)

    def test_zero_temperature_limit(self, instance):
        C_emp, C_tr, alpha = instance
        n = C_emp.shape[0]
        trace = metropolis_posterior(C_emp, C_tr, alpha, 1.0, beta=1e4 * n, steps=500, burn_in=200,
                                     init="map", seed=5)
        late = trace.column('train_energy')[-100:].mean()
        assert late == pytest.approx(trace.map_train_energy, rel=0.01)
        assert np.all(trace.column('train_energy') >= trace.map_train_energy - 1e-9)

    def test_temperature_ordering(self, instance):
        C_emp, C_tr, alpha = instance
        common = dict(steps=2000, burn_in=1000, init="map", seed=6)
        hot = metropolis_posterior(C_emp, C_tr, alpha, 1.0, beta=5.0, **common)
        cold = metropolis_posterior(C_emp, C_tr, alpha, 1.0, beta=5000.0, **common)
        assert hot.column('train_energy').mean() > cold.column('train_energy').mean()

    @pytest.mark.slow
    def test_posterior_windows_beat_map_test_energy(self):
        n, alpha, gamma = 20, 5.0, 5.0
        model = covariance_from_interaction(generate_goe(n, 0.5, seed=7))
        C_emp = empirical_covariance(sample_gaussian(model, int(alpha * n), seed=8))
        trace = metropolis_posterior(C_emp, model.covariance, alpha, gamma, beta=100.0 * n, steps=5000,
                                     burn_in=1000, record_every=10, init="gaussian", seed=9)
        means = window_means(trace, 20)
        assert len(means) == 25
        relative_test = means['test_energy'] - trace.map_test_energy
        relative_train = means['train_energy'] - trace.map_train_energy
        assert relative_test.min() < 0
        assert np.all(relative_train >= -1e-9)

    def test_invalid_beta(self, instance):
        C_emp, C_tr, alpha = instance
        with pytest.raises(InvalidInputError):
            metropolis_posterior(C_emp, C_tr, alpha, 1.0, beta=0.0, steps=10)


class TestTraceHelpers:
    """Trace post-processing."""

    def test_window_means(self):
        records = [{'step': k, 'train_energy': float(k), 'test_energy': 0.0, 'distance': 1.0, 'acceptance': 0.5}
                   for k in range(6)]
        means = window_means(PosteriorTrace(beta=1.0, records=records), 3)
        assert list(means['train_energy']) == [1.0, 4.0]
        assert list(means['step']) == [0, 3]

    def test_window_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            window_means(PosteriorTrace(beta=1.0), 0)

    def test_stationarity_of_constant(self):
        assert stationarity_zscore(np.ones(40)) == 0.0

    def test_stationarity_of_drift(self):
        assert stationarity_zscore(np.linspace(0.0, 10.0, 400)) > 2.0

    def test_stationarity_needs_data(self):
        assert np.isnan(stationarity_zscore([1.0, 2.0]))
