"""
Tests for L2 MAP inference.
"""

import math

import numpy as np
import pytest
from scipy.optimize import minimize

from ..exceptions import DomainError, InvalidInputError
from ..map_l2 import (
    EmpiricalSpectrum,
    inferred_eigenvalue,
    inferred_gap,
    map_energy,
    norm_residual,
    solve_map,
    solve_map_spectrum,
)
from ..sampling import empirical_covariance, sample_gaussian
from ..spherical import covariance_from_interaction, generate_goe


class TestInferredEigenvalue:
    """Closed-form eigenvalue of the MAP couplings."""

    def test_unit_example(self):
        assert inferred_eigenvalue(1.0, 2.0, 1.0, 1.0) == pytest.approx((3.0 - math.sqrt(5.0)) / 2.0, abs=1e-12)

    def test_small_gamma_limit(self):
        assert inferred_eigenvalue(1.0, 2.0, 1.0, 1e-6) == pytest.approx(1.0, abs=1e-5)

    def test_zero_gamma_branch(self):
        assert inferred_eigenvalue(0.5, 3.0, 2.0, 0.0) == pytest.approx(1.0)

    def test_zero_gamma_zero_eigenvalue(self):
        with pytest.raises(DomainError):
            inferred_eigenvalue(0.0, 3.0, 2.0, 0.0)

    def test_quadratic_root(self):
        rng = np.random.default_rng(0)
        c = rng.uniform(0.0, 5.0, size=50)
        mu, alpha, gamma = 2.3, 0.7, 1.9
        j = inferred_eigenvalue(c, mu, alpha, gamma)
        residual = gamma * j ** 2 - (gamma * mu + alpha * c) * j + alpha * (mu * c - 1.0)
        assert np.max(np.abs(residual)) < 1e-12
        assert np.allclose(inferred_gap(c, mu, alpha, gamma), mu - j, atol=1e-12)

    def test_well_defined_at_zero_eigenvalue(self):
        j = inferred_eigenvalue(0.0, 1.5, 0.01, 2.0)
        assert np.isfinite(j)
        assert j < 1.5

    def test_rejects_bad_alpha(self):
        with pytest.raises(DomainError):
            inferred_eigenvalue(1.0, 2.0, 0.0, 1.0)


class TestNormResidual:
    """Normalization residual of the MAP spectrum."""

    def test_large_mu_limit(self):
        assert norm_residual(1e9, np.array([0.5, 1.5]), 1.0, 1.0) == pytest.approx(1.0, abs=1e-6)

    def test_monotone(self):
        c = np.array([0.2, 0.9, 1.9])
        values = [norm_residual(mu, c, 3.0, 0.5) for mu in np.linspace(-5.0, 10.0, 100)]
        assert np.all(np.diff(values) > 0)


class TestSolveMap:
    """Full MAP solution."""

    @pytest.fixture
    def sampled_covariance(self):
        model = covariance_from_interaction(generate_goe(12, 0.5, seed=1))
        return empirical_covariance(sample_gaussian(model, 36, seed=2))

    def test_identity_covariance(self):
        sol = solve_map(np.eye(5), alpha=2.0, gamma=0.3)
        assert np.allclose(sol.j_star, 0.0, atol=1e-10)
        assert sol.mu_star == pytest.approx(1.0, abs=1e-10)

    def test_strong_regularization(self, sampled_covariance):
        sol = solve_map(sampled_covariance, alpha=3.0, gamma=1e6)
        assert np.linalg.norm(sol.J_star.entries) < 1e-3
        assert sol.mu_star == pytest.approx(1.0, abs=1e-3)

    def test_two_site_invariants(self):
        C = np.diag([1.5, 0.5])
        sol = solve_map(C, alpha=1.0, gamma=1.0)
        assert np.max(np.abs(sol.quadratic_residuals())) < 1e-8
        assert abs(sol.normalization_residual()) < 1e-8
        assert sol.J_star.reconstruction_error() < 1e-8
        assert np.all(sol.gaps > 0)

    def test_two_site_energy_minimum(self):
        C = np.diag([1.5, 0.5])
        sol = solve_map(C, alpha=1.0, gamma=1.0)

        def energy(params):
            return map_energy(np.diag(params), C, 1.0, 1.0)

        result = minimize(energy, x0=np.zeros(2), method="Nelder-Mead",
                          options={'xatol': 1e-10, 'fatol': 1e-14, 'maxiter': 10_000})
        assert map_energy(sol.J_star, C, 1.0, 1.0) <= result.fun + 1e-8
        assert sol.energy(C) == pytest.approx(map_energy(sol.J_star, C, 1.0, 1.0), abs=1e-8)

    def test_invariants_on_sampled_instance(self, sampled_covariance):
        for gamma in (1e-3, 0.1, 10.0):
            sol = solve_map(sampled_covariance, alpha=3.0, gamma=gamma)
            assert abs(sol.normalization_residual()) < 1e-10
            assert np.max(np.abs(sol.quadratic_residuals())) < 1e-8

    def test_rank_deficient(self):
        model = covariance_from_interaction(generate_goe(10, 0.5, seed=3))
        C = empirical_covariance(sample_gaussian(model, 4, seed=4))
        sol = solve_map(C, alpha=0.4, gamma=1.0)
        assert np.all(np.isfinite(sol.j_star))
        assert abs(sol.normalization_residual()) < 1e-10

    def test_zero_gamma(self, sampled_covariance):
        sol = solve_map(sampled_covariance, alpha=3.0, gamma=0.0)
        assert np.allclose(sol.gaps, 1.0 / sol.c_emp)
        assert np.sum(sol.j_star) == pytest.approx(0.0, abs=1e-9)

    def test_zero_gamma_singular(self):
        with pytest.raises(InvalidInputError):
            solve_map(np.diag([2.0, 0.0]), alpha=1.0, gamma=0.0)

    def test_negative_gamma(self):
        with pytest.raises(DomainError):
            solve_map(np.eye(2), alpha=1.0, gamma=-1.0)

    def test_continuity_in_gamma(self, sampled_covariance):
        spectrum = EmpiricalSpectrum.from_covariance(sampled_covariance)
        base = solve_map_spectrum(spectrum, 3.0, 1.0).j_star
        steps = [np.max(np.abs(solve_map_spectrum(spectrum, 3.0, 1.0 + d).j_star - base))
                 for d in (1e-2, 1e-4, 1e-6)]
        assert steps[0] > steps[1] > steps[2]
        assert steps[2] < 1e-5

    def test_energy_decreases_towards_solution(self, sampled_covariance):
        sol = solve_map(sampled_covariance, alpha=3.0, gamma=0.5)
        rng = np.random.default_rng(5)
        noise = rng.normal(scale=1e-2, size=sol.J_star.entries.shape)
        perturbed = sol.J_star.entries + 0.5 * (noise + noise.T)
        assert map_energy(perturbed, sampled_covariance, 3.0, 0.5) > sol.energy(sampled_covariance)
