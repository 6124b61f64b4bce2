"""
L2-regularized MAP inference of the spherical model.

The MAP couplings share the eigenbasis of the empirical covariance, so the
problem reduces to one closed-form eigenvalue per covariance eigenvalue and
a scalar root search for the Lagrange multiplier.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Union

import numpy as np

from .exceptions import DomainError, InvalidInputError
from .roots import brent_root, expand_bracket
from .spherical import (
    InteractionMatrix,
    log_partition_from_gaps,
    solve_lagrange_multiplier,
    symmetric_eigh,
)
from .utils import as_finite_array, require_square

logger = logging.getLogger(__name__)

__all__ = [
    "EmpiricalSpectrum",
    "MapSolution",
    "brent_root",
    "inferred_eigenvalue",
    "inferred_gap",
    "map_energy",
    "norm_residual",
    "solve_map",
    "solve_map_spectrum",
]

PSD_TOLERANCE = 1e-8
MU_XTOL = 1e-14


@dataclass(eq=False)
class EmpiricalSpectrum:
    """Eigen-decomposition of an empirical covariance, eigenvalues descending.

    Computed once per covariance and shared read-only across a gamma grid.
    """

    values: np.ndarray
    basis: np.ndarray

    @classmethod
    def from_covariance(cls, C_emp: np.ndarray) -> "EmpiricalSpectrum":
        C_emp = as_finite_array(C_emp, "empirical covariance", ndim=2)
        require_square(C_emp, "empirical covariance")
        scale = max(1.0, float(np.max(np.abs(C_emp))))
        if np.max(np.abs(C_emp - C_emp.T)) > 1e-10 * scale:
            raise InvalidInputError("Empirical covariance is not symmetric")
        values, basis = symmetric_eigh(0.5 * (C_emp + C_emp.T))
        if values[-1] < -PSD_TOLERANCE * max(1.0, values[0]):
            raise InvalidInputError(f"Empirical covariance is not PSD (min eigenvalue {values[-1]:.3e})")
        # round-off zeros of rank-deficient covariances
        return cls(values=np.clip(values, 0.0, None), basis=basis)

    @property
    def n(self) -> int:
        return self.values.size

    def rotate_diagonal(self, matrix: np.ndarray) -> np.ndarray:
        """Diagonal of V^T M V."""
        return np.sum(self.basis * (matrix @ self.basis), axis=0)


@dataclass(eq=False)
class MapSolution:
    """Inferred couplings in spectral form.

    Attributes:
        j_star: Inferred eigenvalues, paired with c_emp.
        mu_star: Lagrange multiplier of the inferred model.
        basis: Eigenvectors shared by J* and (for L2) the empirical covariance.
        c_emp: Diagonal of the empirical covariance in basis; for L2 these are
            its eigenvalues sorted descending.
        gamma: Regularization strength.
        alpha: Sampling ratio.
        gaps: mu_star - j_star, evaluated without cancellation.
        penalty: "l2" or "l1".
    """

    j_star: np.ndarray
    mu_star: float
    basis: np.ndarray
    c_emp: np.ndarray
    gamma: float
    alpha: float
    gaps: np.ndarray = field(default=None, repr=False)
    penalty: str = "l2"

    def __post_init__(self):
        if self.gaps is None:
            self.gaps = self.mu_star - self.j_star

    @property
    def n(self) -> int:
        return self.j_star.size

    @cached_property
    def J_star(self) -> InteractionMatrix:
        return InteractionMatrix.from_spectrum(self.j_star, self.basis)

    @cached_property
    def log_z(self) -> float:
        return log_partition_from_gaps(self.mu_star, self.gaps)

    def frobenius_sq(self) -> float:
        return float(np.sum(self.j_star ** 2))

    def covariance(self) -> np.ndarray:
        """Covariance (mu* I - J*)^-1 of the inferred model."""
        return (self.basis / self.gaps) @ self.basis.T

    def quadratic_residuals(self) -> np.ndarray:
        g, a, mu, c, j = self.gamma, self.alpha, self.mu_star, self.c_emp, self.j_star
        return g * j ** 2 - (g * mu + a * c) * j + a * (mu * c - 1.0)

    def normalization_residual(self) -> float:
        return 1.0 - float(np.mean(1.0 / self.gaps))

    def energy(self, C: np.ndarray) -> float:
        """MAP energy of J* against covariance C."""
        coupling = float(np.sum(self.j_star * self._rotated(C)))
        return -0.5 * self.alpha * coupling + self.alpha * self.log_z + 0.25 * self.gamma * self.frobenius_sq()

    def _rotated(self, C: np.ndarray) -> np.ndarray:
        return np.sum(self.basis * (C @ self.basis), axis=0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'penalty': self.penalty,
            'gamma': self.gamma,
            'alpha': self.alpha,
            'mu_star': self.mu_star,
            'j_star': self.j_star.tolist(),
            'c_emp': self.c_emp.tolist(),
        }


def _discriminant(c, mu, alpha, gamma):
    s = alpha * c - gamma * mu
    return s, np.sqrt(s * s + 4.0 * alpha * gamma)


def inferred_eigenvalue(c_emp, mu: float, alpha: float, gamma: float):
    """Smaller root of gamma j^2 - (gamma mu + alpha c) j + alpha (mu c - 1) = 0.

    Evaluated as 2 alpha (mu c - 1) / (alpha c + gamma mu + D), which equals the
    minus branch of the quadratic formula without its cancellation. At
    gamma = 0 this is the unregularized limit mu - 1/c.

    Raises:
        DomainError: If alpha <= 0, gamma < 0, or gamma == 0 with c == 0.
    """
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if gamma < 0:
        raise DomainError(f"gamma must be non-negative, got {gamma}")
    c = np.asarray(c_emp, dtype=float)
    if gamma == 0:
        if np.any(c == 0):
            raise DomainError("Unregularized eigenvalue undefined for a zero covariance eigenvalue")
        j = mu - 1.0 / c
    else:
        _, D = _discriminant(c, mu, alpha, gamma)
        j = 2.0 * alpha * (mu * c - 1.0) / (alpha * c + gamma * mu + D)
    return float(j) if j.ndim == 0 else j


def inferred_gap(c_emp, mu: float, alpha: float, gamma: float):
    """mu - j*, the positive root of gamma u^2 + (alpha c - gamma mu) u - alpha = 0."""
    c = np.asarray(c_emp, dtype=float)
    if gamma == 0:
        if np.any(c == 0):
            raise DomainError("Unregularized gap undefined for a zero covariance eigenvalue")
        u = 1.0 / c
    else:
        s, D = _discriminant(c, mu, alpha, gamma)
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(s >= 0, 2.0 * alpha / (s + D), (D - s) / (2.0 * gamma))
    return float(u) if np.ndim(u) == 0 else u


def norm_residual(mu: float, c_emp, alpha: float, gamma: float) -> float:
    """1 - (1/n) sum_k 1/(mu - j*(c_k, mu)); strictly increasing in mu."""
    gaps = inferred_gap(np.asarray(c_emp, dtype=float), mu, alpha, gamma)
    return 1.0 - float(np.mean(1.0 / gaps))


def solve_map_spectrum(spectrum: EmpiricalSpectrum, alpha: float, gamma: float,
                       tol: float = 1e-12) -> MapSolution:
    """MAP solution from a precomputed empirical spectrum.

    Args:
        spectrum: Eigen-decomposition of the empirical covariance.
        alpha: Sampling ratio, positive.
        gamma: L2 strength; 0 selects the unregularized limit.
        tol: Tolerance on the normalization residual.

    Returns:
        The MapSolution at (alpha, gamma).
    """
    if alpha <= 0 or not np.isfinite(alpha):
        raise InvalidInputError(f"alpha must be positive, got {alpha}")
    if gamma < 0 or not np.isfinite(gamma):
        raise DomainError(f"gamma must be non-negative, got {gamma}")
    c = spectrum.values

    if gamma == 0:
        if c[-1] <= 0:
            raise InvalidInputError("gamma = 0 requires an invertible empirical covariance")
        gaps = 1.0 / c
        # limit of the normalization root as gamma -> 0+
        mu = float(np.mean(gaps))
        if abs(float(np.mean(c)) - 1.0) > 1e-8:
            logger.warning("Unregularized MAP with Tr(C_emp) != n: normalization cannot hold exactly")
        j = mu - gaps
    else:
        def residual(m: float) -> float:
            return norm_residual(m, c, alpha, gamma)

        lo, hi = expand_bracket(residual, start=1.0)
        mu = lo if lo == hi else brent_root(residual, lo, hi, tol=MU_XTOL)
        j = inferred_eigenvalue(c, mu, alpha, gamma)
        gaps = inferred_gap(c, mu, alpha, gamma)
        if abs(1.0 - float(np.mean(1.0 / gaps))) > max(tol, 1e-10):
            logger.debug(f"Normalization residual above tol at gamma={gamma:g}")

    logger.debug(f"MAP solved: gamma={gamma:.6g}, alpha={alpha:.6g}, mu*={mu:.12g}")
    return MapSolution(
        j_star=np.asarray(j, dtype=float),
        mu_star=float(mu),
        basis=spectrum.basis,
        c_emp=c,
        gamma=float(gamma),
        alpha=float(alpha),
        gaps=np.asarray(gaps, dtype=float),
    )


def solve_map(C_emp: np.ndarray, alpha: float, gamma: float, tol: float = 1e-12) -> MapSolution:
    """Solve the L2 MAP equation for an empirical covariance."""
    return solve_map_spectrum(EmpiricalSpectrum.from_covariance(C_emp), alpha, gamma, tol=tol)


def map_energy(J: Union[InteractionMatrix, np.ndarray], C: np.ndarray, alpha: float, gamma: float,
               tol: float = 1e-12) -> float:
    """Energy -(alpha/2) Tr(J C) + alpha log Z(J) + (gamma/4) Tr(J^2).

    log Z uses the Lagrange multiplier re-solved for J itself.
    """
    entries = J.entries if isinstance(J, InteractionMatrix) else np.asarray(J, dtype=float)
    spectrum = J.eigenvalues() if isinstance(J, InteractionMatrix) else np.linalg.eigvalsh(entries)
    mu = solve_lagrange_multiplier(spectrum, tol=tol)
    log_z = log_partition_from_gaps(mu, mu - spectrum)
    return (-0.5 * alpha * float(np.sum(entries * C)) + alpha * log_z
            + 0.25 * gamma * float(np.sum(entries ** 2)))
