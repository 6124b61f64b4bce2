"""
Spherical (Gaussian Vectors) model: interaction matrices, ensemble
generators, the spherical-constraint Lagrange multiplier and the
log-partition function.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg

from .exceptions import ConvergenceError, DomainError, InvalidInputError, NoRootError
from .roots import brent_root
from .utils import as_finite_array, require_square

logger = logging.getLogger(__name__)

SYMMETRY_RTOL = 1e-12
RECONSTRUCTION_RTOL = 1e-10
NEWTON_POLISH_STEPS = 4


def symmetric_eigh(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix, eigenvalues sorted descending.

    Returns:
        (values, vectors) with vectors[:, k] paired to values[k].
    """
    values, vectors = linalg.eigh(matrix)
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


@dataclass
class InteractionMatrix:
    """Symmetric n x n coupling matrix with an optional cached spectrum.

    Attributes:
        entries: The coupling matrix.
        spectrum: Eigenvalues sorted descending, when cached.
        basis: Orthonormal eigenvectors paired column-wise with spectrum.
    """

    entries: np.ndarray
    spectrum: Optional[np.ndarray] = field(default=None, repr=False)
    basis: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.entries = as_finite_array(self.entries, "interaction matrix", ndim=2)
        require_square(self.entries, "interaction matrix")
        scale = max(1.0, float(np.max(np.abs(self.entries))) if self.entries.size else 1.0)
        if np.max(np.abs(self.entries - self.entries.T), initial=0.0) > SYMMETRY_RTOL * scale:
            raise InvalidInputError("Interaction matrix is not symmetric")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_spectrum(cls, spectrum: np.ndarray, basis: np.ndarray) -> "InteractionMatrix":
        """Rebuild V diag(spectrum) V^T, keeping the decomposition cached."""
        spectrum = np.asarray(spectrum, dtype=float)
        entries = (basis * spectrum) @ basis.T
        entries = 0.5 * (entries + entries.T)
        return cls(entries=entries, spectrum=spectrum, basis=basis)

    def with_spectrum(self) -> "InteractionMatrix":
        """Return self with the eigen-decomposition cached."""
        if self.spectrum is None or self.basis is None:
            self.spectrum, self.basis = symmetric_eigh(self.entries)
        return self

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues sorted descending."""
        if self.spectrum is not None:
            return self.spectrum
        return np.sort(linalg.eigvalsh(self.entries))[::-1]

    def frobenius_sq(self) -> float:
        """Sum of squared entries."""
        return float(np.sum(self.entries ** 2))

    def reconstruction_error(self) -> float:
        """Relative Frobenius error of V diag(j) V^T against the entries."""
        self.with_spectrum()
        rebuilt = (self.basis * self.spectrum) @ self.basis.T
        norm = max(np.linalg.norm(self.entries), 1e-300)
        return float(np.linalg.norm(rebuilt - self.entries) / norm)


@dataclass
class SphericalModel:
    """Interaction matrix, Lagrange multiplier and the implied covariance.

    Attributes:
        interaction: The couplings J.
        mu: Lagrange multiplier with Tr((mu I - J)^-1) = n.
        covariance: (mu I - J)^-1.
    """

    interaction: InteractionMatrix
    mu: float
    covariance: np.ndarray

    @property
    def n(self) -> int:
        return self.interaction.n


def _as_matrix(J: Union[InteractionMatrix, np.ndarray]) -> InteractionMatrix:
    return J if isinstance(J, InteractionMatrix) else InteractionMatrix(np.asarray(J, dtype=float))


def normalization_residual(mu: float, eigenvalues: np.ndarray) -> float:
    """1 - (1/n) sum_k 1/(mu - j_k); increasing in mu above max j_k."""
    return 1.0 - float(np.mean(1.0 / (mu - eigenvalues)))


def solve_lagrange_multiplier(eigenvalues, tol: float = 1e-12, cap_factor: float = 1e6) -> float:
    """Solve the spherical normalization for the Lagrange multiplier.

    Args:
        eigenvalues: Spectrum of the interaction matrix.
        tol: Absolute tolerance on the normalization residual.
        cap_factor: Upward bracket expansion stops at cap_factor times the
            eigenvalue spread (at least 1).

    Returns:
        The unique mu above the largest eigenvalue with residual within tol.

    Raises:
        InvalidInputError: On non-finite eigenvalues or non-positive tol.
        NoRootError: If bracket expansion exceeds the cap.
        ConvergenceError: If polishing cannot bring the residual within tol.
    """
    j = as_finite_array(eigenvalues, "eigenvalues", ndim=1)
    if j.size == 0:
        raise InvalidInputError("Empty spectrum")
    if tol <= 0:
        raise InvalidInputError(f"tol must be positive, got {tol}")

    top = float(np.max(j))
    spread = max(top - float(np.min(j)), 1.0)
    cap = cap_factor * spread

    lo = top + 1e-9 * (1.0 + abs(top))
    width = 1.0
    while normalization_residual(top + width, j) < 0:
        width *= 2.0
        if width > cap:
            raise NoRootError(f"Lagrange multiplier bracket exceeded cap {cap:g}")
    hi = top + width

    mu = brent_root(lambda m: normalization_residual(m, j), lo, hi, tol=min(tol, 1e-15) * max(1.0, abs(top)))
    return _polish_multiplier(mu, j, top, tol)


def _polish_multiplier(mu: float, j: np.ndarray, top: float, tol: float) -> float:
    """Newton steps on the normalization residual until it is within tol.

    Raises:
        ConvergenceError: If the residual stays above tol while the root
            lies outside the neighbouring doubles of mu.
    """
    residual = normalization_residual(mu, j)
    for _ in range(NEWTON_POLISH_STEPS):
        if abs(residual) <= tol:
            return mu
        slope = float(np.mean(1.0 / (mu - j) ** 2))
        candidate = mu - residual / slope
        if not candidate > top:
            break
        candidate_residual = normalization_residual(candidate, j)
        if abs(candidate_residual) >= abs(residual):
            break
        mu, residual = candidate, candidate_residual
    if abs(residual) <= tol:
        return mu

    down = float(np.nextafter(mu, -np.inf))
    below = normalization_residual(down, j) if down > top else -np.inf
    above = normalization_residual(float(np.nextafter(mu, np.inf)), j)
    if not below <= 0.0 <= above:
        logger.warning(f"Lagrange multiplier residual {residual:.3e} above tol {tol:.1e} at mu={mu:.17g}")
        raise ConvergenceError(f"Normalization residual {residual:.3e} above tol {tol:.1e}", last_value=residual)
    logger.warning(f"Lagrange multiplier residual {residual:.3e} above tol {tol:.1e}: "
                   f"below double-precision resolution at mu={mu:.17g}")
    return mu


def covariance_from_interaction(J: Union[InteractionMatrix, np.ndarray], tol: float = 1e-12) -> SphericalModel:
    """Build the spherical model of J: mu from the spectrum, C inverted in the eigenbasis."""
    J = _as_matrix(J).with_spectrum()
    mu = solve_lagrange_multiplier(J.spectrum, tol=tol)
    gaps = mu - J.spectrum
    covariance = (J.basis / gaps) @ J.basis.T
    covariance = 0.5 * (covariance + covariance.T)
    return SphericalModel(interaction=J, mu=mu, covariance=covariance)


def log_partition_from_gaps(mu: float, gaps: np.ndarray) -> float:
    """n mu / 2 - (1/2) sum_k log(gap_k) with gap_k = mu - j_k."""
    gaps = np.asarray(gaps, dtype=float)
    if np.any(gaps <= 0):
        raise DomainError("mu must exceed every eigenvalue")
    return 0.5 * gaps.size * mu - 0.5 * float(np.sum(np.log(gaps)))


def log_partition(spectrum, mu: float) -> float:
    """Log-partition function of the spherical model.

    Raises:
        DomainError: If mu does not exceed the largest eigenvalue.
    """
    spectrum = as_finite_array(spectrum, "spectrum", ndim=1)
    if mu <= np.max(spectrum):
        raise DomainError(f"mu={mu} must exceed the largest eigenvalue {np.max(spectrum)}")
    return log_partition_from_gaps(mu, mu - spectrum)


def true_train_likelihood(model: SphericalModel) -> float:
    """Likelihood of the true couplings under their own covariance.

    This is the infinite-sampling, unregularized reference used for the
    likelihood gap.
    """
    J = model.interaction.with_spectrum()
    return 0.5 * float(np.sum(J.entries * model.covariance)) - log_partition(J.spectrum, model.mu)


# --- generators -----------------------------------------------------------------


def _check_sigma(sigma: float) -> None:
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidInputError(f"sigma must be positive, got {sigma}")


def generate_goe(n: int, sigma: float, seed: Union[int, np.random.Generator]) -> InteractionMatrix:
    """GOE couplings: off-diagonal N(0, sigma^2/n), zero diagonal."""
    if n < 2:
        raise InvalidInputError(f"n must be at least 2, got {n}")
    _check_sigma(sigma)
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.normal(0.0, sigma / np.sqrt(n), size=(n, n)), k=1)
    return InteractionMatrix(upper + upper.T)


def circular_distance(n: int) -> np.ndarray:
    idx = np.arange(n)
    delta = np.abs(idx[:, None] - idx[None, :])
    return np.minimum(delta, n - delta)


def band_mask(n: int, w: int) -> np.ndarray:
    """Off-diagonal entries with circular distance strictly below w/2."""
    distance = circular_distance(n)
    return (distance > 0) & (distance < w / 2.0)


def generate_band(n: int, w: int, sigma: float, seed: Union[int, np.random.Generator]) -> InteractionMatrix:
    """Circular band couplings N(0, sigma^2/w) inside the band, zero elsewhere."""
    if not (1 <= w < n):
        raise InvalidInputError(f"Band width must satisfy 1 <= w < n, got w={w}, n={n}")
    _check_sigma(sigma)
    rng = np.random.default_rng(seed)
    draws = np.triu(rng.normal(0.0, sigma / np.sqrt(w), size=(n, n)), k=1)
    upper = np.where(np.triu(band_mask(n, w), k=1), draws, 0.0)
    return InteractionMatrix(upper + upper.T)


def generate_ring_chain(n: int, sigma: float) -> InteractionMatrix:
    """Deterministic ring: sigma between circular nearest neighbours."""
    if n < 3:
        raise InvalidInputError(f"A ring needs n >= 3, got {n}")
    _check_sigma(sigma)
    return InteractionMatrix(np.where(circular_distance(n) == 1, float(sigma), 0.0))


def semicircle_density(x, sigma: float) -> np.ndarray:
    """Wigner semicircle density on [-2 sigma, 2 sigma]."""
    x = np.asarray(x, dtype=float)
    radius = 2.0 * sigma
    inside = np.clip(radius ** 2 - x ** 2, 0.0, None)
    return np.sqrt(inside) / (2.0 * np.pi * sigma ** 2)


def spectral_outlier_fraction(spectrum, radius: float) -> float:
    """Fraction of eigenvalues outside [-radius, radius]."""
    spectrum = np.asarray(spectrum, dtype=float)
    return float(np.mean(np.abs(spectrum) > radius))


def largest_covariance_eigenvalue_prediction(n: int, sigma: float) -> Optional[float]:
    """Extensive top covariance eigenvalue n(1 - 1/sigma) in the condensed phase."""
    if sigma <= 1.0:
        return None
    return n * (1.0 - 1.0 / sigma)
