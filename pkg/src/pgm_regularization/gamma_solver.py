"""
Characteristic regularization strengths of the L2 MAP estimator.

gamma_opt maximizes the test likelihood, gamma_cross equates the test and
generated likelihoods, gamma_half puts the generated likelihood midway
between train and test. All three are located by scanning a log grid for a
sign change of a residual and refining with Brent's method. The module also
holds the closed-form predictions for the high- and low-sampling regimes.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .exceptions import DegenerateSolutionError, DomainError, InvalidInputError, PGMRegularizationError
from .likelihoods import LikelihoodTriple, gen_likelihood, likelihood_from_rotated, train_likelihood
from .map_l2 import EmpiricalSpectrum, MapSolution, solve_map_spectrum
from .roots import brent_root
from .spherical import InteractionMatrix, SphericalModel, true_train_likelihood
from .utils import as_finite_array, log_grid, sign_changes

logger = logging.getLogger(__name__)

DEFAULT_GAMMA_MIN = 1e-3
DEFAULT_GAMMA_MAX = 1e3
DEFAULT_GRID_POINTS = 61
ROOT_XTOL = 1e-13
HALF_MISMATCH_WARNING = 0.1


def default_grid() -> np.ndarray:
    return log_grid(DEFAULT_GAMMA_MIN, DEFAULT_GAMMA_MAX, DEFAULT_GRID_POINTS)


@dataclass(eq=False)
class ScanContext:
    """Everything a gamma evaluation needs, in the empirical eigenbasis.

    Attributes:
        spectrum: Eigen-decomposition of C_emp.
        c_tr_rot: Diagonal of the true covariance rotated into that basis.
        alpha: Sampling ratio.
        j_tr_rot: Diagonal of the rotated true couplings, for the gamma_half
            diagnostic.
        tol: Normalization tolerance of each MAP solve.
    """

    spectrum: EmpiricalSpectrum
    c_tr_rot: np.ndarray
    alpha: float
    j_tr_rot: Optional[np.ndarray] = None
    tol: float = 1e-12

    @classmethod
    def from_covariances(cls, C_emp: np.ndarray, C_tr: np.ndarray, alpha: float,
                         J_tr: Optional[Union[InteractionMatrix, np.ndarray]] = None,
                         tol: float = 1e-12) -> "ScanContext":
        spectrum = EmpiricalSpectrum.from_covariance(C_emp)
        C_tr = as_finite_array(C_tr, "true covariance", ndim=2)
        if C_tr.shape != (spectrum.n, spectrum.n):
            raise InvalidInputError(f"C_tr shape {C_tr.shape} does not match C_emp")
        if np.array_equal(C_emp, C_tr):
            c_tr_rot = spectrum.values.copy()
        else:
            c_tr_rot = spectrum.rotate_diagonal(C_tr)
        j_tr_rot = None
        if J_tr is not None:
            entries = J_tr.entries if isinstance(J_tr, InteractionMatrix) else np.asarray(J_tr, dtype=float)
            j_tr_rot = spectrum.rotate_diagonal(entries)
        return cls(spectrum=spectrum, c_tr_rot=c_tr_rot, alpha=float(alpha), j_tr_rot=j_tr_rot, tol=tol)

    @property
    def n(self) -> int:
        return self.spectrum.n

    def solve(self, gamma: float) -> MapSolution:
        return solve_map_spectrum(self.spectrum, self.alpha, gamma, tol=self.tol)

    def triple(self, gamma: float, sol: Optional[MapSolution] = None) -> LikelihoodTriple:
        sol = sol or self.solve(gamma)
        return LikelihoodTriple(
            l_train=train_likelihood(sol),
            l_test=likelihood_from_rotated(sol, self.c_tr_rot),
            l_gen=gen_likelihood(sol),
            gamma=sol.gamma,
            alpha=sol.alpha,
        )


@dataclass(eq=False)
class DerivativeWorkspace:
    """Per-eigenvalue pieces of the gamma derivative of the MAP spectrum.

    Attributes:
        D: Square root of the discriminant.
        A: d j*_k / d mu at fixed gamma, in [0, 1].
        B: d j*_k / d gamma at fixed mu, plus j*_k / gamma.
        d_mu_d_gamma: Total derivative of mu* along the normalization.
        d_j_d_gamma: Total derivative of each j*_k.
    """

    D: np.ndarray
    A: np.ndarray
    B: np.ndarray
    d_mu_d_gamma: float
    d_j_d_gamma: np.ndarray
    one_minus_A: np.ndarray = field(default=None, repr=False)
    dj_fixed_mu: np.ndarray = field(default=None, repr=False)

    @classmethod
    def from_solution(cls, sol: MapSolution) -> "DerivativeWorkspace":
        gamma, alpha = sol.gamma, sol.alpha
        if gamma <= 0:
            raise DomainError(f"gamma must be positive, got {gamma}")
        c, j, u, mu = sol.c_emp, sol.j_star, sol.gaps, sol.mu_star
        s = alpha * c - gamma * mu
        D = np.sqrt(s * s + 4.0 * alpha * gamma)
        with np.errstate(divide="ignore", invalid="ignore"):
            A = np.where(s >= 0, 0.5 * (D + s) / D, 2.0 * alpha * gamma / (D * (D - s)))
            one_minus_A = np.where(s > 0, 2.0 * alpha * gamma / (D * (D + s)), 0.5 * (D - s) / D)
        dj_fixed_mu = -j * u / D
        d_mu = float(np.sum(dj_fixed_mu / u ** 2) / np.sum(one_minus_A / u ** 2))
        d_j = A * d_mu + dj_fixed_mu
        return cls(D=D, A=A, B=j / gamma + dj_fixed_mu, d_mu_d_gamma=d_mu, d_j_d_gamma=d_j,
                   one_minus_A=one_minus_A, dj_fixed_mu=dj_fixed_mu)

    def d_log_z_d_gamma(self, sol: MapSolution) -> float:
        """Derivative of n mu/2 - (1/2) sum log(mu - j) along the MAP path."""
        d_gap = self.d_mu_d_gamma * self.one_minus_A - self.dj_fixed_mu
        return 0.5 * sol.n * self.d_mu_d_gamma - 0.5 * float(np.sum(d_gap / sol.gaps))


def cross_residual(gamma: float, ctx: ScanContext, sol: Optional[MapSolution] = None) -> float:
    """alpha sum J*(C_emp - C_tr) / sum (J*)^2 - gamma; zero where L_test = L_gen.

    Positive when the generated likelihood exceeds the test likelihood.

    Raises:
        DegenerateSolutionError: If J* vanishes identically.
    """
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    sol = sol or ctx.solve(gamma)
    norm = sol.frobenius_sq()
    if norm == 0.0:
        raise DegenerateSolutionError(f"J* vanished at gamma={gamma}")
    overlap = float(np.sum(sol.j_star * (sol.c_emp - ctx.c_tr_rot)))
    return ctx.alpha * overlap / norm - gamma


def opt_residual(gamma: float, ctx: ScanContext, sol: Optional[MapSolution] = None) -> float:
    """Derivative of the test likelihood with respect to gamma.

    Raises:
        DomainError: If gamma <= 0.
    """
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    sol = sol or ctx.solve(gamma)
    work = DerivativeWorkspace.from_solution(sol)
    return 0.5 * float(np.sum(work.d_j_d_gamma * ctx.c_tr_rot)) - work.d_log_z_d_gamma(sol)


def half_residual(gamma: float, ctx: ScanContext, sol: Optional[MapSolution] = None) -> float:
    """l_gen - (l_train + l_test) / 2."""
    triple = ctx.triple(gamma, sol)
    return triple.l_gen - 0.5 * (triple.l_train + triple.l_test)


def half_diagnostic(sol: MapSolution, ctx: ScanContext) -> Optional[float]:
    """Relative mismatch |sum J* C_tr - sum J_tr C*| / |sum J* C_tr|.

    Returns None when the true couplings are unknown.
    """
    if ctx.j_tr_rot is None:
        return None
    inferred_on_true = float(np.sum(sol.j_star * ctx.c_tr_rot))
    true_on_inferred = float(np.sum(ctx.j_tr_rot / sol.gaps))
    if inferred_on_true == 0.0:
        return None
    return abs(inferred_on_true - true_on_inferred) / abs(inferred_on_true)


@dataclass
class GammaScan:
    """Likelihood triples on a gamma grid and the located roots.

    Attributes:
        grid: (gamma, LikelihoodTriple) pairs, gamma strictly increasing.
        gamma_opt: Maximizer of the test likelihood, if bracketed.
        gamma_cross: Test/generated crossing, if any.
        gamma_half: Midpoint crossing, if any.
        theta: Single-sample overlap, when meaningful.
        mu_star: Lagrange multiplier per grid point.
        frobenius_sq: sum (J*)^2 per grid point.
        diagnostics: Extra scalars (gamma_half mismatch, multiplicities).
    """

    grid: List[Tuple[float, LikelihoodTriple]]
    gamma_opt: Optional[float] = None
    gamma_cross: Optional[float] = None
    gamma_half: Optional[float] = None
    theta: Optional[float] = None
    mu_star: List[float] = field(default_factory=list)
    frobenius_sq: List[float] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def gammas(self) -> np.ndarray:
        return np.array([g for g, _ in self.grid])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(t, name) for _, t in self.grid])

    def to_frame(self, n: Optional[int] = None, gamma_column: str = "gamma") -> pd.DataFrame:
        """Rows of gamma, likelihoods, mu_star, frobenius_sq (and L/n when n is given)."""
        frame = pd.DataFrame({
            gamma_column: self.gammas,
            'l_train': self.column('l_train'),
            'l_test': self.column('l_test'),
            'l_gen': self.column('l_gen'),
            'mu_star': np.asarray(self.mu_star, dtype=float),
            'frobenius_sq': np.asarray(self.frobenius_sq, dtype=float),
        })
        if n:
            for name in ('l_train', 'l_test', 'l_gen'):
                frame[f"{name}_per_site"] = frame[name] / n
        return frame

    def roots(self) -> Dict[str, Optional[float]]:
        return {
            'gamma_opt': self.gamma_opt,
            'gamma_cross': self.gamma_cross,
            'gamma_half': self.gamma_half,
        }


def _check_grid(grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise InvalidInputError("Gamma grid must be positive and strictly increasing with >= 2 points")
    return grid


def evaluate_grid(ctx: ScanContext, grid: Optional[Sequence[float]] = None) -> Dict[str, np.ndarray]:
    """Solve the MAP problem at every grid point and collect all residuals."""
    grid = _check_grid(default_grid() if grid is None else grid)
    rows = {key: np.full(grid.size, np.nan) for key in
            ('l_train', 'l_test', 'l_gen', 'mu_star', 'frobenius_sq', 'cross', 'opt', 'half')}
    for k, gamma in enumerate(grid):
        sol = ctx.solve(gamma)
        triple = ctx.triple(gamma, sol)
        rows['l_train'][k] = triple.l_train
        rows['l_test'][k] = triple.l_test
        rows['l_gen'][k] = triple.l_gen
        rows['mu_star'][k] = sol.mu_star
        rows['frobenius_sq'][k] = sol.frobenius_sq()
        rows['half'][k] = triple.l_gen - 0.5 * (triple.l_train + triple.l_test)
        rows['opt'][k] = opt_residual(gamma, ctx, sol)
        try:
            rows['cross'][k] = cross_residual(gamma, ctx, sol)
        except DegenerateSolutionError:
            logger.debug(f"Cross residual undefined at gamma={gamma:g}")
    rows['gamma'] = grid
    return rows


def _refine(residual, grid: np.ndarray, k: int, name: str) -> float:
    root = brent_root(residual, grid[k], grid[k + 1], tol=ROOT_XTOL)
    logger.info(f"{name} located at {root:.10g} in [{grid[k]:.4g}, {grid[k + 1]:.4g}]")
    return root


def find_gamma_cross(ctx: ScanContext, grid: Optional[Sequence[float]] = None,
                     evaluation: Optional[Dict[str, np.ndarray]] = None) -> Optional[float]:
    """Smallest gamma where the generated likelihood falls to the test likelihood.

    Returns:
        The refined root, or None when the two likelihoods never cross on the grid.
    """
    evaluation = evaluation or evaluate_grid(ctx, grid)
    brackets = sign_changes(evaluation['cross'], direction="down")
    if not brackets:
        logger.info("gamma_cross: no finite crossing on the grid")
        return None
    if len(brackets) > 1:
        logger.warning(f"gamma_cross: {len(brackets)} sign changes on the grid, using the smallest")
    return _refine(lambda g: cross_residual(g, ctx), evaluation['gamma'], brackets[0], "gamma_cross")


def find_gamma_opt(ctx: ScanContext, grid: Optional[Sequence[float]] = None,
                   evaluation: Optional[Dict[str, np.ndarray]] = None) -> Optional[float]:
    """Maximizer of the test likelihood, refined from the bracket nearest the grid argmax."""
    evaluation = evaluation or evaluate_grid(ctx, grid)
    brackets = sign_changes(evaluation['opt'], direction="down")
    if not brackets:
        logger.info("gamma_opt: test likelihood has no interior maximum on the grid")
        return None
    best = int(np.nanargmax(evaluation['l_test']))
    if len(brackets) > 1:
        logger.warning(f"gamma_opt: {len(brackets)} local maxima on the grid, using the one nearest the argmax")
    k = min(brackets, key=lambda b: (min(abs(b - best), abs(b + 1 - best)), b))
    return _refine(lambda g: opt_residual(g, ctx), evaluation['gamma'], k, "gamma_opt")


def find_gamma_half(ctx: ScanContext, grid: Optional[Sequence[float]] = None,
                    evaluation: Optional[Dict[str, np.ndarray]] = None) -> Optional[float]:
    """Smallest gamma where l_gen = (l_train + l_test) / 2, or None."""
    evaluation = evaluation or evaluate_grid(ctx, grid)
    brackets = sign_changes(evaluation['half'], direction="any")
    if not brackets:
        logger.info("gamma_half: no bracket on the grid")
        return None
    if len(brackets) > 1:
        logger.warning(f"gamma_half: {len(brackets)} sign changes on the grid, using the smallest")
    root = _refine(lambda g: half_residual(g, ctx), evaluation['gamma'], brackets[0], "gamma_half")
    mismatch = half_diagnostic(ctx.solve(root), ctx)
    if mismatch is not None:
        log = logger.warning if mismatch > HALF_MISMATCH_WARNING else logger.info
        log(f"gamma_half: sum J*C_tr vs sum J_tr C* relative mismatch {mismatch:.3g}")
    return root


def scan_gammas(ctx: ScanContext, grid: Optional[Sequence[float]] = None) -> GammaScan:
    """Full scan: likelihood triples on the grid plus all three roots."""
    evaluation = evaluate_grid(ctx, grid)
    gammas = evaluation['gamma']
    triples = [
        (float(g), LikelihoodTriple(
            l_train=float(evaluation['l_train'][k]),
            l_test=float(evaluation['l_test'][k]),
            l_gen=float(evaluation['l_gen'][k]),
            gamma=float(g),
            alpha=ctx.alpha,
        ))
        for k, g in enumerate(gammas)
    ]
    scan = GammaScan(
        grid=triples,
        mu_star=evaluation['mu_star'].tolist(),
        frobenius_sq=evaluation['frobenius_sq'].tolist(),
    )
    for name, finder in (('gamma_opt', find_gamma_opt), ('gamma_cross', find_gamma_cross),
                         ('gamma_half', find_gamma_half)):
        try:
            setattr(scan, name, finder(ctx, evaluation=evaluation))
        except PGMRegularizationError as e:
            logger.warning(f"{name} refinement failed: {e}")
            scan.diagnostics[f"{name}_error"] = str(e)
    if scan.gamma_half is not None:
        scan.diagnostics['gamma_half_mismatch'] = half_diagnostic(ctx.solve(scan.gamma_half), ctx)
    return scan


# --- closed-form predictions ---------------------------------------------------------


@dataclass(frozen=True)
class GammaPrediction:
    """Predicted regularization, infinite when no finite crossing exists."""

    value: float
    finite: bool
    regime: str = ""

    def __float__(self) -> float:
        return self.value

    @classmethod
    def no_crossing(cls, regime: str = "") -> "GammaPrediction":
        return cls(value=math.inf, finite=False, regime=regime)


def predict_gamma_cross_infinite(J_tr: Union[InteractionMatrix, np.ndarray]) -> GammaPrediction:
    """High-sampling crossing n / sum (J_tr)^2."""
    entries = J_tr.entries if isinstance(J_tr, InteractionMatrix) else np.asarray(J_tr, dtype=float)
    total = float(np.sum(entries ** 2))
    if total <= 0.0:
        return GammaPrediction.no_crossing("high_sampling")
    return GammaPrediction(value=entries.shape[0] / total, finite=True, regime="high_sampling")


def overlap_theta(u, C_tr: np.ndarray) -> float:
    """(1/n) u^T C_tr u for a unit vector u.

    Raises:
        InvalidInputError: If u is not a unit vector within 1e-10.
    """
    u = as_finite_array(u, "u", ndim=1)
    if abs(np.linalg.norm(u) - 1.0) > 1e-10:
        raise InvalidInputError(f"overlap_theta needs a unit vector, |u| = {np.linalg.norm(u)}")
    C_tr = np.asarray(C_tr, dtype=float)
    return float(u @ C_tr @ u) / u.size


def sample_overlaps(samples: np.ndarray, C_tr: np.ndarray, rescaled: bool = True) -> np.ndarray:
    """Overlap of each sample row with the true covariance.

    Rescaled samples are normalized to unit length, matching a
    trace-rescaled single-sample covariance; otherwise rows are divided
    by sqrt(n).
    """
    samples = as_finite_array(samples, "samples", ndim=2)
    n = samples.shape[1]
    if rescaled:
        norms = np.linalg.norm(samples, axis=1, keepdims=True)
        directions = samples / norms
    else:
        directions = samples / np.sqrt(n)
    return np.einsum('ki,ij,kj->k', directions, np.asarray(C_tr, dtype=float), directions) / n


def predict_mean_theta(sigma: float, n: int) -> float:
    """Mean overlap of unrescaled samples under GOE couplings."""
    if sigma <= 0 or sigma == 1.0:
        raise DomainError(f"Mean overlap prediction undefined at sigma={sigma}")
    if sigma < 1.0:
        return 1.0 / (n * (1.0 - sigma ** 2))
    return (1.0 - 1.0 / sigma) ** 2


def small_alpha_predictions(theta: float, n: int, sigma_regime: str) -> GammaPrediction:
    """Single-sample crossing prediction.

    Args:
        theta: Sample overlap in (0, 1].
        n: Dimension.
        sigma_regime: "disordered" (sigma < 1) or "ferro" (sigma > 1).

    Returns:
        n theta / (n theta - 1) or no crossing in the disordered regime,
        (1 - theta)^2 in the ferromagnetic regime.
    """
    if not 0.0 < theta <= 1.0:
        raise DomainError(f"theta must lie in (0, 1], got {theta}")
    if sigma_regime == "disordered":
        if n * theta <= 1.0:
            return GammaPrediction.no_crossing(sigma_regime)
        return GammaPrediction(value=n * theta / (n * theta - 1.0), finite=True, regime=sigma_regime)
    if sigma_regime == "ferro":
        return GammaPrediction(value=(1.0 - theta) ** 2, finite=True, regime=sigma_regime)
    raise InvalidInputError(f"Unknown regime {sigma_regime!r}")


def likelihood_gap(l_test_at_opt: float, true_model: SphericalModel) -> float:
    """L_test at gamma_opt minus the infinite-sampling unregularized train likelihood."""
    return l_test_at_opt - true_train_likelihood(true_model)
