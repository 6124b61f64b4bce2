"""
L1-regularized inference through the graphical lasso.

The precision matrix is estimated with an off-the-shelf graphical lasso and
then mapped into the spherical convention, so that the likelihood and scan
machinery of the L2 pipeline applies unchanged.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import minimize_scalar
from sklearn.covariance import graphical_lasso as sklearn_graphical_lasso
from sklearn.exceptions import ConvergenceWarning

from .exceptions import ConvergenceError, InvalidInputError, PGMRegularizationError
from .gamma_solver import GammaScan, _check_grid
from .likelihoods import LikelihoodTriple, likelihood_triple
from .map_l2 import MapSolution
from .roots import brent_root
from .spherical import solve_lagrange_multiplier, symmetric_eigh
from .utils import as_finite_array, require_square, sign_changes

logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-8


@dataclass(eq=False)
class LassoSolution:
    """Sparse precision estimate.

    Attributes:
        precision: Positive-definite precision matrix Theta.
        covariance: Its inverse W, as returned by the solver.
        gamma1: L1 strength applied to the off-diagonal entries.
        dual_gap: Final duality gap.
        iterations: Outer sweeps performed.
        costs: Objective value after every sweep.
    """

    precision: np.ndarray
    covariance: np.ndarray
    gamma1: float
    dual_gap: float
    iterations: int
    costs: List[float] = field(default_factory=list)

    def kkt_violation(self, S: np.ndarray) -> float:
        """Largest violation of the stationarity conditions, scaled by 1 + |S_ij|."""
        W = linalg.inv(self.precision)
        n = S.shape[0]
        off = ~np.eye(n, dtype=bool)
        grad = S - W
        active = off & (self.precision != 0)
        inactive = off & (self.precision == 0)
        worst = 0.0
        if active.any():
            viol = np.abs(grad + self.gamma1 * np.sign(self.precision))[active] / (1.0 + np.abs(S[active]))
            worst = max(worst, float(viol.max()))
        if inactive.any():
            viol = np.clip(np.abs(grad[inactive]) - self.gamma1, 0.0, None)
            worst = max(worst, float(viol.max()))
        return worst

    def nonzero_couplings(self) -> int:
        """Number of nonzero entries above the diagonal."""
        return int(np.count_nonzero(np.triu(self.precision, k=1)))


def _validate_covariance(S: np.ndarray) -> np.ndarray:
    S = as_finite_array(S, "covariance", ndim=2)
    require_square(S, "covariance")
    if np.max(np.abs(S - S.T)) > 1e-10 * max(1.0, float(np.max(np.abs(S)))):
        raise InvalidInputError("Covariance is not symmetric")
    S = 0.5 * (S + S.T)
    if np.any(np.diag(S) <= 0):
        raise InvalidInputError("Covariance must have a strictly positive diagonal")
    smallest = float(linalg.eigvalsh(S)[0])
    if smallest < -PSD_TOLERANCE * max(1.0, float(np.max(np.diag(S)))):
        raise InvalidInputError(f"Covariance is not positive semi-definite (min eigenvalue {smallest:.3e})")
    return S


def graphical_lasso(S: np.ndarray, gamma1: float, tol: float = 1e-10, max_iter: int = 2000) -> LassoSolution:
    """Maximize log det Theta - Tr(S Theta) - gamma1 sum_{i != j} |Theta_ij|.

    Args:
        S: Symmetric PSD covariance with positive diagonal.
        gamma1: Off-diagonal L1 strength, non-negative.
        tol: Duality-gap tolerance.
        max_iter: Cap on outer coordinate-descent sweeps.

    Returns:
        LassoSolution.

    Raises:
        InvalidInputError: If S is not a valid covariance.
        ConvergenceError: If the solver stops above tol; carries the last dual gap.
    """
    S = _validate_covariance(S)
    if gamma1 < 0 or not np.isfinite(gamma1):
        raise InvalidInputError(f"gamma1 must be non-negative, got {gamma1}")
    n = S.shape[0]

    if gamma1 == 0:
        try:
            precision = linalg.inv(S)
        except linalg.LinAlgError as e:
            raise InvalidInputError(f"Unpenalized precision needs an invertible covariance: {e}")
        precision = 0.5 * (precision + precision.T)
        gap = float(np.sum(S * precision) - n)
        return LassoSolution(precision=precision, covariance=S.copy(), gamma1=0.0,
                             dual_gap=gap, iterations=0)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        try:
            covariance, precision, costs, n_iter = sklearn_graphical_lasso(
                S, alpha=gamma1, mode="cd", tol=tol, enet_tol=tol * 1e-2,
                max_iter=max_iter, return_costs=True, return_n_iter=True,
            )
        except FloatingPointError as e:
            raise ConvergenceError(f"Graphical lasso failed at gamma1={gamma1}: {e}")

    last_gap = float(costs[-1][1]) if costs else float("nan")
    if any(issubclass(w.category, ConvergenceWarning) for w in caught) and not abs(last_gap) < tol:
        raise ConvergenceError(
            f"Graphical lasso did not converge in {max_iter} sweeps at gamma1={gamma1} (dual gap {last_gap:.3e})",
            last_value=last_gap,
        )

    precision = 0.5 * (precision + precision.T)
    logger.debug(f"Graphical lasso: gamma1={gamma1:.4g}, sweeps={n_iter}, dual gap={last_gap:.3e}")
    return LassoSolution(
        precision=precision,
        covariance=covariance,
        gamma1=float(gamma1),
        dual_gap=last_gap,
        iterations=int(n_iter),
        costs=[float(c) for c, _ in costs],
    )


def map_l1(C_emp: np.ndarray, alpha: float, gamma1: float, tol: float = 1e-10,
           max_iter: int = 2000) -> MapSolution:
    """L1 MAP couplings in spherical form.

    The lasso runs with strength gamma1 / alpha. Couplings are
    J* = m I - Theta with m the mean diagonal of Theta (a uniform diagonal
    shift leaves every likelihood unchanged), and mu* then solves the
    spherical normalization for J*.
    """
    if alpha <= 0:
        raise InvalidInputError(f"alpha must be positive, got {alpha}")
    lasso = graphical_lasso(C_emp, gamma1 / alpha, tol=tol, max_iter=max_iter)
    precision = lasso.precision
    J = float(np.mean(np.diag(precision))) * np.eye(precision.shape[0]) - precision
    j_star, basis = symmetric_eigh(0.5 * (J + J.T))
    mu = solve_lagrange_multiplier(j_star)
    c_rot = np.sum(basis * (np.asarray(C_emp, dtype=float) @ basis), axis=0)
    return MapSolution(
        j_star=j_star,
        mu_star=mu,
        basis=basis,
        c_emp=c_rot,
        gamma=float(gamma1),
        alpha=float(alpha),
        gaps=mu - j_star,
        penalty="l1",
    )


def _l1_triple(C_emp: np.ndarray, C_tr: np.ndarray, alpha: float, gamma1: float) -> Tuple[MapSolution, LikelihoodTriple]:
    sol = map_l1(C_emp, alpha, gamma1)
    return sol, likelihood_triple(sol, C_tr=C_tr)


def half_diagnostic(sol: MapSolution, C_tr: np.ndarray, J_tr: np.ndarray) -> Optional[float]:
    """Relative mismatch |sum J* C_tr - sum J_tr C*| / |sum J* C_tr| for L1 solutions."""
    inferred_on_true = float(np.sum(sol.J_star.entries * C_tr))
    if inferred_on_true == 0.0:
        return None
    return abs(inferred_on_true - float(np.sum(J_tr * sol.covariance()))) / abs(inferred_on_true)


def find_l1_gamma_cross(C_emp, C_tr, alpha: float, grid: Sequence[float],
                        gaps: Optional[np.ndarray] = None) -> Optional[float]:
    """Smallest gamma1 where l_gen falls to l_test, or None."""
    grid = _check_grid(grid)
    if gaps is None:
        triples = [_l1_triple(C_emp, C_tr, alpha, g)[1] for g in grid]
        gaps = np.array([t.l_gen - t.l_test for t in triples])
    brackets = sign_changes(gaps, direction="down")
    if not brackets:
        logger.info("L1 gamma_cross: no finite crossing on the grid")
        return None
    if len(brackets) > 1:
        logger.warning(f"L1 gamma_cross: {len(brackets)} sign changes, using the smallest")
    k = brackets[0]

    def residual(g: float) -> float:
        triple = _l1_triple(C_emp, C_tr, alpha, g)[1]
        return triple.l_gen - triple.l_test

    return brent_root(residual, grid[k], grid[k + 1], tol=1e-9 * grid[k + 1])


def find_l1_gamma_opt(C_emp, C_tr, alpha: float, grid: Sequence[float],
                      l_test: Optional[np.ndarray] = None) -> Optional[float]:
    """Bounded maximization of l_test around its grid argmax; None on a boundary argmax."""
    grid = _check_grid(grid)
    if l_test is None:
        l_test = np.array([_l1_triple(C_emp, C_tr, alpha, g)[1].l_test for g in grid])
    best = int(np.nanargmax(l_test))
    if best == 0 or best == grid.size - 1:
        logger.info("L1 gamma_opt: test likelihood maximal on the grid boundary")
        return None
    result = minimize_scalar(
        lambda log_g: -_l1_triple(C_emp, C_tr, alpha, float(np.exp(log_g)))[1].l_test,
        bounds=(np.log(grid[best - 1]), np.log(grid[best + 1])),
        method="bounded",
        options={'xatol': 1e-8},
    )
    return float(np.exp(result.x))


def scan_l1(C_emp: np.ndarray, C_tr: np.ndarray, alpha: float, grid: Sequence[float],
            J_tr: Optional[np.ndarray] = None) -> GammaScan:
    """Likelihood triples over a gamma1 grid with the located roots."""
    grid = _check_grid(grid)
    rows = []
    mu_star, fro = [], []
    for g in grid:
        sol, triple = _l1_triple(C_emp, C_tr, alpha, float(g))
        rows.append((float(g), triple))
        mu_star.append(sol.mu_star)
        fro.append(sol.frobenius_sq())
    scan = GammaScan(grid=rows, mu_star=mu_star, frobenius_sq=fro)

    l_test = scan.column('l_test')
    l_gen = scan.column('l_gen')
    l_train = scan.column('l_train')
    try:
        scan.gamma_opt = find_l1_gamma_opt(C_emp, C_tr, alpha, grid, l_test=l_test)
        scan.gamma_cross = find_l1_gamma_cross(C_emp, C_tr, alpha, grid, gaps=l_gen - l_test)
        half = l_gen - 0.5 * (l_train + l_test)
        brackets = sign_changes(half, direction="any")
        if brackets:
            k = brackets[0]

            def half_residual(g: float) -> float:
                t = _l1_triple(C_emp, C_tr, alpha, g)[1]
                return t.l_gen - 0.5 * (t.l_train + t.l_test)

            scan.gamma_half = brent_root(half_residual, grid[k], grid[k + 1], tol=1e-9 * grid[k + 1])
            if J_tr is not None:
                scan.diagnostics['gamma_half_mismatch'] = half_diagnostic(
                    map_l1(C_emp, alpha, scan.gamma_half), C_tr, np.asarray(J_tr, dtype=float))
    except PGMRegularizationError as e:
        logger.warning(f"L1 root refinement failed: {e}")
        scan.diagnostics['root_error'] = str(e)
    return scan
