"""Bracketed scalar root finding shared by the spherical and MAP solvers."""

import logging
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.optimize import brentq

from .exceptions import BracketError, ConvergenceError, InvalidInputError, NoRootError

logger = logging.getLogger(__name__)

_RTOL = 4 * np.finfo(float).eps


@dataclass
class RootResult:
    """Result of a bracketed root search.

    Attributes:
        root: The located root.
        converged: Whether the solver met its tolerance.
        iterations: Iterations used.
        function_calls: Number of function evaluations.
    """

    root: float
    converged: bool
    iterations: int
    function_calls: int


def brent_search(f: Callable[[float], float], lo: float, hi: float,
                 tol: float = 1e-12, max_iter: int = 200) -> RootResult:
    """Van Wijngaarden-Dekker-Brent search on [lo, hi] with full diagnostics.

    Args:
        f: Continuous scalar function.
        lo: Lower bracket end.
        hi: Upper bracket end.
        tol: Absolute x tolerance.
        max_iter: Iteration cap.

    Returns:
        RootResult for the located root.

    Raises:
        BracketError: If f(lo) and f(hi) have the same sign.
        ConvergenceError: If the iteration cap is reached.
    """
    if not (np.isfinite(lo) and np.isfinite(hi)) or tol <= 0 or max_iter < 1:
        raise InvalidInputError(f"Invalid Brent arguments lo={lo}, hi={hi}, tol={tol}, max_iter={max_iter}")
    if lo > hi:
        lo, hi = hi, lo

    f_lo = float(f(lo))
    if f_lo == 0.0:
        return RootResult(root=lo, converged=True, iterations=0, function_calls=1)
    f_hi = float(f(hi))
    if f_hi == 0.0:
        return RootResult(root=hi, converged=True, iterations=0, function_calls=2)
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(f"No sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")

    root, info = brentq(f, lo, hi, xtol=tol, rtol=_RTOL, maxiter=max_iter,
                        full_output=True, disp=False)
    if not info.converged:
        raise ConvergenceError(
            f"Brent search did not converge in {max_iter} iterations ({info.flag})",
            last_value=float(root),
        )
    return RootResult(root=float(root), converged=True,
                      iterations=info.iterations, function_calls=info.function_calls + 2)


def brent_root(f: Callable[[float], float], lo: float, hi: float,
               tol: float = 1e-12, max_iter: int = 200) -> float:
    """Root of f on [lo, hi]; see brent_search."""
    return brent_search(f, lo, hi, tol=tol, max_iter=max_iter).root


def expand_bracket(f: Callable[[float], float], start: float, step: float = 1.0,
                   max_doublings: int = 200) -> Tuple[float, float]:
    """Bracket the root of an increasing function by geometric expansion.

    Walks upward from start when f(start) < 0 and downward otherwise,
    doubling the step until the sign flips.
    """
    f_start = f(start)
    if f_start == 0.0:
        return start, start
    upward = f_start < 0
    anchor = start
    width = step
    for _ in range(max_doublings):
        trial = start + width if upward else start - width
        f_trial = f(trial)
        if (f_trial >= 0) if upward else (f_trial <= 0):
            return (anchor, trial) if upward else (trial, anchor)
        anchor = trial
        width *= 2.0
    raise NoRootError(f"Bracket expansion from {start} failed after {max_doublings} doublings")
