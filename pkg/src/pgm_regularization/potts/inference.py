"""
Pseudo-likelihood maximization (PLM) for Potts models.

Each site i is fitted independently: fields h_i and coupling blocks W_i[j]
maximize the mean conditional log-likelihood of x_i given the other sites,
minus an L2 penalty. The asymmetric estimates are symmetrized afterwards.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from ..exceptions import ConvergenceError, InvalidInputError
from .mcmc import PottsSampleSet
from .model import PottsParams

logger = logging.getLogger(__name__)

DEFAULT_PLM_TOL = 1e-6
DEFAULT_PLM_MAX_ITER = 1000
DEFAULT_FIELD_RATIO = 0.1


def _unpack(theta: np.ndarray, n: int, q: int) -> Tuple[np.ndarray, np.ndarray]:
    return theta[:q], theta[q:].reshape(n, q, q)


def site_objective(theta: np.ndarray, one_hot: np.ndarray, site: int,
                   gamma: float, gamma_h: float) -> Tuple[float, np.ndarray]:
    """Penalized negative pseudo-log-likelihood of one site and its gradient.

    The loss is the per-sample mean of -log P(x_site | rest) plus
    (n / p) * (gamma / 2 * |W|^2 + gamma_h / 2 * |h|^2), so the penalty per
    sample shrinks as data grows.

    Args:
        theta: Concatenation of h_site (q,) and W_site (n, q, q), flattened.
        one_hot: Indicator array (p, n, q) of the samples.
        site: Fitted site; its own block W_site[site] is held at zero.
        gamma: Coupling penalty.
        gamma_h: Field penalty.
    """
    p, n, q = one_hot.shape
    h, W = _unpack(theta, n, q)
    W = W.copy()
    W[site] = 0.0

    logits = h[None, :] + np.einsum('jab,kjb->ka', W, one_hot)
    lse = logsumexp(logits, axis=1)
    target = one_hot[:, site, :]
    nll = float(np.mean(lse - np.sum(logits * target, axis=1)))

    scale = n / p
    value = nll + scale * (0.5 * gamma * float(np.sum(W * W)) + 0.5 * gamma_h * float(np.sum(h * h)))

    residual = np.exp(logits - lse[:, None]) - target
    grad_h = residual.mean(axis=0) + scale * gamma_h * h
    grad_W = np.einsum('ka,kjb->jab', residual, one_hot) / p + scale * gamma * W
    grad_W[site] = 0.0
    return value, np.concatenate([grad_h, grad_W.ravel()])


def _fit_site(one_hot: np.ndarray, site: int, gamma: float, gamma_h: float,
              tol: float, max_iter: int) -> Tuple[np.ndarray, np.ndarray]:
    _, n, q = one_hot.shape
    result = minimize(
        site_objective,
        np.zeros(q + n * q * q),
        args=(one_hot, site, gamma, gamma_h),
        jac=True,
        method="L-BFGS-B",
        options={'maxiter': max_iter, 'gtol': tol, 'ftol': 1e-15},
    )
    grad_norm = float(np.max(np.abs(result.jac))) if result.jac is not None else float("nan")
    if not grad_norm <= tol:
        if result.nit >= max_iter:
            raise ConvergenceError(
                f"PLM at site {site} stopped after {result.nit} iterations "
                f"with gradient norm {grad_norm:.3e}",
                last_value=grad_norm,
            )
        logger.warning(f"PLM at site {site}: {result.message} (gradient norm {grad_norm:.3e})")
    h, W = _unpack(result.x, n, q)
    W = W.copy()
    W[site] = 0.0
    return h.copy(), W


def plm_infer(samples: PottsSampleSet, gamma: float, gamma_h: Optional[float] = None,
              tol: float = DEFAULT_PLM_TOL, max_iter: int = DEFAULT_PLM_MAX_ITER,
              max_workers: int = 1) -> PottsParams:
    """Infer Potts parameters by L2-regularized pseudo-likelihood maximization.

    Args:
        samples: Training configurations.
        gamma: Coupling penalty, >= 0.
        gamma_h: Field penalty; defaults to 0.1 * gamma / n.
        tol: Gradient tolerance of each site fit.
        max_iter: Iteration cap of each site fit.
        max_workers: Sites fitted concurrently.

    Returns:
        Symmetrized parameters with J_ij = (W_i[j] + W_j[i]^T) / 2.

    Raises:
        ConvergenceError: If a site exhausts max_iter above tol.
    """
    if samples.p < 1:
        raise InvalidInputError("PLM needs at least one sample")
    if gamma < 0 or not np.isfinite(gamma):
        raise InvalidInputError(f"gamma must be non-negative, got {gamma}")
    n, q = samples.n, samples.q
    if gamma_h is None:
        gamma_h = DEFAULT_FIELD_RATIO * gamma / n
    if gamma == 0:
        logger.warning("PLM without regularization may diverge on unobserved states")

    one_hot = samples.one_hot().astype(float)
    fields = np.zeros((n, q))
    blocks = np.zeros((n, n, q, q))

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            futures = {
                executor.submit(_fit_site, one_hot, i, gamma, gamma_h, tol, max_iter): i
                for i in range(n)
            }
            for future in as_completed(futures):
                i = futures[future]
                fields[i], blocks[i] = future.result()
    else:
        for i in range(n):
            fields[i], blocks[i] = _fit_site(one_hot, i, gamma, gamma_h, tol, max_iter)

    J = 0.5 * (blocks + blocks.transpose(1, 0, 3, 2))
    J[np.arange(n), np.arange(n)] = 0.0
    logger.info(f"PLM: n={n}, q={q}, p={samples.p}, gamma={gamma:.4g}, gamma_h={gamma_h:.4g}")
    return PottsParams(h=fields, J=J)
