"""
Train, test and generated log-likelihoods of inferred spherical models.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from .exceptions import InvalidInputError, InvariantViolationError
from .map_l2 import MapSolution

logger = logging.getLogger(__name__)

IDENTITY_RTOL = 1e-8


@dataclass
class LikelihoodTriple:
    """Train, test and generated log-likelihoods at one regularization.

    Attributes:
        l_train: Likelihood of the training data.
        l_test: Likelihood of fresh data from the true model.
        l_gen: Likelihood of data generated by the inferred model.
        gamma: Regularization strength.
        alpha: Sampling ratio.
        stderr: Optional standard errors keyed by likelihood name.
    """

    l_train: float
    l_test: float
    l_gen: float
    gamma: float
    alpha: float
    stderr: Optional[Dict[str, float]] = None

    def per_site(self, n: int) -> "LikelihoodTriple":
        """Likelihoods divided by n."""
        stderr = {k: v / n for k, v in self.stderr.items()} if self.stderr else None
        return LikelihoodTriple(self.l_train / n, self.l_test / n, self.l_gen / n,
                                self.gamma, self.alpha, stderr)

    def to_dict(self) -> Dict[str, Any]:
        result = {
            'gamma': self.gamma,
            'alpha': self.alpha,
            'l_train': self.l_train,
            'l_test': self.l_test,
            'l_gen': self.l_gen,
        }
        if self.stderr:
            result.update({f"{k}_stderr": v for k, v in self.stderr.items()})
        return result


def _check_dimension(sol: MapSolution, C: np.ndarray) -> None:
    if C.shape != (sol.n, sol.n):
        raise InvalidInputError(f"Covariance shape {C.shape} does not match n={sol.n}")


def likelihood_from_covariance(sol: MapSolution, C: np.ndarray) -> float:
    """(1/2) sum_ij J*_ij C_ij - log Z(J*) for an arbitrary covariance C."""
    C = np.asarray(C, dtype=float)
    _check_dimension(sol, C)
    return likelihood_from_rotated(sol, np.sum(sol.basis * (C @ sol.basis), axis=0))


def likelihood_from_rotated(sol: MapSolution, c_rot: np.ndarray) -> float:
    """Same as likelihood_from_covariance with diag(V^T C V) precomputed."""
    return 0.5 * float(np.sum(sol.j_star * c_rot)) - sol.log_z


def train_likelihood(sol: MapSolution, C_emp: Optional[np.ndarray] = None) -> float:
    """Training likelihood; uses the cached spectrum unless C_emp is given."""
    if C_emp is None:
        return likelihood_from_rotated(sol, sol.c_emp)
    return likelihood_from_covariance(sol, C_emp)


def test_likelihood(sol: MapSolution, C_tr: np.ndarray) -> float:
    """Test likelihood against the exact true covariance."""
    return likelihood_from_covariance(sol, C_tr)


def gen_likelihood(sol: MapSolution, check: bool = True) -> float:
    """Likelihood of data generated by the inferred model itself.

    For L2 solutions the value is cross-checked against
    l_train - (gamma / 2 alpha) sum (J*)^2.

    Raises:
        InvariantViolationError: If the two evaluations disagree.
    """
    value = 0.5 * float(np.sum(sol.j_star / sol.gaps)) - sol.log_z
    if check and sol.penalty == "l2":
        l_train = train_likelihood(sol)
        identity = l_train - sol.gamma / (2.0 * sol.alpha) * sol.frobenius_sq()
        if abs(value - identity) > IDENTITY_RTOL * (1.0 + abs(l_train)):
            raise InvariantViolationError(
                f"Generated likelihood {value!r} disagrees with bias-variance identity {identity!r}"
            )
    return value


def likelihood_triple(sol: MapSolution, C_tr: Optional[np.ndarray] = None,
                      c_tr_rot: Optional[np.ndarray] = None) -> LikelihoodTriple:
    """All three likelihoods of a solution.

    Pass either the true covariance or its rotated diagonal.
    """
    if c_tr_rot is None:
        if C_tr is None:
            raise InvalidInputError("likelihood_triple needs C_tr or c_tr_rot")
        l_test = test_likelihood(sol, C_tr)
    else:
        l_test = likelihood_from_rotated(sol, c_tr_rot)
    return LikelihoodTriple(
        l_train=train_likelihood(sol),
        l_test=l_test,
        l_gen=gen_likelihood(sol),
        gamma=sol.gamma,
        alpha=sol.alpha,
    )
