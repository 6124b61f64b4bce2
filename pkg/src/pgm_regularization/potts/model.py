"""
Potts parameters, Erdos-Renyi ground truth and configuration energies.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import networkx as nx
import numpy as np

from ..exceptions import InvalidInputError
from ..utils import as_finite_array

logger = logging.getLogger(__name__)

DEFAULT_FIELD_VARIANCE = 5.0
DEFAULT_COUPLING_VARIANCE = 1.0
ENERGY_CHUNK = 4096


@dataclass(eq=False)
class PottsParams:
    """Fields and pairwise couplings of a q-state Potts model.

    Couplings are held densely as J[i, j, a, b] with J[i, j] == J[j, i].T and
    zero diagonal blocks, so J_ij(a, b) == J_ji(b, a) by construction.

    Attributes:
        h: Fields, shape (n, q).
        J: Couplings, shape (n, n, q, q).
        graph: Connectivity of a generated ground truth; None for inferred models.
    """

    h: np.ndarray
    J: np.ndarray
    graph: Optional[nx.Graph] = field(default=None, repr=False)

    def __post_init__(self):
        self.h = as_finite_array(self.h, "fields", ndim=2)
        self.J = as_finite_array(self.J, "couplings", ndim=4)
        n, q = self.h.shape
        if self.J.shape != (n, n, q, q):
            raise InvalidInputError(f"Couplings shape {self.J.shape} does not match fields {self.h.shape}")
        if np.max(np.abs(self.J - self.J.transpose(1, 0, 3, 2)), initial=0.0) > 1e-12:
            raise InvalidInputError("Couplings must satisfy J[i, j, a, b] == J[j, i, b, a]")
        if np.any(self.J[np.arange(n), np.arange(n)] != 0):
            raise InvalidInputError("Diagonal coupling blocks must be zero")

    @property
    def n(self) -> int:
        return self.h.shape[0]

    @property
    def q(self) -> int:
        return self.h.shape[1]

    @classmethod
    def zeros(cls, n: int, q: int) -> "PottsParams":
        return cls(h=np.zeros((n, q)), J=np.zeros((n, n, q, q)))

    def coupling(self, i: int, j: int) -> np.ndarray:
        """q x q block J_ij(a, b)."""
        return self.J[i, j]

    def edges(self) -> List[Tuple[int, int]]:
        """Pairs i < j with a nonzero coupling block."""
        nonzero = np.any(self.J != 0, axis=(2, 3))
        iu, ju = np.nonzero(np.triu(nonzero, k=1))
        return list(zip(iu.tolist(), ju.tolist()))

    def parameter_count(self, dense: bool = True) -> int:
        pairs = self.n * (self.n - 1) // 2 if dense else len(self.edges())
        return self.n * self.q + pairs * self.q ** 2


def symmetric_blocks(upper: np.ndarray) -> np.ndarray:
    """Mirror blocks given for i < j into a full symmetric coupling tensor."""
    n = upper.shape[0]
    mask = np.triu(np.ones((n, n), dtype=bool), k=1)
    J = np.where(mask[:, :, None, None], upper, 0.0)
    return J + J.transpose(1, 0, 3, 2)


def generate_er_potts(n: int, q: int, d: float,
                      sigma_h: float = math.sqrt(DEFAULT_FIELD_VARIANCE),
                      sigma_j: float = math.sqrt(DEFAULT_COUPLING_VARIANCE),
                      seed: Union[int, np.random.Generator] = 0) -> PottsParams:
    """Ground-truth Potts model on an Erdos-Renyi graph with edge probability d / n.

    Args:
        n: Number of sites.
        q: States per site.
        d: Expected-degree parameter, 0 <= d < n.
        sigma_h: Standard deviation of the fields.
        sigma_j: Standard deviation of coupling entries on edges.
        seed: Seed or generator.
    """
    if n < 2 or q < 2:
        raise InvalidInputError(f"Need n >= 2 and q >= 2, got n={n}, q={q}")
    if not 0 <= d < n:
        raise InvalidInputError(f"Degree parameter must satisfy 0 <= d < n, got d={d}")
    rng = np.random.default_rng(seed)
    graph = nx.gnp_random_graph(n, d / n, seed=int(rng.integers(2 ** 32)))
    h = rng.normal(0.0, sigma_h, size=(n, q))
    upper = np.zeros((n, n, q, q))
    for i, j in sorted(tuple(sorted(e)) for e in graph.edges()):
        upper[i, j] = rng.normal(0.0, sigma_j, size=(q, q))
    logger.debug(f"ER Potts model: n={n}, q={q}, d={d}, edges={graph.number_of_edges()}")
    return PottsParams(h=h, J=symmetric_blocks(upper), graph=graph)


def _check_states(X: np.ndarray, params: PottsParams) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != params.n:
        raise InvalidInputError(f"Configurations must have {params.n} sites, got shape {X.shape}")
    if X.size and (X.min() < 0 or X.max() >= params.q):
        raise InvalidInputError(f"States must lie in [0, {params.q})")
    return X.astype(np.intp, copy=False)


def field_scores(X: np.ndarray, params: PottsParams) -> np.ndarray:
    """sum_i h_i(x_i) per configuration."""
    return params.h[np.arange(params.n)[None, :], X].sum(axis=1)


def coupling_scores(X: np.ndarray, params: PottsParams) -> np.ndarray:
    """sum_{i<j} J_ij(x_i, x_j) per configuration."""
    pairs = params.edges()
    if not pairs:
        return np.zeros(X.shape[0])
    iu, ju = (np.array(v) for v in zip(*pairs))
    scores = np.empty(X.shape[0])
    for start in range(0, X.shape[0], ENERGY_CHUNK):
        block = X[start:start + ENERGY_CHUNK]
        scores[start:start + ENERGY_CHUNK] = params.J[iu, ju, block[:, iu], block[:, ju]].sum(axis=1)
    return scores


def potts_energies(X: np.ndarray, params: PottsParams) -> np.ndarray:
    """Energies -sum_{i<j} J_ij(x_i, x_j) - sum_i h_i(x_i) of a batch of configurations."""
    X = _check_states(X, params)
    return -coupling_scores(X, params) - field_scores(X, params)


def potts_energy(x, params: PottsParams) -> float:
    """Energy of a single configuration."""
    return float(potts_energies(np.asarray(x)[None, :], params)[0])


def to_zero_sum_gauge(params: PottsParams) -> PottsParams:
    """Equivalent parameters whose blocks and fields sum to zero along every index.

    Energies change by a configuration-independent constant only.
    """
    J = params.J
    row = J.mean(axis=3, keepdims=True)
    col = J.mean(axis=2, keepdims=True)
    total = J.mean(axis=(2, 3), keepdims=True)
    blocks = J - row - col + total
    h = params.h + (row - total)[..., 0].sum(axis=1)
    h = h - h.mean(axis=1, keepdims=True)
    n = params.n
    blocks[np.arange(n), np.arange(n)] = 0.0
    return PottsParams(h=h, J=blocks, graph=params.graph)
