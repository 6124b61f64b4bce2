"""
Sampling from the spherical Gaussian model and empirical covariances.
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .exceptions import InvalidInputError
from .spherical import SphericalModel, symmetric_eigh
from .utils import as_finite_array, require_square

logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-8


@dataclass(eq=False)
class SampleSet:
    """p x n matrix of centered samples.

    Attributes:
        data: Samples, one per row.
        alpha: Sampling ratio p / n.
    """

    data: np.ndarray

    def __post_init__(self):
        self.data = as_finite_array(self.data, "samples", ndim=2)
        if self.data.shape[0] < 1:
            raise InvalidInputError("A sample set needs at least one row")

    @property
    def p(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def alpha(self) -> float:
        return self.p / self.n

    def split(self, n_train: int) -> Tuple["SampleSet", "SampleSet"]:
        """First n_train rows and the remainder."""
        if not 0 < n_train < self.p:
            raise InvalidInputError(f"Cannot split {self.p} samples at {n_train}")
        return SampleSet(self.data[:n_train]), SampleSet(self.data[n_train:])


def covariance_square_root(covariance: np.ndarray) -> np.ndarray:
    """Symmetric square root via eigen-decomposition.

    Negative eigenvalues down to -PSD_TOLERANCE (relative to the largest
    magnitude) are clipped to zero; anything below is rejected.
    """
    covariance = as_finite_array(covariance, "covariance", ndim=2)
    require_square(covariance, "covariance")
    values, vectors = symmetric_eigh(0.5 * (covariance + covariance.T))
    scale = max(1.0, float(np.max(np.abs(values))))
    if values.min() < -PSD_TOLERANCE * scale:
        raise InvalidInputError(f"Covariance is not positive semi-definite (min eigenvalue {values.min():.3e})")
    root = np.sqrt(np.clip(values, 0.0, None))
    return (vectors * root) @ vectors.T


def sample_gaussian(model: Union[SphericalModel, np.ndarray], p: int,
                    seed: Union[int, np.random.Generator]) -> SampleSet:
    """Draw p i.i.d. centered Gaussian rows with the model covariance."""
    if p < 1:
        raise InvalidInputError(f"p must be at least 1, got {p}")
    covariance = model.covariance if isinstance(model, SphericalModel) else np.asarray(model, dtype=float)
    root = covariance_square_root(covariance)
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(size=(p, root.shape[0]))
    return SampleSet(white @ root)


def empirical_covariance(samples: Union[SampleSet, np.ndarray]) -> np.ndarray:
    """(1/p) sum_k x^k (x^k)^T, without mean subtraction."""
    data = samples.data if isinstance(samples, SampleSet) else as_finite_array(samples, "samples", ndim=2)
    covariance = data.T @ data / data.shape[0]
    return 0.5 * (covariance + covariance.T)


def rescale_trace(C: np.ndarray, n: int) -> np.ndarray:
    """Scale C so that its trace equals n."""
    C = as_finite_array(C, "covariance", ndim=2)
    trace = float(np.trace(C))
    if trace <= 0:
        raise InvalidInputError(f"Cannot rescale a covariance with trace {trace}")
    return C * (n / trace)


def empirical_test_likelihood(solution, samples: Union[SampleSet, np.ndarray]) -> float:
    """Finite-sample estimate of the test likelihood of a MAP solution.

    Diagnostic only; the reported test likelihood uses the exact covariance.
    """
    from .likelihoods import likelihood_from_covariance

    return likelihood_from_covariance(solution, empirical_covariance(samples))
