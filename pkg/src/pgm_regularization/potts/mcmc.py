"""
Gibbs sampling of Potts configurations.

Independent chains advance in lockstep: one sweep visits every site in order
and redraws it from its conditional distribution for all chains at once.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Union

import numpy as np
from scipy.special import logsumexp

from ..exceptions import InvalidInputError
from .model import PottsParams, potts_energies

try:
    from tqdm import tqdm
except ImportError:
    tqdm = None

logger = logging.getLogger(__name__)

DEFAULT_BURN_IN = 1000
DEFAULT_THINNING = 10
DEFAULT_CHAINS = 100


@dataclass(eq=False)
class PottsSampleSet:
    """p configurations of n categorical variables in {0, ..., q-1}."""

    data: np.ndarray
    q: int
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.intp)
        if self.data.ndim != 2:
            raise InvalidInputError(f"Potts samples must be a 2-D array, got shape {self.data.shape}")
        if self.data.size and (self.data.min() < 0 or self.data.max() >= self.q):
            raise InvalidInputError(f"Sample states must lie in [0, {self.q})")

    @property
    def p(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def one_hot(self) -> np.ndarray:
        """Indicator array of shape (p, n, q)."""
        return np.eye(self.q)[self.data]

    def site_frequencies(self) -> np.ndarray:
        """Empirical single-site marginals, shape (n, q)."""
        return self.one_hot().mean(axis=0)


def conditional_logits(params: PottsParams, X: np.ndarray, site: int, beta: float = 1.0) -> np.ndarray:
    """Unnormalized log-probabilities of each state at `site` given the other sites.

    Returns an array of shape (chains, q): h_site(a) + beta * sum_j J_site,j(a, x_j).
    """
    n = params.n
    # J[site][j, a, x_j] for every chain, shape (chains, n, q)
    couplings = params.J[site][np.arange(n)[None, :], :, X]
    return params.h[site][None, :] + beta * couplings.sum(axis=1)


def conditional_probabilities(params: PottsParams, X: np.ndarray, site: int, beta: float = 1.0) -> np.ndarray:
    logits = conditional_logits(params, X, site, beta)
    return np.exp(logits - logsumexp(logits, axis=1, keepdims=True))


def _draw_categorical(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs, axis=1)
    u = rng.random((probs.shape[0], 1)) * cdf[:, -1:]
    return np.minimum((cdf < u).sum(axis=1), probs.shape[1] - 1)


def gibbs_sweep(params: PottsParams, X: np.ndarray, rng: np.random.Generator, beta: float = 1.0) -> np.ndarray:
    """One in-place systematic-scan sweep over all sites of every chain."""
    for site in range(params.n):
        X[:, site] = _draw_categorical(conditional_probabilities(params, X, site, beta), rng)
    return X


def integrated_autocorrelation_time(series: np.ndarray, window_factor: float = 5.0) -> float:
    """Integrated autocorrelation time with a self-consistent truncation window."""
    x = np.asarray(series, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    x = x - x.mean(axis=1, keepdims=True)
    length = x.shape[1]
    if length < 2:
        return 1.0
    spectrum = np.fft.rfft(x, n=2 * length, axis=1)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), axis=1)[:, :length].mean(axis=0)
    if acov[0] <= 0:
        return 1.0
    rho = acov / acov[0]
    tau = 1.0
    for lag in range(1, length):
        tau += 2.0 * rho[lag]
        if lag >= window_factor * tau:
            break
    return max(float(tau), 1.0)


def mcmc_sample(params: PottsParams, p: int, burn_in: int = DEFAULT_BURN_IN,
                thinning: int = DEFAULT_THINNING, seed: Union[int, np.random.Generator] = 0,
                num_chains: int = DEFAULT_CHAINS, beta: float = 1.0,
                show_progress: bool = False) -> PottsSampleSet:
    """Draw p configurations from P(x) proportional to exp(-E(x)).

    Each chain starts uniformly at random, discards burn_in sweeps, then
    records one configuration every `thinning` sweeps until p samples exist.

    Args:
        params: Model to sample.
        p: Number of configurations.
        burn_in: Sweeps discarded per chain.
        thinning: Sweeps between recorded configurations.
        seed: Seed or generator.
        num_chains: Chains run in parallel; capped at p.
        beta: Inverse temperature applied to the couplings.
        show_progress: Display a progress bar.

    Returns:
        PottsSampleSet of shape (p, n).
    """
    if p < 1:
        raise InvalidInputError(f"Number of samples must be positive, got {p}")
    if burn_in < 0 or thinning < 1 or num_chains < 1:
        raise InvalidInputError(
            f"Need burn_in >= 0, thinning >= 1 and chains >= 1 "
            f"(got {burn_in}, {thinning}, {num_chains})")

    rng = np.random.default_rng(seed)
    chains = min(num_chains, p)
    rounds = -(-p // chains)
    X = rng.integers(0, params.q, size=(chains, params.n))

    total = burn_in + rounds * thinning
    progress = tqdm(total=total, desc="Gibbs", unit="sweep", leave=False) if (tqdm and show_progress) else None

    for _ in range(burn_in):
        gibbs_sweep(params, X, rng, beta)
        if progress:
            progress.update(1)

    recorded = np.empty((rounds, chains, params.n), dtype=np.intp)
    energies = np.empty((rounds, chains))
    for r in range(rounds):
        for _ in range(thinning):
            gibbs_sweep(params, X, rng, beta)
        if progress:
            progress.update(thinning)
        recorded[r] = X
        energies[r] = potts_energies(X, params)
    if progress:
        progress.close()

    tau = integrated_autocorrelation_time(energies.T)
    logger.debug(f"Gibbs sampling: p={p}, chains={chains}, burn_in={burn_in}, "
                 f"thinning={thinning}, energy autocorrelation={tau:.2f} records")
    if tau > 10:
        logger.warning(f"Energy autocorrelation time {tau:.1f} records; consider more thinning")

    # round-major so every chain contributes evenly when truncating
    data = recorded.reshape(rounds * chains, params.n)[:p]
    return PottsSampleSet(
        data=data,
        q=params.q,
        provenance={'burn_in': burn_in, 'thinning': thinning, 'chains': chains,
                    'beta': beta, 'autocorrelation_time': tau},
    )
