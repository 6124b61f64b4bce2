"""
Likelihoods and KL divergences of inferred Potts models.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import logsumexp

from ..exceptions import InvalidInputError
from ..likelihoods import LikelihoodTriple
from .mcmc import DEFAULT_BURN_IN, DEFAULT_CHAINS, DEFAULT_THINNING, PottsSampleSet, mcmc_sample
from .model import PottsParams, potts_energies
from .partition import (
    DEFAULT_AIS_CHAINS,
    DEFAULT_AIS_TEMPERATURES,
    MAX_ENUMERATION_STATES,
    ais_log_z,
    can_enumerate,
    enumerate_states,
    exact_log_z,
)

logger = logging.getLogger(__name__)

KL_METHODS = ("exact", "mc", "auto")


@dataclass
class DivergenceEstimate:
    """D_KL(inferred || truth) with its Monte Carlo standard error (0 when exact)."""

    value: float
    stderr: float
    method: str

    def __float__(self) -> float:
        return self.value

    def to_dict(self):
        return {'kl': self.value, 'kl_stderr': self.stderr, 'kl_method': self.method}


def _check_compatible(params: PottsParams, samples: PottsSampleSet, label: str):
    if samples.n != params.n or samples.q != params.q:
        raise InvalidInputError(
            f"{label} samples have n={samples.n}, q={samples.q}; model has n={params.n}, q={params.q}")


def mean_log_probability(params: PottsParams, samples: PottsSampleSet, log_z: float):
    """Mean of -E(x) - log Z over the samples and its standard error."""
    scores = -potts_energies(samples.data, params) - log_z
    stderr = float(np.std(scores, ddof=1) / np.sqrt(scores.size)) if scores.size > 1 else 0.0
    return float(np.mean(scores)), stderr


def generated_samples(inferred: PottsParams, p: int, burn_in: int = DEFAULT_BURN_IN,
                      thinning: int = DEFAULT_THINNING, seed: Union[int, np.random.Generator] = 0,
                      num_chains: int = DEFAULT_CHAINS) -> PottsSampleSet:
    """Samples of the inferred model, the generated set of the likelihood triple."""
    samples = mcmc_sample(inferred, p, burn_in=burn_in, thinning=thinning,
                          seed=seed, num_chains=num_chains)
    samples.provenance['source'] = 'generated'
    return samples


def potts_likelihoods(inferred: PottsParams, train: PottsSampleSet, test: PottsSampleSet,
                      gen: PottsSampleSet, log_z: float, gamma: float = float("nan")) -> LikelihoodTriple:
    """Train, test and generated log-likelihoods of an inferred model, per site.

    Args:
        inferred: Model under evaluation.
        train: Samples the model was fitted on.
        test: Held-out samples of the ground truth.
        gen: Samples of the inferred model itself.
        log_z: Log partition function of `inferred` (exact or AIS).
        gamma: Regularization strength, recorded on the triple.
    """
    for label, samples in (("train", train), ("test", test), ("generated", gen)):
        _check_compatible(inferred, samples, label)
    n = inferred.n
    l_train, se_train = mean_log_probability(inferred, train, log_z)
    l_test, se_test = mean_log_probability(inferred, test, log_z)
    l_gen, se_gen = mean_log_probability(inferred, gen, log_z)
    return LikelihoodTriple(
        l_train=l_train / n,
        l_test=l_test / n,
        l_gen=l_gen / n,
        gamma=gamma,
        alpha=train.p / n,
        stderr={'l_train': se_train / n, 'l_test': se_test / n, 'l_gen': se_gen / n},
    )


def exact_kl(inferred: PottsParams, truth: PottsParams, limit: int = MAX_ENUMERATION_STATES) -> float:
    """D_KL(inferred || truth) by enumeration of every configuration."""
    if (inferred.n, inferred.q) != (truth.n, truth.q):
        raise InvalidInputError("Models must share n and q")
    log_z_inf = exact_log_z(inferred, limit=limit)
    log_z_truth = exact_log_z(truth, limit=limit)
    expectation = 0.0
    for X in enumerate_states(inferred.n, inferred.q, limit=limit):
        e_inf = potts_energies(X, inferred)
        e_truth = potts_energies(X, truth)
        expectation += float(np.sum(np.exp(-e_inf - log_z_inf) * (e_truth - e_inf)))
    return expectation + log_z_truth - log_z_inf


def mc_kl(inferred: PottsParams, truth: PottsParams, log_z_inferred: float, log_z_truth: float,
          budget: int = 10000, seed: Union[int, np.random.Generator] = 0, **mcmc) -> DivergenceEstimate:
    """Sample estimate of D_KL(inferred || truth) with both log Z supplied."""
    samples = mcmc_sample(inferred, budget, seed=seed, **mcmc)
    diff = potts_energies(samples.data, truth) - potts_energies(samples.data, inferred)
    stderr = float(np.std(diff, ddof=1) / np.sqrt(diff.size)) if diff.size > 1 else float("nan")
    return DivergenceEstimate(value=float(np.mean(diff) + log_z_truth - log_z_inferred),
                              stderr=stderr, method="mc")


def kl_divergence(inferred: PottsParams, truth: PottsParams, method: str = "exact",
                  budget: int = 10000, seed: Union[int, np.random.Generator] = 0,
                  log_z_inferred: Optional[float] = None, log_z_truth: Optional[float] = None,
                  ais_temps: int = DEFAULT_AIS_TEMPERATURES, ais_chains: int = DEFAULT_AIS_CHAINS,
                  **mcmc) -> DivergenceEstimate:
    """D_KL(inferred || truth) = <E_truth - E_inferred>_inferred + log Z_truth - log Z_inferred.

    Args:
        inferred: Inferred model.
        truth: Ground-truth model.
        method: "exact" (enumeration), "mc" (sampling) or "auto" (exact when q^n allows).
        budget: Number of samples of the mc estimate.
        seed: Seed or generator for sampling and AIS.
        log_z_inferred: Known log Z of `inferred`; estimated when omitted.
        log_z_truth: Known log Z of `truth`; estimated when omitted.
        ais_temps: Temperatures of AIS fallbacks.
        ais_chains: Chains of AIS fallbacks.
        **mcmc: Extra sampler settings (burn_in, thinning, num_chains).
    """
    if method not in KL_METHODS:
        raise InvalidInputError(f"Unknown KL method '{method}', expected one of {KL_METHODS}")
    if method == "auto":
        method = "exact" if can_enumerate(inferred.n, inferred.q) else "mc"
    if method == "exact":
        value = exact_kl(inferred, truth)
        if value < -1e-12:
            logger.warning(f"Exact KL is negative ({value:.3e}); check model consistency")
        return DivergenceEstimate(value=value, stderr=0.0, method="exact")

    rng = np.random.default_rng(seed)
    extra_se = 0.0
    if log_z_inferred is None or log_z_truth is None:
        enumerable = can_enumerate(inferred.n, inferred.q)
        estimates = []
        for params, known in ((inferred, log_z_inferred), (truth, log_z_truth)):
            if known is not None:
                estimates.append(known)
            elif enumerable:
                estimates.append(exact_log_z(params))
            else:
                ais = ais_log_z(params, num_temps=ais_temps, num_chains=ais_chains, seed=rng)
                extra_se += ais.stderr ** 2
                estimates.append(ais.estimate)
        log_z_inferred, log_z_truth = estimates
    result = mc_kl(inferred, truth, log_z_inferred, log_z_truth, budget=budget, seed=rng, **mcmc)
    result.stderr = float(np.sqrt(result.stderr ** 2 + extra_se))
    return result


def kl_argmin(gammas, values) -> Optional[float]:
    """Grid gamma minimizing the KL curve, or None when the minimum sits on the boundary."""
    values = np.asarray(values, dtype=float)
    if values.size < 3 or not np.isfinite(values).any():
        return None
    best = int(np.nanargmin(values))
    if best in (0, values.size - 1):
        return None
    return float(np.asarray(gammas, dtype=float)[best])
