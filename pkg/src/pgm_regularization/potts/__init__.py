"""
Potts model pipeline: generation on Erdos-Renyi graphs, Gibbs sampling,
pseudo-likelihood inference, partition functions and divergences.
"""

from .model import PottsParams, generate_er_potts, potts_energy, potts_energies, to_zero_sum_gauge
from .mcmc import PottsSampleSet, mcmc_sample
from .inference import plm_infer
from .partition import AISResult, ais_log_z, exact_log_z
from .metrics import DivergenceEstimate, kl_divergence, potts_likelihoods

__all__ = [
    "AISResult",
    "DivergenceEstimate",
    "PottsParams",
    "PottsSampleSet",
    "ais_log_z",
    "exact_log_z",
    "generate_er_potts",
    "kl_divergence",
    "mcmc_sample",
    "plm_infer",
    "potts_energies",
    "potts_energy",
    "potts_likelihoods",
    "to_zero_sum_gauge",
]
