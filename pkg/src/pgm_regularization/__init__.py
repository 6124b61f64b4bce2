"""
pgm-regularization - regularized MAP inference of pairwise graphical models.

Gaussian spherical models with L2 and L1 penalties, Potts models inferred by
pseudo-likelihood, and the characteristic regularization strengths at which
test likelihood peaks and test and generated likelihoods meet.
"""

__version__ = "1.0.0"

from .config import ExperimentConfig
from .experiments import ExperimentRunner, reproduce_figure
from .gamma_solver import ScanContext, find_gamma_cross, find_gamma_half, find_gamma_opt, scan_gammas
from .lasso import graphical_lasso, map_l1
from .likelihoods import LikelihoodTriple, likelihood_triple
from .map_l2 import MapSolution, solve_map
from .posterior import PosteriorTrace, metropolis_posterior
from .spherical import InteractionMatrix, SphericalModel, covariance_from_interaction

__all__ = [
    "ExperimentConfig", "ExperimentRunner", "reproduce_figure",
    "ScanContext", "find_gamma_cross", "find_gamma_half", "find_gamma_opt", "scan_gammas",
    "graphical_lasso", "map_l1",
    "LikelihoodTriple", "likelihood_triple",
    "MapSolution", "solve_map",
    "PosteriorTrace", "metropolis_posterior",
    "InteractionMatrix", "SphericalModel", "covariance_from_interaction",
]
