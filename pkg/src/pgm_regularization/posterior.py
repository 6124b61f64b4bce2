"""
Metropolis sampling of the posterior over interaction matrices.

The chain targets P(J) proportional to exp(-beta * E(J)) with E the MAP energy
against the empirical covariance. Each proposal adds a small sparse symmetric
Gaussian perturbation; the Lagrange multiplier is re-solved for every
candidate matrix.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from .exceptions import InvalidInputError, PGMRegularizationError
from .map_l2 import MapSolution, map_energy, solve_map

try:
    from tqdm import tqdm
except ImportError:
    tqdm = None

logger = logging.getLogger(__name__)

DEFAULT_SPARSITY = 0.05
DEFAULT_AMPLITUDE = 0.02
ACCEPTANCE_WINDOW = 100
TUNE_INTERVAL = 100
TARGET_ACCEPTANCE = (0.3, 0.5)
INIT_MODES = ("gaussian", "map")
TRACE_COLUMNS = ["step", "train_energy", "test_energy", "distance", "acceptance"]


@dataclass
class PosteriorTrace:
    """Recorded states of one Metropolis chain.

    Attributes:
        beta: Inverse temperature of the chain.
        records: Dicts keyed by TRACE_COLUMNS, one per recorded step.
        map_train_energy: E(J*) against the empirical covariance.
        map_test_energy: E(J*) against the true covariance.
        proposal_scale: Final proposal amplitude after tuning.
        rejected_solves: Proposals rejected because the multiplier solve failed.
    """

    beta: float
    records: List[Dict[str, float]] = field(default_factory=list)
    map_train_energy: float = float("nan")
    map_test_energy: float = float("nan")
    proposal_scale: float = float("nan")
    rejected_solves: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records], dtype=float)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records, columns=TRACE_COLUMNS)

    def relative_to(self, map_train_energy: Optional[float] = None,
                    map_test_energy: Optional[float] = None) -> pd.DataFrame:
        """Trace with energies shifted by those of the MAP estimator."""
        frame = self.to_frame()
        frame['train_energy'] -= self.map_train_energy if map_train_energy is None else map_train_energy
        frame['test_energy'] -= self.map_test_energy if map_test_energy is None else map_test_energy
        return frame


def window_means(trace: PosteriorTrace, window: int) -> pd.DataFrame:
    """Means of the trace over consecutive blocks of `window` records."""
    if window < 1:
        raise InvalidInputError(f"Window must be positive, got {window}")
    frame = trace.to_frame()
    if frame.empty:
        return frame
    block = np.arange(len(frame)) // window
    means = frame.groupby(block).mean()
    means['step'] = frame.groupby(block)['step'].first()
    return means.reset_index(drop=True)


def stationarity_zscore(values) -> float:
    """Difference of the second-half and third-quarter means in pooled standard errors."""
    values = np.asarray(values, dtype=float)
    m = values.size
    if m < 8:
        return float("nan")
    half = values[m // 2:]
    quarter = values[m // 2:(3 * m) // 4]
    pooled = math.sqrt(np.var(half, ddof=1) / half.size + np.var(quarter, ddof=1) / quarter.size)
    if pooled == 0:
        return 0.0
    return float(abs(half.mean() - quarter.mean()) / pooled)


def metropolis_accept(delta: float, beta: float, rng: np.random.Generator) -> bool:
    """Metropolis rule min(1, exp(-beta * delta)); downhill moves never draw a random number."""
    if delta <= 0:
        return True
    return bool(rng.random() < math.exp(-beta * delta))


def sparse_symmetric_perturbation(n: int, scale: float, sparsity: float,
                                  rng: np.random.Generator) -> np.ndarray:
    """Symmetric matrix with Gaussian entries on a random subset of the upper triangle."""
    iu, ju = np.triu_indices(n)
    count = max(1, int(round(sparsity * iu.size)))
    picked = rng.choice(iu.size, size=count, replace=False)
    step = np.zeros((n, n))
    values = rng.normal(0.0, scale, size=count)
    step[iu[picked], ju[picked]] = values
    step[ju[picked], iu[picked]] = values
    return step


def initial_state(solution: MapSolution, rng: np.random.Generator, init: str = "gaussian") -> np.ndarray:
    """Starting matrix: J* itself or a Gaussian matrix with J*'s diagonal and off-diagonal moments."""
    J_star = solution.J_star.entries
    if init == "map":
        return J_star.copy()
    if init != "gaussian":
        raise InvalidInputError(f"Unknown initialization '{init}', expected one of {INIT_MODES}")
    n = J_star.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    off = J_star[iu, ju]
    diag = np.diag(J_star)
    J = np.zeros((n, n))
    values = rng.normal(off.mean() if off.size else 0.0, off.std() if off.size else 0.0, size=iu.size)
    J[iu, ju] = values
    J[ju, iu] = values
    J[np.arange(n), np.arange(n)] = rng.normal(diag.mean(), diag.std(), size=n)
    return J


def metropolis_posterior(C_emp: np.ndarray, C_tr: np.ndarray, alpha: float, gamma: float,
                         beta: float, steps: int, proposal_scale: Optional[float] = None,
                         proposal_sparsity: float = DEFAULT_SPARSITY,
                         seed: Union[int, np.random.Generator] = 0, burn_in: int = 0,
                         record_every: int = 1, init: str = "gaussian", tune: bool = True,
                         solution: Optional[MapSolution] = None,
                         show_progress: bool = False) -> PosteriorTrace:
    """Sample interaction matrices at inverse temperature beta.

    Args:
        C_emp: Empirical covariance defining the train energy.
        C_tr: True covariance defining the test energy.
        alpha: Sampling ratio.
        gamma: L2 strength.
        beta: Inverse temperature, > 0.
        steps: Recorded-phase proposals.
        proposal_scale: Perturbation amplitude; defaults to 0.02 / sqrt(n).
        proposal_sparsity: Fraction of upper-triangle entries perturbed.
        seed: Seed or generator.
        burn_in: Unrecorded proposals run first; the scale is tuned there.
        record_every: Proposals between recorded states.
        init: "gaussian" (moment-matched random start) or "map".
        tune: Adapt the scale toward 30-50% acceptance during burn-in.
        solution: Precomputed MAP solution; solved when omitted.
        show_progress: Display a progress bar.

    Returns:
        PosteriorTrace.
    """
    if not beta > 0:
        raise InvalidInputError(f"beta must be positive, got {beta}")
    if steps < 0 or burn_in < 0 or record_every < 1:
        raise InvalidInputError("steps and burn_in must be non-negative and record_every positive")
    if not 0 < proposal_sparsity <= 1:
        raise InvalidInputError(f"proposal_sparsity must lie in (0, 1], got {proposal_sparsity}")

    rng = np.random.default_rng(seed)
    sol = solution if solution is not None else solve_map(C_emp, alpha, gamma)
    n = sol.n
    scale = DEFAULT_AMPLITUDE / math.sqrt(n) if proposal_scale is None else float(proposal_scale)
    J_star = sol.J_star.entries

    trace = PosteriorTrace(
        beta=float(beta),
        map_train_energy=map_energy(J_star, C_emp, alpha, gamma),
        map_test_energy=map_energy(J_star, C_tr, alpha, gamma),
    )

    J = initial_state(sol, rng, init)
    energy = map_energy(J, C_emp, alpha, gamma)
    recent = deque(maxlen=ACCEPTANCE_WINDOW)
    total = burn_in + steps
    progress = tqdm(total=total, desc=f"Posterior beta={beta:g}", leave=False) if (tqdm and show_progress) else None

    for step in range(total):
        candidate = J + sparse_symmetric_perturbation(n, scale, proposal_sparsity, rng)
        try:
            candidate_energy = map_energy(candidate, C_emp, alpha, gamma)
        except PGMRegularizationError as e:
            trace.rejected_solves += 1
            logger.debug(f"Proposal {step} rejected: multiplier solve failed ({e})")
            recent.append(False)
        else:
            accepted = metropolis_accept(candidate_energy - energy, beta, rng)
            if accepted:
                J, energy = candidate, candidate_energy
            recent.append(accepted)

        if step < burn_in:
            if tune and (step + 1) % TUNE_INTERVAL == 0:
                rate = float(np.mean(recent))
                if rate < TARGET_ACCEPTANCE[0]:
                    scale *= 0.8
                elif rate > TARGET_ACCEPTANCE[1]:
                    scale *= 1.25
        elif (step - burn_in) % record_every == 0:
            trace.records.append({
                'step': step - burn_in,
                'train_energy': energy,
                'test_energy': map_energy(J, C_tr, alpha, gamma),
                'distance': float(np.linalg.norm(J - J_star)),
                'acceptance': float(np.mean(recent)),
            })
        if progress:
            progress.update(1)
    if progress:
        progress.close()

    trace.proposal_scale = scale
    if trace.rejected_solves:
        logger.warning(f"beta={beta:g}: {trace.rejected_solves} proposals rejected after failed multiplier solves")
    if len(trace) >= 8:
        z = stationarity_zscore(trace.column('train_energy'))
        level = logging.INFO if z < 2 else logging.WARNING
        logger.log(level, f"beta={beta:g}: stationarity z-score {z:.2f} over {len(trace)} records")
    logger.info(f"Posterior chain beta={beta:g}: {total} proposals, final scale {scale:.3e}")
    return trace
