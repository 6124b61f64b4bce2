"""
Utility functions for the pgm-regularization workbench.
"""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml

from .exceptions import InvalidInputError

OUTPUT_ROOT_ENV = "PGM_REG_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "results"

# Fixed order of per-seed substreams; appending is safe, reordering is not.
STREAM_NAMES = ("couplings", "samples", "test_samples", "generated", "ais", "posterior")


def setup_logging(level: str = "INFO", log_file: Optional[str] = None) -> None:
    """Set up logging configuration."""
    log_level = getattr(logging, level.upper(), logging.INFO)

    format_string = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    if log_file:
        logging.basicConfig(
            level=log_level,
            format=format_string,
            handlers=[
                logging.FileHandler(log_file),
                logging.StreamHandler()
            ]
        )
    else:
        logging.basicConfig(level=log_level, format=format_string)


def load_config(config_path: str) -> Dict[str, Any]:
    """Load configuration from YAML file."""
    config_file = Path(config_path)

    if not config_file.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    with open(config_file, 'r') as f:
        config = yaml.safe_load(f)

    return config or {}


def default_output_root() -> Path:
    """Output root from the environment, falling back to ./results."""
    return Path(os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT))


def config_hash(config: Dict[str, Any]) -> str:
    """Short stable digest of a configuration dictionary.

    The dictionary is serialized as canonical JSON (sorted keys, no
    whitespace) so that equal configurations always hash equally.
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def parse_seed_list(text: str) -> List[int]:
    """Parse a comma separated seed list such as ``"0,1,2"``."""
    seeds = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            seeds.append(int(token))
        except ValueError:
            raise InvalidInputError(f"Invalid seed: {token!r}")
    if not seeds:
        raise InvalidInputError("Seed list is empty")
    return seeds


def seed_streams(seed: int) -> Dict[str, np.random.Generator]:
    """Independent PCG64 generators for every stage of one experiment seed."""
    children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
    return {name: np.random.default_rng(child) for name, child in zip(STREAM_NAMES, children)}


def as_finite_array(values: Any, name: str, ndim: Optional[int] = None) -> np.ndarray:
    """Convert to a float array and reject NaN/inf entries."""
    array = np.asarray(values, dtype=float)
    if ndim is not None and array.ndim != ndim:
        raise InvalidInputError(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return array


def require_square(matrix: np.ndarray, name: str) -> int:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {matrix.shape}")
    return matrix.shape[0]


def log_grid(lower: float, upper: float, points: int) -> np.ndarray:
    """Log-spaced grid, strictly increasing."""
    if lower <= 0 or upper <= lower:
        raise InvalidInputError(f"Invalid grid bounds [{lower}, {upper}]")
    if points < 2:
        raise InvalidInputError("A grid needs at least two points")
    return np.logspace(np.log10(lower), np.log10(upper), points)


def sign_changes(values: Sequence[float], direction: str = "down") -> List[int]:
    """Indices k where values[k] and values[k+1] bracket a root.

    Args:
        values: Residual values on an ordered grid.
        direction: "down" for + to -, "up" for - to +, "any" for both.

    Returns:
        Left indices of every bracketing interval.
    """
    values = np.asarray(values, dtype=float)
    left, right = values[:-1], values[1:]
    finite = np.isfinite(left) & np.isfinite(right)
    if direction == "down":
        mask = (left > 0) & (right <= 0)
    elif direction == "up":
        mask = (left < 0) & (right >= 0)
    else:
        mask = ((left > 0) & (right <= 0)) | ((left < 0) & (right >= 0))
    return [int(k) for k in np.nonzero(mask & finite)[0]]
