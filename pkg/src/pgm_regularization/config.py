"""
Experiment configuration.

A YAML document with one section per concern is turned into a tree of
dataclasses. Unknown keys are reported and ignored; `validate()` returns a
list of problems rather than raising, so callers can report them all at once.
"""

import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from .utils import config_hash, default_output_root, load_config

logger = logging.getLogger(__name__)

GENERATOR_KINDS = ("goe", "band", "ring")
PENALTIES = ("l1", "l2")
OUTPUT_FORMATS = ("csv", "svg", "summary", "matrix")
KL_METHODS = ("auto", "exact", "mc")


@dataclass
class GeneratorSpec:
    kind: str = "goe"
    n: int = 50
    sigma: float = 0.5
    w: int = 10


@dataclass
class SamplingSpec:
    alpha: float = 10.0
    p: Optional[int] = None
    seeds: List[int] = field(default_factory=lambda: [0])
    rescale_trace: bool = True

    def sample_count(self, n: int) -> int:
        """Training set size: p when given, otherwise round(alpha * n)."""
        return int(self.p) if self.p is not None else max(1, int(round(self.alpha * n)))


@dataclass
class ScanSpec:
    gamma_min: float = 1e-3
    gamma_max: float = 1e3
    points: int = 61
    penalty: str = "l2"
    tol: float = 1e-12


@dataclass
class OutputSpec:
    directory: Optional[str] = None
    formats: List[str] = field(default_factory=lambda: ["csv", "summary", "svg"])

    def root(self) -> Path:
        return Path(self.directory) if self.directory else default_output_root()


@dataclass
class PottsSpec:
    n: int = 10
    q: int = 3
    d: float = 2.5
    field_variance: float = 5.0
    coupling_variance: float = 1.0
    gamma_h_ratio: float = 0.1
    p: int = 1000
    p_test: int = 10000
    p_gen: int = 10000
    burn_in: int = 1000
    thinning: int = 10
    chains: int = 100
    gamma_min: float = 1e-2
    gamma_max: float = 1e1
    points: int = 13
    plm_tol: float = 1e-6
    plm_max_iter: int = 1000
    kl_method: str = "auto"
    kl_budget: int = 10000
    ais_temps: int = 1000
    ais_chains: int = 100
    likelihoods: bool = False

    def gamma_h(self, gamma: float) -> float:
        """Field penalty gamma_h = ratio * gamma / n."""
        return self.gamma_h_ratio * gamma / self.n


@dataclass
class PosteriorSpec:
    gamma: float = 5.0
    betas: List[float] = field(default_factory=lambda: [1000.0, 10000.0])
    steps: int = 5000
    burn_in: int = 1000
    proposal_scale: Optional[float] = None
    sparsity: float = 0.05
    record_every: int = 10
    init: str = "gaussian"
    tune: bool = True


SECTIONS = {
    'generator': GeneratorSpec,
    'sampling': SamplingSpec,
    'scan': ScanSpec,
    'outputs': OutputSpec,
    'potts': PottsSpec,
    'posterior': PosteriorSpec,
}


def _build_section(name: str, cls, values: Optional[Dict[str, Any]]):
    values = values or {}
    if not isinstance(values, dict):
        raise ValueError(f"Configuration section '{name}' must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        logger.warning(f"Ignoring unknown keys in section '{name}': {', '.join(unknown)}")
    return cls(**{k: v for k, v in values.items() if k in known})


@dataclass
class ExperimentConfig:
    """Complete configuration of one experiment."""

    generator: GeneratorSpec = field(default_factory=GeneratorSpec)
    sampling: SamplingSpec = field(default_factory=SamplingSpec)
    scan: ScanSpec = field(default_factory=ScanSpec)
    outputs: OutputSpec = field(default_factory=OutputSpec)
    potts: PottsSpec = field(default_factory=PottsSpec)
    posterior: PosteriorSpec = field(default_factory=PosteriorSpec)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "ExperimentConfig":
        data = data or {}
        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            logger.warning(f"Ignoring unknown configuration sections: {', '.join(unknown)}")
        return cls(**{name: _build_section(name, spec, data.get(name)) for name, spec in SECTIONS.items()})

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        return cls.from_dict(load_config(path))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        return config_hash(self.to_dict())

    def validate(self) -> List[str]:
        """Return a list of configuration errors; empty when valid."""
        errors = []
        gen, samp, scan, out = self.generator, self.sampling, self.scan, self.outputs
        potts, post = self.potts, self.posterior

        if gen.kind not in GENERATOR_KINDS:
            errors.append(f"generator.kind must be one of {GENERATOR_KINDS}, got '{gen.kind}'")
        if gen.n < 2:
            errors.append("generator.n must be at least 2")
        if not gen.sigma > 0:
            errors.append("generator.sigma must be positive")
        if gen.kind == "band" and not 1 <= gen.w < gen.n:
            errors.append("generator.w must satisfy 1 <= w < n for band matrices")

        if samp.p is None and not samp.alpha > 0:
            errors.append("sampling.alpha must be positive")
        if samp.p is not None and samp.p < 1:
            errors.append("sampling.p must be at least 1")
        if not samp.seeds:
            errors.append("sampling.seeds must not be empty")

        if not 0 < scan.gamma_min < scan.gamma_max:
            errors.append("scan bounds must satisfy 0 < gamma_min < gamma_max")
        if scan.points < 2:
            errors.append("scan.points must be at least 2")
        if scan.penalty not in PENALTIES:
            errors.append(f"scan.penalty must be one of {PENALTIES}, got '{scan.penalty}'")

        bad_formats = sorted(set(out.formats) - set(OUTPUT_FORMATS))
        if bad_formats:
            errors.append(f"outputs.formats contains unknown formats: {', '.join(bad_formats)}")

        if potts.n < 2 or potts.q < 2:
            errors.append("potts.n and potts.q must be at least 2")
        if not 0 <= potts.d < potts.n:
            errors.append("potts.d must satisfy 0 <= d < n")
        if not 0 < potts.gamma_min < potts.gamma_max:
            errors.append("potts bounds must satisfy 0 < gamma_min < gamma_max")
        if potts.points < 2:
            errors.append("potts.points must be at least 2")
        if min(potts.p, potts.p_test, potts.p_gen) < 1:
            errors.append("potts sample sizes must be at least 1")
        if potts.kl_method not in KL_METHODS:
            errors.append(f"potts.kl_method must be one of {KL_METHODS}")
        if potts.gamma_h_ratio < 0:
            errors.append("potts.gamma_h_ratio must be non-negative")

        if not post.betas or any(not b > 0 for b in post.betas):
            errors.append("posterior.betas must be a non-empty list of positive values")
        if post.steps < 0 or post.burn_in < 0:
            errors.append("posterior.steps and posterior.burn_in must be non-negative")
        if not 0 < post.sparsity <= 1:
            errors.append("posterior.sparsity must lie in (0, 1]")
        if post.init not in ("gaussian", "map"):
            errors.append("posterior.init must be 'gaussian' or 'map'")
        return errors
