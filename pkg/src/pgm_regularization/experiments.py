"""
Configuration-driven experiment runners.

Every runner fans seeds out to a thread pool, gathers the per-seed outcomes
in seed order and hands the resulting artifacts to the batch exporter on the
calling thread. A failing seed is logged and recorded; the others continue.
"""

import logging
import math
import traceback
from concurrent.futures import ThreadPoolExecutor, as_completed
from copy import deepcopy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .config import ExperimentConfig, GeneratorSpec, SamplingSpec, ScanSpec
from .exceptions import InvalidInputError
from .exporters.base import PlotPanel, RunArtifacts, Series
from .exporters.batch_exporter import BatchExporter, BatchExportResult
from .exporters.potts_io import write_potts_params, write_potts_samples
from .gamma_solver import (
    GammaScan,
    ScanContext,
    likelihood_gap,
    predict_gamma_cross_infinite,
    sample_overlaps,
    scan_gammas,
    small_alpha_predictions,
)
from .lasso import map_l1, scan_l1
from .likelihoods import likelihood_triple
from .map_l2 import solve_map
from .posterior import metropolis_posterior, stationarity_zscore
from .potts.inference import plm_infer
from .potts.mcmc import mcmc_sample
from .potts.metrics import generated_samples, kl_argmin, kl_divergence, potts_likelihoods
from .potts.model import generate_er_potts
from .potts.partition import ais_log_z, can_enumerate, exact_log_z
from .sampling import SampleSet, empirical_covariance, rescale_trace, sample_gaussian
from .spherical import (
    InteractionMatrix,
    SphericalModel,
    covariance_from_interaction,
    generate_band,
    generate_goe,
    generate_ring_chain,
    largest_covariance_eigenvalue_prediction,
    spectral_outlier_fraction,
)
from .utils import log_grid, seed_streams

try:
    from tqdm import tqdm
except ImportError:
    tqdm = None

logger = logging.getLogger(__name__)

FIGURES = (2, 4, 5, 6, 8, 9)


@dataclass
class SeedOutcome:
    """Result of one seed: scalar records, artifacts to write, or the error."""

    seed: int
    records: Dict[str, Any] = field(default_factory=dict)
    artifacts: List[RunArtifacts] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class RunReport:
    """Outcome of a runner call."""

    kind: str
    config_hash: str
    outcomes: List[SeedOutcome] = field(default_factory=list)
    export: Optional[BatchExportResult] = None
    errors: List[str] = field(default_factory=list)

    @property
    def succeeded(self) -> List[SeedOutcome]:
        return [o for o in self.outcomes if o.ok]

    @property
    def all_failed(self) -> bool:
        return bool(self.outcomes) and not self.succeeded

    @property
    def paths(self) -> List[Path]:
        return self.export.paths if self.export else []

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'config_hash': self.config_hash,
            'seeds': [o.seed for o in self.outcomes],
            'failed_seeds': [o.seed for o in self.outcomes if not o.ok],
            'errors': self.errors,
            'files': [str(p) for p in self.paths],
            'export': self.export.to_dict() if self.export else None,
        }


@dataclass(eq=False)
class GaussianInstance:
    """Ground truth and training data of one Gaussian seed."""

    seed: int
    J_tr: InteractionMatrix
    model: SphericalModel
    samples: SampleSet
    C_emp: np.ndarray
    streams: Dict[str, np.random.Generator]

    @property
    def n(self) -> int:
        return self.J_tr.n

    @property
    def alpha(self) -> float:
        return self.samples.p / self.n


def generate_couplings(generator: GeneratorSpec, rng: np.random.Generator) -> InteractionMatrix:
    if generator.kind == "goe":
        return generate_goe(generator.n, generator.sigma, rng)
    if generator.kind == "band":
        return generate_band(generator.n, generator.w, generator.sigma, rng)
    if generator.kind == "ring":
        return generate_ring_chain(generator.n, generator.sigma)
    raise InvalidInputError(f"Unknown generator kind '{generator.kind}'")


def build_gaussian_instance(generator: GeneratorSpec, sampling: SamplingSpec, seed: int) -> GaussianInstance:
    """Draw J_tr, its covariance and a training sample set for one seed."""
    streams = seed_streams(seed)
    J_tr = generate_couplings(generator, streams['couplings'])
    model = covariance_from_interaction(J_tr)
    samples = sample_gaussian(model, sampling.sample_count(generator.n), streams['samples'])
    C_emp = empirical_covariance(samples)
    if sampling.rescale_trace:
        C_emp = rescale_trace(C_emp, generator.n)
    return GaussianInstance(seed=seed, J_tr=J_tr, model=model, samples=samples, C_emp=C_emp, streams=streams)


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def scan_instance(instance: GaussianInstance, scan: ScanSpec, generator: GeneratorSpec,
                  rescaled_overlap: bool = True):
    """Likelihood scan of one instance plus the closed-form predictions.

    Returns:
        (GammaScan, records) with records holding the located roots and
        predictions as plain scalars.
    """
    grid = log_grid(scan.gamma_min, scan.gamma_max, scan.points)
    C_tr = instance.model.covariance
    if scan.penalty == "l1":
        result = scan_l1(instance.C_emp, C_tr, instance.alpha, grid, J_tr=instance.J_tr.entries)
    else:
        ctx = ScanContext.from_covariances(instance.C_emp, C_tr, instance.alpha, J_tr=instance.J_tr, tol=scan.tol)
        result = scan_gammas(ctx, grid)

    n = instance.n
    records: Dict[str, Any] = {
        'seed': instance.seed,
        'generator': generator.kind,
        'n': n,
        'sigma': generator.sigma,
        'p': instance.samples.p,
        'alpha': instance.alpha,
        'penalty': scan.penalty,
    }
    records.update(result.roots())
    records['gamma_half_mismatch'] = result.diagnostics.get('gamma_half_mismatch')
    records['gamma_cross_infinite'] = _finite_or_none(predict_gamma_cross_infinite(instance.J_tr).value)

    l_test_at_opt = None
    if result.gamma_opt is not None:
        if scan.penalty == "l1":
            l_test_at_opt = likelihood_triple(map_l1(instance.C_emp, instance.alpha, result.gamma_opt),
                                              C_tr=C_tr).l_test
        else:
            l_test_at_opt = ctx.triple(result.gamma_opt).l_test
    records['l_test_at_opt'] = l_test_at_opt
    records['likelihood_gap'] = (likelihood_gap(l_test_at_opt, instance.model) / n
                                 if l_test_at_opt is not None else None)

    if instance.samples.p == 1:
        rescaled = float(sample_overlaps(instance.samples.data, C_tr, rescaled=True)[0])
        unrescaled = float(sample_overlaps(instance.samples.data, C_tr, rescaled=False)[0])
        theta = rescaled if rescaled_overlap else unrescaled
        regime = "ferro" if generator.sigma > 1 else "disordered"
        result.theta = theta
        records['theta_rescaled'] = rescaled
        records['theta_unrescaled'] = unrescaled
        try:
            prediction = small_alpha_predictions(min(theta, 1.0), n, regime)
            records['gamma_small_alpha'] = _finite_or_none(prediction.value)
        except InvalidInputError as e:
            logger.warning(f"Seed {instance.seed}: no single-sample prediction ({e})")
            records['gamma_small_alpha'] = None
    return result, records


def _likelihood_panel(frames: List[pd.DataFrame], gamma_column: str, title: str,
                      lines: Dict[str, Optional[float]]) -> PlotPanel:
    """Seed-averaged per-site likelihoods against gamma."""
    stacked = pd.concat(frames)
    mean = stacked.groupby(gamma_column, sort=True).mean(numeric_only=True)
    series = [
        Series(label=label, x=mean.index.to_numpy(), y=mean[f"{column}_per_site"].to_numpy())
        for column, label in (('l_train', 'train'), ('l_test', 'test'), ('l_gen', 'generated'))
    ]
    return PlotPanel(title=title, x_label=gamma_column, y_label="log-likelihood / n",
                     series=series, vertical_lines=lines)


def _mean_of(records: List[Dict[str, Any]], key: str) -> Optional[float]:
    values = [r.get(key) for r in records]
    values = [float(v) for v in values if v is not None and math.isfinite(float(v))]
    return float(np.mean(values)) if values else None


class ExperimentRunner:
    """Runs configured experiments and writes their outputs."""

    def __init__(self, config: ExperimentConfig, output_dir: Optional[Path] = None, jobs: int = 1,
                 formats: Optional[Sequence[str]] = None, show_progress: bool = True,
                 verbose: bool = False):
        self.config = config
        self.output_dir = Path(output_dir) if output_dir else config.outputs.root()
        self.jobs = max(1, int(jobs))
        self.formats = list(formats) if formats else list(config.outputs.formats)
        self.show_progress = show_progress
        self.verbose = verbose
        self.config_hash = config.config_hash()
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    # --- fan-out ---------------------------------------------------------------------

    def _run_seed(self, fn: Callable[[int], SeedOutcome], seed: int) -> SeedOutcome:
        try:
            return fn(seed)
        except Exception as e:
            self.logger.warning(f"Seed {seed} failed: {type(e).__name__}: {e}")
            if self.verbose:
                self.logger.debug(traceback.format_exc())
            return SeedOutcome(seed=seed, error=f"{type(e).__name__}: {e}")

    def fan_out(self, fn: Callable[[int], SeedOutcome], seeds: Sequence[int], label: str) -> List[SeedOutcome]:
        """Run fn for every seed and return the outcomes ordered by seed."""
        progress = None
        if tqdm and self.show_progress:
            progress = tqdm(total=len(seeds), desc=label, unit="seed")
        outcomes = []
        if self.jobs > 1 and len(seeds) > 1:
            with ThreadPoolExecutor(max_workers=self.jobs) as executor:
                futures = {executor.submit(self._run_seed, fn, seed): seed for seed in seeds}
                for future in as_completed(futures):
                    outcomes.append(future.result())
                    if progress:
                        progress.update(1)
        else:
            for seed in seeds:
                outcomes.append(self._run_seed(fn, seed))
                if progress:
                    progress.update(1)
        if progress:
            progress.close()
        order = {seed: k for k, seed in enumerate(seeds)}
        return sorted(outcomes, key=lambda o: order[o.seed])

    def _finish(self, kind: str, outcomes: List[SeedOutcome], extra: Sequence[RunArtifacts] = (),
                formats: Optional[Sequence[str]] = None) -> RunReport:
        report = RunReport(kind=kind, config_hash=self.config_hash, outcomes=outcomes)
        report.errors = [f"seed {o.seed}: {o.error}" for o in outcomes if not o.ok]
        artifacts = [a for o in outcomes if o.ok for a in o.artifacts] + list(extra)
        report.export = BatchExporter(self.output_dir).export_runs(artifacts, formats or self.formats)
        report.errors.extend(report.export.errors)
        if report.all_failed:
            self.logger.error(f"{kind}: all {len(outcomes)} seeds failed")
        else:
            self.logger.info(f"{kind}: {len(report.succeeded)}/{len(outcomes)} seeds succeeded")
        return report

    # --- generation ------------------------------------------------------------------

    def _generate_seed(self, seed: int) -> SeedOutcome:
        gen = self.config.generator
        instance = build_gaussian_instance(gen, self.config.sampling, seed)
        j_values = instance.J_tr.eigenvalues()
        c_values = np.linalg.eigvalsh(instance.C_emp)[::-1]
        table = pd.DataFrame({'index': np.arange(instance.n), 'eigenvalue_j_tr': j_values,
                              'eigenvalue_c_emp': c_values,
                              'eigenvalue_c_tr': np.linalg.eigvalsh(instance.model.covariance)[::-1]})
        prediction = predict_gamma_cross_infinite(instance.J_tr)
        records = {
            'seed': seed,
            'generator': gen.kind,
            'n': instance.n,
            'sigma': gen.sigma,
            'p': instance.samples.p,
            'alpha': instance.alpha,
            'frobenius_sq': instance.J_tr.frobenius_sq(),
            'largest_eigenvalue': float(j_values[0]),
            'mu_true': instance.model.mu,
            'outlier_fraction': spectral_outlier_fraction(j_values, 2.0 * gen.sigma) if gen.kind == "goe" else None,
            'gamma_cross_infinite': _finite_or_none(prediction.value),
            'largest_covariance_eigenvalue_predicted': largest_covariance_eigenvalue_prediction(gen.n, gen.sigma),
            'largest_covariance_eigenvalue': float(np.max(np.linalg.eigvalsh(instance.model.covariance))),
        }
        artifacts = RunArtifacts(
            name=f"generate_seed{seed}", kind="generate", config_hash=self.config_hash,
            table=table, summary=records,
            matrices={'j_tr': instance.J_tr.entries, 'c_tr': instance.model.covariance,
                      'c_emp': instance.C_emp, 'samples': instance.samples.data},
        )
        return SeedOutcome(seed=seed, records=records, artifacts=[artifacts])

    def generate(self) -> RunReport:
        """Ground truth, covariances and training samples for every seed."""
        outcomes = self.fan_out(self._generate_seed, self.config.sampling.seeds, "generate")
        return self._finish("generate", outcomes)

    # --- Gaussian scans --------------------------------------------------------------

    def _scan_seed(self, seed: int) -> SeedOutcome:
        cfg = self.config
        instance = build_gaussian_instance(cfg.generator, cfg.sampling, seed)
        result, records = scan_instance(instance, cfg.scan, cfg.generator,
                                        rescaled_overlap=cfg.sampling.rescale_trace)
        gamma_column = "gamma1" if cfg.scan.penalty == "l1" else "gamma"
        frame = result.to_frame(n=instance.n, gamma_column=gamma_column)
        frame.insert(0, 'seed', seed)
        artifacts = RunArtifacts(name=f"scan_seed{seed}", kind="scan", config_hash=self.config_hash, table=frame)
        self.logger.info(f"Seed {seed}: gamma_opt={records['gamma_opt']}, gamma_cross={records['gamma_cross']}, "
                         f"gamma_half={records['gamma_half']}")
        return SeedOutcome(seed=seed, records=records, artifacts=[artifacts],
                           extras={'frame': frame, 'scan': result})

    def _scan_summary(self, outcomes: List[SeedOutcome], name: str) -> RunArtifacts:
        cfg = self.config
        good = [o.records for o in outcomes if o.ok]
        summary: Dict[str, Any] = {
            'generator': cfg.generator.kind,
            'n': cfg.generator.n,
            'sigma': cfg.generator.sigma,
            'penalty': cfg.scan.penalty,
            'seeds': [o.seed for o in outcomes],
            'failed_seeds': [o.seed for o in outcomes if not o.ok] or None,
        }
        keys = ('gamma_opt', 'gamma_cross', 'gamma_half', 'gamma_half_mismatch', 'gamma_cross_infinite',
                'likelihood_gap', 'theta_rescaled', 'theta_unrescaled', 'gamma_small_alpha')
        for record in good:
            summary[f"seed{record['seed']}_alpha"] = record['alpha']
            for key in keys:
                if key in record:
                    summary[f"seed{record['seed']}_{key}"] = record[key]
        for key in keys:
            if any(key in r for r in good):
                summary[f"mean_{key}"] = _mean_of(good, key)

        panels = []
        frames = [o.extras['frame'] for o in outcomes if o.ok]
        if frames:
            gamma_column = "gamma1" if cfg.scan.penalty == "l1" else "gamma"
            lines = {
                'gamma_opt': summary.get('mean_gamma_opt'),
                'gamma_cross': summary.get('mean_gamma_cross'),
                'gamma_half': summary.get('mean_gamma_half'),
            }
            if cfg.scan.penalty == "l2":
                lines['n / sum J_tr^2'] = summary.get('mean_gamma_cross_infinite')
            panels.append(_likelihood_panel(frames, gamma_column,
                                            f"{cfg.generator.kind} n={cfg.generator.n} sigma={cfg.generator.sigma}",
                                            lines))
        return RunArtifacts(name=name, kind="scan_summary", config_hash=self.config_hash,
                            summary=summary, panels=panels)

    def run_gaussian_scan(self, formats: Optional[Sequence[str]] = None, name: str = "scan") -> RunReport:
        """Per-seed likelihood scans, root summaries and the likelihood figure."""
        outcomes = self.fan_out(self._scan_seed, self.config.sampling.seeds, "scan")
        extra = [self._scan_summary(outcomes, name)] if any(o.ok for o in outcomes) else []
        return self._finish("scan", outcomes, extra, formats)

    def find_gammas(self) -> RunReport:
        """Located roots and predictions only, as a summary record."""
        return self.run_gaussian_scan(formats=["summary"], name="gammas")

    # --- Potts -----------------------------------------------------------------------

    def _potts_seed(self, seed: int) -> SeedOutcome:
        spec = self.config.potts
        streams = seed_streams(seed)
        truth = generate_er_potts(spec.n, spec.q, spec.d, sigma_h=math.sqrt(spec.field_variance),
                                  sigma_j=math.sqrt(spec.coupling_variance), seed=streams['couplings'])
        mcmc = {'burn_in': spec.burn_in, 'thinning': spec.thinning, 'num_chains': spec.chains}
        train = mcmc_sample(truth, spec.p, seed=streams['samples'], **mcmc)
        test = mcmc_sample(truth, spec.p_test, seed=streams['test_samples'], **mcmc) if spec.likelihoods else None

        method = spec.kl_method
        if method == "auto":
            method = "exact" if can_enumerate(spec.n, spec.q) else "mc"
        enumerable = can_enumerate(spec.n, spec.q)

        def log_z(params):
            if enumerable:
                return exact_log_z(params), 0.0
            ais = ais_log_z(params, num_temps=spec.ais_temps, num_chains=spec.ais_chains, seed=streams['ais'])
            return ais.estimate, ais.stderr

        log_z_truth = log_z(truth)[0] if method == "mc" else None
        rows = []
        for gamma in log_grid(spec.gamma_min, spec.gamma_max, spec.points):
            inferred = plm_infer(train, gamma, gamma_h=spec.gamma_h(gamma), tol=spec.plm_tol,
                                 max_iter=spec.plm_max_iter)
            row = {'gamma': float(gamma), 'gamma_h': spec.gamma_h(gamma),
                   'coupling_norm_sq': float(np.sum(np.triu(np.sum(inferred.J ** 2, axis=(2, 3)), k=1)))}
            log_z_inferred = None
            if spec.likelihoods or method == "mc":
                log_z_inferred, log_z_se = log_z(inferred)
                row['log_z'] = log_z_inferred
                row['log_z_stderr'] = log_z_se
            kl = kl_divergence(inferred, truth, method=method, budget=spec.kl_budget, seed=streams['generated'],
                               log_z_inferred=log_z_inferred, log_z_truth=log_z_truth, **mcmc)
            row.update(kl.to_dict())
            if spec.likelihoods:
                gen = generated_samples(inferred, spec.p_gen, seed=streams['generated'], **mcmc)
                row.update(potts_likelihoods(inferred, train, test, gen, log_z_inferred, gamma=float(gamma)).to_dict())
                row.pop('alpha', None)
                row['gamma'] = float(gamma)
            self.logger.debug(f"Seed {seed}: gamma={gamma:.4g}, KL={kl.value:.6f}")
            rows.append(row)

        frame = pd.DataFrame(rows)
        frame.insert(0, 'seed', seed)
        argmin = kl_argmin(frame['gamma'], frame['kl'])
        records = {
            'seed': seed,
            'n': spec.n,
            'q': spec.q,
            'd': spec.d,
            'p': spec.p,
            'edges': len(truth.edges()),
            'kl_method': method,
            'kl_argmin': argmin,
            'kl_min': float(frame['kl'].min()),
            'prediction_inverse_degree': 1.0 / spec.d if spec.d > 0 else None,
        }
        artifacts = [RunArtifacts(name=f"potts_seed{seed}", kind="potts_scan",
                                  config_hash=self.config_hash, table=frame)]
        self.logger.info(f"Seed {seed}: KL argmin={argmin}, 1/d={records['prediction_inverse_degree']}")
        return SeedOutcome(seed=seed, records=records, artifacts=artifacts,
                           extras={'frame': frame, 'truth': truth, 'train': train})

    def run_potts_scan(self) -> RunReport:
        """KL (and optionally likelihoods) of PLM estimates over a gamma grid."""
        spec = self.config.potts
        outcomes = self.fan_out(self._potts_seed, self.config.sampling.seeds, "potts-scan")
        good = [o.records for o in outcomes if o.ok]
        extra = []
        if good:
            summary = {
                'n': spec.n, 'q': spec.q, 'd': spec.d, 'p': spec.p,
                'seeds': [o.seed for o in outcomes],
                'failed_seeds': [o.seed for o in outcomes if not o.ok] or None,
                'kl_method': good[0]['kl_method'],
            }
            for record in good:
                summary[f"seed{record['seed']}_kl_argmin"] = record['kl_argmin']
                summary[f"seed{record['seed']}_kl_min"] = record['kl_min']
            summary['mean_kl_argmin'] = _mean_of(good, 'kl_argmin')
            summary['prediction_inverse_degree'] = 1.0 / spec.d if spec.d > 0 else None

            frames = pd.concat([o.extras['frame'] for o in outcomes if o.ok])
            mean = frames.groupby('gamma', sort=True).mean(numeric_only=True)
            panels = [PlotPanel(title=f"Potts n={spec.n} q={spec.q} d={spec.d} p={spec.p}",
                                x_label="gamma", y_label="KL divergence",
                                series=[Series("KL", mean.index.to_numpy(), mean['kl'].to_numpy(), "o-")],
                                vertical_lines={'1/d': summary['prediction_inverse_degree'],
                                                'argmin': summary['mean_kl_argmin']},
                                log_y=bool((mean['kl'] > 0).all()))]
            if spec.likelihoods:
                panels.append(PlotPanel(
                    title="log-likelihoods / n", x_label="gamma", y_label="log-likelihood / n",
                    series=[Series(label, mean.index.to_numpy(), mean[column].to_numpy())
                            for column, label in (('l_train', 'train'), ('l_test', 'test'), ('l_gen', 'generated'))],
                ))
            extra.append(RunArtifacts(name="potts_scan", kind="potts_summary", config_hash=self.config_hash,
                                      summary=summary, panels=panels))
        report = self._finish("potts_scan", outcomes, extra)
        if "matrix" in self.formats:
            self._write_potts_inputs(outcomes, report)
        return report

    def _write_potts_inputs(self, outcomes: List[SeedOutcome], report: RunReport) -> None:
        """Ground-truth parameters (YAML) and training samples (CSV) of every good seed."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        for outcome in outcomes:
            if not outcome.ok:
                continue
            paths = [self.output_dir / f"potts_truth_seed{outcome.seed}.yaml",
                     self.output_dir / f"potts_train_seed{outcome.seed}.csv"]
            try:
                write_potts_params(paths[0], outcome.extras['truth'], self.config_hash)
                write_potts_samples(paths[1], outcome.extras['train'], self.config_hash)
            except OSError as e:
                self.logger.error(f"Seed {outcome.seed}: could not write Potts inputs: {e}")
                report.errors.append(f"seed {outcome.seed}: {e}")
                continue
            if report.export:
                report.export.extra_paths.extend(paths)

    # --- posterior -------------------------------------------------------------------

    def _posterior_seed(self, seed: int) -> SeedOutcome:
        cfg = self.config
        spec = cfg.posterior
        instance = build_gaussian_instance(cfg.generator, cfg.sampling, seed)
        solution = solve_map(instance.C_emp, instance.alpha, spec.gamma)
        chain_seeds = instance.streams['posterior'].integers(2 ** 63, size=len(spec.betas))
        artifacts, records = [], {'seed': seed, 'n': instance.n, 'alpha': instance.alpha, 'gamma': spec.gamma}
        for k, (beta, chain_seed) in enumerate(zip(spec.betas, chain_seeds)):
            trace = metropolis_posterior(
                instance.C_emp, instance.model.covariance, instance.alpha, spec.gamma, beta,
                steps=spec.steps, proposal_scale=spec.proposal_scale, proposal_sparsity=spec.sparsity,
                seed=int(chain_seed), burn_in=spec.burn_in, record_every=spec.record_every,
                init=spec.init, tune=spec.tune, solution=solution,
            )
            name = f"posterior_seed{seed}_beta{k}"
            relative = trace.relative_to()
            panels = []
            if len(trace):
                steps = relative['step'].to_numpy()
                panels = [
                    PlotPanel(title=f"beta = {beta:g}", x_label="step", y_label="train energy - MAP",
                              series=[Series("train", steps, relative['train_energy'].to_numpy())],
                              horizontal_lines={'MAP': 0.0}, log_x=False),
                    PlotPanel(title="", x_label="step", y_label="|J - J*|",
                              series=[Series("distance", steps, relative['distance'].to_numpy())], log_x=False),
                    PlotPanel(title="", x_label="step", y_label="test energy - MAP",
                              series=[Series("test", steps, relative['test_energy'].to_numpy())],
                              horizontal_lines={'MAP': 0.0}, log_x=False),
                ]
            artifacts.append(RunArtifacts(name=name, kind="posterior", config_hash=self.config_hash,
                                          table=trace.to_frame(), panels=panels))
            prefix = f"beta{k}"
            records[f"{prefix}_beta"] = float(beta)
            records[f"{prefix}_map_train_energy"] = trace.map_train_energy
            records[f"{prefix}_map_test_energy"] = trace.map_test_energy
            if len(trace):
                train = trace.column('train_energy')
                test = trace.column('test_energy')
                records[f"{prefix}_mean_train_energy"] = float(np.mean(train[train.size // 2:]))
                records[f"{prefix}_min_test_energy"] = float(test.min())
                records[f"{prefix}_test_below_map"] = bool(test.min() < trace.map_test_energy)
                records[f"{prefix}_final_distance"] = float(trace.column('distance')[-1])
                records[f"{prefix}_acceptance"] = float(trace.column('acceptance')[-1])
                records[f"{prefix}_stationarity_z"] = stationarity_zscore(train)
            records[f"{prefix}_rejected_solves"] = trace.rejected_solves
        return SeedOutcome(seed=seed, records=records, artifacts=artifacts)

    def run_posterior(self) -> RunReport:
        """Metropolis traces at every configured beta."""
        outcomes = self.fan_out(self._posterior_seed, self.config.sampling.seeds, "posterior")
        extra = []
        good = [o.records for o in outcomes if o.ok]
        if good:
            summary = {'seeds': [o.seed for o in outcomes], 'betas': self.config.posterior.betas}
            for record in good:
                summary.update({f"seed{record['seed']}_{k}": v for k, v in record.items() if k != 'seed'})
            extra.append(RunArtifacts(name="posterior", kind="posterior_summary",
                                      config_hash=self.config_hash, summary=summary))
        return self._finish("posterior", outcomes, extra)


# --- figure presets ----------------------------------------------------------------


def _preset(base: Optional[ExperimentConfig], sections: Dict[str, Dict[str, Any]]) -> ExperimentConfig:
    data = deepcopy(base.to_dict()) if base else ExperimentConfig().to_dict()
    for section, values in sections.items():
        data.setdefault(section, {}).update(values)
    return ExperimentConfig.from_dict(data)


def _sweep_artifacts(name: str, config_hash: str, frame: pd.DataFrame, x: str, group: str,
                     curves: Dict[str, str], title: str, log_y: bool = True) -> RunArtifacts:
    """Seed-averaged curves of several columns against x, one line per group value."""
    series = []
    for value, part in frame.groupby(group, sort=True):
        mean = part.groupby(x, sort=True).mean(numeric_only=True)
        for column, style in curves.items():
            if column in mean and mean[column].notna().any():
                series.append(Series(f"{column} ({group}={value})", mean.index.to_numpy(),
                                     mean[column].to_numpy(), style))
    panel = PlotPanel(title=title, x_label=x, y_label="gamma", series=series, log_y=log_y)
    return RunArtifacts(name=name, kind="figure", config_hash=config_hash, table=frame, panels=[panel])


def reproduce_figure(figure: int, output_dir: Optional[Path] = None, jobs: int = 1,
                     seeds: Optional[Sequence[int]] = None, show_progress: bool = True,
                     base: Optional[ExperimentConfig] = None,
                     formats: Optional[Sequence[str]] = None) -> List[RunReport]:
    """Run the desk-scale preset behind one of the reference figures.

    Args:
        figure: One of 2 (likelihoods vs gamma), 4 (roots vs alpha), 5 (structured couplings),
            6 (L1 penalty), 8 (single-sample regime) or 9 (posterior sampling).
        output_dir: Output root; a fig<k> subdirectory is used.
        jobs: Worker threads for the seed fan-out.
        seeds: Seeds to run; preset defaults otherwise.
        show_progress: Display progress bars.
        base: Configuration whose remaining values the preset starts from.
        formats: Output formats; defaults to csv, summary and svg.

    Returns:
        One RunReport per sub-run.
    """
    if figure not in FIGURES:
        raise InvalidInputError(f"No preset for figure {figure}; available: {FIGURES}")
    root = Path(output_dir) if output_dir else (base.outputs.root() if base else ExperimentConfig().outputs.root())
    out = root / f"fig{figure}"
    seed_list = list(seeds) if seeds else [0, 1, 2]
    sampling = {'seeds': seed_list, 'p': None}
    formats = list(formats) if formats else ["csv", "summary", "svg"]
    reports: List[RunReport] = []

    def runner(cfg: ExperimentConfig, sub: str) -> ExperimentRunner:
        return ExperimentRunner(cfg, output_dir=out / sub, jobs=jobs, formats=formats, show_progress=show_progress)

    if figure == 2:
        for alpha in (1.0, 10.0):
            cfg = _preset(base, {'generator': {'kind': 'goe', 'n': 100, 'sigma': 0.5},
                                 'sampling': dict(sampling, alpha=alpha), 'scan': {'penalty': 'l2'}})
            reports.append(runner(cfg, f"alpha{alpha:g}").run_gaussian_scan())

    elif figure == 4:
        rows = []
        for sigma in (0.3, 0.5, 1.0):
            for alpha in (1.0, 3.0, 10.0, 30.0):
                cfg = _preset(base, {'generator': {'kind': 'goe', 'n': 100, 'sigma': sigma},
                                     'sampling': dict(sampling, alpha=alpha), 'scan': {'penalty': 'l2'}})
                report = runner(cfg, f"sigma{sigma:g}_alpha{alpha:g}").run_gaussian_scan(formats=["summary"])
                reports.append(report)
                rows.extend(o.records for o in report.succeeded)
        if rows:
            frame = pd.DataFrame(rows)
            cols = ['sigma', 'alpha', 'seed', 'gamma_opt', 'gamma_cross', 'gamma_cross_infinite', 'likelihood_gap']
            artifacts = _sweep_artifacts("fig4_sweep", reports[0].config_hash, frame[cols], "alpha", "sigma",
                                         {'gamma_opt': 'o-', 'gamma_cross': 's--', 'gamma_cross_infinite': ':'},
                                         "gamma_opt and gamma_cross against alpha")
            gap = frame.groupby(['sigma', 'alpha'], sort=True)['likelihood_gap'].mean().reset_index()
            artifacts.panels.append(PlotPanel(
                title="likelihood gap", x_label="alpha", y_label="delta L / n",
                series=[Series(f"sigma={s}", part['alpha'].to_numpy(), part['likelihood_gap'].to_numpy(), "o-")
                        for s, part in gap.groupby('sigma')],
            ))
            export = BatchExporter(out).export_run(artifacts, formats)
            reports.append(RunReport(kind="figure", config_hash=artifacts.config_hash, export=export,
                                     errors=list(export.errors)))

    elif figure == 5:
        for kind in ("band", "ring"):
            cfg = _preset(base, {'generator': {'kind': kind, 'n': 100, 'sigma': 0.5, 'w': 10},
                                 'sampling': dict(sampling, alpha=10.0), 'scan': {'penalty': 'l2'}})
            reports.append(runner(cfg, kind).run_gaussian_scan())

    elif figure == 6:
        cfg = _preset(base, {'generator': {'kind': 'goe', 'n': 50, 'sigma': 0.5},
                             'sampling': dict(sampling, alpha=4.0),
                             'scan': {'penalty': 'l1', 'gamma_min': 1e-3, 'gamma_max': 10.0, 'points': 31}})
        reports.append(runner(cfg, "l1").run_gaussian_scan())

    elif figure == 8:
        rows = []
        many = list(seeds) if seeds else list(range(20))
        for sigma in (0.5, 2.0):
            cfg = _preset(base, {'generator': {'kind': 'goe', 'n': 200, 'sigma': sigma},
                                 'sampling': {'seeds': many, 'p': 1, 'rescale_trace': True},
                                 'scan': {'penalty': 'l2', 'gamma_min': 1e-2, 'gamma_max': 1e3}})
            report = runner(cfg, f"sigma{sigma:g}").run_gaussian_scan(formats=["summary"])
            reports.append(report)
            rows.extend(o.records for o in report.succeeded)
        if rows:
            frame = pd.DataFrame(rows)
            cols = ['sigma', 'seed', 'theta_rescaled', 'theta_unrescaled', 'gamma_opt', 'gamma_cross',
                    'gamma_small_alpha']
            frame = frame[[c for c in cols if c in frame]]
            series = []
            for sigma, part in frame.groupby('sigma'):
                valid = part.dropna(subset=['gamma_opt', 'gamma_small_alpha'])
                series.append(Series(f"sigma={sigma}", valid['gamma_small_alpha'].to_numpy(),
                                     valid['gamma_opt'].to_numpy(), "o"))
            panel = PlotPanel(title="single-sample gamma_opt against prediction", x_label="predicted gamma",
                              y_label="gamma_opt", series=series, log_y=True)
            artifacts = RunArtifacts(name="fig8_single_sample", kind="figure", config_hash=reports[0].config_hash,
                                     table=frame, panels=[panel])
            export = BatchExporter(out).export_run(artifacts, formats)
            reports.append(RunReport(kind="figure", config_hash=artifacts.config_hash, export=export,
                                     errors=list(export.errors)))

    elif figure == 9:
        n = 20
        cfg = _preset(base, {'generator': {'kind': 'goe', 'n': n, 'sigma': 0.5},
                             'sampling': dict(sampling, alpha=5.0, seeds=seed_list[:1]),
                             'posterior': {'gamma': 5.0, 'betas': [10.0 * n, 100.0 * n, 1000.0 * n],
                                           'steps': 5000, 'burn_in': 0, 'record_every': 10,
                                           'init': 'gaussian', 'tune': False}})
        reports.append(runner(cfg, "posterior").run_posterior())

    logger.info(f"Figure {figure}: {len(reports)} runs written under {out}")
    return reports
