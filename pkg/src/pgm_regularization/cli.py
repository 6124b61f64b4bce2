"""
Command-line interface for the pgm-regularization workbench.
"""

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path
from typing import List, Optional

from .config import OUTPUT_FORMATS, ExperimentConfig
from .exceptions import InvalidInputError
from .experiments import FIGURES, ExperimentRunner, RunReport, reproduce_figure
from .utils import load_config, parse_seed_list, setup_logging

DEFAULT_CONFIG = "config.yaml"


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "-c", "--config",
        help=f"Path to YAML configuration file (default: {DEFAULT_CONFIG} when present)",
    )
    parser.add_argument(
        "-o", "--out",
        help="Output directory (default: $PGM_REG_OUTPUT_ROOT or ./results)",
    )
    parser.add_argument(
        "--seeds",
        help="Comma separated seeds overriding the configuration, e.g. 0,1,2",
    )
    parser.add_argument(
        "-j", "--jobs",
        type=int,
        default=1,
        help="Worker threads for the seed fan-out",
    )
    parser.add_argument(
        "--format",
        help=f"Comma separated output formats from {', '.join(OUTPUT_FORMATS)}",
    )
    parser.add_argument(
        "--no-progress",
        action="store_true",
        help="Disable progress bars",
    )
    parser.add_argument(
        "-v", "--verbose",
        action="store_true",
        help="Enable verbose logging",
    )
    parser.add_argument(
        "--log-file",
        help="Also write the log to this file",
    )
    parser.add_argument(
        "--report",
        help="Write a JSON report of the run (seeds, errors, exported files) to this path",
    )


def create_parser() -> argparse.ArgumentParser:
    """Create command-line argument parser with one subcommand per experiment."""
    parser = argparse.ArgumentParser(
        prog="pgm-reg",
        description="Regularized MAP inference of pairwise graphical models",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Draw couplings and samples, write matrices and spectra
  pgm-reg generate --config experiment.yaml --format matrix,csv,summary

  # Likelihood scan over gamma with located roots, three seeds on three threads
  pgm-reg scan --config experiment.yaml --seeds 0,1,2 --jobs 3

  # Roots and predictions only
  pgm-reg find-gammas --config experiment.yaml

  # KL divergence of PLM estimates over gamma
  pgm-reg potts-scan --config potts.yaml --out results/potts

  # Posterior sampling at the configured inverse temperatures
  pgm-reg posterior --config posterior.yaml

  # Desk-scale reproduction of a reference figure
  pgm-reg reproduce-figure 4 --out results --jobs 4
        """
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    commands = {
        'generate': "Generate ground truth and training samples",
        'scan': "Scan likelihoods over the gamma grid",
        'find-gammas': "Locate gamma_opt, gamma_cross and gamma_half",
        'potts-scan': "PLM inference and KL divergence over gamma",
        'posterior': "Metropolis sampling of the coupling posterior",
    }
    for name, help_text in commands.items():
        _add_common_arguments(subparsers.add_parser(name, help=help_text, description=help_text))

    figure = subparsers.add_parser("reproduce-figure", help="Run a figure preset",
                                   description="Run the desk-scale preset of a reference figure")
    figure.add_argument("figure", type=int, choices=FIGURES, help="Figure number")
    _add_common_arguments(figure)
    return parser


def load_experiment_config(args, logger) -> ExperimentConfig:
    """Configuration file merged with command-line overrides."""
    config = {}
    if args.config:
        config = load_config(args.config)
        logger.info(f"Loaded configuration from {args.config}")
    elif Path(DEFAULT_CONFIG).exists():
        config = load_config(DEFAULT_CONFIG)
        logger.info(f"Loaded configuration from {DEFAULT_CONFIG}")
    else:
        logger.info("No configuration file found, using defaults")

    if args.seeds:
        config.setdefault('sampling', {})['seeds'] = parse_seed_list(args.seeds)
    if args.out:
        config.setdefault('outputs', {})['directory'] = args.out
    if args.format:
        config.setdefault('outputs', {})['formats'] = [f.strip() for f in args.format.split(",") if f.strip()]
    return ExperimentConfig.from_dict(config)


def report_exit_code(reports: List[RunReport], logger) -> int:
    """0 unless every seed of every run failed or nothing could be written."""
    for report in reports:
        for error in report.errors:
            logger.warning(f"{report.kind}: {error}")
        for path in report.paths:
            logger.info(f"  wrote {path}")
    if not reports or all(r.all_failed or (not r.outcomes and r.errors) for r in reports):
        return 1
    return 0


def write_run_report(path: str, reports: List[RunReport], logger) -> None:
    """Dump every report with its export results as JSON."""
    try:
        report_path = Path(path)
        report_path.parent.mkdir(parents=True, exist_ok=True)
        with open(report_path, "w", encoding="utf-8") as f:
            json.dump([r.to_dict() for r in reports], f, indent=2, default=str)
        logger.info(f"Run report saved to: {report_path}")
    except OSError as e:
        logger.error(f"Failed to save run report: {e}")


def _print_roots(report: RunReport) -> None:
    keys = ('gamma_opt', 'gamma_cross', 'gamma_half', 'gamma_cross_infinite')
    print(f"{'seed':>6} " + " ".join(f"{k:>22}" for k in keys))
    for outcome in report.outcomes:
        if not outcome.ok:
            print(f"{outcome.seed:>6} failed: {outcome.error}")
            continue
        values = [outcome.records.get(k) for k in keys]
        print(f"{outcome.seed:>6} " + " ".join(f"{'none' if v is None else format(v, '.10g'):>22}" for v in values))


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI."""
    parser = create_parser()
    args = parser.parse_args(argv)

    log_level = "DEBUG" if args.verbose else "INFO"
    setup_logging(log_level, args.log_file)

    logger = logging.getLogger(__name__)

    try:
        config = load_experiment_config(args, logger)
        problems = config.validate()
        if problems:
            for problem in problems:
                logger.error(f"Invalid configuration: {problem}")
            return 1
        logger.info(f"Configuration hash {config.config_hash()}")

        if args.command == "reproduce-figure":
            reports = reproduce_figure(
                args.figure,
                output_dir=Path(args.out) if args.out else None,
                jobs=args.jobs,
                seeds=parse_seed_list(args.seeds) if args.seeds else None,
                show_progress=not args.no_progress,
                base=config,
                formats=config.outputs.formats if args.format else None,
            )
            if args.report:
                write_run_report(args.report, reports, logger)
            return report_exit_code(reports, logger)

        runner = ExperimentRunner(config, jobs=args.jobs, show_progress=not args.no_progress,
                                  verbose=args.verbose)
        if args.command == "generate":
            report = runner.generate()
        elif args.command == "scan":
            report = runner.run_gaussian_scan()
        elif args.command == "find-gammas":
            report = runner.find_gammas()
            _print_roots(report)
        elif args.command == "potts-scan":
            report = runner.run_potts_scan()
        elif args.command == "posterior":
            report = runner.run_posterior()
        else:
            parser.error(f"Unknown command {args.command}")
            return 2
        if args.report:
            write_run_report(args.report, [report], logger)
        return report_exit_code([report], logger)

    except (FileNotFoundError, InvalidInputError) as e:
        logger.error(f"Error: {e}")
        return 1
    except Exception as e:
        logger.error(f"Error: {e}")
        if args.verbose:
            logger.error(traceback.format_exc())
        return 1


if __name__ == "__main__":
    sys.exit(main())
