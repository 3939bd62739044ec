#!/usr/bin/env python3
"""
Command-line entry point for the CTBN Gibbs sampler.

Subcommands validate model files, run Gibbs chains against evidence,
compute exact reference statistics and reproduce the convergence studies.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from .analysis.config import ExperimentKind
from .analysis.runner import ExperimentRunner, make_jobs, run_jobs
from .errors import CTBNError, ModelValidationError
from .exact.bridge import DEFAULT_GRID, exact_sufficient_stats
from .models.ctbn_model import DEFAULT_STATE_SPACE_CAP, CTBNModel, validate_model
from .sampler.forward import DEFAULT_DEPTH
from .sampler.gibbs import SweepOrder
from .stats.sufficient_stats import accumulate_stats, mean_stats
from .storage.result_store import ResultStore
from .utils.logging_config import setup_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctbn",
        description="Exact Gibbs sampling for continuous-time Bayesian networks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Check a model document
  ctbn validate model.json

  # 20 chains, 100 burn-in sweeps, 50 samples every 2 sweeps
  ctbn sample model.json evidence.json --chains 20 --burnin 100 --samples 50 --thin 2 --out run1

  # Exact expected statistics on a 4000-step grid
  ctbn exact model.json evidence.json --grid 4000 --out exact

  # Reproduce the error-vs-samples study
  ctbn experiment error-vs-samples --config study.json
        """,
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default="INFO",
        help="Logging level (default: INFO)",
    )
    parser.add_argument("--log-file", type=Path, help="Optional log file path")

    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="Check a model document")
    validate.add_argument("model", type=Path)

    sample = commands.add_parser("sample", help="Run Gibbs chains and dump samples")
    sample.add_argument("model", type=Path)
    sample.add_argument("evidence", type=Path)
    sample.add_argument("--T", dest="horizon", type=float, help="Override the evidence horizon")
    sample.add_argument("--chains", type=int, default=1)
    sample.add_argument("--burnin", type=int, default=100)
    sample.add_argument("--samples", type=int, default=100)
    sample.add_argument("--thin", type=int, default=1)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--order", choices=[o.value for o in SweepOrder], default="systematic")
    sample.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="Bisection depth")
    sample.add_argument("--workers", type=int, default=1)
    sample.add_argument("--out", type=Path, default=Path("results"), help="Output directory")

    exact = commands.add_parser("exact", help="Exact expected sufficient statistics")
    exact.add_argument("model", type=Path)
    exact.add_argument("evidence", type=Path)
    exact.add_argument("--grid", type=int, default=DEFAULT_GRID)
    exact.add_argument("--cap", type=int, default=DEFAULT_STATE_SPACE_CAP)
    exact.add_argument("--out", type=Path, default=Path("results"))

    experiment = commands.add_parser("experiment", help="Reproduce a convergence study")
    experiment.add_argument("kind", choices=[k.value for k in ExperimentKind])
    experiment.add_argument("--config", type=Path, required=True)
    experiment.add_argument("--out", type=Path, help="Override the configured output directory")
    experiment.add_argument("--workers", type=int, help="Override the configured worker count")

    return parser


async def cmd_validate(args: argparse.Namespace) -> int:
    store = ResultStore(Path.cwd())
    document = await store.load_json(args.model, ModelValidationError)
    try:
        model = CTBNModel.from_document(document, validate=False)
    except ValidationError as e:
        raise ModelValidationError(f"{args.model}: {e}") from e
    report = validate_model(model)
    print(report.summary())
    return 0 if report.is_valid else ModelValidationError.exit_code


async def cmd_sample(args: argparse.Namespace) -> int:
    store = ResultStore(args.out)
    model = await store.load_model(args.model)
    evidence = await store.load_evidence(args.evidence, args.horizon)
    evidence.check_against(model)
    evidence.observed_jumps()

    jobs = make_jobs(
        model,
        evidence,
        np.random.SeedSequence(args.seed),
        args.chains,
        args.burnin,
        args.samples,
        args.thin,
        order=SweepOrder(args.order),
        depth=args.depth,
        keep_samples=True,
    )
    results = await run_jobs(jobs, args.workers)
    samples = [joint for result in results for joint in result.samples]
    logger.info(f"Collected {len(samples)} samples from {len(results)} chains")

    await store.save_trajectories(samples, Path("trajectories.csv"), evidence.horizon, args.seed)
    if samples:
        stats = mean_stats([accumulate_stats(model, joint) for joint in samples])
        await store.save_stats(
            stats, Path("stats.csv"), {"seed": args.seed, "samples": len(samples)}
        )
    return 0


async def cmd_exact(args: argparse.Namespace) -> int:
    store = ResultStore(args.out)
    model = await store.load_model(args.model)
    evidence = await store.load_evidence(args.evidence)
    stats = exact_sufficient_stats(model, evidence, args.grid, args.cap)
    await store.save_stats(stats, Path("exact_stats.csv"), {"grid": args.grid})
    return 0


async def cmd_experiment(args: argparse.Namespace) -> int:
    config = await ResultStore(Path.cwd()).load_config(args.config)
    updates = {}
    if args.out is not None:
        updates["output"] = args.out
    if args.workers is not None:
        updates["workers"] = args.workers
    if updates:
        config = config.model_copy(update=updates)
    path = await ExperimentRunner(config).run(ExperimentKind(args.kind))
    print(f"Wrote {path}")
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "sample": cmd_sample,
    "exact": cmd_exact,
    "experiment": cmd_experiment,
}


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point for the application."""
    args = build_parser().parse_args(argv)

    setup_logging(level=args.log_level, log_file=args.log_file)

    try:
        code = asyncio.run(COMMANDS[args.command](args))
    except KeyboardInterrupt:
        print("\nInterrupted")
        sys.exit(0)
    except CTBNError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"Error: {e}")
        sys.exit(e.exit_code)
    except Exception as e:
        logger.exception("Unexpected failure")
        print(f"Error: {e}")
        sys.exit(1)
    sys.exit(code)


if __name__ == "__main__":
    main()
