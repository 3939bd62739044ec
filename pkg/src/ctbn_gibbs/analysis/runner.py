"""
Experiment orchestration: chains, reference values and error tables.

Chains are independent jobs. They run in-process for a single worker and on
a process pool otherwise; results are always ordered by chain index so the
output does not depend on scheduling.
"""

import asyncio
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import UnsupportedEvidenceError
from ..exact.bridge import exact_sufficient_stats
from ..models.ctbn_model import CTBNModel
from ..models.evidence import Evidence
from ..models.trajectory import JointTrajectory
from ..sampler.forward import DEFAULT_DEPTH
from ..sampler.gibbs import GibbsSampler, SweepOrder
from ..sampler.timeline import count_blanket_intervals
from ..stats.sufficient_stats import accumulate_stats, relative_error, trajectory_log_likelihood
from ..storage.result_store import ResultStore
from .config import ExperimentConfig, ExperimentKind, NetworkSpec
from .evidence_sets import make_evidence
from .networks import generate_chain_network, generate_timescale_network, sharpen

logger = logging.getLogger(__name__)

SCALING_COMPONENTS = 5
DISCARD_FRACTION = 0.2
EVIDENCE_STREAM = 1_000_000


@dataclass(frozen=True)
class ChainJob:
    """One Gibbs chain: burn in, then record n_samples sweeps spaced by thinning."""

    index: int
    model: CTBNModel
    evidence: Evidence
    seed: np.random.SeedSequence
    burn_in: int
    n_samples: int
    thinning: int = 1
    order: SweepOrder = SweepOrder.SYSTEMATIC
    depth: int = DEFAULT_DEPTH
    components: Optional[Tuple[int, ...]] = None
    keep_samples: bool = False


@dataclass
class ChainResult:
    """Per-sample records of one chain (rows follow the recorded samples).

    ``clock`` holds the seconds since the chain started at which each sample
    was recorded.
    """

    index: int
    stats: np.ndarray
    log_likelihood: np.ndarray
    transitions: np.ndarray
    blanket_intervals: np.ndarray
    clock: np.ndarray
    elapsed: float
    samples: List[JointTrajectory] = field(default_factory=list)


def run_chain_job(job: ChainJob) -> ChainResult:
    """Run a chain to completion; top-level so worker processes can import it."""
    started = time.perf_counter()
    model = job.model
    M = model.num_components
    sampler = GibbsSampler(
        model, job.evidence, rng=np.random.default_rng(job.seed), order=job.order, depth=job.depth
    )

    stats_rows, log_likelihood, transitions, intervals, clock, samples = [], [], [], [], [], []
    for joint in sampler.iterate(job.burn_in, job.n_samples, job.thinning):
        clock.append(time.perf_counter() - started)
        stats_rows.append(accumulate_stats(model, joint).flatten(job.components))
        log_likelihood.append(trajectory_log_likelihood(model, joint))
        transitions.append([joint.total_transitions(i) for i in range(M)])
        intervals.append([count_blanket_intervals(model, i, joint) for i in range(M)])
        if job.keep_samples:
            samples.append(joint)

    elapsed = time.perf_counter() - started
    logger.debug(f"Chain {job.index} finished {sampler.sweeps_done} sweeps in {elapsed:.2f}s")
    width = len(stats_rows[0]) if stats_rows else 0
    return ChainResult(
        index=job.index,
        stats=np.array(stats_rows).reshape(len(stats_rows), width),
        log_likelihood=np.array(log_likelihood),
        transitions=np.array(transitions, dtype=float).reshape(len(transitions), M),
        blanket_intervals=np.array(intervals, dtype=float).reshape(len(intervals), M),
        clock=np.array(clock),
        elapsed=elapsed,
        samples=samples,
    )


def make_jobs(
    model: CTBNModel,
    evidence: Evidence,
    seed: np.random.SeedSequence,
    chains: int,
    burn_in: int,
    n_samples: int,
    thinning: int = 1,
    **options: Any,
) -> List[ChainJob]:
    """One job per chain, each with its own spawned random stream."""
    return [
        ChainJob(
            index=k,
            model=model,
            evidence=evidence,
            seed=stream,
            burn_in=burn_in,
            n_samples=n_samples,
            thinning=thinning,
            **options,
        )
        for k, stream in enumerate(seed.spawn(chains))
    ]


async def run_jobs(jobs: Sequence[ChainJob], workers: int = 1) -> List[ChainResult]:
    """Run chain jobs, in-process or on a process pool, ordered by index."""
    if workers <= 1 or len(jobs) <= 1:
        results = [run_chain_job(job) for job in jobs]
    else:
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(
                await asyncio.gather(
                    *(loop.run_in_executor(pool, run_chain_job, job) for job in jobs)
                )
            )
    return sorted(results, key=lambda result: result.index)


def sample_rows(burn_in: int, n_samples: int, thinning: int) -> np.ndarray:
    """Sweep rows (0-based, every sweep recorded) holding samples 1..n after burn_in."""
    return burn_in + thinning * np.arange(1, n_samples + 1) - 1


def retained_rows(sweeps: int, discard: float = DISCARD_FRACTION) -> np.ndarray:
    """Sweep rows kept after dropping the first ``discard`` share of ``sweeps``."""
    return np.arange(int(discard * sweeps), sweeps)


def iteration_frame(results: Sequence[ChainResult]) -> pd.DataFrame:
    """Per-sweep, per-component means over chains.

    One row per (iteration, component) with the mean sampled transition
    count, the mean number of Markov-blanket intervals and the mean time
    since the chains started.
    """
    transitions = np.stack([result.transitions for result in results]).mean(axis=0)
    intervals = np.stack([result.blanket_intervals for result in results]).mean(axis=0)
    clock = np.stack([result.clock for result in results]).mean(axis=0)
    sweeps, M = transitions.shape
    return pd.DataFrame({
        "iteration": np.repeat(np.arange(1, sweeps + 1), M),
        "component": np.tile(np.arange(M), sweeps),
        "transitions": transitions.reshape(-1),
        "blanket_intervals": intervals.reshape(-1),
        "elapsed": np.repeat(clock, M),
    })


class ExperimentRunner:
    """Reproduces the convergence studies described by an ExperimentConfig."""

    def __init__(self, config: ExperimentConfig, store: Optional[ResultStore] = None):
        self.config = config
        self.store = store if store is not None else ResultStore(config.output)

    def seed_sequence(self, *key: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.config.seed, spawn_key=key)

    async def build_model(self, spec: Optional[NetworkSpec] = None) -> CTBNModel:
        spec = spec or self.config.network
        if spec.generator == "file":
            assert spec.path is not None
            return await self.store.load_model(spec.path)
        if spec.generator == "timescale":
            return generate_timescale_network(
                spec.components, spec.states, spec.base_rate, spec.follow_weight
            )
        return generate_chain_network(spec.components, spec.states, spec.perturb, spec.seed)

    async def build_evidence(self, model: CTBNModel, name: Optional[str] = None) -> Evidence:
        if self.config.evidence_path is not None and name is None:
            evidence = await self.store.load_evidence(self.config.evidence_path, self.config.horizon)
        else:
            rng = np.random.default_rng(self.seed_sequence(EVIDENCE_STREAM))
            evidence = make_evidence(name or self.config.evidence, model, self.config.horizon, rng)
        evidence.check_against(model)
        return evidence

    def jobs(
        self,
        model: CTBNModel,
        evidence: Evidence,
        key: int,
        chains: int,
        burn_in: int,
        n_samples: int,
        thinning: int = 1,
        components: Optional[Sequence[int]] = None,
    ) -> List[ChainJob]:
        return make_jobs(
            model,
            evidence,
            self.seed_sequence(key),
            chains,
            burn_in,
            n_samples,
            thinning,
            order=self.config.order,
            depth=self.config.depth,
            components=tuple(components) if components is not None else None,
        )

    async def compute_truth(
        self,
        model: CTBNModel,
        evidence: Evidence,
        components: Optional[Sequence[int]] = None,
        key: int = 0,
    ) -> Tuple[np.ndarray, str]:
        """Exact statistics when the oracle applies, else a long reference run."""
        config = self.config
        if model.joint_size <= config.state_space_cap:
            try:
                stats = exact_sufficient_stats(model, evidence, config.grid_n, config.state_space_cap)
                return stats.flatten(components), "exact"
            except UnsupportedEvidenceError as e:
                logger.warning(f"Exact oracle unavailable ({e}); using a reference run")
        jobs = self.jobs(
            model,
            evidence,
            EVIDENCE_STREAM + 1 + key,
            config.reference_chains,
            config.reference_burn_in,
            config.reference_sweeps,
            components=components,
        )
        results = await run_jobs(jobs, config.workers)
        truth = np.concatenate([result.stats for result in results]).mean(axis=0)
        source = (
            f"reference ({config.reference_chains} chains x {config.reference_sweeps} sweeps "
            f"after {config.reference_burn_in})"
        )
        return truth, source

    def total_sweeps(self) -> int:
        """Sweeps needed for the largest burn-in and sample count."""
        config = self.config
        return config.burn_in[-1] + config.samples[-1] * config.thinning

    async def _sweep_records(
        self, model: CTBNModel, evidence: Evidence, key: int, components: Optional[Sequence[int]]
    ) -> List[ChainResult]:
        """Every sweep of every chain, long enough for the largest burn-in and sample count."""
        config = self.config
        jobs = self.jobs(model, evidence, key, config.chains, 0, self.total_sweeps(), 1, components)
        return await run_jobs(jobs, config.workers)

    def _estimate(self, results: List[ChainResult], burn_in: int, n_samples: int) -> Tuple[np.ndarray, float]:
        rows = sample_rows(burn_in, n_samples, self.config.thinning)
        stats = np.stack([result.stats[rows] for result in results])
        log_likelihood = np.stack([result.log_likelihood[rows] for result in results])
        return stats.mean(axis=(0, 1)), float(log_likelihood.mean())

    async def error_vs_samples(self) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        config = self.config
        model = await self.build_model()
        evidence = await self.build_evidence(model)
        truth, source = await self.compute_truth(model, evidence, config.error_components)
        results = await self._sweep_records(model, evidence, 0, config.error_components)
        rows = []
        for burn_in in config.burn_in:
            for n in config.samples:
                estimate, _ = self._estimate(results, burn_in, n)
                error = relative_error(estimate, truth, config.error_threshold)
                rows.append((burn_in, n, n * config.chains, error))
        frame = pd.DataFrame(rows, columns=["burn_in", "samples_per_chain", "total_samples", "error"])
        return frame, {"truth": source}

    async def error_vs_burnin(self) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        config = self.config
        model = await self.build_model()
        evidence = await self.build_evidence(model)
        truth, source = await self.compute_truth(model, evidence, config.error_components)
        results = await self._sweep_records(model, evidence, 0, config.error_components)
        n = config.samples[-1]
        rows = []
        for burn_in in config.burn_in:
            estimate, log_likelihood = self._estimate(results, burn_in, n)
            error = relative_error(estimate, truth, config.error_threshold)
            rows.append((burn_in, n, error, log_likelihood))
        frame = pd.DataFrame(
            rows, columns=["burn_in", "samples_per_chain", "error", "mean_log_likelihood"]
        )
        return frame, {"truth": source}

    async def sharpness(self) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        config = self.config
        base = await self.build_model()
        burn_in, n = config.burn_in[-1], config.samples[-1]
        rows, sources = [], []
        for key, alpha in enumerate(config.alphas):
            model = sharpen(base, alpha)
            evidence = await self.build_evidence(model)
            truth, source = await self.compute_truth(model, evidence, config.error_components, key)
            jobs = self.jobs(
                model, evidence, key, config.chains, burn_in, n, config.thinning,
                config.error_components,
            )
            results = await run_jobs(jobs, config.workers)
            estimate = np.concatenate([result.stats for result in results]).mean(axis=0)
            mean_transitions = float(
                np.concatenate([result.transitions for result in results]).sum(axis=1).mean()
            )
            rows.append((alpha, relative_error(estimate, truth, config.error_threshold), mean_transitions))
            sources.append(source)
        frame = pd.DataFrame(rows, columns=["alpha", "error", "mean_transitions"])
        return frame, {"truth": "; ".join(sorted(set(sources))), "burn_in": burn_in, "samples": n}

    async def scaling(self) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        """Error on the first components of growing chains, by iteration and by run time.

        The main table gives the error for every (burn-in, samples) pair and
        network size. The run-time table pools all chains, drops the first
        fifth of each chain's sweeps and charges the summed chain time.
        """
        config = self.config
        curve, run_time, iterations, sources = [], [], [], []
        for key, size in enumerate(config.sizes):
            spec = config.network.model_copy(update={"components": size})
            model = await self.build_model(spec)
            evidence = await self.build_evidence(model, config.evidence)
            components = list(range(min(SCALING_COMPONENTS, size)))
            truth, source = await self.compute_truth(model, evidence, components, key)
            results = await self._sweep_records(model, evidence, key, components)
            sources.append(source)

            for burn_in in config.burn_in:
                for n in config.samples:
                    estimate, _ = self._estimate(results, burn_in, n)
                    sweeps = burn_in + n * config.thinning
                    seconds = float(np.mean([result.clock[sweeps - 1] for result in results]))
                    error = relative_error(estimate, truth, config.error_threshold)
                    curve.append((size, burn_in, n, sweeps, seconds, error))

            for sweeps in sorted({b + n * config.thinning for b in config.burn_in for n in config.samples}):
                rows = retained_rows(sweeps)
                estimate = np.concatenate([result.stats[rows] for result in results]).mean(axis=0)
                seconds = float(sum(result.clock[sweeps - 1] for result in results))
                run_time.append((size, sweeps, seconds, relative_error(estimate, truth, config.error_threshold)))

            per_iteration = iteration_frame(results)
            per_iteration.insert(0, "network_size", size)
            iterations.append(per_iteration)

        frame = pd.DataFrame(
            curve,
            columns=["network_size", "burn_in", "samples_per_chain", "iterations", "seconds", "error"],
        )
        tables = {
            "run-time": pd.DataFrame(run_time, columns=["network_size", "sweeps", "seconds", "error"]),
            "iterations": pd.concat(iterations, ignore_index=True),
        }
        return frame, {
            "truth": "; ".join(sorted(set(sources))),
            "error_components": SCALING_COMPONENTS,
            "discard": DISCARD_FRACTION,
            "tables": tables,
        }

    async def timescale(self) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        """Sampled transitions and blanket intervals per component at every sweep.

        The summary table compares the post-burn-in mean transition count of
        each component with its unconditioned expectation rate × T.
        """
        config = self.config
        spec = config.network.model_copy(update={"generator": "timescale"})
        if config.network.generator != "timescale":
            spec = spec.model_copy(update={"states": 2})
        model = await self.build_model(spec)
        evidence = await self.build_evidence(model, "e4")
        results = await self._sweep_records(model, evidence, 0, None)
        frame = iteration_frame(results)

        rows = sample_rows(config.burn_in[-1], config.samples[-1], config.thinning)
        transitions = np.concatenate([result.transitions[rows] for result in results]).mean(axis=0)
        intervals = np.concatenate([result.blanket_intervals[rows] for result in results]).mean(axis=0)
        summary = []
        for i in range(model.num_components):
            rate = float(-model.cims[i][0, 0, 0])
            expected = rate * config.horizon
            summary.append(
                (i, rate, expected, float(transitions[i]),
                 float(transitions[i] / expected - 1.0), float(intervals[i]))
            )
        summary_frame = pd.DataFrame(
            summary,
            columns=[
                "component", "exit_rate", "expected_transitions", "mean_transitions",
                "relative_difference", "mean_blanket_intervals",
            ],
        )
        return frame, {"evidence": "e4", "burn_in": config.burn_in[-1], "tables": {"summary": summary_frame}}

    async def run(self, kind: ExperimentKind) -> Path:
        """Run one study and write its table to <output>/<kind>.csv.

        Studies with secondary tables also write <output>/<kind>-<name>.csv
        under the same header.
        """
        kind = ExperimentKind(kind)
        handlers = {
            ExperimentKind.ERROR_VS_SAMPLES: self.error_vs_samples,
            ExperimentKind.ERROR_VS_BURNIN: self.error_vs_burnin,
            ExperimentKind.SHARPNESS: self.sharpness,
            ExperimentKind.SCALING: self.scaling,
            ExperimentKind.TIMESCALE: self.timescale,
        }
        config = self.config
        logger.info(f"Running experiment {kind.value} with {config.chains} chains")
        frame, metadata = await handlers[kind]()
        tables: Dict[str, pd.DataFrame] = metadata.pop("tables", {})
        header = {
            "experiment": kind.value,
            "seed": config.seed,
            "horizon": config.horizon,
            "evidence": metadata.pop("evidence", config.evidence),
            "chains": config.chains,
            **metadata,
        }
        for name, table in tables.items():
            await self.store.save_frame(table, Path(f"{kind.value}-{name}.csv"), header)
        return await self.store.save_frame(frame, Path(f"{kind.value}.csv"), header)
