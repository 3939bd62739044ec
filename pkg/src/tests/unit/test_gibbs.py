"""Unit tests for the Gibbs chain and generative simulation."""

import os

import numpy as np
import pytest

from ctbn_gibbs.analysis.runner import make_jobs, run_jobs
from ctbn_gibbs.errors import NumericalInputError
from ctbn_gibbs.exact.bridge import exact_sufficient_stats
from ctbn_gibbs.models.evidence import Evidence
from ctbn_gibbs.models.trajectory import JointTrajectory
from ctbn_gibbs.sampler.generative import simulate_forward
from ctbn_gibbs.sampler.gibbs import (
    GibbsSampler,
    SweepOrder,
    gibbs_sweep,
    initialize_trajectory,
    run_chain,
)
from ctbn_gibbs.stats.sufficient_stats import (
    accumulate_stats,
    average_relative_error,
    mean_stats,
    relative_error,
)

from .factories import random_model, trajectory


def _endpoint_evidence(horizon: float, start, end) -> Evidence:
    return Evidence(
        horizon=horizon,
        components={
            i: {"points": [{"time": 0.0, "state": a}, {"time": horizon, "state": b}]}
            for i, (a, b) in enumerate(zip(start, end))
        },
    )


def _paths(joint):
    """Comparable content of a joint trajectory."""
    return [(path.initial_state, list(path.transitions)) for path in joint.components]


def _pinned_evidence() -> Evidence:
    return Evidence(
        horizon=2.0,
        components={
            0: {"intervals": [{"start": 0.0, "end": 2.0, "state": 1}], "points": [{"time": 2.0, "state": 1}]},
            1: {
                "intervals": [
                    {"start": 0.0, "end": 0.5, "state": 0},
                    {"start": 0.5, "end": 2.0, "state": 2},
                ],
                "points": [{"time": 2.0, "state": 2}],
            },
        },
    )


class TestSimulateForward:
    """Test direct-method simulation."""

    def test_fixed_initial_state(self, chain_model):
        joint = simulate_forward(chain_model, 2.0, np.random.default_rng(0), initial_state=[2, 1])

        assert joint.state_at(0.0) == (2, 1)
        assert joint.horizon == 2.0

    def test_transition_rate_of_a_flip(self, two_state_model):
        """Stationary two-state chain: E[N] = T · 2ab / (a + b)."""
        rng = np.random.default_rng(1)
        T, a, b = 2.0, 1.5, 0.5

        counts = [simulate_forward(two_state_model, T, rng).total_transitions() for _ in range(4000)]

        assert np.mean(counts) == pytest.approx(T * 2 * a * b / (a + b), rel=0.05)

    def test_expected_statistics_match_the_oracle(self, chain_model):
        """Means over forward draws from a fixed start sit within 2 standard errors of the oracle."""
        T, start = 1.5, (0, 1)
        rng = np.random.default_rng(3)
        evidence = Evidence(
            horizon=T,
            components={i: {"points": [{"time": 0.0, "state": s}]} for i, s in enumerate(start)},
        )

        draws = np.array(
            [
                accumulate_stats(chain_model, simulate_forward(chain_model, T, rng, start)).flatten()
                for _ in range(4000)
            ]
        )
        truth = exact_sufficient_stats(chain_model, evidence, grid_n=400).flatten()

        error = np.maximum(draws.std(axis=0, ddof=1) / np.sqrt(len(draws)), 1e-9)
        z = np.abs(draws.mean(axis=0) - truth) / error
        assert np.mean(z < 2.0) >= 0.8
        assert np.all(z < 4.5)

    def test_rejects_bad_horizon(self, chain_model):
        with pytest.raises(NumericalInputError):
            simulate_forward(chain_model, 0.0, np.random.default_rng(0))


class TestInitializeTrajectory:
    """Test the overdispersed starting point."""

    def test_honours_endpoints(self, chain_model):
        evidence = _endpoint_evidence(1.5, (0, 2), (1, 1))

        joint = initialize_trajectory(chain_model, evidence, np.random.default_rng(3))

        assert joint.state_at(0.0) == (0, 2)
        assert (joint[0].final_state, joint[1].final_state) == (1, 1)

    def test_different_seeds_differ(self, chain_model):
        evidence = _endpoint_evidence(3.0, (0, 0), (1, 2))

        first = initialize_trajectory(chain_model, evidence, np.random.default_rng(1))
        second = initialize_trajectory(chain_model, evidence, np.random.default_rng(2))

        assert _paths(first) != _paths(second)

    def test_no_evidence_starts_from_initial_factors(self, two_state_model):
        rng = np.random.default_rng(4)

        starts = [
            initialize_trajectory(two_state_model, Evidence(horizon=0.5), rng)[0].initial_state
            for _ in range(2000)
        ]

        assert np.mean(starts) == pytest.approx(0.75, abs=0.04)


class TestGibbsSweep:
    """Test single sweeps."""

    def test_fully_pinned_is_a_fixed_point(self, chain_model):
        evidence = _pinned_evidence()
        rng = np.random.default_rng(0)
        joint = initialize_trajectory(chain_model, evidence, rng)

        after = gibbs_sweep(chain_model, joint, evidence, rng)

        assert _paths(after) == _paths(joint)
        assert after[1].transitions == [(0.5, 2)]

    @pytest.mark.parametrize("order", list(SweepOrder))
    def test_sweep_keeps_evidence(self, collider_model, order):
        evidence = Evidence(
            horizon=2.0,
            components={
                0: {"points": [{"time": 0.0, "state": 1}, {"time": 2.0, "state": 0}]},
                1: {"points": [{"time": 1.0, "state": 1}]},
                3: {"intervals": [{"start": 0.5, "end": 1.5, "state": 0}]},
            },
        )
        rng = np.random.default_rng(6)
        joint = initialize_trajectory(collider_model, evidence, rng)

        for _ in range(5):
            joint = gibbs_sweep(collider_model, joint, evidence, rng, order)
            assert joint[0].initial_state == 1
            assert joint[0].final_state == 0
            assert joint[1].state_at(1.0) == 1
            assert set(joint[3].states_at(np.linspace(0.5, 1.5, 25, endpoint=False)).tolist()) == {0}


class TestGibbsSampler:
    """Test chain bookkeeping."""

    def test_counts(self, chain_model):
        evidence = _endpoint_evidence(1.0, (0, 0), (1, 1))
        sampler = GibbsSampler(chain_model, evidence, seed=0)

        samples = sampler.run(burn_in=3, n_samples=4, thinning=2)

        assert len(samples) == 4
        assert sampler.sweeps_done == 3 + 4 * 2

    def test_zero_samples(self, chain_model):
        evidence = _endpoint_evidence(1.0, (0, 0), (1, 1))

        assert run_chain(chain_model, evidence, 2, 0, 1, np.random.default_rng(0)) == []

    def test_invalid_counts(self, chain_model):
        sampler = GibbsSampler(chain_model, Evidence(horizon=1.0), seed=0)

        with pytest.raises(NumericalInputError):
            sampler.run(burn_in=-1, n_samples=1)
        with pytest.raises(NumericalInputError):
            sampler.run(burn_in=0, n_samples=1, thinning=0)

    def test_same_seed_same_chain(self, chain_model):
        evidence = _endpoint_evidence(1.0, (0, 0), (1, 1))

        first = run_chain(chain_model, evidence, 2, 3, 1, np.random.default_rng(9))
        second = run_chain(chain_model, evidence, 2, 3, 1, np.random.default_rng(9))
        third = run_chain(chain_model, evidence, 2, 3, 1, np.random.default_rng(10))

        assert [_paths(s) for s in first] == [_paths(s) for s in second]
        assert [_paths(s) for s in first] != [_paths(s) for s in third]

    def test_consecutive_sweeps_without_thinning(self, chain_model):
        evidence = _endpoint_evidence(1.0, (0, 0), (1, 1))
        reference = GibbsSampler(chain_model, evidence, seed=5)
        reference.initialize()
        sweeps = [reference.sweep() for _ in range(4)]

        samples = run_chain(chain_model, evidence, 1, 3, 1, np.random.default_rng(5))

        assert [_paths(s) for s in samples] == [_paths(s) for s in sweeps[1:]]

    def test_start_from_given_trajectory(self, chain_model):
        evidence = _pinned_evidence()
        sampler = GibbsSampler(chain_model, evidence, seed=0)
        joint = initialize_trajectory(chain_model, evidence, np.random.default_rng(1))

        assert sampler.initialize(joint) is joint
        assert _paths(sampler.sweep()) == _paths(joint)

    def test_start_outside_the_state_space(self, chain_model):
        sampler = GibbsSampler(chain_model, Evidence(horizon=2.0), seed=0)
        joint = JointTrajectory(components=[trajectory(0, 2.0, 3), trajectory(1, 2.0, 0)])

        with pytest.raises(NumericalInputError):
            sampler.initialize(joint)
        assert sampler.state is None

    def test_start_with_another_horizon(self, chain_model):
        sampler = GibbsSampler(chain_model, Evidence(horizon=1.0), seed=0)
        joint = JointTrajectory(components=[trajectory(0, 2.0, 0), trajectory(1, 2.0, 0)])

        with pytest.raises(NumericalInputError, match="ends at"):
            sampler.initialize(joint)


class TestOracleEquivalence:
    """Gibbs estimates of expected statistics against the exact oracle."""

    def test_small_chain_agreement(self, two_state_model):
        """One pinned component: every sweep is an exact bridge draw."""
        evidence = _endpoint_evidence(1.0, (0,), (0,))
        samples = run_chain(two_state_model, evidence, 0, 3000, 1, np.random.default_rng(12))

        estimate = mean_stats([accumulate_stats(two_state_model, s) for s in samples])
        truth = exact_sufficient_stats(two_state_model, evidence, grid_n=400)

        assert average_relative_error(estimate, truth) < 0.06

    @pytest.mark.slow
    @pytest.mark.asyncio
    async def test_two_components_three_states(self):
        """200 chains x (burn-in 200, 50 samples, thin 2) within 3% average relative error."""
        model = random_model(np.random.default_rng(17), [3, 3], [[], [0]])
        evidence = _endpoint_evidence(3.0, (0, 0), (1, 2))
        jobs = make_jobs(model, evidence, np.random.SeedSequence(2024), 200, 200, 50, 2)

        results = await run_jobs(jobs, workers=os.cpu_count() or 1)

        estimate = np.concatenate([result.stats for result in results]).mean(axis=0)
        truth = exact_sufficient_stats(model, evidence, grid_n=600)
        assert relative_error(estimate, truth.flatten()) < 0.03

    def test_observed_jump_between_intervals(self, two_state_model):
        """Touching intervals pin the path; the free tail is a forward draw."""
        evidence = Evidence(
            horizon=1.5,
            components={
                0: {
                    "intervals": [
                        {"start": 0.0, "end": 0.4, "state": 0},
                        {"start": 0.4, "end": 0.8, "state": 1},
                    ]
                },
            },
        )
        samples = run_chain(two_state_model, evidence, 0, 3000, 1, np.random.default_rng(21))

        assert all(s[0].transitions[0] == (0.4, 1) for s in samples)
        estimate = mean_stats([accumulate_stats(two_state_model, s) for s in samples])
        truth = exact_sufficient_stats(two_state_model, evidence, grid_n=300)
        assert average_relative_error(estimate, truth) < 0.06

    def test_stationary_start_without_evidence(self, two_state_model):
        """Started in equilibrium with no evidence: residence T·π."""
        T = 2.0
        samples = run_chain(two_state_model, Evidence(horizon=T), 5, 3000, 1, np.random.default_rng(8))

        estimate = mean_stats([accumulate_stats(two_state_model, s) for s in samples])

        np.testing.assert_allclose(estimate.residence[0][0], [0.5, 1.5], rtol=0.08)
