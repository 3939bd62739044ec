"""Unit tests for the brute-force oracle and the coarsened chain."""

import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
from pydantic import ValidationError

from ctbn_gibbs.errors import (
    EvidenceError,
    NumericalInputError,
    StateSpaceTooLargeError,
    UnsupportedEvidenceError,
    ZeroProbabilityEvidenceError,
)
from ctbn_gibbs.exact.bridge import (
    BridgeQuery,
    bridge_marginal,
    component_conditional_marginal,
    exact_sufficient_stats,
)
from ctbn_gibbs.exact.coarsened import (
    IntervalEvent,
    PointEvent,
    coarsened_step_matrix,
    event_probability,
    event_probability_coarsened,
    joint_states_where,
)
from ctbn_gibbs.linalg.propagators import propagate_distribution
from ctbn_gibbs.models.ctbn_model import CTBNModel, amalgamate
from ctbn_gibbs.models.evidence import Evidence
from ctbn_gibbs.models.trajectory import JointTrajectory

from .factories import trajectory

FLIP = np.array([[-1.0, 1.0], [1.0, -1.0]])
RATES = np.array([[-1.0, 1.0, 0.0], [0.5, -1.5, 1.0], [0.2, 0.8, -1.0]])


def _flip_model() -> CTBNModel:
    return CTBNModel(state_sizes=[2], parents=[[]], cims=[FLIP], initial=[[0.5, 0.5]])


def _endpoints(horizon: float, start, end) -> Evidence:
    return Evidence(
        horizon=horizon,
        components={
            i: {"points": [{"time": 0.0, "state": a}, {"time": horizon, "state": b}]}
            for i, (a, b) in enumerate(zip(start, end))
        },
    )


def _coarsened_residence(Q, start, end, T, h):
    """Bridge occupancy of the I + hQ chain summed over steps, times h."""
    n = int(round(T / h))
    P = coarsened_step_matrix(Q, h)
    forward = [start]
    for _ in range(n):
        forward.append(forward[-1] @ P)
    backward = [end]
    for _ in range(n):
        backward.append(P @ backward[-1])
    backward.reverse()
    occupancy = np.array(forward) * np.array(backward)
    occupancy /= occupancy.sum(axis=1, keepdims=True)
    return 0.5 * (occupancy[:-1] + occupancy[1:]).sum(axis=0) * h


class TestBridgeMarginal:
    """Test the Markov bridge formula."""

    def test_endpoints(self):
        start = bridge_marginal(BridgeQuery(Q=FLIP, a0=0, aT=1, T=2.0, t=0.0))
        end = bridge_marginal(BridgeQuery(Q=FLIP, a0=0, aT=1, T=2.0, t=2.0))

        np.testing.assert_allclose(start, [1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(end, [0.0, 1.0], atol=1e-12)

    def test_symmetric_flip_midpoint(self):
        T = 1.4
        p00 = (1 + math.exp(-T)) / 2
        p01 = (1 - math.exp(-T)) / 2

        marginal = bridge_marginal(BridgeQuery(Q=FLIP, a0=0, aT=0, T=T, t=T / 2))

        assert marginal[0] == pytest.approx(p00**2 / (p00**2 + p01**2), rel=1e-10)
        assert marginal.sum() == pytest.approx(1.0, abs=1e-9)

    def test_zero_probability_bridge(self):
        absorbing = np.array([[0.0, 0.0], [1.0, -1.0]])

        with pytest.raises(ZeroProbabilityEvidenceError):
            bridge_marginal(BridgeQuery(Q=absorbing, a0=0, aT=1, T=1.0, t=0.5))

    def test_query_validation(self):
        with pytest.raises(ValidationError):
            BridgeQuery(Q=FLIP, a0=0, aT=1, T=1.0, t=1.5)
        with pytest.raises(ValidationError):
            BridgeQuery(Q=FLIP, a0=0, aT=2, T=1.0, t=0.5)

    def test_single_component_conditional_is_the_bridge(self, two_state_model):
        Q = two_state_model.cims[0][0]
        joint = JointTrajectory(components=[trajectory(0, 2.0, 1)])
        for t in (0.0, 0.3, 1.0, 2.0):
            np.testing.assert_allclose(
                component_conditional_marginal(two_state_model, 0, joint, (0.0, 2.0), 1, 0, t),
                bridge_marginal(BridgeQuery(Q=Q, a0=1, aT=0, T=2.0, t=t)),
                atol=1e-10,
            )


class TestExactSufficientStats:
    """Test expected statistics by forward-backward on a grid."""

    def test_residence_sums_to_horizon(self):
        stats = exact_sufficient_stats(_flip_model(), _endpoints(1.0, (0,), (0,)), grid_n=1000)

        assert stats.total_residence(0) == pytest.approx(1.0, abs=1e-6)
        assert stats.residence[0][0, 0] >= stats.residence[0][0, 1]

    def test_unconditioned_stationary_chain(self, two_state_model):
        """Started in equilibrium: residence T·π, transitions T·π_a·q_ab."""
        T = 2.0
        pi = np.array([0.25, 0.75])
        Q = two_state_model.cims[0][0]

        stats = exact_sufficient_stats(two_state_model, Evidence(horizon=T), grid_n=200)

        np.testing.assert_allclose(stats.residence[0][0], T * pi, rtol=1e-9)
        assert stats.transitions[0][0, 0, 1] == pytest.approx(T * pi[0] * Q[0, 1], rel=1e-9)
        assert stats.transitions[0][0, 1, 0] == pytest.approx(T * pi[1] * Q[1, 0], rel=1e-9)

    def test_endpoint_conditioned_matches_quadrature(self, two_state_model):
        Q = two_state_model.cims[0][0]
        T, x0, xT = 1.5, 0, 1
        Z = scipy.linalg.expm(T * Q)[x0, xT]

        def occupancy(t, a):
            return scipy.linalg.expm(t * Q)[x0, a] * scipy.linalg.expm((T - t) * Q)[a, xT] / Z

        def intensity(t, a, b):
            return scipy.linalg.expm(t * Q)[x0, a] * Q[a, b] * scipy.linalg.expm((T - t) * Q)[b, xT] / Z

        stats = exact_sufficient_stats(two_state_model, _endpoints(T, (x0,), (xT,)), grid_n=400)

        for a in range(2):
            expected, _ = scipy.integrate.quad(occupancy, 0.0, T, args=(a,))
            assert stats.residence[0][0, a] == pytest.approx(expected, rel=1e-6)
        for a, b in ((0, 1), (1, 0)):
            expected, _ = scipy.integrate.quad(intensity, 0.0, T, args=(a, b))
            assert stats.transitions[0][0, a, b] == pytest.approx(expected, rel=1e-6)

    def test_two_component_net_against_fine_coarsened_chain(self, chain_model):
        """Expected residence against the coarsened chain, extrapolated over two step sizes."""
        T = 1.0
        evidence = _endpoints(T, (0, 1), (2, 0))
        stats = exact_sufficient_stats(chain_model, evidence, grid_n=500)

        Q = amalgamate(chain_model)
        start, end = np.eye(9)[0 * 3 + 1], np.eye(9)[2 * 3 + 0]
        coarse = _coarsened_residence(Q, start, end, T, 2e-4)
        fine = _coarsened_residence(Q, start, end, T, 1e-4)
        x0_residence = (2.0 * fine - coarse).reshape(3, 3).sum(axis=1)

        np.testing.assert_allclose(stats.residence[0][0], x0_residence, rtol=1e-3)

    def test_interval_evidence_pins_residence(self, chain_model):
        evidence = Evidence(
            horizon=1.0,
            components={
                0: {
                    "points": [{"time": 0.0, "state": 0}],
                    "intervals": [{"start": 0.5, "end": 1.0, "state": 2}],
                },
            },
        )

        stats = exact_sufficient_stats(chain_model, evidence, grid_n=200)

        assert stats.residence[0][0, 2] >= 0.5 - 1e-6
        assert stats.total_residence(0) == pytest.approx(1.0, abs=1e-6)

    def test_touching_intervals_force_one_jump(self):
        """[0, .5) = 0 and [.5, 1) = 1 leave exactly one 0 -> 1 transition at .5."""
        evidence = Evidence(
            horizon=1.0,
            components={
                0: {"intervals": [{"start": 0.0, "end": 0.5, "state": 0}, {"start": 0.5, "end": 1.0, "state": 1}]},
            },
        )

        stats = exact_sufficient_stats(_flip_model(), evidence, grid_n=100)

        np.testing.assert_allclose(stats.residence[0][0], [0.5, 0.5], atol=1e-12)
        assert stats.transitions[0][0, 0, 1] == pytest.approx(1.0, abs=1e-12)
        assert stats.transitions[0][0, 1, 0] == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("grid_n", [200, 1005])
    def test_observed_jump_between_free_windows_matches_quadrature(self, grid_n):
        """X stays in 0 on [.2, .5) and is seen in 1 at .5; free before and after."""
        p0 = np.array([0.6, 0.3, 0.1])
        model = CTBNModel(state_sizes=[3], parents=[[]], cims=[RATES], initial=[p0])
        horizon = 1.0 if grid_n == 200 else 1.005
        evidence = Evidence(
            horizon=horizon,
            components={
                0: {
                    "intervals": [{"start": 0.2, "end": 0.5, "state": 0}],
                    "points": [{"time": 0.5, "state": 1}],
                },
            },
        )
        tail = horizon - 0.5
        Z = (p0 @ scipy.linalg.expm(0.2 * RATES))[0]

        def head_occupancy(t, a):
            return (p0 @ scipy.linalg.expm(t * RATES))[a] * scipy.linalg.expm((0.2 - t) * RATES)[a, 0] / Z

        def head_intensity(t, a, b):
            return (
                (p0 @ scipy.linalg.expm(t * RATES))[a] * RATES[a, b]
                * scipy.linalg.expm((0.2 - t) * RATES)[b, 0] / Z
            )

        def tail_occupancy(t, a):
            return scipy.linalg.expm(t * RATES)[1, a]

        stats = exact_sufficient_stats(model, evidence, grid_n=grid_n)

        for a in range(3):
            expected = (
                scipy.integrate.quad(head_occupancy, 0.0, 0.2, args=(a,))[0]
                + (0.3 if a == 0 else 0.0)
                + scipy.integrate.quad(tail_occupancy, 0.0, tail, args=(a,))[0]
            )
            assert stats.residence[0][0, a] == pytest.approx(expected, rel=1e-6, abs=1e-10)
        for a in range(3):
            for b in range(3):
                if a == b:
                    continue
                expected = (
                    scipy.integrate.quad(head_intensity, 0.0, 0.2, args=(a, b))[0]
                    + (1.0 if (a, b) == (0, 1) else 0.0)
                    + scipy.integrate.quad(tail_occupancy, 0.0, tail, args=(a,))[0] * RATES[a, b]
                )
                assert stats.transitions[0][0, a, b] == pytest.approx(expected, rel=1e-6, abs=1e-10)

    def test_point_observation_off_even_node(self):
        """An interior observation at an odd grid index keeps Simpson accuracy."""
        Q = RATES
        p0 = np.array([0.6, 0.3, 0.1])
        model = CTBNModel(state_sizes=[3], parents=[[]], cims=[Q], initial=[p0])
        evidence = Evidence(horizon=1.0, components={0: {"points": [{"time": 0.35, "state": 2}]}})
        Z = (p0 @ scipy.linalg.expm(0.35 * Q))[2]

        def intensity(t, a, b):
            if t < 0.35:
                return (p0 @ scipy.linalg.expm(t * Q))[a] * Q[a, b] * scipy.linalg.expm((0.35 - t) * Q)[b, 2] / Z
            return scipy.linalg.expm((t - 0.35) * Q)[2, a] * Q[a, b]

        stats = exact_sufficient_stats(model, evidence, grid_n=100)

        expected = sum(
            scipy.integrate.quad(intensity, lo, hi, args=(1, 2))[0] for lo, hi in ((0.0, 0.35), (0.35, 1.0))
        )
        assert stats.transitions[0][0, 1, 2] == pytest.approx(expected, rel=1e-6)

    def test_misaligned_observation(self):
        evidence = Evidence(horizon=1.0, components={0: {"points": [{"time": 0.123456, "state": 0}]}})

        with pytest.raises(UnsupportedEvidenceError):
            exact_sufficient_stats(_flip_model(), evidence, grid_n=10)

    def test_state_space_cap(self, chain_model):
        with pytest.raises(StateSpaceTooLargeError):
            exact_sufficient_stats(chain_model, Evidence(horizon=1.0), grid_n=10, cap=4)

    def test_impossible_evidence(self):
        absorbing = CTBNModel(
            state_sizes=[2], parents=[[]], cims=[[[0.0, 0.0], [1.0, -1.0]]], initial=[[1.0, 0.0]]
        )

        with pytest.raises(ZeroProbabilityEvidenceError):
            exact_sufficient_stats(absorbing, _endpoints(1.0, (0,), (1,)), grid_n=10)

    def test_grid_too_small(self):
        with pytest.raises(NumericalInputError):
            exact_sufficient_stats(_flip_model(), Evidence(horizon=1.0), grid_n=1)


class TestCoarsenedChain:
    """Test I + hQ and coarsened event probabilities."""

    def test_step_matrix(self):
        np.testing.assert_array_equal(coarsened_step_matrix(FLIP, 0.0), np.eye(2))
        np.testing.assert_allclose(coarsened_step_matrix(FLIP, 0.1), [[0.9, 0.1], [0.1, 0.9]])

    def test_step_too_large(self):
        with pytest.raises(NumericalInputError):
            coarsened_step_matrix(FLIP, 1.0)

    def test_joint_states_where(self, chain_model):
        assert joint_states_where(chain_model, {0: 1}) == [3, 4, 5]
        assert joint_states_where(chain_model, {0: 1, 1: 2}) == [5]

    def test_point_event_at_start(self):
        event = [PointEvent(time=0.0, states=[1])]

        assert event_probability_coarsened(FLIP, 0.01, np.array([0.0, 1.0]), event) == 1.0
        assert event_probability(FLIP, np.array([0.0, 1.0]), event) == 1.0

    def test_point_event_matches_propagation(self):
        p0 = np.array([1.0, 0.0])
        event = [PointEvent(time=0.8, states=[1])]

        exact = event_probability(FLIP, p0, event)

        assert exact == pytest.approx(propagate_distribution(FLIP, p0, 0.8)[1], rel=1e-10)
        assert event_probability_coarsened(FLIP, 1e-4, p0, event) == pytest.approx(exact, abs=1e-3)

    def test_point_event_error_halves_with_the_step(self):
        p0 = np.array([0.6, 0.3, 0.1])
        event = [PointEvent(time=1.0, states=[1])]
        steps = [1e-2, 5e-3, 2.5e-3, 1.25e-3]

        exact = event_probability(RATES, p0, event)
        errors = [abs(event_probability_coarsened(RATES, h, p0, event) - exact) for h in steps]

        for coarse, fine in zip(errors, errors[1:]):
            assert coarse / fine == pytest.approx(2.0, rel=0.1)

    @pytest.mark.parametrize(
        "event, condition",
        [
            ([PointEvent(time=0.5, states=[0])], [PointEvent(time=1.0, states=[1])]),
            ([IntervalEvent(start=0.2, end=0.6, states=[0, 1])], [PointEvent(time=1.0, states=[0])]),
        ],
    )
    def test_coarsened_approaches_continuous(self, event, condition):
        p0 = np.array([0.6, 0.3, 0.1])

        exact = event_probability(RATES, p0, event, condition)

        assert event_probability_coarsened(RATES, 1e-4, p0, event, condition) == pytest.approx(exact, abs=1e-3)
        assert 0.0 < exact < 1.0

    @pytest.mark.parametrize(
        "event, condition",
        [
            ([PointEvent(time=0.5, states=[0])], [PointEvent(time=1.0, states=[1])]),
            ([IntervalEvent(start=0.2, end=0.6, states=[0, 1])], [PointEvent(time=1.0, states=[0])]),
            ([PointEvent(time=0.8, states=[2])], [IntervalEvent(start=0.0, end=0.4, states=[0])]),
        ],
    )
    def test_conditional_events_converge_at_first_order(self, event, condition):
        """Log-log slope of the error over h = 1e-1 .. 1e-4 is at least 0.9."""
        p0 = np.array([0.6, 0.3, 0.1])
        steps = np.array([1e-1, 1e-2, 1e-3, 1e-4])

        exact = event_probability(RATES, p0, event, condition)
        errors = [abs(event_probability_coarsened(RATES, h, p0, event, condition) - exact) for h in steps]

        slope = np.polyfit(np.log(steps), np.log(errors), 1)[0]
        assert slope >= 0.9

    def test_bridge_conditional(self):
        """Pr(X(t) = 0 | X(0) = 0, X(T) = 0) from the event API matches the bridge."""
        T, t = 1.2, 0.5
        p0 = np.array([1.0, 0.0])
        event = [PointEvent(time=t, states=[0])]
        condition = [PointEvent(time=T, states=[0])]

        expected = bridge_marginal(BridgeQuery(Q=FLIP, a0=0, aT=0, T=T, t=t))[0]

        assert event_probability(FLIP, p0, event, condition) == pytest.approx(expected, rel=1e-10)

    def test_zero_probability_condition(self):
        absorbing = np.array([[0.0, 0.0], [1.0, -1.0]])

        with pytest.raises(EvidenceError):
            event_probability(
                absorbing, np.array([1.0, 0.0]),
                [PointEvent(time=0.5, states=[0])], [PointEvent(time=1.0, states=[1])],
            )
