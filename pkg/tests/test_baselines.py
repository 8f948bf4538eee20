"""Baselines: disturbance-action controller and fixed-gain simulation."""

import numpy as np
import pytest

from safectrl.baselines import (DacState, dac_action, dac_run, dac_update,
                                default_weight_cap, fixed_gain_run,
                                truncated_loss, truncated_loss_gradient)
from safectrl.errors import InvalidParams
from safectrl.gainset import GainSet
from safectrl.model import LossSpec, LtvSystem, SafetySpec
from safectrl.noise import NoiseModel, constant_noise


def scalar_sys(horizon=20, w=0.1):
    sys = LtvSystem.time_invariant([[1.0]], [[1.0]], horizon, w)
    safety = SafetySpec.box(np.ones(1), np.array([2.0]))
    loss = LossSpec.identity(1, 1)
    return sys, safety, loss


class TestDacAction:
    def test_hand_value(self):
        # u = -K x + M_1 w_{t-1} = -0.5 + (-2)(0.3) = -1.1
        state = DacState(gain=np.array([[1.0]]),
                        weights=[np.array([[-2.0]])], eta=0.1, weight_cap=5.0)
        u = dac_action(state, np.array([0.5]), [np.array([0.3])])
        assert u == pytest.approx(np.array([-1.1]))

    def test_missing_history_is_zero(self):
        state = DacState.fresh(np.array([[1.0]]), memory=3, eta=0.1,
                               weight_cap=5.0)
        state.weights = [np.array([[7.0]])] * 3
        u = dac_action(state, np.array([1.0]), [])
        assert u == pytest.approx(np.array([-1.0]))

    def test_two_term_memory(self):
        state = DacState(gain=np.zeros((1, 1)),
                        weights=[np.array([[1.0]]), np.array([[10.0]])],
                        eta=0.1, weight_cap=50.0)
        u = dac_action(state, np.zeros(1), [np.array([0.2]), np.array([0.3])])
        assert u == pytest.approx(np.array([0.2 + 3.0]))


class TestDacStateAndUpdate:
    def test_fresh_zero_weights(self):
        state = DacState.fresh(np.eye(2), memory=4, eta=0.1, weight_cap=1.0)
        assert state.memory == 4
        assert all(np.all(m == 0.0) for m in state.weights)

    def test_invalid_memory(self):
        with pytest.raises(InvalidParams):
            DacState.fresh(np.eye(2), memory=0, eta=0.1, weight_cap=1.0)

    def test_update_clips_at_cap(self):
        state = DacState.fresh(np.zeros((1, 1)), memory=1, eta=1.0,
                               weight_cap=0.5)
        new = dac_update(state, [np.array([[-3.0]])])
        assert new.weights[0] == pytest.approx(np.array([[0.5]]))

    def test_update_preserves_gain(self):
        state = DacState.fresh(np.array([[1.5]]), memory=2, eta=0.1,
                               weight_cap=1.0)
        new = dac_update(state, [np.zeros((1, 1))] * 2)
        assert np.array_equal(new.gain, state.gain)


class TestDefaultWeightCap:
    def test_hand_value(self):
        safety = SafetySpec.box(np.ones(1), np.array([5.0]))
        cap = default_weight_cap(np.array([[1.0]]), state_bound=2.0,
                                 noise_bound=0.1, memory=10, safety=safety)
        assert cap == pytest.approx(3.0)   # (5 - 1*2)/(10*0.1)

    def test_no_slack_gives_zero(self):
        safety = SafetySpec.box(np.ones(1), np.array([2.0]))
        cap = default_weight_cap(np.array([[1.0]]), state_bound=2.0,
                                 noise_bound=0.1, memory=10, safety=safety)
        assert cap == 0.0

    def test_unconstrained_input_infinite(self):
        safety = SafetySpec.input_only(1, np.zeros((0, 1)), np.zeros(0))
        cap = default_weight_cap(np.array([[1.0]]), 2.0, 0.1, 10, safety)
        assert cap == np.inf


class TestTruncatedLoss:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            d_x = int(rng.integers(1, 3))
            d_u = int(rng.integers(1, 3))
            mem = int(rng.integers(1, 4))
            a = rng.normal(size=(d_x, d_x)) * 0.5
            b = rng.normal(size=(d_x, d_u))
            q = np.eye(d_x)
            r = np.eye(d_u)
            gain = rng.normal(size=(d_u, d_x)) * 0.3
            state = DacState(gain=gain,
                            weights=[rng.normal(size=(d_u, d_x)) * 0.2
                                     for _ in range(mem)],
                            eta=0.1, weight_cap=10.0)
            hist = [rng.normal(size=d_x) * 0.1 for _ in range(2 * mem + 3)]
            grads = truncated_loss_gradient(state, a, b, q, r, hist)
            h = 1e-6
            for j in range(mem):
                fd = np.zeros((d_u, d_x))
                for idx in np.ndindex(d_u, d_x):
                    for sign in (1.0, -1.0):
                        state.weights[j][idx] += sign * h
                        val, _, _ = truncated_loss(state, a, b, q, r, hist)
                        fd[idx] += sign * val / (2.0 * h)
                        state.weights[j][idx] -= sign * h
                assert np.allclose(grads[j], fd, atol=1e-5), (j, mem)

    def test_zero_history_zero_loss(self):
        state = DacState.fresh(np.array([[0.5]]), memory=2, eta=0.1,
                               weight_cap=1.0)
        val, y, u = truncated_loss(state, np.array([[1.0]]), np.array([[1.0]]),
                                   np.eye(1), np.eye(1),
                                   [np.zeros(1)] * 6)
        assert val == 0.0 and y == pytest.approx(0.0) and u == pytest.approx(0.0)


class TestFixedGainRun:
    def test_deadbeat_recursion(self):
        # A - BK = 0, so under constant noise 0.1 every state after the first
        # equals exactly 0.1
        sys, safety, loss = scalar_sys(horizon=30)
        noise = constant_noise([1.0], 0.1, 1)
        trace = fixed_gain_run(sys, safety, loss, noise, np.array([[1.0]]))
        assert np.allclose(trace.states[1:], 0.1)
        assert trace.violation_count == 0

    def test_membership_guard(self):
        sys, safety, loss = scalar_sys()
        noise = NoiseModel(family="gaussian", dim=1, bound=0.1, seed=0)
        gs = GainSet(spectral_cap=1.0)
        with pytest.raises(InvalidParams):
            fixed_gain_run(sys, safety, loss, noise, np.array([[2.0]]),
                           gain_set=gs)


class TestDacRun:
    def test_zero_cap_matches_fixed_gain_exactly(self):
        # with weight_cap 0 every update clips the weights back to zero, so
        # the DAC trajectory is bit-identical to the fixed-gain one
        sys, safety, loss = scalar_sys(horizon=40)
        noise = NoiseModel(family="uniform", dim=1, bound=0.1, seed=3)
        k = np.array([[1.0]])
        fixed = fixed_gain_run(sys, safety, loss, noise, k)
        state = DacState.fresh(k, memory=3, eta=0.05, weight_cap=0.0)
        dac, _ = dac_run(sys, safety, loss, noise, state)
        assert np.array_equal(fixed.states, dac.states)
        assert np.array_equal(fixed.losses, dac.losses)

    def test_weights_stay_capped(self):
        sys, safety, loss = scalar_sys(horizon=60)
        noise = NoiseModel(family="gaussian", dim=1, bound=0.1, seed=5)
        state = DacState.fresh(np.array([[1.0]]), memory=4, eta=0.5,
                               weight_cap=0.3)
        _, final = dac_run(sys, safety, loss, noise, state)
        for m in final.weights:
            assert np.linalg.norm(m, 2) <= 0.3 + 1e-12

    def test_learning_reduces_loss_under_constant_noise(self):
        # constant noise is perfectly predictable from history, so a learned
        # disturbance-action term should beat the pure fixed gain
        sys, safety, loss = scalar_sys(horizon=300)
        noise = constant_noise([1.0], 0.1, 1)
        k = np.array([[0.8]])
        fixed = fixed_gain_run(sys, safety, loss, noise, k)
        state = DacState.fresh(k, memory=5, eta=0.05, weight_cap=2.0)
        dac, _ = dac_run(sys, safety, loss, noise, state)
        assert dac.cumulative_loss < fixed.cumulative_loss
