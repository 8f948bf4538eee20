"""Baseline controllers: a disturbance-action controller (DAC) with memory,
and a fixed safe gain.

The DAC policy is u_t = -K x_t + sum_i M_i w_{t-i} with a fixed stabilizing
gain K and weights tuned by gradient steps on a truncated surrogate loss: the
counterfactual state reached from rest over the last ``memory`` steps under
the frozen current weights.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .controller import RunTrace
from .errors import DimensionMismatch, InvalidParams
from .gainset import membership, verify_realized_safety
from .model import opnorm, recover_noise, stage_loss, step_dynamics
from .projection import project_spectral_ball


@dataclass
class DacState:
    """Fixed gain plus disturbance-action weights and their norm cap."""

    gain: np.ndarray
    weights: list                 # memory entries, each (d_u, d_x)
    eta: float
    weight_cap: float

    @property
    def memory(self):
        return len(self.weights)

    @classmethod
    def fresh(cls, gain, memory, eta, weight_cap):
        gain = np.asarray(gain, dtype=float)
        d_u, d_x = gain.shape
        if memory < 1:
            raise InvalidParams("memory must be >= 1")
        return cls(gain=gain, weights=[np.zeros((d_u, d_x)) for _ in range(memory)],
                   eta=eta, weight_cap=weight_cap)


def dac_action(state, x, noise_buffer):
    """u = -K x + sum_i M_i w_{t-i}; noise_buffer[0] is w_{t-1} (newest first),
    missing history is treated as zero."""
    x = np.asarray(x, dtype=float)
    u = -state.gain @ x
    for i, m in enumerate(state.weights):
        if i < len(noise_buffer):
            w = np.asarray(noise_buffer[i], dtype=float)
            if w.shape[0] != m.shape[1]:
                raise DimensionMismatch("noise dimension mismatch in buffer")
            u = u + m @ w
    return u


def _w_at(hist, s):
    """hist[s] = w_{t-s} with s = 0 the current step; zero before the start."""
    if 0 <= s < len(hist):
        return hist[s]
    return np.zeros_like(hist[0])


def truncated_loss(state, a, b, q, r, hist):
    """Surrogate loss on the counterfactual state built from the last
    ``memory`` noises under the frozen weights."""
    mem = state.memory
    cl = a - b @ state.gain
    q_off = [sum(state.weights[j] @ _w_at(hist, s + j + 1) for j in range(mem))
             for s in range(mem + 2)]
    powers = [np.linalg.matrix_power(cl, i) for i in range(mem)]
    y_next = sum(powers[i] @ (b @ q_off[i] + _w_at(hist, i)) for i in range(mem))
    y_curr = sum(powers[i] @ (b @ q_off[i + 1] + _w_at(hist, i + 1))
                 for i in range(mem))
    u = -state.gain @ y_curr + q_off[0]
    return float(y_next @ q @ y_next + u @ r @ u), y_next, u


def truncated_loss_gradient(state, a, b, q, r, hist):
    """Analytic gradient of the truncated loss with respect to each weight."""
    mem = state.memory
    cl = a - b @ state.gain
    _, y_next, u = truncated_loss(state, a, b, q, r, hist)
    g_y = 2.0 * q @ y_next
    g_u = 2.0 * r @ u
    powers = [np.linalg.matrix_power(cl, i) for i in range(mem)]
    p_mats = [powers[i] @ b for i in range(mem)]
    grads = []
    for j in range(1, mem + 1):
        g = np.outer(g_u, _w_at(hist, j))
        for i in range(mem):
            g = g + np.outer(p_mats[i].T @ g_y, _w_at(hist, i + j))
            g = g - np.outer((state.gain @ p_mats[i]).T @ g_u,
                             _w_at(hist, i + 1 + j))
        grads.append(g)
    return grads


def dac_update(state, grads):
    """Gradient step on each weight followed by a spectral clip at the cap."""
    new_weights = [project_spectral_ball(m - state.eta * g, state.weight_cap)
                   for m, g in zip(state.weights, grads)]
    return DacState(gain=state.gain, weights=new_weights, eta=state.eta,
                    weight_cap=state.weight_cap)


def default_weight_cap(gain, state_bound, noise_bound, memory, safety):
    """Largest uniform per-weight cap keeping ||u|| inside the input polytope
    given ||x|| <= state_bound and ||w|| <= noise_bound."""
    lu, lu_rhs = safety.input_at(0)
    norms = np.linalg.norm(lu, axis=1)
    keep = norms > 0
    if not np.any(keep):
        return np.inf
    u_max = float(np.min(lu_rhs[keep] / norms[keep]))
    slack = u_max - opnorm(np.asarray(gain, float)) * state_bound
    if slack <= 0 or noise_bound == 0:
        return 0.0
    return slack / (memory * noise_bound)


def _simulate(sys, safety, loss, noise, act, update=None):
    """Shared simulation loop for the baselines; emits the RunTrace schema."""
    t0 = time.perf_counter()
    horizon = sys.horizon
    x = np.zeros(sys.d_x)
    states = np.empty((horizon + 1, sys.d_x))
    inputs = np.empty((horizon, sys.d_u))
    noises = np.empty((horizon, sys.d_x))
    gains = np.empty((horizon, sys.d_u, sys.d_x))
    losses = np.empty(horizon)
    min_slacks = np.empty(horizon)
    states[0] = x
    hist = []
    for t in range(horizon):
        u, k_used = act(t, x, hist)
        w = noise.sample(t)
        x_next = step_dynamics(sys, t, x, u, w)
        w_rec = recover_noise(sys, t, x_next, x, u)
        report = verify_realized_safety(safety, t, x_next, u)
        inputs[t] = u
        noises[t] = w
        gains[t] = k_used
        losses[t] = stage_loss(loss, t, x_next, u)
        min_slacks[t] = report.min_slack
        states[t + 1] = x_next
        hist.insert(0, w_rec)
        if update is not None:
            update(t, hist)
        x = x_next
    return RunTrace(states=states, inputs=inputs, noises=noises, gains=gains,
                    losses=losses, zetas=np.zeros(horizon),
                    min_slacks=min_slacks, grad_norms=np.zeros(horizon),
                    eta=0.0, wall_clock=time.perf_counter() - t0,
                    zero_in_first_set=True)


def fixed_gain_run(sys, safety, loss, noise, k, gain_set=None):
    """Simulate u_t = -K x_t for the whole horizon."""
    k = np.asarray(k, dtype=float)
    if gain_set is not None:
        ok, worst = membership(gain_set, k)
        if not ok:
            raise InvalidParams(f"gain outside the safe set (violation {worst:.3g})")
    return _simulate(sys, safety, loss, noise, act=lambda t, x, hist: (-k @ x, k))


def dac_run(sys, safety, loss, noise, state):
    """Simulate the DAC controller, updating weights after every step."""
    box = {"state": state}

    def act(t, x, hist):
        return dac_action(box["state"], x, hist), box["state"].gain

    def update(t, hist):
        st = box["state"]
        grads = truncated_loss_gradient(st, sys.a_mats[t], sys.b_mats[t],
                                        loss.q_at(t), loss.r_at(t), hist)
        box["state"] = dac_update(st, grads)

    trace = _simulate(sys, safety, loss, noise, act=act, update=update)
    return trace, box["state"]
