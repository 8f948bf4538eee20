"""The safe online gradient descent control loop.

Each step: act with u_t = -K_t x_t, observe x_{t+1}, recover the noise,
evaluate the loss and its gradient in the gain, build the next safe gain set
from x_{t+1}, and take a projected gradient step onto it. Per-step safety is
verified on the realized (x_{t+1}, u_t) and recorded in the trace.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleSafeSet, InvalidParams, NoiseBoundViolated
from .gainset import build_gain_set, membership, verify_realized_safety
from .model import (BoundConstants, loss_gradient, loss_in_gain, recover_noise,
                    step_dynamics)
from .ogd import OgdState, TimeVaryingDomain, ogd_step, step_size_default
from .projection import (ProjectionConfig, feasibility_probe,
                         project_gain_set, reset_projection_cache)


class GainSetDomain(TimeVaryingDomain):
    """Adapter exposing a gain set through the generic domain interface."""

    def __init__(self, gain_set, cfg):
        self.gain_set = gain_set
        self.cfg = cfg

    def project(self, point):
        return project_gain_set(self.gain_set, point, self.cfg).point

    def contains(self, point, tol=1e-9):
        ok, _ = membership(self.gain_set, point, tol)
        return ok


@dataclass(frozen=True)
class ControllerConfig:
    kappa: float
    gamma: float
    eta: float = None              # defaults to diameter/(grad_bound*sqrt(T))
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    init_policy: str = "project_zero"   # or "witness"
    contraction_weight: object = None   # similarity weighting for the contraction

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise InvalidParams("gamma must lie in (0, 1)")
        if self.kappa <= 0:
            raise InvalidParams("kappa must be positive")
        if self.init_policy not in ("project_zero", "witness"):
            raise InvalidParams(f"unknown init policy {self.init_policy!r}")


@dataclass
class RunTrace:
    """Per-step record of a completed run (0-based step index)."""

    states: np.ndarray        # (T+1, d_x), states[0] = x_1
    inputs: np.ndarray        # (T, d_u)
    noises: np.ndarray        # (T, d_x)
    gains: np.ndarray         # (T, d_u, d_x), the gain used at each step
    losses: np.ndarray        # (T,)
    zetas: np.ndarray         # (T,)
    min_slacks: np.ndarray    # (T,) realized-safety slack, >= 0 on success
    grad_norms: np.ndarray    # (T,)
    eta: float
    wall_clock: float
    zero_in_first_set: bool   # whether 0 was feasible in the initial set

    @property
    def horizon(self):
        return self.losses.size

    @property
    def cumulative_loss(self):
        return float(self.losses.sum())

    @property
    def max_state_norm(self):
        return float(np.linalg.norm(self.states, axis=1).max())

    @property
    def max_input_norm(self):
        return float(np.linalg.norm(self.inputs, axis=1).max())

    @property
    def set_variation(self):
        return float(self.zetas.sum())

    @property
    def violation_count(self):
        return int(np.sum(self.min_slacks < 0.0))


def init_gain(first_set, cfg):
    """Initial gain per policy: projection of zero, or the feasibility witness."""
    feasible, witness = feasibility_probe(first_set, cfg.projection)
    if not feasible:
        raise InfeasibleSafeSet("initial safe gain set is empty")
    if cfg.init_policy == "witness":
        return witness
    zero = np.zeros_like(witness)
    return project_gain_set(first_set, zero, cfg.projection).point


def control_step(sys, safety, loss, consts, cfg, t, x, k, w, current_set,
                 eta, fixed_set=None):
    """One closed-loop step; returns
    (u_t, x_next, k_next, next_set, zeta, loss value, grad norm, slack report).
    """
    u = -k @ x
    x_next = step_dynamics(sys, t, x, u, w)
    w_rec = recover_noise(sys, t, x_next, x, u)
    if np.linalg.norm(w_rec) > sys.noise_bound + 1e-9:
        raise NoiseBoundViolated("recovered noise exceeds the bound")
    f_val = loss_in_gain(loss, sys, t, x, w_rec, k)
    grad = loss_gradient(loss, sys, t, x, w_rec, k)
    report = verify_realized_safety(safety, t, x_next, u)

    if fixed_set is not None:
        next_set = fixed_set
    else:
        next_set = build_gain_set(sys, safety, consts, min(t + 1, sys.horizon - 1),
                                  x_next, weight=cfg.contraction_weight)
    state = OgdState(decision=k, eta=eta)
    domain_curr = GainSetDomain(current_set, cfg.projection)
    domain_next = (domain_curr if next_set is current_set
                   else GainSetDomain(next_set, cfg.projection))
    k_next, zeta = ogd_step(state, grad, domain_next, domain_curr)
    return u, x_next, k_next, next_set, zeta, f_val, float(np.linalg.norm(grad)), report


def run(sys, safety, loss, noise, cfg, x1=None, fixed_set=None):
    """Run the controller for the system's full horizon and return the trace.

    ``fixed_set`` switches to a time-invariant domain: the same gain set is
    used at every step (zeta is then exactly zero).
    """
    t0 = time.perf_counter()
    reset_projection_cache()
    horizon = sys.horizon
    x = np.zeros(sys.d_x) if x1 is None else np.asarray(x1, dtype=float)
    lx, lx_rhs = safety.state_at(0)
    if lx.shape[0] and np.any(lx @ x > lx_rhs + 1e-9):
        raise InvalidParams("initial state violates the state constraints")
    consts = BoundConstants.derive(cfg.kappa, cfg.gamma, sys.noise_bound,
                                   loss.grad_scale, sys.kappa_b, sys.d_x, sys.d_u)
    eta = cfg.eta
    if eta is None:
        eta = step_size_default(consts.diameter, consts.grad_bound, horizon)

    current_set = fixed_set if fixed_set is not None else build_gain_set(
        sys, safety, consts, 0, x, weight=cfg.contraction_weight)
    zero_ok, _ = membership(current_set, np.zeros((sys.d_u, sys.d_x)))
    k = init_gain(current_set, cfg)

    states = np.empty((horizon + 1, sys.d_x))
    inputs = np.empty((horizon, sys.d_u))
    noises = np.empty((horizon, sys.d_x))
    gains = np.empty((horizon, sys.d_u, sys.d_x))
    losses = np.empty(horizon)
    zetas = np.empty(horizon)
    min_slacks = np.empty(horizon)
    grad_norms = np.empty(horizon)
    states[0] = x

    for t in range(horizon):
        w = noise.sample(t)
        gains[t] = k
        try:
            (u, x_next, k_next, next_set, zeta, f_val, g_norm,
             report) = control_step(sys, safety, loss, consts, cfg, t, x, k, w,
                                    current_set, eta, fixed_set=fixed_set)
        except InfeasibleSafeSet as exc:
            raise InfeasibleSafeSet(
                f"safe gain set became empty at step {t}: {exc}",
                getattr(exc, "report", None)) from exc
        inputs[t] = u
        noises[t] = w
        losses[t] = f_val
        zetas[t] = zeta
        min_slacks[t] = report.min_slack
        grad_norms[t] = g_norm
        states[t + 1] = x_next
        x, k, current_set = x_next, k_next, next_set

    return RunTrace(states=states, inputs=inputs, noises=noises, gains=gains,
                    losses=losses, zetas=zetas, min_slacks=min_slacks,
                    grad_norms=grad_norms, eta=eta,
                    wall_clock=time.perf_counter() - t0,
                    zero_in_first_set=zero_ok)
