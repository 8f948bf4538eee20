"""Hindsight comparators, path length, set variation, and the regret bound.

The comparator at step t minimizes the realized per-step loss in the gain over
the same safe set the controller faced, anchored at the realized (x_t, w_t).
The T problems are therefore independent convex programs, each solved by
projected gradient descent to a fixed-point tolerance.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, InvalidParams, NegativeZeta
from .gainset import build_gain_set
from .model import BoundConstants, loss_gradient, loss_in_gain, opnorm
from .projection import (ProjectionConfig, project_gain_set,
                         reset_projection_cache)


@dataclass(frozen=True)
class RegretReport:
    comparators: np.ndarray        # (T, d_u, d_x)
    comparator_losses: np.ndarray  # (T,)
    algorithm_losses: np.ndarray   # (T,)
    regret: float
    path_length: float
    set_variation: float
    bound: float
    slack: float


def comparator_step(sys, loss, set_t, t, x, w, cfg=None, fixed_point_tol=1e-9,
                    max_iters=20000, k_init=None):
    """argmin of the realized step-t loss over the safe set, by projected
    gradient descent with step 1/L (L from the quadratic's curvature).

    ``k_init`` warm-starts the iteration (e.g. from the previous step's
    comparator); the minimum value is unaffected since the objective depends
    on K only through K x, so any fixed point is a global argmin.

    Runs in two phases: a loose phase with cheap approximate projections to
    get near the optimum, then an exact phase with fully certified projections
    down to ``fixed_point_tol``. The exact-phase projections warm start from
    the loose phase's iterates and are therefore cheap.
    """
    cfg = cfg or ProjectionConfig()
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    xn2 = float(x @ x)
    if xn2 == 0.0 or k_init is None:
        k = project_gain_set(set_t, np.zeros((sys.d_u, sys.d_x)), cfg).point
    else:
        k = project_gain_set(set_t, np.asarray(k_init, dtype=float), cfg).point
    if xn2 == 0.0:
        return k  # objective constant in K; deterministic tie-break at P(0)
    b = sys.b_mats[t]
    lip = 2.0 * xn2 * (opnorm(b.T @ loss.q_at(t) @ b) + opnorm(loss.r_at(t)))
    if lip == 0.0:
        return k
    step = 1.0 / lip
    loose = dataclasses.replace(cfg, kkt_tol=1e-4, feasibility_slack=1e-7,
                                inner_tol=1e-8)
    mid = dataclasses.replace(cfg, kkt_tol=1e-6, feasibility_slack=1e-8,
                              inner_tol=1e-10)
    phases = (
        (loose, max(fixed_point_tol, 1e-5), max_iters),
        (mid, max(fixed_point_tol, 1e-7), max_iters),
        (cfg, fixed_point_tol, max_iters),
    )
    for phase_cfg, tol, iters in phases:
        done = False
        y = k          # extrapolated point (Nesterov momentum)
        k_prev = k
        theta = 1.0
        for _ in range(iters):
            grad = loss_gradient(loss, sys, t, x, w, y)
            k = project_gain_set(set_t, y - step * grad, phase_cfg).point
            # the convergence test is the fixed-point residual of the plain
            # projected-gradient map at the new iterate, so the answer does
            # not depend on the acceleration; only run it once the iterate
            # movement is small enough that it could plausibly pass
            if np.linalg.norm(k - k_prev) <= 10.0 * tol:
                grad_k = loss_gradient(loss, sys, t, x, w, k)
                k_chk = project_gain_set(set_t, k - step * grad_k,
                                         phase_cfg).point
                if np.linalg.norm(k - k_chk) <= tol:
                    k = k_chk
                    done = True
                    break
            # adaptive restart: drop momentum when it points uphill
            if float(np.sum((y - k) * (k - k_prev))) > 0.0:
                theta = 1.0
                y = k
            else:
                theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
                y = k + ((theta - 1.0) / theta_new) * (k - k_prev)
                theta = theta_new
            k_prev = k
        if not done:
            raise ConvergenceFailure(
                f"comparator fixed point not reached in {iters} iterations")
    return k


def path_length(comparators):
    """C_T: cumulative Frobenius movement of the comparator sequence."""
    ks = np.asarray(comparators, dtype=float)
    if ks.shape[0] < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(ks, axis=0), axis=(1, 2))))


def set_variation(zetas):
    """S_T: sum of the per-step projection distances zeta_t."""
    z = np.asarray(zetas, dtype=float)
    if np.any(z < 0.0):
        raise NegativeZeta("zeta values must be nonnegative")
    return float(z.sum())


def theorem_bound(consts, eta, horizon, c_t, s_t):
    """eta*T*G^2/2 + 7 D^2/(4 eta) + D*C_T/eta + D*S_T/eta."""
    if eta <= 0:
        raise InvalidParams("eta must be positive")
    g, d = consts.grad_bound, consts.diameter
    return (eta * horizon * g * g / 2.0 + 7.0 * d * d / (4.0 * eta)
            + d * c_t / eta + d * s_t / eta)


def compute_comparators(trace, sys, safety, loss, consts, cfg=None,
                        fixed_set=None, fixed_point_tol=1e-9, weight=None):
    """Per-step hindsight-optimal gains along the realized trajectory."""
    reset_projection_cache()
    horizon = trace.horizon
    out = np.empty_like(trace.gains)
    prev = None
    for t in range(horizon):
        if fixed_set is not None:
            set_t = fixed_set
        else:
            set_t = build_gain_set(sys, safety, consts, t, trace.states[t],
                                   weight=weight)
        out[t] = comparator_step(sys, loss, set_t, t, trace.states[t],
                                 trace.noises[t], cfg,
                                 fixed_point_tol=fixed_point_tol, k_init=prev)
        prev = out[t]
    return out


def dynamic_regret(trace, comparators, sys, loss, consts):
    """Regret of the trace against the per-step comparators, plus the bound."""
    horizon = trace.horizon
    comp_losses = np.empty(horizon)
    for t in range(horizon):
        comp_losses[t] = loss_in_gain(loss, sys, t, trace.states[t],
                                      trace.noises[t], comparators[t])
    regret = float(trace.losses.sum() - comp_losses.sum())
    c_t = path_length(comparators)
    s_t = set_variation(trace.zetas)
    bound = theorem_bound(consts, trace.eta, horizon, c_t, s_t)
    return RegretReport(comparators=comparators,
                        comparator_losses=comp_losses,
                        algorithm_losses=trace.losses.copy(),
                        regret=regret, path_length=c_t, set_variation=s_t,
                        bound=bound, slack=bound - regret)
