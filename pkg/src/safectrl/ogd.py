"""Online gradient descent over time-varying convex domains.

The optimizer is generic: a domain is anything with ``project`` and
``contains``. Each step moves against the gradient and projects onto the next
domain; the per-step set-variation distance zeta compares the projections of
the same pre-update point onto the current and next domains. When the two
domains are the same object, zeta is exactly zero by construction.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams


class TimeVaryingDomain:
    """Interface for a per-step feasible set."""

    def project(self, point):
        raise NotImplementedError

    def contains(self, point, tol=1e-9):
        raise NotImplementedError


class BoxDomain(TimeVaryingDomain):
    """Axis-aligned box, mostly for tests and demos."""

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if np.any(self.lo > self.hi):
            raise InvalidParams("box needs lo <= hi")

    def project(self, point):
        return np.clip(np.asarray(point, dtype=float), self.lo, self.hi)

    def contains(self, point, tol=1e-9):
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))


@dataclass
class OgdState:
    """Mutable optimizer state: current decision, step size, and logs."""

    decision: np.ndarray
    eta: float
    step: int = 0
    cumulative_loss: float = 0.0
    zeta_log: list = field(default_factory=list)


def ogd_step(state, grad, domain_next, domain_curr):
    """One update x' = x - eta * grad, projected onto the next domain.

    Returns (new decision, zeta). zeta = || P_curr(x') - P_next(x') ||; it is
    exactly 0.0 (no projection round-off) when the two domains are the same
    object.
    """
    x_prime = state.decision - state.eta * np.asarray(grad, dtype=float)
    x_next = domain_next.project(x_prime)
    if domain_next is domain_curr:
        zeta = 0.0
    else:
        x_bar = domain_curr.project(x_prime)
        zeta = float(np.linalg.norm(np.asarray(x_bar) - np.asarray(x_next)))
    state.decision = x_next
    state.step += 1
    state.zeta_log.append(zeta)
    return x_next, zeta


def step_size_default(diameter, grad_bound, horizon):
    """eta = D / (G sqrt(T)), the order-optimal constant step size."""
    if horizon < 1 or grad_bound <= 0 or diameter <= 0:
        raise InvalidParams("need horizon >= 1, grad_bound > 0, diameter > 0")
    return diameter / (grad_bound * np.sqrt(horizon))
