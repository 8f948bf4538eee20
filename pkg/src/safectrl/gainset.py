"""Construction and membership testing of safe gain sets.

A gain set collects, for the current state x_t:

* matrix halfspaces <G_i, K>_F <= b_i encoding the tightened state polytope
  at step t+1 and the input polytope at step t,
* an operator-norm cap ||K|| <= kappa,
* the contraction constraint ||A_t - B_t K|| <= 1 - gamma, optionally in a
  similarity-weighted norm ||S (A_t - B_t K) S^-1|| <= 1 - gamma,
* optionally row-norm constraints ||v_i^T K|| <= c_i (used by the
  time-invariant set that bounds the input through a uniform state bound).

State rows are tightened row-wise by W * ||row||_2, the exact robust
counterpart of a single row against a 2-norm noise ball.

The weighted contraction variant exists because for some plants no gain makes
the raw closed loop a strict operator-norm contraction (an exactly discretized
double integrator has min_K ||A - B K|| = 1), while a strict contraction in a
plant-adapted norm always exists whenever the closed-loop spectrum can be
placed inside the radius. ``contraction_weight`` computes such a weighting
from a Riccati reference gain and a Lyapunov equation.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, InfeasibleSafeSet, InvalidParams
from .model import opnorm


@dataclass(frozen=True)
class GainSet:
    """Intersection of matrix halfspaces and spectral-norm constraints."""

    halfspaces: tuple = ()           # of (G_i, b_i), meaning <G_i, K>_F <= b_i
    spectral_cap: float = None       # ||K||_op <= spectral_cap
    contraction: tuple = None        # (A, B, radius) meaning ||A - B K||_op <= radius
    contraction_weight: object = None  # S: measure the contraction as ||S(A-BK)S^-1||
    row_norms: tuple = ()            # of (v_i, c_i), meaning ||v_i^T K||_2 <= c_i

    def __post_init__(self):
        hs = []
        for g, b in self.halfspaces:
            g = np.asarray(g, dtype=float)
            b = float(b)
            if np.linalg.norm(g) == 0.0:
                if b < 0.0:
                    raise InfeasibleSafeSet(
                        "zero-normal halfspace with negative offset")
                continue  # vacuous
            hs.append((g, b))
        object.__setattr__(self, "halfspaces", tuple(hs))
        rn = tuple((np.asarray(v, dtype=float).ravel(), float(c))
                   for v, c in self.row_norms)
        object.__setattr__(self, "row_norms", rn)
        if self.contraction is not None:
            a, b, radius = self.contraction
            object.__setattr__(self, "contraction",
                               (np.asarray(a, float), np.asarray(b, float),
                                float(radius)))
        if self.contraction_weight is not None:
            s = np.asarray(self.contraction_weight, dtype=float)
            object.__setattr__(self, "contraction_weight", s)
            object.__setattr__(self, "_weight_inv", np.linalg.inv(s))
        else:
            object.__setattr__(self, "_weight_inv", None)

    def closed_loop_norm(self, k):
        """||A - B K|| in the (possibly weighted) contraction norm."""
        a, b, _ = self.contraction
        m = a - b @ np.asarray(k, dtype=float)
        if self.contraction_weight is not None:
            m = self.contraction_weight @ m @ self._weight_inv
        return opnorm(m)

    def violations(self, k):
        """All constraint violations at K (positive entries mean violated),
        ordered as halfspaces, row norms, spectral cap, contraction."""
        k = np.asarray(k, dtype=float)
        out = []
        for g, b in self.halfspaces:
            if g.shape != k.shape:
                raise DimensionMismatch("halfspace normal shape mismatch")
            out.append(float(np.sum(g * k)) - b)
        for v, c in self.row_norms:
            out.append(float(np.linalg.norm(k.T @ v)) - c)
        if self.spectral_cap is not None:
            out.append(opnorm(k) - self.spectral_cap)
        if self.contraction is not None:
            out.append(self.closed_loop_norm(k) - self.contraction[2])
        return np.asarray(out)


@dataclass(frozen=True)
class TighteningReport:
    """Per-row slack of the tightened state constraints plus feasibility."""

    state_slack: np.ndarray
    feasible: bool


def membership(gain_set, k, tol=1e-9):
    """Whether K lies in the set within tol, plus the largest violation."""
    v = gain_set.violations(k)
    worst = float(v.max()) if v.size else 0.0
    return worst <= tol, worst


def contraction_weight(a, b, radius, cost_scale=1.0):
    """Similarity weighting S under which a strict closed-loop contraction of
    the given radius exists.

    Computes a Riccati (discrete LQR, identity costs) reference gain K0 and,
    when its closed loop M0 = A - B K0 is not already an operator-norm
    contraction, returns S = P^(1/2) for the Lyapunov solution of
    (M0/r)^T P (M0/r) - P = -I, which guarantees ||S M0 S^-1|| < radius.
    Returns None when no weighting is needed. Raises InvalidParams when the
    closed-loop spectrum cannot be certified inside the radius.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q = cost_scale * np.eye(a.shape[0])
    r = cost_scale * np.eye(b.shape[1])
    try:
        p = scipy.linalg.solve_discrete_are(a, b, q, r)
    except np.linalg.LinAlgError as exc:
        raise InvalidParams(
            f"no stabilizing reference gain exists for this plant: {exc}")
    k0 = np.linalg.solve(r + b.T @ p @ b, b.T @ p @ a)
    m0 = a - b @ k0
    if opnorm(m0) < radius:
        return None
    if max(abs(np.linalg.eigvals(m0))) >= radius:
        raise InvalidParams(
            f"reference closed loop has spectral radius >= {radius}; "
            "no similarity weighting can certify the contraction")
    lyap = scipy.linalg.solve_discrete_lyapunov((m0 / radius).T,
                                                np.eye(a.shape[0]))
    s = scipy.linalg.sqrtm(lyap)
    return np.real_if_close(s).astype(float)


def build_gain_set(sys, safety, consts, t, x, weight=None):
    """Safe gain set at step t given the current state x_t.

    State rows constrain x_{t+1} and therefore use the step-(t+1) polytope;
    input rows use the step-t polytope. Zero-normal halfspaces (x = 0, or a
    degenerate row) are dropped when vacuous and abort the run when impossible.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.d_x,) or not np.all(np.isfinite(x)):
        raise DimensionMismatch("state must be a finite d_x vector")
    a, b = sys.a_mats[t], sys.b_mats[t]
    w = sys.noise_bound

    halfspaces = []
    lx, lx_rhs = safety.state_at(t + 1)
    slack = np.empty(lx.shape[0])
    for i in range(lx.shape[0]):
        row = lx[i]
        rhs = lx_rhs[i] - row @ (a @ x) - w * np.linalg.norm(row)
        slack[i] = rhs
        normal = -np.outer(b.T @ row, x)
        if np.linalg.norm(normal) == 0.0:
            if rhs < 0.0:
                raise InfeasibleSafeSet(
                    f"state row {i} cannot hold for any gain at step {t}",
                    TighteningReport(slack[:i + 1].copy(), False))
            continue
        halfspaces.append((normal, rhs))

    lu, lu_rhs = safety.input_at(t)
    for j in range(lu.shape[0]):
        normal = -np.outer(lu[j], x)
        if np.linalg.norm(normal) == 0.0:
            if lu_rhs[j] < 0.0:
                raise InfeasibleSafeSet(
                    f"input row {j} cannot hold for any gain at step {t}")
            continue
        halfspaces.append((normal, lu_rhs[j]))

    return GainSet(halfspaces=tuple(halfspaces),
                   spectral_cap=consts.kappa,
                   contraction=(a, b, 1.0 - consts.gamma),
                   contraction_weight=weight)


def time_invariant_gain_set(sys, safety, consts, state_bound, weight=None):
    """Time-invariant safe set: the input polytope robustified over all states
    with ||x|| <= state_bound becomes per-row gain norm constraints."""
    lu, lu_rhs = safety.input_at(0)
    row_norms = tuple((lu[j], lu_rhs[j] / state_bound)
                      for j in range(lu.shape[0])
                      if np.linalg.norm(lu[j]) > 0.0)
    return GainSet(spectral_cap=consts.kappa,
                   contraction=(sys.a_mats[0], sys.b_mats[0], 1.0 - consts.gamma),
                   contraction_weight=weight,
                   row_norms=row_norms)


@dataclass(frozen=True)
class SafetyReport:
    """Row-wise slacks of the realized constraints (negative = violated)."""

    state_slack: np.ndarray
    input_slack: np.ndarray

    @property
    def ok(self):
        return bool(np.all(self.state_slack >= 0.0)
                    and np.all(self.input_slack >= 0.0))

    @property
    def min_slack(self):
        slacks = np.concatenate([self.state_slack, self.input_slack])
        return float(slacks.min()) if slacks.size else np.inf


def verify_realized_safety(safety, t, x_next, u):
    """Slacks of L_{x,t+1} x_{t+1} <= l_{x,t+1} and L_{u,t} u_t <= l_{u,t}."""
    x_next = np.asarray(x_next, dtype=float)
    u = np.asarray(u, dtype=float)
    lx, lx_rhs = safety.state_at(t + 1)
    lu, lu_rhs = safety.input_at(t)
    return SafetyReport(state_slack=lx_rhs - lx @ x_next,
                        input_slack=lu_rhs - lu @ u)
