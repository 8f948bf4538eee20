"""Linear time-varying system model, quadratic stage losses, and the loss
expressed in gain coordinates.

Conventions used throughout the package:

* dynamics: x_{t+1} = A_t x_t + B_t u_t + w_t with ``||w_t|| <= W``
* control:  u_t = -K_t x_t (the gain enters with a minus sign everywhere)
* loss:     c_t(x_{t+1}, u_t) = x_{t+1}^T Q_t x_{t+1} + u_t^T R_t u_t
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidParams, NoiseBoundViolated

NOISE_TOL = 1e-12
PSD_TOL = 1e-10
NORM_CAP_TOL = 1e-9


def _as_matrix_seq(mats, name):
    out = tuple(np.asarray(m, dtype=float) for m in mats)
    if not out:
        raise InvalidParams(f"{name} must be non-empty")
    for m in out:
        if m.ndim != 2:
            raise DimensionMismatch(f"{name} entries must be 2-D, got {m.ndim}-D")
        if not np.all(np.isfinite(m)):
            raise InvalidParams(f"{name} entries must be finite")
    return out


def opnorm(m):
    """Operator (spectral) norm of a matrix."""
    return float(np.linalg.norm(m, 2))


@dataclass(frozen=True)
class LtvSystem:
    """Time-indexed (A_t, B_t) matrices with norm caps and a noise bound.

    ``a_mats[t]`` and ``b_mats[t]`` are the dynamics at step t (0-based).
    """

    a_mats: tuple
    b_mats: tuple
    kappa_a: float
    kappa_b: float
    noise_bound: float

    def __post_init__(self):
        object.__setattr__(self, "a_mats", _as_matrix_seq(self.a_mats, "a_mats"))
        object.__setattr__(self, "b_mats", _as_matrix_seq(self.b_mats, "b_mats"))
        if len(self.a_mats) != len(self.b_mats):
            raise DimensionMismatch("a_mats and b_mats must have equal length")
        d_x = self.a_mats[0].shape[0]
        d_u = self.b_mats[0].shape[1]
        for a, b in zip(self.a_mats, self.b_mats):
            if a.shape != (d_x, d_x) or b.shape != (d_x, d_u):
                raise DimensionMismatch("inconsistent system matrix shapes")
            if opnorm(a) > self.kappa_a + NORM_CAP_TOL:
                raise InvalidParams("||A_t|| exceeds kappa_a")
            if opnorm(b) > self.kappa_b + NORM_CAP_TOL:
                raise InvalidParams("||B_t|| exceeds kappa_b")
        if self.noise_bound < 0:
            raise InvalidParams("noise_bound must be nonnegative")

    @classmethod
    def time_invariant(cls, a, b, horizon, noise_bound, kappa_a=None, kappa_b=None):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if kappa_a is None:
            kappa_a = opnorm(a)
        if kappa_b is None:
            kappa_b = opnorm(b)
        return cls((a,) * horizon, (b,) * horizon, kappa_a, kappa_b, noise_bound)

    @property
    def horizon(self):
        return len(self.a_mats)

    @property
    def d_x(self):
        return self.a_mats[0].shape[0]

    @property
    def d_u(self):
        return self.b_mats[0].shape[1]


@dataclass(frozen=True)
class SafetySpec:
    """Polytopic state and input constraints, one record per step.

    ``state_rows[i] @ x <= state_rhs[i]`` and ``input_rows[i] @ u <= input_rhs[i]``.
    Indexing past the last record repeats it, so time-invariant constraints can
    be given as a single record.
    """

    state_rows: tuple
    state_rhs: tuple
    input_rows: tuple
    input_rhs: tuple

    def __post_init__(self):
        sr = tuple(np.asarray(m, dtype=float) for m in self.state_rows)
        sb = tuple(np.asarray(v, dtype=float).ravel() for v in self.state_rhs)
        ir = tuple(np.asarray(m, dtype=float) for m in self.input_rows)
        ib = tuple(np.asarray(v, dtype=float).ravel() for v in self.input_rhs)
        if not (len(sr) == len(sb) and len(ir) == len(ib)):
            raise DimensionMismatch("constraint row/rhs sequences must align")
        for m, v in zip(sr, sb):
            if m.shape[0] != v.shape[0]:
                raise DimensionMismatch("state row count must match rhs length")
            if m.shape[0] and np.any(np.linalg.norm(m, axis=1) == 0.0):
                raise InvalidParams("state constraint rows must have nonzero norm")
        for m, v in zip(ir, ib):
            if m.shape[0] != v.shape[0]:
                raise DimensionMismatch("input row count must match rhs length")
        object.__setattr__(self, "state_rows", sr)
        object.__setattr__(self, "state_rhs", sb)
        object.__setattr__(self, "input_rows", ir)
        object.__setattr__(self, "input_rhs", ib)

    @classmethod
    def constant(cls, state_rows, state_rhs, input_rows, input_rhs):
        return cls((state_rows,), (state_rhs,), (input_rows,), (input_rhs,))

    @classmethod
    def box(cls, x_bound, u_bound):
        """Symmetric box constraints |x_i| <= x_bound_i, |u_j| <= u_bound_j."""
        x_bound = np.atleast_1d(np.asarray(x_bound, dtype=float))
        u_bound = np.atleast_1d(np.asarray(u_bound, dtype=float))
        d_x, d_u = x_bound.size, u_bound.size
        lx = np.vstack([np.eye(d_x), -np.eye(d_x)])
        lu = np.vstack([np.eye(d_u), -np.eye(d_u)])
        return cls.constant(lx, np.concatenate([x_bound, x_bound]),
                            lu, np.concatenate([u_bound, u_bound]))

    @classmethod
    def input_only(cls, d_x, input_rows, input_rhs):
        """No state constraints (empty polytope rows), input polytope only."""
        return cls.constant(np.zeros((0, d_x)), np.zeros(0), input_rows, input_rhs)

    def state_at(self, t):
        i = min(t, len(self.state_rows) - 1)
        return self.state_rows[i], self.state_rhs[i]

    def input_at(self, t):
        i = min(t, len(self.input_rows) - 1)
        return self.input_rows[i], self.input_rhs[i]


def _check_psd(m, name):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square")
    if not np.allclose(m, m.T, atol=1e-9):
        raise InvalidParams(f"{name} must be symmetric")
    if np.linalg.eigvalsh(m).min() < -PSD_TOL:
        raise InvalidParams(f"{name} must be PSD")
    return m


@dataclass(frozen=True)
class LossSpec:
    """Quadratic stage loss weights, one (Q_t, R_t) pair per step.

    ``beta`` and ``grad_scale`` are the loss/gradient scale constants implied
    by the weights; they feed the regret-bound evaluation.
    """

    q_weights: tuple
    r_weights: tuple
    beta: float = field(default=None)
    grad_scale: float = field(default=None)

    def __post_init__(self):
        qs = tuple(_check_psd(q, "Q_t") for q in self.q_weights)
        rs = tuple(_check_psd(r, "R_t") for r in self.r_weights)
        if len(qs) != len(rs):
            raise DimensionMismatch("q_weights and r_weights must align")
        object.__setattr__(self, "q_weights", qs)
        object.__setattr__(self, "r_weights", rs)
        scale = max(max(opnorm(q) for q in qs), max(opnorm(r) for r in rs))
        beta = 2.0 * scale
        if self.beta is None:
            object.__setattr__(self, "beta", beta)
        if self.grad_scale is None:
            object.__setattr__(self, "grad_scale", 2.0 * beta)

    @classmethod
    def constant(cls, q, r):
        return cls((q,), (r,))

    @classmethod
    def identity(cls, d_x, d_u):
        return cls.constant(np.eye(d_x), np.eye(d_u))

    @classmethod
    def scaled_identity(cls, q_scalars, r_scalars, d_x, d_u):
        """Scalar weight schedules q_t, r_t applied to identity matrices."""
        qs = tuple(float(q) * np.eye(d_x) for q in q_scalars)
        rs = tuple(float(r) * np.eye(d_u) for r in r_scalars)
        return cls(qs, rs)

    def q_at(self, t):
        return self.q_weights[min(t, len(self.q_weights) - 1)]

    def r_at(self, t):
        return self.r_weights[min(t, len(self.r_weights) - 1)]


@dataclass(frozen=True)
class BoundConstants:
    """Deterministic constants entering the regret bound.

    ``d_state_input`` is the uniform state/input norm bound, ``diameter`` the
    gain-set diameter in Frobenius norm, ``grad_bound`` the gradient norm cap.
    """

    kappa: float
    gamma: float
    noise_bound: float
    grad_scale: float
    kappa_b: float
    d_x: int
    d_u: int
    d_state_input: float
    diameter: float
    grad_bound: float

    @classmethod
    def derive(cls, kappa, gamma, noise_bound, grad_scale, kappa_b, d_x, d_u):
        if not (0.0 < gamma < 1.0):
            raise InvalidParams("gamma must lie in (0, 1)")
        if kappa <= 0:
            raise InvalidParams("kappa must be positive")
        d = max(noise_bound / gamma, noise_bound * kappa / gamma)
        d_f = 2.0 * kappa * np.sqrt(min(d_u, d_x))
        g_f = grad_scale * d * d_x * d_u * (kappa_b + 1.0)
        return cls(kappa, gamma, noise_bound, grad_scale, kappa_b, d_x, d_u,
                   d, d_f, g_f)

    def recompute(self):
        return BoundConstants.derive(self.kappa, self.gamma, self.noise_bound,
                                     self.grad_scale, self.kappa_b,
                                     self.d_x, self.d_u)


def check_gain(k, sys):
    """Validate a gain matrix against the system dimensions."""
    k = np.asarray(k, dtype=float)
    if k.shape != (sys.d_u, sys.d_x):
        raise DimensionMismatch(
            f"gain must be {sys.d_u}x{sys.d_x}, got {k.shape}")
    if not np.all(np.isfinite(k)):
        raise InvalidParams("gain entries must be finite")
    return k


def step_dynamics(sys, t, x, u, w):
    """One step of x_{t+1} = A_t x_t + B_t u_t + w_t; rejects out-of-bound noise."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != (sys.d_x,) or w.shape != (sys.d_x,) or u.shape != (sys.d_u,):
        raise DimensionMismatch("state/input/noise dimension mismatch")
    if np.linalg.norm(w) > sys.noise_bound + NOISE_TOL:
        raise NoiseBoundViolated(
            f"||w||={np.linalg.norm(w):.6g} exceeds W={sys.noise_bound}")
    return sys.a_mats[t] @ x + sys.b_mats[t] @ u + w


def recover_noise(sys, t, x_next, x, u):
    """Invert the dynamics for the noise: w_t = x_{t+1} - A_t x_t - B_t u_t."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    x_next = np.asarray(x_next, dtype=float)
    if x.shape != (sys.d_x,) or x_next.shape != (sys.d_x,) or u.shape != (sys.d_u,):
        raise DimensionMismatch("state/input dimension mismatch")
    return x_next - sys.a_mats[t] @ x - sys.b_mats[t] @ u


def stage_loss(loss, t, x_next, u):
    """Quadratic stage loss x_{t+1}^T Q_t x_{t+1} + u_t^T R_t u_t."""
    x_next = np.asarray(x_next, dtype=float)
    u = np.asarray(u, dtype=float)
    q, r = loss.q_at(t), loss.r_at(t)
    if x_next.shape != (q.shape[0],) or u.shape != (r.shape[0],):
        raise DimensionMismatch("loss argument dimension mismatch")
    return float(x_next @ q @ x_next + u @ r @ u)


def closed_loop_next(sys, t, x, w, k):
    """(A_t - B_t K) x + w, the next state under u = -Kx."""
    return (sys.a_mats[t] - sys.b_mats[t] @ k) @ np.asarray(x, float) + np.asarray(w, float)


def loss_in_gain(loss, sys, t, x, w, k):
    """Stage loss as a function of the gain: c_t((A_t - B_t K)x + w, -Kx)."""
    k = check_gain(k, sys)
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != (sys.d_x,) or w.shape != (sys.d_x,):
        raise DimensionMismatch("state/noise dimension mismatch")
    return stage_loss(loss, t, closed_loop_next(sys, t, x, w, k), -k @ x)


def loss_gradient(loss, sys, t, x, w, k):
    """Closed-form gradient of loss_in_gain with respect to the gain.

    grad = -2 B_t^T Q_t ((A_t - B_t K)x + w) x^T + 2 R_t K x x^T
    """
    k = check_gain(k, sys)
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != (sys.d_x,) or w.shape != (sys.d_x,):
        raise DimensionMismatch("state/noise dimension mismatch")
    q, r = loss.q_at(t), loss.r_at(t)
    x_next = closed_loop_next(sys, t, x, w, k)
    return np.outer(-2.0 * sys.b_mats[t].T @ (q @ x_next) + 2.0 * r @ (k @ x), x)
