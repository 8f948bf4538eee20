"""Frobenius-norm projection onto a gain set.

The set mixes matrix halfspaces (closed-form projector), a spectral-norm ball
(singular value clipping), row-norm constraints (closed form), and the affine
spectral constraint ||A - B K|| <= r (no closed form; an ADMM splitting on
Z = A - B K computes it). The intersection is handled by Dykstra's
alternating-projection scheme, whose output is certified by reconstructing
nonnegative multipliers over the active constraints (NNLS) and checking the
stationarity residual.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import (InfeasibleSafeSet, InvalidParams,
                     ProjectionDidNotConverge, ZeroNormal)
from .gainset import membership
from .model import opnorm


@dataclass(frozen=True)
class ProjectionConfig:
    max_iters: int = 5000
    kkt_tol: float = 1e-8
    feasibility_slack: float = 1e-9
    inner_tol: float = 1e-11     # residual target of the iterative sub-projector

    def __post_init__(self):
        if self.kkt_tol <= 0 or self.max_iters < 1:
            raise InvalidParams("kkt_tol must be > 0 and max_iters >= 1")


@dataclass(frozen=True)
class ProjectionResult:
    point: np.ndarray
    iterations: int
    kkt_residual: float
    distance: float


def project_halfspace(k, g, b):
    """Projection onto {K : <G, K>_F <= b}."""
    g = np.asarray(g, dtype=float)
    k = np.asarray(k, dtype=float)
    gn2 = float(np.sum(g * g))
    if gn2 == 0.0:
        raise ZeroNormal("halfspace normal must be nonzero")
    viol = float(np.sum(g * k)) - b
    if viol <= 0.0:
        return k
    return k - (viol / gn2) * g


def project_spectral_ball(k, radius):
    """Projection onto {K : ||K||_op <= radius} by clipping singular values."""
    if radius < 0:
        raise InvalidParams("radius must be nonnegative")
    k = np.asarray(k, dtype=float)
    u, s, vt = np.linalg.svd(k, full_matrices=False)
    if s[0] <= radius:
        return k
    return (u * np.minimum(s, radius)) @ vt


def project_row_norm(k, v, c):
    """Projection onto {K : ||K^T v||_2 <= c}."""
    k = np.asarray(k, dtype=float)
    v = np.asarray(v, dtype=float)
    vn2 = float(v @ v)
    if vn2 == 0.0:
        raise ZeroNormal("row-norm direction must be nonzero")
    g = k.T @ v
    gn = float(np.linalg.norm(g))
    if gn <= c:
        return k
    return k - np.outer(v, (1.0 - c / gn) * g) / vn2


class _AffineSpectralProjector:
    """Projection onto {K : ||S (A - B K) S^-1||_op <= radius} via ADMM on the
    splitting Z = Ab - Bb K M, where Ab = S A S^-1, Bb = S B, M = S^-1
    (S = identity gives the unweighted constraint).

    K-step: K + rho Bb^T Bb K M M^T = T + rho Bb^T (Ab - Z + U) M^T, solved in
    the joint eigenbases of Bb^T Bb and M M^T (computed once).
    Z-step: spectral clip of (Ab - Bb K M + U), with over-relaxation
    The scaled dual U and Z persist across calls for warm starting.
    """

    # round-off in the scaled dual update grows like eps * rho, so the cap
    # keeps the attainable point accuracy near 1e-11
    MAX_RHO = 1e5
    ALPHA = 1.8   # over-relaxation factor

    def __init__(self, a, b, radius, weight=None, tol=1e-13, max_iters=4000):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if weight is None:
            self.m = np.eye(a.shape[0])
            self.ab, self.bb = a, b
        else:
            weight = np.asarray(weight, dtype=float)
            self.m = np.linalg.inv(weight)
            self.ab = weight @ a @ self.m
            self.bb = weight @ b
        self.radius = float(radius)
        self.tol = tol
        self.max_iters = max_iters
        self.rho = 10.0
        # eigenbases for the Sylvester-type K-step
        self._lam, self._v = np.linalg.eigh(self.bb.T @ self.bb)
        self._om, self._w = np.linalg.eigh(self.m @ self.m.T)
        # in null directions of Bb^T Bb the rho-scaled term is analytically
        # zero; masking its round-off there keeps large rho from amplifying it
        scale = np.outer(self._lam, self._om)
        self._scale = scale
        self._null = scale <= 1e-12 * max(scale.max(), 1e-300)
        self.z = None
        self.u = None

    def _weighted_cl(self, k):
        return self.ab - self.bb @ k @ self.m

    def _solve(self, core_target, x):
        core = self._v.T @ x @ self._w
        core[self._null] = 0.0
        core = (core_target + self.rho * core) / (1.0 + self.rho * self._scale)
        return self._v @ core @ self._w.T

    def __call__(self, target):
        target = np.asarray(target, dtype=float)
        if opnorm(self._weighted_cl(target)) <= self.radius:
            return target
        if self.z is None:
            self.z = project_spectral_ball(self._weighted_cl(target), self.radius)
            self.u = np.zeros_like(self.ab)
        svd = scipy.linalg.svd
        bbt, mt = self.bb.T, self.m.T
        core_target = self._v.T @ target @ self._w
        k = target
        for it in range(self.max_iters):
            k = self._solve(core_target,
                            bbt @ (self.ab - self.z + self.u) @ mt)
            v = self._weighted_cl(k)
            v_rel = self.ALPHA * v + (1.0 - self.ALPHA) * self.z
            z_old = self.z
            # spectral clip of (v_rel + u), inlined to keep the loop cheap
            w = v_rel + self.u
            uu, ss, vvt = svd(w, check_finite=False)
            self.z = w if ss[0] <= self.radius else (
                (uu * np.minimum(ss, self.radius)) @ vvt)
            self.u = w - self.z
            d = v - self.z
            primal = np.sqrt(np.sum(d * d))
            d = bbt @ (self.z - z_old) @ mt
            dual = self.rho * np.sqrt(np.sum(d * d))
            if primal <= self.tol and dual <= self.tol:
                break
            # residual balancing keeps the penalty well scaled; the scaled
            # dual is rescaled so that rho * U stays constant
            if primal > 10.0 * dual and 2.0 * self.rho <= self.MAX_RHO:
                self.rho *= 2.0
                self.u /= 2.0
            elif dual > 10.0 * primal and self.rho > 1.0 / self.MAX_RHO:
                self.rho /= 2.0
                self.u *= 2.0
        return k


# warm-start cache for the iterative contraction projector: the same
# constraint data recurs at every step of a run, and reusing the ADMM state
# cuts the inner iteration count by an order of magnitude
_CONTRACTION_CACHE = {}


def reset_projection_cache():
    """Drop all warm-started projector state.

    Called at the start of every controller run and comparator pass so that
    results are a function of the run's own inputs only, not of whatever ran
    earlier in the process.
    """
    _CONTRACTION_CACHE.clear()


def _contraction_projector(a, b, radius, weight):
    key = (a.tobytes(), b.tobytes(), float(radius),
           None if weight is None else weight.tobytes())
    proj = _CONTRACTION_CACHE.get(key)
    if proj is None:
        if len(_CONTRACTION_CACHE) > 32:
            _CONTRACTION_CACHE.clear()
        proj = _AffineSpectralProjector(a, b, radius, weight=weight)
        _CONTRACTION_CACHE[key] = proj
    return proj


def _projector_list(gain_set, inner_tol=None):
    projs = []
    kinds = []
    for g, b in gain_set.halfspaces:
        projs.append(lambda k, g=g, b=b: project_halfspace(k, g, b))
        kinds.append(("halfspace", (g, b)))
    for v, c in gain_set.row_norms:
        projs.append(lambda k, v=v, c=c: project_row_norm(k, v, c))
        kinds.append(("row_norm", (v, c)))
    if gain_set.spectral_cap is not None:
        cap = gain_set.spectral_cap
        projs.append(lambda k: project_spectral_ball(k, cap))
        kinds.append(("spectral", cap))
    if gain_set.contraction is not None:
        a, b, radius = gain_set.contraction
        proj = _contraction_projector(a, b, radius, gain_set.contraction_weight)
        if inner_tol is not None:
            proj.tol = inner_tol
        projs.append(proj)
        kinds.append(("contraction", (a, b, radius)))
    return projs, kinds


def _spectral_block(mat, lin, act_gap):
    """Symmetric-basis certificate columns for an active spectral constraint.

    The subdifferential of the largest singular value at ``mat`` is
    {U1 S V1^T : S PSD, tr S = 1} over the top singular cluster (U1, V1), so
    the normal-cone contribution is parametrized by a small PSD matrix. ``lin``
    maps a subgradient of the singular value into gain space. Returns the
    columns of that linear map over a symmetric basis, plus the cluster size.
    """
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    m = int(np.sum(s >= s[0] - act_gap))
    cols = []
    for i in range(m):
        for j in range(i, m):
            sym = np.outer(u[:, i], vt[j])
            if j > i:
                sym = sym + np.outer(u[:, j], vt[i])
            cols.append(lin(sym).ravel())
    return cols, m


def _certificate_columns(gain_set, k, act_tol):
    """(Sub)gradient columns of constraints active at K, split into plain
    nonnegative-multiplier directions and PSD-multiplier spectral blocks."""
    dirs = []
    blocks = []   # of (column list, cluster size)
    for g, b in gain_set.halfspaces:
        if float(np.sum(g * k)) - b >= -act_tol:
            dirs.append(g.ravel())
    for v, c in gain_set.row_norms:
        g = k.T @ v
        gn = np.linalg.norm(g)
        if gn - c >= -act_tol and gn > 0:
            dirs.append(np.outer(v, g / gn).ravel())
    if gain_set.spectral_cap is not None and opnorm(k) - gain_set.spectral_cap >= -act_tol:
        blocks.append(_spectral_block(k, lambda d: d, act_tol))
    if gain_set.contraction is not None:
        a, b, radius = gain_set.contraction
        if gain_set.contraction_weight is None:
            cl = a - b @ k
            lin = lambda d: -b.T @ d
        else:
            s_w = gain_set.contraction_weight
            m_inv = gain_set._weight_inv
            cl = s_w @ (a - b @ k) @ m_inv
            b_eff = s_w @ b
            lin = lambda d: -b_eff.T @ d @ m_inv.T
        if opnorm(cl) - radius >= -act_tol:
            blocks.append(_spectral_block(cl, lin, act_tol))
    return dirs, blocks


def _in_cone(c, n_plain, blocks, slack=1e-10):
    if np.any(c[:n_plain] < -slack):
        return False
    pos = n_plain
    for _, m in blocks:
        if m > 1:
            s = np.zeros((m, m))
            idx = pos
            for i in range(m):
                for j in range(i, m):
                    s[i, j] = s[j, i] = c[idx]
                    idx += 1
            if np.linalg.eigvalsh(s)[0] < -slack:
                return False
        elif c[pos] < -slack:
            return False
        pos += m * (m + 1) // 2
    return True


def _cone_lstsq(mat, rhs, n_plain, blocks, tol, max_iters=2000):
    """min ||mat c - rhs|| over coefficients with the first n_plain entries
    nonnegative and each spectral block forming a PSD symmetric matrix.

    The unconstrained least-squares solution is tried first: when it already
    lies in the cone (the generic case) its residual is exact. Otherwise the
    tiny QP is solved by accelerated projected gradient."""
    c_free, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    if _in_cone(c_free, n_plain, blocks):
        return float(np.linalg.norm(mat @ c_free - rhs))
    at = mat.T
    lip = np.linalg.norm(mat, 2) ** 2
    if lip == 0.0:
        return float(np.linalg.norm(rhs))
    step = 1.0 / lip
    c = np.zeros(mat.shape[1])
    y = c
    t_acc = 1.0
    best = np.inf
    for _ in range(max_iters):
        grad = at @ (mat @ y - rhs)
        c_new = y - step * grad
        c_new[:n_plain] = np.maximum(c_new[:n_plain], 0.0)
        pos = n_plain
        for _, m in blocks:
            width = m * (m + 1) // 2
            if m > 1:
                s = np.zeros((m, m))
                idx = pos
                for i in range(m):
                    for j in range(i, m):
                        s[i, j] = s[j, i] = c_new[idx]
                        idx += 1
                w, v = np.linalg.eigh(s)
                s = (v * np.maximum(w, 0.0)) @ v.T
                idx = pos
                for i in range(m):
                    for j in range(i, m):
                        c_new[idx] = s[i, j]
                        idx += 1
            else:
                c_new[pos] = max(c_new[pos], 0.0)
            pos += width
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        y = c_new + ((t_acc - 1.0) / t_new) * (c_new - c)
        c, t_acc = c_new, t_new
        resid = float(np.linalg.norm(mat @ c - rhs))
        if resid < best:
            best = resid
        if best <= tol:
            break
    return best


def kkt_residual(gain_set, k_prime, k, act_tol=1e-6, tol=0.0):
    """Stationarity defect: distance of K' - K from the cone spanned by the
    active constraints' (sub)gradients, with PSD multiplier blocks for the
    spectral constraints. Complementarity holds by restriction to active
    constraints; ``tol`` lets the solver stop early once the defect is
    certifiably below it."""
    resid_vec = (np.asarray(k_prime, float) - np.asarray(k, float)).ravel()
    if np.linalg.norm(resid_vec) == 0.0:
        return 0.0
    dirs, blocks = _certificate_columns(gain_set, np.asarray(k, float), act_tol)
    cols = list(dirs)
    for block_cols, _ in blocks:
        cols.extend(block_cols)
    if not cols:
        return float(np.linalg.norm(resid_vec))
    mat = np.stack(cols, axis=1)
    if not blocks:
        _, rnorm = scipy.optimize.nnls(mat, resid_vec)
        return float(rnorm)
    return _cone_lstsq(mat, resid_vec, len(dirs), blocks, tol)


def project_gain_set(gain_set, k_prime, cfg=None):
    """Nearest point of the gain set to K' in Frobenius norm (Dykstra)."""
    cfg = cfg or ProjectionConfig()
    k_prime = np.asarray(k_prime, dtype=float)
    ok, _ = membership(gain_set, k_prime, cfg.feasibility_slack)
    if ok:
        return ProjectionResult(point=k_prime.copy(), iterations=0,
                                kkt_residual=0.0, distance=0.0)
    projs, _ = _projector_list(gain_set, cfg.inner_tol)

    # fast path: when a single constraint is violated, projecting onto it
    # alone is exact provided the result satisfies all the others
    viol = gain_set.violations(k_prime)
    hot = np.flatnonzero(viol > cfg.feasibility_slack)
    if hot.size == 1:
        x = projs[hot[0]](k_prime)
        feas, _ = membership(gain_set, x, cfg.feasibility_slack)
        if feas:
            resid = kkt_residual(gain_set, k_prime, x, tol=cfg.kkt_tol)
            if resid <= cfg.kkt_tol:
                return ProjectionResult(
                    point=x, iterations=1, kkt_residual=resid,
                    distance=float(np.linalg.norm(x - k_prime)))

    x = k_prime.copy()
    corrections = [np.zeros_like(x) for _ in projs]
    scale = max(1.0, float(np.linalg.norm(k_prime)))
    prev_delta = None
    for cycle in range(1, cfg.max_iters + 1):
        x_prev = x
        for i, proj in enumerate(projs):
            y = proj(x + corrections[i])
            corrections[i] = x + corrections[i] - y
            x = y
        delta = x - x_prev
        change = np.linalg.norm(delta)
        # near-degenerate corners make the cycle converge linearly with ratio
        # close to 1; when successive steps shrink geometrically along a
        # stable direction, jump to the extrapolated limit and let the
        # membership + KKT certificate decide whether to accept it
        if cycle % 20 == 0 and prev_delta is not None:
            prev_norm = np.linalg.norm(prev_delta)
            if prev_norm > 0.0 and change > 0.0:
                ratio = change / prev_norm
                cosine = float(np.sum(delta * prev_delta)) / (change * prev_norm)
                if 0.5 < ratio < 1.0 and cosine > 0.9:
                    cand = x + delta * (ratio / (1.0 - ratio))
                    for _ in range(50):
                        feas, _ = membership(gain_set, cand,
                                             cfg.feasibility_slack)
                        if feas:
                            break
                        for proj in projs:
                            cand = proj(cand)
                    feas, _ = membership(gain_set, cand, cfg.feasibility_slack)
                    if feas:
                        resid = kkt_residual(gain_set, k_prime, cand,
                                             tol=cfg.kkt_tol)
                        if resid <= cfg.kkt_tol:
                            return ProjectionResult(
                                point=cand, iterations=cycle,
                                kkt_residual=resid,
                                distance=float(np.linalg.norm(cand - k_prime)))
        prev_delta = delta
        if change <= 1e-10 * scale:
            feas, worst = membership(gain_set, x, cfg.feasibility_slack)
            if feas:
                resid = kkt_residual(gain_set, k_prime, x, tol=cfg.kkt_tol)
                if resid <= cfg.kkt_tol:
                    return ProjectionResult(
                        point=x, iterations=cycle, kkt_residual=resid,
                        distance=float(np.linalg.norm(x - k_prime)))
    feas, worst = membership(gain_set, x, cfg.feasibility_slack)
    if feas:
        resid = kkt_residual(gain_set, k_prime, x, tol=cfg.kkt_tol)
        if resid <= cfg.kkt_tol:
            return ProjectionResult(point=x, iterations=cfg.max_iters,
                                    kkt_residual=resid,
                                    distance=float(np.linalg.norm(x - k_prime)))
    feasible, _ = feasibility_probe(gain_set, cfg)
    if not feasible:
        raise InfeasibleSafeSet("gain set is empty (feasibility probe failed)")
    raise ProjectionDidNotConverge(
        f"no certified projection after {cfg.max_iters} cycles "
        f"(violation {worst:.3g})")


def feasibility_probe(gain_set, cfg=None, start=None):
    """Alternating projections from K = 0 (or ``start``): returns
    (feasible, witness-or-None)."""
    cfg = cfg or ProjectionConfig()
    shape = _set_shape(gain_set)
    if shape is None:
        return True, None  # unconstrained
    x = np.zeros(shape) if start is None else np.asarray(start, dtype=float)
    ok, _ = membership(gain_set, x, cfg.feasibility_slack)
    if ok:
        return True, x
    projs, _ = _projector_list(gain_set, cfg.inner_tol)
    for _ in range(cfg.max_iters):
        x_prev = x
        for proj in projs:
            x = proj(x)
        ok, worst = membership(gain_set, x, cfg.feasibility_slack)
        if ok:
            return True, x
        if np.linalg.norm(x - x_prev) <= 1e-14 * max(1.0, np.linalg.norm(x)):
            break  # stalled outside the set: empty intersection
    return False, None


def _set_shape(gain_set):
    if gain_set.contraction is not None:
        a, b, _ = gain_set.contraction
        return (b.shape[1], a.shape[0])
    for g, _ in gain_set.halfspaces:
        return g.shape
    return None
