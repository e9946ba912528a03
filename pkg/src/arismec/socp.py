"""Embedded interior-point solver for the convex subproblems.

Minimizes a linear objective over box, linear, convex-quadratic, and
rotated-cone (hyperbolic, u v >= ||w||^2 with u, v >= 0) inequality
constraints in real variables.  Every constraint is expressed as a
quadratic "margin" s_i(x) > 0, so the log-barrier gradient and Hessian
are exact; the path-following loop is a plain primal barrier method with
damped Newton centering.  A phase-1 slack problem produces a strictly
feasible start or a certificate of infeasibility.

Deterministic for fixed inputs; statuses are "optimal" (KKT residuals
within tolerance), "infeasible", or "max_iter".
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.linalg.lapack import dpotrf, dpotrs

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"


@dataclass
class SolverOptions:
    kkt_tol: float = 1e-8        # certification threshold for "optimal"
    gap_rel: float = 1e-9        # target duality gap relative to max(1, |objective|)
    mu: float = 25.0             # barrier parameter growth per round
    max_rounds: int = 60
    max_newton: int = 60
    center_tol: float = 1e-18    # squared Newton decrement at which a point counts as centered
    interior_margin: float = 1e-10  # normalized slack needed to accept a warm start
    t_init: float = 1.0          # starting barrier weight; continuation passes the last rung


@dataclass(eq=False)
class SolveReport:
    status: str
    x: np.ndarray
    objective: float
    kkt_stationarity: float
    kkt_feasibility: float
    kkt_gap: float
    barrier_rounds: int = 0
    newton_steps: int = 0
    final_t: float = 1.0
    message: str = ""


@dataclass(eq=False)
class _Cone:
    u_coef: np.ndarray
    u_off: float
    v_coef: np.ndarray
    v_off: float
    W: np.ndarray | None     # (q, n) rows of the affine w(x); None means constant w
    w0: np.ndarray           # (q,)


class ConvexProgram:
    """Constraint container; x has n real entries."""

    def __init__(self, n: int, objective):
        self.n = int(n)
        self.objective = np.asarray(objective, dtype=float)
        if self.objective.shape != (self.n,):
            raise ValueError("objective length mismatch")
        self.lower = np.full(self.n, -np.inf)
        self.upper = np.full(self.n, np.inf)
        self.linear: list[tuple[np.ndarray, float]] = []
        self.quadratics: list[tuple[np.ndarray, np.ndarray, float]] = []
        self.cones: list[_Cone] = []
        self.x0: np.ndarray | None = None
        self.var_scales: np.ndarray | None = None

    def set_bounds(self, index: int, lo=None, hi=None):
        if lo is not None:
            self.lower[index] = lo
        if hi is not None:
            self.upper[index] = hi

    def add_linear(self, a, b: float):
        """a . x <= b."""
        self.linear.append((np.asarray(a, dtype=float), float(b)))

    def add_quadratic(self, Q, q, r: float, check: bool = True):
        """x' Q x + q . x + r <= 0 with Q symmetric PSD."""
        Q = np.asarray(Q, dtype=float)
        Q = 0.5 * (Q + Q.T)
        if check and Q.shape[0] and float(np.linalg.eigvalsh(Q)[0]) < -1e-9 * max(
                1.0, float(np.abs(Q).max())):
            raise ValueError("quadratic constraint matrix is not PSD")
        self.quadratics.append((Q, np.asarray(q, dtype=float), float(r)))

    def add_cone(self, u_coef, u_off: float, v_coef, v_off: float, w0, W=None):
        """(u_coef.x + u_off)(v_coef.x + v_off) >= ||W x + w0||^2, both factors >= 0."""
        w0 = np.atleast_1d(np.asarray(w0, dtype=float))
        self.cones.append(_Cone(np.asarray(u_coef, dtype=float), float(u_off),
                                np.asarray(v_coef, dtype=float), float(v_off),
                                None if W is None else np.asarray(W, dtype=float), w0))


@dataclass(eq=False)
class _MarginSet:
    """Margins s_i(y) > 0 in one batch: affine rows first, then the
    quadratic ones (convex quadratics and cone products).  The quadratic
    terms are also kept as stacked arrays so the per-iteration work is a
    handful of einsum calls instead of a Python loop per margin."""
    aff_A: np.ndarray                      # (ma, n)
    aff_b: np.ndarray                      # (ma,)
    quads: list[tuple[np.ndarray, np.ndarray, float]]
    kappa: np.ndarray                      # (m,) original-unit scale per margin
    kinds: list[str]
    guard_A: np.ndarray                    # (g, n) affine factors that must stay > 0
    guard_b: np.ndarray

    def __post_init__(self):
        n = self.aff_A.shape[1]
        if self.quads:
            self.qP = np.stack([P for P, _, _ in self.quads])
            self.qp = np.stack([p for _, p, _ in self.quads])
            self.qr = np.array([r for _, _, r in self.quads])
        else:
            self.qP = np.zeros((0, n, n))
            self.qp = np.zeros((0, n))
            self.qr = np.zeros(0)
        self.qP2 = self.qP.reshape(self.qP.shape[0], n * n)

    @property
    def m(self) -> int:
        return self.aff_b.shape[0] + len(self.quads)

    def values(self, y: np.ndarray) -> np.ndarray:
        va = self.aff_A @ y + self.aff_b
        if not self.quads:
            return va
        py = self.qP @ y                   # (Q, n)
        vq = py @ y + self.qp @ y + self.qr
        return np.concatenate([va, vq])

    def grads(self, y: np.ndarray) -> np.ndarray:
        if not self.quads:
            return self.aff_A
        gq = 2.0 * (self.qP @ y) + self.qp
        return np.vstack([self.aff_A, gq])

    def values_grads(self, y: np.ndarray):
        """Margins and their gradients sharing one quadratic product."""
        va = self.aff_A @ y + self.aff_b
        if not self.quads:
            return va, self.aff_A
        py = self.qP @ y
        vq = py @ y + self.qp @ y + self.qr
        return (np.concatenate([va, vq]),
                np.vstack([self.aff_A, 2.0 * py + self.qp]))

    def domain_ok(self, y: np.ndarray) -> bool:
        if self.guard_b.size and float(np.min(self.guard_A @ y + self.guard_b)) <= 0.0:
            return False
        return float(np.min(self.values(y))) > 0.0

    def curvature_correction(self, H: np.ndarray, s: np.ndarray) -> None:
        if self.quads:
            base = self.aff_b.shape[0]
            H -= ((2.0 / s[base:]) @ self.qP2).reshape(H.shape)

    def max_step(self, y, s, G, dy) -> float:
        """Largest step length along dy keeping every margin and guard
        positive (fraction-to-boundary rule)."""
        ma = self.aff_b.shape[0]
        amax = np.inf
        if ma:
            slope = self.aff_A @ dy
            hit = slope < 0.0
            if np.any(hit):
                amax = float(np.min(s[:ma][hit] / -slope[hit]))
        if self.quads:
            pdy = self.qP @ dy
            a = pdy @ dy
            b = G[ma:] @ dy
            r = _first_roots(a, b, s[ma:])
            if r.size:
                amax = min(amax, float(r.min()))
        if self.guard_b.size:
            gv = self.guard_A @ y + self.guard_b
            gs = self.guard_A @ dy
            hit = gs < 0.0
            if np.any(hit):
                amax = min(amax, float(np.min(gv[hit] / -gs[hit])))
        return amax


def _first_roots(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Smallest alpha > 0 with c + b alpha + a alpha^2 = 0 per entry,
    given c > 0; entries with no positive root come back as inf.

    The roots are taken from the cancellation-free pairing q/a and c/q
    with q = -(b + sign(b) sqrt(disc))/2; the textbook (-b - sqrt)/2a
    form collapses to zero when |4ac| << b^2 with b < 0.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = b * b - 4.0 * a * c
        sq = np.sqrt(np.maximum(disc, 0.0))
        qq = -0.5 * (b + np.copysign(sq, b))
        far = qq / a
        near = c / qq
        lin = -c / b
        root = np.where(a > 0.0,
                        np.where((b < 0.0) & (disc > 0.0), near, np.inf),
                        np.where(a < 0.0,
                                 np.where(b < 0.0, near, far),
                                 np.where(b < 0.0, lin, np.inf)))
    return np.where(np.isfinite(root) & (root > 0.0), root, np.inf)


class _SetBuilder:
    def __init__(self, n: int):
        self.n = n
        self.rows: list[np.ndarray] = []
        self.offs: list[float] = []
        self.aff_kinds: list[str] = []
        self.aff_kappa: list[float] = []
        self.quads: list[tuple[np.ndarray, np.ndarray, float]] = []
        self.quad_kinds: list[str] = []
        self.quad_kappa: list[float] = []
        self.guards: list[tuple[np.ndarray, float]] = []

    def affine(self, p, r, kind, kappa):
        self.rows.append(p)
        self.offs.append(r)
        self.aff_kinds.append(kind)
        self.aff_kappa.append(kappa)

    def quad(self, P, p, r, kind, kappa):
        self.quads.append((P, p, r))
        self.quad_kinds.append(kind)
        self.quad_kappa.append(kappa)

    def guard(self, coef, off):
        self.guards.append((coef, off))

    def build(self) -> _MarginSet:
        aff_A = (np.array(self.rows) if self.rows else np.zeros((0, self.n)))
        aff_b = np.array(self.offs) if self.offs else np.zeros(0)
        g_A = (np.array([c for c, _ in self.guards]) if self.guards
               else np.zeros((0, self.n)))
        g_b = np.array([o for _, o in self.guards]) if self.guards else np.zeros(0)
        return _MarginSet(aff_A, aff_b, self.quads,
                          np.array(self.aff_kappa + self.quad_kappa),
                          self.aff_kinds + self.quad_kinds, g_A, g_b)


def _normalized_cone(cone: _Cone, S: np.ndarray):
    """Apply variable scaling and rescale (u, v, w) so coefficients are O(1)."""
    uc, vc = cone.u_coef * S, cone.v_coef * S
    W = None if cone.W is None else cone.W * S[None, :]
    ku = max(float(np.abs(uc).max(initial=0.0)), abs(cone.u_off), 1e-300)
    kv = max(float(np.abs(vc).max(initial=0.0)), abs(cone.v_off), 1e-300)
    root = np.sqrt(ku * kv)
    return (_Cone(uc / ku, cone.u_off / ku, vc / kv, cone.v_off / kv,
                  None if W is None else W / root, cone.w0 / root),
            ku * kv)


def _cone_parts(c: _Cone):
    P = 0.5 * (np.outer(c.u_coef, c.v_coef) + np.outer(c.v_coef, c.u_coef))
    p = c.u_off * c.v_coef + c.v_off * c.u_coef
    r = c.u_off * c.v_off - float(c.w0 @ c.w0)
    if c.W is not None:
        P = P - c.W.T @ c.W
        p = p - 2.0 * (c.W.T @ c.w0)
    return P, p, r


def _compile(prog: ConvexProgram, S: np.ndarray, normalize: bool) -> _MarginSet:
    """Margin set in the scaled variable y (x = S y)."""
    n = prog.n
    b = _SetBuilder(n)

    def norm_of(P, p, r):
        if not normalize:
            return 1.0
        mags = [float(np.abs(p).max(initial=0.0)), abs(r)]
        if P is not None:
            mags.append(float(np.abs(P).max(initial=0.0)))
        return max(max(mags), 1e-300)

    for j in range(n):
        if np.isfinite(prog.lower[j]):
            p = np.zeros(n); p[j] = S[j]
            r = -prog.lower[j]
            k = norm_of(None, p, r)
            b.affine(p / k, r / k, "box", k)
        if np.isfinite(prog.upper[j]):
            p = np.zeros(n); p[j] = -S[j]
            r = prog.upper[j]
            k = norm_of(None, p, r)
            b.affine(p / k, r / k, "box", k)
    for a, bb in prog.linear:
        p, r = -a * S, bb
        k = norm_of(None, p, r)
        b.affine(p / k, r / k, "linear", k)
    for Q, q, r in prog.quadratics:
        P, p, rr = -(S[:, None] * Q * S[None, :]), -q * S, -r
        k = norm_of(P, p, rr)
        b.quad(P / k, p / k, rr / k, "quad", k)
    for cone in prog.cones:
        if normalize:
            scaled, kappa = _normalized_cone(cone, S)
        else:
            scaled = _Cone(cone.u_coef * S, cone.u_off, cone.v_coef * S, cone.v_off,
                           None if cone.W is None else cone.W * S[None, :], cone.w0)
            kappa = 1.0
        P, p, r = _cone_parts(scaled)
        b.quad(P, p, r, "cone", kappa)
        b.guard(scaled.u_coef, scaled.u_off)
        b.guard(scaled.v_coef, scaled.v_off)
    return b.build()


def _center(mset: _MarginSet, c, t, y, opts: SolverOptions, tol=None):
    """Damped Newton on t c.y - sum log s_i(y); y must start strictly feasible.

    The Armijo decrease is evaluated in difference form, t c.(y' - y)
    - sum log(s'/s), which stays accurate when t c.y dwarfs the step's
    improvement.  Returns (y, steps, last squared Newton decrement).
    """
    n = y.shape[0]
    tol = opts.center_tol if tol is None else tol
    steps = 0
    lam2 = np.inf
    s, G = mset.values_grads(y)
    eye = np.eye(n)
    for _ in range(opts.max_newton):
        Gs = G / s[:, None]
        grad = t * c - Gs.sum(axis=0)
        H = Gs.T @ Gs
        mset.curvature_correction(H, s)
        jitter = 0.0
        base = max(1e-300, float(np.trace(H)) / n)
        while True:
            cf, info = dpotrf(H + jitter * eye if jitter else H, lower=1)
            if info == 0:
                break
            jitter = base * 1e-13 if jitter == 0.0 else jitter * 100.0
            if jitter > base * 1e3:
                return y, steps, lam2
        dy = dpotrs(cf, -grad, lower=1)[0]
        lam2 = float(-grad @ dy)
        if not np.isfinite(lam2):
            return y, steps, np.inf
        if lam2 <= tol:
            break
        slope = -lam2
        # every margin stays positive along dy up to max_step, so the
        # trials below need no feasibility re-check; the damped step
        # 1/(1+lambda) is acceptable by self-concordance, so the first
        # trial nearly always lands
        damped = 1.0 if lam2 <= 0.0625 else 1.0 / (1.0 + np.sqrt(lam2))
        alpha = min(damped, 0.99 * mset.max_step(y, s, G, dy))
        accepted = False
        while alpha > 1e-12:
            y_try = y + alpha * dy
            s_try = mset.values(y_try)
            # a trial can graze the boundary through rounding; the nan/inf
            # from the log then just halves the step
            with np.errstate(divide="ignore", invalid="ignore"):
                df = t * float(c @ (y_try - y)) - float(np.log(s_try / s).sum())
            if np.isfinite(df) and df <= 0.25 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        y = y_try
        s, G = mset.values_grads(y)
        steps += 1
    return y, steps, lam2


def _initial_guess(prog: ConvexProgram, S: np.ndarray) -> np.ndarray:
    y = np.zeros(prog.n)
    lo, hi = prog.lower / S, prog.upper / S
    both = np.isfinite(lo) & np.isfinite(hi)
    y[both] = 0.5 * (lo[both] + hi[both])
    only_lo = np.isfinite(lo) & ~np.isfinite(hi)
    y[only_lo] = lo[only_lo] + 1.0
    only_hi = ~np.isfinite(lo) & np.isfinite(hi)
    y[only_hi] = hi[only_hi] - 1.0
    return y


def _phase1(prog: ConvexProgram, mset: _MarginSet, S, y_init, opts: SolverOptions):
    """Minimize a shared slack; returns (feasible y or None, certified_infeasible, steps).

    Cones are relaxed in second-order-cone form, ||(u - v, 2w)|| <=
    u + v + slack, which keeps the relaxed set convex; a slack provably
    bounded above zero certifies primal infeasibility.
    """
    n = prog.n
    b = _SetBuilder(n + 1)
    base_vals = mset.values(y_init)
    needed = 0.0
    for row, off, kind in zip(mset.aff_A, mset.aff_b, mset.kinds):
        b.affine(np.append(row, 1.0), off, kind, 1.0)
    needed = max(needed, float(np.max(-base_vals[:mset.aff_b.shape[0]], initial=0.0)))
    n_aff = mset.aff_b.shape[0]
    for i, ((P, p, r), kind) in enumerate(zip(mset.quads, mset.kinds[n_aff:])):
        if kind != "cone":
            b.quad(np.pad(P, ((0, 1), (0, 1))), np.append(p, 1.0), r, kind, 1.0)
            needed = max(needed, -float(base_vals[n_aff + i]))
    for cone in prog.cones:
        scaled, _ = _normalized_cone(cone, S)
        a1 = np.append(scaled.u_coef + scaled.v_coef, 1.0)   # u + v + s
        o1 = scaled.u_off + scaled.v_off
        a2 = np.append(scaled.u_coef - scaled.v_coef, 0.0)
        o2 = scaled.u_off - scaled.v_off
        P = np.outer(a1, a1) - np.outer(a2, a2)
        p = 2.0 * (o1 * a1 - o2 * a2)
        r = o1 * o1 - o2 * o2 - 4.0 * float(scaled.w0 @ scaled.w0)
        if scaled.W is not None:
            Wx = np.pad(scaled.W, ((0, 0), (0, 1)))
            P -= 4.0 * Wx.T @ Wx
            p -= 8.0 * np.append(scaled.W.T @ scaled.w0, 0.0)
        b.quad(P, p, r, "cone", 1.0)
        b.guard(a1, o1)
        u0 = scaled.u_coef @ y_init + scaled.u_off
        v0 = scaled.v_coef @ y_init + scaled.v_off
        wv = scaled.w0 if scaled.W is None else scaled.W @ y_init + scaled.w0
        needed = max(needed, np.hypot(u0 - v0, 2.0 * np.linalg.norm(wv)) - (u0 + v0))
    floor = np.zeros(n + 1)
    floor[n] = 1.0
    b.affine(floor, 1.0, "box", 1.0)   # slack >= -1
    # the slack objective does not penalize directions along which every
    # margin grows (epigraph variables), so the phase-1 barrier can be
    # unbounded below; a trust box around the start keeps the iterates
    # finite.  It is grown and phase-1 retried if the analytic center
    # presses against it, and certificates are only issued well inside.
    scale = max(1.0, float(np.abs(y_init).max(initial=0.0)))
    total = 0
    nu_base = sum(2 if k == "cone" else 1 for k in b.quad_kinds) \
        + len(b.rows)
    chunk = SolverOptions(**{**opts.__dict__, "max_newton": 6})
    exit_level = -max(1e-7, 10.0 * opts.interior_margin)
    for radius in (10.0 * scale, 1e3 * scale, 1e6 * scale):
        bb = _SetBuilder(n + 1)
        bb.rows, bb.offs = list(b.rows), list(b.offs)
        bb.aff_kinds, bb.aff_kappa = list(b.aff_kinds), list(b.aff_kappa)
        bb.quads, bb.quad_kinds = list(b.quads), list(b.quad_kinds)
        bb.quad_kappa, bb.guards = list(b.quad_kappa), list(b.guards)
        for j in range(n):
            row = np.zeros(n + 1); row[j] = 1.0
            bb.affine(row, radius - y_init[j], "box", 1.0)
            bb.affine(-row, radius + y_init[j], "box", 1.0)
        ext = bb.build()
        # suboptimality bound of the centered point: the hyperbolic
        # barrier carries self-concordance parameter 2, the logs 1 each
        nu = nu_base + 2 * n
        z = np.append(y_init, needed + 1.0)
        t = 1.0
        boxed = False
        for _ in range(opts.max_rounds):
            lam2 = np.inf
            spent = 0
            while spent < opts.max_newton:
                z, steps, lam2 = _center(ext, floor, t, z, chunk)
                total += steps
                spent += max(steps, 1)
                if z[n] < exit_level and mset.domain_ok(z[:n]):
                    return z[:n], False, total
                if steps < chunk.max_newton or lam2 <= opts.center_tol:
                    break
            bound = nu / t
            boxed = float(np.abs(z[:n]).max(initial=0.0)) > 0.9 * radius
            centered = np.isfinite(lam2) and lam2 <= 1e-12
            if centered and not boxed and z[n] - bound > 1e-9:
                return None, True, total
            if bound <= 1e-12 or not np.isfinite(lam2):
                break
            t *= opts.mu
        if not boxed:
            break
    return None, False, total


def solve(prog: ConvexProgram, options: SolverOptions | None = None) -> SolveReport:
    opts = options or SolverOptions()
    n = prog.n
    c_orig = prog.objective
    S = (np.ones(n) if prog.var_scales is None
         else np.asarray(prog.var_scales, dtype=float))
    if np.any(S <= 0.0) or not np.all(np.isfinite(S)):
        raise ValueError("variable scales must be positive and finite")

    mset = _compile(prog, S, normalize=True)
    m = mset.m
    if m == 0:
        if float(np.abs(c_orig).max(initial=0.0)) == 0.0:
            x = prog.x0 if prog.x0 is not None else np.zeros(n)
            return SolveReport(OPTIMAL, x, 0.0, 0.0, 0.0, 0.0)
        raise ValueError("unconstrained program with a nonzero objective is unbounded")

    cs = c_orig * S
    cn = float(np.abs(cs).max(initial=0.0))
    c_hat = cs / cn if cn > 0.0 else np.zeros(n)

    def strictly_inside(y_try):
        if (mset.guard_b.size
                and float(np.min(mset.guard_A @ y_try + mset.guard_b)) <= 0.0):
            return False
        return float(np.min(mset.values(y_try))) > opts.interior_margin

    total_newton = 0
    y = None
    warm = False
    if prog.x0 is not None:
        y_try = prog.x0 / S
        if strictly_inside(y_try):
            y, warm = y_try, True
    if y is None:
        y_start = prog.x0 / S if prog.x0 is not None else _initial_guess(prog, S)
        if prog.x0 is None and strictly_inside(y_start):
            y = y_start
    if y is None:
        y, infeasible, steps = _phase1(prog, mset, S, y_start, opts)
        total_newton += steps
        if infeasible:
            return SolveReport(INFEASIBLE, np.full(n, np.nan), np.nan,
                               np.nan, np.nan, np.nan, newton_steps=total_newton,
                               message="phase-1 slack bounded away from zero")
        if y is None:
            return SolveReport(MAX_ITER, np.full(n, np.nan), np.nan,
                               np.nan, np.nan, np.nan, newton_steps=total_newton,
                               message="phase-1 could not certify either way")

    t = max(1.0, opts.t_init)
    rounds = 0
    for _ in range(opts.max_rounds):
        # center loosely while climbing the ladder; only the rung that
        # satisfies the gap test is polished to full precision for the
        # dual certificate
        obj = cn * float(c_hat @ y)
        last = (m / t) * cn <= opts.gap_rel * max(1.0, abs(obj)) or t >= 1e17
        y, steps, lam2 = _center(mset, c_hat, t, y, opts,
                                 tol=None if last else 1e-4)
        total_newton += steps
        rounds += 1
        obj = cn * float(c_hat @ y)
        gap = (m / t) * cn
        if last and (gap <= opts.gap_rel * max(1.0, abs(obj)) or t > 1e17):
            break
        if not np.isfinite(lam2):
            break
        t = min(t * opts.mu, 1e17)

    x = S * y
    objective = float(c_orig @ x)

    raw = _compile(prog, np.ones(n), normalize=False)
    s_scaled = mset.values(y)
    lam = (cn / t) / (s_scaled * mset.kappa)
    raw_s = raw.values(x)
    grads = raw.grads(x)
    # the barrier duals cn/(t s) lose accuracy once the tight margins are
    # down at rounding noise; refit the near-active multipliers by
    # nonnegative least squares against the actual gradients, which
    # certifies much closer to machine precision
    act = s_scaled <= 1e-6
    if np.any(act):
        try:
            target = c_orig - grads[~act].T @ lam[~act]
            lam_act, _ = scipy.optimize.nnls(grads[act].T, target)
            lam_ls = lam.copy()
            lam_ls[act] = lam_act
            if (np.abs(c_orig - grads.T @ lam_ls).max()
                    < np.abs(c_orig - grads.T @ lam).max()):
                lam = lam_ls
        except Exception:
            pass
    resid = c_orig - grads.T @ lam
    stationarity = float(np.abs(resid).max()) / max(1.0, float(np.abs(c_orig).max()))
    feasibility = max(0.0, float(-s_scaled.min()))
    if mset.guard_b.size:
        feasibility = max(feasibility,
                          -min(0.0, float(np.min(mset.guard_A @ y + mset.guard_b))))
    gap_rep = float(lam @ np.abs(raw_s)) / max(1.0, abs(objective))

    ok = (stationarity <= opts.kkt_tol and feasibility <= opts.kkt_tol
          and gap_rep <= max(opts.kkt_tol, 10.0 * opts.gap_rel))
    if not ok and warm:
        # continuation guess went sour; redo the full ladder from cold
        clone = copy.copy(prog)
        clone.x0 = None
        return solve(clone, SolverOptions(**{**opts.__dict__, "t_init": 1.0}))
    status = OPTIMAL if ok else MAX_ITER
    msg = "" if ok else "tolerance not reached"
    return SolveReport(status, x, objective, stationarity, feasibility, gap_rep,
                       barrier_rounds=rounds, newton_steps=total_newton,
                       final_t=t, message=msg)


def lift_complex_quadratic(quad, lin, const: float = 0.0):
    """Real 2M-dim equivalent of z^H Q z + 2 Re{lin^H z} + const.

    Returns (A, b, c) with value x' A x + b . x + c at x = [Re z; Im z];
    A is symmetric and inherits positive semidefiniteness from Q.
    """
    Q = np.asarray(quad)
    scale = max(1.0, float(np.abs(Q).max(initial=0.0)))
    if float(np.abs(Q - Q.conj().T).max(initial=0.0)) > 1e-10 * scale:
        raise ValueError("complex quadratic matrix must be Hermitian")
    a = np.block([[Q.real, -Q.imag], [Q.imag, Q.real]])
    a = 0.5 * (a + a.T)
    lin = np.asarray(lin)
    b = 2.0 * np.concatenate([lin.real, lin.imag])
    return a, b, float(const)


def split_complex(z: np.ndarray) -> np.ndarray:
    return np.concatenate([np.real(z), np.imag(z)])


def join_complex(x: np.ndarray) -> np.ndarray:
    m = x.shape[0] // 2
    return x[:m] + 1j * x[m:]
