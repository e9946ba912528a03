"""Block-coordinate descent over offload volumes, edge CPU shares,
receivers, the reflection vector, and transmit powers.

Every block's previous value stays feasible for its subproblem, so a
candidate update is kept only if the realized objective (max over users
of the worse of local and edge latency, at the continuous offload
split) does not increase; this makes the objective trace non-increasing
by construction.  Auxiliary weights are refreshed to 1/d immediately
before each step that consumes the surrogate rates, which makes the
surrogate tight at the incumbent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import compute, rates, socp
from .channel import ChannelSet, substream, STREAM_INIT
from .config import ScenarioConfig, validate_config
from .state import IterationTrace, SolutionState, ris_amplification_power

# offload volumes below half a bit are treated as "stay local" when
# assembling rate constraints
_L_EPS = 0.5


@dataclass(eq=False)
class LatencySnapshot:
    rates: np.ndarray
    t_local: np.ndarray
    t_edge: np.ndarray
    mcl: float


def evaluate_latency(state: SolutionState, cfg: ScenarioConfig,
                     channels: ChannelSet) -> LatencySnapshot:
    """Realized objective at the state's continuous offload split."""
    _, r = rates.sinr_and_rate(state.receivers, state.theta, state.p, channels,
                               cfg.effective_ris_noise(), cfg.ap_noise_w,
                               cfg.bandwidth_hz)
    t_l, t_e = compute.latencies(state.relaxed_l, r, cfg.compute, state.f_e)
    return LatencySnapshot(r, t_l, t_e, float(np.maximum(t_l, t_e).max()))


def init_solution(cfg: ScenarioConfig, channels: ChannelSet,
                  rng: np.random.Generator | None = None) -> SolutionState:
    """Full-power start with a random-phase surface at 90% of the budget."""
    rng = rng if rng is not None else substream(cfg, STREAM_INIT)
    k, m = cfg.num_users, cfg.num_elements
    p = np.full(k, cfg.p_max_w)
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w

    for attempt in range(10):
        phases = rng.uniform(0.0, 2.0 * np.pi, m)
        if cfg.ris_mode == "active":
            denom = float(p @ np.sum(np.abs(channels.h) ** 2, axis=0)) + m * sigma2
            lam = np.sqrt(0.9 * cfg.amplification_budget() / denom)
        else:
            lam = 1.0
        theta = lam * np.exp(1j * phases)
        receivers = rates.mmse_receivers(theta, p, channels, sigma2, delta2)
        _, r = rates.sinr_and_rate(receivers, theta, p, channels, sigma2, delta2,
                                   cfg.bandwidth_hz)
        if np.all(r > 0.0):
            break
    else:
        raise RuntimeError("all users have zero rate after 10 phase re-draws")

    f_e = np.full(k, cfg.compute.edge_total_cps / k)
    l_tilde, l_int = compute.optimal_offload_volume(r, f_e, cfg.compute)
    d = rates.mse(receivers, theta, p, channels, sigma2, delta2)
    return SolutionState(theta, receivers, p, l_int, l_tilde, f_e, 1.0 / d)


def update_aux_v(state: SolutionState, cfg: ScenarioConfig, channels: ChannelSet) -> None:
    d = rates.mse(state.receivers, state.theta, state.p, channels,
                  cfg.effective_ris_noise(), cfg.ap_noise_w)
    state.v = 1.0 / d


def update_beamformer(state: SolutionState, cfg: ScenarioConfig,
                      channels: ChannelSet) -> bool:
    """MMSE receiver refresh; kept unless roundoff would worsen the objective."""
    before = evaluate_latency(state, cfg, channels).mcl
    candidate = rates.mmse_receivers(state.theta, state.p, channels,
                                     cfg.effective_ris_noise(), cfg.ap_noise_w)
    old = state.receivers
    state.receivers = candidate
    if evaluate_latency(state, cfg, channels).mcl > before:
        state.receivers = old
        return False
    return True


def _epsilon_floor(l_act, c_act, f_act) -> float:
    lb = float(np.max(l_act * c_act / f_act))
    return lb + 1e-12 * max(1.0, lb)


def _rate_targets(l_act, c_act, f_act, bars):
    """Interior (t, eps) for targets bars > 0; eps covers every user."""
    t0 = bars * (1.0 - 1e-6)
    eps0 = float(np.max(l_act / t0 + l_act * c_act / f_act)) * (1.0 + 1e-6)
    return t0, eps0


def update_theta(state: SolutionState, cfg: ScenarioConfig, channels: ChannelSet,
                 options: socp.SolverOptions | None = None):
    """Reflection update through the epigraph program; returns (report, accepted)."""
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    budget = cfg.amplification_budget()
    m = cfg.num_elements
    quads = rates.build_theta_quadratics(state.receivers, state.p, channels,
                                         state.v, sigma2, delta2, cfg.bandwidth_hz)
    if budget <= 0.0:
        state.theta = np.zeros(m, dtype=complex)
        return None, True

    act = np.flatnonzero(state.relaxed_l > _L_EPS)
    l_act = state.relaxed_l[act]
    c_act = cfg.compute.cycles_per_bit[act]
    f_act = state.f_e[act]
    n_act = act.size
    n = 2 * m + 1 + n_act
    i_eps = 2 * m

    c_vec = np.zeros(n)
    c_vec[i_eps] = 1.0
    prog = socp.ConvexProgram(n, c_vec)

    pq, _, _ = socp.lift_complex_quadratic(np.diag(quads.power_diag.astype(complex)),
                                           np.zeros(m, complex))
    big_q = np.zeros((n, n))
    big_q[:2 * m, :2 * m] = pq
    prog.add_quadratic(big_q, np.zeros(n), -budget, check=False)

    for j, k in enumerate(act):
        aq, bq, _ = socp.lift_complex_quadratic(quads.rate_quad[k], quads.rate_lin[:, k])
        big = np.zeros((n, n))
        big[:2 * m, :2 * m] = aq
        lin = np.zeros(n)
        lin[:2 * m] = bq
        lin[i_eps + 1 + j] = 1.0
        prog.add_quadratic(big, lin, -float(quads.rate_const[k]), check=False)
        u = np.zeros(n); u[i_eps + 1 + j] = 1.0
        v = np.zeros(n); v[i_eps] = f_act[j]
        prog.add_cone(u, 0.0, v, -l_act[j] * c_act[j], np.sqrt(l_act[j] * f_act[j]))
        prog.set_bounds(i_eps + 1 + j, lo=0.0)

    if n_act:
        prog.set_bounds(i_eps, lo=_epsilon_floor(l_act, c_act, f_act))
    else:
        prog.set_bounds(i_eps, lo=0.0)

    theta0 = state.theta * (1.0 - 1e-7)
    bars = quads.rate_value(theta0)[act] if n_act else np.empty(0)
    scales = np.ones(n)
    scales[:2 * m] = max(np.sqrt(budget / max(float(quads.power_diag.sum()), 1e-300)), 1e-12)
    x0 = None
    if n_act == 0 or np.all(bars > 0.0):
        x0 = np.zeros(n)
        x0[:2 * m] = socp.split_complex(theta0)
        if n_act:
            t0, eps0 = _rate_targets(l_act, c_act, f_act, bars)
            x0[i_eps + 1:] = t0
            x0[i_eps] = max(eps0, _epsilon_floor(l_act, c_act, f_act) * (1.0 + 1e-9))
            scales[i_eps] = x0[i_eps]
            scales[i_eps + 1:] = np.maximum(t0, 1e-12)
        else:
            x0[i_eps] = 1.0
    prog.x0 = x0
    prog.var_scales = scales

    report = socp.solve(prog, options)
    accepted = False
    if report.status == socp.OPTIMAL:
        before = evaluate_latency(state, cfg, channels).mcl
        old = state.theta
        state.theta = socp.join_complex(report.x[:2 * m])
        if evaluate_latency(state, cfg, channels).mcl <= before:
            accepted = True
        else:
            state.theta = old
    return report, accepted


def _passive_theta_sweep(state: SolutionState, cfg: ScenarioConfig,
                         channels: ChannelSet, sweeps: int = 40,
                         tol: float = 1e-12):
    """Unit-modulus coordinate descent on the weighted sum of MSEs."""
    quads = rates.build_theta_quadratics(state.receivers, state.p, channels,
                                         state.v, cfg.effective_ris_noise(),
                                         cfg.ap_noise_w, cfg.bandwidth_hz)
    v = state.v
    big_b = sum(v[k] * quads.B_mse[k] for k in range(v.shape[0]))
    lin = quads.w_mse @ v
    theta = state.theta.copy()

    def objective(th):
        return float(np.real(np.vdot(th, big_b @ th)) + 2.0 * np.real(lin @ th))

    obj = objective(theta)
    for _ in range(sweeps):
        for idx in range(theta.shape[0]):
            z = (big_b[idx] @ theta) - big_b[idx, idx] * theta[idx] + np.conj(lin[idx])
            mag = abs(z)
            if mag > 0.0:
                theta[idx] = -z / mag
        new_obj = objective(theta)
        if abs(new_obj - obj) <= tol * max(1.0, abs(obj)):
            obj = new_obj
            break
        obj = new_obj

    before = evaluate_latency(state, cfg, channels).mcl
    old = state.theta
    state.theta = theta
    if evaluate_latency(state, cfg, channels).mcl <= before:
        return None, True
    state.theta = old
    return None, False


def update_power(state: SolutionState, cfg: ScenarioConfig, channels: ChannelSet,
                 options: socp.SolverOptions | None = None):
    """Transmit-power update in the sqrt-power domain; returns (report, accepted)."""
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    k = cfg.num_users
    if cfg.p_max_w <= 0.0:
        state.p = np.zeros(k)
        return None, True
    pq = rates.build_power_quadratics(state.receivers, state.theta, channels,
                                      state.v, sigma2, delta2, cfg.bandwidth_hz)
    act = np.flatnonzero(state.relaxed_l > _L_EPS)
    l_act = state.relaxed_l[act]
    c_act = cfg.compute.cycles_per_bit[act]
    f_act = state.f_e[act]
    n_act = act.size
    n = k + 1 + n_act
    i_eps = k

    c_vec = np.zeros(n)
    c_vec[i_eps] = 1.0
    prog = socp.ConvexProgram(n, c_vec)
    root_cap = np.sqrt(cfg.p_max_w)
    for j in range(k):
        prog.set_bounds(j, lo=0.0, hi=root_cap)

    if cfg.ris_mode == "active":
        budget = cfg.amplification_budget()
        room = budget - pq.power_offset
        if room <= 0.0:
            return None, False
        qmat = np.zeros((n, n))
        qmat[:k, :k] = np.diag(pq.elem_gain)
        prog.add_quadratic(qmat, np.zeros(n), -room, check=False)

    for j, kk in enumerate(act):
        qmat = np.zeros((n, n))
        qmat[:k, :k] = np.diag(pq.rate_gain[kk])
        lin = np.zeros(n)
        lin[kk] = -2.0 * float(np.real(pq.rate_j[kk]))
        lin[i_eps + 1 + j] = 1.0
        prog.add_quadratic(qmat, lin, -float(pq.rate_const[kk]), check=False)
        u = np.zeros(n); u[i_eps + 1 + j] = 1.0
        v = np.zeros(n); v[i_eps] = f_act[j]
        prog.add_cone(u, 0.0, v, -l_act[j] * c_act[j], np.sqrt(l_act[j] * f_act[j]))
        prog.set_bounds(i_eps + 1 + j, lo=0.0)

    prog.set_bounds(i_eps, lo=_epsilon_floor(l_act, c_act, f_act) if n_act else 0.0)

    q0 = np.sqrt(state.p) * (1.0 - 1e-7)
    bars = pq.rate_value(q0)[act] if n_act else np.empty(0)
    scales = np.ones(n)
    scales[:k] = root_cap
    x0 = None
    if np.all(q0 > 0.0) and (n_act == 0 or np.all(bars > 0.0)):
        x0 = np.zeros(n)
        x0[:k] = q0
        if n_act:
            t0, eps0 = _rate_targets(l_act, c_act, f_act, bars)
            x0[i_eps + 1:] = t0
            x0[i_eps] = max(eps0, _epsilon_floor(l_act, c_act, f_act) * (1.0 + 1e-9))
            scales[i_eps] = x0[i_eps]
            scales[i_eps + 1:] = np.maximum(t0, 1e-12)
        else:
            x0[i_eps] = 1.0
    prog.x0 = x0
    prog.var_scales = scales

    report = socp.solve(prog, options)
    accepted = False
    if report.status == socp.OPTIMAL:
        before = evaluate_latency(state, cfg, channels).mcl
        old = state.p
        state.p = np.maximum(report.x[:k], 0.0) ** 2
        if evaluate_latency(state, cfg, channels).mcl <= before:
            accepted = True
        else:
            state.p = old
    return report, accepted


def _offload_step(state: SolutionState, cfg: ScenarioConfig, channels: ChannelSet):
    snap = evaluate_latency(state, cfg, channels)
    l_tilde, l_int = compute.optimal_offload_volume(snap.rates, state.f_e, cfg.compute)
    state.relaxed_l = l_tilde
    state.l = l_int


def _balanced_mcl(state: SolutionState, cfg: ScenarioConfig,
                  channels: ChannelSet) -> float:
    """Objective after re-balancing every user's offload split at the
    current rates; the quantity the whole outer iteration descends."""
    snap = evaluate_latency(state, cfg, channels)
    return compute.sca_objective(snap.rates, cfg.compute, state.f_e)


def _balanced_cone_rows(prog, cfg: ScenarioConfig, f_act, act, i_eps, n):
    """Epigraph cones tying eps to the split-balanced latency of each
    served user: with D(t) = f_L f + c (f_L + f) t the balanced latency
    is A + A f^2 / D(t), A = L c / (f_L + f), so eps >= latency is the
    rotated cone (eps - A) D(t) >= A f^2."""
    prof = cfg.compute
    a_coef = prof.task_bits[act] * prof.cycles_per_bit[act] \
        / (prof.local_cps[act] + f_act)
    for j, k in enumerate(act):
        u = np.zeros(n); u[i_eps] = 1.0
        v = np.zeros(n)
        v[i_eps + 1 + j] = prof.cycles_per_bit[k] * (prof.local_cps[k] + f_act[j])
        v_off = prof.local_cps[k] * f_act[j]
        prog.add_cone(u, -a_coef[j], v, v_off, f_act[j] * np.sqrt(a_coef[j]))
        prog.set_bounds(i_eps + 1 + j, lo=0.0)
    return a_coef


def _balanced_floor(cfg: ScenarioConfig, f_e) -> float:
    prof = cfg.compute
    local_only = prof.task_bits * prof.cycles_per_bit / prof.local_cps
    floor = 0.0
    for k in range(cfg.num_users):
        if f_e[k] > 0.0:
            floor = max(floor, prof.task_bits[k] * prof.cycles_per_bit[k]
                        / (prof.local_cps[k] + f_e[k]))
        else:
            floor = max(floor, local_only[k])
    return floor * (1.0 + 1e-12)


def _balanced_latency_of(t, k, f, cfg: ScenarioConfig):
    prof = cfg.compute
    a = prof.task_bits[k] * prof.cycles_per_bit[k] / (prof.local_cps[k] + f)
    d = prof.local_cps[k] * f + prof.cycles_per_bit[k] * (prof.local_cps[k] + f) * t
    return a if d <= 0.0 else a + a * f * f / d


def _update_theta_balanced(state: SolutionState, cfg: ScenarioConfig,
                           channels: ChannelSet,
                           options: socp.SolverOptions | None = None):
    """Reflection step against the split-balanced latency epigraph.

    Same surrogate-rate lift as the fixed-split program, but eps bounds
    the latency after the offload volumes re-balance, so progress here
    shows up in the outer objective immediately."""
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    budget = cfg.amplification_budget()
    m = cfg.num_elements
    quads = rates.build_theta_quadratics(state.receivers, state.p, channels,
                                         state.v, sigma2, delta2, cfg.bandwidth_hz)
    if budget <= 0.0:
        state.theta = np.zeros(m, dtype=complex)
        return None, True

    act = np.flatnonzero((state.f_e > 0.0) & (cfg.compute.task_bits > 0))
    f_act = state.f_e[act]
    n_act = act.size
    n = 2 * m + 1 + n_act
    i_eps = 2 * m

    c_vec = np.zeros(n)
    c_vec[i_eps] = 1.0
    prog = socp.ConvexProgram(n, c_vec)

    pq, _, _ = socp.lift_complex_quadratic(np.diag(quads.power_diag.astype(complex)),
                                           np.zeros(m, complex))
    big_q = np.zeros((n, n))
    big_q[:2 * m, :2 * m] = pq
    prog.add_quadratic(big_q, np.zeros(n), -budget, check=False)

    for j, k in enumerate(act):
        aq, bq, _ = socp.lift_complex_quadratic(quads.rate_quad[k], quads.rate_lin[:, k])
        big = np.zeros((n, n))
        big[:2 * m, :2 * m] = aq
        lin = np.zeros(n)
        lin[:2 * m] = bq
        lin[i_eps + 1 + j] = 1.0
        prog.add_quadratic(big, lin, -float(quads.rate_const[k]), check=False)
    _balanced_cone_rows(prog, cfg, f_act, act, i_eps, n)
    prog.set_bounds(i_eps, lo=_balanced_floor(cfg, state.f_e))

    theta0 = state.theta * (1.0 - 1e-7)
    bars = quads.rate_value(theta0)[act] if n_act else np.empty(0)
    scales = np.ones(n)
    scales[:2 * m] = max(np.sqrt(budget / max(float(quads.power_diag.sum()), 1e-300)),
                         1e-12)
    x0 = None
    if n_act == 0 or np.all(bars > 0.0):
        x0 = np.zeros(n)
        x0[:2 * m] = socp.split_complex(theta0)
        t0 = bars * (1.0 - 1e-6)
        lat = [_balanced_latency_of(t0[j], act[j], f_act[j], cfg)
               for j in range(n_act)]
        x0[i_eps + 1:] = t0
        x0[i_eps] = max(float(np.max(lat, initial=0.0)) * (1.0 + 1e-6),
                        _balanced_floor(cfg, state.f_e) * (1.0 + 1e-9))
        scales[i_eps] = x0[i_eps]
        if n_act:
            scales[i_eps + 1:] = np.maximum(t0, 1e-12)
    prog.x0 = x0
    prog.var_scales = scales

    report = socp.solve(prog, options)
    accepted = False
    if report.status == socp.OPTIMAL:
        before = _balanced_mcl(state, cfg, channels)
        old = state.theta
        state.theta = socp.join_complex(report.x[:2 * m])
        if _balanced_mcl(state, cfg, channels) <= before:
            accepted = True
        else:
            state.theta = old
    return report, accepted


def _update_power_balanced(state: SolutionState, cfg: ScenarioConfig,
                           channels: ChannelSet,
                           options: socp.SolverOptions | None = None):
    """Transmit-power step against the split-balanced latency epigraph."""
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    k_users = cfg.num_users
    pq = rates.build_power_quadratics(state.receivers, state.theta, channels,
                                      state.v, sigma2, delta2, cfg.bandwidth_hz)
    act = np.flatnonzero((state.f_e > 0.0) & (cfg.compute.task_bits > 0))
    f_act = state.f_e[act]
    n_act = act.size
    n = k_users + 1 + n_act
    i_eps = k_users

    c_vec = np.zeros(n)
    c_vec[i_eps] = 1.0
    prog = socp.ConvexProgram(n, c_vec)
    root_cap = np.sqrt(cfg.p_max_w)
    for j in range(k_users):
        prog.set_bounds(j, lo=0.0, hi=root_cap)

    if cfg.ris_mode == "active":
        budget = cfg.amplification_budget()
        room = budget - pq.power_offset
        if room <= 0.0:
            return None, False
        qmat = np.zeros((n, n))
        qmat[:k_users, :k_users] = np.diag(pq.elem_gain)
        prog.add_quadratic(qmat, np.zeros(n), -room, check=False)

    for j, kk in enumerate(act):
        qmat = np.zeros((n, n))
        qmat[:k_users, :k_users] = np.diag(pq.rate_gain[kk])
        lin = np.zeros(n)
        lin[kk] = -2.0 * float(np.real(pq.rate_j[kk]))
        lin[i_eps + 1 + j] = 1.0
        prog.add_quadratic(qmat, lin, -float(pq.rate_const[kk]), check=False)
    _balanced_cone_rows(prog, cfg, f_act, act, i_eps, n)
    prog.set_bounds(i_eps, lo=_balanced_floor(cfg, state.f_e))

    q0 = np.sqrt(state.p) * (1.0 - 1e-7)
    bars = pq.rate_value(q0)[act] if n_act else np.empty(0)
    scales = np.ones(n)
    scales[:k_users] = root_cap
    x0 = None
    if np.all(q0 > 0.0) and (n_act == 0 or np.all(bars > 0.0)):
        x0 = np.zeros(n)
        x0[:k_users] = q0
        t0 = bars * (1.0 - 1e-6)
        lat = [_balanced_latency_of(t0[j], act[j], f_act[j], cfg)
               for j in range(n_act)]
        x0[i_eps + 1:] = t0
        x0[i_eps] = max(float(np.max(lat, initial=0.0)) * (1.0 + 1e-6),
                        _balanced_floor(cfg, state.f_e) * (1.0 + 1e-9))
        scales[i_eps] = x0[i_eps]
        if n_act:
            scales[i_eps + 1:] = np.maximum(t0, 1e-12)
    prog.x0 = x0
    prog.var_scales = scales

    report = socp.solve(prog, options)
    accepted = False
    if report.status == socp.OPTIMAL:
        before = _balanced_mcl(state, cfg, channels)
        old = state.p
        state.p = np.maximum(report.x[:k_users], 0.0) ** 2
        if _balanced_mcl(state, cfg, channels) <= before:
            accepted = True
        else:
            state.p = old
    return report, accepted


def _phase_scan(state, cfg, channels, phis):
    """Split-balanced objective for common rotations of the surface, with
    the MMSE receivers refreshed for every candidate angle, in one batch.

    Rotating the whole surface by phi multiplies the surface path by
    e^{j phi} while the direct path stays put, so the receive covariance
    is C0 + e^{j phi} C1 + e^{-j phi} C1^H with fixed C0, C1."""
    prof = cfg.compute
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    p = state.p
    surface = channels.H @ (state.theta[:, None] * channels.h)   # (N, K)
    direct = channels.g
    ht = channels.H * state.theta[None, :]                       # (N, M)
    n_ap = channels.H.shape[0]
    base = sigma2 * (ht @ ht.conj().T) + delta2 * np.eye(n_ap)
    c0 = (surface * p) @ surface.conj().T + (direct * p) @ direct.conj().T + base
    c1 = (surface * p) @ direct.conj().T

    rot = np.exp(1j * phis)[:, None, None]
    covs = c0[None] + rot * c1[None] + np.conj(rot) * c1.conj().T[None]
    effs = rot * surface[None] + direct[None]                    # (F, N, K)
    filt = np.linalg.solve(covs, effs)
    fe = np.einsum('fnk,fni->fki', filt.conj(), effs)
    x2 = np.abs(fe) ** 2
    signal = p[None, :] * np.einsum('fkk->fk', x2).real
    interf = np.einsum('fki,i->fk', x2, p) - signal
    amp = np.sum(np.abs(np.einsum('fnk,nm->fkm', filt.conj(), ht)) ** 2, axis=2)
    fn2 = np.sum(np.abs(filt) ** 2, axis=1)
    gamma = signal / (interf + sigma2 * amp + delta2 * fn2)
    rates_ = cfg.bandwidth_hz * np.log2(1.0 + gamma)             # (F, K)

    big_l = np.asarray(prof.task_bits, dtype=float)
    c = np.asarray(prof.cycles_per_bit, dtype=float)
    f_l = np.asarray(prof.local_cps, dtype=float)
    cr = c[None, :] * rates_
    num = big_l * c * (state.f_e[None, :] + cr)
    den = f_l * state.f_e[None, :] + cr * (f_l + state.f_e[None, :])
    return np.max(num / den, axis=1)


def _global_phase_step(state, cfg, channels):
    """Line search over a common rotation of the reflection vector.

    The surface path and the weak direct path interfere only through this
    one angle, and the block updates move it extremely slowly; a direct
    scan removes the soft mode for the cost of a few batched rate
    evaluations.  Returns the objective gain."""
    before = _balanced_mcl(state, cfg, channels)
    best_phi, best_val = 0.0, before
    span = 2.0 * np.pi
    points = 32
    for _ in range(3):
        phis = best_phi + span * (np.arange(points) - (points - 1) / 2.0) / points
        vals = _phase_scan(state, cfg, channels, phis)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_phi, best_val = float(phis[i]), float(vals[i])
        span /= points / 2.0
        points = 8
    if best_phi != 0.0 and best_val < before:
        old_theta, old_rec = state.theta, state.receivers
        state.theta = state.theta * np.exp(1j * best_phi)
        update_beamformer(state, cfg, channels)
        after = _balanced_mcl(state, cfg, channels)
        if after >= before:
            state.theta, state.receivers = old_theta, old_rec
            return 0.0
        update_aux_v(state, cfg, channels)
        return before - after
    return 0.0


def _balanced_edge_split(state, cfg, channels):
    """Rebalance the edge CPU budget against the split-balanced objective.

    At a fixed latency target the edge share each offloading user needs is
    a closed-form monotone expression, so the tightest reachable target is
    found by bisection and any leftover budget is spread over the
    offloading users."""
    prof = cfg.compute
    snap = evaluate_latency(state, cfg, channels)
    k = state.f_e.shape[0]
    cr = np.asarray(prof.cycles_per_bit, dtype=float) * np.asarray(snap.rates, dtype=float)
    a = np.broadcast_to(
        np.asarray(prof.task_bits, dtype=float) * np.asarray(prof.cycles_per_bit, dtype=float),
        (k,),
    )
    phi = np.broadcast_to(np.asarray(prof.local_cps, dtype=float), (k,))
    tot = float(prof.edge_total_cps)
    off = cr > 0.0
    if not np.any(off):
        state.f_e = np.zeros(k)
        return

    def required(eps):
        f = np.zeros(k)
        num = cr[off] * (a[off] - eps * phi[off])
        den = eps * (phi[off] + cr[off]) - a[off]
        f[off] = np.where(num > 0.0, num / np.maximum(den, 1e-300), 0.0)
        return f

    lo = float(np.max(a[off] / (phi[off] + cr[off])))
    if np.any(~off):
        lo = max(lo, float(np.max(a[~off] / phi[~off])))
    hi = max(compute.sca_objective(snap.rates, prof, state.f_e), lo * (1.0 + 1e-9))
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if float(required(mid).sum()) <= tot:
            hi = mid
        else:
            lo = mid
    f_new = required(hi)
    spare = tot - float(f_new.sum())
    if spare > 0.0:
        weights = np.where(off, np.maximum(f_new, cr), 0.0)
        total_w = float(weights.sum())
        if total_w > 0.0:
            f_new = f_new + spare * weights / total_w
    before = _balanced_mcl(state, cfg, channels)
    old = state.f_e
    state.f_e = f_new
    if _balanced_mcl(state, cfg, channels) > before:
        state.f_e = old


def _passive_sweep_balanced(state, cfg, channels):
    """Passive-surface sweep kept only if the split-balanced objective
    does not worsen (the weighted-MSE descent can trade users)."""
    before = _balanced_mcl(state, cfg, channels)
    old = state.theta
    _passive_theta_sweep(state, cfg, channels)
    if _balanced_mcl(state, cfg, channels) <= before:
        return True
    state.theta = old
    return False


def _balanced_refine(state, cfg, channels, options, fixed_power, mixer,
                     inner_max=40):
    """Iterate receiver/weight/reflection/power/edge-share steps against
    the split-balanced objective until a pass stops paying.

    Optimizing at a frozen split cannot lower the realized objective past
    the local-compute term of that split, which starves the stopping test
    while real progress is still available; these passes descend the
    objective the outer loop actually reports.  The reflection/power
    alternation zigzags along the amplification budget trade-off, so the
    pass trajectory is Anderson-mixed as well (the mixer is carried across
    calls because the underlying pass map does not change).  Returns
    status counters and the last conic epigraph value."""
    passes = 0
    jumps = 0
    theta_opts = options
    power_opts = options
    eps = None
    bal = _balanced_mcl(state, cfg, channels)
    for _ in range(inner_max):
        passes += 1
        z_start = _pack_rate_vars(state)
        update_aux_v(state, cfg, channels)
        update_beamformer(state, cfg, channels)

        update_aux_v(state, cfg, channels)
        if cfg.ris_mode == "active":
            rep, _ok = _update_theta_balanced(state, cfg, channels, theta_opts)
            if rep is not None and rep.status == socp.OPTIMAL:
                # consecutive passes solve near-identical programs, so the
                # continuation start is already next to the final rung
                theta_opts = replace(options, t_init=max(1.0, rep.final_t))
                eps = rep.objective
        else:
            _passive_sweep_balanced(state, cfg, channels)
        _global_phase_step(state, cfg, channels)

        # once passes only trickle, the power block barely moves; refresh
        # it sparsely and spend the budget on the reflection block
        crawling = bal - _balanced_mcl(state, cfg, channels) < 3e-3 * bal
        if not fixed_power and not (crawling and passes % 4):
            update_aux_v(state, cfg, channels)
            rep, _ok = _update_power_balanced(state, cfg, channels, power_opts)
            if rep is not None and rep.status == socp.OPTIMAL:
                power_opts = replace(options, t_init=max(1.0, rep.final_t))
                eps = rep.objective

        _balanced_edge_split(state, cfg, channels)

        z_end = _pack_rate_vars(state)
        mixer.push(z_start, z_end)
        jumped = False
        step = z_end - z_start
        if float(np.linalg.norm(step)) > 1e-12:
            # the receiver feedback limits each pass to a short move along
            # a nearly straight valley; stretch the move while it pays
            cur = _balanced_mcl(state, cfg, channels)
            best = None
            for kappa in (4.0, 16.0, 64.0, 256.0):
                cand = _materialize(z_end + kappa * step, state, cfg, channels)
                val = _balanced_mcl(cand, cfg, channels)
                if val < cur:
                    best, cur = cand, val
                else:
                    break
            if best is not None:
                _global_phase_step(best, cfg, channels)
                state.theta = best.theta
                if not fixed_power:
                    state.p = best.p
                state.receivers = best.receivers
                state.v = best.v
                jumps += 1
                jumped = True
        proposal = mixer.propose()
        if proposal is not None:
            cand = _materialize(proposal, state, cfg, channels)
            _global_phase_step(cand, cfg, channels)
            if _balanced_mcl(cand, cfg, channels) < _balanced_mcl(state, cfg, channels):
                state.theta = cand.theta
                if not fixed_power:
                    state.p = cand.p
                state.receivers = cand.receivers
                state.v = cand.v
                jumps += 1

        new_bal = _balanced_mcl(state, cfg, channels)
        if bal - new_bal <= 0.3 * cfg.zeta * new_bal:
            bal = new_bal
            break
        bal = new_bal
    return {"refine_passes": passes, "refine_jumps": jumps}, eps


def _project_rate_vars(theta, q, cfg: ScenarioConfig, channels: ChannelSet):
    """Pull an extrapolated (reflection, sqrt-power) pair back to the
    feasible set: power box, amplification budget or unit modulus."""
    p = np.clip(q, 0.0, np.sqrt(cfg.p_max_w)) ** 2
    if cfg.ris_mode == "active":
        gain = np.sum(np.abs(channels.h) ** 2 * p[None, :], axis=1) \
            + cfg.effective_ris_noise()
        used = float(np.abs(theta) ** 2 @ gain)
        budget = cfg.amplification_budget()
        if used > budget and used > 0.0:
            theta = theta * np.sqrt(budget * (1.0 - 1e-9) / used)
    else:
        mag = np.abs(theta)
        theta = np.where(mag > 0.0, theta / np.where(mag > 0.0, mag, 1.0), 1.0)
    return theta, p


def _pack_rate_vars(state: SolutionState) -> np.ndarray:
    return np.concatenate([socp.split_complex(state.theta), np.sqrt(state.p)])


def _materialize(z: np.ndarray, ref: SolutionState, cfg: ScenarioConfig,
                 channels: ChannelSet) -> SolutionState:
    """State built from packed (reflection, sqrt-power) coordinates: the
    receivers, weights, and offload split are re-derived, the edge CPU
    split is carried over."""
    m2 = 2 * cfg.num_elements
    theta, p = _project_rate_vars(socp.join_complex(z[:m2]), z[m2:], cfg, channels)
    cand = ref.copy()
    cand.theta, cand.p = theta, p
    cand.receivers = rates.mmse_receivers(theta, p, channels,
                                          cfg.effective_ris_noise(), cfg.ap_noise_w)
    update_aux_v(cand, cfg, channels)
    snap = evaluate_latency(cand, cfg, channels)
    cand.relaxed_l, cand.l = compute.optimal_offload_volume(snap.rates, cand.f_e,
                                                            cfg.compute)
    return cand


class _AndersonMixer:
    """Anderson mixing over the block-pass map.

    The pass (receiver, weight, reflection, power, edge CPU blocks)
    contracts with a spectral radius close to one, so plain iteration
    creeps for dozens of rounds.  The reflection vector also carries a
    soft common-phase mode along which the iterates orbit rather than
    contract; aligning every stored iterate to a reference rotation makes
    the history look like a contraction so the least-squares secant model
    can jump along the slow modes.  Every proposal is projected back to
    the feasible set and kept only if it lowers the objective."""

    def __init__(self, memory: int = 5, m_complex: int = 0):
        self.memory = memory
        self.m = m_complex
        self.ref: np.ndarray | None = None
        self.zs: list[np.ndarray] = []
        self.ts: list[np.ndarray] = []

    def _align(self, z: np.ndarray) -> np.ndarray:
        theta = z[: self.m] + 1j * z[self.m: 2 * self.m]
        ip = np.vdot(self.ref, theta)
        if abs(ip) == 0.0:
            return z
        out = z.copy()
        rotated = theta * (np.conj(ip) / abs(ip))
        out[: self.m] = rotated.real
        out[self.m: 2 * self.m] = rotated.imag
        return out

    def push(self, z_start: np.ndarray, z_end: np.ndarray) -> None:
        if self.m:
            theta_end = z_end[: self.m] + 1j * z_end[self.m: 2 * self.m]
            if self.ref is None:
                self.ref = theta_end.copy()
            elif (abs(np.vdot(self.ref, theta_end))
                  < 0.2 * np.linalg.norm(self.ref) * np.linalg.norm(theta_end)):
                # frame rotated too far from the anchor: re-anchor
                self.ref = theta_end.copy()
                self.reset()
            z_start = self._align(z_start)
            z_end = self._align(z_end)
        self.zs.append(z_start)
        self.ts.append(z_end)
        if len(self.zs) > self.memory:
            self.zs.pop(0)
            self.ts.pop(0)

    def reset(self) -> None:
        self.zs.clear()
        self.ts.clear()

    def propose(self) -> np.ndarray | None:
        if len(self.zs) < 2:
            return None
        t_hist = np.array(self.ts)
        resid = t_hist - np.array(self.zs)
        d_resid = np.diff(resid, axis=0)
        try:
            gamma, *_ = np.linalg.lstsq(d_resid.T, resid[-1], rcond=None)
        except np.linalg.LinAlgError:
            return None
        z = t_hist[-1] - gamma @ np.diff(t_hist, axis=0)
        return z if np.all(np.isfinite(z)) else None


def bcd_solve(cfg: ScenarioConfig, channels: ChannelSet,
              init: SolutionState | None = None, fixed_power: bool = False,
              callback=None):
    """Run the descent to the relative-change tolerance; returns (state, trace).

    The trace's eps column carries the epigraph value of the last conic
    subproblem of the iteration (falling back to the realized objective
    when no conic step ran, e.g. passive mode with fixed powers).
    """
    validate_config(cfg)
    state = init.copy() if init is not None else init_solution(cfg, channels)
    options = socp.SolverOptions(kkt_tol=cfg.kkt_tol)
    trace = IterationTrace()
    mcl_prev = None
    mixer = _AndersonMixer(m_complex=cfg.num_elements)

    for _ in range(cfg.n_max):
        tic = time.perf_counter()

        _offload_step(state, cfg, channels)
        statuses, eps = _balanced_refine(state, cfg, channels, options,
                                         fixed_power, mixer)
        _offload_step(state, cfg, channels)

        snap = evaluate_latency(state, cfg, channels)
        ris_power = (ris_amplification_power(state, channels, cfg.effective_ris_noise())
                     if cfg.ris_mode == "active" else 0.0)
        trace.append_row(snap.mcl, snap.t_local, snap.t_edge,
                         snap.mcl if eps is None else eps, ris_power, statuses,
                         time.perf_counter() - tic)
        if callback is not None:
            callback(len(trace), state, trace)
        if (mcl_prev is not None
                and abs(snap.mcl - mcl_prev) / mcl_prev < cfg.zeta):
            trace.converged = True
            break
        mcl_prev = snap.mcl

    snap = evaluate_latency(state, cfg, channels)
    _, state.l = compute.optimal_offload_volume(snap.rates, state.f_e, cfg.compute)
    trace.check_monotone()
    return state, trace
