"""Headline acceptance battery: convergence speed, objective monotonicity,
surrogate tightness, closed-form and grid oracles, seed-averaged sweep
ordering, and conic-solve certification.

Each test prints a single [PASS]/[FAIL] line with its evidence.  The
certification test must stay last in the module: its fixture audits the
KKT residuals of every conic solve the earlier tests trigger.
"""

import csv
import time

import numpy as np
import pytest

from arismec import bcd, compute, experiments, rates, socp
from arismec.channel import channels_for
from arismec.config import ComputeProfile, default_config, with_seed
from arismec.state import validate_state

from _support import (LN2, crandn, make_config, ref_balanced_latency, ref_mse,
                      ref_ris_power, ref_surrogate_rate, rel_err)
from test_socp import _infeasible_programs


def _report(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


@pytest.fixture(scope="module", autouse=True)
def conic_audit():
    """Route every conic solve through a recorder of the worst KKT residuals."""
    record = {"stat": 0.0, "feas": 0.0, "gap": 0.0, "optimal": 0, "other": 0}
    orig = socp.solve

    def audited(prog, options=None):
        rep = orig(prog, options)
        if rep.status == socp.OPTIMAL:
            record["optimal"] += 1
            record["stat"] = max(record["stat"], rep.kkt_stationarity)
            record["feas"] = max(record["feas"], rep.kkt_feasibility)
            record["gap"] = max(record["gap"], rep.kkt_gap)
        else:
            record["other"] += 1
        return rep

    socp.solve = audited
    yield record
    socp.solve = orig


@pytest.fixture(scope="module")
def convergence_run():
    t0 = time.perf_counter()
    text = experiments.run_convergence(default_config())
    return text, time.perf_counter() - t0


def test_convergence_battery(capsys, convergence_run):
    text, elapsed = convergence_run

    iters, conv = {}, {}
    for r in _rows(text):
        key = (int(r["m"]), int(r["seed"]))
        iters[key] = max(iters.get(key, 0), int(r["iter"]))
        conv[key] = r["converged"] == "1"
    ms = sorted({m for m, _ in iters})
    hits = {m: sum(1 for (mm, s), it in iters.items()
                   if mm == m and conv[(mm, s)] and it <= 15) for m in ms}
    total = {m: sum(1 for mm, _ in iters if mm == m) for m in ms}

    ok = bool(ms) and all(hits[m] >= 0.8 * total[m] for m in ms) and elapsed < 60.0
    detail = (", ".join(f"M={m}: {hits[m]}/{total[m]} within 15 iters" for m in ms)
              + f", {elapsed:.1f}s")
    _report(capsys, "convergence rate", ok, detail)


def test_more_elements_never_slower_on_average(convergence_run):
    text, _ = convergence_run
    final = {}
    for r in _rows(text):   # rows are iteration-ordered, last one wins
        final[(int(r["m"]), int(r["seed"]))] = float(r["mcl_s"])
    ms = sorted({m for m, _ in final})
    seeds = sorted({s for _, s in final})
    means = [np.mean([final[(m, s)] for s in seeds]) for m in ms]
    assert all(b <= a * (1.0 + 1e-9) for a, b in zip(means, means[1:]))


def test_monotone_objective(capsys):
    cfg0 = default_config()
    worst = -np.inf
    for seed in range(50):
        cfg = with_seed(cfg0, seed)
        chans = channels_for(cfg)
        state, trace = bcd.bcd_solve(cfg, chans)
        validate_state(state, cfg, chans, integer_l=True)
        m = np.asarray(trace.mcl)
        if m.size >= 2:
            worst = max(worst, float(np.max(np.diff(m) / m[:-1])))
        trace.check_monotone(rtol=1e-9)
    ok = worst <= 1e-9
    _report(capsys, "monotone objective", ok,
            f"worst relative rise {worst:.2e} across 50 seeds")


def test_surrogate_equivalence(capsys):
    rng = np.random.default_rng(2024)

    # the concave rate bound meets the true rate when the weight inverts
    # the error of the minimum-MSE receiver
    worst_rate = 0.0
    for trial in range(50):
        k = int(rng.integers(1, 4))
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 7))
        cfg = make_config(k=k, n=n, m=m, seed=300 + trial)
        chans = channels_for(cfg)
        s2, d2 = cfg.effective_ris_noise(), cfg.ap_noise_w
        theta = crandn(rng, m) * rng.uniform(0.3, 2.0)
        p = rng.uniform(0.1, 1.0, k) * cfg.p_max_w
        f = rates.mmse_receivers(theta, p, chans, s2, d2)
        d = rates.mse(f, theta, p, chans, s2, d2)
        bound = rates.mmse_rate(1.0 / d, d, cfg.bandwidth_hz)
        true = rates.sinr_and_rate(f, theta, p, chans, s2, d2, cfg.bandwidth_hz)[1]
        worst_rate = max(worst_rate, float(np.max(np.abs(bound - true) / true)))

    # quadratic builders against the literal per-user formulas
    cfg = make_config(k=3, n=3, m=4, seed=77)
    chans = channels_for(cfg)
    s2, d2, bw = cfg.effective_ris_noise(), cfg.ap_noise_w, cfg.bandwidth_hz
    theta0 = crandn(rng, 4) * 1.3
    p0 = rng.uniform(0.2, 1.0, 3) * cfg.p_max_w
    f0 = rates.mmse_receivers(theta0, p0, chans, s2, d2)
    v0 = 1.0 / rates.mse(f0, theta0, p0, chans, s2, d2)

    worst_builder = 0.0
    tq = rates.build_theta_quadratics(f0, p0, chans, v0, s2, d2, bw)
    for _ in range(100):
        th = crandn(rng, 4) * rng.uniform(0.2, 2.0)
        lit_mse = np.array([ref_mse(f0, th, p0, chans, s2, d2, kk) for kk in range(3)])
        lit_rate = ref_surrogate_rate(v0, lit_mse, bw)
        worst_builder = max(worst_builder,
                            rel_err(tq.mse_value(th), lit_mse),
                            rel_err(tq.rate_value(th), lit_rate),
                            rel_err(tq.power_value(th),
                                    ref_ris_power(th, p0, chans, s2)))
    pq = rates.build_power_quadratics(f0, theta0, chans, v0, s2, d2, bw)
    for _ in range(100):
        q = rng.uniform(0.0, np.sqrt(cfg.p_max_w), 3)
        lit_mse = np.array([ref_mse(f0, theta0, q ** 2, chans, s2, d2, kk)
                            for kk in range(3)])
        lit_rate = ref_surrogate_rate(v0, lit_mse, bw)
        worst_builder = max(worst_builder,
                            rel_err(pq.mse_value(q), lit_mse),
                            rel_err(pq.rate_value(q), lit_rate),
                            rel_err(pq.power_value(q),
                                    ref_ris_power(theta0, q ** 2, chans, s2)))

    ok = worst_rate <= 1e-8 and worst_builder <= 1e-9
    _report(capsys, "surrogate equivalence", ok,
            f"rate-bound mismatch {worst_rate:.2e} (50 states), "
            f"builder mismatch {worst_builder:.2e} (100 points each)")


def test_update_oracles(capsys):
    rng = np.random.default_rng(99)

    # (a) integer split against an exhaustive scan, 100 instances
    split_hits = 0
    for _ in range(100):
        k = int(rng.integers(1, 4))
        prof = ComputeProfile(
            task_bits=rng.integers(5, 240, k).astype(float),
            local_cps=rng.uniform(1e2, 5e3, k),
            cycles_per_bit=rng.integers(1, 40, k).astype(float),
            edge_total_cps=float(rng.uniform(1e3, 5e4)))
        shares = rng.dirichlet(np.ones(k)) * prof.edge_total_cps
        rts = rng.uniform(1.0, 1e3, k)
        _, l_int = compute.optimal_offload_volume(rts, shares, prof)
        good = True
        for j in range(k):
            ls = np.arange(int(prof.task_bits[j]) + 1, dtype=float)
            t_loc = (prof.task_bits[j] - ls) * prof.cycles_per_bit[j] / prof.local_cps[j]
            t_edge = np.where(ls > 0.0,
                              ls / rts[j] + ls * prof.cycles_per_bit[j] / shares[j], 0.0)
            t = np.maximum(t_loc, t_edge)
            good &= t[l_int[j]] == t.min()
        split_hits += good

    # (b) two-user edge CPU allocation against a budget-line grid: the
    # latency falls with every extra cycle, so the optimum spends the
    # whole budget and the simplex reduces to one dimension
    worst_alloc = 0.0
    for trial in range(5):
        prof = ComputeProfile(
            task_bits=rng.uniform(5e4, 2e5, 2),
            local_cps=rng.uniform(2e8, 8e8, 2),
            cycles_per_bit=rng.uniform(500.0, 1000.0, 2),
            edge_total_cps=2e9)
        rts = rng.uniform(1e6, 1e7, 2)

        def objective(f_pair):
            return max(ref_balanced_latency(rts[j], f_pair[j], prof.task_bits[j],
                                            prof.cycles_per_bit[j], prof.local_cps[j])
                       for j in range(2))

        alphas = np.linspace(1e-4, 1.0 - 1e-4, 20001)
        grid = min(objective((a * prof.edge_total_cps,
                              (1.0 - a) * prof.edge_total_cps)) for a in alphas)
        res = compute.sca_resource_allocation(rts, prof,
                                              np.full(2, prof.edge_total_cps / 2))
        worst_alloc = max(worst_alloc, abs(objective(res.f_e) - grid) / grid)

    # (c) single-element reflection update against a polar grid
    cfg = make_config(k=1, n=1, m=1, seed=23)
    chans = channels_for(cfg)
    state = bcd.init_solution(cfg, chans)
    bcd.update_beamformer(state, cfg, chans)
    bcd.update_aux_v(state, cfg, chans)
    g, hh, hu = chans.g[0, 0], chans.H[0, 0], chans.h[0, 0]
    f = state.receivers[0, 0]
    p, v = state.p[0], state.v[0]
    l, fe = state.relaxed_l[0], state.f_e[0]
    cyc = cfg.compute.cycles_per_bit[0]
    s2, d2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    budget = cfg.amplification_budget()

    def eps_theta(theta):
        e = g + hh * theta * hu
        d = (abs(f) ** 2 * (p * abs(e) ** 2 + s2 * abs(hh * theta) ** 2 + d2)
             - 2.0 * np.sqrt(p) * np.real(np.conj(f) * e) + 1.0)
        r = cfg.bandwidth_hz * (np.log2(v) - v * d / LN2 + 1.0 / LN2)
        return np.where(r > 0.0, l * cyc / fe + l / np.maximum(r, 1e-300), np.inf)

    a_max = np.sqrt(budget / (p * abs(hu) ** 2 + s2))
    amps = np.linspace(0.0, a_max, 481)
    phis = np.linspace(0.0, 2.0 * np.pi, 512, endpoint=False)
    grid_theta = float(np.min(eps_theta(amps[:, None] * np.exp(1j * phis[None, :]))))
    report, accepted = bcd.update_theta(state, cfg, chans)
    theta_ok = report is not None and accepted
    got = float(eps_theta(np.asarray([[state.theta[0]]]))[0, 0])
    gap_theta = got / grid_theta - 1.0

    # (c) single-user power update against a line grid; a common receiver
    # phase keeps the true SINR but moves the program optimum interior
    cfg = make_config(k=1, n=2, m=2, seed=31)
    chans = channels_for(cfg)
    state = bcd.init_solution(cfg, chans)
    bcd.update_beamformer(state, cfg, chans)
    state.receivers = state.receivers * np.exp(0.25j * np.pi)
    bcd.update_aux_v(state, cfg, chans)
    f = state.receivers[:, 0]
    e = chans.g[:, 0] + chans.H @ (state.theta * chans.h[:, 0])
    fe2 = abs(np.vdot(f, e)) ** 2
    fe_re = np.real(np.vdot(f, e))
    amp = np.sum(np.abs((f.conj() @ chans.H) * state.theta) ** 2)
    s2, d2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    base = s2 * amp + d2 * np.real(np.vdot(f, f)) + 1.0
    v = state.v[0]
    l, fe = state.relaxed_l[0], state.f_e[0]
    cyc = cfg.compute.cycles_per_bit[0]
    lam2 = np.abs(state.theta) ** 2
    budget = cfg.amplification_budget()

    def eps_power(pw):
        d = fe2 * pw - 2.0 * np.sqrt(pw) * fe_re + base
        r = cfg.bandwidth_hz * (np.log2(v) - v * d / LN2 + 1.0 / LN2)
        eps = np.where(r > 0.0, l * cyc / fe + l / np.maximum(r, 1e-300), np.inf)
        ris = np.sum(lam2) * s2 + pw * np.sum(lam2 * np.abs(chans.h[:, 0]) ** 2)
        return np.where(ris <= budget * (1.0 + 1e-9), eps, np.inf)

    grid_power = float(np.min(eps_power(np.linspace(0.0, cfg.p_max_w, 20001))))
    report, _ = bcd.update_power(state, cfg, chans)
    power_ok = report is not None and report.status == socp.OPTIMAL
    got = float(eps_power(np.asarray([float(report.x[0]) ** 2]))[0])
    gap_power = got / grid_power - 1.0

    # (d) whole pipeline on the one-of-everything scenario against a
    # joint grid over phase, amplification, and power, with the split
    # minimized exactly per cell
    cfg = make_config(k=1, n=1, m=1, seed=41)
    chans = channels_for(cfg)
    g, hh, hu = chans.g[0, 0], chans.H[0, 0], chans.h[0, 0]
    s2, d2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    budget = cfg.amplification_budget()
    bits = cfg.compute.task_bits[0]
    cyc = cfg.compute.cycles_per_bit[0]
    f_loc = cfg.compute.local_cps[0]
    f_edge = cfg.compute.edge_total_cps
    phis = np.linspace(0.0, 2.0 * np.pi, 96, endpoint=False)
    pows = np.linspace(cfg.p_max_w / 64, cfg.p_max_w, 64)
    fracs = np.linspace(0.0, 1.0, 64)
    ph, pw, fr = np.meshgrid(phis, pows, fracs, indexing="ij")
    amp = fr * np.sqrt(budget / (pw * abs(hu) ** 2 + s2))
    theta = amp * np.exp(1j * ph)
    e = g + hh * theta * hu
    gamma = pw * np.abs(e) ** 2 / (s2 * np.abs(hh * theta) ** 2 + d2)
    rate = cfg.bandwidth_hz * np.log2(1.0 + gamma)
    l_tilde = bits * cyc * rate * f_edge / (f_loc * f_edge + cyc * rate * (f_loc + f_edge))
    best = np.full(rate.shape, np.inf)
    for cand in (np.zeros_like(l_tilde), np.floor(l_tilde), np.ceil(l_tilde),
                 np.full_like(l_tilde, bits)):
        cand = np.clip(cand, 0.0, bits)
        t_loc = (bits - cand) * cyc / f_loc
        with np.errstate(divide="ignore", invalid="ignore"):
            t_edge = np.where(cand > 0.0, cand / rate + cand * cyc / f_edge, 0.0)
        best = np.minimum(best, np.maximum(t_loc, t_edge))
    grid_joint = float(np.min(best))
    state, trace = bcd.bcd_solve(cfg, chans)
    validate_state(state, cfg, chans, integer_l=True)
    gap_joint = abs(trace.mcl[-1] - grid_joint) / grid_joint

    ok = (split_hits == 100 and worst_alloc <= 1e-3
          and theta_ok and gap_theta <= 1e-3
          and power_ok and gap_power <= 1e-3
          and gap_joint <= 0.02)
    detail = (f"split {split_hits}/100, alloc gap {worst_alloc:.1e}, "
              f"theta gap {gap_theta:.1e}, power gap {gap_power:.1e}, "
              f"pipeline gap {gap_joint:.1%}")
    _report(capsys, "update oracles", ok, detail)


def test_qualitative_sweeps(capsys):
    cfg = default_config()

    text = experiments.sweep_m(cfg)
    mcl = {}
    for r in _rows(text):
        mcl[(r["variant"], int(r["m"]), float(r["p_tot_mw"]), int(r["seed"]))] = \
            float(r["mcl_s"])
    cells = sorted({(m, p) for _, m, p, _ in mcl})
    seeds = sorted({s for _, _, _, s in mcl})
    active_wins = sum(
        np.mean([mcl[("active", m, p, s)] for s in seeds])
        <= np.mean([mcl[("passive", m, p, s)] for s in seeds])
        for m, p in cells)
    quant_ok = all(mcl[("active-2bit", m, p, s)]
                   >= mcl[("active", m, p, s)] * (1.0 - 1e-9)
                   for m, p in cells for s in seeds)

    loc_text = experiments.sweep_location(cfg)
    by_x = {}
    for r in _rows(loc_text):
        by_x.setdefault(float(r["x_ris_m"]), []).append(float(r["mcl_s"]))
    means = {x: float(np.mean(v)) for x, v in by_x.items()}
    # every sweep point shares the cluster's y and z offsets, so ranking
    # by |x - cluster x| ranks the full surface-to-user distance
    order = sorted(means, key=lambda x: abs(x - cfg.user_area_center[0]))
    nearest_is_min = min(means, key=means.get) == order[0]
    monotone = all(means[a] <= means[b] for a, b in zip(order, order[1:]))

    ok = (active_wins == len(cells) and quant_ok and nearest_is_min and monotone)
    detail = (f"active<=passive on {active_wins}/{len(cells)} cells, "
              f"2-bit>=continuous on all rows: {quant_ok}, "
              f"location minimum at x={order[0]:g}: {nearest_is_min}, "
              f"monotone with distance: {monotone}")
    _report(capsys, "qualitative sweeps", ok, detail)


def test_solver_certification(capsys, conic_audit):
    progs = _infeasible_programs()
    certified = sum(socp.solve(pr).status == socp.INFEASIBLE for pr in progs)
    worst = max(conic_audit["stat"], conic_audit["feas"], conic_audit["gap"])
    ok = (certified == len(progs) == 10
          and conic_audit["optimal"] > 0 and worst <= 1e-8)
    detail = (f"{conic_audit['optimal']} optimal solves, "
              f"worst KKT residual {worst:.3e}, "
              f"{certified}/10 infeasible programs certified")
    _report(capsys, "solver certification", ok, detail)
