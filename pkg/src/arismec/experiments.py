"""Scenario harness: convergence traces, element-count sweeps, and
surface-location sweeps, plus a quantized-phase variant and the
passive-surface baseline.  Results are emitted as versioned CSV text.

Sweep points are evaluated independently and the rows are assembled in
sorted key order, so identical (config, seeds) inputs reproduce the
CSV byte for byte.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Iterable, Sequence

import numpy as np

from . import compute, rates
from .bcd import bcd_solve, evaluate_latency
from .channel import ChannelSet, channels_for
from .config import ScenarioConfig, validate_config, with_seed
from .state import SolutionState, ris_amplification_power, validate_state

CONVERGE_SCHEMA = "arismec/converge/v1"
SWEEP_M_SCHEMA = "arismec/sweep-m/v1"
SWEEP_LOC_SCHEMA = "arismec/sweep-loc/v1"

VARIANTS = ("active", "active-2bit", "passive")


def quantize_phases(theta: np.ndarray, levels: int = 4) -> np.ndarray:
    """Snap each element's phase to the nearest of `levels` uniform points.

    Ties go to the smaller of the two neighbouring phases.  Amplitudes
    are untouched.
    """
    if levels < 2:
        raise ValueError("need at least two phase levels")
    step = 2.0 * np.pi / levels
    phi = np.mod(np.angle(theta), 2.0 * np.pi)
    idx = np.mod(np.ceil(phi / step - 0.5), levels)
    return np.abs(theta) * np.exp(1j * idx * step)


def evaluate_quantized(state: SolutionState, cfg: ScenarioConfig,
                       channels: ChannelSet, levels: int = 4):
    """Quantize the converged surface and re-balance the rest of the design.

    Receivers are rebuilt for the quantized surface and the offload
    split re-optimized; powers and the edge CPU split are kept.  If the
    quantized surface overshoots the amplification budget (it cannot,
    phases do not enter that constraint, but the guard is cheap) the
    amplitudes are rescaled uniformly.  Returns (new_state, mcl).
    """
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    new = state.copy()
    new.theta = quantize_phases(state.theta, levels)
    if cfg.ris_mode == "active":
        used = ris_amplification_power(new, channels, sigma2)
        budget = cfg.amplification_budget()
        if used > budget:
            new.theta = new.theta * np.sqrt(budget / used)
    new.receivers = rates.mmse_receivers(new.theta, new.p, channels, sigma2, delta2)
    _, r = rates.sinr_and_rate(new.receivers, new.theta, new.p, channels,
                               sigma2, delta2, cfg.bandwidth_hz)
    new.relaxed_l, new.l = compute.optimal_offload_volume(r, new.f_e, cfg.compute)
    new.v = 1.0 / rates.mse(new.receivers, new.theta, new.p, channels, sigma2, delta2)
    return new, evaluate_latency(new, cfg, channels).mcl


def passive_baseline(cfg: ScenarioConfig, channels: ChannelSet | None = None,
                     fixed_power: bool = False):
    """Unit-modulus baseline on the same pipeline; returns (state, trace)."""
    pcfg = replace(cfg, ris_mode="passive", p_aris_override_w=None)
    validate_config(pcfg)
    if channels is None:
        channels = channels_for(pcfg)
    return bcd_solve(pcfg, channels, fixed_power=fixed_power)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _assemble(schema: str, header: Sequence[str], keyed_rows) -> str:
    lines = [f"# schema: {schema}", ",".join(header)]
    for _, values in sorted(keyed_rows, key=lambda kv: kv[0]):
        lines.append(",".join(_fmt(v) for v in values))
    return "\n".join(lines) + "\n"


def run_convergence(cfg: ScenarioConfig, m_list: Iterable[int] = (8, 16, 32),
                    seeds: Iterable[int] = range(20),
                    amplification_w: float = 0.010,
                    fixed_power: bool = False) -> str:
    """Per-iteration objective traces at a pinned amplification budget.

    One row per (element count, seed, iteration).
    """
    rows = []
    for m in m_list:
        for seed in seeds:
            run_cfg = with_seed(replace(cfg, num_elements=int(m), ris_mode="active",
                                        p_aris_override_w=amplification_w), int(seed))
            validate_config(run_cfg)
            chans = channels_for(run_cfg)
            state, trace = bcd_solve(run_cfg, chans, fixed_power=fixed_power)
            validate_state(state, run_cfg, chans, integer_l=True)
            for it, mcl in enumerate(trace.mcl, start=1):
                rows.append(((int(m), int(seed), it),
                             [int(m), int(seed), it, float(mcl), trace.converged]))
    return _assemble(CONVERGE_SCHEMA, ["m", "seed", "iter", "mcl_s", "converged"], rows)


def _solve_variants(cfg: ScenarioConfig, chans: ChannelSet,
                    variants: Sequence[str], fixed_power: bool):
    """Final (mcl, per-user latency, converged, state) per requested variant."""
    out = {}
    need_active = "active" in variants or "active-2bit" in variants
    if need_active:
        state, trace = bcd_solve(cfg, chans, fixed_power=fixed_power)
        validate_state(state, cfg, chans, integer_l=True)
        snap = evaluate_latency(state, cfg, chans)
        if "active" in variants:
            out["active"] = (snap.mcl, np.maximum(snap.t_local, snap.t_edge),
                             trace.converged, state)
        if "active-2bit" in variants:
            qstate, qmcl = evaluate_quantized(state, cfg, chans)
            validate_state(qstate, cfg, chans, integer_l=True)
            qsnap = evaluate_latency(qstate, cfg, chans)
            out["active-2bit"] = (qmcl, np.maximum(qsnap.t_local, qsnap.t_edge),
                                  trace.converged, qstate)
    if "passive" in variants:
        pcfg = replace(cfg, ris_mode="passive", p_aris_override_w=None)
        validate_config(pcfg)
        pstate, ptrace = bcd_solve(pcfg, chans, fixed_power=fixed_power)
        validate_state(pstate, pcfg, chans, integer_l=True)
        psnap = evaluate_latency(pstate, pcfg, chans)
        out["passive"] = (psnap.mcl, np.maximum(psnap.t_local, psnap.t_edge),
                          ptrace.converged, pstate)
    return out


def sweep_m(cfg: ScenarioConfig, m_list: Iterable[int] = (4, 8, 12, 16, 20),
            p_tot_list_w: Iterable[float] = (0.010, 0.020),
            seeds: Iterable[int] = range(20),
            variants: Sequence[str] = VARIANTS,
            fixed_power: bool = False) -> str:
    """Final objective versus element count, per variant and supply power."""
    for v in variants:
        if v not in VARIANTS:
            raise ValueError(f"unknown variant {v!r}")
    rows = []
    for m in m_list:
        for p_tot in p_tot_list_w:
            for seed in seeds:
                point = with_seed(replace(cfg, num_elements=int(m),
                                          p_tot_w=float(p_tot), ris_mode="active",
                                          p_aris_override_w=None), int(seed))
                validate_config(point)
                chans = channels_for(point)
                solved = _solve_variants(point, chans, variants, fixed_power)
                for variant, (mcl, _, converged, _) in solved.items():
                    p_mw = float(p_tot) * 1e3
                    rows.append(((variant, int(m), p_mw, int(seed)),
                                 [variant, int(m), p_mw, int(seed), float(mcl),
                                  converged]))
    return _assemble(SWEEP_M_SCHEMA,
                     ["variant", "m", "p_tot_mw", "seed", "mcl_s", "converged"], rows)


def sweep_location(cfg: ScenarioConfig,
                   x_ris_list: Iterable[float] = (150.0, 190.0, 230.0, 270.0),
                   seeds: Iterable[int] = range(20),
                   variants: Sequence[str] = ("active",),
                   fixed_power: bool = False) -> str:
    """Final objective and per-user latency versus the surface x-coordinate."""
    for v in variants:
        if v not in VARIANTS:
            raise ValueError(f"unknown variant {v!r}")
    k = cfg.num_users
    header = (["variant", "x_ris_m", "seed", "mcl_s"]
              + [f"t_user_{i + 1}" for i in range(k)] + ["converged"])
    rows = []
    for x in x_ris_list:
        for seed in seeds:
            pos = np.array([float(x), cfg.ris_position[1], cfg.ris_position[2]])
            point = with_seed(replace(cfg, ris_position=pos), int(seed))
            validate_config(point)
            chans = channels_for(point)
            solved = _solve_variants(point, chans, variants, fixed_power)
            for variant, (mcl, per_user, converged, _) in solved.items():
                rows.append(((variant, float(x), int(seed)),
                             [variant, float(x), int(seed), float(mcl),
                              *[float(t) for t in per_user], converged]))
    return _assemble(SWEEP_LOC_SCHEMA, header, rows)


def write_csv(text: str, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)
