"""Partial-offloading latency model and edge CPU allocation.

Each task splits into a local part and an offloaded part; the user's
latency is the larger of the local compute time and the transmit-plus-
edge-compute time.  The split has a closed-form balance point; the edge
CPU shares are set by successive convex approximation of the min-max
latency problem at fixed rates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ComputeProfile
from . import socp


def latencies(l, rates, profile: ComputeProfile, f_e):
    """Per-user (local, edge) latency; infinite edge latency is a flagged dead end."""
    l = np.asarray(l, dtype=float)
    rates = np.asarray(rates, dtype=float)
    f_e = np.asarray(f_e, dtype=float)
    t_local = (profile.task_bits - l) * profile.cycles_per_bit / profile.local_cps
    t_edge = np.zeros_like(t_local)
    on = l > 0.0
    with np.errstate(divide="ignore"):
        t_edge[on] = (l[on] / rates[on]
                      + l[on] * profile.cycles_per_bit[on] / f_e[on])
    return t_local, t_edge


def optimal_offload_volume(rates, f_e, profile: ComputeProfile):
    """Latency-balancing split: continuous volume and its integer rounding.

    The continuous balance point equalises local and edge latency; the
    integer volume is whichever neighbour yields the smaller per-user
    latency, ties broken toward the floor.  Users with zero rate or zero
    edge CPU keep everything local.
    """
    rates = np.asarray(rates, dtype=float)
    f_e = np.asarray(f_e, dtype=float)
    big_l, c, f_l = profile.task_bits, profile.cycles_per_bit, profile.local_cps
    usable = (rates > 0.0) & (f_e > 0.0)
    l_tilde = np.zeros_like(rates)
    num = big_l * c * rates * f_e
    den = f_l * f_e + c * rates * (f_l + f_e)
    l_tilde[usable] = num[usable] / den[usable]
    l_tilde = np.clip(l_tilde, 0.0, big_l)

    lo = np.floor(l_tilde)
    hi = np.minimum(np.ceil(l_tilde), big_l)
    t_lo = np.maximum(*latencies(lo, rates, profile, f_e))
    t_hi = np.maximum(*latencies(hi, rates, profile, f_e))
    l_int = np.where(t_hi < t_lo, hi, lo)
    return l_tilde, l_int.astype(np.int64)


def sca_objective(rates, profile: ComputeProfile, f_e):
    """Min-max latency objective at the balanced split, as a function of f_e."""
    rates = np.asarray(rates, dtype=float)
    f_e = np.asarray(f_e, dtype=float)
    big_l, c, f_l = profile.task_bits, profile.cycles_per_bit, profile.local_cps
    cr = c * rates
    num = big_l * c * (f_e + cr)
    den = f_l * f_e + cr * (f_l + f_e)
    return float(np.max(num / den))


@dataclass(eq=False)
class SCAResult:
    f_e: np.ndarray
    objective_trace: list
    converged: bool
    iterations: int


def _sca_subproblem(rates, profile, f_ref, options):
    """One convexified allocation step around the reference allocation f_ref."""
    k = rates.shape[0]
    big_l, c, f_l = profile.task_bits, profile.cycles_per_bit, profile.local_cps
    cr = c * rates
    tot = profile.edge_total_cps
    # variables: [eta, f_e (K), a (K), b (K)]
    n = 3 * k + 1
    i_eta, i_f, i_a, i_b = 0, 1, 1 + k, 1 + 2 * k

    obj_ref = sca_objective(rates, profile, f_ref)
    a_ref = big_l * c * f_ref / (f_l * f_ref + cr * (f_l + f_ref))
    b_ref = big_l * c * cr / (f_l * f_ref + cr * (f_l + f_ref))

    c_vec = np.zeros(n)
    c_vec[i_eta] = 1.0
    prog = socp.ConvexProgram(n, c_vec)
    prog.set_bounds(i_eta, lo=0.0)
    for j in range(k):
        prog.set_bounds(i_f + j, lo=0.0, hi=tot)
        prog.set_bounds(i_a + j, lo=0.0)
        prog.set_bounds(i_b + j, lo=0.0)
    ones_f = np.zeros(n)
    ones_f[i_f:i_f + k] = 1.0
    prog.add_linear(ones_f, tot)
    for j in range(k):
        row = np.zeros(n)
        row[i_a + j] = 1.0
        row[i_b + j] = 1.0
        row[i_eta] = -1.0
        prog.add_linear(row, 0.0)
        # a_j * tangent(f_j) >= L_j c_j, tangent taken at f_ref
        u = np.zeros(n); u[i_a + j] = 1.0
        v = np.zeros(n)
        slope = -cr[j] * f_l[j] / f_ref[j] ** 2
        v[i_f + j] = slope
        v_off = cr[j] * f_l[j] / f_ref[j] - slope * f_ref[j] + f_l[j] + cr[j]
        prog.add_cone(u, 0.0, v, v_off, np.sqrt(big_l[j] * c[j]))
        # b_j * ((f_L + cR) f_j + cR f_L) >= L_j c_j^2 R_j
        u2 = np.zeros(n); u2[i_b + j] = 1.0
        v2 = np.zeros(n)
        v2[i_f + j] = f_l[j] + cr[j]
        prog.add_cone(u2, 0.0, v2, cr[j] * f_l[j], np.sqrt(big_l[j] * c[j] * cr[j]))

    scales = np.ones(n)
    scales[i_eta] = max(obj_ref, 1e-12)
    scales[i_f:i_f + k] = tot
    scales[i_a:i_a + k] = np.maximum(a_ref, 1e-12)
    scales[i_b:i_b + k] = np.maximum(b_ref, 1e-12)
    prog.var_scales = scales

    x0 = np.zeros(n)
    shrink = 1.0 - 1e-7
    x0[i_f:i_f + k] = f_ref * shrink
    a0 = big_l * c * (f_ref * shrink) / (f_l * f_ref * shrink
                                         + cr * (f_l + f_ref * shrink))
    x0[i_a:i_a + k] = a0 * (1.0 + 1e-6)
    x0[i_b:i_b + k] = big_l * c * cr / (f_l * f_ref * shrink
                                        + cr * (f_l + f_ref * shrink)) * (1.0 + 1e-6)
    x0[i_eta] = float(np.max(x0[i_a:i_a + k] + x0[i_b:i_b + k])) * (1.0 + 1e-6)
    prog.x0 = x0

    report = socp.solve(prog, options)
    return report.x[i_f:i_f + k], report


def sca_resource_allocation(rates, profile: ComputeProfile, f_e_init,
                            tol: float = 1e-5, max_iter: int = 30,
                            solver_options: socp.SolverOptions | None = None) -> SCAResult:
    """Iterated convexification of the edge allocation at fixed rates.

    Requires strictly positive rates and a feasible start (f_e > 0,
    sum f_e <= total); the objective trace is non-increasing because a
    step is kept only if it does not worsen the true objective.
    """
    rates = np.asarray(rates, dtype=float)
    f_e = np.asarray(f_e_init, dtype=float).copy()
    if np.any(rates <= 0.0):
        raise ValueError("SCA allocation needs strictly positive rates")
    if np.any(f_e <= 0.0) or np.sum(f_e) > profile.edge_total_cps * (1.0 + 1e-12):
        raise ValueError("infeasible starting allocation")
    options = solver_options or socp.SolverOptions()

    trace = [sca_objective(rates, profile, f_e)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        f_new, report = _sca_subproblem(rates, profile, f_e, options)
        if report.status != socp.OPTIMAL:
            break
        obj_new = sca_objective(rates, profile, f_new)
        if obj_new <= trace[-1]:
            f_e = f_new
            trace.append(obj_new)
        else:
            trace.append(trace[-1])
        rel = abs(trace[-1] - trace[-2]) / max(trace[-2], 1e-300)
        if rel < tol:
            converged = True
            break
    return SCAResult(f_e, trace, converged, it)
