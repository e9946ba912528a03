"""Solution state, iteration trace, and the shared quadratic-form type."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig


@dataclass(eq=False)
class QuadraticForm:
    """Value x^H quad x + 2 Re{lin^H x} + const (real by construction)."""

    quad: np.ndarray
    lin: np.ndarray
    const: float = 0.0

    def evaluate(self, x: np.ndarray) -> float:
        x = np.asarray(x)
        return float(np.real(np.vdot(x, self.quad @ x))
                     + 2.0 * np.real(np.vdot(self.lin, x)) + self.const)

    def validate(self, herm_tol: float = 1e-12, psd_tol: float = 1e-10) -> None:
        """Require Hermitian symmetry and positive semidefiniteness."""
        scale = max(1.0, float(np.abs(self.quad).max(initial=0.0)))
        herm = float(np.abs(self.quad - self.quad.conj().T).max(initial=0.0))
        if herm > herm_tol * scale:
            raise ValueError(f"quadratic form not Hermitian: residual {herm:.3e}")
        lam_min = float(np.linalg.eigvalsh(self.quad)[0])
        if lam_min < -psd_tol * scale:
            raise ValueError(f"quadratic form not PSD: min eigenvalue {lam_min:.3e}")


@dataclass(eq=False)
class SolutionState:
    """One full design point of the system."""

    theta: np.ndarray       # (M,) complex reflection coefficients
    receivers: np.ndarray   # (N, K) complex, column k is the receive filter f_k
    p: np.ndarray           # (K,) transmit powers, W
    l: np.ndarray           # (K,) integer offloaded bits (final output)
    relaxed_l: np.ndarray   # (K,) continuous offload volumes used during the descent
    f_e: np.ndarray         # (K,) edge CPU allocations, cycles/s
    v: np.ndarray           # (K,) auxiliary MSE weights

    def copy(self) -> "SolutionState":
        return SolutionState(self.theta.copy(), self.receivers.copy(), self.p.copy(),
                             self.l.copy(), self.relaxed_l.copy(), self.f_e.copy(),
                             self.v.copy())


def ris_amplification_power(state: SolutionState, channels, sigma2: float) -> float:
    """Power the surface spends re-radiating: sum_k p_k ||Theta h_k||^2 + sigma^2 ||Theta||^2."""
    th = state.theta[:, None] * channels.h          # (M, K) element-wise Theta h_k
    sig = float(np.sum(state.p * np.sum(np.abs(th) ** 2, axis=0)))
    return sig + sigma2 * float(np.sum(np.abs(state.theta) ** 2))


def constraint_residuals(state: SolutionState, cfg: ScenarioConfig, channels,
                         integer_l: bool = False) -> dict[str, float]:
    """Violation amount per constraint family (0.0 means satisfied)."""
    prof = cfg.compute
    l = state.l if integer_l else state.relaxed_l
    res = {
        "power_cap": float(np.max(np.maximum(state.p - cfg.p_max_w, 0.0), initial=0.0)
                           + np.max(np.maximum(-state.p, 0.0), initial=0.0)),
        "offload_range": float(np.max(np.maximum(l - prof.task_bits, 0.0), initial=0.0)
                               + np.max(np.maximum(-l, 0.0), initial=0.0)),
        "offload_integer": (float(np.abs(l - np.round(l)).max(initial=0.0))
                            if integer_l else 0.0),
        "edge_cpu_nonneg": float(np.max(np.maximum(-state.f_e, 0.0), initial=0.0)),
        "edge_cpu_total": max(0.0, float(np.sum(state.f_e) - prof.edge_total_cps)),
    }
    if cfg.ris_mode == "active":
        used = ris_amplification_power(state, channels, cfg.effective_ris_noise())
        res["ris_power"] = max(0.0, used - cfg.amplification_budget())
    else:
        res["unit_modulus"] = float(np.abs(np.abs(state.theta) - 1.0).max(initial=0.0))
    return res


def validate_state(state: SolutionState, cfg: ScenarioConfig, channels,
                   tol: float = 1e-8, integer_l: bool = False) -> None:
    res = constraint_residuals(state, cfg, channels, integer_l=integer_l)
    scale = {"power_cap": cfg.p_max_w, "offload_range": float(cfg.compute.task_bits.max()),
             "edge_cpu_nonneg": cfg.compute.edge_total_cps,
             "edge_cpu_total": cfg.compute.edge_total_cps,
             "ris_power": cfg.amplification_budget() if cfg.ris_mode == "active" else 1.0}
    bad = {k: v for k, v in res.items() if v > tol * max(1.0, scale.get(k, 1.0))}
    if bad:
        raise ValueError(f"solution state violates constraints: {bad}")


@dataclass(eq=False)
class IterationTrace:
    """Per-iteration record of one solver run."""

    mcl: list[float] = field(default_factory=list)          # objective, s
    t_local: list[np.ndarray] = field(default_factory=list)  # (K,) per iteration
    t_edge: list[np.ndarray] = field(default_factory=list)
    eps: list[float] = field(default_factory=list)          # last subproblem epsilon
    ris_power: list[float] = field(default_factory=list)
    statuses: list[dict] = field(default_factory=list)      # per-block solve outcomes
    wall_time: list[float] = field(default_factory=list)
    converged: bool = False

    def append_row(self, mcl, t_local, t_edge, eps, ris_power, statuses, wall_time):
        self.mcl.append(float(mcl))
        self.t_local.append(np.asarray(t_local, dtype=float).copy())
        self.t_edge.append(np.asarray(t_edge, dtype=float).copy())
        self.eps.append(float(eps))
        self.ris_power.append(float(ris_power))
        self.statuses.append(dict(statuses))
        self.wall_time.append(float(wall_time))

    def __len__(self) -> int:
        return len(self.mcl)

    def check_monotone(self, rtol: float = 1e-9) -> None:
        m = np.asarray(self.mcl)
        if m.size < 2:
            return
        rise = np.diff(m) / m[:-1]
        worst = float(rise.max(initial=-np.inf))
        if worst > rtol:
            raise ValueError(f"objective increased by relative {worst:.3e}")

    def to_csv(self, path) -> None:
        k = self.t_local[0].shape[0] if self.t_local else 0
        header = (["iter", "mcl_s"]
                  + [f"T_L_{i + 1}" for i in range(k)]
                  + [f"T_E_{i + 1}" for i in range(k)]
                  + ["eps", "ris_power_W"])
        with open(path, "w", newline="") as fh:
            fh.write("# schema: arismec/trace/v1\n")
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(len(self.mcl)):
                row = ([i + 1, repr(self.mcl[i])]
                       + [repr(float(x)) for x in self.t_local[i]]
                       + [repr(float(x)) for x in self.t_edge[i]]
                       + [repr(self.eps[i]), repr(self.ris_power[i])])
                writer.writerow(row)
