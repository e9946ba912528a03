"""Scenario configuration: units, validation, and JSON round-trip.

All quantities are stored internally in SI units (watts, bits, Hz,
cycles/s, metres, seconds).  dBm and kilobit values that are natural in
the scenario description are converted once, at load time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np


class ConfigError(ValueError):
    """Invalid scenario configuration."""


class NonPositiveParameter(ConfigError):
    """A parameter that must be strictly positive is not."""


class NonPositiveBudget(ConfigError):
    """The derived RIS power budget is not positive."""


class DimensionMismatch(ConfigError):
    """Array lengths do not match the declared user count."""


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watts_to_dbm(x_w: float) -> float:
    if x_w <= 0.0:
        raise NonPositiveParameter(f"cannot express {x_w} W in dBm")
    return 10.0 * math.log10(x_w) + 30.0


@dataclass(eq=False)
class ComputeProfile:
    """Per-user task profile and the shared edge CPU budget."""

    task_bits: np.ndarray       # L_k, bits (positive integers)
    local_cps: np.ndarray       # f_L,k, cycles/s
    cycles_per_bit: np.ndarray  # c_k, cycles/bit
    edge_total_cps: float       # f_E^tot, cycles/s shared by all users

    def __post_init__(self):
        self.task_bits = np.asarray(self.task_bits, dtype=float)
        self.local_cps = np.asarray(self.local_cps, dtype=float)
        self.cycles_per_bit = np.asarray(self.cycles_per_bit, dtype=float)

    @property
    def num_users(self) -> int:
        return self.task_bits.shape[0]


@dataclass(eq=False)
class ScenarioConfig:
    """Full scenario description for one solver run."""

    # dimensions
    num_antennas: int = 4       # receive antennas at the AP
    num_elements: int = 16      # reflecting elements
    num_users: int = 3

    # radio
    bandwidth_hz: float = 1e6
    ris_noise_w: float = dbm_to_watts(-70.0)   # thermal noise injected at the surface
    ap_noise_w: float = dbm_to_watts(-80.0)
    p_max_w: float = 1e-3                      # per-user transmit power cap
    p_tot_w: float = 10e-3                     # total surface power supply
    amp_efficiency: float = 0.8                # xi, amplifier drain efficiency
    p_dc_w: float = dbm_to_watts(-5.0)         # DC bias per element
    p_c_w: float = dbm_to_watts(-10.0)         # control circuit per element
    p_aris_override_w: float | None = None     # explicit amplification budget (>= 0)
    ris_mode: str = "active"                   # "active" | "passive"

    # path-loss exponents
    alpha_user_ris: float = 2.2
    alpha_ris_ap: float = 2.2
    alpha_user_ap: float = 2.8

    # geometry (metres)
    ap_position: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 30.0]))
    ris_position: np.ndarray = field(default_factory=lambda: np.array([260.0, 0.0, 10.0]))
    user_area_center: np.ndarray = field(default_factory=lambda: np.array([280.0, 10.0]))
    user_area_size: float = 10.0
    user_height: float = 1.5
    user_positions: np.ndarray | None = None   # (K, 3) override; random placement if None

    # compute
    compute: ComputeProfile = field(default_factory=lambda: ComputeProfile(
        task_bits=np.array([250e3, 300e3, 350e3]),
        local_cps=np.array([4e8, 5e8, 6e8]),
        cycles_per_bit=np.array([700.0, 750.0, 800.0]),
        edge_total_cps=50e9,
    ))

    # tolerances and caps
    zeta: float = 1e-4          # outer loop relative-change stop
    sca_tol: float = 1e-5       # inner SCA relative-change stop
    kkt_tol: float = 1e-8       # subproblem solver certification tolerance
    n_max: int = 100            # outer iteration cap
    r_max: int = 30             # SCA iteration cap

    rng_seed: int = 1

    def __post_init__(self):
        self.ap_position = np.asarray(self.ap_position, dtype=float)
        self.ris_position = np.asarray(self.ris_position, dtype=float)
        self.user_area_center = np.asarray(self.user_area_center, dtype=float)
        if self.user_positions is not None:
            self.user_positions = np.asarray(self.user_positions, dtype=float)

    def amplification_budget(self) -> float:
        """Power available for reflection amplification (active mode)."""
        if self.p_aris_override_w is not None:
            return self.p_aris_override_w
        return self.amp_efficiency * (
            self.p_tot_w - self.num_elements * (self.p_dc_w + self.p_c_w))

    def passive_budget(self) -> float:
        """Leftover supply after powering a passive panel's circuits."""
        return self.p_tot_w - self.num_elements * self.p_c_w

    def effective_ris_noise(self) -> float:
        """Surface thermal noise; zero for an amplifier-less passive panel."""
        return self.ris_noise_w if self.ris_mode == "active" else 0.0

    def to_json(self) -> str:
        d = {
            "schema": "arismec/scenario/v1",
            "num_antennas": self.num_antennas,
            "num_elements": self.num_elements,
            "num_users": self.num_users,
            "bandwidth_hz": self.bandwidth_hz,
            "ris_noise_dbm": watts_to_dbm(self.ris_noise_w),
            "ap_noise_dbm": watts_to_dbm(self.ap_noise_w),
            "p_max_dbm": watts_to_dbm(self.p_max_w),
            "p_tot_dbm": watts_to_dbm(self.p_tot_w),
            "amp_efficiency": self.amp_efficiency,
            "p_dc_dbm": watts_to_dbm(self.p_dc_w),
            "p_c_dbm": watts_to_dbm(self.p_c_w),
            "p_aris_override_dbm": (None if self.p_aris_override_w is None
                                    else (watts_to_dbm(self.p_aris_override_w)
                                          if self.p_aris_override_w > 0 else "zero")),
            "ris_mode": self.ris_mode,
            "alpha_user_ris": self.alpha_user_ris,
            "alpha_ris_ap": self.alpha_ris_ap,
            "alpha_user_ap": self.alpha_user_ap,
            "ap_position": self.ap_position.tolist(),
            "ris_position": self.ris_position.tolist(),
            "user_area_center": self.user_area_center.tolist(),
            "user_area_size": self.user_area_size,
            "user_height": self.user_height,
            "user_positions": (None if self.user_positions is None
                               else self.user_positions.tolist()),
            "task_kbits": (self.compute.task_bits / 1e3).tolist(),
            "local_cps": self.compute.local_cps.tolist(),
            "cycles_per_bit": self.compute.cycles_per_bit.tolist(),
            "edge_total_cps": self.compute.edge_total_cps,
            "zeta": self.zeta,
            "sca_tol": self.sca_tol,
            "kkt_tol": self.kkt_tol,
            "n_max": self.n_max,
            "r_max": self.r_max,
            "rng_seed": self.rng_seed,
        }
        return json.dumps(d, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        d = json.loads(text)
        schema = d.pop("schema", "arismec/scenario/v1")
        if schema != "arismec/scenario/v1":
            raise ConfigError(f"unknown config schema {schema!r}")
        override = d.get("p_aris_override_dbm")
        if override is None:
            override_w = None
        elif override == "zero":
            override_w = 0.0
        else:
            override_w = dbm_to_watts(float(override))
        cfg = cls(
            num_antennas=int(d["num_antennas"]),
            num_elements=int(d["num_elements"]),
            num_users=int(d["num_users"]),
            bandwidth_hz=float(d["bandwidth_hz"]),
            ris_noise_w=dbm_to_watts(float(d["ris_noise_dbm"])),
            ap_noise_w=dbm_to_watts(float(d["ap_noise_dbm"])),
            p_max_w=dbm_to_watts(float(d["p_max_dbm"])),
            p_tot_w=dbm_to_watts(float(d["p_tot_dbm"])),
            amp_efficiency=float(d["amp_efficiency"]),
            p_dc_w=dbm_to_watts(float(d["p_dc_dbm"])),
            p_c_w=dbm_to_watts(float(d["p_c_dbm"])),
            p_aris_override_w=override_w,
            ris_mode=str(d.get("ris_mode", "active")),
            alpha_user_ris=float(d["alpha_user_ris"]),
            alpha_ris_ap=float(d["alpha_ris_ap"]),
            alpha_user_ap=float(d["alpha_user_ap"]),
            ap_position=np.array(d["ap_position"], dtype=float),
            ris_position=np.array(d["ris_position"], dtype=float),
            user_area_center=np.array(d["user_area_center"], dtype=float),
            user_area_size=float(d["user_area_size"]),
            user_height=float(d["user_height"]),
            user_positions=(None if d.get("user_positions") is None
                            else np.array(d["user_positions"], dtype=float)),
            compute=ComputeProfile(
                task_bits=np.array(d["task_kbits"], dtype=float) * 1e3,
                local_cps=np.array(d["local_cps"], dtype=float),
                cycles_per_bit=np.array(d["cycles_per_bit"], dtype=float),
                edge_total_cps=float(d["edge_total_cps"]),
            ),
            zeta=float(d["zeta"]),
            sca_tol=float(d["sca_tol"]),
            kkt_tol=float(d["kkt_tol"]),
            n_max=int(d["n_max"]),
            r_max=int(d["r_max"]),
            rng_seed=int(d["rng_seed"]),
        )
        return validate_config(cfg)


def default_config() -> ScenarioConfig:
    """Reference scenario: 3 users, 4 antennas, 16 elements."""
    return ScenarioConfig()


def _require_positive(name, value):
    if not np.all(np.asarray(value) > 0.0) or not np.all(np.isfinite(value)):
        raise NonPositiveParameter(f"{name} must be strictly positive, got {value}")


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """Check every structural constraint; returns the config unchanged."""
    for name in ("num_antennas", "num_elements", "num_users"):
        if getattr(cfg, name) < 1:
            raise NonPositiveParameter(f"{name} must be >= 1")
    _require_positive("bandwidth_hz", cfg.bandwidth_hz)
    _require_positive("ris_noise_w", cfg.ris_noise_w)
    _require_positive("ap_noise_w", cfg.ap_noise_w)
    _require_positive("p_max_w", cfg.p_max_w)
    _require_positive("p_tot_w", cfg.p_tot_w)
    _require_positive("p_dc_w", cfg.p_dc_w)
    _require_positive("p_c_w", cfg.p_c_w)
    if not 0.0 < cfg.amp_efficiency <= 1.0:
        raise NonPositiveParameter(
            f"amp_efficiency must lie in (0, 1], got {cfg.amp_efficiency}")
    for name in ("alpha_user_ris", "alpha_ris_ap", "alpha_user_ap"):
        _require_positive(name, getattr(cfg, name))
    # zero disables the relative-change stop; the iteration caps then rule
    for name in ("zeta", "sca_tol"):
        value = getattr(cfg, name)
        if not (np.isfinite(value) and value >= 0.0):
            raise NonPositiveParameter(f"{name} must be >= 0, got {value}")
    _require_positive("kkt_tol", cfg.kkt_tol)
    if cfg.n_max < 1 or cfg.r_max < 1:
        raise NonPositiveParameter("iteration caps must be >= 1")

    if cfg.ris_mode not in ("active", "passive"):
        raise ConfigError(f"ris_mode must be 'active' or 'passive', got {cfg.ris_mode!r}")
    if cfg.ris_mode == "active":
        if cfg.p_aris_override_w is not None:
            if cfg.p_aris_override_w < 0.0:
                raise NonPositiveBudget("explicit amplification budget must be >= 0")
        elif cfg.amplification_budget() <= 0.0:
            raise NonPositiveBudget(
                f"amplification budget {cfg.amplification_budget():.3e} W <= 0; "
                f"too many elements for the supply")
    else:
        if cfg.passive_budget() < 0.0:
            raise NonPositiveBudget(
                f"passive panel needs {cfg.num_elements * cfg.p_c_w:.3e} W "
                f"but the supply is {cfg.p_tot_w:.3e} W")

    if np.linalg.norm(cfg.ap_position - cfg.ris_position) <= 0.0:
        raise ConfigError("AP and RIS positions coincide")
    if cfg.user_positions is not None:
        if cfg.user_positions.shape != (cfg.num_users, 3):
            raise DimensionMismatch(
                f"user_positions shape {cfg.user_positions.shape} != ({cfg.num_users}, 3)")
    _require_positive("user_area_size", cfg.user_area_size)

    prof = cfg.compute
    for name in ("task_bits", "local_cps", "cycles_per_bit"):
        _require_positive(f"compute.{name}", getattr(prof, name))
        if getattr(prof, name).shape != (cfg.num_users,):
            raise DimensionMismatch(
                f"compute.{name} has shape {getattr(prof, name).shape}, expected ({cfg.num_users},)")
    _require_positive("compute.edge_total_cps", prof.edge_total_cps)
    if not np.all(prof.task_bits == np.round(prof.task_bits)):
        raise ConfigError("task_bits must be whole numbers of bits")
    return cfg


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(cfg, rng_seed=int(seed))
