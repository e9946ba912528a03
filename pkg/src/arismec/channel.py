"""Geometry, path loss, and Rayleigh channel synthesis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig, ConfigError


def substream(cfg: ScenarioConfig, stream: int) -> np.random.Generator:
    """Independent deterministic RNG stream derived from the scenario seed."""
    return np.random.default_rng(np.random.SeedSequence(cfg.rng_seed, spawn_key=(stream,)))


# substream indices: 0 user placement, 1 fading, 2 solver initialisation
STREAM_GEOMETRY, STREAM_FADING, STREAM_INIT = 0, 1, 2


@dataclass(eq=False)
class Geometry:
    ap: np.ndarray             # (3,)
    ris: np.ndarray            # (3,)
    users: np.ndarray          # (K, 3)
    d_user_ris: np.ndarray     # (K,)
    d_user_ap: np.ndarray      # (K,)
    d_ris_ap: float


def build_geometry(cfg: ScenarioConfig, rng: np.random.Generator | None = None) -> Geometry:
    """Place users (uniform square unless overridden) and compute link distances."""
    if cfg.user_positions is not None:
        users = np.array(cfg.user_positions, dtype=float)
    else:
        rng = rng if rng is not None else substream(cfg, STREAM_GEOMETRY)
        half = cfg.user_area_size / 2.0
        xy = cfg.user_area_center + rng.uniform(-half, half, size=(cfg.num_users, 2))
        users = np.column_stack([xy, np.full(cfg.num_users, cfg.user_height)])
    d_user_ris = np.linalg.norm(users - cfg.ris_position, axis=1)
    d_user_ap = np.linalg.norm(users - cfg.ap_position, axis=1)
    d_ris_ap = float(np.linalg.norm(cfg.ris_position - cfg.ap_position))
    for name, d in (("user-RIS", d_user_ris), ("user-AP", d_user_ap),
                    ("RIS-AP", np.atleast_1d(d_ris_ap))):
        if np.any(np.asarray(d) <= 0.0):
            raise ConfigError(f"degenerate geometry: zero {name} distance")
    return Geometry(cfg.ap_position.copy(), cfg.ris_position.copy(), users,
                    d_user_ris, d_user_ap, d_ris_ap)


def path_loss_linear(distance, alpha: float):
    """Linear power gain 10^((-10 alpha log10 d - 30)/10) = 1e-3 d^-alpha."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("path loss undefined for non-positive distance")
    out = 1e-3 * d ** (-alpha)
    return float(out) if np.isscalar(distance) else out


@dataclass(eq=False)
class ChannelSet:
    """Sampled links: surface-to-AP H (N x M), user-to-surface h (M x K), direct g (N x K)."""

    H: np.ndarray
    h: np.ndarray
    g: np.ndarray


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def synthesize_channels(geom: Geometry, cfg: ScenarioConfig,
                        rng: np.random.Generator | None = None,
                        gain_override: dict | None = None) -> ChannelSet:
    """i.i.d. Rayleigh fading scaled by the square root of each link's path gain.

    gain_override maps any of {"ris_ap", "user_ris", "user_ap"} to a fixed
    linear gain used instead of the geometric one (regression hooks).
    """
    rng = rng if rng is not None else substream(cfg, STREAM_FADING)
    over = gain_override or {}
    n, m, k = cfg.num_antennas, cfg.num_elements, cfg.num_users
    g_ra = float(over.get("ris_ap", path_loss_linear(geom.d_ris_ap, cfg.alpha_ris_ap)))
    g_ur = np.broadcast_to(np.asarray(
        over.get("user_ris", path_loss_linear(geom.d_user_ris, cfg.alpha_user_ris)),
        dtype=float), (k,))
    g_ua = np.broadcast_to(np.asarray(
        over.get("user_ap", path_loss_linear(geom.d_user_ap, cfg.alpha_user_ap)),
        dtype=float), (k,))
    H = np.sqrt(g_ra) * _cn(rng, (n, m))
    h = np.sqrt(g_ur)[None, :] * _cn(rng, (m, k))
    g = np.sqrt(g_ua)[None, :] * _cn(rng, (n, k))
    return ChannelSet(H, h, g)


def channels_for(cfg: ScenarioConfig) -> ChannelSet:
    """Geometry plus fading in one call, fully determined by cfg.rng_seed."""
    return synthesize_channels(build_geometry(cfg), cfg)


def dump_channels(path, channels: ChannelSet) -> None:
    np.savez(path, H=channels.H, h=channels.h, g=channels.g)


def load_channels(path) -> ChannelSet:
    data = np.load(path)
    return ChannelSet(data["H"], data["h"], data["g"])
