from dataclasses import replace

import numpy as np
import pytest

from arismec import channel
from arismec.channel import (ChannelSet, build_geometry, channels_for,
                             dump_channels, load_channels, path_loss_linear,
                             synthesize_channels)
from arismec.config import ConfigError

from _support import make_config


def pinned_cfg(**overrides):
    base = dict(k=1, n=2, m=3, user_positions=np.array([[280.0, 10.0, 1.5]]))
    base.update(overrides)
    return make_config(**base)


def test_distance_hand_values():
    geom = build_geometry(pinned_cfg())
    assert geom.d_user_ap[0] == pytest.approx(np.sqrt(280.0 ** 2 + 10.0 ** 2
                                                      + 28.5 ** 2), rel=1e-12)
    assert geom.d_user_ap[0] == pytest.approx(281.62, abs=0.01)
    assert geom.d_user_ris[0] == pytest.approx(23.92, abs=0.01)
    assert geom.d_ris_ap == pytest.approx(np.linalg.norm([260.0, 0.0, -20.0]),
                                          rel=1e-12)


def test_random_placement_stays_in_square():
    cfg = make_config(k=50, n=1, m=1)
    geom = build_geometry(cfg)
    assert geom.users.shape == (50, 3)
    half = cfg.user_area_size / 2.0
    assert np.all(np.abs(geom.users[:, :2] - cfg.user_area_center) <= half)
    assert np.all(geom.users[:, 2] == cfg.user_height)
    # same seed places the same users
    np.testing.assert_array_equal(geom.users, build_geometry(cfg).users)


def test_path_loss_reference_points():
    assert path_loss_linear(1.0, 2.2) == pytest.approx(1e-3, rel=1e-12)
    assert path_loss_linear(1.0, 2.8) == pytest.approx(1e-3, rel=1e-12)
    assert 10.0 * np.log10(path_loss_linear(23.92, 2.2)) == pytest.approx(
        -60.33, abs=0.005)
    assert 10.0 * np.log10(path_loss_linear(281.62, 2.8)) == pytest.approx(
        -98.59, abs=0.005)


def test_path_loss_monotone():
    dists = np.logspace(0.01, 3.0, 60)
    gains = path_loss_linear(dists, 2.2)
    assert np.all(np.diff(gains) < 0.0)
    alphas = np.linspace(2.0, 4.0, 40)
    at_alpha = np.array([path_loss_linear(23.92, a) for a in alphas])
    assert np.all(np.diff(at_alpha) < 0.0)


def test_path_loss_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        path_loss_linear(0.0, 2.2)
    with pytest.raises(ValueError):
        path_loss_linear(np.array([1.0, -2.0]), 2.2)


def test_channels_deterministic_per_seed():
    cfg = make_config(k=2, n=3, m=4, seed=11)
    a = channels_for(cfg)
    b = channels_for(cfg)
    np.testing.assert_array_equal(a.H, b.H)
    np.testing.assert_array_equal(a.h, b.h)
    np.testing.assert_array_equal(a.g, b.g)
    c = channels_for(replace(cfg, rng_seed=12))
    assert not np.array_equal(a.H, c.H)


def test_channel_shapes():
    cfg = make_config(k=2, n=3, m=4)
    chans = channels_for(cfg)
    assert chans.H.shape == (3, 4)
    assert chans.h.shape == (4, 2)
    assert chans.g.shape == (3, 2)


def test_entry_power_matches_path_gain():
    # pool 50 antennas x 2000 draws = 1e5 samples of the direct link
    cfg = pinned_cfg(n=50, m=1)
    geom = build_geometry(cfg)
    rng = channel.substream(cfg, channel.STREAM_FADING)
    acc = 0.0
    draws = 2000
    for _ in range(draws):
        chans = synthesize_channels(geom, cfg, rng=rng)
        acc += float(np.sum(np.abs(chans.g) ** 2))
    mean_power = acc / (draws * cfg.num_antennas)
    gain = path_loss_linear(geom.d_user_ap[0], cfg.alpha_user_ap)
    assert mean_power == pytest.approx(gain, rel=0.02)


def test_gain_override_zero_gives_zero_channels():
    cfg = pinned_cfg()
    geom = build_geometry(cfg)
    chans = synthesize_channels(geom, cfg, gain_override={
        "ris_ap": 0.0, "user_ris": 0.0, "user_ap": 0.0})
    assert not np.any(chans.H) and not np.any(chans.h) and not np.any(chans.g)


def test_degenerate_geometry_rejected():
    cfg = make_config(k=1, n=1, m=1,
                      user_positions=np.array([[0.0, 0.0, 30.0]]))
    with pytest.raises(ConfigError):
        build_geometry(cfg)


def test_dump_load_round_trip(tmp_path):
    chans = channels_for(make_config(k=2, n=3, m=4))
    path = tmp_path / "chans.npz"
    dump_channels(path, chans)
    back = load_channels(path)
    np.testing.assert_array_equal(chans.H, back.H)
    np.testing.assert_array_equal(chans.h, back.h)
    np.testing.assert_array_equal(chans.g, back.g)
