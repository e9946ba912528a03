import numpy as np
import pytest

from arismec import rates
from arismec.channel import ChannelSet, channels_for

from _support import (crandn, make_config, rel_err, ref_mse, ref_ris_power,
                      ref_sinr, ref_surrogate_rate, ref_effective_channel)


def draw(cfg, chans, rng, perturb_receivers=0.3):
    """Random design point with solver-like reflection amplitudes."""
    k, m = cfg.num_users, cfg.num_elements
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    p = rng.uniform(0.05, 1.0, k) * cfg.p_max_w
    denom = float(p @ np.sum(np.abs(chans.h) ** 2, axis=0)) + m * sigma2
    lam = np.sqrt(rng.uniform(0.1, 0.9) * cfg.amplification_budget() / denom)
    theta = lam * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, m))
    receivers = rates.mmse_receivers(theta, p, chans, sigma2, delta2)
    if perturb_receivers:
        scale = np.mean(np.abs(receivers), axis=0)[None, :]
        receivers = receivers + perturb_receivers * scale * crandn(rng, receivers.shape)
    return theta, receivers, p


def test_effective_channel_zero_theta_is_direct():
    cfg = make_config(k=2, n=3, m=4)
    chans = channels_for(cfg)
    eff = rates.effective_channel(chans, np.zeros(4, dtype=complex))
    np.testing.assert_array_equal(eff, chans.g)


def test_effective_channel_scalar_hand_value():
    chans = ChannelSet(H=np.array([[2.0 + 0j]]), h=np.array([[3.0 + 0j]]),
                       g=np.array([[1.0 + 0j]]))
    eff = rates.effective_channel(chans, np.array([1j]))
    assert eff[0, 0] == pytest.approx(1.0 + 6.0j, rel=1e-15)


def test_effective_channel_single_element():
    rng = np.random.default_rng(3)
    chans = ChannelSet(H=crandn(rng, (3, 4)), h=crandn(rng, (4, 2)),
                       g=crandn(rng, (3, 2)))
    z = 0.7 - 0.2j
    theta = np.array([0.0, z, 0.0, 0.0], dtype=complex)
    eff = rates.effective_channel(chans, theta)
    for k in range(2):
        expect = chans.g[:, k] + z * chans.h[1, k] * chans.H[:, 1]
        np.testing.assert_allclose(eff[:, k], expect, rtol=1e-14)
        np.testing.assert_allclose(eff[:, k], ref_effective_channel(chans, theta, k),
                                   rtol=1e-14)


def test_sinr_single_user_direct_link():
    rng = np.random.default_rng(4)
    chans = ChannelSet(H=crandn(rng, (1, 3)), h=crandn(rng, (3, 1)),
                       g=crandn(rng, (1, 1)))
    p = np.array([0.7e-3])
    delta2 = 1e-10
    f = np.array([[0.3 - 0.8j]])
    gamma, rate = rates.sinr_and_rate(f, np.zeros(3, complex), p, chans,
                                      1e-10, delta2, 1e6)
    expect = p[0] * abs(chans.g[0, 0]) ** 2 / delta2
    assert gamma[0] == pytest.approx(expect, rel=1e-12)
    assert rate[0] == pytest.approx(1e6 * np.log2(1.0 + expect), rel=1e-12)


def test_zero_power_zero_rate():
    cfg = make_config(k=2, n=2, m=3)
    chans = channels_for(cfg)
    rng = np.random.default_rng(5)
    theta, receivers, _ = draw(cfg, chans, rng)
    gamma, rate = rates.sinr_and_rate(receivers, theta, np.zeros(2), chans,
                                      cfg.effective_ris_noise(), cfg.ap_noise_w,
                                      cfg.bandwidth_hz)
    np.testing.assert_array_equal(gamma, 0.0)
    np.testing.assert_array_equal(rate, 0.0)


def test_negative_power_rejected():
    cfg = make_config(k=2, n=2, m=3)
    chans = channels_for(cfg)
    rng = np.random.default_rng(6)
    theta, receivers, p = draw(cfg, chans, rng)
    with pytest.raises(ValueError):
        rates.sinr_and_rate(receivers, theta, np.array([1e-3, -1e-9]), chans,
                            1e-10, 1e-11, 1e6)


def test_zero_receiver_sinr_rejected_mse_defined():
    cfg = make_config(k=2, n=2, m=3)
    chans = channels_for(cfg)
    rng = np.random.default_rng(7)
    theta, receivers, p = draw(cfg, chans, rng)
    receivers = receivers.copy()
    receivers[:, 0] = 0.0
    with pytest.raises(ValueError):
        rates.sinr_and_rate(receivers, theta, p, chans, 1e-10, 1e-11, 1e6)
    d = rates.mse(receivers, theta, p, chans, 1e-10, 1e-11)
    assert d[0] == 1.0
    assert d[1] > 0.0


def test_sinr_and_mse_match_literal_oracle():
    cfg = make_config(k=2, n=2, m=2)
    chans = channels_for(cfg)
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    rng = np.random.default_rng(8)
    for _ in range(20):
        theta, receivers, p = draw(cfg, chans, rng)
        gamma, rate = rates.sinr_and_rate(receivers, theta, p, chans, sigma2,
                                          delta2, cfg.bandwidth_hz)
        d = rates.mse(receivers, theta, p, chans, sigma2, delta2)
        for k in range(2):
            g_ref = ref_sinr(receivers, theta, p, chans, sigma2, delta2, k)
            assert gamma[k] == pytest.approx(g_ref, rel=1e-11)
            assert rate[k] == pytest.approx(
                cfg.bandwidth_hz * np.log2(1.0 + g_ref), rel=1e-11)
            assert d[k] == pytest.approx(
                ref_mse(receivers, theta, p, chans, sigma2, delta2, k), rel=1e-11)


def test_sinr_invariant_to_receiver_scaling():
    cfg = make_config(k=3, n=3, m=4)
    chans = channels_for(cfg)
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    rng = np.random.default_rng(9)
    theta, receivers, p = draw(cfg, chans, rng)
    gamma, _ = rates.sinr_and_rate(receivers, theta, p, chans, sigma2, delta2, 1e6)
    scales = crandn(rng, 3) + 2.0
    gamma2, _ = rates.sinr_and_rate(receivers * scales[None, :], theta, p, chans,
                                    sigma2, delta2, 1e6)
    np.testing.assert_allclose(gamma2, gamma, rtol=1e-10)


def test_mmse_receiver_identity_and_optimality():
    cfg = make_config(k=2, n=3, m=4)
    chans = channels_for(cfg)
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    rng = np.random.default_rng(10)
    theta, _, p = draw(cfg, chans, rng)
    f = rates.mmse_receivers(theta, p, chans, sigma2, delta2)
    gamma, _ = rates.sinr_and_rate(f, theta, p, chans, sigma2, delta2, 1e6)
    d = rates.mse(f, theta, p, chans, sigma2, delta2)
    np.testing.assert_allclose(d, 1.0 / (1.0 + gamma), rtol=1e-8)
    # no small receiver perturbation improves the MSE
    for _ in range(30):
        bump = 1e-3 * np.mean(np.abs(f), axis=0)[None, :] * crandn(rng, f.shape)
        d_pert = rates.mse(f + bump, theta, p, chans, sigma2, delta2)
        assert np.all(d_pert >= d * (1.0 - 1e-10))


def test_mmse_receivers_zero_power_direction():
    cfg = make_config(k=2, n=3, m=4)
    chans = channels_for(cfg)
    rng = np.random.default_rng(11)
    theta, _, p = draw(cfg, chans, rng)
    p = p.copy()
    p[0] = 0.0
    f = rates.mmse_receivers(theta, p, chans, cfg.effective_ris_noise(),
                             cfg.ap_noise_w)
    assert np.all(np.sum(np.abs(f) ** 2, axis=0) > 0.0)


def test_surrogate_rate_values():
    assert rates.mmse_rate(1.0, 1.0, 1e6) == pytest.approx(0.0, abs=1e-9)
    for d in (0.05, 0.37, 0.9):
        expect = -1e6 * np.log2(d)
        assert rates.mmse_rate(1.0 / d, d, 1e6) == pytest.approx(expect, rel=1e-12)
    with pytest.raises(ValueError):
        rates.mmse_rate(0.0, 0.5, 1e6)
    with pytest.raises(ValueError):
        rates.mmse_rate(np.array([1.0, -2.0]), np.array([0.5, 0.5]), 1e6)


def test_surrogate_rate_maximized_at_inverse_mse():
    d = 0.37
    best = rates.mmse_rate(1.0 / d, d, 1e6)
    grid = np.linspace(0.05, 40.0, 4001)
    vals = rates.mmse_rate(grid, d, 1e6)
    assert best >= np.max(vals) - 1e-6
    assert best == pytest.approx(-1e6 * np.log2(d), rel=1e-12)


def test_rate_equals_surrogate_at_tight_point():
    # true rate and the weighted-MSE surrogate coincide at the MMSE
    # receivers with weights set to the inverse MSE
    shapes = [(2, 2, 2), (3, 4, 8), (1, 1, 1), (2, 3, 5), (4, 4, 16)]
    checked = 0
    for k, n, m in shapes:
        cfg = make_config(k=k, n=n, m=m)
        for seed in range(10):
            chans = channels_for(make_config(k=k, n=n, m=m, seed=100 + seed))
            rng = np.random.default_rng(200 + seed)
            theta, _, p = draw(cfg, chans, rng)
            sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
            f = rates.mmse_receivers(theta, p, chans, sigma2, delta2)
            d = rates.mse(f, theta, p, chans, sigma2, delta2)
            _, true_rate = rates.sinr_and_rate(f, theta, p, chans, sigma2, delta2,
                                               cfg.bandwidth_hz)
            tight = rates.mmse_rate(1.0 / d, d, cfg.bandwidth_hz)
            assert rel_err(tight, true_rate) < 1e-8
            checked += 1
    assert checked == 50


def _theta_instance(seed):
    cfg = make_config(k=2, n=2, m=3, seed=seed)
    chans = channels_for(cfg)
    rng = np.random.default_rng(300 + seed)
    theta0, receivers, p = draw(cfg, chans, rng)
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    v = 1.0 / rates.mse(receivers, theta0, p, chans, sigma2, delta2)
    return cfg, chans, rng, theta0, receivers, p, v


def test_theta_quadratics_match_literal():
    cfg, chans, rng, theta0, receivers, p, v = _theta_instance(1)
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    quads = rates.build_theta_quadratics(receivers, p, chans, v, sigma2, delta2,
                                         cfg.bandwidth_hz)
    for _ in range(100):
        theta = theta0 * rng.uniform(0.2, 1.5) * np.exp(
            1j * rng.uniform(0.0, 2.0 * np.pi, theta0.shape[0]))
        d_lit = np.array([ref_mse(receivers, theta, p, chans, sigma2, delta2, k)
                          for k in range(2)])
        assert rel_err(quads.mse_value(theta), d_lit) < 1e-9
        assert rel_err(quads.rate_value(theta),
                       ref_surrogate_rate(v, d_lit, cfg.bandwidth_hz)) < 1e-9
        assert rel_err(quads.power_value(theta),
                       ref_ris_power(theta, p, chans, sigma2),
                       floor=1e-300) < 1e-12


def test_theta_quadratics_forms_hermitian_psd():
    cfg, chans, _, theta0, receivers, p, v = _theta_instance(2)
    quads = rates.build_theta_quadratics(receivers, p, chans, v,
                                         cfg.effective_ris_noise(),
                                         cfg.ap_noise_w, cfg.bandwidth_hz)
    for k in range(2):
        quads.mse_form(k).validate()
    quads.power_form().validate()
    assert np.all(quads.power_diag > 0.0)


def test_power_quadratics_match_literal():
    cfg, chans, rng, theta0, receivers, p, v = _theta_instance(3)
    sigma2, delta2 = cfg.effective_ris_noise(), cfg.ap_noise_w
    pq = rates.build_power_quadratics(receivers, theta0, chans, v, sigma2,
                                      delta2, cfg.bandwidth_hz)
    cap = np.sqrt(cfg.p_max_w)
    for _ in range(100):
        q = rng.uniform(0.0, 1.0, 2) * cap
        d_lit = np.array([ref_mse(receivers, theta0, q ** 2, chans, sigma2,
                                  delta2, k) for k in range(2)])
        assert rel_err(pq.mse_value(q), d_lit) < 1e-9
        assert rel_err(pq.rate_value(q),
                       ref_surrogate_rate(v, d_lit, cfg.bandwidth_hz)) < 1e-9
        assert rel_err(pq.power_value(q),
                       ref_ris_power(theta0, q ** 2, chans, sigma2),
                       floor=1e-300) < 1e-12
    # constant term: zero power means the rate collapses to the constant
    d0 = np.array([ref_mse(receivers, theta0, np.zeros(2), chans, sigma2,
                           delta2, k) for k in range(2)])
    assert rel_err(pq.rate_value(np.zeros(2)),
                   ref_surrogate_rate(v, d0, cfg.bandwidth_hz)) < 1e-9
    assert np.all(pq.gain >= 0.0)
    assert np.all(pq.elem_gain >= 0.0)
