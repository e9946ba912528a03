"""Shared builders and literal reference formulas for the tests.

The reference functions are deliberate per-user loops written straight
from the system model, independent of the vectorized library code they
check.
"""

from dataclasses import replace

import numpy as np

from arismec.config import ComputeProfile, default_config, validate_config

LN2 = float(np.log(2.0))


def make_config(k=2, n=2, m=2, seed=7, **overrides):
    """Valid scenario with k users, n antennas, m elements."""
    prof = ComputeProfile(
        task_bits=np.round(np.linspace(1.0e5, 2.0e5, k)),
        local_cps=np.linspace(3e8, 6e8, k),
        cycles_per_bit=np.round(np.linspace(600.0, 900.0, k)),
        edge_total_cps=2e9,
    )
    cfg = replace(default_config(), num_users=k, num_antennas=n, num_elements=m,
                  compute=prof, rng_seed=seed, **overrides)
    return validate_config(cfg)


def crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def rel_err(a, b, floor=1.0):
    """max |a - b| / max(|b|, floor), elementwise."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), floor)))


def ref_effective_channel(channels, theta, k):
    out = channels.g[:, k].astype(complex).copy()
    for mm in range(theta.shape[0]):
        out += channels.H[:, mm] * theta[mm] * channels.h[mm, k]
    return out


def _ref_amplified_noise_row(channels, theta, f):
    row = np.empty(theta.shape[0], dtype=complex)
    for mm in range(theta.shape[0]):
        row[mm] = np.vdot(f, channels.H[:, mm]) * theta[mm]
    return row


def ref_sinr(receivers, theta, p, channels, sigma2, delta2, k):
    f = receivers[:, k]
    sig = p[k] * abs(np.vdot(f, ref_effective_channel(channels, theta, k))) ** 2
    interf = 0.0
    for i in range(p.shape[0]):
        if i != k:
            interf += p[i] * abs(np.vdot(f, ref_effective_channel(channels, theta, i))) ** 2
    row = _ref_amplified_noise_row(channels, theta, f)
    noise = (sigma2 * float(np.sum(np.abs(row) ** 2))
             + delta2 * float(np.real(np.vdot(f, f))))
    return sig / (interf + noise)


def ref_mse(receivers, theta, p, channels, sigma2, delta2, k):
    f = receivers[:, k]
    total = 0.0
    for i in range(p.shape[0]):
        total += p[i] * abs(np.vdot(f, ref_effective_channel(channels, theta, i))) ** 2
    row = _ref_amplified_noise_row(channels, theta, f)
    total += (sigma2 * float(np.sum(np.abs(row) ** 2))
              + delta2 * float(np.real(np.vdot(f, f))))
    desired = np.real(np.vdot(f, ref_effective_channel(channels, theta, k)))
    return total - 2.0 * np.sqrt(p[k]) * desired + 1.0


def ref_surrogate_rate(v, d, bandwidth):
    return bandwidth * (np.log2(v) - v * d / LN2 + 1.0 / LN2)


def ref_ris_power(theta, p, channels, sigma2):
    total = sigma2 * float(np.sum(np.abs(theta) ** 2))
    for k in range(p.shape[0]):
        total += p[k] * float(np.sum(np.abs(theta * channels.h[:, k]) ** 2))
    return total


def ref_balanced_latency(rate, f_e, task_bits, cycles, local_cps):
    """Per-user latency at the latency-balancing continuous split."""
    if rate <= 0.0 or f_e <= 0.0:
        return task_bits * cycles / local_cps
    l = task_bits * cycles * rate * f_e / (
        local_cps * f_e + cycles * rate * (local_cps + f_e))
    t_local = (task_bits - l) * cycles / local_cps
    t_edge = l / rate + l * cycles / f_e
    return max(t_local, t_edge)
