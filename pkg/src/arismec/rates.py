"""Uplink SINR/rate algebra and its MMSE surrogate.

The surrogate expresses each user's rate through an auxiliary weight v_k
and the receive MSE d_k; both the reflection vector and the transmit
powers then enter d_k as convex quadratics, which is what the subproblem
solvers consume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .state import QuadraticForm

LN2 = float(np.log(2.0))


def effective_channel(channels: ChannelSet, theta: np.ndarray) -> np.ndarray:
    """Per-user composite uplink channel H Theta h_k + g_k, shape (N, K)."""
    return channels.H @ (theta[:, None] * channels.h) + channels.g


def _cross_gains(receivers: np.ndarray, channels: ChannelSet, theta: np.ndarray):
    """|f_k^H e_i|^2 matrix, f_k^H H Theta rows, and receiver norms."""
    e = effective_channel(channels, theta)
    fe = receivers.conj().T @ e                          # (K, K): [k, i] = f_k^H e_i
    fht = receivers.conj().T @ (channels.H * theta[None, :])  # (K, M) rows f_k^H H Theta
    fnorm2 = np.sum(np.abs(receivers) ** 2, axis=0)
    return fe, np.abs(fe) ** 2, np.sum(np.abs(fht) ** 2, axis=1), fnorm2


def sinr_and_rate(receivers, theta, p, channels, sigma2, delta2, bandwidth):
    """True SINR gamma_k and rate B log2(1 + gamma_k) for every user."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0.0):
        raise ValueError("negative transmit power")
    _, x2, amp_noise, fnorm2 = _cross_gains(receivers, channels, theta)
    if np.any(fnorm2 == 0.0):
        raise ValueError("zero receive filter: SINR undefined")
    k = p.shape[0]
    signal = p * np.diagonal(x2)
    interf = x2 @ p - signal
    denom = interf + sigma2 * amp_noise + delta2 * fnorm2
    gamma = signal / denom
    rate = bandwidth * np.log2(1.0 + gamma)
    return gamma, rate


def mse(receivers, theta, p, channels, sigma2, delta2):
    """Receive MSE d_k for unit-variance symbols scaled by sqrt(p_k)."""
    p = np.asarray(p, dtype=float)
    fe, x2, amp_noise, fnorm2 = _cross_gains(receivers, channels, theta)
    total = x2 @ p + sigma2 * amp_noise + delta2 * fnorm2
    return total - 2.0 * np.sqrt(p) * np.real(np.diagonal(fe)) + 1.0


def mmse_receivers(theta, p, channels, sigma2, delta2):
    """Per-user MMSE receive filters (closed form).

    For p_k = 0 the MMSE filter is the zero vector, which would make the
    SINR expression undefined; the unscaled whitened-channel direction is
    used instead (any nonzero scaling of f_k leaves gamma_k unchanged).
    """
    p = np.asarray(p, dtype=float)
    e = effective_channel(channels, theta)
    ht = channels.H * theta[None, :]
    n = channels.H.shape[0]
    cov = ((e * p[None, :]) @ e.conj().T
           + sigma2 * (ht @ ht.conj().T)
           + delta2 * np.eye(n))
    directions = np.linalg.solve(cov, e)
    scale = np.sqrt(p)
    scale = np.where(scale > 0.0, scale, 1.0)
    return directions * scale[None, :]


def mmse_rate(v, d, bandwidth):
    """Surrogate rate B (log2 v - v d / ln2 + 1 / ln2); tight at v = 1/d."""
    v = np.asarray(v, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(v <= 0.0):
        raise ValueError("auxiliary weight must be positive")
    return bandwidth * (np.log2(v) - v * d / LN2 + 1.0 / LN2)


@dataclass(eq=False)
class ThetaQuadratics:
    """Reflection-vector quadratics at fixed receivers, powers, and weights.

    For each user, d_k(theta) = theta^H B_k theta + 2 Re{w_k^T theta} + const_a_k
    and the weighted surrogate rate is
    rate_const_k - theta^H rate_quad_k theta - 2 Re{rate_lin_k^H theta}.
    The amplification power spent by the surface is theta^H diag(power_diag) theta.
    """

    A: np.ndarray                 # (M, M) sum_i p_i h_i h_i^H
    B_mse: list                   # K items, (M, M)
    w_mse: np.ndarray             # (M, K) diagonals of the per-user cross-coupling matrices
    const_a: np.ndarray           # (K,)
    rate_quad: list               # K items, (M, M)
    rate_lin: np.ndarray          # (M, K)
    rate_const: np.ndarray        # (K,)
    power_diag: np.ndarray        # (M,) real

    def mse_value(self, theta) -> np.ndarray:
        vals = np.empty(len(self.B_mse))
        for k, bk in enumerate(self.B_mse):
            vals[k] = (np.real(np.vdot(theta, bk @ theta))
                       + 2.0 * np.real(self.w_mse[:, k] @ theta) + self.const_a[k])
        return vals

    def rate_value(self, theta) -> np.ndarray:
        vals = np.empty(len(self.rate_quad))
        for k, qk in enumerate(self.rate_quad):
            vals[k] = self.rate_const[k] - (np.real(np.vdot(theta, qk @ theta))
                                            + 2.0 * np.real(np.vdot(self.rate_lin[:, k], theta)))
        return vals

    def power_value(self, theta) -> float:
        return float(self.power_diag @ (np.abs(theta) ** 2))

    def mse_form(self, k: int) -> QuadraticForm:
        return QuadraticForm(self.B_mse[k], self.w_mse[:, k].conj(), float(self.const_a[k]))

    def power_form(self) -> QuadraticForm:
        m = self.power_diag.shape[0]
        return QuadraticForm(np.diag(self.power_diag).astype(complex), np.zeros(m, complex), 0.0)


def build_theta_quadratics(receivers, p, channels, v, sigma2, delta2, bandwidth) -> ThetaQuadratics:
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    m, k = channels.h.shape
    A = (channels.h * p[None, :]) @ channels.h.conj().T
    rmat = receivers.conj().T @ channels.H               # (K, M) rows f_k^H H
    gmat = receivers.conj().T @ channels.g               # (K, K): [k, i] = f_k^H g_i
    fnorm2 = np.sum(np.abs(receivers) ** 2, axis=0)
    at_t = (A + sigma2 * np.eye(m)).T
    sqrt_p = np.sqrt(p)

    b_list, w = [], np.empty((m, k), dtype=complex)
    const_a = np.empty(k)
    for kk in range(k):
        r = rmat[kk]
        b_list.append(np.outer(r.conj(), r) * at_t)
        cross = channels.h @ (p * gmat[kk].conj())       # sum_i p_i h_i (g_i^H f_k)
        w[:, kk] = (cross - sqrt_p[kk] * channels.h[:, kk]) * r
        const_a[kk] = (float(p @ (np.abs(gmat[kk]) ** 2)) + delta2 * fnorm2[kk]
                       - 2.0 * sqrt_p[kk] * float(np.real(gmat[kk, kk])) + 1.0)

    s = v * bandwidth / LN2
    rate_quad = [s[kk] * b_list[kk] for kk in range(k)]
    rate_lin = w.conj() * s[None, :]
    rate_const = bandwidth * (np.log2(v) + 1.0 / LN2) - s * const_a
    power_diag = np.real(np.diagonal(A)) + sigma2
    return ThetaQuadratics(A, b_list, w, const_a, rate_quad, rate_lin, rate_const, power_diag)


@dataclass(eq=False)
class PowerQuadratics:
    """sqrt-power quadratics at fixed reflection, receivers, and weights.

    With q being the vector of sqrt transmit powers,
    d_k(q) = sum_i q_i^2 gain[k, i] - 2 q_k Re{j[k]} + m_const[k], and the
    weighted surrogate rate is
    rate_const_k - sum_i q_i^2 rate_gain[k, i] + 2 q_k Re{rate_j[k]}.
    Surface power is sum_k q_k^2 elem_gain[k] + power_offset.
    """

    gain: np.ndarray         # (K, K) |f_k^H e_i|^2, diagonal selection built in
    j: np.ndarray            # (K,) f_k^H e_k
    m_const: np.ndarray      # (K,)
    rate_gain: np.ndarray    # (K, K)
    rate_j: np.ndarray       # (K,)
    rate_const: np.ndarray   # (K,)
    elem_gain: np.ndarray    # (K,) ||Theta h_k||^2
    power_offset: float      # sigma^2 ||Theta||^2

    def mse_value(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return self.gain @ (q ** 2) - 2.0 * q * np.real(self.j) + self.m_const

    def rate_value(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return self.rate_const - self.rate_gain @ (q ** 2) + 2.0 * q * np.real(self.rate_j)

    def power_value(self, q) -> float:
        q = np.asarray(q, dtype=float)
        return float(self.elem_gain @ (q ** 2)) + self.power_offset


def build_power_quadratics(receivers, theta, channels, v, sigma2, delta2, bandwidth) -> PowerQuadratics:
    v = np.asarray(v, dtype=float)
    fe, x2, amp_noise, fnorm2 = _cross_gains(receivers, channels, theta)
    m_const = sigma2 * amp_noise + delta2 * fnorm2 + 1.0
    jvec = np.diagonal(fe).copy()
    s = v * bandwidth / LN2
    elem_gain = np.sum(np.abs(theta[:, None] * channels.h) ** 2, axis=0)
    return PowerQuadratics(
        gain=x2, j=jvec, m_const=m_const,
        rate_gain=x2 * s[:, None], rate_j=jvec * s,
        rate_const=bandwidth * (np.log2(v) + 1.0 / LN2) - s * m_const,
        elem_gain=elem_gain,
        power_offset=float(sigma2 * np.sum(np.abs(theta) ** 2)),
    )
