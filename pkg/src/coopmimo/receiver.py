"""QPSK mapping, Wiener filter synthesis and MMSE cost evaluation.

The linear MMSE receiver for ``r = H_eff s + noise`` is ``W = R^{-1} P`` with
``R = E[r r^H]`` and ``P = E[r s^H]``; its residual error is
``sigma_s^2 - trace(P^H R^{-1} P)``.  Both selection problems rank candidates
by that residual, evaluated from channel estimates alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SystemConfig, replication_matrix

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def qpsk_map(bits) -> np.ndarray:
    """Gray-map bit pairs (b1, b0) onto ((1-2*b1) + 1j*(1-2*b0))/sqrt(2)."""
    b = np.asarray(bits).reshape(-1)
    if b.size % 2:
        raise ValueError(f"bit count {b.size} is odd, QPSK needs pairs")
    b = b.reshape(-1, 2)
    return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) * _INV_SQRT2


def qpsk_slice(soft) -> np.ndarray:
    """Independent sign decisions on real and imaginary parts (ties go positive)."""
    z = np.asarray(soft)
    re = np.where(z.real >= 0, 1.0, -1.0)
    im = np.where(z.imag >= 0, 1.0, -1.0)
    return (re + 1j * im) * _INV_SQRT2


def qpsk_unmap(symbols) -> np.ndarray:
    """Recover the bit pairs of constellation points (inverse of qpsk_map)."""
    z = np.asarray(symbols).reshape(-1)
    bits = np.empty((z.size, 2), dtype=int)
    bits[:, 0] = z.real < 0
    bits[:, 1] = z.imag < 0
    return bits.reshape(-1)


@dataclass
class SecondOrderStats:
    """Receive autocorrelation R, cross-correlation P and signal power."""

    r_auto: np.ndarray
    p_cross: np.ndarray
    sigma_s2: float


def wiener(stats: SecondOrderStats) -> np.ndarray:
    """Wiener filter W = R^{-1} P via a linear solve (no explicit inverse)."""
    try:
        return np.linalg.solve(stats.r_auto, stats.p_cross)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "autocorrelation matrix is singular: zero noise with a "
            "rank-deficient signal space"
        ) from exc


def mmse_cost(stats: SecondOrderStats) -> float:
    """Residual MSE of the Wiener receiver, sigma_s^2 - trace(P^H R^{-1} P)."""
    w = wiener(stats)
    return float(stats.sigma_s2 - np.real(np.einsum("ij,ij->", stats.p_cross.conj(), w)))


def source_power_scale(config: SystemConfig) -> float:
    """Per-antenna source amplitude: unit total transmit power over n_as streams."""
    return 1.0 / np.sqrt(config.n_as)


def relay_power_scale(n_active: int) -> float:
    """Per-antenna relay amplitude: unit total power over the active antennas."""
    return 0.0 if n_active == 0 else 1.0 / np.sqrt(n_active)


def stats_relay(config: SystemConfig, h_hat: np.ndarray, noise_var: float) -> SecondOrderStats:
    """Second-order statistics of a single first-phase link ``y = A_s H s + n``."""
    a_s = source_power_scale(config)
    h = a_s * h_hat
    r = h @ h.conj().T + noise_var * np.eye(h.shape[0])
    return SecondOrderStats(r_auto=r, p_cross=h, sigma_s2=float(config.n_as))


def effective_channel(
    config: SystemConfig,
    h_sd_hat: np.ndarray,
    h_rd_hat: np.ndarray,
    active: tuple[int, ...],
    g: np.ndarray | None = None,
) -> np.ndarray:
    """Stacked destination channel for one set of active relay antennas.

    Rows: the n_ad first-phase antennas followed by the n_ad second-phase
    antennas.  The relay block is A_r * H_rd * T * G, i.e. the active columns
    of the relay-destination matrix recombined per stream, assuming the relays
    forward exact stream copies.
    """
    if g is None:
        g = replication_matrix(config)
    a_s = source_power_scale(config)
    a_r = relay_power_scale(len(active))
    idx = list(active)
    relay_block = a_r * (h_rd_hat[:, idx] @ g[idx, :])
    return np.vstack([a_s * h_sd_hat, relay_block])


def stats_destination(
    config: SystemConfig,
    h_sd_hat: np.ndarray,
    h_rd_hat: np.ndarray,
    tds,
    noise_var: float,
    g: np.ndarray | None = None,
) -> SecondOrderStats:
    """Second-order statistics of the stacked two-phase destination signal.

    ``tds`` is anything exposing an ``active`` tuple of relay-antenna indices.
    Statistics assume correct relay decoding, which makes the candidate cost
    computable from channel estimates alone; detection elsewhere still runs
    on whatever the relays actually transmitted.
    """
    h_eff = effective_channel(config, h_sd_hat, h_rd_hat, tuple(tds.active), g)
    r = h_eff @ h_eff.conj().T + noise_var * np.eye(h_eff.shape[0])
    return SecondOrderStats(r_auto=r, p_cross=h_eff, sigma_s2=float(config.n_as))
