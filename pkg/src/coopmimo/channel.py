"""Block-fading channel realizations and recursive least-squares tracking.

Channels are flat Rayleigh fading, constant over one packet.  Every link is
re-estimated from known transmitted vectors with an exponentially weighted
multichannel RLS sharing one regressor across the output rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SystemConfig


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. circularly symmetric complex Gaussian, zero mean, unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass
class ChannelSet:
    """One packet's channel realization.

    h_sd : (n_ad, n_as) source-destination link
    h_sr : list of n_r (n_ar, n_as) source-relay links
    h_rd : (n_ad, n_ar*n_r) relay-destination link, column blocks per relay
    """

    h_sd: np.ndarray
    h_sr: list[np.ndarray]
    h_rd: np.ndarray


def draw_channels(config: SystemConfig, rng: np.random.Generator) -> ChannelSet:
    """Draw one block-fading realization of every link.

    Relay-path entries are unit-variance complex Gaussian; the direct path is
    scaled by ``direct_gain`` in amplitude.  Each link family uses its own
    child stream, so the direct-path draw does not depend on the relay
    geometry.
    """
    c = config
    g_sd, g_sr, g_rd = rng.spawn(3)
    h_sd = c.direct_gain * _complex_gaussian(g_sd, (c.n_ad, c.n_as))
    h_sr = [_complex_gaussian(g_sr, (c.n_ar, c.n_as)) for _ in range(c.n_r)]
    h_rd = _complex_gaussian(g_rd, (c.n_ad, c.n_relay_antennas))
    return ChannelSet(h_sd=h_sd, h_sr=h_sr, h_rd=h_rd)


class RlsEstimator:
    """Exponentially weighted RLS estimate of one MIMO link.

    Estimates ``h`` in ``y = h @ x + noise`` from a stream of known regressor
    vectors ``x``.  All output rows share the same regressor, so a single
    inverse input-correlation matrix serves the whole matrix estimate.  The
    estimate starts from zeros and the inverse correlation from identity.
    """

    def __init__(self, n_out: int, n_in: int, forgetting: float):
        if not 0.0 < forgetting <= 1.0:
            raise ValueError(f"forgetting={forgetting} must lie in (0, 1]")
        self.forgetting = forgetting
        self.h_hat = np.zeros((n_out, n_in), dtype=complex)
        self.p_inv = np.eye(n_in, dtype=complex)

    def update(self, pilot: np.ndarray, observed: np.ndarray) -> "RlsEstimator":
        """One recursion step with regressor ``pilot`` and received ``observed``.

        Gain k = P x / (lam + x^H P x), then
        h <- h + (y - h x) k^H  and  P <- (P - k x^H P) / lam.
        """
        x = np.asarray(pilot).reshape(-1)
        y = np.asarray(observed).reshape(-1)
        n_out, n_in = self.h_hat.shape
        if x.shape[0] != n_in or y.shape[0] != n_out:
            raise ValueError(
                f"pilot/observed dims {x.shape[0]}/{y.shape[0]} do not match "
                f"estimator dims {n_in}/{n_out}"
            )
        px = self.p_inv @ x
        gain = px / (self.forgetting + np.real(x.conj() @ px))
        err = y - self.h_hat @ x
        self.h_hat += err[:, None] * gain.conj()[None, :]
        self.p_inv = (self.p_inv - gain[:, None] * (x.conj() @ self.p_inv)[None, :]) / self.forgetting
        # x^H P x is real for Hermitian P; re-symmetrize to pin round-off
        self.p_inv = 0.5 * (self.p_inv + self.p_inv.conj().T)
        return self


class EstimatorBank:
    """Current channel knowledge for one packet: perfect or RLS-tracked.

    In ``perfect`` mode the bank simply exposes the true matrices and all
    updates are no-ops.  In ``rls`` mode it owns one estimator per link, with
    a single estimator for the stacked relay-destination matrix.
    """

    def __init__(self, config: SystemConfig, channels: ChannelSet):
        self._perfect = config.estimation_mode == "perfect"
        self._channels = channels
        if not self._perfect:
            lam = config.forgetting
            self._sd = RlsEstimator(config.n_ad, config.n_as, lam)
            self._sr = [RlsEstimator(config.n_ar, config.n_as, lam) for _ in range(config.n_r)]
            self._rd = RlsEstimator(config.n_ad, config.n_relay_antennas, lam)

    @property
    def h_sd(self) -> np.ndarray:
        return self._channels.h_sd if self._perfect else self._sd.h_hat

    @property
    def h_sr(self) -> list[np.ndarray]:
        return self._channels.h_sr if self._perfect else [e.h_hat for e in self._sr]

    @property
    def h_rd(self) -> np.ndarray:
        return self._channels.h_rd if self._perfect else self._rd.h_hat

    def update_sd(self, pilot, observed):
        if not self._perfect:
            self._sd.update(pilot, observed)

    def update_sr(self, relay: int, pilot, observed):
        if not self._perfect:
            self._sr[relay].update(pilot, observed)

    def update_rd(self, pilot, observed):
        if not self._perfect:
            self._rd.update(pilot, observed)
