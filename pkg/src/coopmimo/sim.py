"""Two-phase transmission pipeline and the Monte Carlo BER experiment.

One symbol period: the source broadcasts, every relay runs its Wiener filter
and slicer (decode-and-forward), the active relay antennas retransmit the
replicated decisions, and the destination detects from the stacked
observation of both phases.  Channel estimates and selection decisions are
refreshed after every detection, so a decision made at symbol ``i`` steers
the transmission at symbol ``i + 1``.

Packets are independent given their derived RNG streams, so the packet loop
is a parallel map with an associative merge of error counts.  All schemes of
one experiment share the channel, noise and data streams of each packet
(common random numbers), which keeps scheme comparisons low-variance and
makes the non-cooperative baseline exactly independent of relay parameters.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import ChannelSet, EstimatorBank, draw_channels
from .model import ConfigError, SystemConfig, validate
from .receiver import (
    qpsk_map,
    qpsk_slice,
    qpsk_unmap,
    relay_power_scale,
    source_power_scale,
    stats_destination,
    stats_relay,
    wiener,
)
from .selection import (
    RelaySubset,
    TdsCandidateSet,
    TdsMatrix,
    destination_cost,
    dsa_init,
    dsa_step_rs,
    dsa_step_tds,
    enumerate_removal_sets,
    exhaustive_rs,
    exhaustive_tds,
    relay_cost,
)

# fraction of the packet discarded from aggregate BER while selection and
# channel estimation converge; per-symbol records always keep the full curve
BURN_IN_FRACTION = 0.5


@dataclass(frozen=True)
class NoiseModel:
    """Per-receive-antenna complex noise variance."""

    noise_var: float


def snr_to_noise(config: SystemConfig, snr_db: float) -> NoiseModel:
    """Noise variance for one SNR point: unit per-phase transmit power over noise."""
    return NoiseModel(noise_var=10.0 ** (-snr_db / 10.0))


@dataclass(frozen=True)
class BerRecord:
    """Accumulated bit errors for one (scheme, SNR, symbol-index) cell.

    ``symbol_index`` is None for the per-SNR aggregate over the post-burn-in
    window.
    """

    scheme: str
    snr_db: float
    symbol_index: int | None
    bit_errors: int
    bits_total: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total


@dataclass(frozen=True)
class SchemeSpec:
    """What one scheme label means for the per-symbol pipeline."""

    label: str
    cooperative: bool
    tds: bool
    rs: bool
    method: str | None


SCHEMES: dict[str, SchemeSpec] = {
    s.label: s
    for s in [
        SchemeSpec("non_cooperative", cooperative=False, tds=False, rs=False, method=None),
        SchemeSpec("no_tds", cooperative=True, tds=False, rs=False, method=None),
        SchemeSpec("tds_exhaustive", cooperative=True, tds=True, rs=False, method="exhaustive"),
        SchemeSpec("tds_dsa", cooperative=True, tds=True, rs=False, method="dsa"),
        SchemeSpec("tds_rs_exhaustive", cooperative=True, tds=True, rs=True, method="exhaustive"),
        SchemeSpec("tds_rs_dsa", cooperative=True, tds=True, rs=True, method="dsa"),
    ]
}
_SCHEME_ORDER = list(SCHEMES)


def scheme_from_config(config: SystemConfig) -> str:
    """Scheme label implied by the config's selection fields."""
    if config.selection_scheme == "none":
        return "no_tds"
    return f"{config.selection_scheme}_{config.selection_method}"


class _SimContext:
    """Immutable per-config structures shared by all packets of a process."""

    def __init__(self, config: SystemConfig):
        validate(config)
        self.config = config
        self.tds_set = TdsCandidateSet(config)
        self.removal_sets = enumerate_removal_sets(config)
        self.all_on = TdsMatrix(tuple(range(config.n_relay_antennas)))


@lru_cache(maxsize=8)
def _context(config: SystemConfig) -> _SimContext:
    return _SimContext(config)


class SelectionTracker:
    """Per-packet selection state: fixed, exhaustive per symbol, or DSA."""

    def __init__(self, config: SystemConfig, spec: SchemeSpec, ctx: _SimContext):
        self.config = config
        self.spec = spec
        self.ctx = ctx
        if not spec.tds:
            self.removed = RelaySubset(())
            self.current_tds = ctx.all_on if spec.cooperative else None
            return
        self.removal_sets = ctx.removal_sets if spec.rs else [RelaySubset(())]
        init = config.dsa_initial_index if spec.method == "dsa" else 0
        rs_init = init if spec.rs else 0
        if not 0 <= rs_init < len(self.removal_sets):
            raise ConfigError(
                f"dsa_initial_index {rs_init} outside the "
                f"{len(self.removal_sets)} removal candidates"
            )
        self.removed = self.removal_sets[rs_init]
        reduced = ctx.tds_set.reduce(self.removed)
        if spec.method == "dsa":
            if spec.rs:
                self.rs_state = dsa_init(len(self.removal_sets), rs_init)
            # the shared initial index positions within the valid TDS pool
            tds_init = int(reduced.indices[min(init, len(reduced) - 1)])
            self.tds_state = dsa_init(len(ctx.tds_set), tds_init)
            self.current_tds = ctx.tds_set.candidates[tds_init]
        else:
            self.current_tds = reduced.candidate(int(reduced.indices[0]))

    def step(self, est: EstimatorBank, noise_var: float, rng: np.random.Generator):
        """Refresh the removal and TDS decisions from the current estimates."""
        spec, config, ctx = self.spec, self.config, self.ctx
        if not spec.tds:
            return
        if spec.method == "exhaustive":
            if spec.rs:
                self.removed = exhaustive_rs(
                    config, est.h_sr, noise_var, self.removal_sets
                )
            reduced = ctx.tds_set.reduce(self.removed)
            self.current_tds = exhaustive_tds(
                config, est.h_sd, est.h_rd, noise_var, reduced
            )
        else:
            if spec.rs:
                h_sr = est.h_sr
                dsa_step_rs(
                    self.rs_state,
                    self.removal_sets,
                    lambda s: relay_cost(s, h_sr, config, noise_var),
                    rng,
                )
                self.removed = self.removal_sets[self.rs_state.current]
            reduced = ctx.tds_set.reduce(self.removed)
            h_sd, h_rd = est.h_sd, est.h_rd
            dsa_step_tds(
                self.tds_state,
                reduced,
                lambda t: destination_cost(
                    t, config, h_sd, h_rd, noise_var, ctx.tds_set.replication
                ),
                rng,
            )
            self.current_tds = ctx.tds_set.candidates[self.tds_state.current]


@dataclass
class PacketStreams:
    """Independent RNG streams of one packet, one per randomness role."""

    symbols: np.random.Generator
    noise_sd: np.random.Generator
    noise_sr: np.random.Generator
    noise_rd: np.random.Generator
    dsa: np.random.Generator


def _packet_streams(config: SystemConfig, snr_idx: int, packet: int, scheme_idx: int) -> PacketStreams:
    seed = config.rng_seed

    def stream(role: int, *extra: int) -> np.random.Generator:
        return np.random.default_rng([seed, role, snr_idx, packet, *extra])

    return PacketStreams(
        symbols=stream(17),
        noise_sd=stream(13),
        noise_sr=stream(14),
        noise_rd=stream(15),
        dsa=stream(23, scheme_idx),
    )


def _cnoise(rng: np.random.Generator, n: int, var: float) -> np.ndarray:
    z = rng.standard_normal(2 * n) * np.sqrt(var / 2.0)
    return z[:n] + 1j * z[n:]


def relay_transmit_vector(stacked_symbols: np.ndarray, active, n_total: int) -> np.ndarray:
    """Masked, power-scaled stacked relay transmit vector of the second phase."""
    x = np.zeros(n_total, dtype=complex)
    idx = list(active)
    x[idx] = relay_power_scale(len(idx)) * stacked_symbols[idx]
    return x


def simulate_symbol(
    config: SystemConfig,
    spec: SchemeSpec,
    channels: ChannelSet,
    est: EstimatorBank,
    tracker: SelectionTracker,
    noise: NoiseModel,
    streams: PacketStreams,
) -> tuple[np.ndarray, int]:
    """One symbol period; returns (detected bits, bit errors).

    Channel estimates and the selection tracker are updated in place after
    detection, so the refreshed decisions steer the next symbol.
    """
    c = config
    nv = noise.noise_var
    bits = streams.symbols.integers(0, 2, size=2 * c.n_as)
    s = qpsk_map(bits)
    a_s = source_power_scale(c)
    x_src = a_s * s

    r_sd = channels.h_sd @ x_src + _cnoise(streams.noise_sd, c.n_ad, nv)

    if spec.cooperative:
        rep = c.replication_factor
        stacked = np.empty(c.n_relay_antennas, dtype=complex)
        r_sr_all = []
        h_sr_hats = est.h_sr
        for n in range(c.n_r):
            r_sr = channels.h_sr[n] @ x_src + _cnoise(streams.noise_sr, c.n_ar, nv)
            r_sr_all.append(r_sr)
            w_r = wiener(stats_relay(c, h_sr_hats[n], nv))
            s_hat = qpsk_slice(w_r.conj().T @ r_sr)
            block = s_hat if rep == 1 else np.tile(s_hat, rep)
            stacked[n * c.n_ar : (n + 1) * c.n_ar] = block
        tds = tracker.current_tds
        x_rd = relay_transmit_vector(stacked, tds.active, c.n_relay_antennas)
        r_rd = channels.h_rd @ x_rd + _cnoise(streams.noise_rd, c.n_ad, nv)
        w_d = wiener(stats_destination(c, est.h_sd, est.h_rd, tds, nv))
        soft = w_d.conj().T @ np.concatenate([r_sd, r_rd])
    else:
        w_d = wiener(stats_relay(c, est.h_sd, nv))
        soft = w_d.conj().T @ r_sd

    detected = qpsk_unmap(qpsk_slice(soft))
    errors = int(np.count_nonzero(detected != bits))

    est.update_sd(x_src, r_sd)
    if spec.cooperative:
        for n in range(c.n_r):
            est.update_sr(n, x_src, r_sr_all[n])
        est.update_rd(x_rd, r_rd)
        tracker.step(est, nv, streams.dsa)
    return detected, errors


def _run_packet(
    config: SystemConfig,
    labels: list[str],
    snr_idx: int,
    packet: int,
) -> dict[str, np.ndarray]:
    """Per-symbol error counts of one packet for every requested scheme."""
    ctx = _context(config)
    snr_db = config.snr_db_grid[snr_idx]
    noise = snr_to_noise(config, snr_db)
    channel_rng = np.random.default_rng([config.rng_seed, 11, snr_idx, packet])
    channels = draw_channels(config, channel_rng)
    out: dict[str, np.ndarray] = {}
    for label in labels:
        spec = SCHEMES[label]
        streams = _packet_streams(config, snr_idx, packet, _SCHEME_ORDER.index(label))
        est = EstimatorBank(config, channels)
        tracker = SelectionTracker(config, spec, ctx)
        errors = np.zeros(config.n_symbols, dtype=np.int64)
        for i in range(config.n_symbols):
            _, errors[i] = simulate_symbol(
                config, spec, channels, est, tracker, noise, streams
            )
        out[label] = errors
    return out


def _worker(args) -> dict[str, np.ndarray]:
    return _run_packet(*args)


def run_experiment(
    config: SystemConfig,
    schemes: list[str] | None = None,
    n_workers: int = 1,
    progress: bool = False,
) -> list[BerRecord]:
    """Monte Carlo BER experiment over the SNR grid for the enabled schemes.

    Returns one aggregate record per (scheme, SNR) over the post-burn-in
    window, followed by the full per-symbol-index records (the convergence
    curves).  Results are fully determined by the config seed, independent of
    ``n_workers``.
    """
    validate(config)
    labels = list(schemes) if schemes is not None else [scheme_from_config(config)]
    unknown = [l for l in labels if l not in SCHEMES]
    if unknown:
        raise ConfigError(f"unknown schemes {unknown}; valid: {list(SCHEMES)}")

    bits_per_symbol = 2 * config.n_as
    # errors[label][snr_idx] is the per-symbol-index error count over packets
    errors = {
        label: np.zeros((len(config.snr_db_grid), config.n_symbols), dtype=np.int64)
        for label in labels
    }

    for snr_idx in range(len(config.snr_db_grid)):
        tasks = [(config, labels, snr_idx, p) for p in range(config.n_packets)]
        if n_workers > 1:
            chunk = max(1, config.n_packets // (8 * n_workers))
            with ProcessPoolExecutor(max_workers=n_workers) as pool:
                results = pool.map(_worker, tasks, chunksize=chunk)
                for res in results:
                    for label, err in res.items():
                        errors[label][snr_idx] += err
        else:
            for task in tasks:
                for label, err in _worker(task).items():
                    errors[label][snr_idx] += err
        if progress:
            burn = int(config.n_symbols * BURN_IN_FRACTION)
            for label in labels:
                tail = errors[label][snr_idx, burn:].sum()
                bits = (config.n_symbols - burn) * bits_per_symbol * config.n_packets
                print(
                    f"snr={config.snr_db_grid[snr_idx]:6.1f} dB  "
                    f"{label:<20s} ber={tail / bits:.4e}"
                )

    records: list[BerRecord] = []
    burn = int(config.n_symbols * BURN_IN_FRACTION)
    tail_bits = (config.n_symbols - burn) * bits_per_symbol * config.n_packets
    for label in labels:
        for snr_idx, snr_db in enumerate(config.snr_db_grid):
            records.append(
                BerRecord(
                    scheme=label,
                    snr_db=snr_db,
                    symbol_index=None,
                    bit_errors=int(errors[label][snr_idx, burn:].sum()),
                    bits_total=tail_bits,
                )
            )
    sym_bits = bits_per_symbol * config.n_packets
    for label in labels:
        for snr_idx, snr_db in enumerate(config.snr_db_grid):
            for i in range(config.n_symbols):
                records.append(
                    BerRecord(
                        scheme=label,
                        snr_db=snr_db,
                        symbol_index=i,
                        bit_errors=int(errors[label][snr_idx, i]),
                        bits_total=sym_bits,
                    )
                )
    return records
