"""Scenario configuration, dimension bookkeeping and derived system limits.

Every other module consumes a validated :class:`SystemConfig`.  Antenna and
relay counts fix the sizes of all channel matrices, the candidate-set
cardinalities of the two selection problems, and the closed-form
multiplexing/diversity limits of the two-phase relay system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

ESTIMATION_MODES = ("perfect", "rls")
SELECTION_SCHEMES = ("none", "tds", "tds_rs")
SELECTION_METHODS = ("exhaustive", "dsa")


class ConfigError(ValueError):
    """A scenario violates a structural invariant (bad dimensions, empty sets)."""


@dataclass(frozen=True)
class SystemConfig:
    """All scenario parameters of one simulation setup.

    Antenna geometry: a single source with ``n_as`` antennas, ``n_r`` relays
    with ``n_ar`` antennas each (``n_ar`` must be an integer multiple of
    ``n_as``), and a destination with ``n_ad`` antennas.  Selection keeps
    ``n_asub`` relay antennas active and may drop ``n_rem`` relays from
    consideration first.

    ``direct_gain`` is the amplitude scale of the source-destination path
    relative to the relay paths (default 0.5, i.e. -6 dB, reflecting the
    longer, shadowed direct link).  ``forgetting`` is the exponential
    forgetting factor of the least-squares channel tracker.

    ``dsa_initial_index`` seeds the stochastic search: it indexes the removal
    candidate list directly and positions within the initially valid
    antenna-subset pool (clamped to its size).
    """

    n_as: int = 2
    n_ar: int = 2
    n_ad: int = 2
    n_r: int = 4
    n_asub: int = 2
    n_rem: int = 1
    n_symbols: int = 500
    n_packets: int = 1000
    snr_db_grid: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    direct_gain: float = 0.5
    forgetting: float = 0.9
    estimation_mode: str = "rls"
    selection_scheme: str = "tds_rs"
    selection_method: str = "dsa"
    rng_seed: int = 0
    dsa_initial_index: int = 0
    max_candidates: int = 1_000_000

    def __post_init__(self):
        # tuples keep the config hashable/frozen even when built from lists
        object.__setattr__(self, "snr_db_grid", tuple(float(s) for s in self.snr_db_grid))

    @property
    def n_relay_antennas(self) -> int:
        """Total relay antenna count across all relays."""
        return self.n_ar * self.n_r

    @property
    def replication_factor(self) -> int:
        """How many times each data stream is repeated per relay."""
        return self.n_ar // self.n_as

    def replace(self, **changes) -> "SystemConfig":
        kwargs = {f.name: getattr(self, f.name) for f in fields(self)}
        kwargs.update(changes)
        return SystemConfig(**kwargs)


@dataclass(frozen=True)
class DerivedLimits:
    """Closed-form limits and candidate-set sizes implied by a config."""

    max_multiplexing_gain: int
    max_diversity_full: int
    max_diversity_selected: float
    n_tds_candidates: int
    n_tds_candidates_reduced: int
    n_removal_candidates: int


def validate(config: SystemConfig) -> DerivedLimits:
    """Check all structural invariants and return the derived limits.

    Raises :class:`ConfigError` on dimension violations (``n_ar`` not a
    multiple of ``n_as``), empty candidate sets (``n_asub`` larger than the
    antennas surviving relay removal) and out-of-range scalars.
    """
    c = config
    for name in ("n_as", "n_ar", "n_ad", "n_r", "n_asub", "n_symbols", "n_packets"):
        if getattr(c, name) < 1:
            raise ConfigError(f"{name} must be >= 1, got {getattr(c, name)}")
    if c.n_ar % c.n_as != 0:
        raise ConfigError(
            f"n_ar={c.n_ar} must be an integer multiple of n_as={c.n_as}"
        )
    if not 0 <= c.n_rem < c.n_r:
        raise ConfigError(f"n_rem={c.n_rem} must satisfy 0 <= n_rem < n_r={c.n_r}")
    surviving = c.n_ar * (c.n_r - c.n_rem)
    if not 1 <= c.n_asub <= surviving:
        raise ConfigError(
            f"n_asub={c.n_asub} leaves an empty candidate set: must be in "
            f"[1, {surviving}] after removing {c.n_rem} of {c.n_r} relays"
        )
    if not 0.0 < c.forgetting <= 1.0:
        raise ConfigError(f"forgetting={c.forgetting} must lie in (0, 1]")
    if not 0.0 < c.direct_gain <= 1.0:
        raise ConfigError(f"direct_gain={c.direct_gain} must lie in (0, 1]")
    if c.estimation_mode not in ESTIMATION_MODES:
        raise ConfigError(f"estimation_mode must be one of {ESTIMATION_MODES}")
    if c.selection_scheme not in SELECTION_SCHEMES:
        raise ConfigError(f"selection_scheme must be one of {SELECTION_SCHEMES}")
    if c.selection_method not in SELECTION_METHODS:
        raise ConfigError(f"selection_method must be one of {SELECTION_METHODS}")
    if not c.snr_db_grid:
        raise ConfigError("snr_db_grid must contain at least one point")

    return DerivedLimits(
        max_multiplexing_gain=c.n_as,
        max_diversity_full=c.n_ad * (1 + (c.n_r * c.n_ar) // c.n_as),
        max_diversity_selected=c.n_ad * (c.n_asub / c.n_ar + 1),
        n_tds_candidates=math.comb(c.n_relay_antennas, c.n_asub),
        n_tds_candidates_reduced=math.comb(surviving, c.n_asub),
        n_removal_candidates=math.comb(c.n_r, c.n_rem),
    )


def replication_matrix(config: SystemConfig) -> np.ndarray:
    """0/1 matrix mapping the source streams onto the stacked relay antennas.

    Returns the (n_ar*n_r, n_as) matrix ``G`` such that, when every relay
    decodes correctly, the stacked relay transmit vector equals ``G @ s``:
    each relay repeats the n_as-dimensional decoded vector n_ar/n_as times,
    stream k always riding on the matching antenna of each repetition block.
    """
    c = config
    if c.n_ar % c.n_as != 0:
        raise ConfigError(
            f"n_ar={c.n_ar} must be an integer multiple of n_as={c.n_as}"
        )
    per_relay = np.tile(np.eye(c.n_as), (c.replication_factor, 1))
    return np.tile(per_relay, (c.n_r, 1))


def stream_of_antenna(config: SystemConfig) -> np.ndarray:
    """Stream index carried by each stacked relay antenna (length n_ar*n_r)."""
    return np.argmax(replication_matrix(config), axis=1)
