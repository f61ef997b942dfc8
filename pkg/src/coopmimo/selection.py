"""Candidate sets and search engines for relay and transmit-diversity selection.

Two coupled discrete problems are solved per time instant:

* relay selection (RS): find the removal subset whose relays have the worst
  summed first-phase MSE (a maximization over all removal subsets), and
* transmit diversity selection (TDS): find the active-antenna set with the
  lowest destination MSE (a minimization over the antenna subsets that avoid
  the removed relays).

Both can be solved exhaustively, or tracked by a discrete stochastic
approximation (DSA) that compares one random candidate per step against the
tracked extremum and follows the most-visited candidate of a state occupation
probability (SOP) vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ConfigError, SystemConfig, replication_matrix
from .receiver import (
    mmse_cost,
    relay_power_scale,
    source_power_scale,
    stats_destination,
    stats_relay,
)


@dataclass(frozen=True)
class RelaySubset:
    """A candidate set of relays to drop, stored as sorted indices."""

    removed: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "removed", tuple(sorted(self.removed)))
        if len(set(self.removed)) != len(self.removed):
            raise ValueError(f"duplicate relay indices in {self.removed}")


@dataclass(frozen=True)
class TdsMatrix:
    """A candidate set of active relay antennas (diagonal 0/1 selection).

    ``active`` holds sorted indices into the stacked relay-antenna space of
    size n_ar*n_r; the dense diagonal matrix is materialized on demand.
    """

    active: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "active", tuple(sorted(self.active)))
        if len(set(self.active)) != len(self.active):
            raise ValueError(f"duplicate antenna indices in {self.active}")

    def as_matrix(self, n_total: int) -> np.ndarray:
        mask = np.zeros(n_total)
        mask[list(self.active)] = 1.0
        return np.diag(mask)

    def relays_used(self, n_ar: int) -> frozenset[int]:
        return frozenset(a // n_ar for a in self.active)


def enumerate_removal_sets(config: SystemConfig) -> list[RelaySubset]:
    """All removal subsets of size n_rem, in lexicographic order."""
    count = math.comb(config.n_r, config.n_rem)
    if count > config.max_candidates:
        raise ConfigError(
            f"removal candidate set has {count} members, above the "
            f"guard of {config.max_candidates}"
        )
    from itertools import combinations

    return [RelaySubset(c) for c in combinations(range(config.n_r), config.n_rem)]


def enumerate_tds_candidates(
    config: SystemConfig, removed: tuple[int, ...] = ()
) -> list[TdsMatrix]:
    """All active-antenna subsets avoiding the removed relays, lexicographic."""
    banned = set(removed)
    allowed = [
        a for a in range(config.n_relay_antennas) if a // config.n_ar not in banned
    ]
    count = math.comb(len(allowed), config.n_asub) if len(allowed) >= config.n_asub else 0
    if count > config.max_candidates:
        raise ConfigError(
            f"TDS candidate set has {count} members, above the "
            f"guard of {config.max_candidates}"
        )
    from itertools import combinations

    return [TdsMatrix(c) for c in combinations(allowed, config.n_asub)]


class TdsCandidateSet:
    """The full TDS candidate list plus per-candidate relay usage bitmasks.

    Immutable and shareable; reductions against an evolving removal decision
    are served as cached index views, so switching the removal subset never
    copies or re-enumerates the candidates.
    """

    def __init__(self, config: SystemConfig):
        self.config = config
        self.candidates = enumerate_tds_candidates(config)
        self.active_array = np.array([c.active for c in self.candidates], dtype=np.intp)
        self.relay_masks = np.array(
            [
                sum(1 << r for r in c.relays_used(config.n_ar))
                for c in self.candidates
            ],
            dtype=np.int64,
        )
        self.replication = replication_matrix(config)
        self._views: dict[tuple[int, ...], ReducedTdsSet] = {}

    def __len__(self) -> int:
        return len(self.candidates)

    def reduce(self, removed: RelaySubset) -> "ReducedTdsSet":
        key = removed.removed
        view = self._views.get(key)
        if view is None:
            removed_mask = sum(1 << r for r in key)
            valid = (self.relay_masks & removed_mask) == 0
            view = ReducedTdsSet(self, removed, valid)
            self._views[key] = view
        return view


class ReducedTdsSet:
    """Predicate view of a TdsCandidateSet compatible with one removal subset."""

    def __init__(self, base: TdsCandidateSet, removed: RelaySubset, valid: np.ndarray):
        self.base = base
        self.removed = removed
        self.valid = valid
        self.indices = np.flatnonzero(valid)
        if self.indices.size == 0:
            raise ConfigError(
                f"removing relays {removed.removed} leaves no TDS candidate "
                f"with n_asub={base.config.n_asub}"
            )

    def __len__(self) -> int:
        return int(self.indices.size)

    def __contains__(self, index: int) -> bool:
        return bool(self.valid[index])

    def __iter__(self):
        return (self.base.candidates[i] for i in self.indices)

    def candidate(self, index: int) -> TdsMatrix:
        return self.base.candidates[index]


def relay_mse_each(config: SystemConfig, h_sr_hats, noise_var: float) -> np.ndarray:
    """First-phase MMSE residual of every relay, from its channel estimate."""
    return np.array(
        [mmse_cost(stats_relay(config, h, noise_var)) for h in h_sr_hats]
    )


def relay_cost(
    subset: RelaySubset, h_sr_hats, config: SystemConfig, noise_var: float
) -> float:
    """Summed MSE of the relays in a removal subset (higher = better to remove)."""
    return float(
        sum(
            mmse_cost(stats_relay(config, h_sr_hats[i], noise_var))
            for i in subset.removed
        )
    )


def destination_cost(
    tds: TdsMatrix,
    config: SystemConfig,
    h_sd_hat: np.ndarray,
    h_rd_hat: np.ndarray,
    noise_var: float,
    g: np.ndarray | None = None,
) -> float:
    """Destination MMSE residual for one TDS candidate (lower = better)."""
    return mmse_cost(stats_destination(config, h_sd_hat, h_rd_hat, tds, noise_var, g))


def destination_cost_batch(
    active_array: np.ndarray,
    config: SystemConfig,
    h_sd_hat: np.ndarray,
    h_rd_hat: np.ndarray,
    noise_var: float,
    g: np.ndarray,
) -> np.ndarray:
    """Destination MMSE residuals for a stack of equal-size candidates.

    Vectorized twin of :func:`destination_cost`; the candidates arrive as a
    (k, n_asub) array of active antenna indices.
    """
    a_s = source_power_scale(config)
    a_r = relay_power_scale(active_array.shape[1])
    m = 2 * config.n_ad
    k = active_array.shape[0]
    cols = h_rd_hat[:, active_array]                   # (n_ad, k, n_asub)
    g_rows = g[active_array, :]                        # (k, n_asub, n_as)
    relay_blocks = a_r * np.einsum("aks,ksj->kaj", cols, g_rows)
    h_eff = np.empty((k, m, config.n_as), dtype=complex)
    h_eff[:, : config.n_ad, :] = a_s * h_sd_hat
    h_eff[:, config.n_ad :, :] = relay_blocks
    r = np.einsum("kij,klj->kil", h_eff, h_eff.conj()) + noise_var * np.eye(m)
    w = np.linalg.solve(r, h_eff)
    return config.n_as - np.real(np.einsum("kij,kij->k", h_eff.conj(), w))


def exhaustive_rs(
    config: SystemConfig,
    h_sr_hats,
    noise_var: float,
    removal_sets: list[RelaySubset] | None = None,
) -> RelaySubset:
    """Removal subset with the highest summed relay MSE; first index wins ties."""
    if removal_sets is None:
        removal_sets = enumerate_removal_sets(config)
    if not removal_sets:
        raise ConfigError("empty removal candidate set")
    per_relay = relay_mse_each(config, h_sr_hats, noise_var)
    totals = np.array([per_relay[list(s.removed)].sum() for s in removal_sets])
    return removal_sets[int(np.argmax(totals))]


def exhaustive_tds(
    config: SystemConfig,
    h_sd_hat: np.ndarray,
    h_rd_hat: np.ndarray,
    noise_var: float,
    candidates,
) -> TdsMatrix:
    """TDS candidate with the lowest destination MSE; first index wins ties.

    ``candidates`` is a ReducedTdsSet view or an explicit TdsMatrix list.
    """
    if isinstance(candidates, ReducedTdsSet):
        active = candidates.base.active_array[candidates.indices]
        g = candidates.base.replication
        members = candidates
        pick = lambda j: members.base.candidates[int(members.indices[j])]
    else:
        candidates = list(candidates)
        if not candidates:
            raise ConfigError("empty TDS candidate set")
        active = np.array([c.active for c in candidates], dtype=np.intp)
        g = replication_matrix(config)
        pick = lambda j: candidates[j]
    costs = destination_cost_batch(active, config, h_sd_hat, h_rd_hat, noise_var, g)
    return pick(int(np.argmin(costs)))


@dataclass
class DsaState:
    """Mutable per-packet search state of one DSA instance.

    ``sop`` is the state occupation probability vector over the full
    candidate list, ``tracked`` the running extremum, ``current`` the
    decision in force (the SOP argmax under the strict-dominance rule).
    """

    sop: np.ndarray
    current: int
    tracked: int
    iteration: int = 1


def dsa_init(n_candidates: int, initial_index: int = 0) -> DsaState:
    if not 0 <= initial_index < n_candidates:
        raise ConfigError(
            f"initial candidate index {initial_index} outside [0, {n_candidates})"
        )
    sop = np.zeros(n_candidates)
    sop[initial_index] = 1.0
    return DsaState(sop=sop, current=initial_index, tracked=initial_index)


def _dsa_step(state, pool, contains, cost_at, rng, maximize) -> DsaState:
    """Shared DSA recursion: compare, SOP-average, switch on strict dominance.

    ``pool`` holds the currently valid candidate indices.  When a previous
    decision got invalidated (the TDS pool shrinks whenever the removal
    decision changes), the tracked/current indices are re-seated into the
    pool instead of resetting the SOP vector.
    """
    if len(pool) == 0:
        raise ConfigError("empty candidate set")
    cand = int(pool[rng.integers(len(pool))])
    if not contains(state.tracked):
        state.tracked = cand
    elif cand != state.tracked:
        diff = cost_at(cand) - cost_at(state.tracked)
        better = diff > 0 if maximize else diff < 0
        if better:
            state.tracked = cand
    mu = 1.0 / (state.iteration + 1)
    state.sop *= 1.0 - mu
    state.sop[state.tracked] += mu
    if not contains(state.current):
        state.current = state.tracked
    elif state.sop[state.tracked] > state.sop[state.current]:
        state.current = state.tracked
    state.iteration += 1
    return state


def dsa_step_rs(
    state: DsaState,
    removal_sets: list[RelaySubset],
    cost_fn,
    rng: np.random.Generator,
) -> DsaState:
    """One RS step: track the worst removal subset (maximize summed MSE)."""
    pool = range(len(removal_sets))
    return _dsa_step(
        state,
        pool,
        lambda i: True,
        lambda i: cost_fn(removal_sets[i]),
        rng,
        maximize=True,
    )


def dsa_step_tds(
    state: DsaState,
    reduced: ReducedTdsSet,
    cost_fn,
    rng: np.random.Generator,
) -> DsaState:
    """One TDS step over the reduced set: track the best matrix (minimize)."""
    return _dsa_step(
        state,
        reduced.indices,
        lambda i: i in reduced,
        lambda i: cost_fn(reduced.candidate(i)),
        rng,
        maximize=False,
    )


@dataclass(frozen=True)
class ComplexityReport:
    """Per-time-instant complex multiplication counts of the four schemes.

    The counting convention (see ``convention``) charges every visited
    candidate for re-estimating its candidate-conditioned second-order
    statistics by sample averaging over the packet history received so far
    (mean length n_symbols/2, dense application of the masked compound
    channel per stored observation), plus Wiener synthesis by explicit
    inversion and the residual-trace evaluation.  Exhaustive schemes visit
    the whole candidate set per instant, iterative schemes exactly two
    members (tracked extremum and random candidate) per problem.
    """

    exhaustive_tds: float
    exhaustive_tds_rs: float
    iterative_tds: float
    iterative_tds_rs: float
    convention: str

    def rows(self) -> list[tuple[str, float]]:
        return [
            ("exhaustive_tds", self.exhaustive_tds),
            ("exhaustive_tds_rs", self.exhaustive_tds_rs),
            ("iterative_tds", self.iterative_tds),
            ("iterative_tds_rs", self.iterative_tds_rs),
        ]


def complexity_report(config: SystemConfig) -> ComplexityReport:
    """Analytic complex-multiplication counts per time instant."""
    from .model import validate

    limits = validate(config)
    c = config
    m = 2 * c.n_ad
    history = c.n_symbols / 2.0

    def dest_eval(k_cols: int) -> float:
        stats = history * (c.n_ad * k_cols**2 + c.n_ad * k_cols + m * m + m * c.n_as)
        synth = m**3 + m * m * c.n_as + c.n_as * m
        return stats + synth

    relay_eval = (
        history * (2 * c.n_ar * c.n_as + c.n_ar**2)
        + c.n_ar**3
        + c.n_ar**2 * c.n_as
        + c.n_as * c.n_ar
    )
    subset_eval = c.n_rem * relay_eval

    k_full = c.n_relay_antennas
    k_kept = c.n_ar * (c.n_r - c.n_rem)
    report = ComplexityReport(
        exhaustive_tds=limits.n_tds_candidates * dest_eval(k_full),
        exhaustive_tds_rs=(
            limits.n_removal_candidates * subset_eval
            + limits.n_tds_candidates_reduced * dest_eval(k_kept)
        ),
        iterative_tds=2 * dest_eval(k_full),
        iterative_tds_rs=2 * subset_eval + 2 * dest_eval(k_kept),
        convention=(
            "complex multiplications per time instant; each visited candidate "
            "charged for history-averaged statistics re-estimation "
            f"(mean {history:.0f} stored observations), Wiener synthesis by "
            "explicit inversion, and the residual trace"
        ),
    )
    return report
