"""Link-level simulator for cooperative MIMO with joint relay and
transmit-diversity selection."""

__version__ = "0.1.0"

from .model import ConfigError, DerivedLimits, SystemConfig, replication_matrix, validate
from .channel import ChannelSet, EstimatorBank, RlsEstimator, draw_channels
from .receiver import (
    SecondOrderStats,
    mmse_cost,
    qpsk_map,
    qpsk_slice,
    stats_destination,
    stats_relay,
    wiener,
)
from .selection import (
    ComplexityReport,
    DsaState,
    RelaySubset,
    TdsCandidateSet,
    TdsMatrix,
    complexity_report,
    dsa_init,
    dsa_step_rs,
    dsa_step_tds,
    enumerate_removal_sets,
    enumerate_tds_candidates,
    exhaustive_rs,
    exhaustive_tds,
    relay_cost,
)
from .sim import (
    SCHEMES,
    BerRecord,
    NoiseModel,
    run_experiment,
    scheme_from_config,
    simulate_symbol,
    snr_to_noise,
)

__all__ = [
    "BerRecord",
    "ChannelSet",
    "ComplexityReport",
    "ConfigError",
    "DerivedLimits",
    "DsaState",
    "EstimatorBank",
    "NoiseModel",
    "RelaySubset",
    "RlsEstimator",
    "SCHEMES",
    "SecondOrderStats",
    "SystemConfig",
    "TdsCandidateSet",
    "TdsMatrix",
    "complexity_report",
    "draw_channels",
    "dsa_init",
    "dsa_step_rs",
    "dsa_step_tds",
    "enumerate_removal_sets",
    "enumerate_tds_candidates",
    "exhaustive_rs",
    "exhaustive_tds",
    "mmse_cost",
    "qpsk_map",
    "qpsk_slice",
    "relay_cost",
    "replication_matrix",
    "run_experiment",
    "scheme_from_config",
    "simulate_symbol",
    "snr_to_noise",
    "stats_destination",
    "stats_relay",
    "validate",
    "wiener",
]
