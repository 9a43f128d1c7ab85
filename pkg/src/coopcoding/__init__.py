"""Cooperative network coding and diversity coding over lossy multihop clusters."""

from .analysis import (
    EnergyParams,
    EnergyReport,
    energy_dc_packet,
    energy_nc_packet,
    energy_node_dc,
    energy_node_nc,
    energy_report,
    expected_innovative_transmissions,
    independence_probability,
    min_combination_packets,
    source_energy_savings,
    total_transmitted_packets,
)
from .codec import (
    CodedPacket,
    ConfigurationError,
    DecodeFailure,
    NodeSilent,
    SourceBlock,
    dc_coefficients,
    dc_encode,
    decode,
    innovative_count,
    rank,
    recode,
    rlnc_encode,
)
from .gf import GF256, FieldContext, FieldError
from .montecarlo import SummaryStats, run_trials, skewness, sweep
from .simnet import (
    ExperimentResult,
    NetworkConfig,
    Policy,
    Scheme,
    build_topology,
    run_experiment,
)

__version__ = "0.1.0"
