"""Closed-form packet-count and coding-energy model."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .codec import ConfigurationError


@dataclass(frozen=True)
class EnergyParams:
    """Per-operation coding energies in caller-chosen units.

    ``L`` is the packet length in bits and ``q`` the field exponent, so each
    packet holds ``L / q`` symbols.
    """

    e_lfsr: float = 1.0
    e_mul: float = 1.0
    e_add: float = 1.0
    L: int = 800
    q: int = 8

    def __post_init__(self):
        if min(self.e_lfsr, self.e_mul, self.e_add) < 0:
            raise ConfigurationError("energy parameters must be non-negative")
        if self.q < 1 or self.L < 0 or self.L % self.q:
            raise ConfigurationError(f"L={self.L} must be a non-negative multiple of q={self.q}")

    @property
    def symbols(self) -> int:
        return self.L // self.q


@dataclass(frozen=True)
class EnergyReport:
    e_nc_packet: float
    e_node_nc: float
    e_dc_packet: float
    e_node_dc: float
    e_source_savings: float
    total_packets: int

    def as_dict(self) -> dict:
        return asdict(self)


def expected_innovative_transmissions(m: int, q: int) -> float:
    """Mean number of uniform random vectors drawn until ``m`` are independent."""
    if m < 1 or q < 1:
        raise ConfigurationError("need m >= 1 and q >= 1")
    base = 2.0 ** -q
    return math.fsum(1.0 / (1.0 - base ** i) for i in range(1, m + 1))


def independence_probability(m: int, q: int) -> float:
    return m / expected_innovative_transmissions(m, q)


def min_combination_packets(m: int, q: int) -> int:
    return math.ceil(expected_innovative_transmissions(m, q))


def _symbol_ops(m: int, p: EnergyParams) -> float:
    # m multiplies and m-1 additions per symbol
    return p.symbols * (m * p.e_mul + (m - 1) * p.e_add)


def energy_nc_packet(m: int, p: EnergyParams) -> float:
    if m < 1:
        raise ConfigurationError("need m >= 1")
    return m * p.e_lfsr + _symbol_ops(m, p)


def energy_node_nc(m: int, m_prime: int, p: EnergyParams) -> float:
    if m_prime < 0:
        raise ConfigurationError("need m_prime >= 0")
    return m_prime * energy_nc_packet(m, p)


def energy_dc_packet(m: int, p: EnergyParams) -> float:
    if m < 1:
        raise ConfigurationError("need m >= 1")
    return _symbol_ops(m, p)


def energy_node_dc(m: int, m_prime: int, p: EnergyParams) -> float:
    """Systematic diversity coding: only the m' - m protection packets are coded."""
    if m_prime < m:
        raise ConfigurationError(f"m_prime={m_prime} < m={m}")
    return (m_prime - m) * energy_dc_packet(m, p)


def source_energy_savings(m: int, m_prime: int, p: EnergyParams) -> float:
    """Source energy saved by diversity coding relative to random network coding.

    Sum of the coefficient-generation energy (m' m e_lfsr) and the coding
    energy of the m systematic packets that go out uncoded.
    """
    if m_prime < m:
        raise ConfigurationError(f"m_prime={m_prime} < m={m}")
    return m_prime * m * p.e_lfsr + m * _symbol_ops(m, p)


def total_transmitted_packets(m_prime: int, cluster_sizes, retransmitted: int = 0) -> int:
    """Source transmissions plus one per relay node plus retransmissions."""
    if retransmitted < 0:
        raise ConfigurationError("retransmitted must be >= 0")
    return int(m_prime) + int(sum(cluster_sizes)) + int(retransmitted)


def energy_report(m: int, m_prime: int, p: EnergyParams, cluster_sizes=(),
                  retransmitted: int = 0) -> EnergyReport:
    return EnergyReport(
        e_nc_packet=energy_nc_packet(m, p),
        e_node_nc=energy_node_nc(m, m_prime, p),
        e_dc_packet=energy_dc_packet(m, p),
        e_node_dc=energy_node_dc(m, m_prime, p),
        e_source_savings=source_energy_savings(m, m_prime, p),
        total_packets=total_transmitted_packets(m_prime, cluster_sizes, retransmitted),
    )
