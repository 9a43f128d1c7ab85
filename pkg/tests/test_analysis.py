from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coopcoding.analysis import (
    EnergyParams,
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
from coopcoding.codec import ConfigurationError

from oracles import draws_until_full_rank

UNIT_16 = EnergyParams(1, 1, 1, L=16, q=8)

KNOWN_ROWS = [(2, 3, 0.998035), (5, 6, 0.999213), (10, 11, 0.999606), (20, 21, 0.999803)]


@pytest.mark.parametrize("m,m_min,p_l", KNOWN_ROWS)
def test_minimum_packets_and_independence(m, m_min, p_l):
    assert min_combination_packets(m, 8) == m_min
    assert independence_probability(m, 8) == pytest.approx(p_l, abs=1e-6)


def test_expected_transmissions_examples():
    assert expected_innovative_transmissions(1, 1) == 2.0
    assert expected_innovative_transmissions(10, 8) == pytest.approx(10.00394, abs=1e-5)
    assert min_combination_packets(1, 8) == 2
    assert expected_innovative_transmissions(1, 8) == pytest.approx(256 / 255)


@pytest.mark.parametrize("q", [1, 4, 8, 16])
def test_single_packet_independence(q):
    assert independence_probability(1, q) == pytest.approx(1 - 2.0 ** -q)


def test_expected_transmissions_decrease_towards_m_with_q():
    for m in (1, 3, 10):
        values = [expected_innovative_transmissions(m, q) for q in range(1, 17)]
        assert all(v >= m for v in values)
        assert all(a > b for a, b in zip(values, values[1:]))
        assert values[-1] - m < 1e-4


def test_invalid_arguments():
    with pytest.raises(ConfigurationError):
        expected_innovative_transmissions(0, 8)
    with pytest.raises(ConfigurationError):
        energy_node_dc(5, 4, UNIT_16)
    with pytest.raises(ConfigurationError):
        EnergyParams(L=12, q=8)
    with pytest.raises(ConfigurationError):
        EnergyParams(e_mul=-1)
    with pytest.raises(ConfigurationError):
        total_transmitted_packets(11, [11], -1)


@pytest.mark.parametrize("q,m", [(1, 2), (1, 3), (2, 2), (2, 3), (4, 2), (4, 3)])
def test_expected_transmissions_against_brute_force_draws(q, m):
    draws = draws_until_full_rank(m, q, 100_000, np.random.default_rng(q * 10 + m))
    assert draws.mean() == pytest.approx(expected_innovative_transmissions(m, q), rel=0.01)


# energy model

def test_energy_nc_packet_examples():
    assert energy_nc_packet(1, EnergyParams(1, 1, 1, L=8, q=8)) == 2
    assert energy_nc_packet(2, UNIT_16) == 8
    assert energy_nc_packet(7, EnergyParams(0, 0, 0)) == 0


def test_energy_node_nc_examples():
    assert energy_node_nc(2, 3, UNIT_16) == 24
    assert energy_node_nc(2, 0, UNIT_16) == 0
    scaled = EnergyParams(5, 5, 5, L=16, q=8)
    assert energy_node_nc(2, 3, scaled) == 5 * energy_node_nc(2, 3, UNIT_16)


def test_energy_dc_examples():
    assert energy_dc_packet(2, UNIT_16) == 6
    assert energy_dc_packet(1, EnergyParams(1, 1, 1, L=8, q=8)) == 1
    p = EnergyParams(3, 2, 5, L=64, q=8)
    for m in range(1, 12):
        assert energy_dc_packet(m, p) == energy_nc_packet(m, p) - m * p.e_lfsr


def test_energy_node_dc_examples():
    assert energy_node_dc(4, 4, UNIT_16) == 0
    assert energy_node_dc(2, 3, UNIT_16) == 6
    p = EnergyParams()
    assert energy_node_dc(10, 11, p) == energy_dc_packet(10, p)


def test_source_savings_examples():
    assert source_energy_savings(2, 3, UNIT_16) == 18 == 24 - 6
    p = EnergyParams(0, 2, 3, L=32, q=8)
    assert source_energy_savings(3, 3, p) == 3 * 4 * (3 * 2 + 2 * 3)
    assert source_energy_savings(3, 7, EnergyParams(0, 0, 0)) == 0


rationals = st.fractions(min_value=0, max_value=1000, max_denominator=1000)


@settings(max_examples=1000, deadline=None)
@given(st.integers(1, 64), st.integers(0, 64), rationals, rationals, rationals,
       st.integers(1, 200), st.sampled_from([1, 2, 4, 8, 16]))
def test_savings_identity_exact(m, extra, e_lfsr, e_mul, e_add, symbols, q):
    p = EnergyParams(e_lfsr, e_mul, e_add, L=symbols * q, q=q)
    m_prime = m + extra
    assert source_energy_savings(m, m_prime, p) == \
        energy_node_nc(m, m_prime, p) - energy_node_dc(m, m_prime, p)


def test_total_transmitted_packets_anchors():
    assert total_transmitted_packets(15, [15] * 20, 0) == 315
    assert total_transmitted_packets(11, [11] * 20, 2) == 233
    assert total_transmitted_packets(9, [], 0) == 9
    assert 1 - 233 / 315 >= 0.25


def test_energy_report_consistency():
    p = EnergyParams(2, 1, 1)
    rep = energy_report(10, 11, p, [11] * 20, 2)
    assert rep.e_source_savings == rep.e_node_nc - rep.e_node_dc
    assert rep.total_packets == 233
    assert set(rep.as_dict()) == {"e_nc_packet", "e_node_nc", "e_dc_packet", "e_node_dc",
                                  "e_source_savings", "total_packets"}
    exact = energy_report(10, 11, EnergyParams(Fraction(1, 3), Fraction(2, 7), 1), [11])
    assert exact.e_source_savings == exact.e_node_nc - exact.e_node_dc
