import math

import numpy as np
import pytest

from coopcoding.codec import ConfigurationError
from coopcoding.montecarlo import (
    SWEEP_AXES,
    apply_axis,
    run_trials,
    simulate_trials,
    skewness,
    summarize,
    sweep,
    trial_rng,
)
from coopcoding.simnet import NetworkConfig, Policy, Scheme

SMALL = NetworkConfig(m=4, m_prime=5, K=4, r=3, p_loss=0.1, policy="last_cluster")


def test_skewness_examples():
    assert skewness([1, 2, 3]) == 0.0
    assert skewness([0, 0, 10]) > 0
    assert skewness([0, 10, 10]) < 0
    assert math.isnan(skewness([4, 4, 4]))
    with pytest.raises(ValueError):
        skewness([1, 2])


def test_skewness_matches_direct_formula():
    x = np.random.default_rng(0).exponential(size=500)
    d = x - x.mean()
    g1 = np.mean(d ** 3) / np.mean(d ** 2) ** 1.5
    assert skewness(x) == pytest.approx(g1)


def test_trial_streams_are_independent_of_each_other():
    a = trial_rng(7, 3).integers(0, 1 << 30, 4)
    assert np.array_equal(a, trial_rng(7, 3).integers(0, 1 << 30, 4))
    assert not np.array_equal(a, trial_rng(7, 4).integers(0, 1 << 30, 4))
    assert not np.array_equal(a, trial_rng(8, 3).integers(0, 1 << 30, 4))


def test_summary_consistency():
    results = simulate_trials(SMALL, 300, 11)
    stats = summarize(results)
    assert sum(stats.decoded_histogram) == stats.trials == 300
    assert len(stats.decoded_histogram) == SMALL.m + 1
    first = np.array([r.first_pass_rank for r in results])
    hist = np.array(stats.decoded_histogram)
    assert stats.decoded_mean == (hist * np.arange(hist.size)).sum() / 300 == first.sum() / 300
    assert stats.decoded_mean <= SMALL.m
    assert stats.decoded_variance == pytest.approx(first.var())
    assert stats.decoded_skewness == pytest.approx(skewness(first))
    p = stats.success_probability
    assert p == sum(r.success for r in results) / 300
    assert stats.confidence_halfwidth_95 == 1.96 * math.sqrt(p * (1 - p) / 300)
    assert stats.mean_packets_transmitted == sum(r.packets_transmitted for r in results) / 300
    assert len(stats.cluster_full_rank_fraction) == SMALL.K
    assert 0 <= stats.first_hop_rank_loss <= 1


def test_trivial_success():
    cfg = NetworkConfig(m=5, m_prime=6, r=6, p_loss=0.0, scheme="CDC", K=3)
    stats = run_trials(cfg, 100, 1)
    assert stats.success_probability == 1.0
    assert stats.decoded_mean == 5
    assert math.isnan(stats.decoded_skewness)
    assert stats.confidence_halfwidth_95 == 0


def test_reproducible_and_parallel_invariant():
    a = run_trials(SMALL, 60, 99)
    b = run_trials(SMALL, 60, 99)
    c = run_trials(SMALL, 60, 99, workers=3)
    assert a == b == c
    assert simulate_trials(SMALL, 25, 5) == simulate_trials(SMALL, 25, 5, workers=2)


def test_trials_must_be_positive():
    with pytest.raises(ConfigurationError):
        run_trials(SMALL, 0, 1)


def test_apply_axis():
    base = NetworkConfig(m_prime=11, r=6)
    assert apply_axis(base, "m_prime", 14).cluster_sizes == (14,) * 20
    assert apply_axis(base, "m_prime", 14, linked=False).cluster_sizes == (11,) * 20
    assert apply_axis(base, "r", 8).r_s == 8
    assert apply_axis(base, "cluster_size", 13).cluster_sizes == (13,) * 20
    assert apply_axis(base, "K", 5).cluster_sizes == (11,) * 5
    assert apply_axis(base, "scheme", "cdc").scheme is Scheme.CDC
    assert apply_axis(base, "policy", "source").policy is Policy.SOURCE_RETRANSMIT
    assert apply_axis(base, "p_loss", "0.2").p_loss == 0.2
    with pytest.raises(ConfigurationError):
        apply_axis(base, "colour", 1)
    with pytest.raises(ConfigurationError):
        sweep(base, "colour", [1], 1, 1)
    assert set(SWEEP_AXES) == {"m_prime", "p_loss", "r", "cluster_size", "K", "scheme", "policy"}


def test_sweep_m_prime_monotone():
    base = NetworkConfig(m=10, r=6, p_loss=0.05)
    table = sweep(base, "m_prime", range(10, 17), 400, 2024)
    assert [v for v, _ in table] == list(range(10, 17))
    probs = [s.success_probability for _, s in table]
    assert all(b >= a for a, b in zip(probs, probs[1:])), probs
    assert probs[0] < 0.8 and probs[-1] > 0.99


def test_sweep_cluster_size_monotone():
    base = NetworkConfig(m=10, m_prime=11, r=6, p_loss=0.10)
    table = sweep(base, "cluster_size", [10, 11, 12, 13, 14], 400, 5)
    probs = [s.success_probability for _, s in table]
    assert all(b >= a for a, b in zip(probs, probs[1:])), probs


def test_sweep_hops_roughly_invariant():
    base = NetworkConfig(m=10, m_prime=15, r=8, p_loss=0.05)
    table = sweep(base, "K", [5, 10, 20], 400, 8)
    probs = [s.success_probability for _, s in table]
    assert max(probs) - min(probs) < 0.02, probs
