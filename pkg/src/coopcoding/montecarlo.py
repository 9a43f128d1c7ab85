"""Seeded trial orchestration, summary statistics and parameter sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict, field

import numpy as np

from .analysis import EnergyParams
from .codec import ConfigurationError
from .simnet import ExperimentResult, NetworkConfig, parse_policy, parse_scheme, run_experiment

SWEEP_AXES = ("m_prime", "p_loss", "r", "cluster_size", "K", "scheme", "policy")


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial, derived from (master_seed, trial) only."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial,)))


def skewness(samples) -> float:
    """Population skewness g1; NaN when the samples have zero variance."""
    x = np.asarray(samples, dtype=float)
    if x.size < 3:
        raise ValueError("skewness needs at least 3 samples")
    d = x - x.mean()
    m2 = np.mean(d ** 2)
    if m2 == 0:
        return math.nan
    return float(np.mean(d ** 3) / m2 ** 1.5)


def _histogram_moments(hist: np.ndarray) -> tuple[float, float, float]:
    n = int(hist.sum())
    k = np.arange(hist.size)
    mean = int((k * hist).sum()) / n
    d = k - mean
    var = float((hist * d ** 2).sum() / n)
    skew = float((hist * d ** 3).sum() / n / var ** 1.5) if var > 0 else math.nan
    return mean, var, skew


@dataclass
class SummaryStats:
    """Aggregates over ``trials`` experiments.

    The ``decoded_*`` fields describe the destination's rank after the first
    pass through the network, before any retransmission, which is the
    distribution reported per operating point. ``final_decoded_mean`` and
    ``success_probability`` are measured after the retransmission policy.
    """

    trials: int
    m: int
    success_probability: float
    confidence_halfwidth_95: float
    decoded_mean: float
    decoded_variance: float
    decoded_skewness: float
    decoded_histogram: list[int]
    final_decoded_mean: float
    mean_packets_transmitted: float
    mean_packets_retransmitted: float
    mean_coding_energy: float
    cluster_full_rank_fraction: list[float] = field(default_factory=list)
    mean_cluster_rank: list[float] = field(default_factory=list)
    first_hop_node_full_rank_fraction: float = 0.0

    @property
    def first_hop_rank_loss(self) -> float:
        """Fraction of trials in which cluster 1's transmissions lack rank m."""
        return 1.0 - self.cluster_full_rank_fraction[0]

    @property
    def success_sigma(self) -> float:
        p = self.success_probability
        return math.sqrt(p * (1 - p) / self.trials)

    def as_row(self) -> dict:
        row = asdict(self)
        row["decoded_histogram"] = " ".join(map(str, self.decoded_histogram))
        row.pop("cluster_full_rank_fraction")
        row.pop("mean_cluster_rank")
        row["first_hop_rank_loss"] = self.first_hop_rank_loss
        return row


def summarize(results: list[ExperimentResult]) -> SummaryStats:
    if not results:
        raise ValueError("no results to summarize")
    n = len(results)
    m = results[0].m
    first = np.array([r.first_pass_rank for r in results])
    final = np.array([r.decoded_count for r in results])
    hist = np.bincount(first, minlength=m + 1)[: m + 1]
    mean, var, skew = _histogram_moments(hist)
    successes = sum(r.success for r in results)
    p = successes / n
    ranks = np.array([r.per_cluster_rank for r in results])
    nodes = np.array([r.first_hop_full_rank_nodes for r in results])
    n1 = results[0].first_hop_nodes
    return SummaryStats(
        trials=n,
        m=m,
        success_probability=p,
        confidence_halfwidth_95=1.96 * math.sqrt(p * (1 - p) / n),
        decoded_mean=mean,
        decoded_variance=var,
        decoded_skewness=skew,
        decoded_histogram=[int(h) for h in hist],
        final_decoded_mean=int(final.sum()) / n,
        mean_packets_transmitted=sum(r.packets_transmitted for r in results) / n,
        mean_packets_retransmitted=sum(r.packets_retransmitted for r in results) / n,
        mean_coding_energy=math.fsum(r.coding_energy for r in results) / n,
        cluster_full_rank_fraction=[float(f) for f in (ranks == m).mean(axis=0)],
        mean_cluster_rank=[float(f) for f in ranks.mean(axis=0)],
        first_hop_node_full_rank_fraction=int(nodes.sum()) / (n * n1),
    )


def _run_chunk(args) -> list[ExperimentResult]:
    config, energy, master_seed, start, stop = args
    return [run_experiment(config, trial_rng(master_seed, t), energy, (master_seed, t))
            for t in range(start, stop)]


def simulate_trials(config: NetworkConfig, n_trials: int, master_seed: int,
                    workers: int = 1, energy: EnergyParams | None = None) -> list[ExperimentResult]:
    """Per-trial results in trial order, independent of ``workers``."""
    if n_trials < 1:
        raise ConfigurationError("n_trials must be >= 1")
    master_seed = int(master_seed)
    if workers <= 1 or n_trials < 2:
        return _run_chunk((config, energy, master_seed, 0, n_trials))
    chunk = max(1, math.ceil(n_trials / (workers * 4)))
    jobs = [(config, energy, master_seed, s, min(s + chunk, n_trials))
            for s in range(0, n_trials, chunk)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, jobs))
    return [r for part in parts for r in part]


def run_trials(config: NetworkConfig, n_trials: int, master_seed: int, workers: int = 1,
               energy: EnergyParams | None = None) -> SummaryStats:
    return summarize(simulate_trials(config, n_trials, master_seed, workers, energy))


def apply_axis(base: NetworkConfig, axis: str, value, linked: bool = True) -> NetworkConfig:
    """``base`` with one sweep parameter replaced.

    With ``linked`` set, sweeping ``m_prime`` also resizes every cluster to
    ``m_prime`` nodes. Sweeping ``r`` moves ``r_s`` along with it when the two
    were equal in ``base``.
    """
    if axis == "m_prime":
        value = int(value)
        sizes = (value,) * base.K if linked else base.cluster_sizes
        return base.with_(m_prime=value, cluster_sizes=sizes)
    if axis == "p_loss":
        return base.with_(p_loss=float(value))
    if axis == "r":
        value = int(value)
        return base.with_(r=value, r_s=value if base.r_s == base.r else base.r_s)
    if axis == "cluster_size":
        return base.with_(cluster_sizes=(int(value),) * base.K)
    if axis == "K":
        value = int(value)
        return base.with_(K=value, cluster_sizes=(base.cluster_sizes[0],) * value)
    if axis == "scheme":
        return base.with_(scheme=parse_scheme(value))
    if axis == "policy":
        return base.with_(policy=parse_policy(value))
    raise ConfigurationError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def sweep(base: NetworkConfig, axis: str, values, n_trials: int, master_seed: int,
          linked: bool = True, workers: int = 1,
          energy: EnergyParams | None = None) -> list[tuple[object, SummaryStats]]:
    """One SummaryStats per axis value, every row using the same master seed."""
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    configs = [(v, apply_axis(base, axis, v, linked)) for v in values]
    return [(v, run_trials(cfg, n_trials, master_seed, workers, energy)) for v, cfg in configs]
