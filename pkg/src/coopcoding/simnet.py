"""Packet-level model of a source, K relay clusters and a destination.

Each cluster node recodes whatever it received from the previous hop into a
single packet and broadcasts it to its ``r`` linked nodes in the next
cluster; every copy is lost independently with probability ``p_loss``. The
source broadcasts each of its ``m_prime`` packets to ``r_s`` cluster-1
nodes drawn afresh per packet. Every cluster-K node has one lossy link to
the destination.

Only coding vectors are needed to decide decodability, so payloads are
carried (as extra columns of the coding matrices) only when
``NetworkConfig.verify_payload`` is set.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import analysis
from .analysis import EnergyParams
from .codec import ConfigurationError, batch_rank, dc_coefficients, rank, row_reduce
from .gf import FieldContext


class Scheme(str, enum.Enum):
    CNC = "CNC"
    CDC = "CDC"


class Policy(str, enum.Enum):
    NONE = "none"
    LAST_CLUSTER = "last_cluster"
    LAST_FULL_RANK_CLUSTER = "last_full_rank_cluster"
    SOURCE_RETRANSMIT = "source"


_POLICY_ALIASES = {
    "none": Policy.NONE,
    "lastcluster": Policy.LAST_CLUSTER,
    "last_cluster": Policy.LAST_CLUSTER,
    "lastfullrankcluster": Policy.LAST_FULL_RANK_CLUSTER,
    "last_full_rank_cluster": Policy.LAST_FULL_RANK_CLUSTER,
    "last_full_rank": Policy.LAST_FULL_RANK_CLUSTER,
    "source": Policy.SOURCE_RETRANSMIT,
    "sourceretransmit": Policy.SOURCE_RETRANSMIT,
    "source_retransmit": Policy.SOURCE_RETRANSMIT,
}


def parse_policy(value) -> Policy:
    if isinstance(value, Policy):
        return value
    key = str(value).strip().lower().replace("-", "_")
    try:
        return _POLICY_ALIASES[key]
    except KeyError:
        raise ConfigurationError(f"unknown retransmission policy {value!r}") from None


def parse_scheme(value) -> Scheme:
    if isinstance(value, Scheme):
        return value
    try:
        return Scheme(str(value).strip().upper())
    except ValueError:
        raise ConfigurationError(f"unknown coding scheme {value!r}") from None


@lru_cache(maxsize=None)
def field_for(q: int, reduction_polynomial: int | None = None) -> FieldContext:
    return FieldContext(q, reduction_polynomial)


@dataclass(frozen=True)
class NetworkConfig:
    """Topology, coding and retransmission parameters for one experiment.

    ``cluster_sizes`` defaults to ``K`` clusters of ``m_prime`` nodes and
    ``r_s`` defaults to ``r``.
    """

    m: int = 10
    m_prime: int = 11
    K: int = 20
    cluster_sizes: tuple[int, ...] | None = None
    r: int = 6
    r_s: int | None = None
    p_loss: float = 0.05
    scheme: Scheme = Scheme.CNC
    policy: Policy = Policy.NONE
    q: int = 8
    L: int = 800
    max_retransmission_rounds: int = 3
    systematic: bool = True
    reduction_polynomial: int | None = None
    verify_payload: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", parse_scheme(self.scheme))
        object.__setattr__(self, "policy", parse_policy(self.policy))
        if self.cluster_sizes is None:
            object.__setattr__(self, "cluster_sizes", (self.m_prime,) * self.K)
        else:
            object.__setattr__(self, "cluster_sizes", tuple(int(n) for n in self.cluster_sizes))
        if self.r_s is None:
            object.__setattr__(self, "r_s", self.r)
        self.validate()

    def validate(self) -> None:
        if self.m < 1:
            raise ConfigurationError("m must be >= 1")
        if self.m_prime < self.m:
            raise ConfigurationError(f"m_prime={self.m_prime} < m={self.m}")
        if self.K < 1:
            raise ConfigurationError("K must be >= 1")
        if len(self.cluster_sizes) != self.K:
            raise ConfigurationError(
                f"{len(self.cluster_sizes)} cluster sizes given for K={self.K}")
        if min(self.cluster_sizes) < 1:
            raise ConfigurationError("every cluster needs at least one node")
        if not 1 <= self.r_s <= self.cluster_sizes[0]:
            raise ConfigurationError(
                f"r_s={self.r_s} must be in [1, n_1={self.cluster_sizes[0]}]")
        if self.K > 1 and not 1 <= self.r <= min(self.cluster_sizes[1:]):
            raise ConfigurationError(
                f"r={self.r} must be in [1, min(n_2..n_K)={min(self.cluster_sizes[1:])}]")
        if not 0.0 <= self.p_loss <= 1.0:
            raise ConfigurationError("p_loss must lie in [0, 1]")
        if self.max_retransmission_rounds < 0:
            raise ConfigurationError("max_retransmission_rounds must be >= 0")
        if self.L < self.q or self.L % self.q:
            raise ConfigurationError(f"L={self.L} must be a positive multiple of q={self.q}")
        if self.scheme is Scheme.CDC:
            rows = self.m_prime - self.m if self.systematic else self.m_prime
            if rows > (1 << self.q) - 1:
                raise ConfigurationError("m_prime exceeds the Vandermonde evaluation points")
        field_for(self.q, self.reduction_polynomial)

    @property
    def field(self) -> FieldContext:
        return field_for(self.q, self.reduction_polynomial)

    def with_(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)


@dataclass
class Topology:
    """Fixed node-to-node links; ``links[i]`` maps cluster i+1 to cluster i+2."""

    cluster_sizes: tuple[int, ...]
    r: int
    r_s: int
    links: list[np.ndarray]

    def sample_source_recipients(self, rng: np.random.Generator, packets: int) -> np.ndarray:
        return sample_fanout(rng, packets, self.cluster_sizes[0], self.r_s)


def sample_fanout(rng: np.random.Generator, senders: int, receivers: int,
                  fanout: int) -> np.ndarray:
    """Boolean (senders, receivers) matrix, each row a uniform ``fanout``-subset."""
    keys = rng.random((senders, receivers))
    chosen = np.argsort(keys, axis=1)[:, :fanout]
    out = np.zeros((senders, receivers), dtype=bool)
    np.put_along_axis(out, chosen, True, axis=1)
    return out


def build_topology(config: NetworkConfig, rng: np.random.Generator) -> Topology:
    sizes = config.cluster_sizes
    links = [sample_fanout(rng, sizes[i], sizes[i + 1], config.r) for i in range(config.K - 1)]
    return Topology(sizes, config.r, config.r_s, links)


@dataclass
class ClusterState:
    """What one cluster received and sent during the forward pass.

    ``inbox[s, j]`` is True when node j received the packet in row s of
    ``sender_vectors`` (the previous hop's transmissions). Rows of
    ``vectors`` are coding vectors, optionally followed by payload symbols.
    """

    cluster_index: int
    sender_vectors: np.ndarray
    inbox: np.ndarray
    vectors: np.ndarray
    transmitted: np.ndarray
    m: int
    field: FieldContext
    cluster_rank: int = 0
    extra_inbox: dict[int, list[np.ndarray]] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.inbox.shape[1]

    @property
    def node_inboxes(self) -> list[np.ndarray]:
        return [self.inbox_of(j) for j in range(self.size)]

    def inbox_of(self, node: int) -> np.ndarray:
        held = self.sender_vectors[self.inbox[:, node]]
        extra = self.extra_inbox.get(node)
        if extra:
            held = np.vstack([held, *extra])
        return held


def track_cluster_rank(state: ClusterState) -> int:
    """Rank of the coding vectors the cluster's nodes transmitted."""
    sent = state.vectors[state.transmitted, :state.m]
    return rank(sent, state.field)


@dataclass
class ExperimentResult:
    """Outcome of one experiment.

    ``first_pass_rank`` is the destination rank before any retransmission;
    ``destination_rank``, ``decoded_count`` and ``success`` reflect the
    state after the retransmission policy ran.
    """

    m: int
    destination_rank: int
    decoded_count: int
    success: bool
    first_pass_rank: int
    per_cluster_rank: list[int]
    last_full_rank_cluster: int | None
    packets_transmitted: int
    packets_retransmitted: int
    relay_transmissions: int
    coding_energy: float
    first_hop_full_rank_nodes: int = 0
    first_hop_nodes: int = 0
    retransmission_rounds: int = 0
    trial_seed: tuple[int, int] | None = None
    payload_verified: bool | None = None


@dataclass
class RetransmissionDelta:
    destination: np.ndarray
    packets_retransmitted: int = 0
    coding_energy: float = 0.0
    rounds: int = 0
    exhausted: bool = False


class _Network:
    """Per-experiment mutable state shared by the forward pass and retransmissions."""

    def __init__(self, config: NetworkConfig, rng: np.random.Generator,
                 energy: EnergyParams):
        self.config = config
        self.rng = rng
        self.energy = energy
        self.field = config.field
        self.m = config.m
        self.protection_index = config.m_prime - config.m if config.systematic else config.m_prime
        if config.verify_payload:
            symbols = config.L // config.q
            self.payload = self.field.random_elements(rng, (config.m, symbols))
        else:
            self.payload = np.zeros((config.m, 0), dtype=self.field.dtype)

    def source_rows(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=self.field.dtype)
        return np.hstack([coeffs, self.field.matmul(coeffs, self.payload)])

    def source_packets(self) -> tuple[np.ndarray, float]:
        cfg = self.config
        if cfg.scheme is Scheme.CNC:
            coeffs = self.field.random_elements(self.rng, (cfg.m_prime, cfg.m))
            cost = analysis.energy_node_nc(cfg.m, cfg.m_prime, self.energy)
        else:
            coeffs = dc_coefficients(cfg.m, cfg.m_prime, self.field, cfg.systematic)
            if cfg.systematic:
                cost = analysis.energy_node_dc(cfg.m, cfg.m_prime, self.energy)
            else:
                cost = cfg.m_prime * analysis.energy_dc_packet(cfg.m, self.energy)
        return self.source_rows(coeffs), cost

    def fresh_source_packets(self, count: int) -> tuple[np.ndarray, float]:
        cfg = self.config
        if cfg.scheme is Scheme.CNC:
            coeffs = self.field.random_elements(self.rng, (count, cfg.m))
            cost = count * analysis.energy_nc_packet(cfg.m, self.energy)
        else:
            j = (self.protection_index + np.arange(count))[:, None]
            self.protection_index += count
            coeffs = self.field.exp_table[(j * np.arange(cfg.m)[None, :]) % self.field.order]
            cost = count * analysis.energy_dc_packet(cfg.m, self.energy)
        return self.source_rows(coeffs), cost

    def deliver(self, fanout: np.ndarray) -> np.ndarray:
        if self.config.p_loss == 0.0:
            return fanout.copy()
        return fanout & (self.rng.random(fanout.shape) >= self.config.p_loss)

    def recode_all(self, sender_vectors: np.ndarray, delivered: np.ndarray) -> tuple[np.ndarray, float]:
        receivers = delivered.shape[1]
        coeffs = self.field.random_elements(self.rng, (receivers, delivered.shape[0]))
        coeffs[~delivered.T] = 0
        # coding energy is linear in inbox size: sum it over all transmitting nodes
        held = int(delivered.sum())
        senders = int(delivered.any(axis=0).sum())
        e = self.energy
        cost = held * e.e_lfsr + e.symbols * (held * e.e_mul + (held - senders) * e.e_add)
        return self.field.matmul(coeffs, sender_vectors), cost

    def recode_node(self, state: ClusterState, node: int) -> tuple[np.ndarray, float]:
        held = state.inbox_of(node)
        coeffs = self.field.random_elements(self.rng, (1, held.shape[0]))
        return self.field.matmul(coeffs, held)[0], analysis.energy_nc_packet(held.shape[0], self.energy)

    def destination_rank(self, destination: np.ndarray) -> int:
        return rank(destination[:, :self.m], self.field)


def _choose(rng: np.random.Generator, candidates: np.ndarray, count: int) -> np.ndarray:
    if count >= candidates.size:
        return candidates
    return np.sort(rng.choice(candidates, size=count, replace=False))


def _propagate(net: _Network, topology: Topology, states: list[ClusterState],
               start: int, packets: np.ndarray, senders: np.ndarray | None,
               budget: int, destination: list[np.ndarray]) -> tuple[int, float]:
    """Push retransmitted ``packets`` from cluster ``start`` (0 = source) to the destination.

    At every downstream cluster, at most ``budget`` of the nodes that heard a
    retransmitted packet recode and forward. Returns (transmissions, energy)
    for the hops after the initial senders.
    """
    cfg = net.config
    transmissions = 0
    energy = 0.0
    for c in range(start + 1, cfg.K + 1):
        state = states[c - 1]
        if c == 1:
            fanout = topology.sample_source_recipients(net.rng, packets.shape[0])
        else:
            fanout = topology.links[c - 2][senders]
        heard = net.deliver(fanout)
        receivers = np.flatnonzero(heard.any(axis=0))
        for j in receivers:
            state.extra_inbox.setdefault(int(j), []).append(packets[heard[:, j]])
        forwarders = _choose(net.rng, receivers, budget)
        if forwarders.size == 0:
            return transmissions, energy
        out = []
        for j in forwarders:
            vec, cost = net.recode_node(state, int(j))
            out.append(vec)
            energy += cost
        packets = np.vstack(out)
        senders = forwarders
        transmissions += forwarders.size
    arrived = net.deliver(np.ones(packets.shape[0], dtype=bool))
    destination.append(packets[arrived])
    return transmissions, energy


def apply_retransmission(net: _Network, topology: Topology, states: list[ClusterState],
                         destination: np.ndarray, policy: Policy | None = None) -> RetransmissionDelta:
    """Run the retransmission policy until the destination reaches rank m or rounds run out."""
    cfg = net.config
    policy = cfg.policy if policy is None else parse_policy(policy)
    delta = RetransmissionDelta(destination)
    current = net.destination_rank(destination)
    if current >= cfg.m or policy is Policy.NONE:
        return delta
    full_rank = [s.cluster_index for s in states if s.cluster_rank == cfg.m]
    received = [destination]
    for _ in range(cfg.max_retransmission_rounds):
        deficit = cfg.m - current
        if deficit <= 0:
            break
        delta.rounds += 1
        if policy is Policy.LAST_CLUSTER:
            start = cfg.K
        elif policy is Policy.LAST_FULL_RANK_CLUSTER:
            start = full_rank[-1] if full_rank else 0
        else:
            start = 0
        if start == 0:
            packets, cost = net.fresh_source_packets(deficit)
            senders = None
        else:
            state = states[start - 1]
            eligible = np.flatnonzero(state.transmitted)
            senders = _choose(net.rng, eligible, deficit)
            if senders.size == 0:
                continue
            vecs = []
            cost = 0.0
            for j in senders:
                vec, c = net.recode_node(state, int(j))
                vecs.append(vec)
                cost += c
            packets = np.vstack(vecs)
        delta.packets_retransmitted += packets.shape[0]
        delta.coding_energy += cost
        sent, energy = _propagate(net, topology, states, start, packets, senders, deficit, received)
        delta.packets_retransmitted += sent
        delta.coding_energy += energy
        delta.destination = np.vstack(received)
        current = net.destination_rank(delta.destination)
    delta.exhausted = current < cfg.m
    return delta


@dataclass
class ForwardPass:
    """State after the source's block has crossed the network once."""

    net: _Network
    topology: Topology
    source: np.ndarray
    states: list[ClusterState]
    destination: np.ndarray
    coding_energy: float
    relay_transmissions: int

    @property
    def first_pass_rank(self) -> int:
        return self.net.destination_rank(self.destination)


def forward_pass(config: NetworkConfig, rng: np.random.Generator | int,
                 energy: EnergyParams | None = None) -> ForwardPass:
    """Source encoding, K hops of recoding and delivery to the destination."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if energy is None:
        energy = EnergyParams(L=config.L, q=config.q)
    net = _Network(config, rng, energy)
    field_ = net.field
    m = config.m

    source, coding_energy = net.source_packets()
    topology = build_topology(config, rng)

    states: list[ClusterState] = []
    sender_vectors = source
    fanout = topology.sample_source_recipients(rng, config.m_prime)
    sending = np.ones(config.m_prime, dtype=bool)
    relay_transmissions = 0
    for i in range(config.K):
        delivered = net.deliver(fanout) & sending[:, None]
        vectors, cost = net.recode_all(sender_vectors, delivered)
        transmitted = delivered.any(axis=0)
        states.append(ClusterState(i + 1, sender_vectors, delivered, vectors, transmitted, m, field_))
        coding_energy += cost
        relay_transmissions += int(transmitted.sum())
        sender_vectors, sending = vectors, transmitted
        if i + 1 < config.K:
            fanout = topology.links[i]

    widest = max(config.cluster_sizes)
    stack = np.zeros((config.K, widest, m), dtype=field_.dtype)
    for i, state in enumerate(states):
        stack[i, :state.size] = np.where(state.transmitted[:, None], state.vectors[:, :m], 0)
    for state, r in zip(states, batch_rank(stack, field_)):
        state.cluster_rank = int(r)

    last = states[-1]
    arrived = last.transmitted & (rng.random(last.size) >= config.p_loss)
    return ForwardPass(net, topology, source, states, last.vectors[arrived],
                       coding_energy, relay_transmissions)


def first_hop_full_rank_nodes(fp: ForwardPass) -> int:
    """Cluster-1 nodes whose own inbox already spans the source space."""
    first = fp.states[0]
    m = fp.net.m
    held = np.where(first.inbox.T[:, :, None], first.sender_vectors[None, :, :m], 0)
    return int((batch_rank(held, fp.net.field) == m).sum())


def run_experiment(config: NetworkConfig, rng: np.random.Generator | int,
                   energy: EnergyParams | None = None,
                   trial_seed: tuple[int, int] | None = None) -> ExperimentResult:
    """Simulate one block transfer, including any retransmission rounds."""
    fp = forward_pass(config, rng, energy)
    m = config.m
    first_pass = fp.first_pass_rank
    delta = apply_retransmission(fp.net, fp.topology, fp.states, fp.destination)
    final_rank = fp.net.destination_rank(delta.destination) if delta.rounds else first_pass

    verified = None
    if config.verify_payload and final_rank == m:
        reduced, _ = row_reduce(delta.destination, fp.net.field, ncols=m)
        verified = bool(np.array_equal(reduced[:m, m:], fp.net.payload))

    per_cluster = [s.cluster_rank for s in fp.states]
    full = [s.cluster_index for s in fp.states if s.cluster_rank == m]
    return ExperimentResult(
        m=m,
        destination_rank=final_rank,
        decoded_count=final_rank,
        success=final_rank >= m,
        first_pass_rank=first_pass,
        per_cluster_rank=per_cluster,
        last_full_rank_cluster=full[-1] if full else None,
        packets_transmitted=config.m_prime + fp.relay_transmissions + delta.packets_retransmitted,
        packets_retransmitted=delta.packets_retransmitted,
        relay_transmissions=fp.relay_transmissions,
        first_hop_full_rank_nodes=first_hop_full_rank_nodes(fp),
        first_hop_nodes=fp.states[0].size,
        coding_energy=fp.coding_energy + delta.coding_energy,
        retransmission_rounds=delta.rounds,
        trial_seed=trial_seed,
        payload_verified=verified,
    )
