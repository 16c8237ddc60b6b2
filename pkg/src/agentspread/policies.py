"""External-infection policies under one rate-vector contract.

A policy is the per-run handle the engine polls at event instants: it
reports per-node external rates (and fast aggregates), samples the target
of an external infection, and may declare an internal transition rate for
its own stochastic evolution (link rewiring). Handles are owned by a
single run; ``reset`` rebuilds all per-run state, and stochastic policies
derive their private stream from their own seed and the replicate index.

Rate conventions follow the homogeneous reading: an infected node may
still carry external rate (it is simply wasted), so randomized policies
remain state-oblivious, while targeted policies place rate on healthy
nodes only.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from heapq import heapify, heappop, heappush

from .engine import InfectionState
from .errors import InvalidParameterError
from .graphs import Graph, Partition
from .rng import CH_POLICY, UniformSampler, substream


class Policy:
    """Base contract; aggregate queries default to O(n) sums over rate_of."""

    kind = "abstract"
    l_min: float = 0.0
    l_max: float | None = None

    def reset(self, graph: Graph, state: InfectionState, replicate: int) -> None:
        pass

    def rate_of(self, node: int, state: InfectionState) -> float:
        raise NotImplementedError

    def total_rate(self, state: InfectionState) -> float:
        return sum(self.rate_of(v, state) for v in range(state.n))

    def healthy_rate(self, state: InfectionState) -> float:
        return sum(self.rate_of(v, state) for v in state.healthy)

    def sample_target(self, state: InfectionState, uni: UniformSampler) -> int:
        total = self.healthy_rate(state)
        x = uni.draw() * total
        acc = 0.0
        for v in state.healthy:
            acc += self.rate_of(v, state)
            if acc >= x:
                return v
        return state.healthy[-1]

    def internal_rate(self, state: InfectionState) -> float:
        return 0.0

    def apply_internal(self, state: InfectionState) -> None:
        raise NotImplementedError

    def on_infect(self, node: int, state: InfectionState) -> None:
        pass


class NullPolicy(Policy):
    """Zero external rate everywhere: the pure contact process."""

    kind = "null"
    l_min = 0.0
    l_max = 0.0

    def rate_of(self, node, state):
        return 0.0

    def total_rate(self, state):
        return 0.0

    def healthy_rate(self, state):
        return 0.0


class RandomHomogeneous(Policy):
    """Budget L spread uniformly: every node gets rate L/n at all times."""

    kind = "random_homogeneous"

    def __init__(self, L: float):
        if L <= 0:
            raise InvalidParameterError(f"L must be positive, got {L}")
        self.L = L
        self.l_min = L
        self.l_max = L
        self._per_node = 0.0

    def reset(self, graph, state, replicate):
        self._per_node = self.L / graph.n

    def rate_of(self, node, state):
        return self._per_node

    def total_rate(self, state):
        return self.L

    def healthy_rate(self, state):
        return self._per_node * state.healthy_count

    def sample_target(self, state, uni):
        healthy = state.healthy
        return healthy[int(uni.draw() * len(healthy))]


class GsiPolicy(Policy):
    """Greedy subgraph infection: the whole budget sits on one healthy node
    of a piece with the fewest infected nodes.

    Ties go to the lowest piece index, and inside a piece to the
    lowest-id healthy node; pieces without healthy nodes are skipped.
    """

    kind = "gsi"

    def __init__(self, partition: Partition, L: float):
        if L <= 0:
            raise InvalidParameterError(f"L must be positive, got {L}")
        self.partition = partition
        self.L = L
        self.l_min = L
        self.l_max = L
        self._n = sum(partition.piece_sizes)
        self._piece_of = partition.piece_of(self._n)

    def reset(self, graph, state, replicate):
        if graph.n != self._n:
            raise InvalidParameterError("partition does not match the graph")
        g = self.partition.g
        self._counts = [0] * g
        self._healthy = list(self.partition.piece_sizes)
        self._ptr = [0] * g
        self._heap = [(0, i) for i in range(g)]
        heapify(self._heap)

    def _support(self, state) -> int:
        heap = self._heap
        counts = self._counts
        while heap:
            cnt, piece = heap[0]
            if self._healthy[piece] == 0 or cnt != counts[piece]:
                heappop(heap)
                continue
            nodes = self.partition.pieces[piece]
            ptr = self._ptr[piece]
            infected = state.infected
            while infected[nodes[ptr]]:
                ptr += 1
            self._ptr[piece] = ptr
            return nodes[ptr]
        return -1

    def rate_of(self, node, state):
        if state.infected_count >= state.n:
            return 0.0
        return self.L if node == self._support(state) else 0.0

    def total_rate(self, state):
        return self.L if state.infected_count < state.n else 0.0

    healthy_rate = total_rate

    def sample_target(self, state, uni):
        return self._support(state)

    def on_infect(self, node, state):
        piece = self._piece_of[node]
        self._counts[piece] += 1
        self._healthy[piece] -= 1
        if self._healthy[piece] > 0:
            heappush(self._heap, (self._counts[piece], piece))


class _LinkRates(Policy):
    """Shared rate logic for long-range links: a link (a, b) contributes
    beta_link to a healthy endpoint once the far endpoint is infected."""

    beta_link: float
    _links: list[tuple[int, int]]

    def rate_of(self, node, state):
        if state.infected[node]:
            return 0.0
        infected = state.infected
        rate = 0.0
        for a, b in self._links:
            if a == node and infected[b]:
                rate += self.beta_link
            elif b == node and infected[a]:
                rate += self.beta_link
        return rate

    def healthy_rate(self, state):
        infected = state.infected
        total = 0.0
        for a, b in self._links:
            if infected[a] != infected[b]:
                total += self.beta_link
        return total

    total_rate = healthy_rate

    def sample_target(self, state, uni):
        x = uni.draw() * self.healthy_rate(state)
        infected = state.infected
        acc = 0.0
        last = -1
        for a, b in self._links:
            if infected[a] != infected[b]:
                acc += self.beta_link
                last = b if infected[a] else a
                if acc >= x:
                    return last
        return last


class StaticLinks(_LinkRates):
    """Fixed extra node pairs acting as long-range infection edges."""

    kind = "static_links"

    def __init__(self, links, beta_link: float):
        if beta_link <= 0:
            raise InvalidParameterError(f"beta_link must be positive, got {beta_link}")
        self.beta_link = beta_link
        self._given = [(int(a), int(b)) for a, b in links]
        self.l_min = 0.0
        self.l_max = beta_link * len(self._given)

    def reset(self, graph, state, replicate):
        for a, b in self._given:
            if not (0 <= a < graph.n and 0 <= b < graph.n):
                raise InvalidParameterError(f"link ({a},{b}) out of range")
        self._links = list(self._given)


class DynamicLinks(_LinkRates):
    """Long-range links that rewire both endpoints at an exponential rate.

    With rewire_rate=0 this is bit-identical to StaticLinks over the
    initially drawn links (no internal events are scheduled and the
    engine stream is untouched).
    """

    kind = "dynamic_links"

    def __init__(self, count: int, beta_link: float, rewire_rate: float, seed: int):
        if count < 1:
            raise InvalidParameterError(f"count must be >= 1, got {count}")
        if beta_link <= 0:
            raise InvalidParameterError(f"beta_link must be positive, got {beta_link}")
        if rewire_rate < 0:
            raise InvalidParameterError("rewire_rate must be nonnegative")
        self.count = count
        self.beta_link = beta_link
        self.rewire_rate = rewire_rate
        self.seed = seed
        self.l_min = 0.0
        self.l_max = beta_link * count

    def reset(self, graph, state, replicate):
        self._rng = substream(self.seed, replicate, CH_POLICY)
        n = graph.n
        self._links = [
            (int(self._rng.integers(n)), int(self._rng.integers(n)))
            for _ in range(self.count)
        ]
        self._n = n

    @property
    def links(self) -> list[tuple[int, int]]:
        return list(self._links)

    def internal_rate(self, state):
        return self.count * self.rewire_rate

    def apply_internal(self, state):
        i = int(self._rng.integers(self.count))
        n = self._n
        self._links[i] = (int(self._rng.integers(n)), int(self._rng.integers(n)))


class MobileAgents(Policy):
    """Agents parked on nodes, each infecting its node at a fixed rate.

    Initial positions are uniform over all nodes; placement happens at
    the same instant as the initial seeding, so an agent that lands on
    the origin just sits there (it never witnesses an infection of its
    node). Afterwards, when an agent's node becomes infected by any
    cause, it relocates to a node chosen uniformly at random among the
    still-healthy ones, which keeps it productive for the rest of the
    run; with no healthy node left the agent stays put.
    """

    kind = "mobile_agents"

    def __init__(
        self, agents: int, rate_per_agent: float, mobility: str = "uniform_jump", seed: int = 0
    ):
        if agents < 1:
            raise InvalidParameterError(f"agents must be >= 1, got {agents}")
        if rate_per_agent <= 0:
            raise InvalidParameterError("rate_per_agent must be positive")
        if mobility != "uniform_jump":
            raise InvalidParameterError(f"unknown mobility kind {mobility!r}")
        self.agents = agents
        self.rate = rate_per_agent
        self.seed = seed
        self.l_min = 0.0
        self.l_max = agents * rate_per_agent

    def reset(self, graph, state, replicate):
        self._rng = substream(self.seed, replicate, CH_POLICY)
        self._pos = [int(self._rng.integers(graph.n)) for _ in range(self.agents)]

    def rate_of(self, node, state):
        if state.infected[node]:
            return 0.0
        return self.rate * sum(1 for p in self._pos if p == node)

    def healthy_rate(self, state):
        infected = state.infected
        return self.rate * sum(1 for p in self._pos if not infected[p])

    total_rate = healthy_rate

    def sample_target(self, state, uni):
        infected = state.infected
        live = [p for p in self._pos if not infected[p]]
        return live[int(uni.draw() * len(live))]

    def on_infect(self, node, state):
        if state.infected_count <= 1:  # initial seeding, nothing witnessed
            return
        healthy = state.healthy
        if not healthy:
            return
        for i, p in enumerate(self._pos):
            if p == node:
                self._pos[i] = healthy[int(self._rng.integers(len(healthy)))]


class GreedyFrontierAdversary(Policy):
    """Heuristic adversary: the whole budget targets a healthy node at
    maximum hop distance from the infected set.

    Distances to the infected set only shrink, so they are maintained by
    decremental BFS relaxation from each newly infected node, and the
    current farthest healthy node comes from a lazily filtered max-heap
    (ties to the lowest node id).
    """

    kind = "greedy_frontier_adversary"

    def __init__(self, L: float):
        if L <= 0:
            raise InvalidParameterError(f"L must be positive, got {L}")
        self.L = L
        self.l_min = L
        self.l_max = L

    def reset(self, graph, state, replicate):
        self._adj = graph.adjacency
        n = graph.n
        self._dist = [n + 1] * n
        # every node starts at the unreachable sentinel distance, so nodes
        # no relaxation wave ever reaches (other components) stay the
        # farthest targets
        self._heap = [(-(n + 1), v) for v in range(n)]

    def _target(self, state) -> int:
        heap = self._heap
        dist = self._dist
        infected = state.infected
        while heap:
            nd, v = heap[0]
            if infected[v] or dist[v] != -nd:
                heappop(heap)
                continue
            return v
        return -1

    def rate_of(self, node, state):
        if state.infected_count >= state.n:
            return 0.0
        return self.L if node == self._target(state) else 0.0

    def total_rate(self, state):
        return self.L if state.infected_count < state.n else 0.0

    healthy_rate = total_rate

    def sample_target(self, state, uni):
        return self._target(state)

    def on_infect(self, node, state):
        dist = self._dist
        heap = self._heap
        adj = self._adj
        dist[node] = 0
        wave = deque([node])
        while wave:
            u = wave.popleft()
            du = dist[u] + 1
            for w in adj[u]:
                if du < dist[w]:
                    dist[w] = du
                    heappush(heap, (-du, w))
                    wave.append(w)


# ---------------------------------------------------------------------------
# Declarative construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolicySpec:
    """Declarative policy description, shareable across replicates."""

    kind: str
    L: float = 1.0
    links: tuple[tuple[int, int], ...] = ()
    beta_link: float = 1.0
    count: int = 1
    rewire_rate: float = 0.0
    agents: int = 1
    rate_per_agent: float = 1.0
    mobility: str = "uniform_jump"
    seed: int = 0
    partition: Partition | None = field(default=None, compare=False)


def null_policy() -> NullPolicy:
    return NullPolicy()


def random_homogeneous(L: float) -> RandomHomogeneous:
    return RandomHomogeneous(L)


def gsi(partition: Partition, L: float) -> GsiPolicy:
    return GsiPolicy(partition, L)


def static_links(links, beta_link: float) -> StaticLinks:
    return StaticLinks(links, beta_link)


def dynamic_links(count: int, beta_link: float, rewire_rate: float, seed: int) -> DynamicLinks:
    return DynamicLinks(count, beta_link, rewire_rate, seed)


def mobile_agents(
    agents: int, rate_per_agent: float, mobility: str = "uniform_jump", seed: int = 0
) -> MobileAgents:
    return MobileAgents(agents, rate_per_agent, mobility, seed)


def greedy_frontier_adversary(L: float) -> GreedyFrontierAdversary:
    return GreedyFrontierAdversary(L)


def build_policy(spec: PolicySpec, graph: Graph | None = None) -> Policy:
    """Instantiate a handle from a spec; gsi takes the family's canonical
    partition when none is given."""
    kind = spec.kind
    if kind == "null":
        return null_policy()
    if kind == "random_homogeneous":
        return random_homogeneous(spec.L)
    if kind == "gsi":
        part = spec.partition
        if part is None:
            if graph is None:
                raise InvalidParameterError("gsi needs a partition or a graph")
            part = canonical_partition(graph, spec.L)
        return gsi(part, spec.L)
    if kind == "static_links":
        return static_links(spec.links, spec.beta_link)
    if kind == "dynamic_links":
        return dynamic_links(spec.count, spec.beta_link, spec.rewire_rate, spec.seed)
    if kind == "mobile_agents":
        return mobile_agents(spec.agents, spec.rate_per_agent, spec.mobility, spec.seed)
    if kind == "greedy_frontier_adversary":
        return greedy_frontier_adversary(spec.L)
    raise InvalidParameterError(f"unknown policy kind {kind!r}")


def canonical_partition(graph: Graph, l_min: float = 1.0) -> Partition:
    """The family's standard partition: sqrt(n) segments on rings/lines,
    (n/l_min)^(1/(d+1))-sided sub-grids, tile chunks on RGGs."""
    from . import graphs as _g

    if graph.family in ("ring", "line"):
        return _g.partition_ring(graph)
    if graph.family == "grid":
        return _g.partition_grid(graph, l_min=l_min)
    if graph.family == "rgg":
        return _g.partition_rgg(graph, l_min=l_min)
    raise InvalidParameterError(f"no canonical partition for family {graph.family}")
