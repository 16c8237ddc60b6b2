"""Bounding processes that sandwich the real spreading dynamics.

Upper side: the two-phase process (seed every partition piece by external
contact only, then spread along each piece's BFS tree only), which is
stochastically slower than the policies it models, and the per-piece
birth chain driven by conductance. Lower side: cluster-growth processes
in which new clusters arrive as a Poisson stream and grow without ever
interfering (a frontier pair on the line, SI growth on an exclusive
infinite lattice, and a diagonal-grid tile process), which are
stochastically faster than any policy with the same budget.

Lattice clusters allocate sites lazily in hash-indexed windows, so there
is no truncation boundary. Cluster sites are packed into integers (21
bits per axis, offset binary), which keeps neighbour arithmetic cheap.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, replace

from .engine import EngineConfig, finish_times, simulate_batch
from .errors import InvalidParameterError
from .graphs import Graph, Partition
from .policies import PolicySpec, build_policy
from .rng import CH_PROCESS, ExpSampler, UniformSampler, substream

_PATH_POINTS = 4096  # count-path export cap per run


# ---------------------------------------------------------------------------
# Two-phase upper process
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoPhaseTrace:
    """Finish time of one two-phase run, split into its phases."""

    phase1: float
    phase2: float
    piece_seeds: tuple[int, ...]

    @property
    def finish_time(self) -> float:
        return self.phase1 + self.phase2


def two_phase_process(
    g: Graph,
    partition: Partition,
    L: float,
    mode: str,
    seed: int,
    replicate: int = 0,
    beta: float = 1.0,
) -> TwoPhaseTrace:
    """Sample the two-phase dominating process once.

    Phase 1 infects one designated first node per piece: in
    ``homogeneous`` mode piece i is seeded at rate L*size_i/n
    independently and the phase ends at the max (seed node uniform in the
    piece); in ``sequential`` mode pieces are seeded one after another at
    rate L each, the phase lasting the sum (seed node = lowest id, the
    greedy policy's tie-break). Phase 2 spreads intrinsically along each
    piece's BFS tree from its seed, never across pieces, and ends when
    the slowest piece fills.
    """
    if mode not in ("homogeneous", "sequential"):
        raise InvalidParameterError(f"unknown two-phase mode {mode!r}")
    if L <= 0:
        raise InvalidParameterError(f"L must be positive, got {L}")
    rng = substream(seed, replicate, CH_PROCESS)
    exp = ExpSampler(rng)
    uni = UniformSampler(rng)
    n = g.n

    seeds = []
    if mode == "homogeneous":
        t1 = 0.0
        for piece in partition.pieces:
            rate = L * len(piece) / n
            t1 = max(t1, exp.draw() / rate)
            seeds.append(piece[int(uni.draw() * len(piece))])
    else:
        t1 = 0.0
        for piece in partition.pieces:
            t1 += exp.draw() / L
            seeds.append(piece[0])

    t2 = 0.0
    adj = g.adjacency
    for piece, root in zip(partition.pieces, seeds):
        members = set(piece)
        arrival = {root: 0.0}
        queue = deque([root])  # BFS order: tree edges form the shortest-path tree
        piece_max = 0.0
        while queue:
            u = queue.popleft()
            tu = arrival[u]
            for v in adj[u]:
                if v in members and v not in arrival:
                    tv = tu + exp.draw() / beta
                    arrival[v] = tv
                    queue.append(v)
                    if tv > piece_max:
                        piece_max = tv
        t2 = max(t2, piece_max)
    return TwoPhaseTrace(phase1=t1, phase2=t2, piece_seeds=tuple(seeds))


def two_phase_batch(
    g: Graph,
    partition: Partition,
    L: float,
    mode: str,
    seed: int,
    replicates: int,
    beta: float = 1.0,
) -> list[TwoPhaseTrace]:
    return [
        two_phase_process(g, partition, L, mode, seed, replicate=k, beta=beta)
        for k in range(replicates)
    ]


def dominance_check(
    g: Graph,
    partition: Partition,
    policy: PolicySpec,
    L: float,
    replicates: int,
    seed: int,
    beta: float = 1.0,
):
    """Matched batches of the real process vs the two-phase process.

    The pairing is fixed: the homogeneous two-phase mode bounds the
    random-homogeneous policy, the sequential mode bounds the greedy
    subgraph policy. Returns the decile-ordering verdict for
    T_real <= T_two_phase.
    """
    from .analytics import dominance_report  # local import breaks the module cycle

    if policy.kind == "random_homogeneous":
        mode = "homogeneous"
    elif policy.kind == "gsi":
        mode = "sequential"
    else:
        raise InvalidParameterError(
            f"dominance_check pairs random_homogeneous or gsi, got {policy.kind!r}"
        )
    spec = replace(policy, L=L, partition=partition)
    handle = build_policy(spec, g)
    cfg = EngineConfig(beta=beta, seed=seed)
    real = finish_times(simulate_batch(g, handle, cfg, replicates))
    upper = [
        tp.finish_time
        for tp in two_phase_batch(g, partition, L, mode, seed, replicates, beta=beta)
    ]
    return dominance_report(real, upper, seed=seed)


# ---------------------------------------------------------------------------
# Conductance birth chain
# ---------------------------------------------------------------------------


def _chain_rates(size: int, psi: float) -> list[float]:
    # j -> j+1 at rate j*psi while j <= size/2, then (size-j)*psi.
    return [
        (j if 2 * j <= size else size - j) * psi for j in range(1, size)
    ]


def conductance_chain(piece_size: int, psi: float, seed: int, replicate: int = 0) -> float:
    """Absorption time of the conductance-driven birth chain from 1 to size."""
    if piece_size < 2:
        raise InvalidParameterError(f"piece_size must be >= 2, got {piece_size}")
    if psi <= 0:
        raise InvalidParameterError(f"psi must be positive, got {psi}")
    rng = substream(seed, replicate, CH_PROCESS)
    exp = ExpSampler(rng)
    return sum(exp.draw() / rate for rate in _chain_rates(piece_size, psi))


def chain_sojourn_mean(piece_size: int, psi: float) -> float:
    """Exact expected absorption time: the sum of sojourn means."""
    if piece_size < 2:
        raise InvalidParameterError(f"piece_size must be >= 2, got {piece_size}")
    return sum(1.0 / rate for rate in _chain_rates(piece_size, psi))


# ---------------------------------------------------------------------------
# Cluster-growth lower processes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClusterProcessConfig:
    """Parameters of a cluster-growth run.

    ``growth`` selects the cluster dynamics: "line" (each cluster adds
    points at rate 2*beta), "fpp" (SI growth on an exclusive infinite
    dim-dimensional lattice at rate beta per edge), or "diagonal"
    (8-neighbour lattice at rate mu_eff per edge, each site worth
    ``occupancy`` points).
    """

    growth: str
    target_count: int
    seeding_rate: float = 1.0
    beta: float = 1.0
    dim: int = 2
    mu_eff: float = 1.0
    occupancy: int = 1
    max_time: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.growth not in ("line", "fpp", "diagonal"):
            raise InvalidParameterError(f"unknown growth kind {self.growth!r}")
        if self.seeding_rate <= 0:
            raise InvalidParameterError("seeding_rate must be positive")
        if self.target_count < 1:
            raise InvalidParameterError("target_count must be >= 1")
        if self.growth == "fpp" and self.dim not in (1, 2, 3):
            raise InvalidParameterError(f"fpp dim must be 1, 2 or 3, got {self.dim}")
        if self.growth == "diagonal" and self.mu_eff <= 0:
            raise InvalidParameterError("mu_eff must be positive")
        if self.occupancy < 1:
            raise InvalidParameterError("occupancy must be >= 1")


@dataclass
class ClusterTrace:
    """Outcome of one cluster-process run."""

    cluster_birth_times: list[float]
    total_count_path: list[tuple[float, int]]
    hitting_time: float | None
    events: int = 0

    def count_at(self, t: float) -> int:
        """Step-function lookup of the total count at time t."""
        times = [p[0] for p in self.total_count_path]
        i = bisect_right(times, t)
        return self.total_count_path[i - 1][1] if i else 0


def _downsample(path: list[tuple[float, int]]) -> list[tuple[float, int]]:
    if len(path) <= _PATH_POINTS:
        return path
    stride = (len(path) - 1) / (_PATH_POINTS - 1)
    out = [path[int(round(i * stride))] for i in range(_PATH_POINTS - 1)]
    out.append(path[-1])
    return out


def line_clusters(cfg: ClusterProcessConfig, replicate: int = 0) -> ClusterTrace:
    """Line cluster process: Poisson cluster arrivals, growth at 2*beta each.

    The count is the number of growth points added across clusters (the
    accounting whose mean curve is exactly beta*t^2 + 2*beta*t at unit
    seeding rate); cluster seeds themselves are not counted.
    """
    if cfg.growth != "line":
        raise InvalidParameterError("cfg.growth must be 'line'")
    rng = substream(cfg.seed, replicate, CH_PROCESS)
    exp = ExpSampler(rng)
    uni = UniformSampler(rng)
    lam = cfg.seeding_rate
    two_beta = 2.0 * cfg.beta
    target = cfg.target_count
    max_time = cfg.max_time

    t = 0.0
    count = 0
    clusters = 1
    births = [0.0]
    path = [(0.0, 0)]
    events = 0
    while count < target:
        rate = lam + two_beta * clusters
        t += exp.draw() / rate
        if max_time is not None and t > max_time:
            t = max_time
            break
        events += 1
        if uni.draw() * rate < lam:
            clusters += 1
            births.append(t)
        else:
            count += 1
            path.append((t, count))
    hitting = t if count >= target else None
    return ClusterTrace(
        cluster_birth_times=births,
        total_count_path=_downsample(path),
        hitting_time=hitting,
        events=events,
    )


# Site packing: 21 bits per axis, offset-binary so coordinates may be negative.
_BITS = 21
_HALF = 1 << 20
_MASK = (1 << _BITS) - 1


def _deltas(dim: int, diagonal: bool) -> list[int]:
    if diagonal:
        out = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx or dy:
                    out.append(dx + (dy << _BITS))
        return out
    return [s << (_BITS * a) for a in range(dim) for s in (1, -1)]


def _origin(dim: int) -> int:
    return sum(_HALF << (_BITS * a) for a in range(dim))


def _linf_radius(site: int, dim: int) -> int:
    return max(abs(((site >> (_BITS * a)) & _MASK) - _HALF) for a in range(dim))


class _LatticeCluster:
    """One growing cluster: infected-site set plus a swap-remove list of
    boundary edges for uniform edge sampling."""

    __slots__ = ("infected", "edges", "pos", "deltas", "dim", "max_radius")

    def __init__(self, deltas: list[int], dim: int):
        self.deltas = deltas
        self.dim = dim
        origin = _origin(dim)
        self.infected = {origin}
        self.edges: list[tuple[int, int]] = [(origin, origin + d) for d in deltas]
        self.pos = {e: i for i, e in enumerate(self.edges)}
        self.max_radius = 0

    def boundary(self) -> int:
        return len(self.edges)

    def _remove(self, e: tuple[int, int]) -> None:
        i = self.pos.pop(e)
        last = self.edges.pop()
        if i < len(self.edges):
            self.edges[i] = last
            self.pos[last] = i

    def grow(self, uni: UniformSampler) -> int:
        """Fire one uniformly chosen boundary edge; return the new site."""
        edges = self.edges
        _, dst = edges[int(uni.draw() * len(edges))]
        infected = self.infected
        infected.add(dst)
        for d in self.deltas:
            w = dst + d
            if w in infected:
                self._remove((w, dst))
            else:
                e = (dst, w)
                self.pos[e] = len(edges)
                edges.append(e)
        r = _linf_radius(dst, self.dim)
        if r > self.max_radius:
            self.max_radius = r
        return dst


def _lattice_cluster_process(
    cfg: ClusterProcessConfig,
    replicate: int,
    deltas: list[int],
    dim: int,
    edge_rate: float,
    points_per_site: int,
) -> ClusterTrace:
    rng = substream(cfg.seed, replicate, CH_PROCESS)
    exp = ExpSampler(rng)
    uni = UniformSampler(rng)
    lam = cfg.seeding_rate
    target = cfg.target_count
    max_time = cfg.max_time

    clusters = [_LatticeCluster(deltas, dim)]
    births = [0.0]
    boundary_total = clusters[0].boundary()
    count = points_per_site  # the initial cluster's origin site
    t = 0.0
    path = [(0.0, count)]
    events = 0
    while count < target:
        rate = lam + edge_rate * boundary_total
        t += exp.draw() / rate
        if max_time is not None and t > max_time:
            t = max_time
            break
        events += 1
        x = uni.draw() * rate
        if x < lam:
            c = _LatticeCluster(deltas, dim)
            clusters.append(c)
            births.append(t)
            boundary_total += c.boundary()
        else:
            # pick a cluster proportionally to its boundary edge count
            x = (x - lam) / edge_rate
            acc = 0.0
            chosen = clusters[-1]
            for c in clusters:
                acc += c.boundary()
                if acc > x:
                    chosen = c
                    break
            before = chosen.boundary()
            chosen.grow(uni)
            boundary_total += chosen.boundary() - before
        count += points_per_site
        path.append((t, count))
    hitting = t if count >= target else None
    return ClusterTrace(
        cluster_birth_times=births,
        total_count_path=_downsample(path),
        hitting_time=hitting,
        events=events,
    )


def fpp_clusters(cfg: ClusterProcessConfig, replicate: int = 0) -> ClusterTrace:
    """Cluster process with SI growth on exclusive infinite d-dim lattices.

    Each cluster counts its occupied sites (the origin included); the
    total across clusters hitting the target stops the run.
    """
    if cfg.growth != "fpp":
        raise InvalidParameterError("cfg.growth must be 'fpp'")
    return _lattice_cluster_process(
        cfg, replicate, _deltas(cfg.dim, diagonal=False), cfg.dim, cfg.beta, 1
    )


def diagonal_grid_clusters(cfg: ClusterProcessConfig, replicate: int = 0) -> ClusterTrace:
    """Tile process on the 8-neighbour planar lattice at rate mu_eff per
    edge, each occupied site worth ``occupancy`` points."""
    if cfg.growth != "diagonal":
        raise InvalidParameterError("cfg.growth must be 'diagonal'")
    return _lattice_cluster_process(
        cfg, replicate, _deltas(2, diagonal=True), 2, cfg.mu_eff, cfg.occupancy
    )


def run_cluster_process(cfg: ClusterProcessConfig, replicate: int = 0) -> ClusterTrace:
    if cfg.growth == "line":
        return line_clusters(cfg, replicate)
    if cfg.growth == "fpp":
        return fpp_clusters(cfg, replicate)
    return diagonal_grid_clusters(cfg, replicate)


def sample_hitting_times(cfg: ClusterProcessConfig, replicates: int) -> list[float]:
    """Hitting times over independent replicates (per-replicate streams)."""
    if replicates < 1:
        raise InvalidParameterError("replicates must be >= 1")
    out = []
    for k in range(replicates):
        trace = run_cluster_process(cfg, k)
        if trace.hitting_time is None:
            raise InvalidParameterError(
                "cluster run hit max_time before the target count"
            )
        out.append(trace.hitting_time)
    return out


def write_cluster_csv(trace: ClusterTrace, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("t,N\n")
        for t, n in trace.total_count_path:
            fh.write(f"{t:.17g},{n}\n")


# ---------------------------------------------------------------------------
# Single-cluster shape statistics
# ---------------------------------------------------------------------------


@dataclass
class ShapeEstimate:
    """Radius growth of a single cluster across replicates."""

    times: list[float]
    max_radius_linf: list[float]  # mean over replicates of the running max radius
    fitted_rate: float
    envelope_rate: float
    exceed_counts: list[int]
    replicates: int


def shape_estimate(
    growth: str,
    times: list[float],
    replicates: int,
    seed: int,
    dim: int = 2,
    beta: float = 1.0,
    mu_eff: float = 1.0,
    envelope_rate: float | None = None,
) -> ShapeEstimate:
    """Grow single clusters (no seeding) and track the max L-inf radius.

    ``fitted_rate`` is the through-origin slope of mean radius vs time;
    the exceedance counts compare per-run radii against envelope_rate*t
    (default: 1.25x the fitted rate).
    """
    if not times or any(t <= 0 for t in times):
        raise InvalidParameterError("times must be positive")
    times = sorted(times)
    if growth == "fpp":
        deltas, d, rate = _deltas(dim, False), dim, beta
    elif growth == "diagonal":
        deltas, d, rate = _deltas(2, True), 2, mu_eff
    else:
        raise InvalidParameterError(f"shape_estimate needs a lattice growth, got {growth!r}")

    radii = [[0.0] * len(times) for _ in range(replicates)]
    for k in range(replicates):
        rng = substream(seed, k, CH_PROCESS)
        exp = ExpSampler(rng)
        uni = UniformSampler(rng)
        cluster = _LatticeCluster(deltas, d)
        t = 0.0
        idx = 0
        horizon = times[-1]
        while t <= horizon:
            t += exp.draw() / (rate * cluster.boundary())
            while idx < len(times) and times[idx] < t:
                radii[k][idx] = cluster.max_radius
                idx += 1
            if idx == len(times):
                break
            cluster.grow(uni)
        while idx < len(times):
            radii[k][idx] = cluster.max_radius
            idx += 1

    mean_radius = [
        math.fsum(radii[k][i] for k in range(replicates)) / replicates
        for i in range(len(times))
    ]
    num = math.fsum(r * t for r, t in zip(mean_radius, times))
    den = math.fsum(t * t for t in times)
    fitted = num / den
    env = envelope_rate if envelope_rate is not None else 1.25 * fitted
    exceed = [
        sum(1 for k in range(replicates) if radii[k][i] > env * times[i])
        for i in range(len(times))
    ]
    return ShapeEstimate(
        times=list(times),
        max_radius_linf=mean_radius,
        fitted_rate=fitted,
        envelope_rate=env,
        exceed_counts=exceed,
        replicates=replicates,
    )


def write_shape_csv(est: ShapeEstimate, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("t,max_radius,exceed_count\n")
        for t, r, c in zip(est.times, est.max_radius_linf, est.exceed_counts):
            fh.write(f"{t:.17g},{r:.17g},{c}\n")


# ---------------------------------------------------------------------------
# Bound functionals
# ---------------------------------------------------------------------------


def bound_calculator(
    g_count: float, s_size: float, d_diam: float, psi: float, l_min: float
) -> tuple[float, float]:
    """The two spreading-time bound functionals:
    h = max(g/l_min, d) and k = max(g/l_min, ln(s)/psi)."""
    for name, v in (
        ("g_count", g_count),
        ("s_size", s_size),
        ("d_diam", d_diam),
        ("psi", psi),
        ("l_min", l_min),
    ):
        if v <= 0:
            raise InvalidParameterError(f"{name} must be positive, got {v}")
    h = max(g_count / l_min, d_diam)
    k = max(g_count / l_min, math.log(s_size) / psi)
    return h, k
