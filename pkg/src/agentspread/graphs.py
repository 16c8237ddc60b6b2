"""Graph families, partitions, and structural metrics.

Provides the node-level substrate for the simulator: ring/line graphs,
d-dimensional grids, random geometric graphs (RGG) and explicit edge
lists, together with the partition constructions used by the spreading
bounds (consecutive segments on rings, axis-aligned sub-grids, tile
chunks on RGGs), BFS spanning trees, exact diameters, and graph
conductance (exact by subset enumeration on small graphs, closed-form on
structured families).

Grid node indexing is row-major over ``{1..side}^d`` with the last axis
varying fastest; coordinates round-trip through ``node_id``/``coords``.
Graphs are immutable after construction and safe to share across
concurrent workers.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConnectivityError,
    InvalidFamilyError,
    InvalidParameterError,
    PartitionDegenerateError,
    SizeLimitError,
)
from .rng import CH_GRAPH, substream

CONDUCTANCE_EXACT_LIMIT = 24


# ---------------------------------------------------------------------------
# Core types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph with optional node coordinates.

    ``adjacency`` holds per-node sorted neighbour tuples (symmetric, no
    self-loops, no duplicates). ``coords`` carries integer lattice points
    for grids (1-based per axis) and unit-square points for RGGs.
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]
    family: str = "custom"
    dim: int | None = None
    radius: float | None = None
    coords: tuple[tuple[float, ...], ...] | None = None

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self):
        """Yield each undirected edge once as (u, v) with u < v."""
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if u < v:
                    yield u, v

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])


@dataclass(frozen=True)
class Partition:
    """Decomposition into connected pieces with exact hop diameters."""

    pieces: tuple[tuple[int, ...], ...]
    piece_sizes: tuple[int, ...]
    piece_diameters: tuple[int, ...]

    @property
    def g(self) -> int:
        return len(self.pieces)

    def piece_of(self, n: int) -> list[int]:
        """Node-to-piece index lookup table."""
        out = [-1] * n
        for i, piece in enumerate(self.pieces):
            for v in piece:
                out[v] = i
        return out


@dataclass(frozen=True)
class SpanningTree:
    """BFS shortest-path tree of one partition piece."""

    root: int
    parent: dict[int, int]
    depth: dict[int, int]


@dataclass(frozen=True)
class ConductanceResult:
    value: float
    witness_set: tuple[int, ...] | None
    mode: str  # "exact" | "analytic"
    cut_edges: int | None = None
    set_size: int | None = None


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _build_adjacency(n: int, edges: Iterable[tuple[int, int]]) -> tuple[tuple[int, ...], ...]:
    adj: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise InvalidParameterError(f"edge ({u},{v}) out of bounds for n={n}")
        if u == v:
            raise InvalidParameterError(f"self-loop at node {u}")
        adj[u].add(v)
        adj[v].add(u)
    return tuple(tuple(sorted(a)) for a in adj)


def gen_ring(n: int) -> Graph:
    """Cycle on n contiguous nodes; node i adjacent to (i±1) mod n."""
    if n < 3:
        raise InvalidParameterError(f"ring needs n >= 3, got {n}")
    edges = [(i, (i + 1) % n) for i in range(n)]
    return Graph(n=n, adjacency=_build_adjacency(n, edges), family="ring")


def gen_line(n: int) -> Graph:
    """Path on n nodes (the ring with one edge removed)."""
    if n < 2:
        raise InvalidParameterError(f"line needs n >= 2, got {n}")
    edges = [(i, i + 1) for i in range(n - 1)]
    return Graph(n=n, adjacency=_build_adjacency(n, edges), family="line")


def _floor_root(n: float, k: int) -> int:
    """floor(n^(1/k)) with protection against float drift at exact powers."""
    r = int(round(n ** (1.0 / k)))
    while r > 1 and r**k > n + 1e-9:
        r -= 1
    while (r + 1) ** k <= n + 1e-9:
        r += 1
    return max(r, 1)


def grid_node_id(coord: Sequence[int], side: int) -> int:
    """Row-major id of a 1-based lattice point, last axis fastest."""
    idx = 0
    for x in coord:
        idx = idx * side + (x - 1)
    return idx


def gen_grid(n: int, d: int, strict: bool = False) -> Graph:
    """d-dimensional grid on {1..side}^d with the L1-distance-1 edges.

    Lenient mode (default) floors the side when n is not a perfect d-th
    power, so the realized node count is side**d; strict mode rejects
    such n instead.
    """
    if n < 1 or d < 1:
        raise InvalidParameterError("grid needs n >= 1 and d >= 1")
    side = _floor_root(n, d)
    if side**d != n and strict:
        raise InvalidParameterError(f"n={n} is not a perfect {d}-th power")
    m = side**d
    coords = []
    cur = [1] * d
    for _ in range(m):
        coords.append(tuple(cur))
        for axis in range(d - 1, -1, -1):
            if cur[axis] < side:
                cur[axis] += 1
                break
            cur[axis] = 1
    edges = []
    for idx, c in enumerate(coords):
        for axis in range(d):
            if c[axis] < side:
                edges.append((idx, idx + side ** (d - 1 - axis)))
    return Graph(
        n=m,
        adjacency=_build_adjacency(m, edges),
        family="grid",
        dim=d,
        coords=tuple(coords),
    )


def gen_rgg(n: int, r: float, seed: int) -> Graph:
    """RGG: n points i.i.d. uniform on the unit square, edge iff ||x-y|| <= r.

    Deterministic for fixed (n, r, seed): the point set comes from the
    counter-based stream addressed by the seed, edge order from pair
    enumeration.
    """
    if n < 1:
        raise InvalidParameterError(f"rgg needs n >= 1, got {n}")
    if r < 0:
        raise InvalidParameterError(f"rgg radius must be nonnegative, got {r}")
    rng = substream(seed, 0, CH_GRAPH)
    pts = rng.random((n, 2))
    r2 = r * r
    edges: list[tuple[int, int]] = []
    chunk = max(1, 4_000_000 // max(n, 1))
    xs, ys = pts[:, 0], pts[:, 1]
    for i0 in range(0, n, chunk):
        block = pts[i0 : i0 + chunk]
        dx = block[:, 0:1] - xs[None, :]
        dy = block[:, 1:2] - ys[None, :]
        close = dx * dx + dy * dy <= r2
        bi, j = np.nonzero(close)
        for b, v in zip((bi + i0).tolist(), j.tolist()):
            if b < v:
                edges.append((b, v))
    return Graph(
        n=n,
        adjacency=_build_adjacency(n, edges),
        family="rgg",
        radius=r,
        coords=tuple(map(tuple, pts.tolist())),
    )


def gen_custom(n: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Graph from an explicit edge list (deduplicated, symmetric)."""
    if n < 1:
        raise InvalidParameterError(f"need n >= 1, got {n}")
    return Graph(n=n, adjacency=_build_adjacency(n, edges), family="custom")


# ---------------------------------------------------------------------------
# BFS, diameter, connectivity
# ---------------------------------------------------------------------------


def bfs_distances(g: Graph, root: int, members: Iterable[int] | None = None) -> dict[int, int]:
    """Hop distances from root inside the subgraph induced by ``members``.

    Nodes of the induced subgraph unreachable from root are absent from
    the result. ``members=None`` uses the whole graph.
    """
    allowed = None if members is None else set(members)
    if allowed is not None and root not in allowed:
        raise InvalidParameterError(f"root {root} not in the given piece")
    dist = {root: 0}
    q = deque([root])
    adj = g.adjacency
    while q:
        u = q.popleft()
        du = dist[u]
        for v in adj[u]:
            if v not in dist and (allowed is None or v in allowed):
                dist[v] = du + 1
                q.append(v)
    return dist


def bfs_tree(g: Graph, piece: Iterable[int], root: int) -> SpanningTree:
    """Shortest-path spanning tree of a connected piece, rooted at root."""
    members = set(piece)
    if root not in members:
        raise InvalidParameterError(f"root {root} not in piece")
    parent: dict[int, int] = {}
    depth = {root: 0}
    q = deque([root])
    adj = g.adjacency
    while q:
        u = q.popleft()
        du = depth[u]
        for v in adj[u]:
            if v in members and v not in depth:
                depth[v] = du + 1
                parent[v] = u
                q.append(v)
    if len(depth) != len(members):
        missing = next(iter(members - depth.keys()))
        raise ConnectivityError(
            f"piece is disconnected: node {missing} unreachable from {root}",
            unreachable=missing,
        )
    return SpanningTree(root=root, parent=parent, depth=depth)


def diameter(g: Graph, piece: Iterable[int] | None = None) -> int:
    """Exact hop diameter of a connected piece via all-sources BFS."""
    members = list(range(g.n)) if piece is None else sorted(set(piece))
    member_set = set(members)
    best = 0
    for u in members:
        dist = bfs_distances(g, u, member_set)
        if len(dist) != len(members):
            missing = next(iter(member_set - dist.keys()))
            raise ConnectivityError(
                f"piece is disconnected: node {missing} unreachable from {u}",
                unreachable=missing,
            )
        ecc = max(dist.values())
        if ecc > best:
            best = ecc
    return best


def is_connected(g: Graph) -> bool:
    return len(bfs_distances(g, 0)) == g.n


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------


def _segment_partition(g: Graph, s: int) -> Partition:
    # Consecutive blocks of s nodes; the last block absorbs any remainder,
    # staying below twice the nominal size.
    n = g.n
    count = max(1, n // s)
    pieces = []
    for i in range(count):
        lo = i * s
        hi = (i + 1) * s if i < count - 1 else n
        pieces.append(tuple(range(lo, hi)))
    sizes = tuple(len(p) for p in pieces)
    if count == 1:
        diam = n // 2 if g.family == "ring" else n - 1
        diams: tuple[int, ...] = (diam,)
    else:
        diams = tuple(sz - 1 for sz in sizes)
    return Partition(pieces=tuple(pieces), piece_sizes=sizes, piece_diameters=diams)


def partition_ring(g: Graph, strict: bool = False) -> Partition:
    """Split a ring/line into ~sqrt(n) consecutive segments of ~sqrt(n) nodes.

    Lenient mode floors sqrt(n) and lets the last segment absorb the
    remainder; strict mode requires sqrt(n) to be an integer.
    """
    if g.family not in ("ring", "line"):
        raise InvalidFamilyError(f"segment partition needs ring/line, got {g.family}")
    s = _floor_root(g.n, 2)
    if strict and s * s != g.n:
        raise InvalidParameterError(f"n={g.n} is not a perfect square")
    return _segment_partition(g, s)


def partition_grid(g: Graph, l_min: float = 1.0, strict: bool = False) -> Partition:
    """Tile a d-grid into contiguous sub-grids of side ~ (n/l_min)^(1/(d+1)).

    Each piece is an axis-aligned box; in lenient mode the trailing block
    on each axis absorbs the remainder (size below twice nominal).
    """
    if g.family != "grid":
        raise InvalidFamilyError(f"sub-grid partition needs grid, got {g.family}")
    if l_min <= 0:
        raise InvalidParameterError("l_min must be positive")
    d = g.dim
    assert d is not None
    n = g.n
    side = _floor_root(n, d)
    target = (n / l_min) ** (1.0 / (d + 1))
    b = max(1, min(side, int(target + 1e-9)))
    if strict:
        if abs(target - round(target)) > 1e-9 or side % int(round(target)) != 0:
            raise InvalidParameterError(
                f"sub-grid side {target} is not an exact divisor of {side}"
            )
        b = int(round(target))
    k = side // b
    # Axis cut points; block i covers [cuts[i], cuts[i+1]) in 1-based coords.
    cuts = [i * b + 1 for i in range(k)] + [side + 1]
    blocks = [range(cuts[i], cuts[i + 1]) for i in range(k)]

    pieces = []
    sizes = []
    diams = []
    idx = [0] * d
    while True:
        axis_ranges = [blocks[idx[a]] for a in range(d)]
        nodes = []
        cur = [block.start for block in axis_ranges]
        total = 1
        for block in axis_ranges:
            total *= len(block)
        for _ in range(total):
            nodes.append(grid_node_id(cur, side))
            for a in range(d - 1, -1, -1):
                if cur[a] + 1 < axis_ranges[a].stop:
                    cur[a] += 1
                    break
                cur[a] = axis_ranges[a].start
        pieces.append(tuple(sorted(nodes)))
        sizes.append(total)
        diams.append(sum(len(block) - 1 for block in axis_ranges))
        for a in range(d - 1, -1, -1):
            if idx[a] + 1 < k:
                idx[a] += 1
                break
            idx[a] = 0
        else:
            break
    return Partition(
        pieces=tuple(pieces), piece_sizes=tuple(sizes), piece_diameters=tuple(diams)
    )


def partition_rgg(g: Graph, l_min: float = 1.0) -> Partition:
    """Group RGG nodes into square chunks, each a whole block of tiles.

    The unit square is cut into tiles of side at most r/sqrt(5) (points in
    the same or in horizontally/vertically adjacent tiles are always within
    range r of one another), and tiles are grouped into ~(n/l_min)^(1/3)
    chunk blocks. If any tile is empty the construction cannot guarantee
    connected pieces and a degenerate-partition error carrying the empty
    tile's index is raised; callers may resample the graph.
    """
    if g.family != "rgg":
        raise InvalidFamilyError(f"chunk partition needs rgg, got {g.family}")
    if l_min <= 0:
        raise InvalidParameterError("l_min must be positive")
    r = g.radius
    assert r is not None and g.coords is not None
    n = g.n
    if r >= math.sqrt(2):
        tiles = 1  # the whole square already has diameter <= r
    else:
        tiles = int(math.ceil(math.sqrt(5.0) / r - 1e-12))
    tile_nodes: dict[tuple[int, int], list[int]] = {}
    tile_index = []
    for v, (x, y) in enumerate(g.coords):
        tx = min(int(x * tiles), tiles - 1)
        ty = min(int(y * tiles), tiles - 1)
        tile_nodes.setdefault((tx, ty), []).append(v)
        tile_index.append((tx, ty))
    for tx in range(tiles):
        for ty in range(tiles):
            if (tx, ty) not in tile_nodes:
                raise PartitionDegenerateError(
                    f"tile ({tx},{ty}) of {tiles}x{tiles} is empty",
                    tile_index=(tx, ty),
                )
    chunks = max(1, min(tiles, int((n / l_min) ** (1.0 / 6.0) + 1e-9)))
    piece_nodes: dict[tuple[int, int], list[int]] = {}
    for v, (tx, ty) in enumerate(tile_index):
        cx = tx * chunks // tiles
        cy = ty * chunks // tiles
        piece_nodes.setdefault((cx, cy), []).append(v)
    keys = sorted(piece_nodes)
    pieces = tuple(tuple(sorted(piece_nodes[k])) for k in keys)
    diams = tuple(diameter(g, p) for p in pieces)
    return Partition(
        pieces=pieces,
        piece_sizes=tuple(len(p) for p in pieces),
        piece_diameters=diams,
    )


def validate_partition(g: Graph, p: Partition) -> None:
    """Raise ValueError unless p is a disjoint connected cover of g with
    exact piece diameters (recomputed by BFS)."""
    seen: set[int] = set()
    total = 0
    for piece in p.pieces:
        total += len(piece)
        seen.update(piece)
    if total != g.n or seen != set(range(g.n)):
        raise ValueError("pieces are not a disjoint cover of the node set")
    if p.piece_sizes != tuple(len(piece) for piece in p.pieces):
        raise ValueError("piece_sizes disagree with pieces")
    for i, piece in enumerate(p.pieces):
        d = diameter(g, piece)  # raises ConnectivityError if disconnected
        if d != p.piece_diameters[i]:
            raise ValueError(
                f"piece {i} diameter {p.piece_diameters[i]} != BFS value {d}"
            )


# ---------------------------------------------------------------------------
# Conductance
# ---------------------------------------------------------------------------


def _popcount_u32(x: np.ndarray) -> np.ndarray:
    x = x - ((x >> np.uint32(1)) & np.uint32(0x55555555))
    x = (x & np.uint32(0x33333333)) + ((x >> np.uint32(2)) & np.uint32(0x33333333))
    x = (x + (x >> np.uint32(4))) & np.uint32(0x0F0F0F0F)
    return (x * np.uint32(0x01010101)) >> np.uint32(24)


def conductance_exact(g: Graph) -> ConductanceResult:
    """Minimum of cut(S)/|S| over all subsets with 1 <= |S| <= n/2.

    Enumerates every subset (vectorized in chunks), so it is limited to
    n <= 24; larger graphs get a size-limit error pointing to the
    analytic mode.
    """
    n = g.n
    if n > CONDUCTANCE_EXACT_LIMIT:
        raise SizeLimitError(
            f"exact conductance enumerates 2^n subsets and is limited to "
            f"n <= {CONDUCTANCE_EXACT_LIMIT} (got n={n}); use conductance_analytic"
        )
    if n < 2:
        raise InvalidParameterError("conductance needs n >= 2")
    edge_list = list(g.edges())
    half = n // 2
    best_ratio = math.inf
    best_mask = 0
    best_cut = 0
    best_size = 1
    chunk = 1 << 20
    one = np.uint32(1)
    for lo in range(1, 1 << n, chunk):
        hi = min(lo + chunk, 1 << n)
        masks = np.arange(lo, hi, dtype=np.uint32)
        sizes = _popcount_u32(masks)
        cut = np.zeros(masks.shape, dtype=np.uint32)
        for u, v in edge_list:
            cut += ((masks >> np.uint32(u)) ^ (masks >> np.uint32(v))) & one
        ratio = cut / sizes
        ratio[sizes > half] = np.inf
        i = int(np.argmin(ratio))
        if ratio[i] < best_ratio:
            best_ratio = float(ratio[i])
            best_mask = int(masks[i])
            best_cut = int(cut[i])
            best_size = int(sizes[i])
    witness = tuple(v for v in range(n) if (best_mask >> v) & 1)
    return ConductanceResult(
        value=best_ratio,
        witness_set=witness,
        mode="exact",
        cut_edges=best_cut,
        set_size=best_size,
    )


def conductance_analytic(g: Graph) -> ConductanceResult:
    """Closed-form conductance of structured families (contiguous half cut)."""
    n = g.n
    if g.family == "ring":
        return ConductanceResult(value=2 / (n // 2), witness_set=None, mode="analytic")
    if g.family == "line":
        return ConductanceResult(value=1 / (n // 2), witness_set=None, mode="analytic")
    if g.family == "grid":
        d = g.dim
        assert d is not None
        side = _floor_root(n, d)
        return ConductanceResult(
            value=side ** (d - 1) / (n // 2), witness_set=None, mode="analytic"
        )
    raise InvalidFamilyError(f"no analytic conductance for family {g.family}")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def write_graph(g: Graph, path: str) -> None:
    """Line-oriented text format: header `n family params`, one `u v` line
    per edge, and for RGGs `coord u x y` lines with round-trip-exact reals."""
    with open(path, "w") as fh:
        if g.family == "grid":
            fh.write(f"{g.n} grid {g.dim}\n")
        elif g.family == "rgg":
            fh.write(f"{g.n} rgg {g.radius:.17g}\n")
        else:
            fh.write(f"{g.n} {g.family}\n")
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")
        if g.family == "rgg" and g.coords is not None:
            for u, (x, y) in enumerate(g.coords):
                fh.write(f"coord {u} {x:.17g} {y:.17g}\n")


def read_graph(path: str) -> Graph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) < 2:
            raise InvalidParameterError(f"malformed graph header in {path}")
        n = int(header[0])
        family = header[1]
        dim = int(header[2]) if family == "grid" else None
        radius = float(header[2]) if family == "rgg" else None
        edges = []
        coords: dict[int, tuple[float, float]] = {}
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "coord":
                coords[int(parts[1])] = (float(parts[2]), float(parts[3]))
            else:
                edges.append((int(parts[0]), int(parts[1])))
    coord_tuple = None
    if coords:
        coord_tuple = tuple(coords[i] for i in range(n))
    elif family == "grid":
        # Lattice coordinates are implied by the row-major indexing.
        coord_tuple = gen_grid(n, dim or 1).coords
    return Graph(
        n=n,
        adjacency=_build_adjacency(n, edges),
        family=family,
        dim=dim,
        radius=radius,
        coords=coord_tuple,
    )
