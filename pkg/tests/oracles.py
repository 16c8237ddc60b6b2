"""Independent reference computations used to verify the package.

Everything here is deliberately naive and separate from the library's
code paths: a phase-type expectation for the exact finish-time mean, a
first-passage sampler built on Dijkstra over pre-drawn clocks, brute
force subset enumeration for conductance, and exhaustive small-graph
enumeration up to isomorphism.
"""

from __future__ import annotations

import heapq
import math
from itertools import combinations, permutations

import numpy as np


def ctmc_expected_finish(adjacency, seed_node=0, beta=1.0, external=None):
    """Exact E[finish time] for SI with constant per-node external rates.

    Solves the absorbing-chain expectations over all 2^n infection states
    by dynamic programming in decreasing infected-count order (the state
    can only grow, so no linear solver is needed).
    """
    n = len(adjacency)
    ext = [0.0] * n if external is None else list(external)
    full = (1 << n) - 1
    start = 1 << seed_node
    expect = {full: 0.0}
    masks = [m for m in range(start, full + 1) if m & start]
    masks.sort(key=lambda m: bin(m).count("1"), reverse=True)
    for mask in masks:
        if mask == full:
            continue
        rates = []
        for v in range(n):
            if mask >> v & 1:
                continue
            r = ext[v] + beta * sum(1 for u in adjacency[v] if mask >> u & 1)
            if r > 0:
                rates.append((v, r))
        total = sum(r for _, r in rates)
        if total == 0:
            raise ValueError("absorbing before full infection (disconnected?)")
        acc = 1.0
        for v, r in rates:
            acc += r * expect[mask | (1 << v)]
        expect[mask] = acc / total
    return expect[start]


def fpp_relax(adjacency, edge_time, source_times):
    """Per-node infection times given fixed edge clocks and source times.

    Dijkstra over the first-passage representation: a node is infected at
    the smaller of its own source time and the best neighbour infection
    time plus the shared edge clock. Monotone in ``source_times``.
    """
    n = len(adjacency)
    dist = list(source_times)
    heap = [(t, v) for v, t in enumerate(dist) if t < math.inf]
    heapq.heapify(heap)
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v in adjacency[u]:
            w = edge_time[(u, v) if u < v else (v, u)]
            if d + w < dist[v]:
                dist[v] = d + w
                heapq.heappush(heap, (dist[v], v))
    return dist


def draw_edge_times(adjacency, rng, beta=1.0):
    out = {}
    for u in range(len(adjacency)):
        for v in adjacency[u]:
            if u < v:
                out[(u, v)] = rng.exponential(1.0 / beta)
    return out


def percolation_sample(adjacency, rng, seed_node=0, beta=1.0, external=None):
    """One exact draw of all infection times for constant-rate SI."""
    n = len(adjacency)
    ext = [0.0] * n if external is None else list(external)
    edge_time = draw_edge_times(adjacency, rng, beta)
    sources = [
        0.0
        if v == seed_node
        else (rng.exponential(1.0 / ext[v]) if ext[v] > 0 else math.inf)
        for v in range(n)
    ]
    return fpp_relax(adjacency, edge_time, sources)


def percolation_finish_times(adjacency, samples, seed=0, beta=1.0, external=None):
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 2**32], dtype=np.uint64)))
    out = []
    for _ in range(samples):
        out.append(max(percolation_sample(adjacency, rng, 0, beta, external)))
    return out


def conductance_brute(adjacency):
    """Naive minimum of cut(S)/|S| over subsets with 1 <= |S| <= n/2."""
    n = len(adjacency)
    edges = [(u, v) for u in range(n) for v in adjacency[u] if u < v]
    best = math.inf
    best_set = None
    for size in range(1, n // 2 + 1):
        for subset in combinations(range(n), size):
            inside = set(subset)
            cut = sum(1 for u, v in edges if (u in inside) != (v in inside))
            ratio = cut / size
            if ratio < best:
                best = ratio
                best_set = subset
    return best, best_set


def _is_connected(n, edges):
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == n


def connected_graphs_up_to_iso(n):
    """All connected graphs on n labeled nodes, one per isomorphism class."""
    pairs = list(combinations(range(n), 2))
    seen = set()
    out = []
    for bits in range(1 << len(pairs)):
        edges = [pairs[i] for i in range(len(pairs)) if bits >> i & 1]
        if len(edges) < n - 1 or not _is_connected(n, edges):
            continue
        canon = min(
            tuple(sorted(tuple(sorted((p[u], p[v]))) for u, v in edges))
            for p in permutations(range(n))
        )
        if canon not in seen:
            seen.add(canon)
            out.append(edges)
    return out


def adjacency_of(edges, n):
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return [sorted(a) for a in adj]
