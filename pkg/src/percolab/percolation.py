"""Bernoulli bond percolation: configurations, clusters, probes, oracles.

Edge states come from counter-based uniforms shared across all p, so the
coupling is monotone: raising p only opens more edges.  Finite subgraphs use
edge-index keyed streams; lazy cluster exploration on infinite instances
keys the uniform by a canonical edge address instead, which preserves both
determinism and the coupling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .graphs import Ball, BudgetExceededError, LocalGraph, VertexId, ball
from .reports import EstimateReport, Z95, mean_ci, wilson_ci
from .rng import bulk_uniforms, edge_key, edge_uniform, fold
from .sources import GraphSource

CLUSTER_VERTEX_CAP = 1_000_000
ORACLE_EDGE_CAP = 24


class OracleCapError(RuntimeError):
    pass


class UnionFind:
    __slots__ = ("parent", "rank")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        p = self.parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


@dataclass
class FiniteGraph:
    """Explicit vertex/edge lists with a distinguished root, for oracles."""

    vertices: list
    edges: list          # (u, v) pairs of vertex ids
    root: object = None

    @staticmethod
    def from_ball(b: Ball) -> "FiniteGraph":
        verts = sorted(b.vertices)
        edges = sorted(tuple(sorted(e)) for e in b.edges)
        return FiniteGraph(verts, edges, root=b.center)

    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}


@dataclass
class PercConfig:
    """Open/closed assignment on a finite subgraph's canonical edge list."""

    graph: FiniteGraph
    p: float
    open_edges: np.ndarray    # boolean, aligned with graph.edges
    seed: int
    stream: int

    def open_count(self) -> int:
        return int(self.open_edges.sum())


@dataclass
class ClusterPartition:
    labels: dict                      # vertex -> cluster representative index
    sizes: dict = field(default_factory=dict)

    def cluster_of(self, v) -> int:
        return self.labels[v]

    def size_of(self, v) -> int:
        return self.sizes[self.labels[v]]

    def same_cluster(self, u, v) -> bool:
        return self.labels[u] == self.labels[v]


def percolate(g: FiniteGraph, p: float, seed: int, stream: int) -> PercConfig:
    """Independent Bernoulli(p) states on the canonical edge list.

    The uniforms depend on (seed, stream, edge index) only, so configs at
    parameters p < p' from the same seed/stream are nested.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    u = bulk_uniforms(seed, stream, len(g.edges))
    return PercConfig(graph=g, p=p, open_edges=u < p, seed=seed, stream=stream)


def clusters(cfg: PercConfig) -> ClusterPartition:
    g = cfg.graph
    idx = g.index()
    uf = UnionFind(len(g.vertices))
    openmask = cfg.open_edges
    for e, (a, b) in enumerate(g.edges):
        if openmask[e]:
            uf.union(idx[a], idx[b])
    labels = {v: uf.find(idx[v]) for v in g.vertices}
    sizes: dict = {}
    for v, c in labels.items():
        sizes[c] = sizes.get(c, 0) + 1
    return ClusterPartition(labels=labels, sizes=sizes)


def connection_probabilities(g: FiniteGraph, p: float, source) -> dict:
    """Exact P(source <-> v) for every v, by summing all 2^|E| configs."""
    m = len(g.edges)
    if m > ORACLE_EDGE_CAP:
        raise OracleCapError(f"{m} edges exceeds the exact-enumeration cap")
    idx = g.index()
    n = len(g.vertices)
    s = idx[source]
    eidx = [(idx[a], idx[b]) for a, b in g.edges]
    probs = [0.0] * n
    for mask in range(1 << m):
        uf = UnionFind(n)
        mm = mask
        e = 0
        k = 0
        while mm:
            if mm & 1:
                uf.union(*eidx[e])
                k += 1
            mm >>= 1
            e += 1
        w = p ** k * (1.0 - p) ** (m - k)
        rs = uf.find(s)
        for v in range(n):
            if uf.find(v) == rs:
                probs[v] += w
    return {v: probs[idx[v]] for v in g.vertices}


def connectivity_oracle(g: FiniteGraph, p: float, x, y) -> float:
    """Exact two-point connection probability on a small finite graph."""
    if x == y:
        return 1.0
    return connection_probabilities(g, p, x)[y]


# --------------------------------------------------------------------------
# lazy cluster exploration on instances


def _edge_open(g: LocalGraph, stream: int, x: VertexId, y: VertexId, p: float) -> bool:
    ek = edge_key(g.vertex_key(x), g.vertex_key(y))
    return edge_uniform(g.seed, stream, ek) < p


def explore_cluster(g: LocalGraph, p: float, stream: int, max_radius: int,
                    vertex_cap: int = CLUSTER_VERTEX_CAP) -> tuple:
    """Frontier BFS of the root's open cluster out to ``max_radius``.

    Returns (counts, reached) where counts[d] is the number of cluster
    vertices at distance d along open paths (d <= max_radius) and
    ``reached`` is the largest such distance.  Exceeding the vertex cap
    raises unless the target radius was already reached.
    """
    seen = {g.root}
    counts = [1] + [0] * max_radius
    frontier = [g.root]
    reached = 0
    for d in range(1, max_radius + 1):
        nxt = []
        for u in frontier:
            for w in g.neighbors(u):
                if w not in seen and _edge_open(g, stream, u, w, p):
                    seen.add(w)
                    nxt.append(w)
                    if len(seen) > vertex_cap:
                        if d == max_radius:
                            # target radius already witnessed; stop early
                            counts[d] = len(nxt)
                            return counts, d
                        raise BudgetExceededError(
                            f"cluster exploration passed {vertex_cap} vertices "
                            f"at radius {d} (target {max_radius})")
        counts[d] = len(nxt)
        if nxt:
            reached = d
        else:
            break
        frontier = nxt
    return counts, reached


def survival_probe(src: GraphSource, p: float, radius: int, replicas: int,
                   seed: int) -> EstimateReport:
    """Wilson-CI estimate of P(root's open cluster reaches the given radius)."""
    hits = 0
    for i in range(replicas):
        g = src.sample(fold(seed, 0x5F, i))
        _, reached = explore_cluster(g, p, i, radius)
        if reached >= radius:
            hits += 1
    lo, hi = wilson_ci(hits, replicas)
    return EstimateReport(
        experiment="survival", descriptor=src.descriptor, p=p, radius=radius,
        replicas=replicas, estimate=hits / replicas, ci_lo=lo, ci_hi=hi,
        seed=seed)


def survival_curves(src: GraphSource, p: float, radii: list, replicas: int,
                    seed: int) -> list:
    """Survival estimates at several radii from one exploration per replica."""
    radii = sorted(radii)
    rmax = radii[-1]
    hits = {r: 0 for r in radii}
    for i in range(replicas):
        g = src.sample(fold(seed, 0x5F, i))
        _, reached = explore_cluster(g, p, i, rmax)
        for r in radii:
            if reached >= r:
                hits[r] += 1
    out = []
    for r in radii:
        lo, hi = wilson_ci(hits[r], replicas)
        out.append(EstimateReport(
            experiment="survival", descriptor=src.descriptor, p=p, radius=r,
            replicas=replicas, estimate=hits[r] / replicas, ci_lo=lo, ci_hi=hi,
            seed=seed))
    return out


def expected_cluster_size_probe(src: GraphSource, p: float, radii: list,
                                replicas: int, seed: int) -> list:
    """Truncated mean cluster sizes E|C_o within radius R| for each R."""
    radii = sorted(radii)
    rmax = radii[-1]
    tot = {r: 0.0 for r in radii}
    tot_sq = {r: 0.0 for r in radii}
    for i in range(replicas):
        g = src.sample(fold(seed, 0x51, i))
        counts, _ = explore_cluster(g, p, i, rmax)
        csum = np.cumsum(counts)
        for r in radii:
            val = float(csum[min(r, len(counts) - 1)])
            tot[r] += val
            tot_sq[r] += val * val
    out = []
    for r in radii:
        mean, se, lo, hi = mean_ci(tot[r], tot_sq[r], replicas)
        out.append(EstimateReport(
            experiment="cluster_size", descriptor=src.descriptor, p=p, radius=r,
            replicas=replicas, estimate=mean, ci_lo=lo, ci_hi=hi, seed=seed))
    return out


# --------------------------------------------------------------------------
# canopy distance counts and the exact truncated series


def canopy_expected_cluster_size_exact(p: float, root_level: int, depth: int,
                                       tol: float = 1e-9) -> dict:
    """Partial sums of sum_d count(root_level, d) p^d with a tail flag.

    ``count`` is the canopy distance-count recursion; on a tree each term
    is exactly the expected number of cluster vertices at distance d.
    """
    from .sources.canopy import canopy_distance_count

    if not 0.0 <= p < 1.0:
        raise ValueError("need 0 <= p < 1")
    partial = 0.0
    increments = []
    converged_at: Optional[int] = None
    for d in range(depth + 1):
        inc = canopy_distance_count(root_level, d) * p ** d
        partial += inc
        increments.append(inc)
        if converged_at is None and d > root_level and inc < tol:
            converged_at = d
    # geometric ratio of the tail increments flags convergence
    ratio = p * math.sqrt(2.0)
    return {
        "p": p,
        "root_level": root_level,
        "depth": depth,
        "partial_sum": partial,
        "last_increment": increments[-1],
        "increments": increments,
        "converged_at": converged_at,
        "tail_ratio": ratio,
        "tail_converges": ratio < 1.0,
    }


# --------------------------------------------------------------------------
# four-point crossing on the finite box


def qn_graph(n: int) -> FiniteGraph:
    verts = [(x, y) for x in range(-n, n + 1) for y in range(-n, n + 1)]
    edges = []
    for x, y in verts:
        if x < n:
            edges.append(((x, y), (x + 1, y)))
        if y < n:
            edges.append(((x, y), (x, y + 1)))
    return FiniteGraph(verts, edges, root=(0, 0))


def four_point_crossing(n: int, p: float, replicas: int, seed: int) -> EstimateReport:
    """P that the four side midpoints of the box lie in one open cluster."""
    g = qn_graph(n)
    idx = g.index()
    targets = [idx[(0, n)], idx[(0, -n)], idx[(n, 0)], idx[(-n, 0)]]
    eidx = [(idx[a], idx[b]) for a, b in g.edges]
    nv = len(g.vertices)
    hits = 0
    for i in range(replicas):
        u = bulk_uniforms(seed, i, len(eidx))
        openmask = u < p
        uf = UnionFind(nv)
        for e, (a, b) in enumerate(eidx):
            if openmask[e]:
                uf.union(a, b)
        r0 = uf.find(targets[0])
        if all(uf.find(t) == r0 for t in targets[1:]):
            hits += 1
    lo, hi = wilson_ci(hits, replicas)
    return EstimateReport(
        experiment="four_point_crossing", descriptor={"kind": "qn", "params": {"n": n}},
        p=p, radius=n, replicas=replicas, estimate=hits / replicas,
        ci_lo=lo, ci_hi=hi, seed=seed)
