"""Rooted local graphs, balls, boundaries and distances.

A :class:`LocalGraph` is an adjacency oracle over vertex addresses (tuples of
small integers), so infinite graphs are explored lazily and deterministically:
the same seed always yields the same neighbourhoods.  Balls carry their full
edge boundary, which downstream modules use for boundary-edge expectations.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .rng import fold_tuple

VertexId = tuple  # tuple of ints addressing a vertex relative to the root

DEFAULT_BALL_BUDGET = 5_000_000


def exploration_budget() -> int:
    """Hard cap on vertices visited per ball extraction (env-overridable)."""
    raw = os.environ.get("PERCOLAB_BUDGET")
    if raw:
        return int(raw)
    return DEFAULT_BALL_BUDGET


class BudgetExceededError(RuntimeError):
    """Raised when an exploration would visit more vertices than allowed."""


class SymmetryError(RuntimeError):
    """Raised when a neighbour oracle is not symmetric."""


class LocalGraph:
    """Lazily explorable rooted graph.

    Parameters
    ----------
    seed:
        64-bit integer; together with the generator it determines the
        instance exactly.
    root:
        address of the root vertex.
    neighbor_fn:
        maps a vertex address to the finite list of neighbour addresses.
        Must be symmetric and deterministic; results are memoized here.
    """

    __slots__ = ("seed", "root", "_neighbor_fn", "_memo", "meta")

    def __init__(self, seed: int, root: VertexId,
                 neighbor_fn: Callable[[VertexId], list],
                 meta: Optional[dict] = None):
        self.seed = seed
        self.root = root
        self._neighbor_fn = neighbor_fn
        self._memo: dict = {}
        self.meta = meta or {}

    def neighbors(self, v: VertexId) -> tuple:
        got = self._memo.get(v)
        if got is None:
            got = tuple(self._neighbor_fn(v))
            self._memo[v] = got
        return got

    def degree(self, v: VertexId) -> int:
        return len(self.neighbors(v))

    def vertex_key(self, v: VertexId) -> int:
        """Stable 64-bit hash of a vertex address within this instance."""
        return fold_tuple(self.seed, v)

    def clone_cacheless(self) -> "LocalGraph":
        """Fresh memo cache over the same oracle (for worker isolation)."""
        return LocalGraph(self.seed, self.root, self._neighbor_fn, dict(self.meta))


@dataclass
class Ball:
    """Induced ball ``B(center, radius)`` with its directed edge boundary."""

    center: VertexId
    radius: int
    vertices: set
    edges: set                      # frozensets {u, v} of induced edges
    boundary_edges: list            # (inner, outer) pairs, inner at distance radius
    dist: dict = field(default_factory=dict)   # distance from center per vertex

    def adjacency(self) -> dict:
        adj: dict = {v: [] for v in self.vertices}
        for e in self.edges:
            u, v = tuple(e)
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def is_tree(self) -> bool:
        return len(self.edges) == len(self.vertices) - 1

    def to_json_dict(self) -> dict:
        return {
            "center": list(self.center),
            "radius": self.radius,
            "vertices": sorted(list(v) for v in self.vertices),
            "edges": sorted(sorted(list(u) for u in e) for e in self.edges),
            "boundary": [[list(a), list(b)] for a, b in self.boundary_edges],
        }


def ball(g: LocalGraph, center: VertexId, r: int,
         budget: Optional[int] = None, check_symmetry: bool = True) -> Ball:
    """Extract the induced ball of radius ``r`` around ``center``.

    The boundary list contains every edge with exactly one endpoint inside;
    inner endpoints necessarily sit on the sphere of radius ``r``.
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")
    cap = budget if budget is not None else exploration_budget()

    dist = {center: 0}
    order = [center]
    frontier = [center]
    for d in range(1, r + 1):
        nxt = []
        for u in frontier:
            for w in g.neighbors(u):
                if w not in dist:
                    dist[w] = d
                    nxt.append(w)
                    if len(dist) > cap:
                        raise BudgetExceededError(
                            f"ball({r}) exceeded budget of {cap} vertices")
        order.extend(nxt)
        frontier = nxt

    vertices = set(dist)
    edges = set()
    boundary = []
    for u in order:
        for w in g.neighbors(u):
            if w in vertices:
                edges.add(frozenset((u, w)))
            else:
                boundary.append((u, w))
    if check_symmetry:
        for e in edges:
            u, w = tuple(e)
            if u not in g.neighbors(w) or w not in g.neighbors(u):
                raise SymmetryError(f"asymmetric adjacency between {u} and {w}")
    return Ball(center=center, radius=r, vertices=vertices, edges=edges,
                boundary_edges=boundary, dist=dist)


def distance(g: LocalGraph, x: VertexId, y: VertexId, cap: int) -> Optional[int]:
    """Graph distance if it is at most ``cap``, else None."""
    if x == y:
        return 0
    dist = {x: 0}
    frontier = [x]
    for d in range(1, cap + 1):
        nxt = []
        for u in frontier:
            for w in g.neighbors(u):
                if w == y:
                    return d
                if w not in dist:
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
        if not frontier:
            return None
    return None


def girth_in_ball(b: Ball) -> Optional[int]:
    """Length of the shortest cycle lying entirely inside the ball."""
    n = len(b.vertices)
    if len(b.edges) < n:  # acyclic: a connected ball with < n edges is a tree
        return None
    adj = b.adjacency()
    best: Optional[int] = None
    for s in b.vertices:
        dist = {s: 0}
        parent = {s: None}
        frontier = [s]
        while frontier:
            nxt = []
            for u in frontier:
                for w in adj[u]:
                    if w not in dist:
                        dist[w] = dist[u] + 1
                        parent[w] = u
                        nxt.append(w)
                    elif parent[u] != w and dist[w] >= dist[u]:
                        # non-tree edge found; cycle through s
                        cyc = dist[u] + dist[w] + 1
                        if best is None or cyc < best:
                            best = cyc
            if best is not None and frontier and 2 * dist[frontier[0]] > best:
                break
            frontier = nxt
    return best


def ball_volume_profile(src, radii: Iterable[int], replicas: int, seed: int,
                        budget: Optional[int] = None) -> list:
    """Empirical |B(o, r)| statistics over sampled roots.

    Returns one dict per radius with mean / max / min of the ball volume.
    """
    from .rng import fold

    radii = sorted(set(int(r) for r in radii))
    rmax = radii[-1]
    sums = {r: 0 for r in radii}
    maxs = {r: 0 for r in radii}
    mins = {r: None for r in radii}
    for i in range(replicas):
        g = src.sample(fold(seed, i))
        b = ball(g, g.root, rmax, budget=budget)
        # nested volumes read off the distance map of the largest ball
        counts = {r: 0 for r in radii}
        for v, d in b.dist.items():
            for r in radii:
                if d <= r:
                    counts[r] += 1
        for r in radii:
            c = counts[r]
            sums[r] += c
            if c > maxs[r]:
                maxs[r] = c
            if mins[r] is None or c < mins[r]:
                mins[r] = c
    return [
        {"radius": r, "mean": sums[r] / replicas, "max": maxs[r], "min": mins[r],
         "replicas": replicas, "seed": seed}
        for r in radii
    ]
