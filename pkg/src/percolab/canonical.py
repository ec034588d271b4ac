"""Canonical codes for small finite rooted graphs.

Two rooted graphs receive equal codes iff they are rooted-isomorphic.  Trees
use the classic bottom-up encoding (sorted child codes in parentheses), which
is linear; general graphs use the lexicographically minimal layered-BFS
adjacency string, found by backtracking over candidate orderings with
pruning.  Both are exact; graphs above the size cap are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass

from .graphs import Ball

CANONICALIZATION_CAP = 64
_SEARCH_CAP = 500_000  # backtracking node limit for pathological symmetry


class CanonicalizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CanonicalCode:
    data: bytes

    def hex(self) -> str:
        return self.data.hex()

    def __lt__(self, other: "CanonicalCode") -> bool:
        return self.data < other.data


def canonical_code(b: Ball, cap: int = CANONICALIZATION_CAP) -> CanonicalCode:
    """Canonical code of a ball viewed as a finite rooted graph."""
    n = len(b.vertices)
    if n > cap:
        raise CanonicalizationError(f"{n} vertices exceeds canonicalization cap {cap}")
    adj = b.adjacency()
    if b.is_tree():
        return CanonicalCode(b"T" + _tree_code(adj, b.center))
    return CanonicalCode(b"G" + _bfs_min_code(adj, b.center, b.dist))


def rooted_graph_code(adj: dict, root, cap: int = CANONICALIZATION_CAP) -> CanonicalCode:
    """Canonical code for an explicit adjacency dict (testing helper)."""
    n = len(adj)
    if n > cap:
        raise CanonicalizationError(f"{n} vertices exceeds canonicalization cap {cap}")
    edges = sum(len(v) for v in adj.values()) // 2
    dist = _bfs_dist(adj, root)
    if len(dist) != n:
        raise CanonicalizationError("graph must be connected from the root")
    if edges == n - 1:
        return CanonicalCode(b"T" + _tree_code(adj, root))
    return CanonicalCode(b"G" + _bfs_min_code(adj, root, dist))


def _bfs_dist(adj: dict, root) -> dict:
    dist = {root: 0}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        frontier = nxt
    return dist


def _tree_code(adj: dict, root) -> bytes:
    # iterative AHU encoding; children sorted by their own code
    out: dict = {}
    stack = [(root, None, False)]
    while stack:
        v, parent, done = stack.pop()
        if done:
            kids = sorted(out[c] for c in adj[v] if c != parent)
            out[v] = b"(" + b"".join(kids) + b")"
        else:
            stack.append((v, parent, True))
            for c in adj[v]:
                if c != parent:
                    stack.append((c, v, False))
    return out[root]


def _bfs_min_code(adj: dict, root, dist: dict) -> bytes:
    """Lexicographically minimal adjacency encoding over layer-respecting orders.

    Position 0 is the root; positions are filled layer by layer.  A placed
    vertex's row is the bitmask of its adjacencies to earlier positions
    (earlier position = more significant bit).  Backtracking explores all
    minimal-row candidates at each step; true twins are deduplicated.
    """
    n = len(adj)
    verts = sorted(dist, key=lambda v: dist[v])
    layer_of = {v: dist[v] for v in verts}
    nbr_sets = {v: frozenset(adj[v]) for v in verts}

    best: list = [None]  # best complete row tuple found so far
    nodes = [0]

    def search(placed: list, placed_idx: dict, rows: tuple):
        nodes[0] += 1
        if nodes[0] > _SEARCH_CAP:
            raise CanonicalizationError("canonical search exceeded node cap")
        i = len(placed)
        if i == n:
            if best[0] is None or rows < best[0]:
                best[0] = rows
            return
        want_layer = min(layer_of[v] for v in layer_of if v not in placed_idx)
        # candidates: unplaced vertices of the shallowest remaining layer
        cands = [v for v in verts if v not in placed_idx and layer_of[v] == want_layer]
        keyed = []
        for v in cands:
            row = 0
            for j, u in enumerate(placed):
                if u in nbr_sets[v]:
                    row |= 1 << (i - 1 - j)
            keyed.append((row, v))
        minrow = min(k for k, _ in keyed)
        if best[0] is not None and rows + (minrow,) > best[0][:i + 1]:
            return  # every completion of this prefix is worse than the best
        seen_sigs = set()
        for row, v in keyed:
            if row != minrow:
                continue
            sig = nbr_sets[v]
            if sig in seen_sigs:
                continue  # true twin of an explored candidate
            seen_sigs.add(sig)
            placed.append(v)
            placed_idx[v] = i
            search(placed, placed_idx, rows + (row,))
            placed.pop()
            del placed_idx[v]

    search([root], {root: 0}, (0,))
    rows = best[0]
    # serialize rows with explicit widths so codes of different sizes differ
    parts = [n.to_bytes(2, "big")]
    for i, row in enumerate(rows):
        width = max(1, (i + 7) // 8)
        parts.append(row.to_bytes(width, "big"))
    return b"".join(parts)
