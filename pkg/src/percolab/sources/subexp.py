"""Canopy skeleton with square-box gadgets spliced into its edges.

The edge between levels n and n+1 is replaced by the box [-s, s]^2 with
s = 2^min(n, cap), glued at the bottom and top side midpoints.  Box sizes
are capped so the root reweighting (vertex frequency of each class) stays
normalizable; without a cap the level-n boxes outweigh the level-n vertex
frequency and no invariant root law exists.  The capped graph keeps the
features the construction is for: quadratic volume growth, a one-ended
skeleton (so percolation never survives for p < 1), yet large boxes at high
levels that carry big open clusters well below p = 1.
"""
from __future__ import annotations

from ..graphs import LocalGraph, VertexId
from ..rng import Stream, fold
from . import GraphSource, register
from .canopy import canopy_neighbors, canopy_parent, level_of

_ANCHOR, _INNER = 0, 1


class SubexpCanopySource(GraphSource):
    kind = "subexp_canopy"

    def __init__(self, cap: int = 6, tail: float = 1e-12):
        if cap < 0:
            raise ValueError("cap must be >= 0")
        self.cap = int(cap)
        self.tail = float(tail)
        self._classes, self._weights = self._root_classes()
        self._cum = []
        acc = 0.0
        for w in self._weights:
            acc += w
            self._cum.append(acc)

    @property
    def descriptor(self) -> dict:
        return {"kind": self.kind, "params": {"cap": self.cap}}

    def size(self, level: int) -> int:
        return 2 ** min(level, self.cap)

    def gadget_internal_count(self, level: int) -> int:
        s = self.size(level)
        return (2 * s + 1) ** 2 - 2

    def _root_classes(self):
        classes = []
        weights = []
        n = 0
        while True:
            w_level = 2.0 ** (-n - 1)
            classes.append((_ANCHOR, n))
            weights.append(w_level)
            classes.append((_INNER, n))
            weights.append(w_level * self.gadget_internal_count(n))
            if n > self.cap and w_level * self.gadget_internal_count(n) \
                    < self.tail * sum(weights):
                break
            n += 1
            if n > self.cap + 80:
                break
        total = sum(weights)
        return classes, [w / total for w in weights]

    def max_degree(self):
        return 9

    def _neighbors_fn(self, root_level: int):
        size = self.size

        def parse(v: VertexId):
            if v[0] == _ANCHOR:
                return _ANCHOR, v[1:], None
            L = v[1]
            return _INNER, v[2:2 + L], v[2 + L:]

        def inner(ca: tuple, i: int, j: int) -> VertexId:
            return (_INNER, len(ca)) + ca + (i, j)

        def neighbors(v: VertexId) -> list:
            tag, ca, pos = parse(v)
            if tag == _ANCHOR:
                lev = level_of(ca, root_level)
                out = []
                s_p = size(lev)
                # bottom midpoint of the gadget on the edge above this vertex
                out.append(inner(ca, 1, -s_p))
                out.append(inner(ca, -1, -s_p))
                out.append(inner(ca, 0, -s_p + 1))
                if lev >= 1:
                    s_c = size(lev - 1)
                    kids = [w for w in canopy_neighbors(ca, root_level)
                            if level_of(w, root_level) == lev - 1]
                    for c in kids:
                        out.append(inner(c, 1, s_c))
                        out.append(inner(c, -1, s_c))
                        out.append(inner(c, 0, s_c - 1))
                return out
            lev = level_of(ca, root_level)
            s = size(lev)
            i, j = pos
            out = []
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                if not (-s <= ii <= s and -s <= jj <= s):
                    continue
                if ii == 0 and jj == -s:
                    out.append((_ANCHOR,) + ca)
                elif ii == 0 and jj == s:
                    out.append((_ANCHOR,) + canopy_parent(ca))
                else:
                    out.append(inner(ca, ii, jj))
            return out

        return neighbors

    def sample(self, seed: int) -> LocalGraph:
        s = Stream(fold(seed, 0x5E))
        u = s.uniform()
        idx = len(self._cum) - 1
        for t, c in enumerate(self._cum):
            if u < c:
                idx = t
                break
        tag, level = self._classes[idx]
        if tag == _ANCHOR:
            root = (_ANCHOR, 0)
            root_level = level
            cls = ("a", min(level, self.cap + 40))
        else:
            root_level = level
            sz = self.size(level)
            side = 2 * sz + 1
            m = s.randint(self.gadget_internal_count(level))
            # skip the flat indices of the two glued midpoints exactly
            flat_low = 0 * side + sz
            flat_high = (2 * sz) * side + sz
            if m >= flat_low:
                m += 1
            if m >= flat_high:
                m += 1
            i, j = m % side - sz, m // side - sz
            root = (_INNER, 1, 0, i, j)
            cls = ("g", min(level, self.cap + 40), i, j)
        g = LocalGraph(seed, root, self._neighbors_fn(root_level),
                       meta={"class": cls, "root_level": root_level})
        return g

    def parent_of(self, g: LocalGraph, v: VertexId):
        if v[0] != _ANCHOR:
            return None
        return (_ANCHOR,) + canopy_parent(v[1:])


def subexp_canopy_source(cap: int = 6) -> SubexpCanopySource:
    return SubexpCanopySource(cap)


register("subexp_canopy", lambda p: SubexpCanopySource(int(p.get("cap", 6))))
