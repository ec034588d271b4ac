"""Quasi-transitive two-degree trees from a loop-and-spokes template.

``directed_cover_gkl(k, l)`` builds the infinite tree whose heavy vertices
(degree k+l+1) have l+1 heavy and k light neighbours, and whose light
vertices (degree 2) sit between two heavy ones.  The invariant root law
picks a light vertex with probability k/(k+2).  Both rooted instances are
deterministic, so the source exposes exact two-class strata.
"""
from __future__ import annotations

from ..graphs import LocalGraph, VertexId
from ..rng import Stream, fold
from . import GraphSource, register

_HEAVY, _LIGHT = 0, 1


class GklSource(GraphSource):
    kind = "gkl"

    def __init__(self, k: int, l: int):
        if k < 1 or l < 1:
            raise ValueError("need k >= 1 and l >= 1")
        self.k = int(k)
        self.l = int(l)

    @property
    def descriptor(self) -> dict:
        return {"kind": self.kind, "params": {"k": self.k, "l": self.l}}

    def max_degree(self):
        return self.k + self.l + 1

    # vertex types are recovered by walking the address from the root ------

    def _child_type(self, t: int, pt, i: int, is_root: bool) -> int:
        k, l = self.k, self.l
        if t == _LIGHT:
            return _HEAVY
        if is_root:
            return _HEAVY if i <= l else _LIGHT
        if pt == _LIGHT:
            return _HEAVY if i <= l else _LIGHT
        return _HEAVY if i < l else _LIGHT

    def _n_children(self, t: int, pt, is_root: bool) -> int:
        k, l = self.k, self.l
        if t == _LIGHT:
            return 2 if is_root else 1
        if is_root:
            return l + 1 + k
        if pt == _LIGHT:
            return l + 1 + (k - 1)
        return l + k

    def _type_walk(self, root_type: int, addr: VertexId) -> tuple:
        t, pt = root_type, None
        at_root = True
        for i in addr:
            nt = self._child_type(t, pt, i, at_root)
            pt, t = t, nt
            at_root = False
        return t, pt, at_root

    def instance(self, seed: int, root_type: int) -> LocalGraph:
        def neighbors(v: VertexId) -> list:
            t, pt, is_root = self._type_walk(root_type, v)
            out = []
            if not is_root:
                out.append(v[:-1])
            out.extend(v + (i,) for i in range(self._n_children(t, pt, is_root)))
            return out

        return LocalGraph(seed, (), neighbors,
                          meta={"class": root_type, "root_type": root_type})

    def sample(self, seed: int) -> LocalGraph:
        u = Stream(fold(seed, 0x61)).uniform()
        root_type = _LIGHT if u < self.k / (self.k + 2) else _HEAVY
        return self.instance(seed, root_type)

    def exact_strata(self):
        got = getattr(self, "_strata", None)
        if got is None:
            k = self.k
            got = [(k / (k + 2), self.instance(fold(7001, _LIGHT), _LIGHT)),
                   (2 / (k + 2), self.instance(fold(7001, _HEAVY), _HEAVY))]
            self._strata = got
        return got, 0.0

    def root_degree_law(self) -> dict:
        return {2: self.k / (self.k + 2),
                self.k + self.l + 1: 2 / (self.k + 2)}

    def mean_root_degree(self) -> float:
        return (4 * self.k + 2 * self.l + 2) / (self.k + 2)


def directed_cover_gkl(k: int, l: int) -> GklSource:
    return GklSource(k, l)


register("gkl", lambda p: GklSource(int(p["k"]), int(p["l"])))
