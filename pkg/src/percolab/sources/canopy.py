"""The canopy tree: one-ended limit of large balls in the 3-regular tree.

Vertices live on levels 0, 1, 2, ...; a level-n vertex has one parent on
level n+1, and (for n >= 1) two children on level n-1.  Level-0 vertices are
leaves.  The root sits on level n with probability 2^-(n+1).

Addresses are ``(u, d_1, ..., d_m)``: climb ``u`` ancestors from the root,
then descend by child indices ``d_i``.  On the ancestor spine the on-path
child occupies index 0, so off-spine descents start with ``d_1 = 1``.
"""
from __future__ import annotations

import math

from ..graphs import LocalGraph, VertexId
from ..rng import Stream, fold
from . import GraphSource, register

LEVEL_TAIL = 1e-9


def level_of(addr: VertexId, root_level: int) -> int:
    u = addr[0]
    return root_level + u - (len(addr) - 1)


def canopy_neighbors(addr: VertexId, root_level: int) -> list:
    u = addr[0]
    downs = addr[1:]
    lev = root_level + u - len(downs)
    if lev < 0:
        raise ValueError(f"address {addr} below level 0")
    out = []
    if downs:
        out.append(addr[:-1])                      # parent one step up the descent
        if lev >= 1:
            out.append(addr + (0,))
            out.append(addr + (1,))
    else:
        out.append((u + 1,))                       # parent on the ancestor spine
        if lev >= 1:
            if u == 0:
                out.append((0, 0))
                out.append((0, 1))
            else:
                out.append((u - 1,))               # spine child, index 0 by convention
                out.append((u, 1))
    return out


def canopy_parent(addr: VertexId) -> VertexId:
    if len(addr) > 1:
        return addr[:-1]
    return (addr[0] + 1,)


def canopy_instance(seed: int, root_level: int) -> LocalGraph:
    g = LocalGraph(seed, (0,),
                   lambda v: canopy_neighbors(v, root_level),
                   meta={"class": root_level, "root_level": root_level})
    return g


def level_weights(ratio: float = 2.0, tail: float = LEVEL_TAIL) -> list:
    """Truncated level law P(n) proportional to ratio^-(n+1)."""
    weights = []
    n = 0
    total_kept = 0.0
    while True:
        w = (ratio - 1.0) / ratio * ratio ** (-n)
        # for ratio=2 this is 2^-(n+1); general ratio gives the geometric law
        weights.append(w)
        total_kept += w
        if 1.0 - total_kept < tail:
            break
        n += 1
        if n > 200:
            break
    s = sum(weights)
    return [w / s for w in weights]


class CanopySource(GraphSource):
    """Canopy tree with geometric root-level law.

    ``level_ratio`` defaults to 2 (the invariant law); other ratios are
    deliberate negative controls for the mass-transport tests.
    """

    kind = "canopy"

    def __init__(self, level_ratio: float = 2.0, level_tail: float = LEVEL_TAIL):
        if level_ratio <= 1.0:
            raise ValueError("level_ratio must exceed 1")
        self.level_ratio = float(level_ratio)
        self.level_tail = float(level_tail)
        self._weights = level_weights(self.level_ratio, self.level_tail)
        self._cum = []
        acc = 0.0
        for w in self._weights:
            acc += w
            self._cum.append(acc)

    @property
    def descriptor(self) -> dict:
        params = {"level_tail": self.level_tail}
        if self.level_ratio != 2.0:
            params["level_ratio"] = self.level_ratio
        return {"kind": self.kind, "params": params}

    def sample_level(self, seed: int) -> int:
        u = Stream(fold(seed, 0xCA)).uniform()
        for n, c in enumerate(self._cum):
            if u < c:
                return n
        return len(self._cum) - 1

    def sample(self, seed: int) -> LocalGraph:
        return canopy_instance(seed, self.sample_level(seed))

    def exact_strata(self):
        got = getattr(self, "_strata", None)
        if got is None:
            got = [(w, canopy_instance(fold(9001, n), n))
                   for n, w in enumerate(self._weights)]
            self._strata = got
        return got, 0.0  # weights renormalized; raw discarded mass <= level_tail

    def annealed_phi_exact(self, r: int, p: float) -> float:
        """Level-stratified exact value: on a tree the ball functional is
        p^(r+1) times the sphere count one step out."""
        total = 0.0
        for n, w in enumerate(self._weights):
            total += w * canopy_distance_count(n, r + 1) * p ** (r + 1)
        return total

    def parent_of(self, g: LocalGraph, v: VertexId):
        return canopy_parent(v)

    def level(self, g: LocalGraph, v: VertexId) -> int:
        return level_of(v, g.meta["root_level"])

    def max_degree(self):
        return 3

    def truncation_levels(self) -> int:
        return len(self._weights)


def canopy_source(level_ratio: float = 2.0) -> CanopySource:
    """The canopy tree with its invariant root-level law (ratio 2)."""
    return CanopySource(level_ratio=level_ratio)


def canopy_distance_count(n: int, d: int) -> int:
    """Number of canopy vertices at distance exactly d from a level-n root.

    Splits by the number of ancestor steps u taken before descending:
    pure descent (u=0, only if d <= n), the ancestor itself (u=d), and a
    descent of d-u-1 extra steps into the off-spine subtree hanging at
    height u (possible while the subtree is deep enough).
    """
    if d == 0:
        return 1
    total = 1  # the d-th ancestor
    if d <= n:
        total += 2 ** d
    for u in range(1, d):
        depth = d - u - 1           # extra steps below the off-spine sibling
        if depth <= n + u - 1:
            total += 2 ** depth
    return total


register("canopy", lambda p: CanopySource(**p))
