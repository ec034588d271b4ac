"""Square-lattice sources: the plane, finite boxes, and the box-chain graphs.

``box_source(n)`` is the plane with every vertex blown up into a (2n+1) x
(2n+1) box and every edge replaced by a two-edge path joining facing side
midpoints; its root is uniform over box vertices and path midpoints with the
exact unimodular weights.
"""
from __future__ import annotations

from ..graphs import LocalGraph, VertexId
from ..rng import Stream, fold
from . import GraphSource, register


class Z2Source(GraphSource):
    kind = "z2"

    @property
    def descriptor(self) -> dict:
        return {"kind": "z2", "params": {}}

    def max_degree(self):
        return 4

    @staticmethod
    def neighbors(v: VertexId) -> list:
        x, y = v
        return [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]

    def sample(self, seed: int) -> LocalGraph:
        return LocalGraph(seed, (0, 0), self.neighbors, meta={"class": 0})

    def exact_strata(self):
        return [(1.0, self.sample(4242))], 0.0


class QnSource(GraphSource):
    """Finite box [-n, n]^2 with a uniform root, addressed relative to it."""

    kind = "qn"

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = int(n)

    @property
    def descriptor(self) -> dict:
        return {"kind": "qn", "params": {"n": self.n}}

    def max_degree(self):
        return 4

    def instance(self, seed: int, off: tuple) -> LocalGraph:
        n = self.n
        ox, oy = off

        def neighbors(v: VertexId) -> list:
            dx, dy = v
            out = []
            for sx, sy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ax, ay = ox + dx + sx, oy + dy + sy
                if -n <= ax <= n and -n <= ay <= n:
                    out.append((dx + sx, dy + sy))
            return out

        return LocalGraph(seed, (0, 0), neighbors,
                          meta={"class": off, "offset": off})

    def sample(self, seed: int) -> LocalGraph:
        side = 2 * self.n + 1
        s = Stream(fold(seed, 0x9B))
        i = s.randint(side * side)
        off = (i % side - self.n, i // side - self.n)
        return self.instance(seed, off)

    def exact_strata(self):
        side = 2 * self.n + 1
        w = 1.0 / (side * side)
        out = []
        for x in range(-self.n, self.n + 1):
            for y in range(-self.n, self.n + 1):
                out.append((w, self.instance(fold(777, x, y), (x, y))))
        return out, 0.0


_BOX, _MID = 0, 1


class BoxChainSource(GraphSource):
    """Plane of (2n+1)-boxes joined by two-edge midpoint paths."""

    kind = "box"

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = int(n)

    @property
    def descriptor(self) -> dict:
        return {"kind": "box", "params": {"n": self.n}}

    def max_degree(self):
        return 4

    def _neighbors(self, v: VertexId) -> list:
        n = self.n
        if v[0] == _BOX:
            _, c, d, i, j = v
            out = []
            for sx, sy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + sx, j + sy
                if -n <= ii <= n and -n <= jj <= n:
                    out.append((_BOX, c, d, ii, jj))
            if i == n and j == 0:
                out.append((_MID, c, d, 0))
            if i == -n and j == 0:
                out.append((_MID, c - 1, d, 0))
            if j == n and i == 0:
                out.append((_MID, c, d, 1))
            if j == -n and i == 0:
                out.append((_MID, c, d - 1, 1))
            return out
        _, c, d, axis = v
        if axis == 0:
            return [(_BOX, c, d, n, 0), (_BOX, c + 1, d, -n, 0)]
        return [(_BOX, c, d, 0, n), (_BOX, c, d + 1, 0, -n)]

    def instance(self, seed: int, root: VertexId) -> LocalGraph:
        return LocalGraph(seed, root, self._neighbors,
                          meta={"class": root})

    def root_classes(self) -> list:
        """(weight, root address) pairs for the unimodular root law."""
        n = self.n
        side = 2 * n + 1
        w_total = side * side + 2  # box vertices plus the two owned midpoints
        out = []
        for i in range(-n, n + 1):
            for j in range(-n, n + 1):
                out.append((1.0 / w_total, (_BOX, 0, 0, i, j)))
        out.append((1.0 / w_total, (_MID, 0, 0, 0)))
        out.append((1.0 / w_total, (_MID, 0, 0, 1)))
        return out

    def sample(self, seed: int) -> LocalGraph:
        n = self.n
        side = 2 * n + 1
        w_total = side * side + 2
        s = Stream(fold(seed, 0xB0))
        u = s.randint(w_total)
        if u < side * side:
            root = (_BOX, 0, 0, u % side - n, u // side - n)
        elif u == side * side:
            root = (_MID, 0, 0, 0)
        else:
            root = (_MID, 0, 0, 1)
        return self.instance(seed, root)

    def exact_strata(self):
        out = [(w, self.instance(fold(555, *root), root))
               for w, root in self.root_classes()]
        return out, 0.0


def z2_source() -> Z2Source:
    return Z2Source()


def lattice_box_source(n: int) -> QnSource:
    return QnSource(n)


def box_source(n: int) -> BoxChainSource:
    return BoxChainSource(n)


register("z2", lambda p: Z2Source())
register("qn", lambda p: QnSource(int(p["n"])))
register("box", lambda p: BoxChainSource(int(p["n"])))
