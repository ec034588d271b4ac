"""Measure-preserving operations on rooted-graph sources.

Edge replacement splices a fixed two-pointed gadget into every edge and
reweights the root among original and gadget-internal vertices; vertex
replacement blows vertices of the plane up into labelled boxes with the root
box size-biased; contraction collapses the clusters of an invariant edge
labelling, with the root cluster reweighted by 1/|cluster|.  All reweighting
is exact (closed-form label tilts or rejection with a certified bound).
"""
from __future__ import annotations

from ..graphs import BudgetExceededError, LocalGraph, VertexId
from ..laws import OffspringLaw
from ..rng import Stream, edge_key, edge_uniform, fold, grid_uniform_block
from . import GraphSource, register, source_from_descriptor
from .lattice import Z2Source

_BASE, _INNER = 0, 1


class RetryCapError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# edge replacement


class EdgeReplacementSource(GraphSource):
    """Replace every base edge by a path gadget (length >= 1).

    ``length == 1`` is the identity kit.  The root is re-biased exactly:
    a base instance is accepted with probability proportional to
    ``1 + deg(o) (length-1) / 2`` and the new root falls on the old root or
    uniformly on an incident internal slot with the matching weights.
    """

    kind = "edge_repl"

    def __init__(self, base: GraphSource, length: int = 1):
        if length < 1:
            raise ValueError("path gadget length must be >= 1")
        self.base = base
        self.length = int(length)
        dmax = base.max_degree()
        if dmax is None:
            raise ValueError("edge replacement needs a base with a known max degree")
        self._mbound = 1.0 + dmax * (self.length - 1) / 2.0

    @property
    def descriptor(self) -> dict:
        return {"kind": self.kind,
                "params": {"base": self.base.descriptor, "length": self.length}}

    def max_degree(self):
        return max(self.base.max_degree(), 2)

    def _neighbors_fn(self, bg: LocalGraph):
        L = self.length

        def canon(x: VertexId, y: VertexId) -> tuple:
            return (x, y) if x <= y else (y, x)

        def inner_addr(x: VertexId, y: VertexId, i: int) -> VertexId:
            a, b = canon(x, y)
            return (_INNER, len(a)) + a + b + (i,)

        def parse_inner(v: VertexId) -> tuple:
            la = v[1]
            a = v[2:2 + la]
            b = v[2 + la:-1]
            return a, b, v[-1]

        def neighbors(v: VertexId) -> list:
            if v[0] == _BASE:
                x = v[1:]
                out = []
                for y in bg.neighbors(x):
                    if L == 1:
                        out.append((_BASE,) + y)
                    else:
                        a, b = canon(x, y)
                        i = 1 if x == a else L - 1
                        out.append(inner_addr(x, y, i))
                return out
            a, b, i = parse_inner(v)
            out = []
            out.append(((_BASE,) + a) if i == 1 else inner_addr(a, b, i - 1))
            out.append(((_BASE,) + b) if i == L - 1 else inner_addr(a, b, i + 1))
            return out

        return neighbors, inner_addr

    def sample(self, seed: int) -> LocalGraph:
        L = self.length
        for attempt in range(10_000):
            inst_seed = fold(seed, 0xE1, attempt)
            bg = self.base.sample(inst_seed)
            deg = len(bg.neighbors(bg.root))
            m = 1.0 + deg * (L - 1) / 2.0
            s = Stream(fold(inst_seed, 0xE2))
            if s.uniform() * self._mbound > m:
                continue
            neighbors, inner_addr = self._neighbors_fn(bg)
            u = s.uniform() * m
            if u < 1.0 or L == 1:
                root = (_BASE,) + bg.root
            else:
                slot = s.randint(deg * (L - 1))
                y = bg.neighbors(bg.root)[slot // (L - 1)]
                i_from_root = 1 + slot % (L - 1)
                a, _b = (bg.root, y) if bg.root <= y else (y, bg.root)
                i = i_from_root if bg.root == a else L - i_from_root
                root = inner_addr(bg.root, y, i)
            cls = self.base.instance_class(bg)
            meta = {"class": None if cls is None else (cls, root)}
            return LocalGraph(inst_seed, root, neighbors, meta=meta)
        raise RetryCapError("edge replacement rejection did not accept")


def edge_replacement(base: GraphSource, length: int = 1) -> EdgeReplacementSource:
    """Path-kit edge replacement; length 1 leaves the base unchanged."""
    return EdgeReplacementSource(base, length)


# --------------------------------------------------------------------------
# vertex replacement on the plane


class VertexReplacementSource(GraphSource):
    """Plane vertices blown up into boxes with side labels per row/column.

    Cell (m, n) becomes a grid of 2*X_m columns and 2*Y_n rows, where the X
    are per-column and the Y per-row iid draws from ``side_law`` (support on
    positive integers).  Side midpoint anchors of adjacent boxes are joined
    directly; sharing the row/column draw keeps facing anchors aligned.  The
    exact unimodular root law size-biases the root cell's two draws; turning
    ``bias_correction`` off yields a deliberately non-unimodular control.
    """

    kind = "vertex_repl"

    def __init__(self, side_law: OffspringLaw, bias_correction: bool = True):
        if 0 in side_law.pmf:
            raise ValueError("box side law must have support >= 1")
        self.side_law = side_law
        self.bias = bool(bias_correction)
        self._biased = side_law.size_biased()

    @property
    def descriptor(self) -> dict:
        return {"kind": self.kind,
                "params": {"side_law": self.side_law.descriptor(),
                           "bias_correction": self.bias}}

    def max_degree(self):
        return 4

    def sample(self, seed: int) -> LocalGraph:
        side_law = self.side_law
        col_biased = self._biased if self.bias else side_law
        row_biased = col_biased
        cols: dict = {}
        rows: dict = {}

        def col_halfwidth(m: int) -> int:
            got = cols.get(m)
            if got is None:
                law = col_biased if m == 0 else side_law
                got = law.sample(Stream(fold(seed, 0x7C, m)))
                cols[m] = got
            return got

        def row_halfwidth(n: int) -> int:
            got = rows.get(n)
            if got is None:
                law = row_biased if n == 0 else side_law
                got = law.sample(Stream(fold(seed, 0x7D, n)))
                rows[n] = got
            return got

        def neighbors(v: VertexId) -> list:
            m, n, a, b = v
            w, h = 2 * col_halfwidth(m), 2 * row_halfwidth(n)
            out = []
            for sx, sy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                aa, bb = a + sx, b + sy
                if 0 <= aa < w and 0 <= bb < h:
                    out.append((m, n, aa, bb))
            # anchors: E (w-1, h/2), W (0, h/2), N (w/2, h-1), S (w/2, 0)
            if a == w - 1 and b == h // 2:
                out.append((m + 1, n, 0, h // 2))
            if a == 0 and b == h // 2:
                ww = 2 * col_halfwidth(m - 1)
                out.append((m - 1, n, ww - 1, h // 2))
            if b == h - 1 and a == w // 2:
                out.append((m, n + 1, a, 0))
            if b == 0 and a == w // 2:
                hs = 2 * row_halfwidth(n - 1)
                out.append((m, n - 1, a, hs - 1))
            return out

        s = Stream(fold(seed, 0x7E))
        w0, h0 = 2 * col_halfwidth(0), 2 * row_halfwidth(0)
        a0 = s.randint(w0)
        b0 = s.randint(h0)
        return LocalGraph(seed, (0, 0, a0, b0), neighbors,
                          meta={"root_box": (w0 // 2, h0 // 2)})

    def root_box_halfsides(self, g: LocalGraph) -> tuple:
        """(Y, Y') of the root's box; size-biased when correction is on."""
        return g.meta["root_box"]


def vertex_replacement(side_law: OffspringLaw,
                       bias_correction: bool = True) -> VertexReplacementSource:
    return VertexReplacementSource(side_law, bias_correction)


# --------------------------------------------------------------------------
# contraction of an invariant edge labelling


class ContractionSource(GraphSource):
    """Quotient of the plane by iid Bernoulli(beta) label-1 edge clusters.

    Quotient vertices are label-1 clusters, named by their lexicographically
    smallest member; the root cluster is accepted with probability
    1/|cluster|, which realizes the size-debiased quotient law exactly.
    """

    kind = "contraction"

    def __init__(self, beta: float, cluster_cap: int = 200_000):
        if not 0.0 <= beta < 0.5:
            raise ValueError("label density must stay below the plane's "
                             "percolation threshold so clusters are finite")
        self.beta = float(beta)
        self.cluster_cap = int(cluster_cap)

    @property
    def descriptor(self) -> dict:
        return {"kind": self.kind, "params": {"beta": self.beta}}

    def max_degree(self):
        return None  # cluster boundaries can be long

    _BLOCK = 32

    def _make_label_fn(self, inst_seed: int):
        """Labels come in vectorized 32x32 blocks; 'orient' 0 marks the edge
        from (x, y) east to (x+1, y), 1 the edge north to (x, y+1)."""
        beta = self.beta
        blocks: dict = {}
        B = self._BLOCK

        def block(orient: int, bx: int, by: int):
            key = (orient, bx, by)
            got = blocks.get(key)
            if got is None:
                u = grid_uniform_block(inst_seed, 0x1A, orient, bx * B, by * B, B)
                got = (u < beta).tolist()
                blocks[key] = got
            return got

        def label_open(x: VertexId, y: VertexId) -> bool:
            if y < x:
                x, y = y, x
            orient = 0 if y[0] == x[0] + 1 else 1
            a, b = x
            return block(orient, a >> 5, b >> 5)[a & 31][b & 31]

        return label_open

    def _cluster(self, label_open, v: VertexId) -> frozenset:
        x, y = v
        # singleton fast path: all four incident labels closed
        if not (label_open(v, (x + 1, y)) or label_open((x - 1, y), v)
                or label_open(v, (x, y + 1)) or label_open((x, y - 1), v)):
            return frozenset((v,))
        seen = {v}
        frontier = [v]
        while frontier:
            nxt = []
            for u in frontier:
                a, b = u
                for w in ((a + 1, b), (a - 1, b), (a, b + 1), (a, b - 1)):
                    if w not in seen and label_open(u, w):
                        seen.add(w)
                        nxt.append(w)
                        if len(seen) > self.cluster_cap:
                            raise BudgetExceededError(
                                "label cluster exceeded the exploration cap")
            frontier = nxt
        return frozenset(seen)

    def sample(self, seed: int) -> LocalGraph:
        for attempt in range(100_000):
            inst_seed = fold(seed, 0xC0, attempt)
            label_open = self._make_label_fn(inst_seed)
            root_cluster = self._cluster(label_open, (0, 0))
            size = len(root_cluster)
            if Stream(fold(inst_seed, 0xC1)).uniform() >= 1.0 / size:
                continue

            rep_cache: dict = {}
            members_cache: dict = {}

            def members_of(rep: VertexId) -> frozenset:
                got = members_cache.get(rep)
                if got is None:
                    got = self._cluster(label_open, rep)
                    members_cache[rep] = got
                return got

            def cluster_of(v: VertexId) -> tuple:
                got = rep_cache.get(v)
                if got is not None:
                    return got
                members = self._cluster(label_open, v)
                rep = min(members)
                for u in members:
                    rep_cache[u] = rep
                members_cache[rep] = members
                return rep

            def neighbors(c: VertexId) -> list:
                members = members_of(c)
                out = set()
                for u in members:
                    a, b = u
                    for w in ((a + 1, b), (a - 1, b), (a, b + 1), (a, b - 1)):
                        if w not in members:
                            out.add(cluster_of(w))
                return sorted(out)

            root = min(root_cluster)
            members_cache[root] = root_cluster
            for u in root_cluster:
                rep_cache[u] = root
            return LocalGraph(inst_seed, root, neighbors,
                              meta={"root_cluster_size": size})
        raise RetryCapError("contraction rejection did not accept")


def contraction(beta: float) -> ContractionSource:
    return ContractionSource(beta)


# --------------------------------------------------------------------------
# percolation cluster of the root


class PercClusterSource(GraphSource):
    """Cluster of the root under Bernoulli(p) percolation on a base source.

    Optionally conditioned to reach a given radius, by resampling up to a
    retry cap (failure raises; it usually signals a subcritical p).
    """

    kind = "perc_cluster"

    def __init__(self, base: GraphSource, p: float,
                 survive_radius: int = 0, retry_cap: int = 1000):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        self.base = base
        self.p = float(p)
        self.survive_radius = int(survive_radius)
        self.retry_cap = int(retry_cap)

    @property
    def descriptor(self) -> dict:
        return {"kind": self.kind,
                "params": {"base": self.base.descriptor, "p": self.p,
                           "survive_radius": self.survive_radius}}

    def max_degree(self):
        return self.base.max_degree()

    def _open(self, bg: LocalGraph, x: VertexId, y: VertexId) -> bool:
        ek = edge_key(bg.vertex_key(x), bg.vertex_key(y))
        return edge_uniform(bg.seed, 0x0E, ek) < self.p

    def sample(self, seed: int) -> LocalGraph:
        for attempt in range(self.retry_cap):
            inst_seed = fold(seed, 0x9C, attempt)
            bg = self.base.sample(inst_seed)

            def neighbors(v: VertexId) -> list:
                return [w for w in bg.neighbors(v) if self._open(bg, v, w)]

            g = LocalGraph(inst_seed, bg.root, neighbors, meta={})
            if self.survive_radius <= 0:
                return g
            from ..graphs import ball
            b = ball(g, g.root, self.survive_radius)
            if b.boundary_edges or any(
                    d == self.survive_radius for d in b.dist.values()):
                return g
        raise RetryCapError(
            f"cluster never reached radius {self.survive_radius} in "
            f"{self.retry_cap} tries (p likely subcritical)")


def percolation_cluster_source(base: GraphSource, p: float,
                               survive_radius: int = 0,
                               retry_cap: int = 1000) -> PercClusterSource:
    return PercClusterSource(base, p, survive_radius, retry_cap)


register("edge_repl", lambda p: EdgeReplacementSource(
    source_from_descriptor(p["base"]), int(p.get("length", 1))))
register("vertex_repl", lambda p: VertexReplacementSource(
    _law_from(p.get("side_law", {"name": "power_law_5_2"})),
    bool(p.get("bias_correction", True))))
register("contraction", lambda p: ContractionSource(float(p.get("beta", 0.3))))
register("perc_cluster", lambda p: PercClusterSource(
    source_from_descriptor(p["base"]), float(p["p"]),
    int(p.get("survive_radius", 0)), int(p.get("retry_cap", 1000))))


def _law_from(spec: dict) -> OffspringLaw:
    from .ugw import named_law
    if "pmf" in spec:
        return OffspringLaw.from_dict(spec["pmf"], name=spec.get("name", "custom"))
    return named_law(spec["name"], spec.get("args", []))
