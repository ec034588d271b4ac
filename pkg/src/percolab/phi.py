"""The boundary-connection functional phi and its critical-point machinery.

For a finite vertex set S containing the root o of an instance,

    phi_p(S) = sum over boundary edges e of S of  p * P(o <-> e_inner in S),

the expected number of open boundary edges whose inner endpoint is reached
from the root by an open path inside S.  A set with phi_p(S) < 1 witnesses
that p is below the annealed witness threshold.  Three evaluators are kept
deliberately independent of each other: exhaustive enumeration, the unique-
path formula on trees, and Monte Carlo; they cross-check one another in the
test suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .graphs import Ball, LocalGraph, ball
from .percolation import (FiniteGraph, OracleCapError, UnionFind,
                          connection_probabilities)
from .reports import EstimateReport, Z95, mean_ci
from .rng import bulk_uniforms, fold
from .sources import GraphSource

PHI_BRUTE_EDGE_CAP = 24


@dataclass
class PhiResult:
    value: float
    p: float
    method: str                     # brute | tree | monte_carlo | canopy_series
    set_size: int
    boundary_size: int
    se: Optional[float] = None

    @property
    def ci(self) -> Optional[tuple]:
        if self.se is None:
            return None
        return (self.value - Z95 * self.se, self.value + Z95 * self.se)


def _induced_graph(b: Ball) -> FiniteGraph:
    return FiniteGraph.from_ball(b)


def _check_rooted(b: Ball):
    if b.center not in b.vertices:
        raise ValueError("set does not contain the root")


def phi_bruteforce(b: Ball, p: float) -> PhiResult:
    """Exact phi by summing all configurations of the induced edges."""
    _check_rooted(b)
    if len(b.edges) > PHI_BRUTE_EDGE_CAP:
        raise OracleCapError(
            f"{len(b.edges)} induced edges exceeds the exact cap {PHI_BRUTE_EDGE_CAP}")
    g = _induced_graph(b)
    probs = connection_probabilities(g, p, b.center)
    val = p * sum(probs[inner] for inner, _outer in b.boundary_edges)
    return PhiResult(value=val, p=p, method="brute",
                     set_size=len(b.vertices), boundary_size=len(b.boundary_edges))


def phi_tree(b: Ball, p: float) -> PhiResult:
    """Exact phi on an acyclic set: unique paths give p^(dist(o, e_inner)+1)."""
    _check_rooted(b)
    if not b.is_tree():
        raise ValueError("set contains a cycle; the unique-path formula fails")
    # distances inside the set: BFS over induced edges (ball distances agree
    # for balls, but this works for any connected acyclic set)
    adj = b.adjacency()
    dist = {b.center: 0}
    frontier = [b.center]
    while frontier:
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        frontier = nxt
    val = sum(p ** (dist[inner] + 1) for inner, _outer in b.boundary_edges)
    return PhiResult(value=val, p=p, method="tree",
                     set_size=len(b.vertices), boundary_size=len(b.boundary_edges))


def phi_monte_carlo(b: Ball, p: float, replicas: int, seed: int,
                    stream: int = 0) -> PhiResult:
    """Unbiased estimate: percolate inside the set (plus the boundary edges
    themselves) and count open boundary edges whose inner end is reached."""
    _check_rooted(b)
    if p == 0.0:
        return PhiResult(value=0.0, p=p, method="monte_carlo",
                         set_size=len(b.vertices),
                         boundary_size=len(b.boundary_edges), se=0.0)
    g = _induced_graph(b)
    idx = g.index()
    eidx = [(idx[a], idx[bb]) for a, bb in g.edges]
    binner = [idx[inner] for inner, _ in b.boundary_edges]
    n = len(g.vertices)
    m = len(eidx)
    nb = len(binner)
    root = idx[b.center]
    total = 0.0
    total_sq = 0.0
    for i in range(replicas):
        u = bulk_uniforms(seed, stream + i, m + nb)
        uf = UnionFind(n)
        for e, (a, c) in enumerate(eidx):
            if u[e] < p:
                uf.union(a, c)
        rroot = uf.find(root)
        cnt = 0
        for t in range(nb):
            if u[m + t] < p and uf.find(binner[t]) == rroot:
                cnt += 1
        total += cnt
        total_sq += cnt * cnt
    mean, se, _lo, _hi = mean_ci(total, total_sq, replicas)
    return PhiResult(value=mean, p=p, method="monte_carlo",
                     set_size=len(b.vertices), boundary_size=nb, se=se)


def phi_auto(b: Ball, p: float, mc_replicas: int = 20_000,
             seed: int = 0, stream: int = 0) -> PhiResult:
    """Tree formula when acyclic, exhaustive when small, else Monte Carlo."""
    if b.is_tree():
        return phi_tree(b, p)
    if len(b.edges) <= PHI_BRUTE_EDGE_CAP:
        return phi_bruteforce(b, p)
    return phi_monte_carlo(b, p, mc_replicas, seed, stream)


# --------------------------------------------------------------------------
# canopy closed form and exact series


def canopy_expected_phi_closed(p: float, r: int) -> float:
    """Closed form of the annealed phi of radius-r balls on the canopy tree:
    2p (sqrt(2) p)^r for even r, (3/2) (sqrt(2) p)^(r+1) for odd r."""
    if r % 2 == 0:
        return 2.0 * p * (math.sqrt(2.0) * p) ** r
    return 1.5 * (math.sqrt(2.0) * p) ** (r + 1)


def canopy_expected_phi_series(p: float, r: int, levels: int = 120) -> float:
    """Annealed phi of radius-r canopy balls by direct level summation.

    Independent of the closed form: on a tree phi of a ball equals
    p^(r+1) times the number of vertices on the sphere of radius r+1, and
    sphere sizes come from the distance-count recursion.
    """
    from .sources.canopy import canopy_distance_count

    total = 0.0
    for n in range(levels):
        w = 2.0 ** (-n - 1)
        total += w * canopy_distance_count(n, r + 1) * p ** (r + 1)
    return total


# --------------------------------------------------------------------------
# annealed phi over a source


def expected_phi(src: GraphSource, r: int, p: float, method: str = "auto",
                 replicas: int = 10_000, seed: int = 0,
                 inner_replicas: int = 4_000) -> EstimateReport:
    """Monte Carlo over roots of phi_p(B(o, r)); the inner value is exact
    whenever it can be (trees, small edge sets) and per-class caching makes
    sources with deterministic instances cheap.  ``method`` forces the inner
    evaluator; "exact" computes the root average without sampling."""
    if method == "exact":
        return expected_phi_exact(src, r, p)
    evaluators = {
        "auto": phi_auto,
        "brute": lambda b, pp, **kw: phi_bruteforce(b, pp),
        "tree": lambda b, pp, **kw: phi_tree(b, pp),
        "mc": lambda b, pp, **kw: phi_monte_carlo(
            b, pp, kw.get("mc_replicas", inner_replicas), kw.get("seed", 0)),
    }
    if method not in evaluators:
        raise ValueError(f"unknown method {method!r}")
    evaluate = evaluators[method]
    total = 0.0
    total_sq = 0.0
    cache: dict = {}
    inner_mc = 0
    for i in range(replicas):
        g = src.sample(fold(seed, 0x0F, i))
        cls = src.instance_class(g)
        val = cache.get(cls) if cls is not None else None
        if val is None:
            b = ball(g, g.root, r)
            res = evaluate(b, p, mc_replicas=inner_replicas,
                           seed=fold(seed, 0x10, i))
            val = res.value
            if res.method == "monte_carlo":
                inner_mc += 1
            if cls is not None and res.method != "monte_carlo":
                cache[cls] = val
        total += val
        total_sq += val * val
    mean, se, lo, hi = mean_ci(total, total_sq, replicas)
    return EstimateReport(
        experiment="expected_phi", descriptor=src.descriptor, p=p, radius=r,
        replicas=replicas, estimate=mean, ci_lo=lo, ci_hi=hi, seed=seed,
        extra={"method": method, "inner_mc_fraction": inner_mc / replicas})


_strata_balls: dict = {}


def expected_phi_exact(src: GraphSource, r: int, p: float) -> EstimateReport:
    """Exact annealed phi: a source-level closed evaluation when available,
    else the per-class average over exact strata."""
    direct = src.annealed_phi_exact(r, p)
    if direct is not None:
        total = direct
    else:
        strata = src.exact_strata()
        if strata is None:
            raise ValueError("source supports no exact annealed evaluation")
        classes, _tail = strata
        total = 0.0
        for ci, (w, g) in enumerate(classes):
            key = (id(src), ci, r)
            b = _strata_balls.get(key)
            if b is None:
                b = ball(g, g.root, r)
                _strata_balls[key] = b
            res = phi_auto(b, p)
            if res.method == "monte_carlo":
                raise ValueError("exact strata require exactly evaluable balls")
            total += w * res.value
    return EstimateReport(
        experiment="expected_phi", descriptor=src.descriptor, p=p, radius=r,
        replicas=0, estimate=total, ci_lo=total, ci_hi=total, seed=0,
        extra={"method": "exact"})


# --------------------------------------------------------------------------
# witness search and the annealed threshold bisection


def witness_search(g: LocalGraph, p: float, r_max: int,
                   trim: bool = False, mc_replicas: int = 20_000,
                   seed: int = 0) -> Optional[tuple]:
    """First ball B(o, r), r <= r_max, with phi_p < 1 on this instance.

    Exact evaluations accept on value < 1; Monte Carlo ones require the
    value to clear 1 by three standard errors.  Absence of a witness among
    balls proves nothing about larger sets.  With ``trim``, a greedy pass
    also tries deleting sphere vertices to shrink phi below 1.
    """
    for r in range(r_max + 1):
        b = ball(g, g.root, r)
        res = phi_auto(b, p, mc_replicas=mc_replicas, seed=fold(seed, r))
        threshold = 1.0 if res.se is None else 1.0 - 3.0 * res.se
        if res.value < threshold:
            return b, res
        if trim and res.se is None:
            trimmed = _greedy_trim(g, b, p)
            if trimmed is not None:
                return trimmed
    return None


def _greedy_trim(g: LocalGraph, b: Ball, p: float) -> Optional[tuple]:
    """Drop sphere vertices one at a time while phi strictly decreases."""
    verts = set(b.vertices)
    best = phi_auto(b, p)
    improved = True
    while improved and len(verts) > 1:
        improved = False
        for v in sorted(verts, key=lambda x: -b.dist.get(x, 0)):
            if v == b.center:
                continue
            cand = verts - {v}
            nb = _induced_ball(g, b.center, cand, b.radius)
            if nb is None:
                continue
            try:
                res = phi_auto(nb, p)
            except OracleCapError:
                continue
            if res.se is not None:
                continue
            if res.value < best.value:
                verts = cand
                b = nb
                best = res
                improved = True
                break
    if best.value < 1.0:
        return b, best
    return None


def _induced_ball(g: LocalGraph, center, verts: set, radius: int) -> Optional[Ball]:
    """Package a connected vertex set containing the center as a Ball."""
    # connectivity check by BFS inside verts
    seen = {center}
    frontier = [center]
    while frontier:
        nxt = []
        for u in frontier:
            for w in g.neighbors(u):
                if w in verts and w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    if seen != verts:
        return None
    edges = set()
    boundary = []
    dist = {center: 0}
    frontier = [center]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for w in g.neighbors(u):
                if w in verts:
                    edges.add(frozenset((u, w)))
                    if w not in dist:
                        dist[w] = d
                        nxt.append(w)
                else:
                    boundary.append((u, w))
        frontier = nxt
    return Ball(center=center, radius=radius, vertices=set(verts), edges=edges,
                boundary_edges=boundary, dist=dist)


def ptilde_a_bisect(src: GraphSource, r_max: int, p_lo: float, p_hi: float,
                    tol: float = 0.01, replicas: int = 20_000, seed: int = 0,
                    replica_budget: int = 320_000,
                    use_exact: bool = True) -> EstimateReport:
    """Bisect the largest p at which some ball radius r <= r_max has
    annealed phi below 1.

    Preconditions: a witness radius exists at ``p_lo`` and none is found at
    ``p_hi``.  Exact strata are used when the source provides them;
    otherwise each scan is Monte Carlo with a three-standard-error
    inconclusive band and a replica budget.
    """
    exact = use_exact and (src.annealed_phi_exact(0, 0.5) is not None
                           or src.exact_strata() is not None)

    def scan(p: float, n_rep: int) -> str:
        found_none_above = True
        for r in range(r_max + 1):
            if exact:
                est = expected_phi_exact(src, r, p)
                if est.estimate < 1.0:
                    return "witness"
                continue
            est = expected_phi(src, r, p, replicas=n_rep, seed=fold(seed, r))
            se = est.se
            if est.estimate < 1.0 - 3.0 * se:
                return "witness"
            if est.estimate < 1.0 + 3.0 * se:
                found_none_above = False
        if exact:
            return "none"
        return "none" if found_none_above else "inconclusive"

    def verdict(p: float) -> str:
        n_rep = replicas
        while True:
            v = scan(p, n_rep)
            if v != "inconclusive" or n_rep >= replica_budget:
                return v
            n_rep *= 2

    lo_v = verdict(p_lo)
    hi_v = verdict(p_hi)
    if lo_v != "witness":
        raise ValueError(f"no witness radius at p_lo={p_lo}; bracket invalid")
    if hi_v == "witness":
        raise ValueError(f"witness still present at p_hi={p_hi}; bracket invalid")
    notes = []
    lo, hi = p_lo, p_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v = verdict(mid)
        if v == "witness":
            lo = mid
        elif v == "none":
            hi = mid
        else:
            notes.append(f"inconclusive at p={mid:.6g} after {replica_budget} replicas")
            break
    est = 0.5 * (lo + hi)
    return EstimateReport(
        experiment="ptilde_a", descriptor=src.descriptor, p=None, radius=r_max,
        replicas=replicas, estimate=est, ci_lo=lo, ci_hi=hi, seed=seed,
        extra={"exact": exact, "notes": notes, "tol": tol})


def phi_decay_diagnostic(src: GraphSource, p: float, radii: list,
                         replicas: int = 10_000, seed: int = 0) -> dict:
    """Annealed phi against radius with a fitted exponential rate.

    A fitted rate above 1 flags growth (no ball witnesses appear even
    though the graph may still be subcritical at this p).
    """
    rows = []
    for r in radii:
        est = expected_phi(src, r, p, replicas=replicas, seed=fold(seed, 17, r))
        rows.append({"radius": r, "phi": est.estimate,
                     "ci_lo": est.ci_lo, "ci_hi": est.ci_hi})
    xs = [row["radius"] for row in rows]
    ys = [math.log(max(row["phi"], 1e-300)) for row in rows]
    n = len(xs)
    xbar = sum(xs) / n
    ybar = sum(ys) / n
    sxx = sum((x - xbar) ** 2 for x in xs)
    sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    slope = sxy / sxx if sxx > 0 else 0.0
    rate = math.exp(slope)
    return {"p": p, "rows": rows, "rate": rate, "growing": rate > 1.0,
            "replicas": replicas, "seed": seed}
