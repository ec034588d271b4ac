"""Statistical mass-transport checks and root-law goodness of fit.

The mass-transport principle says the expected mass the root sends equals
the expected mass it receives, for every isomorphism-invariant nonnegative
pair function with bounded support radius.  Both sums are evaluated on the
same sampled instances (paired), which removes almost all of the variance:
the test statistic is the mean of per-replica send-receive differences.
Symmetric functions vanish identically and serve as null sanity checks; the
asymmetric ones carry the power that makes deliberately wrong root laws
fail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from scipy.stats import chi2, norm

from .graphs import LocalGraph, VertexId
from .rng import fold
from .sources import GraphSource


class ReplicaContext:
    """Per-instance geometry cache shared by all transport evaluators."""

    __slots__ = ("src", "g", "root_dist", "_stats")

    def __init__(self, src: GraphSource, g: LocalGraph, radius: int):
        self.src = src
        self.g = g
        dist = {g.root: 0}
        frontier = [g.root]
        for d in range(1, radius + 1):
            nxt = []
            for u in frontier:
                for w in g.neighbors(u):
                    if w not in dist:
                        dist[w] = d
                        nxt.append(w)
            frontier = nxt
        self.root_dist = dist
        self._stats: dict = {}

    def within(self, k: int) -> list:
        return [v for v, d in self.root_dist.items() if d <= k]

    def sphere_count(self, k: int) -> int:
        return sum(1 for d in self.root_dist.values() if d == k)

    def ball_stats(self, x: VertexId, r: int) -> tuple:
        """(vertex count, boundary edge count) of B(x, r), cached."""
        key = (x, r)
        got = self._stats.get(key)
        if got is not None:
            return got
        g = self.g
        dist = {x: 0}
        frontier = [x]
        for d in range(1, r + 1):
            nxt = []
            for u in frontier:
                for w in g.neighbors(u):
                    if w not in dist:
                        dist[w] = d
                        nxt.append(w)
            frontier = nxt
        bnd = 0
        for u in dist:
            for w in g.neighbors(u):
                if w not in dist:
                    bnd += 1
        got = (len(dist), bnd)
        self._stats[key] = got
        return got


@dataclass(frozen=True)
class TransportFunction:
    """Nonnegative pair function with bounded support radius.

    ``sent(ctx)`` evaluates sum_x f(o, x) and ``received(ctx)`` evaluates
    sum_x f(x, o), both finite sums inside the root ball of radius
    ``radius``.
    """

    name: str
    radius: int
    sent: Callable[[ReplicaContext], float]
    received: Callable[[ReplicaContext], float]
    needs_parent: bool = False
    symmetric: bool = False


def _deg_root(ctx):
    return float(len(ctx.g.neighbors(ctx.g.root)))


def f_edge() -> TransportFunction:
    """Unit mass across every edge; symmetric, a null check."""
    return TransportFunction("edge", 1, _deg_root, _deg_root, symmetric=True)


def f_distance_k(k: int = 3) -> TransportFunction:
    def total(ctx):
        return float(ctx.sphere_count(k))
    return TransportFunction(f"dist{k}", k, total, total, symmetric=True)


def f_ball_size(r_support: int = 2, r_ball: int = 2) -> TransportFunction:
    """f(x, y) = |B(x, r_ball)| whenever d(x, y) <= r_support."""
    def sent(ctx):
        near = ctx.within(r_support)
        return float(len(near) * ctx.ball_stats(ctx.g.root, r_ball)[0])

    def received(ctx):
        return float(sum(ctx.ball_stats(x, r_ball)[0]
                         for x in ctx.within(r_support)))

    return TransportFunction("ballsize", max(r_support, r_ball), sent, received)


def f_boundary_count(r_ball: int = 1) -> TransportFunction:
    """f(x, y) = |edge boundary of B(x, r_ball)| for neighbours y."""
    def sent(ctx):
        root = ctx.g.root
        return float(len(ctx.g.neighbors(root)) * ctx.ball_stats(root, r_ball)[1])

    def received(ctx):
        root = ctx.g.root
        return float(sum(ctx.ball_stats(y, r_ball)[1]
                         for y in ctx.g.neighbors(root)))

    return TransportFunction("boundary", 1 + r_ball, sent, received)


def f_parent(level_cap: int = 3) -> TransportFunction:
    """Unit mass to the adjacent distinguished parent, capped at vertices
    whose descendant chain is short; sources without a parent skip it."""
    def sent(ctx):
        src, g = ctx.src, ctx.g
        v = g.root
        parent = src.parent_of(g, v)
        if parent is None or parent not in g.neighbors(v):
            return 0.0
        return 1.0 if _chain_depth(src, g, v, level_cap) <= level_cap else 0.0

    def received(ctx):
        src, g = ctx.src, ctx.g
        root = g.root
        total = 0.0
        for x in g.neighbors(root):
            if src.parent_of(g, x) == root and \
                    _chain_depth(src, g, x, level_cap) <= level_cap:
                total += 1.0
        return total

    return TransportFunction("parent", level_cap + 2, sent, received,
                             needs_parent=True)


def _chain_depth(src, g, v, cap: int) -> int:
    """Steps from v down to a childless vertex, capped."""
    parent = src.parent_of(g, v)
    frontier = [v]
    seen = {v}
    if parent is not None:
        seen.add(parent)
    for d in range(cap + 1):
        nxt = []
        for u in frontier:
            for w in g.neighbors(u):
                if w not in seen and src.parent_of(g, w) == u:
                    seen.add(w)
                    nxt.append(w)
        if not nxt:
            return d
        frontier = nxt
    return cap + 1


def standard_battery(src: GraphSource, probe: LocalGraph) -> list:
    """The five stock transports; parent-based ones only where defined."""
    fns = [f_edge(), f_parent(), f_ball_size(), f_boundary_count(),
           f_distance_k(3)]
    if src.parent_of(probe, probe.root) is None:
        fns = [f for f in fns if not f.needs_parent]
    return fns


@dataclass
class MtpReport:
    source: dict
    function: str
    replicas: int
    sent_mean: float
    received_mean: float
    diff_mean: float
    diff_se: float
    z: float
    alpha: float
    passed: bool
    seed: int
    notes: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return self.__dict__.copy()


def _finish(src, fns, sums, replicas, alpha, seed) -> list:
    zcrit = float(norm.ppf(1.0 - alpha / 2.0))
    out = []
    for f in fns:
        tot_s, tot_r, tot_d, tot_d2 = sums[f.name]
        n = replicas
        dmean = tot_d / n
        dvar = max(0.0, tot_d2 / n - dmean * dmean)
        dse = math.sqrt(dvar / n)
        if dse == 0.0:
            z = 0.0 if dmean == 0.0 else math.copysign(math.inf, dmean)
        else:
            z = dmean / dse
        out.append(MtpReport(
            source=src.descriptor, function=f.name, replicas=n,
            sent_mean=tot_s / n, received_mean=tot_r / n,
            diff_mean=dmean, diff_se=dse, z=z, alpha=alpha,
            passed=abs(z) <= zcrit, seed=seed,
            notes={"z_critical": zcrit, "symmetric": f.symmetric}))
    return out


def run_battery(src: GraphSource, fns: list, replicas: int, seed: int,
                alpha: float = 0.01) -> list:
    """All transports evaluated jointly on shared sampled instances."""
    radius = max(f.radius for f in fns)
    sums = {f.name: [0.0, 0.0, 0.0, 0.0] for f in fns}
    cache: dict = {}
    for i in range(replicas):
        g = src.sample(fold(seed, 0x3A, i))
        cls = src.instance_class(g)
        vals = cache.get(cls) if cls is not None else None
        if vals is None:
            ctx = ReplicaContext(src, g, radius)
            vals = [(f.sent(ctx), f.received(ctx)) for f in fns]
            if cls is not None:
                cache[cls] = vals
        for f, (s, r) in zip(fns, vals):
            acc = sums[f.name]
            d = s - r
            acc[0] += s
            acc[1] += r
            acc[2] += d
            acc[3] += d * d
    return _finish(src, fns, sums, replicas, alpha, seed)


def mtp_test(src: GraphSource, f: TransportFunction, replicas: int, seed: int,
             alpha: float = 0.01) -> MtpReport:
    """Paired two-sided test of E[sent] = E[received] for one transport."""
    return run_battery(src, [f], replicas, seed, alpha)[0]


def mtp_battery(src: GraphSource, replicas: int, seed: int,
                alpha: float = 0.01) -> list:
    probe = src.sample(fold(seed, 0x3B))
    return run_battery(src, standard_battery(src, probe), replicas, seed, alpha)


def root_law_check(src: GraphSource, declared: dict, statistic,
                   replicas: int, seed: int, alpha: float = 0.01,
                   min_expected: float = 5.0) -> dict:
    """Chi-square goodness of fit of a root statistic against a declared pmf.

    ``statistic`` maps an instance to a hashable value; declared support
    cells with expected count below ``min_expected`` are pooled, and any
    observed value outside the declared support lands in the pooled cell.
    """
    counts: dict = {}
    for i in range(replicas):
        g = src.sample(fold(seed, 0x44, i))
        v = statistic(g)
        counts[v] = counts.get(v, 0) + 1
    kept = []
    pooled_obs = 0
    for k, q in sorted(declared.items()):
        exp = q * replicas
        obs = counts.pop(k, 0)
        if exp < min_expected:
            pooled_obs += obs
        else:
            kept.append((obs, exp))
    pooled_obs += sum(counts.values())   # values observed outside the support
    pooled_exp = replicas - sum(e for _, e in kept)
    cells = list(kept)
    if pooled_exp > min_expected / 10 or pooled_obs > 0:
        cells.append((pooled_obs, max(pooled_exp, 1e-9)))
    stat = sum((o - e) ** 2 / e for o, e in cells)
    dof = max(1, len(cells) - 1)
    pvalue = float(chi2.sf(stat, dof))
    return {"statistic": stat, "dof": dof, "pvalue": pvalue,
            "passed": pvalue > alpha, "cells": len(cells),
            "replicas": replicas, "seed": seed}
