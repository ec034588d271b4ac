"""Unimodular Galton-Watson trees, optionally conditioned to survive.

The root's degree k is drawn with probability P(X=k-1) / (k E[1/(X+1)]);
every other vertex gets offspring from X independently.  Conditioning on an
infinite tree uses the survival decomposition: a surviving vertex draws its
total offspring from the survival-tilted law, a Binomial-conditioned-positive
number of them stay on the backbone, and the rest root almost-surely finite
trees with the extinction-tilted offspring law.  This samples the conditioned
measure exactly, with no rejection.
"""
from __future__ import annotations

from ..graphs import LocalGraph, VertexId
from ..laws import OffspringLaw, SurvivalDecomposition, extinction_probability
from ..rng import Stream, fold, fold_tuple
from . import GraphSource, register

_ROOT, _BACKBONE, _BAR, _PLAIN = 0, 1, 2, 3


def root_degree_law(law: OffspringLaw, conditioned: bool, q: float) -> OffspringLaw:
    """Degree law of the root vertex (support k >= 1)."""
    weights = {}
    for j, pj in law.pmf.items():
        k = j + 1
        w = pj / k
        if conditioned:
            w *= 1.0 - q ** k
        if w > 0:
            weights[k] = w
    total = sum(weights.values())
    if total <= 0:
        raise ValueError("conditioned root law has no mass; is the law supercritical?")
    return OffspringLaw({k: w / total for k, w in weights.items()},
                        name="ugw_root")


def survival_total_law(law: OffspringLaw, q: float) -> OffspringLaw:
    """Total-offspring law of a vertex conditioned to have surviving issue."""
    weights = {j: pj * (1.0 - q ** j) for j, pj in law.pmf.items() if j >= 1}
    total = sum(weights.values())
    return OffspringLaw({j: w / total for j, w in weights.items()},
                        name="ugw_surviving_total")


class UgwSource(GraphSource):
    kind = "ugw"

    def __init__(self, law: OffspringLaw, conditioned_infinite: bool = False):
        self.law = law
        self.conditioned = bool(conditioned_infinite)
        self.decomposition: SurvivalDecomposition = extinction_probability(law)
        if self.conditioned and law.mean <= 1.0:
            raise ValueError("conditioning on survival needs mean offspring > 1")
        self.q = self.decomposition.q
        self._root_law = root_degree_law(law, self.conditioned, self.q)
        if self.conditioned:
            # q == 0 forces P(X=0) == 0, so the plain law already has
            # positive support and the tilted draws degenerate gracefully
            self._surv_total = (survival_total_law(law, self.q)
                                if self.q > 0.0 else law)
            self._bar = self.decomposition.bar_law
        else:
            self._surv_total = None
            self._bar = None

    @property
    def descriptor(self) -> dict:
        return {"kind": self.kind,
                "params": {"law": self.law.descriptor(),
                           "conditioned_infinite": self.conditioned}}

    def max_degree(self):
        return max(self.law.support()) + 1

    def is_deterministic(self) -> bool:
        """Single-atom laws generate one rooted tree (e.g. the regular tree)."""
        return len(self.law.pmf) == 1

    def instance_class(self, g: LocalGraph):
        return 0 if self.is_deterministic() else None

    def exact_strata(self):
        if not self.is_deterministic():
            return None
        got = getattr(self, "_strata", None)
        if got is None:
            got = [(1.0, self.sample(31337))]
            self._strata = got
        return got, 0.0

    def sample(self, seed: int) -> LocalGraph:
        counts: dict = {}
        roles: dict = {(): _ROOT}
        law = self.law
        conditioned = self.conditioned
        q = self.q
        root_law = self._root_law
        surv_total = self._surv_total
        bar = self._bar

        def n_children(v: VertexId) -> int:
            got = counts.get(v)
            if got is not None:
                return got
            stream = Stream(fold_tuple(fold(seed, 0x06), v))
            role = roles[v]
            if role == _ROOT:
                n = root_law.sample(stream)
                if conditioned:
                    s = stream.binomial_conditioned_positive(n, 1.0 - q)
                    backbone = stream.subset(n, s)
                else:
                    backbone = None
            elif role == _BACKBONE:
                n = surv_total.sample(stream)
                s = stream.binomial_conditioned_positive(n, 1.0 - q)
                backbone = stream.subset(n, s)
            elif role == _BAR:
                n = bar.sample(stream)
                backbone = set()
            else:
                n = law.sample(stream)
                backbone = None
            for i in range(n):
                child = v + (i,)
                if backbone is None:
                    roles[child] = _PLAIN
                elif i in backbone:
                    roles[child] = _BACKBONE
                else:
                    roles[child] = _BAR
            counts[v] = n
            return n

        def neighbors(v: VertexId) -> list:
            if v not in roles:
                # materialize ancestors so roles exist along the path
                for j in range(len(v)):
                    n_children(v[:j])
            out = []
            if v:
                out.append(v[:-1])
            out.extend(v + (i,) for i in range(n_children(v)))
            return out

        return LocalGraph(seed, (), neighbors,
                          meta={"ugw": True, "roles": roles})

    def backbone_ray(self, g: LocalGraph, depth: int) -> list:
        """Follow surviving children from the root (conditioned sources)."""
        if not self.conditioned:
            raise ValueError("backbone ray exists only for conditioned sources")
        roles = g.meta["roles"]
        ray = [g.root]
        v = g.root
        for _ in range(depth):
            children = [w for w in g.neighbors(v) if len(w) > len(v)]
            nxt = next((w for w in children if roles[w] == _BACKBONE), None)
            if nxt is None:
                return ray
            ray.append(nxt)
            v = nxt
        return ray


def ugw_source(law: OffspringLaw, conditioned_infinite: bool = False) -> UgwSource:
    return UgwSource(law, conditioned_infinite)


def named_law(name: str, args) -> OffspringLaw:
    if name == "constant":
        return OffspringLaw.constant(int(args[0]))
    if name == "uniform":
        return OffspringLaw.uniform(int(args[0]), int(args[1]))
    if name == "two_plus_bernoulli":
        return OffspringLaw.two_plus_bernoulli(float(args[0]))
    if name == "power_law_5_2":
        return OffspringLaw.power_law_5_2()
    raise ValueError(f"unknown law name {name!r}")


def _from_params(p: dict) -> UgwSource:
    lawspec = p.get("law")
    if isinstance(lawspec, dict) and "pmf" in lawspec:
        law = OffspringLaw.from_dict(lawspec["pmf"], name=lawspec.get("name", "custom"))
    elif isinstance(lawspec, dict) and "name" in lawspec:
        law = named_law(lawspec["name"], lawspec.get("args", []))
    else:
        raise ValueError("ugw params need a 'law' with a pmf or a name")
    return UgwSource(law, bool(p.get("conditioned_infinite", False)))


register("ugw", _from_params)
