"""Discrete integer laws and branching-process survival decompositions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .rng import Stream

PMF_TOL = 1e-12
TAIL_TRUNCATION = 1e-9

_POWER_LAW_CACHE: dict = {}


@dataclass(frozen=True)
class OffspringLaw:
    """Probability mass function on the nonnegative integers.

    Used both as a branching-process offspring law and as a generic integer
    law (box side lengths, level laws).  ``tail_mass`` records probability
    discarded by truncating an infinite support.
    """

    pmf: dict
    tail_mass: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        total = sum(self.pmf.values())
        if abs(total - 1.0) > PMF_TOL:
            raise ValueError(f"pmf sums to {total}, not 1")
        if any(k < 0 or k != int(k) for k in self.pmf):
            raise ValueError("support must be nonnegative integers")

    @property
    def mean(self) -> float:
        return sum(k * q for k, q in self.pmf.items())

    def prob(self, k: int) -> float:
        return self.pmf.get(k, 0.0)

    def pgf(self, t: float) -> float:
        return sum(q * t ** k for k, q in self.pmf.items())

    def pgf_prime(self, t: float) -> float:
        return sum(k * q * t ** (k - 1) for k, q in self.pmf.items() if k >= 1)

    def support(self) -> list:
        return sorted(self.pmf)

    def sampler_arrays(self) -> tuple:
        arrs = getattr(self, "_arrs", None)
        if arrs is None:
            ks = np.array(self.support(), dtype=np.int64)
            cum = np.cumsum([self.pmf[int(k)] for k in ks])
            cum[-1] = 1.0
            arrs = (ks, cum)
            object.__setattr__(self, "_arrs", arrs)
        return arrs

    def sample(self, stream: Stream) -> int:
        ks, cum = self.sampler_arrays()
        if len(ks) == 1:
            return int(ks[0])
        if len(ks) <= 16:
            u = stream.uniform()
            for i in range(len(ks)):
                if u < cum[i]:
                    return int(ks[i])
            return int(ks[-1])
        return int(ks[stream.choice_weighted(cum)])

    def descriptor(self) -> dict:
        d = {"name": self.name, "tail_mass": self.tail_mass}
        if len(self.pmf) <= 64:
            d["pmf"] = {str(k): v for k, v in sorted(self.pmf.items())}
        else:
            d["support_size"] = len(self.pmf)
            d["mean"] = self.mean
        return d

    # common constructors -------------------------------------------------

    @staticmethod
    def constant(k: int) -> "OffspringLaw":
        return OffspringLaw({int(k): 1.0}, name=f"constant({k})")

    @staticmethod
    def uniform(lo: int, hi: int) -> "OffspringLaw":
        ks = range(lo, hi + 1)
        w = 1.0 / len(list(ks))
        return OffspringLaw({k: w for k in range(lo, hi + 1)},
                            name=f"uniform({lo},{hi})")

    @staticmethod
    def two_plus_bernoulli(eps: float) -> "OffspringLaw":
        """Law of 2 + Bernoulli(eps); mean 2 + eps."""
        return OffspringLaw({2: 1.0 - eps, 3: eps}, name=f"two_plus_bernoulli({eps})")

    @staticmethod
    def from_dict(d: dict, name: str = "custom") -> "OffspringLaw":
        return OffspringLaw({int(k): float(v) for k, v in d.items()}, name=name)

    @staticmethod
    def power_law_5_2(tail: float = TAIL_TRUNCATION) -> "OffspringLaw":
        """P(X=k) proportional to k^(-5/2) on k >= 1, truncated at tail mass.

        The normalizer is computed by direct summation with an integral
        bound on the remainder, accurate to ~1e-12.
        """
        cached = _POWER_LAW_CACHE.get(tail)
        if cached is not None:
            return cached
        # sum k^-5/2 exactly up to K0, integral bound beyond
        K0 = 2_000_000
        ks = np.arange(1, K0 + 1, dtype=np.float64)
        w = ks ** -2.5
        zeta = float(w.sum()) + (2.0 / 3.0) * (K0 + 0.5) ** -1.5
        # truncate support where the remaining mass drops below `tail`
        csum = np.cumsum(w) / zeta
        kmax = int(np.searchsorted(csum, 1.0 - tail) + 1)
        kept = w[:kmax] / zeta
        pmf = {i + 1: float(kept[i]) for i in range(kmax)}
        s = sum(pmf.values())
        discarded = 1.0 - s
        # renormalize the kept mass so the pmf is exact
        pmf = {k: v / s for k, v in pmf.items()}
        law = OffspringLaw(pmf, tail_mass=discarded, name="power_law_5_2")
        _POWER_LAW_CACHE[tail] = law
        return law

    def size_biased(self) -> "OffspringLaw":
        """Law reweighted by k (support must omit 0 or loses its mass)."""
        m = self.mean
        pmf = {k: k * q / m for k, q in self.pmf.items() if k >= 1}
        s = sum(pmf.values())
        return OffspringLaw({k: v / s for k, v in pmf.items()},
                            tail_mass=self.tail_mass, name=f"size_biased({self.name})")


@dataclass
class SurvivalDecomposition:
    """Extinction probability plus the backbone / hanging-tree split.

    ``q`` is the smallest nonnegative fixed point of the offspring pgf.
    When ``q < 1``, ``star_law`` is the law of the number of surviving
    children of a surviving vertex (support >= 1, pgf
    ``(f(q+(1-q)t) - q) / (1-q)``); when ``q > 0``, ``bar_law`` is the
    offspring law inside a tree conditioned to die out
    (``P(k) = P(X=k) q^(k-1)``).
    """

    law: OffspringLaw
    q: float
    star_law: Optional[OffspringLaw] = None
    bar_law: Optional[OffspringLaw] = None
    notes: dict = field(default_factory=dict)


def extinction_probability(law: OffspringLaw) -> SurvivalDecomposition:
    """Smallest nonnegative fixed point of the generating function, to 1e-10."""
    p1 = law.prob(1)
    mean = law.mean
    if abs(p1 - 1.0) <= PMF_TOL:
        q = 0.0  # degenerate single-line process never dies
    elif mean <= 1.0 + 1e-15:
        q = 1.0
    else:
        q = 0.0
        for _ in range(100_000):
            nxt = law.pgf(q)
            if abs(nxt - q) < 1e-16:
                q = nxt
                break
            q = nxt
        # Newton polish toward the fixed point
        for _ in range(60):
            g = law.pgf(q) - q
            gp = law.pgf_prime(q) - 1.0
            if gp == 0:
                break
            step = g / gp
            q -= step
            if abs(step) < 1e-14:
                break
        q = min(max(q, 0.0), 1.0)

    dec = SurvivalDecomposition(law=law, q=q)
    if q > 0.0 and q < 1.0:
        dec.bar_law = _bar_law(law, q)
        dec.star_law = _star_law(law, q)
    elif q == 0.0:
        dec.star_law = None  # star law equals the law itself conditioned >= 1
    else:
        dec.bar_law = law  # extinction certain: conditioned law is unchanged
    return dec


def _bar_law(law: OffspringLaw, q: float) -> OffspringLaw:
    pmf = {k: p * q ** (k - 1) for k, p in law.pmf.items()}
    s = sum(pmf.values())
    return OffspringLaw({k: v / s for k, v in pmf.items()},
                        name=f"bar({law.name})")


def _star_law(law: OffspringLaw, q: float) -> OffspringLaw:
    """Law of surviving-children counts: sum_j P(X=j) C(j,s) (1-q)^(s-1) q^(j-s)."""
    out: dict = {}
    for j, pj in law.pmf.items():
        if j < 1:
            continue
        for s in range(1, j + 1):
            w = pj * math.comb(j, s) * (1 - q) ** (s - 1) * q ** (j - s)
            if w > 0:
                out[s] = out.get(s, 0.0) + w
    total = sum(out.values())
    return OffspringLaw({k: v / total for k, v in out.items()},
                        name=f"star({law.name})")
