"""Counter-based deterministic randomness.

Every random quantity in the library is a pure function of a 64-bit key
built by folding integers (seeds, replica indices, vertex addresses, edge
identifiers) into a splitmix64 chain.  This gives:

* bit-identical reruns regardless of evaluation order or process count,
* exact monotone couplings across percolation parameters (the uniform
  attached to an edge does not depend on p),
* cheap per-vertex / per-edge streams for lazily generated graphs.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    """One splitmix64 output step for a 64-bit state."""
    x = (x + _GAMMA) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _zigzag(i: int) -> int:
    # maps signed ints to unsigned so negative addresses hash cleanly
    return (i << 1) if i >= 0 else ((-i << 1) - 1)


def mix(h: int, v: int) -> int:
    """Fold one integer into a running 64-bit hash."""
    return splitmix64((h ^ _zigzag(v)) & MASK64)


def fold(seed: int, *values: int) -> int:
    """Hash a sequence of integers into a 64-bit key."""
    h = splitmix64(seed & MASK64)
    for v in values:
        h = mix(h, v)
    return h


def fold_tuple(seed: int, values: tuple) -> int:
    h = splitmix64(seed & MASK64)
    for v in values:
        h = mix(h, v)
    return h


def uniform(key: int) -> float:
    """Uniform in [0, 1) derived from a 64-bit key."""
    return (key >> 11) * 2.0 ** -53


def edge_uniform(seed: int, stream: int, ekey: int) -> float:
    """The uniform attached to an edge; shared across all p for coupling."""
    return uniform(fold(seed, stream, ekey))


def edge_key(khash_a: int, khash_b: int) -> int:
    """Symmetric 64-bit identifier for an undirected edge given endpoint hashes."""
    if khash_a > khash_b:
        khash_a, khash_b = khash_b, khash_a
    return mix(mix(0x9E3779B97F4A7C15, khash_a), khash_b)


class Stream:
    """Sequential deterministic stream (splitmix64 counter) for sampling."""

    __slots__ = ("_base", "_ctr")

    def __init__(self, key: int):
        self._base = splitmix64(key & MASK64)
        self._ctr = 0

    def next_u64(self) -> int:
        self._ctr += 1
        return mix(self._base, self._ctr)

    def uniform(self) -> float:
        return uniform(self.next_u64())

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        # 53-bit resolution is plenty for desk-scale supports
        return int(self.uniform() * n) % n

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def choice_weighted(self, cumweights: np.ndarray) -> int:
        """Index sampled from a normalized cumulative weight array."""
        u = self.uniform()
        return int(np.searchsorted(cumweights, u, side="right"))

    def binomial_conditioned_positive(self, n: int, p: float) -> int:
        """Binomial(n, p) conditioned to be >= 1, by direct inversion."""
        if n <= 0:
            raise ValueError("need n >= 1 to condition on a positive value")
        if p >= 1.0:
            return n
        q = (1.0 - p) ** n
        if q >= 1.0:
            raise ValueError("conditioning event has probability 0")
        u = self.uniform() * (1.0 - q)
        acc = 0.0
        pk = q  # P(k=0)
        for k in range(0, n):
            # advance to P(k+1) via the binomial ratio
            pk = pk * (n - k) / (k + 1) * (p / (1.0 - p))
            acc += pk
            if u < acc:
                return k + 1
        return n

    def subset(self, n: int, size: int) -> set:
        """Uniform random subset of {0..n-1} of the given size."""
        picked: set = set()
        while len(picked) < size:
            picked.add(self.randint(n))
        return picked


# vectorized splitmix64 for bulk edge uniforms ------------------------------

_U64 = np.uint64
_V_GAMMA = _U64(_GAMMA)
_V_M1 = _U64(_M1)
_V_M2 = _U64(_M2)


def _vec_zigzag(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.int64)
    return np.where(v >= 0, 2 * v, -2 * v - 1).astype(np.uint64)


def _vec_mix(h, v: np.ndarray) -> np.ndarray:
    """Vector version of mix(); h may be scalar or array."""
    hh = h if isinstance(h, np.ndarray) else np.uint64(h)
    with np.errstate(over="ignore"):
        x = (hh ^ _vec_zigzag(v)) + _V_GAMMA
        z = x
        z = (z ^ (z >> _U64(30))) * _V_M1
        z = (z ^ (z >> _U64(27))) * _V_M2
        return z ^ (z >> _U64(31))


def bulk_uniforms(seed: int, stream: int, n: int) -> np.ndarray:
    """Uniforms for edge indices 0..n-1 under (seed, stream); matches
    ``edge_uniform(seed, stream, i)`` exactly."""
    base = splitmix64(seed & MASK64)
    h = _U64(mix(base, stream))
    idx = np.arange(n, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (h ^ (idx << _U64(1))) + _V_GAMMA
        z = x
        z = (z ^ (z >> _U64(30))) * _V_M1
        z = (z ^ (z >> _U64(27))) * _V_M2
        z = z ^ (z >> _U64(31))
    return (z >> _U64(11)).astype(np.float64) * 2.0 ** -53


def grid_uniform_block(seed: int, tag: int, orient: int,
                       x0: int, y0: int, size: int) -> np.ndarray:
    """Uniform block u[i, j] for integer pairs (x0+i, y0+j); matches the
    scalar chain fold(seed, tag, orient, x, y) exactly."""
    h = mix(mix(splitmix64(seed & MASK64), tag), orient)
    xs = np.arange(x0, x0 + size, dtype=np.int64)
    ys = np.arange(y0, y0 + size, dtype=np.int64)
    hx = _vec_mix(h, xs)                       # shape (size,)
    hxy = _vec_mix(hx[:, None], np.broadcast_to(ys, (size, size)))
    return (hxy >> _U64(11)).astype(np.float64) * 2.0 ** -53
