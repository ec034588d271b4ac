"""Rooted-graph samplers.

A :class:`GraphSource` couples a JSON descriptor with a ``sample(seed)``
method producing a rooted :class:`~percolab.graphs.LocalGraph`.  Sources with
only finitely many rooted isomorphism classes also expose exact strata
(class weights plus one canonical instance per class), which lets annealed
expectations be computed without sampling error.
"""
from __future__ import annotations

from typing import Callable, Optional

from ..graphs import LocalGraph, VertexId


class GraphSource:
    """Base sampler of rooted graph instances."""

    kind: str = "abstract"

    @property
    def descriptor(self) -> dict:
        raise NotImplementedError

    def sample(self, seed: int) -> LocalGraph:
        """Rooted instance; identical seeds give identical instances."""
        raise NotImplementedError

    # optional capabilities ------------------------------------------------

    def exact_strata(self) -> Optional[tuple]:
        """(list of (weight, LocalGraph), tail_mass) when the rooted
        isomorphism class is determined by finitely many cases."""
        return None

    def instance_class(self, g: LocalGraph):
        """Hashable key identifying the rooted isomorphism class of an
        instance, or None when instances are genuinely random."""
        return g.meta.get("class")

    def parent_of(self, g: LocalGraph, v: VertexId) -> Optional[VertexId]:
        """Distinguished parent vertex where the source defines one."""
        return None

    def max_degree(self) -> Optional[int]:
        return None

    def annealed_phi_exact(self, r: int, p: float) -> Optional[float]:
        """Exact root-averaged boundary functional of radius-r balls, for
        sources that can evaluate it without materializing the balls."""
        return None


_REGISTRY: dict = {}


def register(kind: str, factory: Callable[[dict], GraphSource]):
    _REGISTRY[kind] = factory


def known_kinds() -> list:
    return sorted(_REGISTRY)


def source_from_descriptor(desc: dict) -> GraphSource:
    """Build a source from {"kind": ..., "params": {...}}."""
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ValueError("descriptor must be a dict with a 'kind' field")
    extra = set(desc) - {"kind", "params"}
    if extra:
        raise ValueError(f"unknown descriptor fields: {sorted(extra)}")
    kind = desc["kind"]
    if kind not in _REGISTRY:
        raise ValueError(f"unknown generator kind {kind!r}; known: {known_kinds()}")
    return _REGISTRY[kind](desc.get("params", {}) or {})


from . import canopy, ugw, gkl, lattice, operators, subexp  # noqa: E402,F401
from .canopy import canopy_source  # noqa: E402,F401
from .ugw import ugw_source  # noqa: E402,F401
from .gkl import directed_cover_gkl  # noqa: E402,F401
from .lattice import z2_source, lattice_box_source, box_source  # noqa: E402,F401
from .operators import (  # noqa: E402,F401
    edge_replacement, vertex_replacement, contraction, percolation_cluster_source,
)
from .subexp import subexp_canopy_source  # noqa: E402,F401
