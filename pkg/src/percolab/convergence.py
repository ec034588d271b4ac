"""Local weak convergence diagnostics: ball-code distributions, total
variation, and joint locality tables."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .canonical import canonical_code
from .graphs import ball
from .rng import fold
from .sources import GraphSource

UNDERSAMPLE_COUNT = 20


@dataclass
class BallDistribution:
    """Empirical law of canonical codes of radius-r balls around the root."""

    radius: int
    freqs: dict                   # hex code -> relative frequency
    replicas: int
    seed: int
    undersampled: bool = False    # some observed code has count < 20

    def support(self) -> set:
        return set(self.freqs)


def ball_distribution(src: GraphSource, r: int, replicas: int,
                      seed: int) -> BallDistribution:
    counts: dict = {}
    class_codes: dict = {}
    for i in range(replicas):
        g = src.sample(fold(seed, 0x2D, i))
        cls = src.instance_class(g)
        code = class_codes.get(cls) if cls is not None else None
        if code is None:
            code = canonical_code(ball(g, g.root, r)).hex()
            if cls is not None:
                class_codes[cls] = code
        counts[code] = counts.get(code, 0) + 1
    under = any(c < UNDERSAMPLE_COUNT for c in counts.values())
    return BallDistribution(
        radius=r, freqs={k: v / replicas for k, v in counts.items()},
        replicas=replicas, seed=seed, undersampled=under)


def tv_distance(a: BallDistribution, b: BallDistribution) -> float:
    """Half the L1 distance between two code distributions of equal radius."""
    if a.radius != b.radius:
        raise ValueError("total variation needs equal radii")
    keys = a.support() | b.support()
    return 0.5 * sum(abs(a.freqs.get(k, 0.0) - b.freqs.get(k, 0.0))
                     for k in keys)


def locality_experiment(sources: list, target: GraphSource, radii: list,
                        pc_settings: Optional[dict] = None,
                        replicas: int = 20_000, seed: int = 0) -> dict:
    """Convergence-versus-threshold table for a source sequence.

    For each source: total variation to the target at every radius, plus a
    survival-transition interval when bisection settings are supplied.
    """
    from .estimators import pc_bisect

    target_dists = {r: ball_distribution(target, r, replicas, fold(seed, 0x77, r))
                    for r in radii}
    rows = []
    for k, src in enumerate(sources):
        row = {"source": src.descriptor, "tv": {}}
        for r in radii:
            d = ball_distribution(src, r, replicas, fold(seed, 0x78, k, r))
            row["tv"][r] = tv_distance(d, target_dists[r])
            if d.undersampled:
                row.setdefault("warnings", []).append(f"undersampled at r={r}")
        if pc_settings:
            est = pc_bisect(src, seed=fold(seed, 0x79, k), **pc_settings)
            row["pc_interval"] = list(est.interval)
        rows.append(row)
    out = {"radii": list(radii), "rows": rows,
           "target": target.descriptor, "replicas": replicas, "seed": seed}
    if pc_settings:
        est = pc_bisect(target, seed=fold(seed, 0x7A), **pc_settings)
        out["target_pc_interval"] = list(est.interval)
    return out
