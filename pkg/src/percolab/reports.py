"""Estimate reports, confidence intervals and serialization.

Every Monte Carlo probe returns an :class:`EstimateReport`; the CLI writes
them as CSV rows (12 significant digits, stable column order) or as JSON with
the full generator descriptor embedded, so outputs diff bit-exactly.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

Z95 = 1.959963984540054

CSV_HEADER = ("experiment,source,p,radius,replicas,estimate,ci_lo,ci_hi,seed")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def descriptor_hash(descriptor: dict) -> str:
    return sha256_hex(canonical_json(descriptor))[:16]


def fmt(x) -> str:
    """12-significant-digit float formatting used in all CSV bodies."""
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def wilson_ci(successes: int, n: int, z: float = Z95) -> tuple:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def mean_ci(total: float, total_sq: float, n: int, z: float = Z95) -> tuple:
    """Normal-approximation CI for a mean from summed statistics."""
    if n == 0:
        return (0.0, 0.0, 0.0, 0.0)
    mean = total / n
    var = max(0.0, total_sq / n - mean * mean)
    se = math.sqrt(var / n) if n > 1 else 0.0
    return (mean, se, mean - z * se, mean + z * se)


@dataclass
class EstimateReport:
    """Point estimate with CI and full provenance; the unit of CLI output."""

    experiment: str
    descriptor: dict
    p: Optional[float]
    radius: Optional[int]
    replicas: int
    estimate: float
    ci_lo: float
    ci_hi: float
    seed: int
    extra: dict = field(default_factory=dict)

    @property
    def se(self) -> float:
        return (self.ci_hi - self.ci_lo) / (2 * Z95)

    def source_hash(self) -> str:
        return descriptor_hash(self.descriptor)

    def csv_row(self) -> str:
        cells = [
            self.experiment,
            self.source_hash(),
            fmt(self.p),
            fmt(self.radius),
            str(self.replicas),
            fmt(self.estimate),
            fmt(self.ci_lo),
            fmt(self.ci_hi),
            str(self.seed),
        ]
        return ",".join(cells)

    def to_json_dict(self) -> dict:
        d = {
            "experiment": self.experiment,
            "source": self.descriptor,
            "source_hash": self.source_hash(),
            "p": self.p,
            "radius": self.radius,
            "replicas": self.replicas,
            "estimate": self.estimate,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
            "seed": self.seed,
        }
        if self.extra:
            d["extra"] = self.extra
        return d


def reports_to_csv(reports) -> str:
    lines = [CSV_HEADER]
    lines.extend(r.csv_row() for r in reports)
    return "\n".join(lines) + "\n"
