"""Distribution-level comparison of actual and generated prices."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError

STAT_NAMES = ("count", "mean", "std", "min", "p25", "p50", "p75", "max")
DEFAULT_BINS = 50


def _values(values, what="values") -> np.ndarray:
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise DomainError(f"{what} must be non-empty")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{what} contain non-finite entries")
    return v


@dataclass(frozen=True)
class StatSummary:
    count: int
    mean: float
    std: float
    min: float
    p25: float
    p50: float
    p75: float
    max: float

    def to_dict(self):
        return asdict(self)


def stat_summary(values) -> StatSummary:
    """Sample statistics; std uses n - 1, percentiles interpolate linearly between ranks."""
    v = _values(values)
    std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    p25, p50, p75 = np.percentile(v, [25, 50, 75], method="linear")
    return StatSummary(int(v.size), float(np.mean(v)), std, float(v.min()), float(p25), float(p50), float(p75), float(v.max()))


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    density: np.ndarray
    count: int
    clipped: int = 0

    @property
    def widths(self):
        return np.diff(self.edges)

    def to_dict(self):
        return {"edges": self.edges.tolist(), "density": self.density.tolist(), "count": self.count, "clipped": self.clipped}


def _edges_for(values, bins: int) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, int(bins) + 1)


def empirical_pdf(values, bins=DEFAULT_BINS) -> Histogram:
    """Density histogram; values outside the edges are clipped into the end bins.

    ``bins`` is a bin count (edges span the data) or an explicit edge array.
    """
    v = _values(values)
    if np.ndim(bins) == 0:
        if int(bins) < 1:
            raise DomainError("need at least one bin")
        edges = _edges_for(v, bins)
    else:
        edges = np.asarray(bins, dtype=np.float64)
        if edges.size < 2 or not np.all(np.diff(edges) > 0):
            raise DomainError("histogram edges must be at least two strictly increasing values")
    outside = int(np.sum((v < edges[0]) | (v > edges[-1])))
    counts, _ = np.histogram(np.clip(v, edges[0], edges[-1]), bins=edges)
    density = counts / (v.size * np.diff(edges))
    return Histogram(edges, density, int(v.size), outside)


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|."""
    a = np.sort(_values(a, "first sample"))
    b = np.sort(_values(b, "second sample"))
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


@dataclass(frozen=True)
class EvalReport:
    actual: StatSummary
    generated: StatSummary
    hist_actual: Histogram
    hist_generated: Histogram
    ks: float
    deltas: dict

    def to_dict(self):
        return {
            "actual": self.actual.to_dict(),
            "generated": self.generated.to_dict(),
            "ks_statistic": self.ks,
            "abs_differences": self.deltas,
            "histogram": {
                "edges": self.hist_actual.edges.tolist(),
                "density_actual": self.hist_actual.density.tolist(),
                "density_generated": self.hist_generated.density.tolist(),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "density_actual", "density_generated"])
        e = self.hist_actual.edges
        for i in range(e.size - 1):
            w.writerow([repr(float(e[i])), repr(float(e[i + 1])), repr(float(self.hist_actual.density[i])), repr(float(self.hist_generated.density[i]))])
        return buf.getvalue()


def compare_report(actual, generated, bins: int = DEFAULT_BINS) -> EvalReport:
    """Summaries, histograms on shared edges over the pooled range, and KS."""
    a = _values(actual, "actual values")
    g = _values(generated, "generated values")
    edges = _edges_for(np.concatenate([a, g]), bins)
    sa, sg = stat_summary(a), stat_summary(g)
    deltas = {k: abs(float(getattr(sa, k)) - float(getattr(sg, k))) for k in STAT_NAMES if k != "count"}
    return EvalReport(sa, sg, empirical_pdf(a, edges), empirical_pdf(g, edges), ks_statistic(a, g), deltas)
