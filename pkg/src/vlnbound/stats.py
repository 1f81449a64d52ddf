"""Aggregation of sweep records: SR curves, matching-score buckets, correlation."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .sim import MetricsReport, SweepRecord, compute_metrics


@dataclass(frozen=True)
class Bucket:
    lower: float
    upper: float
    n: int
    sr: Optional[float]  # None for an empty bin


def _n_bins(bin_width: float) -> int:
    if not 0.0 < bin_width <= 1.0:
        raise ValueError(f"bin width must lie in (0, 1], got {bin_width}")
    n = round(1.0 / bin_width)
    if abs(n * bin_width - 1.0) > 1e-9:
        raise ValueError(f"bin width {bin_width} does not divide [0, 1] evenly")
    return n


def bucket_index(value: float, n_bins: int) -> int:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"score {value} outside [0, 1]")
    # 0.3 / 0.1 evaluates to 2.999...; nudge before flooring
    return min(int(math.floor(value * n_bins + 1e-9)), n_bins - 1)


def bucket_sr(records: Iterable[Tuple[float, bool]], bin_width: float = 0.1) -> List[Bucket]:
    """Success rate per matching-score bin.

    Bins are ``[k*w, (k+1)*w)`` except the last, which is closed at 1.
    Empty bins are kept with ``n = 0`` and ``sr = None``.
    """
    n_bins = _n_bins(bin_width)
    counts = [0] * n_bins
    wins = [0] * n_bins
    seen = 0
    for score, success in records:
        if score is None or (isinstance(score, float) and math.isnan(score)):
            continue
        k = bucket_index(float(score), n_bins)
        counts[k] += 1
        wins[k] += bool(success)
        seen += 1
    if not seen:
        raise ValueError("no scored records to bucket")
    return [
        Bucket(k / n_bins, (k + 1) / n_bins, counts[k], 100.0 * wins[k] / counts[k] if counts[k] else None)
        for k in range(n_bins)
    ]


class GridPoint(NamedTuple):
    grid_value: float
    metrics: MetricsReport
    mean_s_match: float


def curve_by_grid(records: Sequence[SweepRecord]) -> List[GridPoint]:
    groups = defaultdict(list)
    for rec in records:
        groups[(rec.grid_index, rec.grid_value)].append(rec.outcome)
    out = []
    for (_, value), outcomes in sorted(groups.items()):
        scores = [o.s_match for o in outcomes if not math.isnan(o.s_match)]
        mean = float(np.mean(scores)) if scores else math.nan
        out.append(GridPoint(value, compute_metrics(outcomes), mean))
    return out


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample correlation coefficient; raises if either side is constant."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-D sequences of equal length")
    if len(np.unique(x)) < 2:
        raise ValueError("undefined correlation: xs needs at least 2 distinct values")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if syy == 0.0:
        raise ValueError("undefined correlation: ys is constant")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def failure_histogram(records: Sequence[SweepRecord]) -> List[Tuple[str, str, int]]:
    """Counts of (failure reason, skill) over unsuccessful episodes."""
    counts = defaultdict(int)
    for rec in records:
        o = rec.outcome
        if o.success:
            continue
        counts[(o.failure_reason or "ended off goal", o.failure_skill or "-")] += 1
    return sorted(((r, s, n) for (r, s), n in counts.items()), key=lambda t: (-t[2], t[0], t[1]))
