"""Hourly per-segment bid curves from marginal value curves.

A discharge bid G_s is the segment's marginal cost plus the opportunity value
of the energy it would give up; a charge bid B_s is the value of the energy a
segment would gain. The opportunity value q-bar is averaged over SoC samples
within the segment and over the hour's market intervals, since bids are held
fixed within the hour. Clearing without integer variables requires bids that
strictly decrease with SoC, enforced here by least-squares isotonic fitting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import BID_GAP, DEFAULT_SOC_SAMPLES
from .storage import StorageSpec
from .valuation import ValueCurve, _nearest_idx


@dataclass(frozen=True)
class SamplingPlan:
    n_samples: int = DEFAULT_SOC_SAMPLES  # SoC samples per segment for q-bar

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"need at least one sample, got {self.n_samples}")


@dataclass(frozen=True)
class BidCurve:
    hour: int
    e_edges: tuple[float, ...]  # segment boundaries, len = n_segments + 1 (MWh)
    g: tuple[float, ...]  # discharge bids by segment, ascending SoC ($/MWh)
    b: tuple[float, ...]  # charge bids by segment, ascending SoC ($/MWh)

    @property
    def n_segments(self) -> int:
        return len(self.g)


def make_bids(
    curve: ValueCurve,
    spec: StorageSpec,
    hour: int,
    plan: SamplingPlan = SamplingPlan(),
    hour_mode: str = "average",
) -> BidCurve:
    """Raw (unadjusted) bid curve for one hour.

    q-bar per segment is the mean of q_t over n_samples midpoint-centered SoC
    points in the segment and over the hour's intervals; "start" mode uses
    only the hour's first interval instead of the average.
    """
    if hour_mode not in ("average", "start"):
        raise ValueError(f"hour_mode must be 'average' or 'start', got {hour_mode!r}")
    per_hour = 60.0 / curve.step_minutes
    if abs(per_hour - round(per_hour)) > 1e-9 or per_hour < 1:
        raise ValueError(
            f"curve step {curve.step_minutes} min does not tile an hour"
        )
    k = int(round(per_hour))
    first = hour * k + 1
    last = (hour + 1) * k
    if hour < 0 or last > curve.n_steps:
        raise ValueError(
            f"hour {hour} needs curve rows {first}..{last}, have {curve.n_steps}"
        )
    rows = range(first, first + 1) if hour_mode == "start" else range(first, last + 1)

    lo = spec.e_min
    g, b = [], []
    n = plan.n_samples
    for seg in spec.segments:
        width = seg.e_end - lo
        samples = lo + (np.arange(1, n + 1) - 0.5) * width / n
        idx = _nearest_idx(curve.grid, samples)
        qbar = float(np.mean([np.mean(curve.q[t][idx]) for t in rows]))
        g.append(seg.cost + qbar / seg.eta_d)
        b.append(seg.eta_p * qbar)
        lo = seg.e_end
    edges = (spec.e_min,) + tuple(seg.e_end for seg in spec.segments)
    return BidCurve(hour=hour, e_edges=edges, g=tuple(g), b=tuple(b))


def _pava_nonincreasing(y: np.ndarray) -> np.ndarray:
    """Least-squares non-increasing fit by pooling adjacent violators."""
    vals: list[float] = []
    counts: list[int] = []
    for v in y:
        vals.append(float(v))
        counts.append(1)
        while len(vals) > 1 and vals[-2] < vals[-1]:
            v2, c2 = vals.pop(), counts.pop()
            v1, c1 = vals.pop(), counts.pop()
            vals.append((v1 * c1 + v2 * c2) / (c1 + c2))
            counts.append(c1 + c2)
    return np.repeat(vals, counts)


def _strictly_decreasing(y: np.ndarray, gap: float) -> np.ndarray:
    """Closest vector (least squares) that decreases by at least gap."""
    y = np.asarray(y, dtype=np.float64)
    if len(y) < 2:
        return y.copy()
    offsets = gap * np.arange(len(y))
    if np.all(np.diff(y) <= -gap):
        return y.copy()
    return _pava_nonincreasing(y + offsets) - offsets


def enforce_monotone(bids: BidCurve, gap: float = BID_GAP) -> BidCurve:
    """Strictly decreasing bid curve closest to the input, per side.

    Already-compliant inputs are returned unchanged. A tie block of m equal
    raw bids becomes a staircase around its mean, moving entries by up to
    gap * (m - 1) / 2.
    """
    g = tuple(float(x) for x in _strictly_decreasing(np.array(bids.g), gap))
    b = tuple(float(x) for x in _strictly_decreasing(np.array(bids.b), gap))
    if g == bids.g and b == bids.b:
        return bids
    return BidCurve(hour=bids.hour, e_edges=bids.e_edges, g=g, b=b)
