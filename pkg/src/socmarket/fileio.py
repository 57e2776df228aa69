"""CSV readers and writers for storage specs, prices, bids, fleets, scenarios.

All formats are plain CSV with fixed headers. Power ratings travel in MW and
are converted to MWh per dispatch step using the step length carried in the
storage spec file's metadata line, so a spec file keeps its meaning when the
engine runs at a different resolution.
"""

from __future__ import annotations

import csv
from datetime import datetime, timedelta

import numpy as np

from .bidding import BidCurve
from .gridsim import GeneratorSpec, ScenarioData
from .storage import SegmentSpec, StorageSpec, validate_spec
from .valuation import PriceSeries

STORAGE_HEADER = [
    "segment", "e_end_mwh", "cost_usd_per_mwh",
    "d_rating_mw", "p_rating_mw", "eta_d", "eta_p",
]
PRICE_HEADER = ["timestamp_iso8601", "price_usd_per_mwh"]
BID_HEADER = [
    "hour", "segment", "e_lo_mwh", "e_hi_mwh", "discharge_bid", "charge_bid",
]
FLEET_HEADER = [
    "gen_id", "c_lin", "c_quad", "c_noload", "c_start",
    "g_min_mw", "g_max_mw", "t_up_h", "t_dn_h",
]
SCENARIO_HEADER = ["scenario_id", "hour", "demand_mw", "wind_mw"]


def _check_header(row, expected, path):
    if [c.strip() for c in row] != expected:
        raise ValueError(
            f"{path}: expected header {','.join(expected)}, "
            f"got {','.join(row)}"
        )


def read_storage_spec(path) -> StorageSpec:
    """Parse a storage spec file.

    Line 1 is metadata: `# e_min_mwh=<float>,step_minutes=<float>`. Then the
    segment table with MW ratings, converted here to MWh per step.
    """
    with open(path, newline="") as f:
        meta_line = f.readline().strip()
        if not meta_line.startswith("#"):
            raise ValueError(
                f"{path}: first line must be metadata "
                f"'# e_min_mwh=...,step_minutes=...', got {meta_line!r}"
            )
        meta = {}
        for part in meta_line.lstrip("#").split(","):
            key, _, val = part.strip().partition("=")
            meta[key] = float(val)
        if "e_min_mwh" not in meta or "step_minutes" not in meta:
            raise ValueError(
                f"{path}: metadata needs e_min_mwh and step_minutes, "
                f"got {sorted(meta)}"
            )
        step = meta["step_minutes"]
        rows = list(csv.reader(f))
    if not rows:
        raise ValueError(f"{path}: no segment rows")
    _check_header(rows[0], STORAGE_HEADER, path)
    hours = step / 60.0
    segments = []
    for row in rows[1:]:
        if not row:
            continue
        seg, e_end, cost, d_mw, p_mw, eta_d, eta_p = row
        if int(seg) != len(segments) + 1:
            raise ValueError(
                f"{path}: segment ids must run 1..S in order, got {seg}"
            )
        segments.append(SegmentSpec(
            e_end=float(e_end),
            cost=float(cost),
            d_rating=float(d_mw) * hours,
            p_rating=float(p_mw) * hours,
            eta_d=float(eta_d),
            eta_p=float(eta_p),
        ))
    spec = StorageSpec(
        e_min=meta["e_min_mwh"], segments=tuple(segments), step_minutes=step
    )
    validate_spec(spec)
    return spec


def write_storage_spec(spec: StorageSpec, path) -> None:
    hours = spec.step_minutes / 60.0
    with open(path, "w", newline="") as f:
        f.write(f"# e_min_mwh={spec.e_min},step_minutes={spec.step_minutes}\n")
        w = csv.writer(f)
        w.writerow(STORAGE_HEADER)
        for s, seg in enumerate(spec.segments, start=1):
            w.writerow([
                s, repr(seg.e_end), repr(seg.cost),
                repr(seg.d_rating / hours), repr(seg.p_rating / hours),
                repr(seg.eta_d), repr(seg.eta_p),
            ])


def read_prices(path) -> PriceSeries:
    """Parse a price file, inferring the (uniform) step from timestamps."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ValueError(f"{path}: empty file")
    _check_header(rows[0], PRICE_HEADER, path)
    stamps, prices = [], []
    for row in rows[1:]:
        if not row:
            continue
        stamps.append(datetime.fromisoformat(row[0]))
        prices.append(float(row[1]))
    if len(stamps) < 2:
        raise ValueError(f"{path}: need at least two rows to infer the step")
    deltas = {
        (b - a).total_seconds() for a, b in zip(stamps, stamps[1:])
    }
    if len(deltas) != 1:
        raise ValueError(
            f"{path}: timestamps must be uniformly spaced, found steps "
            f"{sorted(deltas)} seconds"
        )
    step = deltas.pop()
    if step <= 0:
        raise ValueError(f"{path}: timestamps must be strictly increasing")
    return PriceSeries(step_minutes=step / 60.0, prices=np.array(prices))


def write_prices(
    series: PriceSeries, path, start: datetime | None = None
) -> None:
    start = start or datetime(2016, 1, 1)
    step = timedelta(minutes=series.step_minutes)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(PRICE_HEADER)
        for t, lam in enumerate(series.prices):
            w.writerow([(start + t * step).isoformat(), repr(float(lam))])


def read_bids(path) -> dict[int, BidCurve]:
    """Parse a bid file into per-hour curves keyed by hour index."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ValueError(f"{path}: empty file")
    _check_header(rows[0], BID_HEADER, path)
    by_hour: dict[int, list] = {}
    for row in rows[1:]:
        if not row:
            continue
        hour, seg, e_lo, e_hi, g, b = row
        by_hour.setdefault(int(hour), []).append(
            (int(seg), float(e_lo), float(e_hi), float(g), float(b))
        )
    curves = {}
    for hour, entries in by_hour.items():
        entries.sort()
        if [s for s, *_ in entries] != list(range(1, len(entries) + 1)):
            raise ValueError(
                f"{path}: hour {hour} segments must run 1..S, "
                f"got {[s for s, *_ in entries]}"
            )
        for (_, _, hi_prev, _, _), (_, lo, _, _, _) in zip(entries, entries[1:]):
            if abs(hi_prev - lo) > 1e-9:
                raise ValueError(
                    f"{path}: hour {hour} segment ranges must be contiguous"
                )
        curves[hour] = BidCurve(
            hour=hour,
            e_edges=(entries[0][1],) + tuple(e[2] for e in entries),
            g=tuple(e[3] for e in entries),
            b=tuple(e[4] for e in entries),
        )
    return curves


def write_bids(curves, path) -> None:
    """Write bid curves (iterable or hour-keyed mapping) to one file."""
    if isinstance(curves, dict):
        curves = [curves[h] for h in sorted(curves)]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(BID_HEADER)
        for curve in curves:
            for s in range(curve.n_segments):
                w.writerow([
                    curve.hour, s + 1,
                    repr(float(curve.e_edges[s])),
                    repr(float(curve.e_edges[s + 1])),
                    repr(float(curve.g[s])), repr(float(curve.b[s])),
                ])


def read_fleet(path) -> tuple[GeneratorSpec, ...]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ValueError(f"{path}: empty file")
    _check_header(rows[0], FLEET_HEADER, path)
    fleet = []
    for row in rows[1:]:
        if not row:
            continue
        _, c_lin, c_quad, c_noload, c_start, gmin, gmax, t_up, t_dn = row
        fleet.append(GeneratorSpec(
            g_min=float(gmin), g_max=float(gmax),
            c_lin=float(c_lin), c_quad=float(c_quad),
            c_noload=float(c_noload), c_start=float(c_start),
            t_up=int(t_up), t_dn=int(t_dn),
        ))
    if not fleet:
        raise ValueError(f"{path}: no generator rows")
    return tuple(fleet)


def write_fleet(fleet, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(FLEET_HEADER)
        for i, g in enumerate(fleet, start=1):
            w.writerow([
                i, repr(g.c_lin), repr(g.c_quad), repr(g.c_noload),
                repr(g.c_start), repr(g.g_min), repr(g.g_max), g.t_up, g.t_dn,
            ])


def read_scenarios(path) -> tuple[ScenarioData, ...]:
    """Parse scenarios, each a contiguous block of hourly rows, by id."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ValueError(f"{path}: empty file")
    _check_header(rows[0], SCENARIO_HEADER, path)
    blocks: dict[str, list] = {}
    for row in rows[1:]:
        if not row:
            continue
        sid, hour, demand, wind = row
        blocks.setdefault(sid, []).append(
            (int(hour), float(demand), float(wind))
        )
    scenarios = []
    for sid in blocks:
        entries = sorted(blocks[sid])
        if [h for h, *_ in entries] != list(range(len(entries))):
            raise ValueError(
                f"{path}: scenario {sid} hours must run 0..T-1, "
                f"got {[h for h, *_ in entries]}"
            )
        scenarios.append(ScenarioData(
            demand=tuple(d for _, d, _ in entries),
            wind=tuple(w for _, _, w in entries),
        ))
    return tuple(scenarios)


def write_scenarios(scenarios, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SCENARIO_HEADER)
        for sid, scen in enumerate(scenarios, start=1):
            for h in range(len(scen.demand)):
                w.writerow([
                    sid, h, repr(scen.demand[h]), repr(scen.wind[h]),
                ])
