"""Study runners: price-taker arbitrage backtests and market impact sweeps.

Two study kinds share this module. The price-taker study replays a price
series against one storage device under several market models: a multi-period
benchmark with perfect foresight, and sequential per-interval clearings with
hourly bids over k SoC segments ("rtd-k"). The price-influencer study sweeps
storage capacity and market segment count over daily scenarios, where storage
dispatch moves the clearing price.

Settlement convention for profit tables: revenue is the payment for delivered
energy, cost aggregates charging payments plus the physical discharge cost,
and profit is revenue minus cost.
"""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import dataclass, replace

import numpy as np

from .benchmark import economic_dispatch_multi, multi_period_dispatch
from .bidding import SamplingPlan, enforce_monotone, make_bids
from .clearing import clear_pricetaker, simulate_realtime_day
from .constants import DEFAULT_POINTS_PER_MWH, DEFAULT_SOC_SAMPLES
from .gridsim import unit_commitment
from .storage import (
    SegmentSpec,
    StorageSpec,
    apply_dispatch,
    linear_spec,
    project_dispatch,
    rescale_step,
    resegment,
    state_from_total,
)
from .valuation import (
    PriceSeries,
    backward_induction,
    build_grid,
    upsample_prices,
)


def parse_market(name: str) -> tuple[str, int]:
    """Split a market model name into ("multi", 0) or ("rtd", k)."""
    lowered = name.strip().lower()
    if lowered == "multi":
        return ("multi", 0)
    if lowered.startswith("rtd-"):
        try:
            k = int(lowered[4:])
        except ValueError:
            k = 0
        if k >= 1:
            return ("rtd", k)
    raise ValueError(
        f"unknown market model {name!r}; use 'multi' or 'rtd-<k>' with k >= 1"
    )


@dataclass(frozen=True)
class StudyConfig:
    kind: str  # "pricetaker" or "priceinfluencer"
    markets: tuple[str, ...] = ("multi", "rtd-5", "rtd-1")
    storage_path: str | None = None
    variant: str | None = None  # named device built from the bundled template
    price_path: str | None = None
    fleet_path: str | None = None
    scenario_path: str | None = None
    points_per_mwh: float = DEFAULT_POINTS_PER_MWH
    n_samples: int = DEFAULT_SOC_SAMPLES
    valuation_step_minutes: float | None = None  # upsample prices for bidding
    capacity_fractions: tuple[float, ...] = (0.0, 0.05, 0.1, 0.2)
    segment_counts: tuple[int, ...] = (1, 2, 5, 10)
    out_dir: str | None = None
    seed: int = 0
    synth_days: int = 365  # synthetic price length when no price file given

    def __post_init__(self):
        if self.kind not in ("pricetaker", "priceinfluencer"):
            raise ValueError(
                f"kind must be 'pricetaker' or 'priceinfluencer', "
                f"got {self.kind!r}"
            )
        for name in self.markets:
            parse_market(name)
        for k in self.segment_counts:
            if k < 1:
                raise ValueError(f"segment counts must be >= 1, got {k}")
        if self.points_per_mwh <= 0:
            raise ValueError("points_per_mwh must be positive")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        for label, path in (
            ("storage", self.storage_path),
            ("price", self.price_path),
            ("fleet", self.fleet_path),
            ("scenario", self.scenario_path),
        ):
            if path is not None and not os.path.isfile(path):
                raise ValueError(f"{label} file not found: {path}")


@dataclass(frozen=True)
class ProfitReport:
    model: str
    revenue: float  # payments for delivered energy ($)
    cost: float  # charging payments plus physical discharge cost ($)
    profit: float  # revenue - cost ($)
    ratio_pct: float | None  # % of the multi-period profit on the same inputs
    wall_seconds: float


@dataclass(frozen=True)
class ArbitrageRun:
    report: ProfitReport
    soc: np.ndarray  # total stored energy after each interval, length T+1
    dispatches: tuple  # realized per-interval Dispatch on the true device


def settlement(spec: StorageSpec, prices: np.ndarray, dispatches):
    """Recompute (revenue, cost) from raw dispatches; the audit path."""
    d = np.array([disp.d_seg for disp in dispatches])
    p = np.array([disp.p_seg for disp in dispatches])
    seg_costs = np.array([seg.cost for seg in spec.segments])
    revenue = float(prices @ d.sum(axis=1))
    cost = float(prices @ p.sum(axis=1) + d.sum(axis=0) @ seg_costs)
    return revenue, cost


def _with_ratios(runs: dict[str, ArbitrageRun]) -> dict[str, ArbitrageRun]:
    base = runs.get("multi")
    if base is None or base.report.profit <= 0:
        return runs
    out = {}
    for name, run in runs.items():
        ratio = 100.0 * run.report.profit / base.report.profit
        out[name] = replace(run, report=replace(run.report, ratio_pct=ratio))
    return out


def run_pricetaker(
    spec: StorageSpec,
    prices: PriceSeries,
    markets=("multi", "rtd-5", "rtd-1"),
    points_per_mwh: float = DEFAULT_POINTS_PER_MWH,
    plan: SamplingPlan = SamplingPlan(),
    hour_mode: str = "average",
    valuation_step_minutes: float | None = None,
) -> dict[str, ArbitrageRun]:
    """Backtest one device against a price series under several markets.

    The device starts empty. The multi-period model dispatches with perfect
    foresight at the market interval. Each rtd-k model values the true device
    by backward induction, builds hourly bids over k equal-width SoC segments
    (the market's view of the device), clears every interval as a price
    taker, and realizes the instruction on the true device by least-squares
    projection with the market view re-synced to the realized SoC.

    The value curve is computed once and shared across rtd models; its wall
    time is charged to every rtd report, so each wall clock bounds a
    standalone run of that model.
    """
    parsed = []
    for name in markets:
        kind, k = parse_market(name)
        parsed.append(("multi" if kind == "multi" else f"rtd-{k}", kind, k))
    spec = rescale_step(spec, prices.step_minutes)
    per_hour = 60.0 / prices.step_minutes
    if abs(per_hour - round(per_hour)) > 1e-9:
        raise ValueError(
            f"market step {prices.step_minutes} min does not tile an hour"
        )
    per_hour = int(round(per_hour))
    n = len(prices.prices)
    if n % per_hour:
        raise ValueError(
            f"price series length {n} is not a whole number of hours"
        )
    n_hours = n // per_hour

    runs: dict[str, ArbitrageRun] = {}
    curve = None
    val_seconds = 0.0
    for name, kind, k in parsed:
        t0 = time.perf_counter()
        if kind == "multi":
            schedule = multi_period_dispatch(
                spec, prices, spec.e_min, points_per_mwh=points_per_mwh
            )
            revenue, cost = settlement(spec, prices.prices, schedule.dispatches)
            soc = np.array([sum(s.e_seg) for s in schedule.states])
            dispatches = schedule.dispatches
            wall = time.perf_counter() - t0
        else:
            if curve is None:
                series = prices
                val_spec = spec
                if valuation_step_minutes is not None:
                    series = upsample_prices(prices, valuation_step_minutes)
                    val_spec = rescale_step(spec, valuation_step_minutes)
                grid = build_grid(val_spec, points_per_mwh)
                curve = backward_induction(val_spec, series, grid)
                val_seconds = time.perf_counter() - t0
                t0 = time.perf_counter()
            market_spec = resegment(spec, k)
            bids = [
                enforce_monotone(
                    make_bids(curve, market_spec, h, plan, hour_mode)
                )
                for h in range(n_hours)
            ]
            state = state_from_total(spec, spec.e_min)
            soc = np.empty(n + 1)
            soc[0] = spec.e_min
            dispatches = []
            for t in range(n):
                total = soc[t]
                market_state = state_from_total(market_spec, total)
                res = clear_pricetaker(
                    market_spec, market_state, bids[t // per_hour],
                    float(prices.prices[t]),
                )
                real = project_dispatch(
                    spec, state, res.dispatch.p_total, res.dispatch.d_total
                )
                state = apply_dispatch(spec, state, real)
                dispatches.append(real)
                soc[t + 1] = sum(state.e_seg)
            dispatches = tuple(dispatches)
            revenue, cost = settlement(spec, prices.prices, dispatches)
            wall = val_seconds + time.perf_counter() - t0
        report = ProfitReport(
            model=name, revenue=revenue, cost=cost, profit=revenue - cost,
            ratio_pct=None, wall_seconds=wall,
        )
        runs[name] = ArbitrageRun(
            report=report, soc=soc, dispatches=dispatches
        )
    return _with_ratios(runs)


def soc_histogram(
    soc: np.ndarray, spec: StorageSpec, n_bins: int = 10
) -> np.ndarray:
    """Fraction of time spent in each SoC bin spanning [e_min, e_max]."""
    counts, _ = np.histogram(soc, bins=n_bins, range=(spec.e_min, spec.e_max))
    return counts / len(soc)


# Five-segment example device. The shape is what matters: discharge slows at
# both ends of the SoC range (hardest at the top), charging tapers when
# nearly full, efficiency peaks mid-range, and degradation makes discharge
# dearest at the extremes. The numbers are illustrative defaults, not
# measurements; pass your own to nonlinear_template to override.
TEMPLATE_D_RATINGS_MW = (0.175, 0.25, 0.25, 0.225, 0.125)
TEMPLATE_P_RATINGS_MW = (0.25, 0.25, 0.25, 0.2, 0.125)
TEMPLATE_ETA = (0.86, 0.9, 0.92, 0.9, 0.88)
TEMPLATE_COSTS = (26.0, 21.0, 20.0, 22.0, 28.0)
_CONST_RATING_MW = 0.25


def nonlinear_template(
    capacity_mwh: float = 1.0,
    d_ratings_mw=TEMPLATE_D_RATINGS_MW,
    p_ratings_mw=TEMPLATE_P_RATINGS_MW,
    eta=TEMPLATE_ETA,
    costs=TEMPLATE_COSTS,
    step_minutes: float = 60.0,
) -> StorageSpec:
    """SoC-dependent device over equal-width segments (defaults: five)."""
    n = len(d_ratings_mw)
    if not (len(p_ratings_mw) == len(eta) == len(costs) == n):
        raise ValueError("parameter lists must share one length")
    hours = step_minutes / 60.0
    width = capacity_mwh / n
    segments = tuple(
        SegmentSpec(
            e_end=(s + 1) * width,
            cost=costs[s],
            d_rating=d_ratings_mw[s] * hours,
            p_rating=p_ratings_mw[s] * hours,
            eta_d=eta[s],
            eta_p=eta[s],
        )
        for s in range(n)
    )
    return StorageSpec(e_min=0.0, segments=segments, step_minutes=step_minutes)


def make_storage_variant(name: str, base: StorageSpec | None = None) -> StorageSpec:
    """Named device variants derived from the five-segment template.

    "lin" is the single-segment reference device (0.25 MW, 90% one-way
    efficiency, $20/MWh). "nla" is the template itself; "nlb" flattens its
    discharge rating, "nlc" flattens both ratings, and "nlf"/"nll" keep a
    flat charge rating with discharge reduced in the first segment or the
    last two.
    """
    base = base if base is not None else nonlinear_template()
    hours = base.step_minutes / 60.0
    const = _CONST_RATING_MW * hours
    key = name.strip().lower()
    if key == "lin":
        return linear_spec(
            capacity_mwh=base.e_max - base.e_min,
            rating_mwh_per_step=const,
            eta=0.9,
            cost=20.0,
            step_minutes=base.step_minutes,
            e_min=base.e_min,
        )
    if key not in ("nla", "nlb", "nlc", "nlf", "nll"):
        raise ValueError(
            f"unknown variant {name!r}; use lin, nla, nlb, nlc, nlf, or nll"
        )
    if key == "nla":
        return base
    if key in ("nlf", "nll") and base.n_segments != 5:
        raise ValueError(f"variant {name!r} needs the five-segment template")
    d_mw = {
        "nlb": (_CONST_RATING_MW,) * base.n_segments,
        "nlc": (_CONST_RATING_MW,) * base.n_segments,
        "nlf": (0.175, 0.25, 0.25, 0.25, 0.25),
        "nll": (0.25, 0.25, 0.25, 0.225, 0.125),
    }[key]
    flat_charge = key in ("nlc", "nlf", "nll")
    segments = tuple(
        SegmentSpec(
            e_end=seg.e_end,
            cost=seg.cost,
            d_rating=d_mw[s] * hours,
            p_rating=const if flat_charge else seg.p_rating,
            eta_d=seg.eta_d,
            eta_p=seg.eta_p,
        )
        for s, seg in enumerate(base.segments)
    )
    return StorageSpec(
        e_min=base.e_min, segments=segments, step_minutes=base.step_minutes
    )


@dataclass(frozen=True)
class SweepPoint:
    capacity_mw: float  # storage power capacity
    n_segments: int  # market model segment count
    avg_cost_single: float  # mean daily system cost, sequential clearing ($)
    avg_cost_multi: float  # mean daily system cost, multi-period benchmark ($)
    normalized_cost: float  # avg_cost_single / avg_cost_multi
    avg_price: float  # mean hourly price over the ensemble ($/MWh)
    price_std: float  # within-day price std, averaged over scenarios
    storage_profit: float  # mean daily storage profit ($)


def run_influencer_sweep(
    fleet,
    scenarios,
    capacity_fractions=(0.0, 0.05, 0.1, 0.2),
    segment_counts=(1, 2, 5, 10),
    duration_h: float = 4.0,
    eta: float = 0.9,
    cost: float = 10.0,
    grid_points: int = 240,
    plan: SamplingPlan = SamplingPlan(),
) -> tuple[SweepPoint, ...]:
    """Sweep storage capacity and market segment count over daily scenarios.

    Capacity points are fractions of the ensemble peak demand; energy is
    duration_h times power. For each scenario the fleet is committed once
    without storage, the storage designs bids from those prices, and the day
    is run two ways: a multi-period dispatch with the physical device
    (benchmark) and sequential hourly clearings with k-segment bids. All
    reported figures average over scenarios.
    """
    fleet = tuple(fleet)
    scenarios = tuple(scenarios)
    commitments = [unit_commitment(fleet, s) for s in scenarios]
    peak = max(max(s.demand) for s in scenarios)
    points = []
    for frac in capacity_fractions:
        cap_mw = frac * peak
        if cap_mw == 0:
            sims = [
                simulate_realtime_day(fleet, c, s, None, None)
                for c, s in zip(commitments, scenarios)
            ]
            cost_single = float(np.mean([sim.system_cost for sim in sims]))
            avg_price = float(np.mean([sim.prices for sim in sims]))
            std = float(np.mean([np.std(sim.prices) for sim in sims]))
            for k in segment_counts:
                points.append(SweepPoint(
                    capacity_mw=cap_mw, n_segments=k,
                    avg_cost_single=cost_single, avg_cost_multi=cost_single,
                    normalized_cost=1.0, avg_price=avg_price, price_std=std,
                    storage_profit=0.0,
                ))
            continue
        energy = duration_h * cap_mw
        phys = linear_spec(energy, cap_mw, eta, cost, step_minutes=60.0)
        ppm = grid_points / energy
        multi_costs = [
            economic_dispatch_multi(
                fleet, c, s, phys, points_per_mwh=ppm
            ).system_cost
            for c, s in zip(commitments, scenarios)
        ]
        grid = build_grid(phys, ppm)
        curves = [
            backward_induction(
                phys, PriceSeries(60.0, np.array(c.prices_da)), grid
            )
            for c in commitments
        ]
        for k in segment_counts:
            market_spec = resegment(phys, k)
            profits, costs_single, prices = [], [], []
            for curve, commitment, scen in zip(curves, commitments, scenarios):
                bids = [
                    enforce_monotone(make_bids(curve, market_spec, h, plan))
                    for h in range(scen.n_hours)
                ]
                sim = simulate_realtime_day(
                    fleet, commitment, scen, market_spec, bids
                )
                costs_single.append(sim.system_cost)
                prices.append(sim.prices)
                day = np.array(sim.prices)
                rev, chg = settlement(
                    market_spec, day, [r.dispatch for r in sim.results]
                )
                profits.append(rev - chg)
            avg_multi = float(np.mean(multi_costs))
            avg_single = float(np.mean(costs_single))
            points.append(SweepPoint(
                capacity_mw=cap_mw, n_segments=k,
                avg_cost_single=avg_single, avg_cost_multi=avg_multi,
                normalized_cost=avg_single / avg_multi,
                avg_price=float(np.mean(prices)),
                price_std=float(np.mean([np.std(p) for p in prices])),
                storage_profit=float(np.mean(profits)),
            ))
    return tuple(points)


def write_pricetaker_outputs(
    runs: dict[str, ArbitrageRun], spec: StorageSpec, out_dir
) -> dict[str, str]:
    """Emit the profit table, JSON summary, and SoC histogram plot data."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    table = os.path.join(out_dir, "profits.csv")
    with open(table, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([
            "model", "revenue_usd", "cost_usd", "profit_usd",
            "ratio_pct", "wall_seconds",
        ])
        for name, run in runs.items():
            r = run.report
            w.writerow([
                name, f"{r.revenue:.2f}", f"{r.cost:.2f}", f"{r.profit:.2f}",
                "" if r.ratio_pct is None else f"{r.ratio_pct:.1f}",
                f"{r.wall_seconds:.2f}",
            ])
    paths["profits"] = table

    hist = os.path.join(out_dir, "soc_histogram.csv")
    n_bins = 10
    edges = np.linspace(0.0, 100.0, n_bins + 1)
    with open(hist, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["soc_pct_lo", "soc_pct_hi"] + list(runs))
        cols = [soc_histogram(r.soc, spec, n_bins) for r in runs.values()]
        for i in range(n_bins):
            w.writerow(
                [f"{edges[i]:.0f}", f"{edges[i + 1]:.0f}"]
                + [f"{c[i]:.6f}" for c in cols]
            )
    paths["soc_histogram"] = hist

    summary = os.path.join(out_dir, "summary.json")
    with open(summary, "w") as f:
        json.dump(
            {
                name: {
                    "revenue_usd": run.report.revenue,
                    "cost_usd": run.report.cost,
                    "profit_usd": run.report.profit,
                    "ratio_pct": run.report.ratio_pct,
                    "wall_seconds": run.report.wall_seconds,
                }
                for name, run in runs.items()
            },
            f,
            indent=2,
        )
    paths["summary"] = summary
    return paths


def write_influencer_outputs(points, out_dir) -> dict[str, str]:
    """Emit the sweep table, JSON summary, and per-metric plot data."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    table = os.path.join(out_dir, "sweep.csv")
    with open(table, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([
            "capacity_mw", "n_segments", "avg_cost_single_usd",
            "avg_cost_multi_usd", "normalized_cost", "avg_price_usd_per_mwh",
            "price_std_usd_per_mwh", "storage_profit_usd",
        ])
        for pt in points:
            w.writerow([
                f"{pt.capacity_mw:.2f}", pt.n_segments,
                f"{pt.avg_cost_single:.2f}", f"{pt.avg_cost_multi:.2f}",
                f"{pt.normalized_cost:.6f}", f"{pt.avg_price:.4f}",
                f"{pt.price_std:.4f}", f"{pt.storage_profit:.2f}",
            ])
    paths["sweep"] = table

    caps = sorted({pt.capacity_mw for pt in points})
    ks = sorted({pt.n_segments for pt in points})
    by_key = {(pt.capacity_mw, pt.n_segments): pt for pt in points}
    metrics = {
        "cost_vs_capacity": lambda p: f"{p.avg_cost_single:.2f}",
        "normalized_cost": lambda p: f"{p.normalized_cost:.6f}",
        "avg_price": lambda p: f"{p.avg_price:.4f}",
        "price_std": lambda p: f"{p.price_std:.4f}",
    }
    for metric, fmt in metrics.items():
        path = os.path.join(out_dir, f"{metric}.csv")
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["capacity_mw"] + [f"segments_{k}" for k in ks])
            for cap in caps:
                w.writerow(
                    [f"{cap:.2f}"] + [fmt(by_key[(cap, k)]) for k in ks]
                )
        paths[metric] = path

    summary = os.path.join(out_dir, "summary.json")
    with open(summary, "w") as f:
        json.dump(
            [
                {
                    "capacity_mw": pt.capacity_mw,
                    "n_segments": pt.n_segments,
                    "avg_cost_single_usd": pt.avg_cost_single,
                    "avg_cost_multi_usd": pt.avg_cost_multi,
                    "normalized_cost": pt.normalized_cost,
                    "avg_price_usd_per_mwh": pt.avg_price,
                    "price_std_usd_per_mwh": pt.price_std,
                    "storage_profit_usd": pt.storage_profit,
                }
                for pt in points
            ],
            f,
            indent=2,
        )
    paths["summary"] = summary
    return paths


def run_pricetaker_study(config: StudyConfig) -> dict[str, ArbitrageRun]:
    """Load inputs per the config, run the backtest, write any outputs."""
    from .fileio import read_prices, read_storage_spec
    from .synthetic import synthetic_prices

    if config.kind != "pricetaker":
        raise ValueError(f"config kind is {config.kind!r}, not 'pricetaker'")
    if config.storage_path is not None:
        spec = read_storage_spec(config.storage_path)
    else:
        spec = make_storage_variant(config.variant or "lin")
    if config.price_path is not None:
        prices = read_prices(config.price_path)
    else:
        prices = synthetic_prices(config.seed, days=config.synth_days)
    runs = run_pricetaker(
        spec,
        prices,
        markets=config.markets,
        points_per_mwh=config.points_per_mwh,
        plan=SamplingPlan(config.n_samples),
        valuation_step_minutes=config.valuation_step_minutes,
    )
    if config.out_dir is not None:
        write_pricetaker_outputs(
            runs, rescale_step(spec, prices.step_minutes), config.out_dir
        )
    return runs


def run_priceinfluencer_study(config: StudyConfig) -> tuple[SweepPoint, ...]:
    """Load inputs per the config, run the sweep, write any outputs."""
    from .fileio import read_fleet, read_scenarios
    from .synthetic import synthetic_fleet, synthetic_scenarios

    if config.kind != "priceinfluencer":
        raise ValueError(
            f"config kind is {config.kind!r}, not 'priceinfluencer'"
        )
    if config.fleet_path is not None:
        fleet = read_fleet(config.fleet_path)
    else:
        fleet = synthetic_fleet(config.seed)
    if config.scenario_path is not None:
        scenarios = read_scenarios(config.scenario_path)
    else:
        scenarios = synthetic_scenarios(config.seed + 1, fleet)
    points = run_influencer_sweep(
        fleet,
        scenarios,
        capacity_fractions=config.capacity_fractions,
        segment_counts=config.segment_counts,
        plan=SamplingPlan(config.n_samples),
    )
    if config.out_dir is not None:
        write_influencer_outputs(points, config.out_dir)
    return points
