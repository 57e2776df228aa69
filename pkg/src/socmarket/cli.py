"""Command line interface.

Subcommands: validate (parse and check input files), value (emit a value
curve), bid (emit hourly bid curves), backtest (price-taker study), market
(price-influencer sweep), gen-synthetic (seeded test data). Successful runs
exit 0; failures print a machine-readable JSON error object to stdout and
exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import fileio
from .bidding import SamplingPlan, enforce_monotone, make_bids
from .constants import DEFAULT_POINTS_PER_MWH, DEFAULT_SOC_SAMPLES
from .storage import rescale_step, resegment
from .studies import (
    StudyConfig,
    run_priceinfluencer_study,
    run_pricetaker_study,
)
from .valuation import backward_induction, build_grid


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socmarket",
        description="SoC-segment storage bidding and market simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and check input files")
    p.add_argument("--storage", help="storage spec CSV")
    p.add_argument("--prices", help="price series CSV")
    p.add_argument("--bids", help="bid curve CSV")
    p.add_argument("--fleet", help="generator fleet CSV")
    p.add_argument("--scenarios", help="demand/wind scenario CSV")

    p = sub.add_parser("value", help="emit a marginal value curve")
    p.add_argument("--storage", required=True)
    p.add_argument("--prices", required=True)
    p.add_argument("--points-per-mwh", type=float,
                   default=DEFAULT_POINTS_PER_MWH)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("bid", help="emit hourly bid curves")
    p.add_argument("--storage", required=True)
    p.add_argument("--prices", required=True)
    p.add_argument("--segments", type=int, default=None,
                   help="market segment count (default: the device's own)")
    p.add_argument("--points-per-mwh", type=float,
                   default=DEFAULT_POINTS_PER_MWH)
    p.add_argument("--n-samples", type=int, default=DEFAULT_SOC_SAMPLES)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("backtest", help="price-taker arbitrage study")
    p.add_argument("--storage", help="storage spec CSV")
    p.add_argument("--variant", default=None,
                   help="named device instead of a file: "
                        "lin, nla, nlb, nlc, nlf, nll")
    p.add_argument("--prices", help="price series CSV (default: synthetic)")
    p.add_argument("--markets", type=_str_list,
                   default=("multi", "rtd-5", "rtd-1"),
                   help="comma list, e.g. multi,rtd-5,rtd-1")
    p.add_argument("--points-per-mwh", type=float,
                   default=DEFAULT_POINTS_PER_MWH)
    p.add_argument("--n-samples", type=int, default=DEFAULT_SOC_SAMPLES)
    p.add_argument("--valuation-step-minutes", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--days", type=int, default=365,
                   help="synthetic price length when --prices is omitted")
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("market", help="price-influencer capacity sweep")
    p.add_argument("--fleet", help="fleet CSV (default: synthetic)")
    p.add_argument("--scenarios", help="scenario CSV (default: synthetic)")
    p.add_argument("--capacities", type=_float_list,
                   default=(0.0, 0.05, 0.1, 0.2),
                   help="fractions of peak demand, comma list")
    p.add_argument("--segments", type=_int_list, default=(1, 2, 5, 10),
                   help="market segment counts, comma list")
    p.add_argument("--n-samples", type=int, default=DEFAULT_SOC_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("gen-synthetic", help="write seeded synthetic data")
    p.add_argument("kind", choices=("prices", "fleet", "scenarios"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--days", type=int, default=365, help="prices only")
    p.add_argument("--step-minutes", type=float, default=5.0,
                   help="prices only")
    p.add_argument("--units", type=int, default=10, help="fleet size")
    p.add_argument("--n-scenarios", type=int, default=5)
    p.add_argument("--fleet", default=None,
                   help="scenarios only: size them to this fleet file")
    p.add_argument("--out", required=True)
    return parser


def _cmd_validate(args) -> dict:
    checked = {}
    if args.storage:
        spec = fileio.read_storage_spec(args.storage)
        checked["storage"] = f"{args.storage} ({spec.n_segments} segments)"
    if args.prices:
        series = fileio.read_prices(args.prices)
        checked["prices"] = f"{args.prices} ({len(series.prices)} intervals)"
    if args.bids:
        curves = fileio.read_bids(args.bids)
        checked["bids"] = f"{args.bids} ({len(curves)} hours)"
    if args.fleet:
        fleet = fileio.read_fleet(args.fleet)
        checked["fleet"] = f"{args.fleet} ({len(fleet)} units)"
    if args.scenarios:
        scen = fileio.read_scenarios(args.scenarios)
        checked["scenarios"] = f"{args.scenarios} ({len(scen)} scenarios)"
    if not checked:
        raise ValueError("nothing to validate: pass at least one file flag")
    return {"ok": True, "checked": checked}


def _cmd_value(args) -> dict:
    spec = fileio.read_storage_spec(args.storage)
    prices = fileio.read_prices(args.prices)
    spec = rescale_step(spec, prices.step_minutes)
    grid = build_grid(spec, args.points_per_mwh)
    curve = backward_induction(spec, prices, grid)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["step", "soc_mwh", "q_usd_per_mwh"])
        for t in range(curve.n_steps + 1):
            for e, q in zip(curve.grid, curve.q[t]):
                w.writerow([t, repr(float(e)), repr(float(q))])
    return {
        "ok": True, "out": args.out,
        "steps": curve.n_steps, "grid_points": len(grid),
    }


def _cmd_bid(args) -> dict:
    spec = fileio.read_storage_spec(args.storage)
    prices = fileio.read_prices(args.prices)
    spec = rescale_step(spec, prices.step_minutes)
    per_hour = int(round(60.0 / prices.step_minutes))
    n_hours = len(prices.prices) // per_hour
    if n_hours < 1:
        raise ValueError("price series is shorter than one hour")
    grid = build_grid(spec, args.points_per_mwh)
    curve = backward_induction(spec, prices, grid)
    market = spec if args.segments is None else resegment(spec, args.segments)
    plan = SamplingPlan(args.n_samples)
    curves = [
        enforce_monotone(make_bids(curve, market, h, plan))
        for h in range(n_hours)
    ]
    fileio.write_bids(curves, args.out)
    return {"ok": True, "out": args.out, "hours": n_hours,
            "segments": market.n_segments}


def _cmd_backtest(args) -> dict:
    config = StudyConfig(
        kind="pricetaker",
        markets=tuple(args.markets),
        storage_path=args.storage,
        variant=args.variant,
        price_path=args.prices,
        points_per_mwh=args.points_per_mwh,
        n_samples=args.n_samples,
        valuation_step_minutes=args.valuation_step_minutes,
        out_dir=args.out_dir,
        seed=args.seed,
        synth_days=args.days,
    )
    runs = run_pricetaker_study(config)
    return {
        "ok": True,
        "out_dir": args.out_dir,
        "reports": {
            name: {
                "revenue_usd": run.report.revenue,
                "cost_usd": run.report.cost,
                "profit_usd": run.report.profit,
                "ratio_pct": run.report.ratio_pct,
                "wall_seconds": run.report.wall_seconds,
            }
            for name, run in runs.items()
        },
    }


def _cmd_market(args) -> dict:
    config = StudyConfig(
        kind="priceinfluencer",
        fleet_path=args.fleet,
        scenario_path=args.scenarios,
        capacity_fractions=tuple(args.capacities),
        segment_counts=tuple(args.segments),
        n_samples=args.n_samples,
        out_dir=args.out_dir,
        seed=args.seed,
    )
    points = run_priceinfluencer_study(config)
    return {
        "ok": True,
        "out_dir": args.out_dir,
        "points": [
            {
                "capacity_mw": float(p.capacity_mw),
                "n_segments": int(p.n_segments),
                "normalized_cost": float(p.normalized_cost),
                "avg_price_usd_per_mwh": float(p.avg_price),
                "price_std_usd_per_mwh": float(p.price_std),
                "storage_profit_usd": float(p.storage_profit),
            }
            for p in points
        ],
    }


def _cmd_gen_synthetic(args) -> dict:
    from .synthetic import synthetic_fleet, synthetic_prices, synthetic_scenarios

    if args.kind == "prices":
        series = synthetic_prices(
            args.seed, days=args.days, step_minutes=args.step_minutes
        )
        fileio.write_prices(series, args.out)
        detail = {"intervals": len(series.prices)}
    elif args.kind == "fleet":
        fleet = synthetic_fleet(args.seed, n_units=args.units)
        fileio.write_fleet(fleet, args.out)
        detail = {"units": len(fleet)}
    else:
        if args.fleet is not None:
            fleet = fileio.read_fleet(args.fleet)
        else:
            fleet = synthetic_fleet(args.seed, n_units=args.units)
        scenarios = synthetic_scenarios(
            args.seed + 1, fleet, n_scenarios=args.n_scenarios
        )
        fileio.write_scenarios(scenarios, args.out)
        detail = {"scenarios": len(scenarios)}
    return {"ok": True, "kind": args.kind, "out": args.out, **detail}


_COMMANDS = {
    "validate": _cmd_validate,
    "value": _cmd_value,
    "bid": _cmd_bid,
    "backtest": _cmd_backtest,
    "market": _cmd_market,
    "gen-synthetic": _cmd_gen_synthetic,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = _COMMANDS[args.command](args)
    except (ValueError, OSError, KeyError) as exc:
        print(json.dumps({
            "ok": False,
            "error": {"type": type(exc).__name__, "message": str(exc)},
        }))
        return 2
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
