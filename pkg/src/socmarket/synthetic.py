"""Seeded generators for offline test data: prices, fleets, scenarios.

Real market data cannot ship with the package, so studies and tests run on
synthetic stand-ins with similar texture. Everything is driven by a single
integer seed and is deterministic across runs.
"""

from __future__ import annotations

import numpy as np

from .gridsim import GeneratorSpec, ScenarioData
from .valuation import PriceSeries

INTERVALS_PER_DAY = {5.0: 288, 15.0: 96, 60.0: 24}


def synthetic_prices(
    seed: int, days: int = 365, step_minutes: float = 5.0
) -> PriceSeries:
    """Generate a price series with daily structure, noise, and spikes.

    The series is a daily sinusoid (morning shoulder plus evening peak)
    around a $35/MWh base, an AR-style smooth noise band of a few dollars,
    occasional positive spikes (about 0.2% of intervals, exponentially
    distributed around +$120), and rare negative dips. One year at 5-minute
    resolution is 105,120 intervals.
    """
    if days < 1:
        raise ValueError("days must be at least 1")
    per_day = int(round(24 * 60 / step_minutes))
    n = days * per_day
    rng = np.random.default_rng(seed)

    t = np.arange(n)
    hour = (t % per_day) * (step_minutes / 60.0)
    base = (
        35.0
        + 11.0 * np.sin(2 * np.pi * (hour - 12.5) / 24.0)
        + 4.0 * np.sin(4 * np.pi * (hour - 7.0) / 24.0)
    )

    # smooth wander: white noise blurred over roughly an hour
    kernel = int(round(60 / step_minutes)) or 1
    noise = rng.normal(0.0, 4.0, n + kernel - 1)
    noise = np.convolve(noise, np.ones(kernel) / np.sqrt(kernel), "valid")

    spikes = np.zeros(n)
    hits = rng.random(n) < 0.002
    spikes[hits] = rng.exponential(120.0, int(hits.sum()))
    dips = rng.random(n) < 0.001
    spikes[dips] -= rng.exponential(45.0, int(dips.sum()))
    # smear spikes so they last a few intervals
    spikes = np.convolve(spikes, np.array([0.4, 1.0, 0.5, 0.2]), "same")

    prices = np.maximum(base + noise + spikes, -50.0)
    return PriceSeries(step_minutes=step_minutes, prices=prices)


def synthetic_fleet(seed: int, n_units: int = 10) -> tuple[GeneratorSpec, ...]:
    """Generate a thermal fleet in three merit tiers.

    Roughly 30% baseload (150-300 MW, $8-16/MWh, min up/down 5-8 h,
    expensive starts), 40% mid-merit (80-180 MW, $24-38/MWh, 2-4 h), and
    30% peakers (30-100 MW, $55-95/MWh, 1 h, cheap starts). Minimum
    generation sits between 5% and 35% of the rating so commitment repair
    never drives the floor above realistic trough demand. Quadratic terms
    are sized so each unit's marginal cost climbs smoothly across its
    range and bridges into the next tier: baseload stays cheap and flat
    overnight while mid-merit ramps toward $45-70/MWh when loaded deep,
    so a small fleet still presents a smooth aggregate supply curve with
    a wide, arbitrage-worthy daily spread instead of giant price steps.
    """
    if n_units < 2:
        raise ValueError("need at least two units")
    rng = np.random.default_rng(seed)
    n_base = max(1, round(0.3 * n_units))
    n_peak = max(1, round(0.3 * n_units))
    n_mid = n_units - n_base - n_peak
    fleet = []
    for _ in range(n_base):
        g_max = rng.uniform(150.0, 300.0)
        fleet.append(GeneratorSpec(
            c_lin=rng.uniform(8.0, 16.0),
            c_quad=rng.uniform(0.006, 0.012),
            c_noload=rng.uniform(300.0, 800.0),
            c_start=rng.uniform(1500.0, 4000.0),
            g_min=rng.uniform(0.25, 0.35) * g_max,
            g_max=g_max,
            t_up=int(rng.integers(5, 9)),
            t_dn=int(rng.integers(5, 9)),
        ))
    for _ in range(n_mid):
        g_max = rng.uniform(80.0, 180.0)
        fleet.append(GeneratorSpec(
            c_lin=rng.uniform(24.0, 38.0),
            c_quad=rng.uniform(0.050, 0.100),
            c_noload=rng.uniform(100.0, 400.0),
            c_start=rng.uniform(400.0, 1500.0),
            g_min=rng.uniform(0.15, 0.3) * g_max,
            g_max=g_max,
            t_up=int(rng.integers(2, 5)),
            t_dn=int(rng.integers(2, 5)),
        ))
    for _ in range(n_peak):
        g_max = rng.uniform(30.0, 100.0)
        fleet.append(GeneratorSpec(
            c_lin=rng.uniform(55.0, 95.0),
            c_quad=rng.uniform(0.05, 0.15),
            c_noload=rng.uniform(20.0, 120.0),
            c_start=rng.uniform(50.0, 400.0),
            g_min=rng.uniform(0.05, 0.15) * g_max,
            g_max=g_max,
            t_up=1,
            t_dn=1,
        ))
    return tuple(fleet)


_DAY_SHAPE = np.array([
    0.62, 0.58, 0.55, 0.54, 0.55, 0.60,
    0.70, 0.80, 0.86, 0.88, 0.89, 0.90,
    0.90, 0.89, 0.88, 0.89, 0.92, 0.97,
    1.00, 0.98, 0.92, 0.84, 0.75, 0.67,
])  # fraction of daily peak, trough near 3am, peak near 6pm


def synthetic_scenarios(
    seed: int, fleet, n_scenarios: int = 5
) -> tuple[ScenarioData, ...]:
    """Generate daily demand/wind scenarios sized to a fleet.

    Peak demand lands near 70% of total fleet capacity so commitment always
    has headroom for the 5+3 reserve; wind averages roughly 10% of demand
    and blows hardest overnight.
    """
    if n_scenarios < 1:
        raise ValueError("need at least one scenario")
    rng = np.random.default_rng(seed)
    cap = sum(g.g_max for g in fleet)
    scenarios = []
    for _ in range(n_scenarios):
        peak = cap * rng.uniform(0.62, 0.72)
        demand = peak * _DAY_SHAPE * rng.uniform(0.97, 1.03, 24)
        wind_level = peak * rng.uniform(0.05, 0.15)
        wind_shape = 1.0 - 0.5 * (_DAY_SHAPE - _DAY_SHAPE.min()) / (
            _DAY_SHAPE.max() - _DAY_SHAPE.min()
        )
        wind = wind_level * wind_shape * rng.uniform(0.5, 1.3, 24)
        scenarios.append(ScenarioData(
            demand=tuple(float(x) for x in demand),
            wind=tuple(float(x) for x in wind),
        ))
    return tuple(scenarios)
