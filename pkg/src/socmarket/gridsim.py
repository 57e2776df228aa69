"""Thermal fleet model: merit-order dispatch, pricing, and daily commitment.

Generators have quadratic variable cost, so single-period dispatch is exact
equal-incremental-cost water-filling over the online units and the system
marginal cost doubles as the clearing price. Commitment is a priority-list
heuristic with minimum up/down repair, deliberately simpler than a full
integer program: the studies built on top compare market models under one
common commitment, so relative results survive a suboptimal but identical
schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import BALANCE_TOL

#: Required operating reserve: 5% of wind plus 3% of demand.
RESERVE_WIND_FRAC = 0.05
RESERVE_DEMAND_FRAC = 0.03


@dataclass(frozen=True)
class GeneratorSpec:
    c_lin: float  # $/MWh
    c_quad: float  # $/MW^2 h
    c_noload: float  # $/h while committed
    c_start: float  # $ per startup
    g_min: float  # MW
    g_max: float  # MW
    t_up: int  # minimum hours on after a start
    t_dn: int  # minimum hours off after a stop

    def __post_init__(self):
        if not 0.0 <= self.g_min <= self.g_max:
            raise ValueError(f"need 0 <= g_min <= g_max, got {self.g_min}, {self.g_max}")
        if min(self.c_lin, self.c_quad, self.c_noload, self.c_start) < 0:
            raise ValueError("generator costs must be nonnegative")
        if self.t_up < 1 or self.t_dn < 1:
            raise ValueError("t_up and t_dn must be at least 1 hour")

    def marginal(self, g: float) -> float:
        return self.c_lin + 2.0 * self.c_quad * g

    def variable_cost(self, g: float) -> float:
        return self.c_lin * g + self.c_quad * g * g


@dataclass(frozen=True)
class ScenarioData:
    demand: tuple[float, ...]  # MW per hour
    wind: tuple[float, ...]  # forecast MW per hour, free but curtailable

    def __post_init__(self):
        object.__setattr__(self, "demand", tuple(float(x) for x in self.demand))
        object.__setattr__(self, "wind", tuple(float(x) for x in self.wind))
        if len(self.demand) != len(self.wind):
            raise ValueError(
                f"demand has {len(self.demand)} hours, wind {len(self.wind)}"
            )
        if not self.demand:
            raise ValueError("scenario needs at least one hour")
        if min(self.demand) < 0 or min(self.wind) < 0:
            raise ValueError("demand and wind must be nonnegative")

    @property
    def n_hours(self) -> int:
        return len(self.demand)


@dataclass(frozen=True)
class CommitmentSchedule:
    u: tuple[tuple[int, ...], ...]  # on/off, indexed [unit][hour]
    y: tuple[tuple[int, ...], ...]  # startup flags
    z: tuple[tuple[int, ...], ...]  # shutdown flags
    prices_da: tuple[float, ...]  # $/MWh, marginal cost at committed status

    @property
    def n_units(self) -> int:
        return len(self.u)

    @property
    def n_hours(self) -> int:
        return len(self.u[0]) if self.u else 0

    def online(self, hour: int) -> tuple[int, ...]:
        return tuple(i for i in range(self.n_units) if self.u[i][hour])


def required_reserve(wind: float, demand: float) -> float:
    return RESERVE_WIND_FRAC * wind + RESERVE_DEMAND_FRAC * demand


class SupplyCurve:
    """Aggregate marginal-cost curve of a set of online generators.

    Piecewise linear price as a function of served load, built from each
    unit's entry price (marginal cost at g_min) and exit price (at g_max).
    Exact: allocations, prices, and integrated costs all agree with
    per-generator formulas, so it doubles as the residual-demand primitive
    for market clearing. At a load where the price jumps between two units,
    the reported price is the cost of the next increment.
    """

    def __init__(self, gens):
        self.gens = tuple(gens)
        self.noload = sum(g.c_noload for g in self.gens)
        self.load_min = sum(g.g_min for g in self.gens)
        self.load_max = sum(g.g_max for g in self.gens)
        if not self.gens:
            self._loads = np.zeros(1)
            self._prices = np.zeros(1)
            self._costs = np.zeros(1)
            return

        knot_prices = sorted({g.marginal(g.g_min) for g in self.gens}
                             | {g.marginal(g.g_max) for g in self.gens})
        pts = []  # (load, price) along the curve, loads non-decreasing
        for lam in knot_prices:
            lo = hi = 0.0
            for g in self.gens:
                if g.c_quad > 0:
                    out = min(max((lam - g.c_lin) / (2 * g.c_quad), g.g_min), g.g_max)
                    lo += out
                    hi += out
                else:
                    lo += g.g_max if lam > g.c_lin else g.g_min
                    hi += g.g_max if lam >= g.c_lin else g.g_min
            pts.append((lo, lam))
            if hi > lo:
                pts.append((hi, lam))
        # price jumps appear as repeated loads; interp picks the later
        # (higher) price at exactly such a load, the cost of the next MW
        loads, prices = [], []
        for x, lam in pts:
            if loads and x < loads[-1]:
                x = loads[-1]  # float dust; the path must not step back
            loads.append(x)
            prices.append(lam)
        self._loads = np.array(loads)
        self._prices = np.array(prices)
        base = sum(g.variable_cost(g.g_min) for g in self.gens)
        seg = np.diff(self._loads) * (self._prices[:-1] + self._prices[1:]) / 2.0
        self._costs = base + np.concatenate([[0.0], np.cumsum(seg)])

    def price_at(self, load):
        """System marginal cost at the given served load(s)."""
        return np.interp(load, self._loads, self._prices)

    def load_range_at(self, lam: float) -> tuple[float, float]:
        """Loads served at a given marginal price, as a closed interval.

        A price on a flat of the curve maps to that whole load range; a
        price inside a jump maps to the single load where it occurs.
        """
        hi = float(np.interp(lam, self._prices, self._loads))
        lo = -float(
            np.interp(-lam, -self._prices[::-1], -self._loads[::-1])
        )
        return lo, hi

    def cost_at(self, load):
        """Hourly cost at the given load(s): no-load plus variable ($/h)."""
        load = np.asarray(load, dtype=np.float64)
        j = np.clip(np.searchsorted(self._loads, load, side="right") - 1, 0, len(self._loads) - 1)
        lam = np.interp(load, self._loads, self._prices)
        var = self._costs[j] + (self._prices[j] + lam) / 2.0 * (load - self._loads[j])
        return var + self.noload

    def allocate(self, load: float) -> tuple[tuple[float, ...], float]:
        """Per-generator outputs and marginal price at one served load."""
        if not self.gens:
            if abs(load) > BALANCE_TOL:
                raise ValueError(f"no online units to serve {load} MW")
            return (), 0.0
        if not self.load_min - 1e-9 <= load <= self.load_max + 1e-9:
            raise ValueError(
                f"load {load} MW outside online range "
                f"[{self.load_min}, {self.load_max}] MW"
            )
        load = min(max(load, self.load_min), self.load_max)
        lam = float(self.price_at(load))
        out = []
        tied = []
        for k, g in enumerate(self.gens):
            if g.c_quad > 0:
                out.append(min(max((lam - g.c_lin) / (2 * g.c_quad), g.g_min), g.g_max))
            elif abs(lam - g.c_lin) <= 1e-9 * max(1.0, abs(g.c_lin)):
                out.append(g.g_min)
                tied.append(k)
            else:
                out.append(g.g_max if lam > g.c_lin else g.g_min)
        rem = load - sum(out)
        for k in tied:
            take = min(self.gens[k].g_max - self.gens[k].g_min, max(rem, 0.0))
            out[k] += take
            rem -= take
        if abs(rem) > BALANCE_TOL:
            raise ValueError(f"allocation residual {rem} MW at load {load} MW")
        return tuple(out), lam


def thermal_dispatch(
    fleet_online, net_load: float, wind_available: float = 0.0
) -> tuple[tuple[float, ...], float, float]:
    """Outputs, marginal price, and hourly cost serving a net load.

    net_load is demand minus wind. If it falls below the fleet's minimum
    generation, up to wind_available MW of wind is curtailed to lift the
    thermal load to that floor, and free curtailed wind sets the price to
    zero. Loads outside what curtailment can repair are rejected.
    """
    curve = SupplyCurve(fleet_online)
    lo, hi = curve.load_min, curve.load_max
    if net_load > hi + 1e-9:
        raise ValueError(
            f"net load {net_load} MW exceeds online capacity {hi} MW"
        )
    if net_load < lo - 1e-9:
        if lo - net_load > wind_available + 1e-9:
            raise ValueError(
                f"net load {net_load} MW below minimum generation {lo} MW "
                f"and only {wind_available} MW of wind can be curtailed"
            )
        g, _ = curve.allocate(lo)
        return g, 0.0, float(curve.cost_at(lo))
    g, lam = curve.allocate(net_load)
    return g, lam, float(curve.cost_at(min(max(net_load, lo), hi)))


def _avg_full_load_cost(g: GeneratorSpec) -> float:
    if g.g_max <= 0:
        return math.inf
    return (g.c_noload + g.variable_cost(g.g_max)) / g.g_max


def _capacity_targets(scenario: ScenarioData) -> list[float]:
    # committed capacity must cover net load plus the 5+3 reserve
    return [
        d - w + required_reserve(w, d)
        for d, w in zip(scenario.demand, scenario.wind)
    ]


def _runs(row) -> list[tuple[int, int, int]]:
    """(value, start, end_exclusive) runs of a 0/1 sequence."""
    out = []
    start = 0
    for t in range(1, len(row) + 1):
        if t == len(row) or row[t] != row[start]:
            out.append((row[start], start, t))
            start = t
    return out


def _repair_min_times(u, fleet) -> None:
    """Extend runs in place so min up/down hold; only adds ON hours.

    Short interior OFF gaps are filled (removing the shutdown) and short ON
    runs are extended to the right. Runs truncated by the end of the day are
    legal as-is, and the day starts from the all-off state, so a leading OFF
    run carries no shutdown to constrain.
    """
    T = len(u[0])
    changed = True
    while changed:
        changed = False
        for i, g in enumerate(fleet):
            for val, a, b in _runs(u[i]):
                if val == 0 and a > 0 and b < T and b - a < g.t_dn:
                    for t in range(a, b):
                        u[i][t] = 1
                    changed = True
                elif val == 1 and b < T and b - a < g.t_up:
                    for t in range(b, min(a + g.t_up, T)):
                        u[i][t] = 1
                    changed = True
            if changed:
                break
        # restart scanning after any change: runs were merged


def _day_cost(fleet, scenario, u) -> float:
    """Total cost of a commitment: dispatch, no-load, and startups."""
    total = 0.0
    for t in range(scenario.n_hours):
        online = [fleet[i] for i in range(len(fleet)) if u[i][t]]
        _, _, cost = thermal_dispatch(
            online, scenario.demand[t] - scenario.wind[t], scenario.wind[t]
        )
        total += cost
    prev = [0] * len(fleet)
    for t in range(scenario.n_hours):
        for i, g in enumerate(fleet):
            if u[i][t] and not prev[i]:
                total += g.c_start
        prev = [u[i][t] for i in range(len(fleet))]
    return total


def _feasible_hour(fleet, scenario, u, t) -> bool:
    online = [fleet[i] for i in range(len(fleet)) if u[i][t]]
    cap = sum(g.g_max for g in online)
    floor = sum(g.g_min for g in online)
    net = scenario.demand[t] - scenario.wind[t]
    if cap + 1e-9 < _capacity_targets(scenario)[t]:
        return False
    return floor <= scenario.demand[t] + 1e-9 and net <= cap + 1e-9


def unit_commitment(fleet, scenario: ScenarioData) -> CommitmentSchedule:
    """Priority-list daily commitment with min up/down repair.

    Units are ranked by average full-load cost and committed each hour until
    capacity covers net load plus reserve; repair then extends runs to honor
    minimum up/down times, and a decommitment pass drops whole runs whose
    removal stays feasible and saves money. Day-ahead prices come from
    dispatching the committed units against each hour's net load.
    """
    fleet = tuple(fleet)
    n, T = len(fleet), scenario.n_hours
    order = sorted(range(n), key=lambda i: _avg_full_load_cost(fleet[i]))
    targets = _capacity_targets(scenario)

    u = [[0] * T for _ in range(n)]
    for t in range(T):
        cap = 0.0
        for i in order:
            if cap >= targets[t]:
                break
            u[i][t] = 1
            cap += fleet[i].g_max
        if cap < targets[t]:
            raise ValueError(
                f"hour {t}: fleet capacity {cap} MW cannot meet load plus "
                f"reserve {targets[t]} MW"
            )

    _repair_min_times(u, fleet)

    for t in range(T):
        if not _feasible_hour(fleet, scenario, u, t):
            raise ValueError(
                f"hour {t}: committed set infeasible for demand "
                f"{scenario.demand[t]} MW with wind {scenario.wind[t]} MW"
            )

    # decommitment: try dropping whole runs, most expensive units first
    for i in sorted(range(n), key=lambda i: -_avg_full_load_cost(fleet[i])):
        for val, a, b in _runs(u[i]):
            if val != 1:
                continue
            trial = [row[:] for row in u]
            for t in range(a, b):
                trial[i][t] = 0
            if all(_feasible_hour(fleet, scenario, trial, t) for t in range(a, b)):
                if _day_cost(fleet, scenario, trial) < _day_cost(fleet, scenario, u):
                    u = trial

    prices = []
    for t in range(T):
        online = [fleet[i] for i in range(n) if u[i][t]]
        _, lam, _ = thermal_dispatch(
            online, scenario.demand[t] - scenario.wind[t], scenario.wind[t]
        )
        prices.append(lam)

    y = [[0] * T for _ in range(n)]
    z = [[0] * T for _ in range(n)]
    for i in range(n):
        prev = 0
        for t in range(T):
            y[i][t] = int(u[i][t] == 1 and prev == 0)
            z[i][t] = int(u[i][t] == 0 and prev == 1)
            prev = u[i][t]

    return CommitmentSchedule(
        u=tuple(tuple(r) for r in u),
        y=tuple(tuple(r) for r in y),
        z=tuple(tuple(r) for r in z),
        prices_da=tuple(prices),
    )


def check_commitment(fleet, scenario: ScenarioData, schedule: CommitmentSchedule):
    """All verifiable commitment constraint violations, empty when valid.

    Checks status logic (startup/shutdown flags consistent with on/off),
    minimum up/down windows from the all-off initial state, capacity versus
    net load plus the 5+3 reserve, and minimum-generation feasibility
    allowing full wind curtailment.
    """
    fleet = tuple(fleet)
    out = []
    n, T = schedule.n_units, schedule.n_hours
    if n != len(fleet):
        return [f"schedule has {n} units, fleet has {len(fleet)}"]
    if T != scenario.n_hours:
        return [f"schedule has {T} hours, scenario has {scenario.n_hours}"]
    for i in range(n):
        prev = 0
        for t in range(T):
            du = schedule.u[i][t] - prev
            if schedule.y[i][t] - schedule.z[i][t] != du:
                out.append(f"unit {i} hour {t}: startup/shutdown flags break logic")
            if schedule.y[i][t] + schedule.z[i][t] > 1:
                out.append(f"unit {i} hour {t}: simultaneous startup and shutdown")
            prev = schedule.u[i][t]
        for t in range(T):
            up_win = range(max(t - fleet[i].t_up + 1, 0), t + 1)
            if sum(schedule.y[i][tt] for tt in up_win) > schedule.u[i][t]:
                out.append(f"unit {i} hour {t}: minimum up time violated")
            dn_win = range(max(t - fleet[i].t_dn + 1, 0), t + 1)
            if sum(schedule.z[i][tt] for tt in dn_win) > 1 - schedule.u[i][t]:
                out.append(f"unit {i} hour {t}: minimum down time violated")
    for t in range(T):
        online = [fleet[i] for i in range(n) if schedule.u[i][t]]
        cap = sum(g.g_max for g in online)
        floor = sum(g.g_min for g in online)
        d, w = scenario.demand[t], scenario.wind[t]
        need = d - w + required_reserve(w, d)
        if cap + 1e-9 < need:
            out.append(
                f"hour {t}: capacity {cap} MW below net load plus reserve {need} MW"
            )
        if floor > d + 1e-9:
            out.append(
                f"hour {t}: minimum generation {floor} MW exceeds demand {d} MW"
            )
    return out
