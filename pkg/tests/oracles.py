"""Independent brute-force oracles used to freeze expected values.

Everything here re-derives results straight from the raw model statements
(feasibility mesh enumeration, action-grid profit search, bid grid search)
without calling the package's own solvers, so tests compare two unrelated
routes to the same number.
"""

from __future__ import annotations

import itertools

import numpy as np

from socmarket.storage import StorageSpec, StorageState

_TOL = 1e-12


def _fill_ordered(widths, e_seg, tol=1e-9):
    for s in range(1, len(e_seg)):
        if e_seg[s] > tol and e_seg[s - 1] < widths[s - 1] - tol:
            return False
    return True


def mesh_max_discharge(spec: StorageSpec, state: StorageState, n: int = 31) -> float:
    """Max total discharge by exhaustive mesh over per-segment quantities."""
    widths = spec.widths
    axes = [
        np.linspace(0.0, state.e_seg[s] * spec.segments[s].eta_d, n)
        for s in range(spec.n_segments)
    ]
    best = 0.0
    for combo in itertools.product(*axes):
        mix = sum(d / seg.d_rating for d, seg in zip(combo, spec.segments))
        if mix > 1.0 + _TOL:
            continue
        e_next = [
            state.e_seg[s] - combo[s] / spec.segments[s].eta_d
            for s in range(spec.n_segments)
        ]
        if any(e < -_TOL for e in e_next):
            continue
        if not _fill_ordered(widths, e_next):
            continue
        best = max(best, sum(combo))
    return best


def mesh_max_charge(spec: StorageSpec, state: StorageState, n: int = 31) -> float:
    """Max total charge by exhaustive mesh over per-segment quantities."""
    widths = spec.widths
    axes = [
        np.linspace(
            0.0,
            (widths[s] - state.e_seg[s]) / spec.segments[s].eta_p,
            n,
        )
        for s in range(spec.n_segments)
    ]
    best = 0.0
    for combo in itertools.product(*axes):
        mix = sum(p / seg.p_rating for p, seg in zip(combo, spec.segments))
        if mix > 1.0 + _TOL:
            continue
        e_next = [
            state.e_seg[s] + combo[s] * spec.segments[s].eta_p
            for s in range(spec.n_segments)
        ]
        if any(e > widths[s] + _TOL for s, e in enumerate(e_next)):
            continue
        if not _fill_ordered(widths, e_next):
            continue
        best = max(best, sum(combo))
    return best


def one_step_value(spec: StorageSpec, e: float, lam: float, n: int = 20001) -> float:
    """Brute one-step optimum of the arbitrage objective, params frozen at e.

    Enumerates charge and discharge totals on a fine grid with a zero
    terminal value; discharging is forbidden at negative prices.
    """
    from socmarket.storage import segment_index

    seg = spec.segments[segment_index(spec, e)]
    d_hi = min(seg.d_rating, max(e - spec.e_min, 0.0) * seg.eta_d)
    p_hi = min(seg.p_rating, max(spec.e_max - e, 0.0) / seg.eta_p)
    best = 0.0
    if lam >= 0 and d_hi > 0:
        best = max(best, float(np.max((lam - seg.cost) * np.linspace(0, d_hi, n))))
    if p_hi > 0:
        best = max(best, float(np.max(-lam * np.linspace(0, p_hi, n))))
    return best


def one_step_q(spec: StorageSpec, e: float, lam: float, delta: float = 1e-4) -> float:
    """Central finite difference of the one-step optimum."""
    up = one_step_value(spec, e + delta, lam)
    dn = one_step_value(spec, e - delta, lam)
    return (up - dn) / (2 * delta)


def brute_cumulative_profit(
    spec: StorageSpec, e0: float, prices, na: int = 21
) -> float:
    """Max cumulative profit by exhaustive action-grid tree search.

    Continuous state, per-step actions on a grid; meant for single-segment
    specs where parameters are uniform so the enumeration is exact up to the
    action grid. Discharge is forbidden at negative prices.
    """
    seg = spec.segments[0]

    def rec(e, t):
        if t == len(prices):
            return 0.0
        lam = prices[t]
        best = rec(e, t + 1)
        d_hi = min(seg.d_rating, (e - spec.e_min) * seg.eta_d)
        if lam >= 0 and d_hi > 1e-15:
            for d in np.linspace(0, d_hi, na)[1:]:
                best = max(
                    best, (lam - seg.cost) * d + rec(e - d / seg.eta_d, t + 1)
                )
        p_hi = min(seg.p_rating, (spec.e_max - e) / seg.eta_p)
        if p_hi > 1e-15:
            for p in np.linspace(0, p_hi, na)[1:]:
                best = max(best, -lam * p + rec(e + p * seg.eta_p, t + 1))
        return best

    return rec(e0, 0)


def grid_isotonic(y, gap: float, lo: float, hi: float, step: float = 0.5):
    """Best strictly decreasing fit found by exhaustive grid search.

    Enumerates every strictly decreasing tuple drawn from a value grid
    (spacing >= gap by construction) and returns the one minimizing the sum
    of squared deviations from y. Restricted to the grid, so the true
    continuous optimum can only be better.
    """
    y = np.asarray(y, dtype=np.float64)
    values = np.arange(lo, hi + step / 2, step)
    combos = np.array(list(itertools.combinations(values[::-1], len(y))))
    sse = ((combos - y) ** 2).sum(axis=1)
    k = int(np.argmin(sse))
    return combos[k], float(sse[k])


def mesh_thermal_cost(gens, load, n=4001):
    """Min hourly cost serving load, by brute mesh over outputs.

    Handles one- and two-generator fleets; the mesh can only overshoot the
    true minimum, and by at most the curvature times the mesh spacing
    squared.
    """
    noload = sum(g.c_noload for g in gens)
    if len(gens) == 1:
        (g1,) = gens
        assert g1.g_min - 1e-9 <= load <= g1.g_max + 1e-9
        return noload + g1.variable_cost(load)
    a, b = gens
    x = np.linspace(a.g_min, a.g_max, n)
    y = load - x
    ok = (y >= b.g_min - 1e-12) & (y <= b.g_max + 1e-12)
    assert ok.any(), "load infeasible for the pair"
    x, y = x[ok], np.clip(y[ok], b.g_min, b.g_max)
    costs = (
        a.c_lin * x + a.c_quad * x**2 + b.c_lin * y + b.c_quad * y**2
    )
    return noload + float(costs.min())


def _pattern_ok(row, t_up, t_dn):
    """Min up/down validity of one unit's daily 0/1 pattern, off before."""
    runs = []
    start = 0
    T = len(row)
    for t in range(1, T + 1):
        if t == T or row[t] != row[start]:
            runs.append((row[start], start, t))
            start = t
    for val, a, b in runs:
        if val == 1 and b < T and b - a < t_up:
            return False
        if val == 0 and a > 0 and b < T and b - a < t_dn:
            return False
    return True


def enumerate_commitments(fleet, scenario):
    """Cheapest feasible commitment by exhaustive enumeration.

    Every per-unit on/off pattern satisfying min up/down (from an all-off
    start, end-of-day truncation allowed) is crossed with every other;
    hours must cover net load plus the 5% wind + 3% demand reserve with
    committed capacity, keep minimum generation under demand, and net load
    under capacity. Hour costs come from single-period dispatch; startup
    costs added per off-to-on edge. Tiny instances only.
    """
    from socmarket.gridsim import thermal_dispatch, required_reserve

    n, T = len(fleet), scenario.n_hours
    assert n * T <= 20, "instance too large for exhaustive search"
    patterns = []
    for i in range(n):
        rows = []
        for bits in itertools.product((0, 1), repeat=T):
            if _pattern_ok(bits, fleet[i].t_up, fleet[i].t_dn):
                rows.append(bits)
        patterns.append(rows)

    cost_memo = {}

    def hour_cost(online_idx, t):
        key = (online_idx, t)
        if key not in cost_memo:
            online = [fleet[i] for i in online_idx]
            d, w = scenario.demand[t], scenario.wind[t]
            _, _, c = thermal_dispatch(online, d - w, w)
            cost_memo[key] = c
        return cost_memo[key]

    best_u, best_cost = None, np.inf
    for combo in itertools.product(*patterns):
        feasible = True
        total = 0.0
        for t in range(T):
            online_idx = tuple(i for i in range(n) if combo[i][t])
            cap = sum(fleet[i].g_max for i in online_idx)
            floor = sum(fleet[i].g_min for i in online_idx)
            d, w = scenario.demand[t], scenario.wind[t]
            if cap + 1e-9 < d - w + required_reserve(w, d):
                feasible = False
                break
            if floor > d + 1e-9 or d - w > cap + 1e-9:
                feasible = False
                break
            total += hour_cost(online_idx, t)
        if not feasible:
            continue
        for i in range(n):
            prev = 0
            for t in range(T):
                if combo[i][t] and not prev:
                    total += fleet[i].c_start
                prev = combo[i][t]
        if total < best_cost - 1e-9:
            best_cost = total
            best_u = combo
    return best_u, best_cost


def _drain_walk(spec, state):
    """Discharge path from the top: (segment index, max delivered) steps."""
    idx, takes = [], []
    budget = 1.0
    for s in reversed(range(spec.n_segments)):
        e = state.e_seg[s]
        if e <= 1e-15:
            continue
        seg = spec.segments[s]
        take = min(e * seg.eta_d, budget * seg.d_rating)
        if take <= 0:
            break
        idx.append(s)
        takes.append(take)
        budget -= take / seg.d_rating
        if take < e * seg.eta_d - 1e-12 or budget <= 1e-15:
            break
    return idx, takes


def _fill_walk(spec, state):
    """Charge path from the bottom: (segment index, max drawn) steps."""
    idx, takes = [], []
    budget = 1.0
    lo = spec.e_min
    for s in range(spec.n_segments):
        seg = spec.segments[s]
        head = (seg.e_end - lo) - state.e_seg[s]
        lo = seg.e_end
        if head <= 1e-15:
            continue
        take = min(head / seg.eta_p, budget * seg.p_rating)
        if take <= 0:
            break
        idx.append(s)
        takes.append(take)
        budget -= take / seg.p_rating
        if take * seg.eta_p < head - 1e-12 or budget <= 1e-15:
            break
    return idx, takes


def _best_on_path(prices_per_unit, takes, grid_n):
    """Max of a piecewise-linear surplus along cumulative path amounts."""
    takes = np.asarray(takes, dtype=np.float64)
    if takes.size == 0:
        return 0.0
    cums = np.concatenate([[0.0], np.cumsum(takes)])
    xs = np.unique(np.concatenate([np.linspace(0.0, cums[-1], grid_n), cums]))
    per_step = np.clip(xs[:, None] - cums[None, :-1], 0.0, takes[None, :])
    surplus = per_step @ np.asarray(prices_per_unit)
    return float(surplus.max())


def best_bid_surplus(spec, state, bids, lam, grid_n=201):
    """Single-period bid surplus optimum by exhaustive path search.

    Any feasible action is a prefix of the top-down drain walk or of the
    bottom-up fill walk (fill-order logic forbids anything else), so both
    walks are enumerated at grid points plus every breakpoint, making the
    result exact for piecewise-linear surplus.
    """
    d_idx, d_takes = _drain_walk(spec, state)
    p_idx, p_takes = _fill_walk(spec, state)
    best_d = _best_on_path([lam - bids.g[s] for s in d_idx], d_takes, grid_n)
    best_p = _best_on_path([bids.b[s] - lam for s in p_idx], p_takes, grid_n)
    return max(0.0, best_d, best_p)


def mesh_bid_surplus(spec, state, bids, lam, n=21):
    """Bid surplus optimum over a full per-segment action mesh (S <= 2).

    Enumerates every gridded per-segment discharge and charge combination,
    including non-contiguous ones, keeping those that respect ratings, the
    mixture budget, SoC bounds, and end-state fill order. Charging and
    discharging are mutually exclusive.
    """
    S = spec.n_segments
    assert S <= 2, "mesh oracle is exponential in segments"
    widths = spec.widths
    best = 0.0

    d_axes = [
        np.linspace(0, min(seg.d_rating, state.e_seg[s] * seg.eta_d), n)
        for s, seg in enumerate(spec.segments)
    ]
    for d in itertools.product(*d_axes):
        if sum(x / seg.d_rating for x, seg in zip(d, spec.segments)) > 1 + 1e-12:
            continue
        e_new = [
            state.e_seg[s] - d[s] / spec.segments[s].eta_d for s in range(S)
        ]
        if min(e_new) < -1e-12 or not _fill_ordered(widths, e_new):
            continue
        best = max(best, sum((lam - bids.g[s]) * d[s] for s in range(S)))

    p_axes = [
        np.linspace(
            0,
            min(seg.p_rating, (widths[s] - state.e_seg[s]) / seg.eta_p),
            n,
        )
        for s, seg in enumerate(spec.segments)
    ]
    for p in itertools.product(*p_axes):
        if sum(x / seg.p_rating for x, seg in zip(p, spec.segments)) > 1 + 1e-12:
            continue
        e_new = [
            state.e_seg[s] + p[s] * spec.segments[s].eta_p for s in range(S)
        ]
        if max(e - w for e, w in zip(e_new, widths)) > 1e-12:
            continue
        if not _fill_ordered(widths, e_new):
            continue
        best = max(best, sum((bids.b[s] - lam) * p[s] for s in range(S)))
    return best


def min_system_objective(gens, base, spec, state, bids, n=4001, wind_available=0.0):
    """Min thermal-plus-bid cost over gridded storage actions.

    The competitive clearing should match this social optimum: thermal cost
    is convex and the bid cost along each storage path is convex, so the
    equilibrium and the optimum coincide up to the action grid.
    """
    from socmarket.gridsim import SupplyCurve

    curve = SupplyCurve(gens)

    def thermal(load):
        if load < curve.load_min - 1e-9:
            if curve.load_min - load > wind_available + 1e-9:
                return np.inf
            load = curve.load_min
        if load > curve.load_max + 1e-9:
            return np.inf
        return float(curve.cost_at(load))

    best = thermal(base)
    d_idx, d_takes = _drain_walk(spec, state)
    cums = np.concatenate([[0.0], np.cumsum(d_takes)]) if d_takes else np.zeros(1)
    for x in np.unique(np.concatenate([np.linspace(0, cums[-1], n), cums])):
        rem, cost = x, 0.0
        for s, t in zip(d_idx, d_takes):
            take = min(rem, t)
            cost += bids.g[s] * take
            rem -= take
        best = min(best, thermal(base - x) + cost)
    p_idx, p_takes = _fill_walk(spec, state)
    cums = np.concatenate([[0.0], np.cumsum(p_takes)]) if p_takes else np.zeros(1)
    for y in np.unique(np.concatenate([np.linspace(0, cums[-1], n), cums])):
        rem, gain = y, 0.0
        for s, t in zip(p_idx, p_takes):
            take = min(rem, t)
            gain += bids.b[s] * take
            rem -= take
        best = min(best, thermal(base + y) - gain)
    return best


def _slice_move(spec, e_from, e_to):
    """Per-segment dispatch for a canonical-state move, with budget use."""
    edges = [spec.e_min] + [s.e_end for s in spec.segments]
    p = [0.0] * spec.n_segments
    d = [0.0] * spec.n_segments
    cost = budget = 0.0
    for s, seg in enumerate(spec.segments):
        a = min(max(e_from, edges[s]), edges[s + 1])
        b = min(max(e_to, edges[s]), edges[s + 1])
        if a > b:
            d[s] = seg.eta_d * (a - b)
            cost += seg.cost * d[s]
            budget += d[s] / seg.d_rating
        elif b > a:
            p[s] = (b - a) / seg.eta_p
            budget += p[s] / seg.p_rating
    return p, d, cost, budget


def enumerate_storage_trajectories(
    gens, net_loads, winds, spec, grid_n, mesh_n=4001
):
    """Min thermal-plus-discharge cost over all gridded SoC trajectories.

    Thermal stage costs come from the exhaustive allocation mesh, so the
    whole route is independent of the production dispatch code. Starts and
    no-load are not included. Infeasible hours propagate as inf.
    """
    T = len(net_loads)
    grid = np.linspace(spec.e_min, spec.e_max, grid_n)
    n = len(grid)
    g_min = sum(g.g_min for g in gens)
    g_max = sum(g.g_max for g in gens)

    def thermal(load, wind):
        if load < g_min - 1e-9:
            if g_min - load > wind + 1e-9:
                return np.inf
            load = g_min
        if load > g_max + 1e-9:
            return np.inf
        return mesh_thermal_cost(gens, load, n=mesh_n)

    stages = []
    for t in range(T):
        r = np.full((n, n), np.inf)
        for i in range(n):
            for j in range(n):
                p, d, cost, budget = _slice_move(spec, grid[i], grid[j])
                if budget > 1 + 1e-9:
                    continue
                load = net_loads[t] - sum(d) + sum(p)
                r[i, j] = thermal(load, winds[t]) + cost
        stages.append(r)

    i0 = 0  # empty start
    acc = stages[0][i0]
    for t in range(1, T):
        acc = acc[..., None] + stages[t]
    return float(acc.min())
