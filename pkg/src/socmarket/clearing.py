"""Single-period market clearing against storage bid curves.

Strictly decreasing bids let the market clear without integer variables:
discharge drains profitable segments top-down, charge fills bottom-up, and
the fill-order physics guarantees the two sides never both have quantity at
a price inside the bid-ask spread. The price-influencer variant finds the
price where the thermal supply curve crosses residual demand, treating the
storage response as a monotone step function of price.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bidding import BidCurve
from .constants import BALANCE_TOL, E_TOL, PRICE_TOL
from .gridsim import CommitmentSchedule, ScenarioData, SupplyCurve
from .storage import Dispatch, StorageSpec, StorageState, apply_dispatch


@dataclass(frozen=True)
class ClearingResult:
    dispatch: Dispatch
    price: float  # $/MWh
    objective: float  # storage bid surplus at the cleared price ($)
    thermal: tuple[float, ...] | None = None  # per-generator MW
    thermal_cost: float | None = None  # $/h including no-load
    wind_used: float | None = None  # MW after any curtailment


def _check_bids(spec: StorageSpec, bids: BidCurve) -> None:
    if bids.n_segments != spec.n_segments:
        raise ValueError(
            f"bids cover {bids.n_segments} segments, spec has {spec.n_segments}"
        )
    edges = (spec.e_min,) + tuple(s.e_end for s in spec.segments)
    if any(abs(a - b) > 1e-9 for a, b in zip(edges, bids.e_edges)):
        raise ValueError("bid segment boundaries do not match the spec")
    g, b = np.array(bids.g), np.array(bids.b)
    if len(g) > 1 and (np.diff(g).max() >= 0 or np.diff(b).max() >= 0):
        raise ValueError(
            "bids must be strictly decreasing in SoC; run enforce_monotone"
        )


def _greedy_discharge(spec, state, bids, lam):
    d = [0.0] * spec.n_segments
    budget = 1.0
    for s in reversed(range(spec.n_segments)):
        e = state.e_seg[s]
        if e <= E_TOL:
            continue
        if not (bids.g[s] < lam) or budget <= 1e-15:
            break
        seg = spec.segments[s]
        take = min(e * seg.eta_d, seg.d_rating * budget)
        d[s] = take
        budget -= take / seg.d_rating
        if take < e * seg.eta_d - E_TOL:
            break  # segment not emptied, nothing below may move
    obj = sum((lam - bids.g[s]) * d[s] for s in range(spec.n_segments))
    return d, obj


def _greedy_charge(spec, state, bids, lam):
    p = [0.0] * spec.n_segments
    budget = 1.0
    lo = spec.e_min
    for s in range(spec.n_segments):
        seg = spec.segments[s]
        head = (seg.e_end - lo) - state.e_seg[s]
        lo = seg.e_end
        if head <= E_TOL:
            continue
        if not (bids.b[s] > lam) or budget <= 1e-15:
            break
        take = min(head / seg.eta_p, seg.p_rating * budget)
        p[s] = take
        budget -= take / seg.p_rating
        if take * seg.eta_p < head - E_TOL:
            break  # segment not filled, nothing above may move
    obj = sum((bids.b[s] - lam) * p[s] for s in range(spec.n_segments))
    return p, obj


def clear_pricetaker(
    spec: StorageSpec, state: StorageState, bids: BidCurve, lam: float
) -> ClearingResult:
    """Storage dispatch maximizing bid surplus at an exogenous price.

    Discharges every segment bidding under the price at the maximal feasible
    rate from the top of the SoC down, or charges every segment bidding over
    the price from the bottom up, whichever surplus is larger. A segment
    whose bid equals the price is dispatched at zero.
    """
    _check_bids(spec, bids)
    zeros = (0.0,) * spec.n_segments
    d, obj_d = _greedy_discharge(spec, state, bids, lam)
    p, obj_p = _greedy_charge(spec, state, bids, lam)
    if obj_d >= obj_p and obj_d > 0:
        dispatch = Dispatch(p_seg=zeros, d_seg=tuple(d))
        return ClearingResult(dispatch, lam, obj_d)
    if obj_p > 0:
        dispatch = Dispatch(p_seg=tuple(p), d_seg=zeros)
        return ClearingResult(dispatch, lam, obj_p)
    return ClearingResult(Dispatch(p_seg=zeros, d_seg=zeros), lam, 0.0)


def _net(result: ClearingResult) -> float:
    return result.dispatch.d_total - result.dispatch.p_total


def _surplus(bids, dispatch, lam) -> float:
    d_part = sum(
        (lam - g) * d for g, d in zip(bids.g, dispatch.d_seg)
    )
    p_part = sum(
        (b - lam) * p for b, p in zip(bids.b, dispatch.p_seg)
    )
    return d_part + p_part


def clear_priceinfluencer(
    fleet_online,
    demand_net_wind: float,
    spec: StorageSpec | None,
    state: StorageState | None,
    bids: BidCurve | None,
    wind_available: float = 0.0,
) -> ClearingResult:
    """Joint storage and thermal clearing where storage moves the price.

    Finds the price at which the thermal marginal-cost curve meets demand
    net of wind and of the storage response, by bisection: the storage net
    output is a non-decreasing step function of price, so the imbalance
    changes sign exactly once. If the crossing lands on a bid price, the
    marginal storage segment clears partially to close the balance, moving
    as little energy as possible. Wind above what the balance needs is
    curtailed and sets the price to zero; pass spec=None for no storage.
    """
    curve = SupplyCurve(fleet_online)
    base = float(demand_net_wind)

    if spec is None:
        zero = Dispatch(p_seg=(), d_seg=())
        g, lam, cost = _thermal(curve, base, wind_available)
        return ClearingResult(
            zero, lam, 0.0, thermal=g, thermal_cost=cost,
            wind_used=wind_available - max(0.0, curve.load_min - base),
        )
    _check_bids(spec, bids)

    lo = min(float(curve._prices[0]), min(bids.b), 0.0) - 1.0
    hi = max(float(curve._prices[-1]), max(bids.g)) + 1.0

    def response(lam):
        return clear_pricetaker(spec, state, bids, lam)

    # feasibility at the extremes
    n_up = _net(response(hi))
    n_dn = _net(response(lo))
    if base - n_up > curve.load_max + BALANCE_TOL:
        raise ValueError(
            f"net load {base} MW minus max storage discharge {n_up} MW "
            f"exceeds online capacity {curve.load_max} MW"
        )
    if base - n_dn < curve.load_min - wind_available - BALANCE_TOL:
        raise ValueError(
            f"net load {base} MW plus max storage charge {-n_dn} MW stays "
            f"below minimum generation {curve.load_min} MW even with "
            f"{wind_available} MW of wind curtailed"
        )

    def imbalance(lam):
        load = base - _net(response(lam))
        if load > curve.load_max + BALANCE_TOL:
            return 1e18
        if load < curve.load_min - BALANCE_TOL:
            if curve.load_min - load <= wind_available + BALANCE_TOL:
                return 0.0 - lam
            return -1e18
        return float(curve.price_at(load)) - lam

    while hi - lo > PRICE_TOL:
        mid = 0.5 * (lo + hi)
        if imbalance(mid) > 0:
            lo = mid
        else:
            hi = mid

    res_lo, res_hi = response(lo), response(hi)
    if abs(_net(res_lo) - _net(res_hi)) <= 1e-12:
        final = res_hi.dispatch
        lam_star = None  # resolved from the thermal curve below
    else:
        # the crossing sits on a bid price: clear the marginal segment
        # partially, starting from the tie dispatch (zero at that segment)
        cands = [
            x for x in set(bids.g) | set(bids.b)
            if lo - 10 * PRICE_TOL <= x <= hi + 10 * PRICE_TOL
        ]
        if cands:
            mid = 0.5 * (lo + hi)
            lam_star = min(cands, key=lambda x: abs(x - mid))
        else:
            lam_star = lo if abs(imbalance(lo)) <= abs(imbalance(hi)) else hi
        r0 = response(lam_star)
        r_minus = response(lam_star - 2 * PRICE_TOL)
        r_plus = response(lam_star + 2 * PRICE_TOL)
        n0 = _net(r0)
        lo_load, hi_load = curve.load_range_at(lam_star)
        n_floor = base - hi_load
        n_ceil = base - lo_load
        if lam_star <= PRICE_TOL:
            n_ceil = max(n_ceil, base - (curve.load_min - wind_available))
        target = min(max(n0, n_floor), n_ceil)
        target = min(max(target, _net(r_minus)), _net(r_plus))
        final = _shift_net(r0.dispatch, r_minus.dispatch, r_plus.dispatch,
                           target - n0)

    n_star = final.d_total - final.p_total
    raw_load = base - n_star
    curtail = max(0.0, curve.load_min - raw_load)
    load = raw_load + curtail
    if lam_star is None:
        lam_star = 0.0 if curtail > BALANCE_TOL else float(curve.price_at(load))
    g, _ = curve.allocate(load)
    return ClearingResult(
        dispatch=final,
        price=lam_star,
        objective=_surplus(bids, final, lam_star),
        thermal=g,
        thermal_cost=float(curve.cost_at(load)),
        wind_used=wind_available - curtail,
    )


def _thermal(curve, base, wind_available):
    load = base
    lam = None
    if load < curve.load_min - BALANCE_TOL:
        if curve.load_min - load > wind_available + BALANCE_TOL:
            raise ValueError(
                f"net load {load} MW below minimum generation "
                f"{curve.load_min} MW with only {wind_available} MW curtailable"
            )
        load = curve.load_min
        lam = 0.0
    if load > curve.load_max + BALANCE_TOL:
        raise ValueError(
            f"net load {load} MW exceeds online capacity {curve.load_max} MW"
        )
    g, lam_alloc = curve.allocate(load)
    return g, lam if lam is not None else lam_alloc, float(curve.cost_at(load))


def _shift_net(base_disp, minus_disp, plus_disp, delta):
    """Move net output by delta toward the adjacent clearing's dispatch.

    Positive delta raises net output, first by trimming charge back toward
    the higher-price dispatch, then by adding its extra discharge; negative
    delta mirrors this downward. The adjacent dispatches bound the move.
    """
    p = list(base_disp.p_seg)
    d = list(base_disp.d_seg)
    if delta > 0:
        for s in reversed(range(len(p))):  # cut marginal (highest) charge first
            cut = min(delta, p[s] - plus_disp.p_seg[s])
            if cut > 0:
                p[s] -= cut
                delta -= cut
        for s in reversed(range(len(d))):
            add = min(delta, plus_disp.d_seg[s] - d[s])
            if add > 0:
                d[s] += add
                delta -= add
    else:
        rem = -delta
        for s in range(len(d)):  # cut marginal (lowest) discharge first
            cut = min(rem, d[s] - minus_disp.d_seg[s])
            if cut > 0:
                d[s] -= cut
                rem -= cut
        for s in range(len(p)):
            add = min(rem, minus_disp.p_seg[s] - p[s])
            if add > 0:
                p[s] += add
                rem -= add
    return Dispatch(p_seg=tuple(p), d_seg=tuple(d))


@dataclass(frozen=True)
class DaySimulation:
    results: tuple[ClearingResult, ...]
    states: tuple[StorageState, ...]  # length n_hours + 1
    prices: tuple[float, ...]  # $/MWh per hour
    system_cost: float  # thermal, startup, and physical discharge cost ($)


def simulate_realtime_day(
    fleet,
    commitment: CommitmentSchedule,
    scenario: ScenarioData,
    spec: StorageSpec | None,
    bids_by_hour,
    state: StorageState | None = None,
) -> DaySimulation:
    """Sequential per-hour price-influencer clearings over one day.

    The storage state carries from hour to hour through apply_dispatch;
    system cost accumulates thermal dispatch cost (including no-load),
    commitment startup costs, and the physical discharge cost of storage.
    """
    fleet = tuple(fleet)
    T = scenario.n_hours
    if spec is not None and len(bids_by_hour) != T:
        raise ValueError(f"need {T} hourly bid curves, got {len(bids_by_hour)}")
    if spec is not None and state is None:
        from .storage import state_from_total

        state = state_from_total(spec, spec.e_min)

    results = []
    states = [state]
    prices = []
    cost = sum(
        fleet[i].c_start * sum(commitment.y[i])
        for i in range(len(fleet))
    )
    for t in range(T):
        online = [fleet[i] for i in commitment.online(t)]
        res = clear_priceinfluencer(
            online,
            scenario.demand[t] - scenario.wind[t],
            spec,
            state,
            bids_by_hour[t] if spec is not None else None,
            wind_available=scenario.wind[t],
        )
        results.append(res)
        prices.append(res.price)
        cost += res.thermal_cost
        if spec is not None:
            cost += sum(
                seg.cost * dd for seg, dd in zip(spec.segments, res.dispatch.d_seg)
            )
            state = apply_dispatch(spec, state, res.dispatch)
        states.append(state)
    return DaySimulation(
        results=tuple(results),
        states=tuple(states),
        prices=tuple(prices),
        system_cost=cost,
    )
