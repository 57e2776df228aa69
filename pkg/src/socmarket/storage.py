"""SoC-segment storage model: specs, states, and one-step dispatch physics.

A storage device is described by contiguous state-of-charge segments. Each
segment carries its own discharge cost, charge/discharge ratings, and one-way
efficiencies. Stored energy obeys a fill order: a segment may hold energy only
if every segment below it is full. Discharging therefore drains the topmost
occupied segment first and charging fills the lowest unfilled segment first,
which makes the total SoC a sufficient description of any reachable state.

Ratings are stored pre-standardized to the dispatch step (MWh per step); file
readers convert MW ratings using the step length recorded in the file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import E_TOL


@dataclass(frozen=True)
class SegmentSpec:
    e_end: float  # upper SoC breakpoint of the segment (MWh)
    cost: float  # marginal discharge cost ($/MWh delivered)
    d_rating: float  # max discharge per step (MWh delivered)
    p_rating: float  # max charge per step (MWh drawn)
    eta_d: float  # one-way discharge efficiency, (0, 1]
    eta_p: float  # one-way charge efficiency, (0, 1]


@dataclass(frozen=True)
class StorageSpec:
    e_min: float  # lower SoC limit (MWh)
    segments: tuple[SegmentSpec, ...]  # ascending by e_end
    step_minutes: float = 60.0  # step length the ratings are standardized to

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    @property
    def e_max(self) -> float:
        return self.segments[-1].e_end

    @property
    def widths(self) -> tuple[float, ...]:
        lo = self.e_min
        out = []
        for seg in self.segments:
            out.append(seg.e_end - lo)
            lo = seg.e_end
        return tuple(out)


@dataclass(frozen=True)
class StorageState:
    e_seg: tuple[float, ...]  # stored energy per segment (MWh)


@dataclass(frozen=True)
class Dispatch:
    """One-step dispatch as explicit per-segment quantities (MWh)."""

    p_seg: tuple[float, ...]  # energy drawn from the grid, per segment
    d_seg: tuple[float, ...]  # energy delivered to the grid, per segment

    @property
    def p_total(self) -> float:
        return sum(self.p_seg)

    @property
    def d_total(self) -> float:
        return sum(self.d_seg)


def validate_spec(spec: StorageSpec) -> None:
    """Raise ValueError on a malformed segment ladder."""
    if not spec.segments:
        raise ValueError("storage spec has no segments")
    if not math.isfinite(spec.e_min):
        raise ValueError(f"e_min must be finite, got {spec.e_min}")
    if spec.step_minutes <= 0:
        raise ValueError(f"step_minutes must be positive, got {spec.step_minutes}")
    prev = spec.e_min
    for s, seg in enumerate(spec.segments, start=1):
        if not seg.e_end > prev:
            raise ValueError(
                f"segment {s}: breakpoint {seg.e_end} not above previous {prev}"
            )
        if seg.d_rating <= 0 or seg.p_rating <= 0:
            raise ValueError(
                f"segment {s}: ratings must be positive, got "
                f"d={seg.d_rating}, p={seg.p_rating}"
            )
        if not 0.0 < seg.eta_d <= 1.0 or not 0.0 < seg.eta_p <= 1.0:
            raise ValueError(
                f"segment {s}: efficiencies must lie in (0, 1], got "
                f"eta_d={seg.eta_d}, eta_p={seg.eta_p}"
            )
        if not math.isfinite(seg.cost) or seg.cost < 0:
            raise ValueError(f"segment {s}: cost must be finite and >= 0, got {seg.cost}")
        prev = seg.e_end


def segment_index(spec: StorageSpec, e: float) -> int:
    """Index of the segment whose half-open range (E_{s-1}, E_s] covers e.

    The lower limit e_min maps to the first segment.
    """
    if e < spec.e_min - E_TOL or e > spec.e_max + E_TOL:
        raise ValueError(
            f"SoC {e} outside [{spec.e_min}, {spec.e_max}]"
        )
    for i, seg in enumerate(spec.segments):
        if e <= seg.e_end + E_TOL:
            return i
    return spec.n_segments - 1


def soc_total(spec: StorageSpec, state: StorageState) -> float:
    return spec.e_min + sum(state.e_seg)


def state_from_total(spec: StorageSpec, e_total: float) -> StorageState:
    """Canonical fill-ordered state holding e_total MWh overall."""
    if e_total < spec.e_min - E_TOL or e_total > spec.e_max + E_TOL:
        raise ValueError(
            f"total SoC {e_total} outside [{spec.e_min}, {spec.e_max}]"
        )
    rem = min(max(e_total - spec.e_min, 0.0), spec.e_max - spec.e_min)
    e_seg = []
    for w in spec.widths:
        fill = min(w, rem)
        e_seg.append(fill)
        rem -= fill
    return StorageState(e_seg=tuple(e_seg))


def validate_state(spec: StorageSpec, state: StorageState) -> None:
    """Check per-segment bounds and the fill-order rule within E_TOL."""
    if len(state.e_seg) != spec.n_segments:
        raise ValueError(
            f"state has {len(state.e_seg)} segments, spec has {spec.n_segments}"
        )
    widths = spec.widths
    for s, (e, w) in enumerate(zip(state.e_seg, widths), start=1):
        if e < -E_TOL or e > w + E_TOL:
            raise ValueError(f"segment {s}: energy {e} outside [0, {w}]")
    for s in range(1, spec.n_segments):
        if state.e_seg[s] > E_TOL and state.e_seg[s - 1] < widths[s - 1] - E_TOL:
            raise ValueError(
                f"fill order violated: segment {s + 1} holds {state.e_seg[s]} "
                f"while segment {s} is not full ({state.e_seg[s - 1]} of {widths[s - 1]})"
            )


def feasible_envelope(spec: StorageSpec, state: StorageState) -> tuple[float, float]:
    """Max one-step (charge, discharge) totals in MWh from this state.

    Discharge drains segments top-down, charge fills bottom-up; both walks
    stop when the rating mixture budget sum(x_s / rating_s) reaches 1.
    """
    widths = spec.widths
    # discharge: top-down
    budget = 1.0
    d_max = 0.0
    for s in range(spec.n_segments - 1, -1, -1):
        if budget <= E_TOL:
            break
        seg = spec.segments[s]
        avail = state.e_seg[s] * seg.eta_d  # deliverable energy in segment s
        take = min(avail, budget * seg.d_rating)
        d_max += take
        budget -= take / seg.d_rating
        if take < avail - E_TOL:
            break  # rating budget exhausted mid-segment
    # charge: bottom-up
    budget = 1.0
    p_max = 0.0
    for s in range(spec.n_segments):
        if budget <= E_TOL:
            break
        seg = spec.segments[s]
        headroom = widths[s] - state.e_seg[s]
        need = headroom / seg.eta_p  # grid energy to fill segment s
        take = min(need, budget * seg.p_rating)
        p_max += take
        budget -= take / seg.p_rating
        if take < need - E_TOL:
            break
    return p_max, d_max


def split_discharge(spec: StorageSpec, state: StorageState, d_total: float) -> Dispatch:
    """Per-segment split of a total discharge along the forced top-down path."""
    if d_total < -E_TOL:
        raise ValueError(f"discharge total must be >= 0, got {d_total}")
    rem = max(d_total, 0.0)
    d_seg = [0.0] * spec.n_segments
    budget = 1.0
    for s in range(spec.n_segments - 1, -1, -1):
        if rem <= E_TOL or budget <= E_TOL:
            break
        seg = spec.segments[s]
        take = min(state.e_seg[s] * seg.eta_d, rem, budget * seg.d_rating)
        d_seg[s] = take
        rem -= take
        budget -= take / seg.d_rating
    if rem > E_TOL:
        raise ValueError(
            f"discharge {d_total} exceeds feasible envelope (short by {rem})"
        )
    return Dispatch(p_seg=(0.0,) * spec.n_segments, d_seg=tuple(d_seg))


def split_charge(spec: StorageSpec, state: StorageState, p_total: float) -> Dispatch:
    """Per-segment split of a total charge along the forced bottom-up path."""
    if p_total < -E_TOL:
        raise ValueError(f"charge total must be >= 0, got {p_total}")
    rem = max(p_total, 0.0)
    widths = spec.widths
    p_seg = [0.0] * spec.n_segments
    budget = 1.0
    for s in range(spec.n_segments):
        if rem <= E_TOL or budget <= E_TOL:
            break
        seg = spec.segments[s]
        need = (widths[s] - state.e_seg[s]) / seg.eta_p
        take = min(need, rem, budget * seg.p_rating)
        p_seg[s] = take
        rem -= take
        budget -= take / seg.p_rating
    if rem > E_TOL:
        raise ValueError(
            f"charge {p_total} exceeds feasible envelope (short by {rem})"
        )
    return Dispatch(p_seg=tuple(p_seg), d_seg=(0.0,) * spec.n_segments)


def apply_dispatch(spec: StorageSpec, state: StorageState, dispatch: Dispatch) -> StorageState:
    """Advance the state by one dispatch step, rejecting infeasible requests.

    Checks non-negativity, charge/discharge mutual exclusion, the rating
    mixture constraints, per-segment energy limits, and that the resulting
    state still obeys the fill order.
    """
    n = spec.n_segments
    if len(dispatch.p_seg) != n or len(dispatch.d_seg) != n:
        raise ValueError(
            f"dispatch has {len(dispatch.p_seg)}/{len(dispatch.d_seg)} segments, "
            f"spec has {n}"
        )
    for s in range(n):
        if dispatch.p_seg[s] < -E_TOL or dispatch.d_seg[s] < -E_TOL:
            raise ValueError(
                f"segment {s + 1}: negative dispatch "
                f"(p={dispatch.p_seg[s]}, d={dispatch.d_seg[s]})"
            )
    p_total = dispatch.p_total
    d_total = dispatch.d_total
    if p_total > E_TOL and d_total > E_TOL:
        raise ValueError(
            f"simultaneous charge ({p_total}) and discharge ({d_total})"
        )
    p_mix = sum(
        max(p, 0.0) / seg.p_rating for p, seg in zip(dispatch.p_seg, spec.segments)
    )
    d_mix = sum(
        max(d, 0.0) / seg.d_rating for d, seg in zip(dispatch.d_seg, spec.segments)
    )
    if p_mix > 1.0 + 1e-9 or d_mix > 1.0 + 1e-9:
        raise ValueError(
            f"rating mixture exceeded (charge {p_mix}, discharge {d_mix})"
        )
    widths = spec.widths
    e_next = []
    for s, seg in enumerate(spec.segments):
        p = max(dispatch.p_seg[s], 0.0)
        d = max(dispatch.d_seg[s], 0.0)
        e = state.e_seg[s] - d / seg.eta_d + p * seg.eta_p
        if e < -E_TOL or e > widths[s] + E_TOL:
            raise ValueError(
                f"segment {s + 1}: dispatch drives energy to {e}, "
                f"outside [0, {widths[s]}]"
            )
        # snap float dust so long sequences do not drift past the bounds
        if e < E_TOL:
            e = 0.0
        elif e > widths[s] - E_TOL:
            e = min(e, widths[s])
        e_next.append(e)
    result = StorageState(e_seg=tuple(e_next))
    validate_state(spec, result)
    return result


def project_dispatch(
    spec: StorageSpec, state: StorageState, p_hat: float, d_hat: float
) -> Dispatch:
    """Nearest feasible dispatch to an instruction, in least-squares sense.

    Minimizes (p - p_hat)^2 + (d - d_hat)^2 over the one-step feasible set.
    Mutual exclusion makes the set a union of two intervals, so the optimum
    is the better of the two clamped one-sided candidates; ties prefer the
    smaller total energy moved, then discharge.
    """
    if p_hat < 0 or d_hat < 0:
        raise ValueError(f"instruction must be >= 0, got p={p_hat}, d={d_hat}")
    p_max, d_max = feasible_envelope(spec, state)
    p_star = min(p_hat, p_max)
    d_star = min(d_hat, d_max)
    err_charge = (p_star - p_hat) ** 2 + d_hat**2
    err_discharge = p_hat**2 + (d_star - d_hat) ** 2
    if err_charge < err_discharge:
        return split_charge(spec, state, p_star)
    if err_discharge < err_charge:
        return split_discharge(spec, state, d_star)
    if p_star < d_star:
        return split_charge(spec, state, p_star)
    return split_discharge(spec, state, d_star)


def rescale_step(spec: StorageSpec, step_minutes: float) -> StorageSpec:
    """Restandardize per-step ratings to a different dispatch step length."""
    if step_minutes <= 0:
        raise ValueError(f"step_minutes must be positive, got {step_minutes}")
    factor = step_minutes / spec.step_minutes
    segments = tuple(
        SegmentSpec(
            e_end=seg.e_end,
            cost=seg.cost,
            d_rating=seg.d_rating * factor,
            p_rating=seg.p_rating * factor,
            eta_d=seg.eta_d,
            eta_p=seg.eta_p,
        )
        for seg in spec.segments
    )
    return StorageSpec(e_min=spec.e_min, segments=segments, step_minutes=step_minutes)


def resegment(spec: StorageSpec, n_segments: int) -> StorageSpec:
    """Equal-width view of the same device with midpoint-sampled parameters.

    This is how a market model with a different segment count represents a
    physical device: each new segment takes the cost, ratings, and
    efficiencies found at its SoC midpoint in the true spec.
    """
    if n_segments < 1:
        raise ValueError(f"need at least one segment, got {n_segments}")
    width = (spec.e_max - spec.e_min) / n_segments
    segments = []
    for j in range(1, n_segments + 1):
        mid = spec.e_min + (j - 0.5) * width
        src = spec.segments[segment_index(spec, mid)]
        segments.append(
            SegmentSpec(
                e_end=spec.e_min + j * width,
                cost=src.cost,
                d_rating=src.d_rating,
                p_rating=src.p_rating,
                eta_d=src.eta_d,
                eta_p=src.eta_p,
            )
        )
    return StorageSpec(
        e_min=spec.e_min, segments=tuple(segments), step_minutes=spec.step_minutes
    )


def linear_spec(
    capacity_mwh: float,
    rating_mwh_per_step: float,
    eta: float,
    cost: float,
    step_minutes: float = 60.0,
    e_min: float = 0.0,
) -> StorageSpec:
    """Single-segment device with one rating and symmetric efficiencies."""
    seg = SegmentSpec(
        e_end=e_min + capacity_mwh,
        cost=cost,
        d_rating=rating_mwh_per_step,
        p_rating=rating_mwh_per_step,
        eta_d=eta,
        eta_p=eta,
    )
    spec = StorageSpec(e_min=e_min, segments=(seg,), step_minutes=step_minutes)
    validate_spec(spec)
    return spec
