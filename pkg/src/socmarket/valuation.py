"""Marginal value-to-go curves by backward recursion over a price series.

For each time step t and SoC grid point e, q_t(e) is the marginal value
($/MWh) of stored energy at the end of step t under perfect price foresight.
The recursion is a five-case decision ladder comparing the step's price
against charge/discharge marginal values looked up one full rating away;
segment parameters (cost, ratings, efficiencies) are evaluated at the input
SoC (local linearization) and the terminal curve is identically zero.

Boundary semantics: a lookback below the SoC floor means discharge is
energy-limited there, so that threshold is treated as +inf (the partial
discharge case fires); a lookahead above the ceiling means charge is
headroom-limited, treated as -inf (saturated charging cannot fire). This is
what the state bounds imply for the one-step problem and it reproduces the
exact one-step optimum at both ends of the range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .storage import StorageSpec, segment_index


@dataclass(frozen=True)
class PriceSeries:
    step_minutes: float  # interval length (minutes)
    prices: np.ndarray  # lambda_t ($/MWh), one per interval

    def __post_init__(self):
        object.__setattr__(
            self, "prices", np.asarray(self.prices, dtype=np.float64)
        )
        if self.step_minutes <= 0:
            raise ValueError(f"step_minutes must be positive, got {self.step_minutes}")
        if self.prices.ndim != 1:
            raise ValueError("prices must be one-dimensional")
        if not np.all(np.isfinite(self.prices)):
            raise ValueError("prices must be finite (negatives are allowed)")

    def __len__(self) -> int:
        return len(self.prices)


@dataclass(frozen=True)
class ValueCurve:
    grid: np.ndarray  # SoC sample points over [e_min, e_max] (MWh)
    q: np.ndarray  # (T+1, len(grid)) marginal values, q[T] == 0
    step_minutes: float

    @property
    def n_steps(self) -> int:
        return self.q.shape[0] - 1


def build_grid(spec: StorageSpec, points_per_mwh: int) -> np.ndarray:
    """Uniform SoC grid spanning [e_min, e_max] inclusive.

    The spacing must resolve a single charge step: finer than the smallest
    per-segment P_s * eta_p_s, otherwise the recursion's lookahead collapses
    onto its own point.
    """
    span = spec.e_max - spec.e_min
    n = int(round(span * points_per_mwh)) + 1
    if n < 2:
        raise ValueError(
            f"{points_per_mwh} points/MWh over {span} MWh leaves no grid"
        )
    spacing = span / (n - 1)
    min_charge = min(seg.p_rating * seg.eta_p for seg in spec.segments)
    if spacing >= min_charge:
        raise ValueError(
            f"grid spacing {spacing:.6g} MWh must be finer than the smallest "
            f"charge step {min_charge:.6g} MWh; raise points_per_mwh"
        )
    return np.linspace(spec.e_min, spec.e_max, n)


def _nearest_idx(grid: np.ndarray, x) -> np.ndarray:
    """Nearest grid index with ties resolved toward the lower SoC point."""
    h = grid[1] - grid[0]
    idx = np.ceil((np.asarray(x, dtype=np.float64) - grid[0]) / h - 0.5).astype(int)
    return np.clip(idx, 0, len(grid) - 1)


def q_lookup(curve: ValueCurve, t: int, e) -> float | np.ndarray:
    """q_t at the nearest grid point to e (ties toward lower SoC)."""
    e_arr = np.asarray(e, dtype=np.float64)
    lo, hi = curve.grid[0], curve.grid[-1]
    if np.any(e_arr < lo - 1e-9) or np.any(e_arr > hi + 1e-9):
        raise ValueError(f"SoC {e} outside [{lo}, {hi}]")
    vals = curve.q[t][_nearest_idx(curve.grid, e_arr)]
    return float(vals) if np.isscalar(e) or e_arr.ndim == 0 else vals


def upsample_prices(series: PriceSeries, target_step_minutes: float) -> PriceSeries:
    """Repeat each price so the series covers the same span at a finer step."""
    ratio = series.step_minutes / target_step_minutes
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ValueError(
            f"target step {target_step_minutes} min must divide the source "
            f"step {series.step_minutes} min"
        )
    k = int(round(ratio))
    if k == 1:
        return series
    return PriceSeries(
        step_minutes=target_step_minutes, prices=np.repeat(series.prices, k)
    )


def backward_induction(
    spec: StorageSpec,
    prices: PriceSeries,
    grid: np.ndarray,
    dtype=np.float64,
) -> ValueCurve:
    """Marginal value curves q_t for t = 0..T, terminal curve all zeros.

    Case ladder per grid point e, first match wins:
      1. lam <= eta_p * q(e + P*eta_p)          -> q(e + P*eta_p)   (charge saturated)
      2. lam <= eta_p * q(e)                    -> lam / eta_p      (marginal charge)
      3. lam <= [q(e)/eta_d + c]^+              -> q(e)             (hold)
      4. lam <= [q(e - D/eta_d)/eta_d + c]^+    -> (lam - c)*eta_d  (marginal discharge)
      5. otherwise                              -> q(e - D/eta_d)   (discharge saturated)

    The [x]^+ clip on the discharge thresholds keeps cases 4-5 unreachable at
    negative prices, so discharging never happens when lam < 0.
    """
    if len(prices) == 0:
        raise ValueError("price series is empty")
    grid = np.asarray(grid, dtype=np.float64)
    n = len(grid)
    T = len(prices)

    seg_idx = np.array([segment_index(spec, e) for e in grid])
    c = np.array([spec.segments[s].cost for s in seg_idx])
    eta_d = np.array([spec.segments[s].eta_d for s in seg_idx])
    eta_p = np.array([spec.segments[s].eta_p for s in seg_idx])
    p_rat = np.array([spec.segments[s].p_rating for s in seg_idx])
    d_rat = np.array([spec.segments[s].d_rating for s in seg_idx])

    up_arg = grid + p_rat * eta_p
    dn_arg = grid - d_rat / eta_d
    h = grid[1] - grid[0]
    valid_up = up_arg <= spec.e_max + h * 1e-9
    valid_dn = dn_arg >= spec.e_min - h * 1e-9
    idx_up = _nearest_idx(grid, np.clip(up_arg, spec.e_min, spec.e_max))
    idx_dn = _nearest_idx(grid, np.clip(dn_arg, spec.e_min, spec.e_max))

    q = np.zeros((T + 1, n), dtype=dtype)
    cur = np.zeros(n, dtype=np.float64)  # recursion carried at full precision
    lam_arr = prices.prices
    for r in range(T - 1, -1, -1):
        lam = lam_arr[r]
        up = np.where(valid_up, cur[idx_up], -np.inf)
        dn = np.where(valid_dn, cur[idx_dn], np.inf)
        hold_thr = np.maximum(cur / eta_d + c, 0.0)
        full_thr = np.maximum(dn / eta_d + c, 0.0)
        cur = np.select(
            [lam <= eta_p * up, lam <= eta_p * cur, lam <= hold_thr, lam <= full_thr],
            [up, lam / eta_p, cur, (lam - c) * eta_d],
            default=dn,
        )
        q[r] = cur
    return ValueCurve(grid=grid, q=q, step_minutes=prices.step_minutes)
