"""SoC-segment storage bidding, market clearing, and dispatch benchmarks."""

from .benchmark import (
    MultiPeriodResult,
    Schedule,
    brute_force_oracle,
    economic_dispatch_multi,
    multi_period_dispatch,
)
from .bidding import BidCurve, SamplingPlan, enforce_monotone, make_bids
from .clearing import (
    ClearingResult,
    DaySimulation,
    clear_priceinfluencer,
    clear_pricetaker,
    simulate_realtime_day,
)
from .gridsim import (
    CommitmentSchedule,
    GeneratorSpec,
    ScenarioData,
    SupplyCurve,
    check_commitment,
    required_reserve,
    thermal_dispatch,
    unit_commitment,
)
from .storage import (
    Dispatch,
    SegmentSpec,
    StorageSpec,
    StorageState,
    apply_dispatch,
    feasible_envelope,
    linear_spec,
    project_dispatch,
    resegment,
    rescale_step,
    segment_index,
    soc_total,
    split_charge,
    split_discharge,
    state_from_total,
    validate_spec,
    validate_state,
)
from .studies import (
    ArbitrageRun,
    ProfitReport,
    StudyConfig,
    SweepPoint,
    make_storage_variant,
    nonlinear_template,
    parse_market,
    run_influencer_sweep,
    run_priceinfluencer_study,
    run_pricetaker,
    run_pricetaker_study,
    settlement,
    soc_histogram,
)
from .synthetic import synthetic_fleet, synthetic_prices, synthetic_scenarios
from .valuation import (
    PriceSeries,
    ValueCurve,
    backward_induction,
    build_grid,
    q_lookup,
    upsample_prices,
)

__all__ = [
    "ArbitrageRun",
    "BidCurve",
    "ClearingResult",
    "CommitmentSchedule",
    "DaySimulation",
    "Dispatch",
    "GeneratorSpec",
    "MultiPeriodResult",
    "PriceSeries",
    "ProfitReport",
    "SamplingPlan",
    "ScenarioData",
    "Schedule",
    "SegmentSpec",
    "StorageSpec",
    "StorageState",
    "StudyConfig",
    "SupplyCurve",
    "SweepPoint",
    "ValueCurve",
    "apply_dispatch",
    "backward_induction",
    "brute_force_oracle",
    "build_grid",
    "check_commitment",
    "clear_priceinfluencer",
    "clear_pricetaker",
    "economic_dispatch_multi",
    "enforce_monotone",
    "feasible_envelope",
    "linear_spec",
    "make_bids",
    "make_storage_variant",
    "multi_period_dispatch",
    "nonlinear_template",
    "parse_market",
    "project_dispatch",
    "q_lookup",
    "required_reserve",
    "resegment",
    "rescale_step",
    "run_influencer_sweep",
    "run_priceinfluencer_study",
    "run_pricetaker",
    "run_pricetaker_study",
    "segment_index",
    "settlement",
    "simulate_realtime_day",
    "soc_histogram",
    "soc_total",
    "split_charge",
    "split_discharge",
    "state_from_total",
    "synthetic_fleet",
    "synthetic_prices",
    "synthetic_scenarios",
    "thermal_dispatch",
    "unit_commitment",
    "upsample_prices",
    "validate_spec",
    "validate_state",
]

__version__ = "0.1.0"
