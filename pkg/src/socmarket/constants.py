"""Shared numeric tolerances and defaults.

Every comparison tolerance used across the package lives here so that tests
and callers agree on what "equal" means for each physical quantity.
"""

E_TOL = 1e-9  # MWh, slack for SoC bounds, fill-order, and energy conservation
BALANCE_TOL = 1e-6  # MW, max admissible power-balance residual
PRICE_TOL = 1e-6  # $/MWh, clearing-price bisection interval width
BID_GAP = 0.01  # $/MWh, enforced spacing between adjacent segment bids

DEFAULT_POINTS_PER_MWH = 1000  # SoC grid density; 1 MWh device -> 1001 points
DEFAULT_SOC_SAMPLES = 5  # per-segment SoC samples when averaging bid values
