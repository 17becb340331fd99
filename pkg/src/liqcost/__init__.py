"""Liquidity cost of delta hedging against a limit-order-book supply curve."""

__version__ = "0.1.0"

from .bs_core import MarketParams, OptionSpec
from .cost_dist import CostDistribution, DistGrid, cost_distribution
from .hedge_sim import DeltaThreshold, FixedInterval, SimConfig, SimResult, estimate_unit_cost_mc
from .supply_curve import BookSnapshot, SlopeFit, fit_alpha, load_book_csv, supply_price
from .unit_cost import QuadratureGrid, UnitCostResult, expected_liquidity_cost, unit_liquidity_cost

__all__ = [
    "BookSnapshot",
    "CostDistribution",
    "DeltaThreshold",
    "DistGrid",
    "FixedInterval",
    "MarketParams",
    "OptionSpec",
    "QuadratureGrid",
    "SimConfig",
    "SimResult",
    "SlopeFit",
    "UnitCostResult",
    "__version__",
    "cost_distribution",
    "estimate_unit_cost_mc",
    "expected_liquidity_cost",
    "fit_alpha",
    "load_book_csv",
    "supply_price",
    "unit_liquidity_cost",
]
