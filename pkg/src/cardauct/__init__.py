"""Cardinal and prefix auctions: allocation, pricing and equilibrium analysis."""

from .model import (
    EPSILON, MICRO, NEG_INF, Allocation, Bid, Instance, InputError, Money,
    NoAllocationError, PricedOutcome, Valuation, format_money, is_feasible,
    parse_money, units, utility,
)
from .sigma import SigmaTable, allocate, build, find_i_star, sigma, sigma_table, sigma_table_naive

__all__ = [
    "EPSILON", "MICRO", "NEG_INF", "Allocation", "Bid", "Instance", "InputError", "Money",
    "NoAllocationError", "PricedOutcome", "Valuation", "format_money", "is_feasible",
    "parse_money", "units", "utility", "SigmaTable", "allocate", "build", "find_i_star",
    "sigma", "sigma_table", "sigma_table_naive",
]
