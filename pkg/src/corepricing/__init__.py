"""Core-selecting payment computation for combinatorial and rich-ad auctions."""

from corepricing.money import MICRO, format_micro, to_micro
from corepricing.model import (
    AuctionOutcome,
    Valuation,
    ValuationProfile,
    truncate,
    value_of,
    welfare,
)
from corepricing.oracles import (
    Ad,
    CountingOracle,
    ExactOracle,
    OracleResult,
    SlateInstance,
    SlateOracle,
    solve_exact,
    solve_slate,
)
from corepricing.pricing import (
    DirectionPolicy,
    core_search,
    is_in_core,
    mbcc,
    reconstruct_outcome,
    vcg_pursuit,
    water_fill,
)
from corepricing.baselines import gsp_greedy, gsp_optimal, vcg

__all__ = [
    "MICRO",
    "Ad",
    "AuctionOutcome",
    "CountingOracle",
    "DirectionPolicy",
    "ExactOracle",
    "OracleResult",
    "SlateInstance",
    "SlateOracle",
    "Valuation",
    "ValuationProfile",
    "core_search",
    "format_micro",
    "gsp_greedy",
    "gsp_optimal",
    "is_in_core",
    "mbcc",
    "reconstruct_outcome",
    "solve_exact",
    "solve_slate",
    "to_micro",
    "truncate",
    "value_of",
    "vcg",
    "vcg_pursuit",
    "water_fill",
    "welfare",
]
