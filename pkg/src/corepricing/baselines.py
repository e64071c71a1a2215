"""VCG and GSP mechanisms used as comparison points."""
from __future__ import annotations

from fractions import Fraction

from corepricing.model import AuctionOutcome
from corepricing.money import Money
from corepricing.oracles import (
    CountingOracle,
    Oracle,
    SlateInstance,
    SlateOracle,
    make_outcome,
    zero_truncation,
)


def _vcg_parts(oracle: Oracle):
    zero = zero_truncation(oracle)
    base = oracle.solve(zero)
    utilities = {}
    for i in oracle.bidders:
        # Truncating bidder i by its top value zeroes all of its bids,
        # which removes it from the auction.
        without = dict(zero)
        without[i] = oracle.top_value(i)
        utilities[i] = base.max_welfare - oracle.solve(without).max_welfare
    return base, utilities


def vcg_utilities(oracle: Oracle) -> dict[int, Money]:
    """VCG utilities ``w(N) - w(N minus i)`` using n + 1 queries."""
    return _vcg_parts(oracle)[1]


def vcg(oracle: Oracle) -> AuctionOutcome:
    counted = CountingOracle(oracle)
    base, utilities = _vcg_parts(counted)
    payments = {i: base.values[i] - utilities[i] for i in base.winners}
    return make_outcome("vcg", base, payments, counted.calls, utilities=utilities)


def _gsp_outcome(
    mechanism: str, instance: SlateInstance, chosen: list[int], calls: int
) -> AuctionOutcome:
    """Next-score pricing of the slate ``chosen`` (ad indices).

    Ads are ranked by score, ties by index. Each pays the score of the ad
    ranked below it; the last pays the best score among ads of advertisers
    left out of the slate that would fit in its place, or nothing. The
    per-click price is capped at the ad's own bid.
    """
    ads = instance.ads
    order = sorted(chosen, key=lambda k: (-ads[k].score, k))
    prices = [ads[k].score for k in order[1:]]
    if order:
        last = ads[order[-1]]
        used = sum(ads[k].lines for k in order)
        room = instance.max_lines - (used - last.lines)
        shown = {ads[k].advertiser for k in order}
        runner_up = [
            ad.score for ad in ads if ad.advertiser not in shown and ad.lines <= room
        ]
        prices.append(max(runner_up, default=0))

    allocation, values, payments, cpc = {}, {}, {}, {}
    for k, price in zip(order, prices):
        ad = ads[k]
        allocation[ad.advertiser] = ad
        values[ad.advertiser] = ad.score
        payments[ad.advertiser] = min(price, ad.score)
        cpc[ad.advertiser] = min(Fraction(price) / ad.pclick, Fraction(ad.bid))
    return AuctionOutcome(
        mechanism=mechanism,
        allocation=allocation,
        values=values,
        payments=payments,
        cpc=cpc,
        oracle_calls=calls,
        extra={"ordering": [ads[k].advertiser for k in order]},
    )


def gsp_optimal(instance: SlateInstance, oracle: Oracle | None = None) -> AuctionOutcome:
    """GSP pricing on the welfare-optimal slate (one oracle query)."""
    counted = CountingOracle(oracle or SlateOracle(instance))
    result = counted.solve(zero_truncation(counted))
    index = {ad.key: k for k, ad in enumerate(instance.ads)}
    chosen = [index[ad.key] for ad in result.witness.values()]
    return _gsp_outcome("gsp-opt", instance, chosen, counted.calls)


def gsp_greedy(instance: SlateInstance) -> AuctionOutcome:
    """GSP pricing on a slate filled greedily by score, without an oracle."""
    ads = instance.ads
    chosen: list[int] = []
    shown: set[int] = set()
    lines = 0
    for k in sorted(range(len(ads)), key=lambda k: (-ads[k].score, k)):
        ad = ads[k]
        if len(chosen) >= instance.max_ads:
            break
        if ad.score <= 0 or ad.advertiser in shown:
            continue
        if lines + ad.lines > instance.max_lines:
            continue
        chosen.append(k)
        shown.add(ad.advertiser)
        lines += ad.lines
    return _gsp_outcome("gsp-greedy", instance, chosen, 0)
