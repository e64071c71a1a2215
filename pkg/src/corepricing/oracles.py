"""Winner-determination oracles.

An oracle answers one kind of query: given per-bidder utility offsets
``pi``, find a welfare-maximising allocation for the truncated bids
``max(b_i(.) - pi_i, 0)``. Two oracles are provided:

* ``ExactOracle`` searches allocations of a general XOR profile exhaustively
  (memoised over bidders x used items).
* ``SlateOracle`` solves the rich-ad slate problem (at most ``h`` ads, one per
  advertiser, at most ``m`` lines) by dynamic programming over
  (ad index, ads left, lines left).

Neither allocates anything of zero truncated value, and both break ties
deterministically so repeated queries give identical answers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Mapping, Protocol

import numpy as np

from corepricing.model import AuctionOutcome, Utilities, ValuationProfile
from corepricing.money import Money

MAX_EXACT_ITEMS = 12
MAX_EXACT_BIDDERS = 12


class CapacityError(ValueError):
    """Instance too large for an exhaustive routine."""


@dataclass(frozen=True)
class OracleResult:
    max_welfare: Money
    winners: frozenset
    witness: dict[int, Any] = field(default_factory=dict)
    values: dict[int, Money] = field(default_factory=dict)


class Oracle(Protocol):
    bidders: tuple[int, ...]

    def solve(self, truncation: Utilities) -> OracleResult: ...

    def top_value(self, bidder: int) -> Money: ...


def zero_truncation(oracle: Oracle) -> dict[int, Money]:
    return {i: 0 for i in oracle.bidders}


class CountingOracle:
    """Wraps an oracle and counts the queries made through it."""

    def __init__(self, oracle: Oracle):
        self.inner = oracle
        self.calls = 0

    @property
    def bidders(self) -> tuple[int, ...]:
        return self.inner.bidders

    def solve(self, truncation: Utilities) -> OracleResult:
        self.calls += 1
        return self.inner.solve(truncation)

    def top_value(self, bidder: int) -> Money:
        return self.inner.top_value(bidder)


# ---------------------------------------------------------------------------
# General XOR profiles


def solve_exact(profile: ValuationProfile, truncation: Utilities) -> OracleResult:
    """Optimal allocation of a truncated XOR profile.

    Among optimal allocations, returns the one whose sorted winner tuple is
    lexicographically smallest, then the one with the smallest tuple of
    chosen atomic-bid indices.
    """
    if profile.item_count > MAX_EXACT_ITEMS or len(profile) > MAX_EXACT_BIDDERS:
        raise CapacityError(
            f"exact oracle handles at most {MAX_EXACT_ITEMS} items and "
            f"{MAX_EXACT_BIDDERS} bidders"
        )
    missing = [i for i in profile.ids if i not in truncation]
    if missing:
        raise ValueError(f"truncation has no entry for bidders {missing}")

    order = sorted(profile.ids)
    options = []
    for bidder in order:
        offset = truncation[bidder]
        options.append(
            [
                (mask, value - offset, k)
                for k, (mask, value) in enumerate(profile[bidder].masks)
                if value > offset
            ]
        )
    n = len(order)
    memo: dict[tuple[int, int], tuple[int, tuple, tuple]] = {}

    # best(pos, used): optimum over bidders order[pos:] given used items;
    # the suffix keys make the lexicographic tie-break decomposable.
    def best(pos: int, used: int) -> tuple[int, tuple, tuple]:
        if pos == n:
            return (0, (), ())
        key = (pos, used)
        hit = memo.get(key)
        if hit is not None:
            return hit
        result = best(pos + 1, used)
        bidder = order[pos]
        for mask, value, k in options[pos]:
            if mask & used:
                continue
            sub_value, sub_winners, sub_entries = best(pos + 1, used | mask)
            total = sub_value + value
            if total > result[0] or (
                total == result[0]
                and ((bidder,) + sub_winners, (k,) + sub_entries) < result[1:]
            ):
                result = (total, (bidder,) + sub_winners, (k,) + sub_entries)
        memo[key] = result
        return result

    total, winners, entries = best(0, 0)
    witness = {}
    values = {}
    for bidder, k in zip(winners, entries):
        items, value = profile[bidder].entries[k]
        witness[bidder] = items
        values[bidder] = value - truncation[bidder]
    return OracleResult(total, frozenset(winners), witness, values)


class ExactOracle:
    def __init__(self, profile: ValuationProfile):
        self.profile = profile
        self.bidders = profile.ids

    def solve(self, truncation: Utilities) -> OracleResult:
        return solve_exact(self.profile, truncation)

    def top_value(self, bidder: int) -> Money:
        return self.profile[bidder].top


# ---------------------------------------------------------------------------
# Rich-ad slates


@dataclass(frozen=True)
class Ad:
    """One decoration of an advertiser's ad.

    ``bid`` is the advertiser's per-click bid in micro-units and ``pclick``
    an exact click probability; the ad's value to its advertiser is
    ``pclick * bid``, which must be a whole number of micro-units.
    """

    advertiser: int
    decoration: int
    lines: int
    bid: Money
    pclick: Fraction

    def __post_init__(self):
        pclick = Fraction(self.pclick)
        object.__setattr__(self, "pclick", pclick)
        if self.lines < 1:
            raise ValueError(f"ad {self.key} must use at least one line")
        if self.bid < 0:
            raise ValueError(f"ad {self.key} has a negative bid")
        if not 0 < pclick <= 1:
            raise ValueError(f"ad {self.key} has pclick {pclick} outside (0, 1]")
        if (pclick * self.bid).denominator != 1:
            raise ValueError(
                f"ad {self.key}: pclick*bid = {pclick * self.bid} is not a whole "
                "number of micro-units"
            )

    @property
    def key(self) -> tuple[int, int]:
        return (self.advertiser, self.decoration)

    @property
    def score(self) -> Money:
        return int(self.pclick * self.bid)


@dataclass(frozen=True)
class SlateInstance:
    """Ads grouped contiguously by advertiser, at most ``max_ads`` ads shown
    in at most ``max_lines`` lines."""

    ads: tuple[Ad, ...]
    max_ads: int
    max_lines: int

    def __post_init__(self):
        ads = tuple(self.ads)
        object.__setattr__(self, "ads", ads)
        if self.max_ads < 0 or self.max_lines < 0:
            raise ValueError("max_ads and max_lines must be non-negative")
        closed: set[int] = set()
        keys: set[tuple[int, int]] = set()
        for k, ad in enumerate(ads):
            if ad.key in keys:
                raise ValueError(f"duplicate ad {ad.key}")
            keys.add(ad.key)
            if k and ads[k - 1].advertiser != ad.advertiser:
                closed.add(ads[k - 1].advertiser)
            if ad.advertiser in closed:
                raise ValueError(
                    f"ads of advertiser {ad.advertiser} are not contiguous"
                )

    @cached_property
    def advertisers(self) -> tuple[int, ...]:
        return tuple(dict.fromkeys(ad.advertiser for ad in self.ads))

    @cached_property
    def next_group(self) -> tuple[int, ...]:
        """For each ad, the index of the first ad of the following advertiser."""
        n = len(self.ads)
        out = [n] * n
        for k in range(n - 2, -1, -1):
            if self.ads[k + 1].advertiser != self.ads[k].advertiser:
                out[k] = k + 1
            else:
                out[k] = out[k + 1]
        return tuple(out)

    @cached_property
    def scores(self) -> np.ndarray:
        return np.array([ad.score for ad in self.ads], dtype=np.int64)

    def top_score(self, advertiser: int) -> Money:
        return max((ad.score for ad in self.ads if ad.advertiser == advertiser), default=0)


def solve_slate(instance: SlateInstance, truncation: Utilities) -> OracleResult:
    """Welfare-optimal slate under per-advertiser truncated scores.

    ``best[k, a, l]`` is the optimal welfare using ads ``k..n-1`` with at
    most ``a`` ads and ``l`` lines. Ad ``k`` is either skipped or taken,
    in which case the rest of its advertiser's ads are skipped too. A tie
    between taking and skipping is resolved by taking, which selects the
    lowest-index optimal ad at every step.
    """
    missing = [a for a in instance.advertisers if a not in truncation]
    if missing:
        raise ValueError(f"truncation has no entry for advertisers {missing}")
    ads = instance.ads
    n, h, m = len(ads), instance.max_ads, instance.max_lines
    offsets = np.array([truncation[ad.advertiser] for ad in ads], dtype=np.int64)
    weights = np.maximum(instance.scores - offsets, 0) if n else np.zeros(0, np.int64)
    if int(weights.sum()) >= 2**62:
        raise CapacityError("slate scores too large for 64-bit accumulation")

    best = np.zeros((n + 1, h + 1, m + 1), dtype=np.int64)
    take = np.zeros((n, h + 1, m + 1), dtype=bool)
    for k in range(n - 1, -1, -1):
        best[k] = best[k + 1]
        lines = ads[k].lines
        weight = weights[k]
        if weight <= 0 or lines > m or h == 0:
            continue
        candidate = weight + best[instance.next_group[k], :h, : m + 1 - lines]
        current = best[k + 1, 1:, lines:]
        chosen = candidate >= current
        best[k, 1:, lines:] = np.where(chosen, candidate, current)
        take[k, 1:, lines:] = chosen

    witness: dict[int, Ad] = {}
    values: dict[int, Money] = {}
    k, slots, room = 0, h, m
    while k < n and slots > 0 and room > 0:
        if take[k, slots, room]:
            ad = ads[k]
            witness[ad.advertiser] = ad
            values[ad.advertiser] = int(weights[k])
            slots -= 1
            room -= ad.lines
            k = instance.next_group[k]
        else:
            k += 1
    return OracleResult(int(best[0, h, m]), frozenset(witness), witness, values)


class SlateOracle:
    def __init__(self, instance: SlateInstance):
        self.instance = instance
        self.bidders = instance.advertisers

    def solve(self, truncation: Utilities) -> OracleResult:
        return solve_slate(self.instance, truncation)

    def top_value(self, bidder: int) -> Money:
        return self.instance.top_score(bidder)


def oracle_for(instance) -> Oracle:
    if isinstance(instance, SlateInstance):
        return SlateOracle(instance)
    if isinstance(instance, ValuationProfile):
        return ExactOracle(instance)
    raise TypeError(f"no oracle for {type(instance).__name__}")


def make_outcome(
    mechanism: str,
    result: OracleResult,
    payments: Mapping[int, Money],
    oracle_calls: int = 0,
    **extra,
) -> AuctionOutcome:
    """Package an allocation found at zero truncation with its payments.

    Slate outcomes also get per-click prices, ``payment / pclick``.
    """
    cpc = None
    if result.witness and all(isinstance(x, Ad) for x in result.witness.values()):
        cpc = {
            i: Fraction(payments.get(i, 0)) / ad.pclick
            for i, ad in result.witness.items()
        }
    return AuctionOutcome(
        mechanism=mechanism,
        allocation=dict(result.witness),
        values=dict(result.values),
        payments={i: payments.get(i, 0) for i in result.witness},
        cpc=cpc,
        oracle_calls=oracle_calls,
        extra=dict(extra),
    )
