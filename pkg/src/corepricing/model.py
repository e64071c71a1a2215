"""Valuations, allocations and outcomes shared by every mechanism.

Valuations use the XOR bidding language: a bidder submits atomic bids
``(bundle, value)`` and values a set of items at the best atomic bid whose
bundle it contains. Amounts are integer micro-units (see ``money``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Mapping

from corepricing.money import Money

Bundle = frozenset  # frozenset[int] of item identifiers
Allocation = Mapping[int, Bundle]
Utilities = Mapping[int, Money]


def bundle(*items: int) -> Bundle:
    return frozenset(items)


def bundle_mask(items: Iterable[int]) -> int:
    mask = 0
    for item in items:
        mask |= 1 << item
    return mask


@dataclass(frozen=True)
class Valuation:
    """XOR valuation: ``entries`` is a tuple of ``(bundle, value)`` atomic bids."""

    entries: tuple[tuple[Bundle, Money], ...] = ()

    def __post_init__(self):
        entries = tuple((frozenset(b), int(v)) for b, v in self.entries)
        seen = set()
        for items, value in entries:
            if not items:
                raise ValueError("atomic bids on the empty bundle are not allowed")
            if value <= 0:
                raise ValueError(f"atomic bid values must be positive, got {value}")
            if items in seen:
                raise ValueError(f"duplicate atomic bid on bundle {sorted(items)}")
            seen.add(items)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def of(cls, *entries: tuple[Iterable[int], Money]) -> Valuation:
        return cls(tuple((frozenset(b), v) for b, v in entries))

    @cached_property
    def masks(self) -> tuple[tuple[int, Money], ...]:
        return tuple((bundle_mask(b), v) for b, v in self.entries)

    @property
    def top(self) -> Money:
        return max((v for _, v in self.entries), default=0)

    def items(self) -> frozenset:
        out: set[int] = set()
        for b, _ in self.entries:
            out |= b
        return frozenset(out)


def value_of(valuation: Valuation, items: Iterable[int]) -> Money:
    """Value of a set of items: best atomic bid contained in it, 0 if none."""
    items = frozenset(items)
    return max((v for b, v in valuation.entries if b <= items), default=0)


@dataclass(frozen=True)
class ValuationProfile:
    """Ordered bidders with XOR valuations over ``item_count`` items."""

    bidders: tuple[tuple[int, Valuation], ...]
    item_count: int

    def __post_init__(self):
        bidders = tuple((int(i), v) for i, v in self.bidders)
        ids = [i for i, _ in bidders]
        if len(set(ids)) != len(ids):
            raise ValueError(f"bidder ids must be distinct, got {ids}")
        if any(i < 0 for i in ids):
            raise ValueError("bidder ids must be non-negative")
        if self.item_count < 0:
            raise ValueError("item_count must be non-negative")
        for i, valuation in bidders:
            for b, _ in valuation.entries:
                if any(item < 0 or item >= self.item_count for item in b):
                    raise ValueError(
                        f"bidder {i} bids on items outside 0..{self.item_count - 1}"
                    )
        object.__setattr__(self, "bidders", bidders)

    @classmethod
    def from_mapping(cls, valuations: Mapping[int, Valuation], item_count: int):
        return cls(tuple(valuations.items()), item_count)

    @cached_property
    def ids(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.bidders)

    @cached_property
    def _by_id(self) -> dict[int, Valuation]:
        return dict(self.bidders)

    def __getitem__(self, bidder: int) -> Valuation:
        return self._by_id[bidder]

    def __len__(self) -> int:
        return len(self.bidders)


def truncate(profile: ValuationProfile, truncation: Utilities) -> ValuationProfile:
    """Profile with every bidder's values lowered by their offset, floored at zero.

    Under XOR semantics ``max(b(x) - pi, 0)`` is realised entrywise: subtract
    ``pi`` from each atomic bid and drop the ones that reach zero.
    """
    missing = [i for i in profile.ids if i not in truncation]
    if missing:
        raise ValueError(f"truncation has no entry for bidders {missing}")
    bidders = []
    for i, valuation in profile.bidders:
        offset = truncation[i]
        if offset < 0:
            raise ValueError(f"truncation for bidder {i} is negative")
        kept = tuple((b, v - offset) for b, v in valuation.entries if v > offset)
        bidders.append((i, Valuation(kept)))
    return ValuationProfile(tuple(bidders), profile.item_count)


def check_disjoint(allocation: Allocation) -> None:
    used: set[int] = set()
    for bidder, items in allocation.items():
        if used & items:
            raise ValueError(f"bundle of bidder {bidder} overlaps another bundle")
        used |= items


def welfare(profile: ValuationProfile, allocation: Allocation) -> Money:
    """Total declared value of an allocation."""
    check_disjoint(allocation)
    return sum(value_of(profile[i], items) for i, items in allocation.items())


@dataclass
class AuctionOutcome:
    """Allocation and payments of one mechanism run.

    ``values`` holds each winner's declared value for what they received,
    in the same units as ``payments``. For slate auctions ``cpc`` carries the
    per-click price of every assigned ad.
    """

    mechanism: str
    allocation: dict[int, Any]
    values: dict[int, Money]
    payments: dict[int, Money]
    cpc: dict[int, Fraction] | None = None
    oracle_calls: int = 0
    duration_s: float = 0.0
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for bidder, payment in self.payments.items():
            value = self.values.get(bidder, 0)
            if not 0 <= payment <= value:
                raise ValueError(
                    f"{self.mechanism}: payment {payment} of bidder {bidder} "
                    f"outside [0, {value}]"
                )

    @property
    def revenue(self) -> Money:
        return sum(self.payments.values())

    @property
    def welfare(self) -> Money:
        return sum(self.values.values())

    @property
    def utilities(self) -> dict[int, Money]:
        return {i: self.values[i] - self.payments.get(i, 0) for i in self.values}

    def revenue_literal(self) -> Fraction:
        """Sum of bid times CPC over assigned ads; equals revenue without a CPC."""
        if self.cpc is None:
            return Fraction(self.revenue)
        return sum(
            (self.allocation[i].bid * c for i, c in self.cpc.items()), Fraction(0)
        )
