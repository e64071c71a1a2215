"""Bidder-optimal core pricing by water-filling.

Bidder utilities start at zero (pay-your-bid) and are raised along a ray
until the point is about to leave the core; the bidders common to every
constraint met so far keep rising, the rest freeze. Core membership and the
most binding coalition are both read off a single oracle query on bids
truncated by the current utilities.

All arithmetic is on integer micro-units. The step along a ray is an integer
multiple of an integer direction, so every point visited is exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import gcd
from typing import Mapping

from corepricing.model import AuctionOutcome, Utilities
from corepricing.money import Money
from corepricing.oracles import (
    CountingOracle,
    Oracle,
    OracleResult,
    make_outcome,
    zero_truncation,
)


class NotInCoreError(ValueError):
    pass


@dataclass(frozen=True)
class DirectionPolicy:
    """How utilities rise within the active set.

    ``uniform`` raises every active bidder at the same rate. ``toward_target``
    aims at ``target`` (typically the VCG utilities): the weight of bidder
    ``i`` is its remaining shortfall ``max(target_i - pi_i, 0)``, falling
    back to uniform once no active bidder has any shortfall left.
    """

    kind: str = "uniform"
    target: Mapping[int, Money] | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "toward_target"):
            raise ValueError(f"unknown direction policy {self.kind!r}")
        if self.kind == "toward_target":
            if self.target is None or any(v < 0 for v in self.target.values()):
                raise ValueError("toward_target needs a non-negative target")

    @classmethod
    def uniform(cls) -> DirectionPolicy:
        return cls()

    @classmethod
    def toward(cls, target: Mapping[int, Money]) -> DirectionPolicy:
        return cls("toward_target", dict(target))

    def direction(
        self, active: frozenset, point: Utilities, epsilon: Money
    ) -> dict[int, int]:
        """Integer weights on ``active`` whose sum is at most ``epsilon``."""
        if self.kind == "uniform":
            return {i: 1 for i in active}
        missing = [i for i in active if i not in self.target]
        if missing:
            raise ValueError(f"target has no entry for bidders {missing}")
        shortfall = {i: max(self.target[i] - point[i], 0) for i in sorted(active)}
        total = sum(shortfall.values())
        if total == 0:
            return {i: 1 for i in active}
        g = 0
        for v in shortfall.values():
            g = gcd(g, v)
        reduced = {i: v // g for i, v in shortfall.items() if v}
        if sum(reduced.values()) <= epsilon:
            return reduced
        # Too fine for the epsilon grid: keep the proportions to within
        # 1/epsilon of the total weight.
        scaled = {i: v * epsilon // total for i, v in shortfall.items()}
        return {i: v for i, v in scaled.items() if v}


@dataclass(frozen=True)
class CoreSearchResult:
    lower: dict[int, Money]
    upper: dict[int, Money]
    step_lower: int
    step_upper: int
    # Oracle answer at ``upper`` if the search queried it, else None.
    upper_result: OracleResult | None = None


@dataclass
class TraceStep:
    t: int
    active: frozenset
    winners: frozenset
    point: dict[int, Money]
    outer: dict[int, Money]
    calls: int

    def as_record(self) -> dict:
        return {
            "t": self.t,
            "S": sorted(self.active),
            "T": sorted(self.winners),
            "pi": {str(i): v for i, v in sorted(self.point.items())},
            "pi_outer": {str(i): v for i, v in sorted(self.outer.items())},
            "oracle_calls": self.calls,
        }


@dataclass
class WaterfillTrace:
    steps: list[TraceStep] = field(default_factory=list)
    final_active: frozenset = frozenset()
    oracle_calls: int = 0
    total_welfare: Money = 0
    base: OracleResult | None = None
    # Oracle queries spent outside the water-filling loop (VCG target).
    target_calls: int = 0

    @property
    def searches(self) -> list[frozenset]:
        """Active sets handed to each ray search, in order."""
        return [s.active & s.winners for s in self.steps if s.active & s.winners]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.as_record()) + "\n" for s in self.steps)


def _shift(point: Utilities, direction: Mapping[int, int], step: int) -> dict:
    out = dict(point)
    for i, w in direction.items():
        out[i] += w * step
    return out


def is_in_core(
    oracle: Oracle, point: Utilities, total_welfare: Money | None = None
) -> bool:
    """Whether ``point`` satisfies every core constraint.

    The seller's revenue at ``point`` must cover the best welfare achievable
    with bids truncated by ``point``; that one comparison stands for all
    coalition constraints. Costs one query, plus one more if
    ``total_welfare`` is not supplied.
    """
    if any(v < 0 for v in point.values()):
        raise ValueError("utilities must be non-negative")
    if total_welfare is None:
        total_welfare = oracle.solve(zero_truncation(oracle)).max_welfare
    revenue = total_welfare - sum(point[i] for i in oracle.bidders)
    return revenue >= oracle.solve(point).max_welfare


def mbcc(oracle: Oracle, point: Utilities) -> frozenset:
    """A maximum binding core constraint at ``point`` (one query)."""
    if any(v < 0 for v in point.values()):
        raise ValueError("utilities must be non-negative")
    return oracle.solve(point).winners


def core_search(
    oracle: Oracle,
    start: Utilities,
    active,
    epsilon: Money,
    direction: Mapping[int, int] | None = None,
    total_welfare: Money | None = None,
) -> CoreSearchResult:
    """Bisect along ``start + step * direction`` for the core boundary.

    ``start`` must be in the core. Returns the last in-core point and the
    first point known to be outside, whose coordinate sums differ by at
    most ``epsilon``. The initial upper step pushes total utility past
    ``total_welfare`` (negative seller revenue), so it is outside the core
    without a query.
    """
    active = frozenset(active)
    if direction is None:
        direction = {i: 1 for i in active}
    direction = {i: int(w) for i, w in direction.items() if w}
    if any(w < 0 for w in direction.values()):
        raise ValueError("direction weights must be non-negative")
    if not set(direction) <= active:
        raise ValueError("direction must be supported on the active set")
    span = sum(direction.values())
    if span == 0:
        raise ValueError("direction has no positive weight")
    if span > epsilon:
        raise ValueError(
            f"direction weight {span} exceeds epsilon {epsilon}; "
            "integer steps cannot meet the gap bound"
        )
    if total_welfare is None:
        total_welfare = oracle.solve(zero_truncation(oracle)).max_welfare
    room = total_welfare - sum(start[i] for i in oracle.bidders)
    if room < 0:
        raise NotInCoreError("start point pays the seller a negative revenue")

    lo, hi = 0, room // span + 1
    upper_result = None
    while (hi - lo) * span > epsilon:
        mid = (lo + hi) // 2
        probe = _shift(start, direction, mid)
        result = oracle.solve(probe)
        # the membership test of is_in_core, keeping the answer
        if total_welfare - sum(probe[i] for i in oracle.bidders) >= result.max_welfare:
            lo = mid
        else:
            hi, upper_result = mid, result
    return CoreSearchResult(
        _shift(start, direction, lo), _shift(start, direction, hi), lo, hi, upper_result
    )


def water_fill(
    oracle: Oracle, epsilon: Money, policy: DirectionPolicy | None = None
) -> tuple[dict[int, Money], WaterfillTrace]:
    """An epsilon-bidder-optimal core point and the trace that reached it.

    ``epsilon`` is in micro-units and must be at least the number of bidders
    so a uniform integer step fits inside the gap bound.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if epsilon < len(oracle.bidders):
        raise ValueError(
            f"epsilon {epsilon} is below the bidder count {len(oracle.bidders)}"
        )
    policy = policy or DirectionPolicy.uniform()
    counted = CountingOracle(oracle)
    point = zero_truncation(oracle)
    outer = dict(point)
    base = counted.solve(point)
    total = base.max_welfare
    trace = WaterfillTrace(total_welfare=total, base=base)

    active = frozenset(oracle.bidders)
    winners = base.winners
    t = 0
    while True:
        trace.steps.append(
            TraceStep(t, active, winners, dict(point), dict(outer), counted.calls)
        )
        following = active & winners
        if not following:
            break
        direction = policy.direction(following, point, epsilon)
        found = core_search(counted, point, following, epsilon, direction, total)
        point, outer = found.lower, found.upper
        active = following
        t += 1
        if found.upper_result is not None:
            # the search already solved the outer point
            winners = found.upper_result.winners
        else:
            winners = mbcc(counted, outer)
    trace.final_active = frozenset()
    trace.oracle_calls = counted.calls
    return point, trace


def vcg_pursuit(oracle: Oracle, epsilon: Money) -> tuple[dict[int, Money], WaterfillTrace]:
    """Water-filling whose rays head for the VCG utility point."""
    from corepricing.baselines import vcg_utilities

    counted = CountingOracle(oracle)
    target = vcg_utilities(counted)
    point, trace = water_fill(oracle, epsilon, DirectionPolicy.toward(target))
    trace.target_calls = counted.calls
    return point, trace


def reconstruct_outcome(
    oracle: Oracle,
    point: Utilities,
    base: OracleResult | None = None,
    check: bool = True,
    mechanism: str = "core",
) -> AuctionOutcome:
    """Payments ``b_i(x*_i) - pi_i`` on a welfare-maximising allocation.

    ``base`` may carry an already computed zero-truncation answer to save a
    query. With ``check`` the point is first confirmed to be in the core.
    """
    counted = CountingOracle(oracle)
    if base is None:
        base = counted.solve(zero_truncation(oracle))
    if check and not is_in_core(counted, point, base.max_welfare):
        raise NotInCoreError("utility vector is not in the core")
    payments = {}
    for i in base.winners:
        payment = base.values[i] - point[i]
        if payment < 0:
            raise NotInCoreError(f"bidder {i} would be paid to win")
        payments[i] = payment
    for i in oracle.bidders:
        if i not in base.winners and point[i] > 0:
            raise NotInCoreError(f"losing bidder {i} has positive utility")
    return make_outcome(mechanism, base, payments, counted.calls)
