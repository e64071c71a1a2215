"""Brute-force references for testing the pricing code.

Nothing here calls the oracles in ``corepricing.oracles``: coalition values
come from enumerating every feasible allocation, and core questions are
answered by checking all ``2^n`` coalition constraints directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from corepricing.model import Utilities, ValuationProfile, truncate
from corepricing.money import Money
from corepricing.oracles import CapacityError, SlateInstance

MAX_POLYTOPE_BIDDERS = 12


# ---------------------------------------------------------------------------
# Exhaustive allocation search


def enumerate_allocations(profile: ValuationProfile) -> Iterator[tuple[dict, Money]]:
    """Every feasible allocation of atomic bids as ``(assignment, welfare)``."""
    bidders = profile.bidders

    def walk(pos: int, used: frozenset, assignment: dict, total: Money):
        if pos == len(bidders):
            yield dict(assignment), total
            return
        bidder, valuation = bidders[pos]
        yield from walk(pos + 1, used, assignment, total)
        for items, value in valuation.entries:
            if items & used:
                continue
            assignment[bidder] = items
            yield from walk(pos + 1, used | items, assignment, total + value)
            del assignment[bidder]

    yield from walk(0, frozenset(), {}, 0)


def brute_force_exact(profile: ValuationProfile, truncation: Utilities) -> Money:
    return max(w for _, w in enumerate_allocations(truncate(profile, truncation)))


def enumerate_slates(instance: SlateInstance) -> Iterator[list]:
    """Every feasible slate, as a list of ads."""
    groups: dict[int, list] = {}
    for ad in instance.ads:
        groups.setdefault(ad.advertiser, []).append(ad)
    advertisers = list(groups)

    def walk(pos: int, chosen: list, lines: int):
        if pos == len(advertisers):
            yield list(chosen)
            return
        yield from walk(pos + 1, chosen, lines)
        if len(chosen) >= instance.max_ads:
            return
        for ad in groups[advertisers[pos]]:
            if lines + ad.lines <= instance.max_lines:
                chosen.append(ad)
                yield from walk(pos + 1, chosen, lines + ad.lines)
                chosen.pop()

    yield from walk(0, [], 0)


def brute_force_slate(instance: SlateInstance, truncation: Utilities) -> Money:
    return max(
        sum(max(ad.score - truncation[ad.advertiser], 0) for ad in slate)
        for slate in enumerate_slates(instance)
    )


# ---------------------------------------------------------------------------
# Core polytope


@dataclass(frozen=True)
class CorePolytope:
    """Coalition values ``w(S)`` for every ``S`` subset of the bidders."""

    bidders: tuple[int, ...]
    values: dict[frozenset, Money]

    @property
    def total(self) -> Money:
        return self.values[frozenset(self.bidders)]

    def w(self, coalition) -> Money:
        return self.values[frozenset(coalition)]

    def slack(self, point: Utilities, coalition: frozenset) -> Money:
        """Seller revenue minus the coalition's blocking surplus."""
        revenue = self.total - sum(point[i] for i in self.bidders)
        return revenue - (self.values[coalition] - sum(point[i] for i in coalition))


def _polytope(bidders: tuple[int, ...], packings) -> CorePolytope:
    n = len(bidders)
    if n > MAX_POLYTOPE_BIDDERS:
        raise CapacityError(f"polytope enumeration is limited to {MAX_POLYTOPE_BIDDERS} bidders")
    bit = {b: 1 << k for k, b in enumerate(bidders)}
    best = [0] * (1 << n)
    for winners, value in packings:
        mask = 0
        for b in winners:
            mask |= bit[b]
        if value > best[mask]:
            best[mask] = value
    # w(S) = best packing using only members of S.
    for k in range(n):
        for mask in range(1 << n):
            if mask >> k & 1 and best[mask ^ (1 << k)] > best[mask]:
                best[mask] = best[mask ^ (1 << k)]
    values = {
        frozenset(b for b in bidders if mask & bit[b]): best[mask]
        for mask in range(1 << n)
    }
    return CorePolytope(bidders, values)


def enumerate_polytope(instance) -> CorePolytope:
    """Coalition values of a valuation profile or a slate instance."""
    if isinstance(instance, SlateInstance):
        bidders = instance.advertisers
        if len(bidders) > MAX_POLYTOPE_BIDDERS:
            raise CapacityError("too many advertisers")
        packings = (
            ([ad.advertiser for ad in s], sum(ad.score for ad in s))
            for s in enumerate_slates(instance)
        )
        return _polytope(bidders, packings)
    if len(instance) > MAX_POLYTOPE_BIDDERS:
        raise CapacityError("too many bidders")
    packings = (
        (list(assignment), total) for assignment, total in enumerate_allocations(instance)
    )
    return _polytope(instance.ids, packings)


def check_core_membership(polytope: CorePolytope, point: Utilities) -> bool:
    if any(point[i] < 0 for i in polytope.bidders):
        return False
    return all(polytope.slack(point, s) >= 0 for s in polytope.values)


def check_eps_bidder_optimal(
    polytope: CorePolytope, point: Utilities, epsilon: Money
) -> bool:
    """In the core, and raising any single utility by ``epsilon`` plus one
    micro-unit leaves it.

    Every core constraint caps a sum of utilities of bidders outside some
    coalition, so if raising ``pi_j`` alone breaks a constraint, raising
    other coordinates as well cannot repair it: the single-coordinate test
    covers all dominating points.
    """
    if not check_core_membership(polytope, point):
        return False
    for j in polytope.bidders:
        bumped = dict(point)
        bumped[j] += epsilon + 1
        if check_core_membership(polytope, bumped):
            return False
    return True


# ---------------------------------------------------------------------------
# Minimum-revenue core point


def _simplex_max(objective, rows, rhs):
    """Maximise ``objective . x`` s.t. ``rows x <= rhs``, ``x >= 0``, ``rhs >= 0``.

    Dictionary simplex over Fractions with Bland's rule; the origin is
    feasible because ``rhs`` is non-negative.
    """
    n, m = len(objective), len(rows)
    coef = [[Fraction(a) for a in row] for row in rows]
    const = [Fraction(b) for b in rhs]
    cost = [Fraction(c) for c in objective]
    value = Fraction(0)
    nonbasic = list(range(n))
    basic = list(range(n, n + m))
    while True:
        entering = None
        for j in sorted(range(n), key=lambda j: nonbasic[j]):
            if cost[j] > 0:
                entering = j
                break
        if entering is None:
            break
        j = entering
        leaving, ratio = None, None
        for r in range(m):
            if coef[r][j] > 0:
                q = const[r] / coef[r][j]
                if ratio is None or q < ratio or (q == ratio and basic[r] < basic[leaving]):
                    leaving, ratio = r, q
        if leaving is None:
            raise ValueError("linear program is unbounded")
        r = leaving
        pivot = coef[r][j]
        row = [a / pivot for a in coef[r]]
        row[j] = 1 / pivot
        const[r] = const[r] / pivot
        coef[r] = row
        for i in range(m):
            if i == r or coef[i][j] == 0:
                continue
            f = coef[i][j]
            const[i] -= f * const[r]
            target = coef[i]
            for k in range(n):
                target[k] = target[k] - f * row[k] if k != j else -f * row[j]
        f = cost[j]
        value += f * const[r]
        cost = [cost[k] - f * row[k] if k != j else -f * row[j] for k in range(n)]
        basic[r], nonbasic[j] = nonbasic[j], basic[r]
    x = [Fraction(0)] * n
    for r, var in enumerate(basic):
        if var < n:
            x[var] = const[r]
    return x, value


def min_revenue_core_point(polytope: CorePolytope) -> dict[int, Fraction]:
    """Core point of largest total bidder utility, i.e. least seller revenue."""
    bidders = polytope.bidders
    everyone = frozenset(bidders)
    rows, rhs = [], []
    for coalition, value in polytope.values.items():
        outside = everyone - coalition
        if not outside:
            continue
        rows.append([1 if b in outside else 0 for b in bidders])
        rhs.append(polytope.total - value)
    x, _ = _simplex_max([1] * len(bidders), rows, rhs)
    return dict(zip(bidders, x))
