import random
from fractions import Fraction

import pytest

from corepricing.model import Valuation, ValuationProfile, truncate, welfare
from corepricing.oracles import (
    Ad,
    CapacityError,
    ExactOracle,
    SlateInstance,
    SlateOracle,
    solve_exact,
    solve_slate,
)
from corepricing.verification import (
    brute_force_exact,
    brute_force_slate,
    enumerate_polytope,
)
from instances import M, five_bidders, random_profile, random_slate, random_truncation


def zero(ids):
    return {i: 0 for i in ids}


class TestSolveExact:
    def test_five_bidder_at_origin(self):
        r = solve_exact(five_bidders(), zero(range(1, 6)))
        assert r.max_welfare == 160 * M
        assert r.winners == {1, 2}

    def test_five_bidder_truncated(self):
        pi = {1: 41 * M, 2: 41 * M, 3: 0, 4: 0, 5: 0}
        # truncated: 1:A=19, 2:B=59, 3:AB=60, 4:A=20, 5:B=20
        assert brute_force_exact(five_bidders(), pi) == 79 * M
        r = solve_exact(five_bidders(), pi)
        assert r.winners == {2, 4}
        assert r.max_welfare == 79 * M

    def test_everything_truncated_away(self):
        p = five_bidders()
        r = solve_exact(p, {i: p[i].top for i in p.ids})
        assert (r.max_welfare, r.winners, r.witness) == (0, frozenset(), {})

    def test_tie_prefers_smallest_winner_tuple(self):
        p = ValuationProfile(
            (
                (0, Valuation.of(([0, 1], 10))),
                (1, Valuation.of(([0], 5))),
                (2, Valuation.of(([1], 5))),
            ),
            2,
        )
        assert solve_exact(p, zero(p.ids)).winners == {0}
        q = ValuationProfile(
            ((2, Valuation.of(([0], 7))), (1, Valuation.of(([0], 7)))), 1
        )
        assert solve_exact(q, zero(q.ids)).winners == {1}

    def test_capacity_guard(self):
        p = ValuationProfile(((0, Valuation.of(([12], 1))),), 13)
        with pytest.raises(CapacityError):
            solve_exact(p, {0: 0})


def ex_slate():
    one = Fraction(1)
    return SlateInstance(
        (Ad(1, 0, 2, 10, one), Ad(2, 0, 1, 4, one), Ad(2, 1, 3, 9, one)), 2, 3
    )


class TestSolveSlate:
    def test_optimum(self):
        inst = ex_slate()
        assert brute_force_slate(inst, {1: 0, 2: 0}) == 14
        r = solve_slate(inst, {1: 0, 2: 0})
        assert r.max_welfare == 14
        assert r.witness == {1: inst.ads[0], 2: inst.ads[1]}

    def test_truncated(self):
        inst = ex_slate()
        assert brute_force_slate(inst, {1: 0, 2: 5}) == 10
        r = solve_slate(inst, {1: 0, 2: 5})
        assert (r.max_welfare, r.winners) == (10, {1})

    def test_no_lines(self):
        inst = SlateInstance(ex_slate().ads, 2, 0)
        r = solve_slate(inst, {1: 0, 2: 0})
        assert (r.max_welfare, r.winners) == (0, frozenset())

    def test_empty_instance(self):
        r = solve_slate(SlateInstance((), 3, 5), {})
        assert r.max_welfare == 0 and not r.winners

    def test_ad_must_fit_remaining_lines(self):
        # A plain transcription of the recurrence would let the last ad
        # overflow the line budget.
        one = Fraction(1)
        inst = SlateInstance((Ad(1, 0, 2, 5, one), Ad(2, 0, 2, 5, one)), 2, 3)
        assert solve_slate(inst, {1: 0, 2: 0}).max_welfare == 5

    def test_missing_truncation(self):
        with pytest.raises(ValueError):
            solve_slate(ex_slate(), {1: 0})

    def test_instance_validation(self):
        one = Fraction(1)
        with pytest.raises(ValueError):
            SlateInstance((Ad(1, 0, 1, 1, one), Ad(2, 0, 1, 1, one), Ad(1, 1, 1, 1, one)), 1, 1)
        with pytest.raises(ValueError):
            Ad(1, 0, 1, 3, Fraction(1, 2))
        with pytest.raises(ValueError):
            Ad(1, 0, 0, 3, one)


def _random_cases(seed, count):
    rng = random.Random(seed)
    for k in range(count):
        if k % 2:
            inst = random_slate(rng)
            oracle = SlateOracle(inst)
            top = max((ad.score for ad in inst.ads), default=1)
        else:
            inst = random_profile(rng)
            oracle = ExactOracle(inst)
            top = max(v.top for _, v in inst.bidders)
        yield rng, inst, oracle, top


def test_oracles_match_brute_force():
    for rng, inst, oracle, top in _random_cases(11, 300):
        pi = random_truncation(rng, oracle.bidders, top)
        r = oracle.solve(pi)
        if isinstance(inst, SlateInstance):
            assert r.max_welfare == brute_force_slate(inst, pi)
            assert sum(ad.lines for ad in r.witness.values()) <= inst.max_lines
            assert len(r.witness) <= inst.max_ads
            assert r.max_welfare == sum(
                max(ad.score - pi[a], 0) for a, ad in r.witness.items()
            )
        else:
            assert r.max_welfare == brute_force_exact(inst, pi)
            assert welfare(truncate(inst, pi), r.witness) == r.max_welfare
        assert r.winners == set(r.witness)
        assert all(v > 0 for v in r.values.values())


def test_raising_truncation_never_raises_welfare():
    for rng, inst, oracle, top in _random_cases(12, 200):
        pi = random_truncation(rng, oracle.bidders, top)
        i = rng.choice(oracle.bidders)
        higher = dict(pi)
        higher[i] += rng.randint(1, max(top, 1))
        assert oracle.solve(higher).max_welfare <= oracle.solve(pi).max_welfare


def test_winner_set_is_a_maximum_binding_constraint():
    for rng, inst, oracle, top in _random_cases(13, 150):
        poly = enumerate_polytope(inst)
        pi = random_truncation(rng, oracle.bidders, top)
        r = oracle.solve(pi)
        surplus = {s: w - sum(pi[i] for i in s) for s, w in poly.values.items()}
        best = max(surplus.values())
        assert surplus[r.winners] == best
        assert r.max_welfare == best
