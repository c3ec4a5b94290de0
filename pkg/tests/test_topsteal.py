from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_submodular_table, seeded
from sspeq.auction import is_pure_nash_no_overbid, welfare
from sspeq.stealing import find_steal
from sspeq.topsteal import (
    ErasedValuation,
    MarginalValuation,
    compose_top_item,
    competitor_info,
    preprocess_to_competitors,
    steal_count_bound,
    top_steal,
)
from sspeq.valuations import AdditiveValuation, DomainError

CASES = {
    "pin_top_item",
    "single_item",
    "stable_bids",
    "steal_then_recurse",
    "erased_stable",
    "erase_then_steal",
}


def test_marginal_valuation_conditions_on_item():
    v = AdditiveValuation(2, (3, 1))
    mv = MarginalValuation(v, 1)
    assert mv.value({0}) == 3
    assert mv.value(frozenset()) == 0
    assert mv.ledger is v.ledger


def test_erased_valuation_ignores_items():
    v = AdditiveValuation(2, (3, 1))
    ev = ErasedValuation(v, {0})
    assert ev.value({0, 1}) == 1
    assert ev.value({0}) == 0


def test_competitor_info():
    vs = [AdditiveValuation(2, (2, 0)), AdditiveValuation(2, (2, 1))]
    info = competitor_info(vs, range(2))
    assert info[0] == {"competitors": [0, 1], "top": [0, 1], "top_value": 2}
    assert info[1] == {"competitors": [1], "top": [1], "top_value": 1}


def test_preprocess_moves_to_top_competitor():
    vs = [AdditiveValuation(2, (0, 0)), AdditiveValuation(2, (4, 0))]
    alloc, ignorable = preprocess_to_competitors(vs, ({0, 1}, set()))
    assert alloc == (frozenset({1}), frozenset({0}))
    assert ignorable == {1}


def test_steal_count_bound_values():
    assert steal_count_bound(5, 2) == 5
    assert steal_count_bound(5, 3) == 20
    assert steal_count_bound(8, 3) == 44


def test_compose_top_item():
    alloc, bids = compose_top_item(
        (frozenset(), frozenset({1})), ((0, 0), (0, 2)), 0, 0, Fraction(3)
    )
    assert alloc == (frozenset({0}), frozenset({1}))
    assert bids == ((3, 0), (0, 2))


def test_top_steal_frozen_trace():
    vs = [AdditiveValuation(2, (3, 1)), AdditiveValuation(2, (2, 2))]
    run = top_steal(vs, ({1}, {0}), t=2)
    assert run.steals == [(0, 1, 0), (1, 0, 1)]
    assert run.alloc == (frozenset({0}), frozenset({1}))
    assert run.bids == ((3, 0), (0, 2))
    assert [node.case for node in run.trace.walk()] == [
        "steal_then_recurse",
        "pin_top_item",
        "single_item",
    ]
    assert run.trace.steals_total() == 2


def test_top_steal_requires_covering_allocation():
    vs = [AdditiveValuation(2, (1, 1)), AdditiveValuation(2, (1, 1))]
    with pytest.raises(DomainError):
        top_steal(vs, ({0}, set()), t=2)


def test_top_steal_rejects_small_t():
    vs = [AdditiveValuation(1, (1,)) for _ in range(3)]
    with pytest.raises(DomainError):
        top_steal(vs, ({0}, set(), set()), t=2)
    with pytest.raises(DomainError):
        top_steal(vs, ({0}, set(), set()), t=1)


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_two_restricted_runs_settle_within_m(seed):
    rng = seeded(seed)
    m = rng.randint(2, 5)
    vs = [random_submodular_table(rng, m) for _ in range(2)]
    init = [set(), set()]
    for j in range(m):
        init[rng.randrange(2)].add(j)
    run = top_steal(vs, init, t=2)
    assert len(run.steals) <= steal_count_bound(m, 2)
    assert all(node.case in CASES for node in run.trace.walk())
    assert find_steal(vs, run.alloc, run.bids) is None
    ok, witnesses = is_pure_nash_no_overbid(vs, run.bids)
    assert ok, witnesses


@given(st.integers(0, 10_000))
@settings(max_examples=15, deadline=None)
def test_three_restricted_runs_settle_within_bound(seed):
    rng = seeded(seed)
    m = rng.randint(2, 4)
    vs = [random_submodular_table(rng, m) for _ in range(3)]
    init = [set(), set(), set()]
    for j in range(m):
        init[rng.randrange(3)].add(j)
    run = top_steal(vs, init, t=3)
    assert len(run.steals) <= steal_count_bound(m, 3)
    ok, witnesses = is_pure_nash_no_overbid(vs, run.bids)
    assert ok, witnesses


def test_top_steal_from_greedy_keeps_greedy_welfare():
    from sspeq.auction import greedy_allocation

    rng = seeded(99)
    for _ in range(10):
        m = rng.randint(2, 4)
        vs = [random_submodular_table(rng, m) for _ in range(2)]
        init = greedy_allocation(vs)
        run = top_steal(vs, init, t=2)
        assert welfare(vs, run.alloc) >= welfare(vs, init)
