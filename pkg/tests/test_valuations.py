from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    brute_coverage_table,
    brute_demand,
    random_budget_additive,
    random_submodular_table,
    seeded,
)
from sspeq.valuations import (
    AdditiveValuation,
    BudgetAdditiveValuation,
    CoverageValuation,
    DomainError,
    TableValuation,
    XOSExplicitValuation,
    better_demand,
    bundle_of,
    check_clause,
    mask_of,
    valuation_from_json,
    verify_class,
)


def test_mask_round_trip():
    assert mask_of({0, 2, 5}) == 0b100101
    assert bundle_of(0b100101) == frozenset({0, 2, 5})


def test_better_demand_prefers_profit_then_size_then_lex():
    assert better_demand(Fraction(2), frozenset({0, 1}), Fraction(1), frozenset())
    assert better_demand(Fraction(1), frozenset({3}), Fraction(1), frozenset({0, 1}))
    assert better_demand(Fraction(1), frozenset({0, 2}), Fraction(1), frozenset({0, 3}))
    assert not better_demand(Fraction(1), frozenset({0, 3}), Fraction(1), frozenset({0, 2}))


def test_additive_basics():
    v = AdditiveValuation(3, (3, 1, 2))
    assert v.value({0, 2}) == 5
    assert v.demand((2, 2, 2)) == {0}
    assert v.xos_clause({1, 2}) == {1: Fraction(1), 2: Fraction(2)}


def test_budget_additive_values_and_clause():
    v = BudgetAdditiveValuation(2, 3, (2, 2))
    assert v.value({0}) == 2
    assert v.value({0, 1}) == 3
    assert v.xos_clause({0, 1}) == {0: Fraction(2), 1: Fraction(1)}
    ok, _ = verify_class(v, "submodular")
    assert ok


def test_table_rejects_non_monotone():
    with pytest.raises(DomainError):
        TableValuation(2, [0, 2, 1, 1])


def test_table_rejects_nonzero_empty():
    with pytest.raises(DomainError):
        TableValuation(1, [1, 2])


def test_squared_cardinality_is_not_submodular():
    sizes = [bin(mask).count("1") for mask in range(8)]
    v = TableValuation(3, [s * s for s in sizes])
    ok, witness = verify_class(v, "submodular")
    assert not ok
    ok, _ = verify_class(v, "monotone")
    assert ok


def test_coverage_matches_brute_table():
    edges = [(0, 1, Fraction(3)), (1, 2, Fraction(1)), (0, 3, Fraction(2))]
    v = CoverageValuation(4, edges)
    table = brute_coverage_table(4, edges)
    for mask in range(16):
        assert v.value(bundle_of(mask)) == table[mask]
    ok, _ = verify_class(v, "submodular")
    assert ok


def test_coverage_rejects_self_loop():
    with pytest.raises(DomainError):
        CoverageValuation(2, [(1, 1, 1)])


def test_xos_explicit_value_and_clause():
    v = XOSExplicitValuation(2, [(2, 0), (1, 1)])
    assert v.value({0}) == 2
    assert v.value({0, 1}) == 2
    clause = v.xos_clause({0, 1})
    assert sum(clause.values()) == 2
    ok, _ = verify_class(v, "xos")
    assert ok


def test_default_clause_is_legal_for_submodular():
    rng = seeded(11)
    for _ in range(20):
        v = random_submodular_table(rng, 4)
        for mask in range(16):
            S = bundle_of(mask)
            ok, problem = check_clause(v, S, v.xos_clause(S))
            assert ok, problem


def test_clause_checker_catches_overshoot():
    v = AdditiveValuation(2, (1, 1))
    ok, problem = check_clause(v, {0}, {0: Fraction(2)})
    assert not ok
    assert problem


def test_verify_class_additive():
    assert verify_class(AdditiveValuation(3, (1, 2, 3)), "additive")[0]
    v = BudgetAdditiveValuation(2, 1, (1, 1))
    assert not verify_class(v, "additive")[0]


def test_xos_verifier_accepts_and_rejects():
    v = TableValuation(2, [0, 1, 1, Fraction(3, 2)])
    assert verify_class(v, "subadditive")[0]
    assert verify_class(v, "xos")[0]
    # all-or-nothing: no clause can reach v(full) while staying under v on singles
    w = TableValuation(2, [0, 0, 0, 1])
    assert not verify_class(w, "xos")[0]


def test_json_round_trip_all_kinds():
    rng = seeded(5)
    vs = [
        AdditiveValuation(3, (Fraction(1, 2), 2, 0)),
        BudgetAdditiveValuation(3, Fraction(5, 2), (1, 2, 3)),
        TableValuation(2, [0, 1, 1, Fraction(3, 2)]),
        XOSExplicitValuation(2, [(1, 0), (Fraction(1, 2), Fraction(1, 2))]),
        CoverageValuation(3, [(0, 1, Fraction(2, 3)), (1, 2, 1)]),
    ]
    for v in vs:
        w = valuation_from_json(v.to_json())
        assert type(w) is type(v)
        for mask in range(1 << v.m):
            S = bundle_of(mask)
            assert w.value(S) == v.value(S)


def test_unknown_kind_rejected():
    with pytest.raises(DomainError):
        valuation_from_json({"kind": "mystery", "m": 2})


def test_ledger_counts_queries():
    v = AdditiveValuation(2, (1, 2))
    v.value({0})
    v.value({1})
    v.marginal(0, {1})
    v.demand((0, 0))
    v.xos_clause({0, 1})
    assert v.ledger.snapshot() == {"value": 4, "demand": 1, "xos": 1}
    assert v.ledger.total() == 6


def test_demand_rejects_bad_prices():
    v = AdditiveValuation(2, (1, 2))
    with pytest.raises(DomainError):
        v.demand((1,))
    with pytest.raises(DomainError):
        v.demand((-1, 0))


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_budget_additive_demand_matches_brute(seed):
    rng = seeded(seed)
    m = rng.randint(2, 6)
    v = random_budget_additive(rng, m)
    prices = [Fraction(rng.randint(0, 6), rng.randint(1, 3)) for _ in range(m)]
    want, want_profit = brute_demand(v, prices)
    got = v.demand(prices)
    assert got == want
    assert v.value(got) - sum((prices[j] for j in got), Fraction(0)) == want_profit


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_table_demand_matches_brute(seed):
    rng = seeded(seed)
    m = rng.randint(2, 5)
    v = random_submodular_table(rng, m)
    prices = [Fraction(rng.randint(0, 8), rng.randint(1, 3)) for _ in range(m)]
    want, _ = brute_demand(v, prices)
    assert v.demand(prices) == want
