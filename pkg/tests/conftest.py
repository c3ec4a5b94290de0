"""Shared brute-force oracles for the test suite.

These deliberately use the dumbest correct method available (full
enumeration, direct definitions) so they stay independent from the
library's optimized code paths.
"""

import itertools
import random
from fractions import Fraction

from sspeq.valuations import (
    AdditiveValuation,
    BudgetAdditiveValuation,
    TableValuation,
    better_demand,
    bundle_of,
    mask_of,
)


def brute_coverage_table(m, edges):
    """Coverage table built by literal edge scanning per bundle."""
    table = []
    for mask in range(1 << m):
        S = {j for j in range(m) if mask >> j & 1}
        total = Fraction(0)
        for u, v, w in edges:
            if u in S or v in S:
                total += Fraction(w)
        table.append(total)
    return table


def random_additive(rng, m, lo=0, hi=8, den=4):
    vals = [Fraction(rng.randint(lo, hi), rng.randint(1, den)) for _ in range(m)]
    return AdditiveValuation(m, vals)


def random_budget_additive(rng, m, lo=0, hi=8, den=4):
    vals = [Fraction(rng.randint(lo, hi), rng.randint(1, den)) for _ in range(m)]
    total = sum(vals, Fraction(0))
    budget = Fraction(rng.randint(1, max(1, total.numerator)), 1)
    return BudgetAdditiveValuation(m, budget, vals)


def random_submodular_table(rng, m, edges_hi=6):
    """Coverage plus a capped cardinality term, built by brute enumeration."""
    edges = []
    for u in range(m):
        for v in range(u + 1, m):
            if rng.random() < 0.6:
                edges.append((u, v, Fraction(rng.randint(1, edges_hi))))
    per = Fraction(rng.randint(0, 3))
    cap = rng.randint(1, m)
    table = brute_coverage_table(m, edges)
    table = [
        val + per * min(bin(mask).count("1"), cap)
        for mask, val in enumerate(table)
    ]
    return TableValuation(m, table)


def brute_demand(v, prices):
    """Exhaustive demand with the empty bundle as baseline."""
    prices = [Fraction(p) for p in prices]
    best_profit, best = Fraction(0), frozenset()
    for mask in range(1 << v.m):
        S = bundle_of(mask)
        profit = v.value(S) - sum((prices[j] for j in S), Fraction(0))
        if better_demand(profit, S, best_profit, best):
            best_profit, best = profit, S
    return best, best_profit


def brute_best_deviation(valuations, i, bids):
    """Direct definition: a target is winnable iff every nonempty subset
    of it beats the rival prices strictly; pay rival prices on the target."""
    n = len(bids)
    m = len(bids[0])
    v = valuations[i]
    prices = []
    for j in range(m):
        p = Fraction(0)
        for k in range(n):
            if k != i and Fraction(bids[k][j]) > p:
                p = Fraction(bids[k][j])
        prices.append(p)

    def winnable(T):
        for r in range(1, len(T) + 1):
            for S in itertools.combinations(sorted(T), r):
                if sum((prices[j] for j in S), Fraction(0)) >= v.value(S):
                    return False
        return True

    best_u, best_S, best_pay = Fraction(0), frozenset(), Fraction(0)
    for mask in range(1 << m):
        T = bundle_of(mask)
        if mask and not winnable(T):
            continue
        pay = sum((prices[j] for j in T), Fraction(0))
        u = v.value(T) - pay
        if better_demand(u, T, best_u, best_S):
            best_u, best_S, best_pay = u, T, pay
    return best_u, best_S, best_pay


def brute_optimal_welfare(valuations):
    """Optimum by enumerating all n^m item assignments."""
    n = len(valuations)
    m = valuations[0].m
    best, best_alloc = None, None
    for assign in itertools.product(range(n), repeat=m):
        bundles = [set() for _ in range(n)]
        for j, i in enumerate(assign):
            bundles[i].add(j)
        total = sum(
            (v.value(S) for v, S in zip(valuations, bundles)), Fraction(0)
        )
        if best is None or total > best:
            best = total
            best_alloc = tuple(frozenset(S) for S in bundles)
    return best, best_alloc


def seeded(seed):
    return random.Random(seed)
