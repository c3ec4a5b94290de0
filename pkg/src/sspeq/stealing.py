"""Iterative stealing: marginal bids, single-item steals, ordering policies.

Each bidder keeps a full ordering of the items in which its owned items form
a prefix. Bids on owned items are marginals against the preceding owned items;
bids elsewhere are zero. A steal moves one item to a bidder whose marginal
exceeds the standing bid, after which bids are recomputed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .money import Money, money_gcd
from .valuations import (
    BudgetAdditiveValuation,
    CapabilityError,
    DomainError,
    as_bundle,
    bundle_of,
    iter_bits,
)
from .auction import check_allocation, prices_from_bids

ORDERING_POLICIES = ("stolen-last", "static")


class OrderingState:
    """Per-bidder item orderings with the owned-prefix invariant."""

    def __init__(self, orders):
        self.orders = [list(o) for o in orders]

    @classmethod
    def owner_first(cls, alloc, m: int):
        orders = []
        for S in alloc:
            owned = sorted(S)
            rest = sorted(set(range(m)) - set(S))
            orders.append(owned + rest)
        return cls(orders)

    def copy(self):
        return OrderingState(self.orders)

    def steal_update(self, thief: int, victim: int, item: int, thief_owned_before: int, policy: str):
        if policy == "static":
            return
        if policy != "stolen-last":
            raise DomainError(f"unknown ordering policy {policy!r}")
        to = self.orders[thief]
        to.remove(item)
        to.insert(thief_owned_before, item)
        vo = self.orders[victim]
        vo.remove(item)
        vo.append(item)

    def check_owner_prefix(self, alloc) -> bool:
        for order, S in zip(self.orders, alloc):
            if set(order[: len(S)]) != set(S):
                return False
        return True


def compute_bids(valuations, alloc, ordering: OrderingState):
    """Marginal bids along each bidder's ordering, zero off the owned bundle."""
    m = valuations[0].m
    alloc = check_allocation(alloc, len(valuations), m)
    bids = []
    for i, v in enumerate(valuations):
        row = [Fraction(0)] * m
        seen = set()
        for j in ordering.orders[i]:
            if j not in alloc[i]:
                continue
            row[j] = v.marginal(j, seen)
            seen.add(j)
        bids.append(tuple(row))
    return tuple(bids)


def find_steal(valuations, alloc, bids):
    """Lexicographically smallest (thief, victim, item) with a strictly
    profitable single-item steal, or None."""
    owner = {}
    for i, S in enumerate(alloc):
        for j in S:
            owner[j] = i
    for thief in range(len(valuations)):
        for victim in range(len(valuations)):
            if victim == thief:
                continue
            for j in sorted(alloc[victim]):
                if valuations[thief].marginal(j, alloc[thief]) > bids[victim][j]:
                    return (thief, victim, j)
    return None


@dataclass
class StealEvent:
    thief: int
    victim: int
    item: int
    welfare_before: Money
    welfare_after: Money
    prices_after: tuple
    tag: str = None


@dataclass
class StealLog:
    initial_alloc: tuple
    initial_prices: tuple
    events: list = field(default_factory=list)

    def steals(self) -> int:
        return len(self.events)


@dataclass
class StealRun:
    alloc: tuple
    bids: tuple
    ordering: OrderingState
    log: StealLog


class StealCapExceeded(Exception):
    def __init__(self, cap, log):
        super().__init__(f"stealing did not settle within {cap} steps")
        self.cap = cap
        self.log = log


def _welfare_quiet(valuations, alloc) -> Money:
    return sum((v._value(S) for v, S in zip(valuations, alloc)), Fraction(0))


def run_iterative_stealing(
    valuations,
    init_alloc,
    policy: str = "stolen-last",
    step_cap: int = 100_000,
    classifier=None,
) -> StealRun:
    """Run single-item stealing to quiescence. The optional classifier tags
    each event from the pre-steal state."""
    if policy not in ORDERING_POLICIES:
        raise DomainError(f"policy must be one of {ORDERING_POLICIES}")
    m = valuations[0].m
    alloc = list(check_allocation(init_alloc, len(valuations), m))
    ordering = OrderingState.owner_first(alloc, m)
    bids = compute_bids(valuations, alloc, ordering)
    log = StealLog(tuple(alloc), prices_from_bids(bids))
    while True:
        steal = find_steal(valuations, alloc, bids)
        if steal is None:
            return StealRun(tuple(alloc), bids, ordering, log)
        if len(log.events) >= step_cap:
            raise StealCapExceeded(step_cap, log)
        thief, victim, item = steal
        tag = classifier(valuations, alloc, bids, steal) if classifier else None
        w_before = _welfare_quiet(valuations, alloc)
        thief_owned_before = len(alloc[thief])
        alloc[thief] = alloc[thief] | {item}
        alloc[victim] = alloc[victim] - {item}
        ordering.steal_update(thief, victim, item, thief_owned_before, policy)
        bids = compute_bids(valuations, alloc, ordering)
        log.events.append(
            StealEvent(
                thief,
                victim,
                item,
                w_before,
                _welfare_quiet(valuations, alloc),
                prices_from_bids(bids),
                tag,
            )
        )


# -- budget-additive bookkeeping ----------------------------------------------


def classify_loose_tight(valuations, alloc, bids):
    """Per owned item: 'tight', 'loose', or 'strongly_loose' (price zero).

    An owned item is loose when its standing price sits strictly below the
    owner's singleton value.
    """
    for v in valuations:
        if not isinstance(v, BudgetAdditiveValuation):
            raise DomainError("loose/tight classification needs budget-additive bidders")
    prices = prices_from_bids(bids)
    out = {}
    for i, S in enumerate(alloc):
        for j in S:
            single = valuations[i]._value(frozenset({j}))
            if prices[j] < single:
                out[j] = "strongly_loose" if prices[j] == 0 else "loose"
            else:
                out[j] = "tight"
    return out


def budget_additive_steal_bound(n: int, m: int) -> int:
    return (n * m + 1) * (n * m) + m + n * m


def run_budget_additive_stealing(valuations, init_alloc, step_cap=None) -> StealRun:
    """Stolen-goes-last stealing for budget-additive bidders with loose/tight
    tags on every event; exceeding the settlement bound raises (it would
    indicate a bug, not a hard instance)."""
    for v in valuations:
        if not isinstance(v, BudgetAdditiveValuation):
            raise DomainError("budget-additive stealing needs budget-additive bidders")
    n, m = len(valuations), valuations[0].m
    if step_cap is None:
        step_cap = budget_additive_steal_bound(n, m)

    def classifier(vals, alloc, bids, steal):
        _, victim, item = steal
        tags = classify_loose_tight(vals, alloc, bids)
        return tags[item]

    return run_iterative_stealing(
        valuations, init_alloc, policy="stolen-last", step_cap=step_cap, classifier=classifier
    )


# -- settlement bounds ---------------------------------------------------------


def marginal_diversity(v, j: int) -> int:
    """Number of distinct marginals of item j across all bundles avoiding it."""
    if v.m > 12:
        raise CapabilityError("marginal diversity capped at m=12")
    rest = v.full_mask & ~(1 << j)
    seen = set()
    sub = rest
    while True:
        base = v._value_mask(sub)
        seen.add(v._value_mask(sub | (1 << j)) - base)
        if sub == 0:
            break
        sub = (sub - 1) & rest
    return len(seen)


def pseudo_poly_steal_bound(valuations) -> int:
    """Sum over bidders and items of marginal diversity; every steal strictly
    raises some item's standing bid through that bidder's marginal set."""
    return sum(marginal_diversity(v, j) for v in valuations for j in range(v.m))


def granularity_steal_bound(valuations):
    """n * vmax / gcd of all positive marginal differences (None if all flat)."""
    delta = Fraction(0)
    vmax = Fraction(0)
    for v in valuations:
        if v.m > 12:
            raise CapabilityError("granularity bound capped at m=12")
        vmax = max(vmax, v._value_mask(v.full_mask))
        for mask in range(1 << v.m):
            for j in iter_bits(v.full_mask & ~mask):
                diff = v._value_mask(mask | (1 << j)) - v._value_mask(mask)
                delta = money_gcd(delta, diff)
    if delta == 0:
        return None
    return len(valuations) * vmax / delta
