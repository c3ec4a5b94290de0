"""Simultaneous second-price auction: resolution, deviations, equilibrium checks.

Bids are n rows of m rationals. Each item goes to its highest bidder, ties to
the lowest bidder index; a winner pays, per item won, the highest rival bid.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .money import Money, parse_money
from .valuations import (
    CapabilityError,
    DomainError,
    Valuation,
    as_bundle,
    better_demand,
    bundle_of,
    iter_bits,
    iter_submasks,
    mask_of,
)

OPT_WORK_CAP = 40_000_000


def check_bids(bids, n=None, m=None):
    rows = tuple(tuple(parse_money(x) for x in row) for row in bids)
    if n is not None and len(rows) != n:
        raise DomainError(f"expected {n} bid rows, got {len(rows)}")
    if not rows:
        raise DomainError("need at least one bidder")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DomainError("ragged bid rows")
    if m is not None and width != m:
        raise DomainError(f"expected {m} items, got {width}")
    if any(x < 0 for r in rows for x in r):
        raise DomainError("bids must be nonnegative")
    return rows


def empty_bids(n: int, m: int):
    return tuple((Fraction(0),) * m for _ in range(n))


def resolve(bids):
    """Allocation and payments. Every item is assigned: highest bid wins,
    ties to the lowest bidder index; payment is the highest rival bid."""
    bids = check_bids(bids)
    n, m = len(bids), len(bids[0])
    owned = [[] for _ in range(n)]
    payments = [Fraction(0)] * n
    for j in range(m):
        winner = 0
        for i in range(1, n):
            if bids[i][j] > bids[winner][j]:
                winner = i
        owned[winner].append(j)
        rival = Fraction(0)
        for i in range(n):
            if i != winner and bids[i][j] > rival:
                rival = bids[i][j]
        payments[winner] += rival
    return tuple(frozenset(s) for s in owned), tuple(payments)


def prices_from_bids(bids):
    """Per-item standing price: the highest bid on the item."""
    bids = check_bids(bids)
    m = len(bids[0])
    return tuple(max(row[j] for row in bids) for j in range(m))


def check_allocation(alloc, n: int, m: int):
    alloc = tuple(as_bundle(S) for S in alloc)
    if len(alloc) != n:
        raise DomainError(f"expected {n} bundles, got {len(alloc)}")
    seen = set()
    for S in alloc:
        if not S <= set(range(m)):
            raise DomainError("allocation uses unknown items")
        if S & seen:
            raise DomainError("allocation bundles overlap")
        seen |= S
    return alloc


def welfare(valuations, alloc) -> Money:
    alloc = check_allocation(alloc, len(valuations), valuations[0].m)
    return sum((v.value(S) for v, S in zip(valuations, alloc)), Fraction(0))


def utility_of(valuations, i: int, alloc, payments) -> Money:
    return valuations[i].value(alloc[i]) - payments[i]


def optimal_welfare(valuations):
    """Exact optimum over partitions by bidder DP; returns (value, allocation)."""
    n = len(valuations)
    m = valuations[0].m
    if any(v.m != m for v in valuations):
        raise DomainError("valuations disagree on m")
    if n * 3 ** m > OPT_WORK_CAP:
        raise CapabilityError(f"optimal welfare DP too large for n={n}, m={m}")
    full = (1 << m) - 1
    prev = [Fraction(0)] * (1 << m)
    choices = []
    for v in valuations:
        vals = [v._value_mask(t) for t in range(1 << m)]
        cur = [Fraction(0)] * (1 << m)
        take = [0] * (1 << m)
        for mask in range(1 << m):
            best, bestT = None, 0
            for t in iter_submasks(mask):
                cand = prev[mask ^ t] + vals[t]
                if best is None or cand > best:
                    best, bestT = cand, t
            cur[mask], take[mask] = best, bestT
        choices.append(take)
        prev = cur
    opt = prev[full]
    mask = full
    picks = [0] * n
    for i in range(n - 1, -1, -1):
        picks[i] = choices[i][mask]
        mask ^= picks[i]
    return opt, tuple(bundle_of(t) for t in picks)


def check_no_overbidding(v: Valuation, bid_row):
    """Weak no-overbidding: bids on every bundle sum to at most its value.

    For monotone valuations it is enough to check subsets of the support.
    """
    bid_row = tuple(parse_money(x) for x in bid_row)
    support = [j for j, x in enumerate(bid_row) if x > 0]
    if len(support) > 18:
        raise CapabilityError("no-overbidding check capped at support size 18")
    smask = mask_of(support)
    for t in iter_submasks(smask):
        if t == 0:
            continue
        total = sum((bid_row[j] for j in iter_bits(t)), Fraction(0))
        val = v._value(bundle_of(t))
        if total > val:
            return False, {"S": sorted(bundle_of(t)), "bids": total, "value": val}
    return True, None


@dataclass
class Deviation:
    utility: Money
    bundle: frozenset
    payment: Money


def best_deviation(valuations, i: int, bids) -> Deviation:
    """Best strictly-winnable response for bidder i against the rivals' bids.

    A target T is winnable iff every nonempty S within T satisfies
    sum of standing rival prices over S < v_i(S); the deviator then pays the
    rival price on each item of T. Exact for subadditive valuations.
    """
    bids = check_bids(bids)
    n, m = len(bids), len(bids[0])
    v = valuations[i]
    if v.m != m:
        raise DomainError("valuation does not match bid width")
    if m > 18:
        raise CapabilityError("best deviation capped at m=18")
    prices = []
    for j in range(m):
        p = Fraction(0)
        for k in range(n):
            if k != i and bids[k][j] > p:
                p = bids[k][j]
        prices.append(p)
    size = 1 << m
    psum = [Fraction(0)] * size
    for mask in range(1, size):
        low = mask & -mask
        psum[mask] = psum[mask ^ low] + prices[low.bit_length() - 1]
    blocked = bytearray(size)
    for mask in range(1, size):
        if psum[mask] >= v._value_mask(mask):
            blocked[mask] = 1
        else:
            mm = mask
            while mm:
                low = mm & -mm
                if blocked[mask ^ low]:
                    blocked[mask] = 1
                    break
                mm ^= low
    best_u, best_S, best_pay = Fraction(0), frozenset(), Fraction(0)
    for mask in range(1, size):
        if blocked[mask]:
            continue
        u = v._value_mask(mask) - psum[mask]
        if u < best_u:
            continue
        S = bundle_of(mask)
        if better_demand(u, S, best_u, best_S):
            best_u, best_S, best_pay = u, S, psum[mask]
    return Deviation(best_u, best_S, best_pay)


def is_pure_nash_no_overbid(valuations, bids, alloc=None):
    """Full equilibrium check: consistent allocation, no overbidding, and no
    strictly profitable deviation for any bidder. Returns (ok, witnesses)."""
    bids = check_bids(bids, n=len(valuations))
    res_alloc, payments = resolve(bids)
    witnesses = []
    if alloc is not None:
        alloc = check_allocation(alloc, len(valuations), valuations[0].m)
        if tuple(alloc) != res_alloc:
            witnesses.append({"kind": "allocation-mismatch", "resolved": res_alloc})
    for i, v in enumerate(valuations):
        ok, w = check_no_overbidding(v, bids[i])
        if not ok:
            witnesses.append({"kind": "overbidding", "bidder": i, **w})
    for i, v in enumerate(valuations):
        current = v._value(res_alloc[i]) - payments[i]
        dev = best_deviation(valuations, i, bids)
        if dev.utility > current:
            witnesses.append(
                {
                    "kind": "deviation",
                    "bidder": i,
                    "bundle": sorted(dev.bundle),
                    "utility": dev.utility,
                    "current": current,
                }
            )
    return not witnesses, witnesses


def is_traditional(valuations, alloc, bids, oracles=None):
    """Bids equal an XOS clause of the owned bundle and are zero elsewhere."""
    bids = check_bids(bids, n=len(valuations))
    alloc = check_allocation(alloc, len(valuations), valuations[0].m)
    if oracles is None:
        oracles = valuations
    for i, v in enumerate(valuations):
        ask = getattr(oracles[i], "xos_clause", None) or oracles[i].clause
        clause = ask(alloc[i])
        for j in range(v.m):
            expected = clause.get(j, Fraction(0)) if j in alloc[i] else Fraction(0)
            if bids[i][j] != expected:
                return False, {"bidder": i, "item": j, "bid": bids[i][j], "clause": expected}
    return True, None


def greedy_allocation(valuations):
    """Item-by-item max-marginal assignment, ties to the lowest bidder."""
    n = len(valuations)
    m = valuations[0].m
    owned = [set() for _ in range(n)]
    for j in range(m):
        best_i, best_gain = 0, None
        for i, v in enumerate(valuations):
            gain = v.marginal(j, owned[i])
            if best_gain is None or gain > best_gain:
                best_i, best_gain = i, gain
        owned[best_i].add(j)
    return tuple(frozenset(s) for s in owned)
