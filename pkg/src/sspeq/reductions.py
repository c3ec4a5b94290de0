"""Two-bidder subadditive gadget over set-pair systems, plus the max-cut
correspondence between 1-flip-optimal cuts and procedure-bid equilibria.

Set-pair valuations take values in {0, 1, 2}: 2 for big bundles or a flagged
own pair, 1 otherwise. With a commonly flagged pair index the tiny-bid
witness is an equilibrium; without one, an unprotected set (value 2, rival
bids summing below 1) yields a strictly improving deviation, found by the
flagged-pair case split with a generic scan as fallback.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from .money import Money, format_money, parse_money
from .valuations import (
    ConstructionError,
    CoverageValuation,
    DomainError,
    Valuation,
    as_bundle,
    bundle_key,
    mask_of,
    register_kind,
)
from .auction import is_pure_nash_no_overbid, resolve, welfare
from .stealing import OrderingState, compute_bids, find_steal

SETPAIR_RETRY_FACTOR = 4000


# -- set-pair systems ---------------------------------------------------------


@dataclass
class SetPairSystem:
    m: int
    pairs: list

    def count(self) -> int:
        return len(self.pairs)

    def to_json(self):
        return {
            "m": self.m,
            "pairs": [[sorted(a), sorted(b)] for a, b in self.pairs],
        }

    @classmethod
    def from_json(cls, d):
        return cls(d["m"], [(frozenset(a), frozenset(b)) for a, b in d["pairs"]])


def verify_set_pair_system(system: SetPairSystem):
    """All definition invariants by exact set arithmetic."""
    m = system.m
    problems = []
    if m % 8 != 0 or m < 8:
        problems.append(("m-not-multiple-of-8", m))
        return False, problems
    quarter, eighth = m // 4, m // 8
    for r, (a, b) in enumerate(system.pairs):
        if not (a <= frozenset(range(m)) and b <= frozenset(range(m))):
            problems.append(("items-out-of-range", r))
        if len(a) != quarter or len(b) != quarter:
            problems.append(("pair-size", r))
        if a & b:
            problems.append(("pair-not-disjoint", r))
    for r, (a1, _) in enumerate(system.pairs):
        for l, (_, b2) in enumerate(system.pairs):
            if r == l:
                continue
            cross = len(a1 & b2)
            if not 0 < cross <= eighth:
                problems.append(("cross-intersection", r, l, cross))
    return (not problems), problems


def build_good_set_pair_system(m: int, count: int, seed: int = 0) -> SetPairSystem:
    """Rejection-sampled system; invariants re-verified before return."""
    if m % 8 != 0 or m < 8:
        raise DomainError("need m a multiple of 8, at least 8")
    if count < 1:
        raise DomainError("need count >= 1")
    rng = random.Random(seed)
    quarter, eighth = m // 4, m // 8
    pairs = []
    budget = SETPAIR_RETRY_FACTOR * count
    while len(pairs) < count:
        if budget <= 0:
            raise ConstructionError("set-pair sampling exhausted its retries")
        budget -= 1
        a = frozenset(rng.sample(range(m), quarter))
        b = frozenset(rng.sample(sorted(frozenset(range(m)) - a), quarter))
        ok = True
        for a2, b2 in pairs:
            if not 0 < len(a & b2) <= eighth or not 0 < len(a2 & b) <= eighth:
                ok = False
                break
        if ok:
            pairs.append((a, b))
    system = SetPairSystem(m, pairs)
    good, problems = verify_set_pair_system(system)
    if not good:
        raise ConstructionError(f"sampled system failed verification: {problems}")
    return system


class SetPairValuation(Valuation):
    """{0,1,2}-valued subadditive valuation from a side of a set-pair system."""

    kind = "set_pair"

    def __init__(self, system: SetPairSystem, flags, player: int):
        super().__init__(system.m)
        if player not in (0, 1):
            raise DomainError("player must be 0 or 1")
        flags = tuple(int(f) for f in flags)
        if len(flags) != system.count() or any(f not in (0, 1) for f in flags):
            raise DomainError("flags must be one bit per pair")
        self.system = system
        self.flags = flags
        self.player = player
        self.threshold = 3 * system.m // 4 + 1
        self.flagged_masks = [
            mask_of(pair[player])
            for pair, f in zip(system.pairs, flags)
            if f == 1
        ]

    def flagged_pairs(self):
        return [
            pair[self.player]
            for pair, f in zip(self.system.pairs, self.flags)
            if f == 1
        ]

    def _value_mask(self, mask):
        s = mask.bit_count()
        if s == 0:
            return Fraction(0)
        if s >= self.threshold:
            return Fraction(2)
        for fm in self.flagged_masks:
            if fm & mask == fm:
                return Fraction(2)
        return Fraction(1)

    def _value(self, S):
        return self._value_mask(mask_of(S))

    def to_json(self):
        return {
            "kind": "set_pair",
            "system": self.system.to_json(),
            "flags": list(self.flags),
            "player": self.player,
        }


register_kind(
    "set_pair",
    lambda d: SetPairValuation(SetPairSystem.from_json(d["system"]), d["flags"], d["player"]),
)


def equilibrium_witness(system: SetPairSystem, flags1, flags2, k: int):
    """Tiny bids on the commonly flagged pair; both utilities are exactly 2."""
    flags1, flags2 = tuple(flags1), tuple(flags2)
    if not (0 <= k < system.count()):
        raise DomainError("pair index out of range")
    if not (flags1[k] == 1 and flags2[k] == 1):
        raise DomainError("the witness needs a commonly flagged pair")
    m = system.m
    eps = Fraction(1, 4 * m)
    rows = []
    for side in (0, 1):
        row = [Fraction(0)] * m
        for j in system.pairs[k][side]:
            row[j] = eps
        rows.append(tuple(row))
    return tuple(rows)


@dataclass
class UnprotectedDeviation:
    bidder: int
    unprotected: frozenset
    case: str
    rival_total: Money
    bids: tuple
    expected_utility: Money


def find_unprotected_set(valuations, bids):
    """Weak-side deviation through an unprotected set, or None.

    Follows the flagged-pair case split: a flagged pair T with rival bids
    summing below 1 wins outright; if the sum is exactly 1 and the rival
    bids nothing off T, all items but one positive-bid item work. A generic
    scan over cheapest big prefixes, flagged pairs, and one-item deletions
    decides existence otherwise.
    """
    if len(valuations) != 2 or len(bids) != 2:
        raise DomainError("the gadget is a two-bidder game")
    m = valuations[0].m
    alloc, _ = resolve(bids)
    weak = None
    for i in (0, 1):
        if valuations[i]._value(alloc[i]) <= 1:
            weak = i
            break
    if weak is None:
        raise DomainError("no weak side: both bundles have value 2")
    dev = valuations[weak]
    rival = bids[1 - weak]
    all_items = frozenset(range(m))

    def rival_sum(S):
        return sum((rival[j] for j in S), Fraction(0))

    def finish(U, case):
        total = rival_sum(U)
        delta = (1 - total) / (m + 1)
        row = [Fraction(0)] * m
        for j in U:
            row[j] = rival[j] + delta
        return UnprotectedDeviation(weak, U, case, total, tuple(row), 2 - total)

    for T in dev.flagged_pairs():
        if rival_sum(T) < 1:
            return finish(T, "flagged-pair")
    for T in dev.flagged_pairs():
        if rival_sum(T) == 1 and all(rival[j] == 0 for j in all_items - T):
            jp = min(j for j in T if rival[j] > 0)
            return finish(all_items - {jp}, "all-but-one")
    order = sorted(range(m), key=lambda j: (rival[j], j))
    candidates = [frozenset(order[: dev.threshold])]
    candidates.extend(dev.flagged_pairs())
    candidates.extend(all_items - {j} for j in range(m))
    best = None
    for U in candidates:
        if dev._value(U) != 2:
            continue
        total = rival_sum(U)
        if total >= 1:
            continue
        key = (total, len(U), bundle_key(U))
        if best is None or key < best[0]:
            best = (key, U)
    if best is None:
        return None
    return finish(best[1], "scan")


# -- max-cut reduction ---------------------------------------------------------


@dataclass
class WeightedGraph:
    vertices: int
    edges: list

    def __post_init__(self):
        seen = set()
        norm = []
        for u, v, w in self.edges:
            if u == v:
                raise DomainError("self-loops are not allowed")
            if not (0 <= u < self.vertices and 0 <= v < self.vertices):
                raise DomainError("edge endpoint out of range")
            w = parse_money(w)
            if w < 0:
                raise DomainError("edge weights must be >= 0")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DomainError("duplicate edge")
            seen.add(key)
            norm.append((key[0], key[1], w))
        self.edges = norm

    def total_weight(self) -> Money:
        return sum((w for _, _, w in self.edges), Fraction(0))

    def cut_weight(self, side) -> Money:
        side = as_bundle(side)
        return sum(
            (w for u, v, w in self.edges if (u in side) != (v in side)),
            Fraction(0),
        )

    def to_json(self):
        return {
            "vertices": self.vertices,
            "edges": [[u, v, format_money(w)] for u, v, w in self.edges],
        }

    @classmethod
    def from_json(cls, d):
        return cls(d["vertices"], [(e[0], e[1], parse_money(e[2])) for e in d["edges"]])


def maxcut_valuation(graph: WeightedGraph) -> CoverageValuation:
    """Items are vertices; a bundle is worth the weight of edges it touches."""
    return CoverageValuation(graph.vertices, graph.edges)


def local_max_check(valuations, alloc):
    """True iff no single-item move between bidders raises welfare."""
    alloc = tuple(as_bundle(S) for S in alloc)
    for i, S in enumerate(alloc):
        for j in sorted(S):
            lost = valuations[i]._value(S) - valuations[i]._value(S - {j})
            for ip, T in enumerate(alloc):
                if ip == i:
                    continue
                gained = valuations[ip]._value(T | {j}) - valuations[ip]._value(T)
                if gained > lost:
                    return False, (i, ip, j)
    return True, None


def local_max_bids(valuations, alloc):
    """Procedure bids (owner-first marginal ordering) for a local maximum."""
    ordering = OrderingState.owner_first(alloc, valuations[0].m)
    return compute_bids(valuations, alloc, ordering)


@dataclass
class GapWitness:
    graph: WeightedGraph
    alloc: tuple
    bids: tuple
    orders: tuple
    move: tuple
    seed: int | None


def star_gap_instance() -> GapWitness:
    """Deterministic two-edge star whose ordering bids overprotect: the
    profile is an equilibrium but moving the far leaf raises welfare."""
    graph = WeightedGraph(3, [(0, 1, Fraction(1)), (0, 2, Fraction(1))])
    vals = (maxcut_valuation(graph), maxcut_valuation(graph))
    alloc = (frozenset({2}), frozenset({0, 1}))
    orders = ((2, 0, 1), (1, 0, 2))
    bids = compute_bids(vals, alloc, OrderingState([list(o) for o in orders]))
    return GapWitness(graph, alloc, bids, orders, (1, 0, 1), None)


def _random_graph(rng: random.Random, nv: int) -> WeightedGraph:
    edges = []
    for u in range(nv):
        for v in range(u + 1, nv):
            if rng.random() < 0.6:
                edges.append((u, v, Fraction(rng.randint(1, 4))))
    return WeightedGraph(nv, edges)


def equilibrium_not_local_max_search(seeds, max_vertices: int = 8):
    """Random graphs, allocations, and bid orderings; returns the first
    no-steal profile that is a brute-certified equilibrium while the cut
    still admits an improving flip, else None."""
    for seed in seeds:
        rng = random.Random(seed)
        nv = rng.randint(3, max_vertices)
        graph = _random_graph(rng, nv)
        if len(graph.edges) < 2:
            continue
        vals = (maxcut_valuation(graph), maxcut_valuation(graph))
        side = frozenset(v for v in range(nv) if rng.random() < 0.5)
        alloc = (side, frozenset(range(nv)) - side)
        orders = []
        for S in alloc:
            own = sorted(S)
            rng.shuffle(own)
            rest = sorted(set(range(nv)) - S)
            orders.append(own + rest)
        ordering = OrderingState(orders)
        bids = compute_bids(vals, alloc, ordering)
        if find_steal(vals, alloc, bids) is not None:
            continue
        is_lm, move = local_max_check(vals, alloc)
        if is_lm:
            continue
        ok, _ = is_pure_nash_no_overbid(vals, bids, alloc)
        if ok:
            return GapWitness(graph, alloc, bids, tuple(tuple(o) for o in orders), move, seed)
    return None
