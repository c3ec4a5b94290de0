"""Best-reply dynamics for two XOS bidders, and the exponential-path instance.

The dynamic keeps a bid profile; the allocation is always resolve(bids). Each
response computes an exact demand against the rival's bids and moves only on a
strict utility improvement, rebidding an XOS clause of the new bundle; on a
stay it rebids the canonical clause of the current bundle, so a terminated run
is traditional. The adversarial instance assigns the middle-levels path
position of each size-(m'+1) bundle as its value bump, which makes every step
exchange exactly one item and raises the winning-bid sum by exactly eps.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .money import Money, format_money, parse_money
from .valuations import (
    CapabilityError,
    ConstructionError,
    DomainError,
    Valuation,
    as_bundle,
    better_demand,
    bundle_of,
    mask_of,
    register_kind,
)
from .auction import check_allocation, resolve

GRAY_M_CAP = 25
GRAY_DEMAND_CAP = 15


# -- middle-levels path -------------------------------------------------------


def _mid_neighbors(mask: int, m: int, mp: int):
    w = mask.bit_count()
    out = []
    if w == mp:
        for j in range(m):
            if not (mask >> j) & 1:
                out.append(mask | (1 << j))
    else:
        for j in range(m):
            if (mask >> j) & 1:
                out.append(mask ^ (1 << j))
    return out


def gray_middle_levels(m: int):
    """Hamilton path through all bitstrings of weight m' and m'+1 (m odd),
    consecutive strings differing in one bit. Output-verified before return."""
    if m % 2 == 0:
        raise DomainError("need odd m")
    if not 3 <= m <= GRAY_M_CAP:
        raise DomainError(f"need 3 <= m <= {GRAY_M_CAP}")
    mp = m // 2
    total = 2 * math.comb(m, mp)
    start = (1 << mp) - 1
    path = None
    for attempt in range(30):
        path = _search_path(m, mp, start, total, attempt)
        if path is not None:
            break
    if path is None:
        raise ConstructionError("middle-levels path search exhausted its attempts")
    _verify_path(path, m, mp, total)
    return ["".join("1" if (mask >> j) & 1 else "0" for j in range(m)) for mask in path]


def _search_path(m, mp, start, total, attempt):
    rng = random.Random(attempt)
    visited = {start}
    path = [start]
    backtracks = 0

    def candidates(u):
        cands = [v for v in _mid_neighbors(u, m, mp) if v not in visited]
        if attempt > 0:
            rng.shuffle(cands)
        deg = {}
        for v in cands:
            deg[v] = sum(1 for w in _mid_neighbors(v, m, mp) if w not in visited)
        need = total - len(path) - 1
        kept = [v for v in cands if deg[v] > 0 or need == 0]
        # descending degree so list.pop() yields the most constrained vertex
        kept.sort(key=lambda v: -deg[v])
        return kept

    stack = [candidates(start)]
    while stack:
        if len(path) == total:
            return path
        frame = stack[-1]
        if not frame:
            stack.pop()
            visited.discard(path.pop())
            backtracks += 1
            if backtracks > 200_000:
                return None
            continue
        nxt = frame.pop()
        visited.add(nxt)
        path.append(nxt)
        stack.append(candidates(nxt))
    return None


def _verify_path(path, m, mp, total):
    if len(path) != total:
        raise ConstructionError("path has the wrong length")
    if len(set(path)) != total:
        raise ConstructionError("path repeats a vertex")
    for mask in path:
        if mask.bit_count() not in (mp, mp + 1):
            raise ConstructionError("path leaves the middle levels")
    for a, b in zip(path, path[1:]):
        if (a ^ b).bit_count() != 1:
            raise ConstructionError("consecutive codewords differ in more than one bit")
    if path[0].bit_count() != mp:
        raise ConstructionError("path must start at weight m'")


# -- the exponential instance --------------------------------------------------


class GrayValuation(Valuation):
    """Size-driven submodular valuation whose size-(m'+1) bundles get a bump
    of (path position) * eps: |S| below the middle is worth |S|, above is
    worth m'+1. Ones of each codeword are player 1's items, zeros player 0's."""

    kind = "gray_exponential"

    def __init__(self, m: int, player: int, path_masks, eps):
        super().__init__(m)
        if m % 2 == 0:
            raise DomainError("need odd m")
        if player not in (0, 1):
            raise DomainError("player must be 0 or 1")
        self.player = player
        self.mp = m // 2
        self.path_masks = list(path_masks)
        self.L = len(self.path_masks)
        self.pos = {mask: i for i, mask in enumerate(self.path_masks)}
        self.eps = parse_money(eps)
        if self.eps <= 0 or (self.L - 1) * self.eps >= Fraction(1, 2):
            raise DomainError("need 0 < (path length - 1) * eps < 1/2")

    def codeword_of(self, bmask: int) -> int:
        return bmask if self.player == 1 else self.full_mask ^ bmask

    def k_of(self, bmask: int) -> int:
        return self.pos.get(self.codeword_of(bmask), 0)

    def _value_mask(self, mask):
        s = mask.bit_count()
        if s == 0:
            return Fraction(0)
        if s <= self.mp:
            return Fraction(s)
        if s == self.mp + 1:
            return self.mp + Fraction(1, 2) + self.k_of(mask) * self.eps
        return Fraction(self.mp + 1)

    def _value(self, S):
        return self._value_mask(mask_of(S))

    def designated_item(self, bmask: int) -> int:
        """The item leaving this size-(m'+1) bundle on the path's next step."""
        cw = self.codeword_of(bmask)
        q = self.pos[cw]
        if q + 1 < self.L:
            flip = cw ^ self.path_masks[q + 1]
        else:
            flip = bmask & -bmask
        return flip.bit_length() - 1

    def _xos_clause(self, S):
        s = len(S)
        if s <= self.mp:
            return {j: Fraction(1) for j in sorted(S)}
        if s == self.mp + 1:
            bmask = mask_of(S)
            d = self.designated_item(bmask)
            clause = {j: Fraction(1) for j in sorted(S)}
            clause[d] = Fraction(1, 2) + self.k_of(bmask) * self.eps
            return clause
        w = Fraction(self.mp + 1, s)
        return {j: w for j in sorted(S)}

    def _demand(self, prices):
        order = sorted(range(self.m), key=lambda j: (prices[j], j))
        prefix_cost = [Fraction(0)]
        for j in order:
            prefix_cost.append(prefix_cost[-1] + prices[j])
        best_profit, best = Fraction(0), frozenset()
        best_k = -1

        def consider(profit, S, k=-1):
            nonlocal best_profit, best, best_k
            if profit == best_profit and k > best_k and len(S) == self.mp + 1:
                best_profit, best, best_k = profit, S, k
                return
            if better_demand(profit, S, best_profit, best):
                best_profit, best, best_k = profit, S, k

        for s in range(1, self.m + 1):
            if s == self.mp + 1:
                continue
            val = Fraction(min(s, self.mp)) if s <= self.mp else Fraction(self.mp + 1)
            consider(val - prefix_cost[s], frozenset(order[:s]))
        if self.m > GRAY_DEMAND_CAP:
            raise CapabilityError(f"exact middle-level demand capped at m={GRAY_DEMAND_CAP}")
        for combo in itertools.combinations(range(self.m), self.mp + 1):
            bmask = mask_of(combo)
            k = self.k_of(bmask)
            profit = self.mp + Fraction(1, 2) + k * self.eps - sum(
                (prices[j] for j in combo), Fraction(0)
            )
            consider(profit, frozenset(combo), k)
        return best

    def to_json(self):
        return {
            "kind": "gray_exponential",
            "m": self.m,
            "player": self.player,
            "eps": format_money(self.eps),
        }


# -- oracles --------------------------------------------------------------------


class GreedyOrderingOracle:
    """Clause queries answered by the valuation's own clause rule."""

    def __init__(self, valuation: Valuation):
        self.valuation = valuation

    def clause(self, S) -> dict:
        return self.valuation.xos_clause(S)


class AdaptiveGrayOracle:
    """Clause oracle for a GrayValuation that records, in first-touch order,
    the path-position coefficient committed for each queried middle bundle."""

    def __init__(self, valuation: GrayValuation):
        self.valuation = valuation
        self.k_map = {}
        self.touch_order = []

    def clause(self, S) -> dict:
        S = as_bundle(S)
        out = self.valuation.xos_clause(S)
        if len(S) == self.valuation.mp + 1:
            bmask = mask_of(S)
            if bmask not in self.k_map:
                self.k_map[bmask] = self.valuation.k_of(bmask)
                self.touch_order.append(bmask)
        return out


def build_exponential_instance(m: int, eps=None):
    """Two mirrored gray valuations, adaptive oracles, and the path's first
    allocation (player 0 takes the zeros side, which has size m'+1)."""
    strings = gray_middle_levels(m)
    path_masks = [
        sum(1 << j for j, ch in enumerate(s) if ch == "1") for s in strings
    ]
    L = len(path_masks)
    if eps is None:
        eps = Fraction(1, 2 * L)
    v0 = GrayValuation(m, 0, path_masks, eps)
    v1 = GrayValuation(m, 1, path_masks, eps)
    oracles = (AdaptiveGrayOracle(v0), AdaptiveGrayOracle(v1))
    w0 = path_masks[0]
    init_alloc = (bundle_of(v0.full_mask ^ w0), bundle_of(w0))
    return v0, v1, oracles, init_alloc


register_kind(
    "gray_exponential",
    lambda d: GrayValuation(
        d["m"],
        d["player"],
        [
            sum(1 << j for j, ch in enumerate(s) if ch == "1")
            for s in gray_middle_levels(d["m"])
        ],
        d["eps"],
    ),
)


# -- the dynamic -----------------------------------------------------------------


@dataclass
class DynamicStep:
    responder: int
    alloc: tuple
    winning_sum: Money


@dataclass
class DynamicTrace:
    initial_alloc: tuple
    initial_sum: Money
    rows: list = field(default_factory=list)
    responses: int = 0
    truncated: bool = False

    def exchanges(self) -> int:
        return len(self.rows)


@dataclass
class DynamicRun:
    alloc: tuple
    bids: tuple
    trace: DynamicTrace


def _winning_sum(bids) -> Money:
    m = len(bids[0])
    return sum((max(row[j] for row in bids) for j in range(m)), Fraction(0))


def _clause_row(oracle, S, m):
    clause = oracle.clause(S)
    row = [Fraction(0)] * m
    for j, w in clause.items():
        row[j] = w
    return tuple(row)


def run_best_reply_dynamic(v0, v1, oracles=None, init_alloc=None, step_cap: int = 10_000):
    """Alternating exact-demand responses with strict-improvement gating.

    The allocation is always resolve(bids). A terminated (non-truncated) run
    has canonical clause bids, hence is traditional.
    """
    valuations = (v0, v1)
    m = v0.m
    if v1.m != m:
        raise DomainError("valuations disagree on m")
    if oracles is None:
        oracles = tuple(GreedyOrderingOracle(v) for v in valuations)
    if init_alloc is None:
        raise DomainError("need an initial allocation")
    init_alloc = check_allocation(init_alloc, 2, m)
    bids = [
        _clause_row(oracles[0], init_alloc[0], m),
        _clause_row(oracles[1], init_alloc[1], m),
    ]
    alloc, _ = resolve(bids)
    trace = DynamicTrace(alloc, _winning_sum(bids))
    responder = 1
    quiet = 0
    while quiet < 2:
        if trace.responses >= step_cap:
            trace.truncated = True
            break
        rival = bids[1 - responder]
        current = valuations[responder]._value(alloc[responder]) - sum(
            (rival[j] for j in alloc[responder]), Fraction(0)
        )
        D = valuations[responder].demand(rival)
        profit = valuations[responder]._value(D) - sum((rival[j] for j in D), Fraction(0))
        target = D if profit > current else alloc[responder]
        new_row = _clause_row(oracles[responder], target, m)
        changed_bids = new_row != bids[responder]
        bids[responder] = new_row
        new_alloc, _ = resolve(bids)
        if new_alloc != alloc:
            alloc = new_alloc
            trace.rows.append(DynamicStep(responder, alloc, _winning_sum(bids)))
            quiet = 0
        elif changed_bids:
            quiet = 0
        else:
            quiet += 1
        trace.responses += 1
        responder = 1 - responder
    return DynamicRun(alloc, tuple(bids), trace)


def dynamic_trace_audit(trace: DynamicTrace):
    """Strictly increasing winning-bid sums across exchange rows."""
    last = trace.initial_sum
    for row in trace.rows:
        if row.winning_sum <= last:
            return False, {"at": row, "previous": last}
        last = row.winning_sum
    return True, None
