"""Sensitive valuations on the odd graph, an adaptive query adversary, and
the equilibrium characterization they support.

A sensitive valuation is determined by a sparse map of size-(m'+1) bundles to
small bump coefficients k in (0, 1/4). Its closed form by bundle size is
m'-g / |S| / max(m'+1/4+max k inside, B-clause floor) / m'+1, with literal
constants g=20, h=10 requiring m >= 43; smaller (g, h) families exist only so
exhaustive cross-checks can run at toy sizes. The adversary colors cut-off
small components of the odd graph with strictly increasing values so that no
queried vertex can be certified a local maximum until it concedes.
"""

from __future__ import annotations

import itertools
import math
import random
from collections import deque
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
    bundle_key,
    bundle_of,
    iter_bits,
    mask_of,
    register_kind,
)

LITERAL_G = 20
LITERAL_H = 10
KMAP_CAP = 100_000
WINDOW_QUERY_FACTOR = 10
DEMAND_PIVOT_FACTOR = 50


# -- odd graph ------------------------------------------------------------------


def odd_graph_vertices(mp: int):
    """All masks of size-(mp+1) subsets of [2mp+1]."""
    return [mask_of(c) for c in itertools.combinations(range(2 * mp + 1), mp + 1)]

def odd_graph_neighbors(mp: int, mask: int):
    full = (1 << (2 * mp + 1)) - 1
    comp = full ^ mask
    return [comp | (1 << j) for j in iter_bits(mask)]


def odd_graph_partner(mp: int, mask: int, j: int) -> int:
    if not (mask >> j) & 1:
        raise DomainError("partner item must belong to the bundle")
    full = (1 << (2 * mp + 1)) - 1
    return (full ^ mask) | (1 << j)


def odd_graph_distance(mp: int, a: int, b: int) -> int:
    if a == b:
        return 0
    i = (a & b).bit_count()
    return min(2 * (mp + 1 - i), 2 * i - 1)


def odd_graph_ball_size(mp: int, radius: int) -> int:
    total = 0
    for i in range(1, mp + 2):
        d = 0 if i == mp + 1 else min(2 * (mp + 1 - i), 2 * i - 1)
        if d <= radius:
            total += math.comb(mp + 1, i) * math.comb(mp, mp + 1 - i)
    return total


def _fourth_root_floor(x: int) -> int:
    return math.isqrt(math.isqrt(x))


def query_lower_bound(m: int) -> int:
    """Smallest q with (m' q)^4 >= 2^(3m'-4), the concede query floor."""
    if m % 2 == 0 or m < 5:
        raise DomainError("need odd m >= 5")
    mp = m // 2
    target = 1 << (3 * mp - 4)
    lo, hi = 1, 2
    while (mp * hi) ** 4 < target:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if (mp * mid) ** 4 >= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


def cover_bound_formula(m: int) -> int:
    """Polynomial cap on the demand-cover size; documentation artifact."""
    if m <= 0:
        raise DomainError("need m > 0")
    return 1000 * m ** 765


# -- sensitive valuations ---------------------------------------------------------


class SensitiveValuation(Valuation):
    """Closed-form XOS valuation with sparse size-(m'+1) bumps.

    demand() maximizes over nonempty bundles only.
    """

    kind = "sensitive"

    def __init__(self, m, k_map=None, default_k=None, clause_items=None,
                 g=LITERAL_G, h=LITERAL_H):
        super().__init__(m)
        if m % 2 == 0:
            raise DomainError("need odd m")
        self.mp = m // 2
        self.g = int(g)
        self.h = int(h)
        if (self.g, self.h) == (LITERAL_G, LITERAL_H) and m < 43:
            raise DomainError("the literal family needs m >= 43")
        if self.g < 1 or self.mp - self.g < 1:
            raise DomainError("need 1 <= g < m'")
        if self.h < 2 or self.mp + self.h > m:
            raise DomainError("need 2 <= h <= m'+1")
        if default_k is None:
            default_k = Fraction(1, 2 ** (m + 4))
        self.default_k = parse_money(default_k)
        if not 0 < self.default_k < Fraction(1, 4):
            raise DomainError("default k must sit in (0, 1/4)")
        self.k_map = {}
        if k_map:
            for bundle, k in dict(k_map).items():
                bmask = bundle if isinstance(bundle, int) else mask_of(as_bundle(bundle))
                if bmask.bit_count() != self.mp + 1 or bmask >= 1 << m:
                    raise DomainError("k_map keys must be size-(m'+1) bundles")
                kv = parse_money(k)
                if not 0 < kv < Fraction(1, 4):
                    raise DomainError("stored k must sit in (0, 1/4)")
                if kv < self.default_k:
                    raise DomainError("stored bumps must not undercut the default")
                self.k_map[bmask] = kv
        if len(self.k_map) > KMAP_CAP:
            raise CapabilityError("k_map support too large")
        self.clause_items = {}
        if clause_items:
            for bundle, j in dict(clause_items).items():
                bmask = bundle if isinstance(bundle, int) else mask_of(as_bundle(bundle))
                if not (bmask >> j) & 1:
                    raise DomainError("clause item must belong to its bundle")
                self.clause_items[bmask] = int(j)

    def b_floor(self, s: int) -> Money:
        return Fraction((self.mp + 1) * s, self.mp + self.h)

    def max_k_inside(self, mask: int) -> Money:
        """Max bump over stored size-(m'+1) subsets; default_k counts whenever
        some subset is unstored."""
        s = mask.bit_count()
        best = None
        stored = 0
        for bmask, k in self.k_map.items():
            if bmask & mask == bmask:
                stored += 1
                if best is None or k > best:
                    best = k
        if stored < math.comb(s, self.mp + 1):
            best = self.default_k if best is None else max(best, self.default_k)
        return best

    def _value_mask(self, mask):
        s = mask.bit_count()
        if s == 0:
            return Fraction(0)
        if s <= self.mp - self.g:
            return Fraction(self.mp - self.g)
        if s <= self.mp:
            return Fraction(s)
        if s >= self.mp + self.h:
            return Fraction(self.mp + 1)
        return max(self.mp + Fraction(1, 4) + self.max_k_inside(mask), self.b_floor(s))

    def _value(self, S):
        return self._value_mask(mask_of(S))

    def _argmax_stored_inside(self, mask):
        best = None
        for bmask, k in self.k_map.items():
            if bmask & mask == bmask:
                key = (-k, bundle_key(bundle_of(bmask)))
                if best is None or key < best[0]:
                    best = (key, bmask, k)
        return None if best is None else (best[1], best[2])

    def _some_unstored_inside(self, S):
        for combo in itertools.combinations(sorted(S), self.mp + 1):
            if mask_of(combo) not in self.k_map:
                return frozenset(combo)
        return None

    def sensitive_clause(self, S):
        """Clause dict plus family tag, preferring C over A over M over B."""
        S = as_bundle(S)
        if any(j < 0 or j >= self.m for j in S):
            raise DomainError("clause bundle out of range")
        s = len(S)
        if s == 0:
            return {}, "A"
        if s <= self.mp - self.g:
            return {min(S): Fraction(self.mp - self.g)}, "C"
        if s <= self.mp:
            padded = sorted(S)
            for j in range(self.m):
                if len(padded) == self.mp:
                    break
                if j not in S:
                    padded.append(j)
            return {j: Fraction(1) for j in sorted(padded)}, "A"
        if s >= self.mp + self.h:
            core = sorted(S)[: self.mp + self.h]
            w = Fraction(self.mp + 1, self.mp + self.h)
            return {j: w for j in core}, "B"
        m_term = self.mp + Fraction(1, 4) + self.max_k_inside(mask_of(S))
        b_term = self.b_floor(s)
        if m_term >= b_term:
            stored = self._argmax_stored_inside(mask_of(S))
            if stored is not None and self.mp + Fraction(1, 4) + stored[1] == m_term:
                core_mask, k = stored
            else:
                core_mask, k = mask_of(self._some_unstored_inside(S)), self.default_k
            core = bundle_of(core_mask)
            j = self.clause_items.get(core_mask, min(core))
            clause = {i: Fraction(1) for i in sorted(core)}
            clause[j] = Fraction(1, 4) + k
            return clause, "M"
        padded = sorted(S)
        for j in range(self.m):
            if len(padded) == self.mp + self.h:
                break
            if j not in S:
                padded.append(j)
        w = Fraction(self.mp + 1, self.mp + self.h)
        return {j: w for j in sorted(padded)}, "B"

    def _xos_clause(self, S):
        return self.sensitive_clause(S)[0]

    def _demand(self, prices):
        return sparse_demand_oracle(self, prices)

    def to_json(self):
        return {
            "kind": "sensitive",
            "m": self.m,
            "g": self.g,
            "h": self.h,
            "default_k": format_money(self.default_k),
            "k_map": [
                [sorted(bundle_of(bmask)), format_money(k)]
                for bmask, k in sorted(self.k_map.items(), key=lambda e: bundle_key(bundle_of(e[0])))
            ],
            "clause_items": [
                [sorted(bundle_of(bmask)), j]
                for bmask, j in sorted(self.clause_items.items(), key=lambda e: bundle_key(bundle_of(e[0])))
            ],
        }


register_kind(
    "sensitive",
    lambda d: SensitiveValuation(
        d["m"],
        k_map={frozenset(b): k for b, k in d.get("k_map", [])},
        default_k=d.get("default_k"),
        clause_items={frozenset(b): j for b, j in d.get("clause_items", [])},
        g=d.get("g", LITERAL_G),
        h=d.get("h", LITERAL_H),
    ),
)


@dataclass
class LocalMaxCertificate:
    bundle: frozenset
    item: int
    value: Money
    partner_value: Money


def is_j_local_max(sv: SensitiveValuation, S, j: int) -> bool:
    cert = j_local_max_certificate(sv, S, j)
    return cert.value >= cert.partner_value


def j_local_max_certificate(sv: SensitiveValuation, S, j: int) -> LocalMaxCertificate:
    S = as_bundle(S)
    if len(S) != sv.mp + 1:
        raise DomainError("local maxima live on size-(m'+1) bundles")
    if j not in S:
        raise DomainError("item must belong to the bundle")
    mask = mask_of(S)
    partner = odd_graph_partner(sv.mp, mask, j)
    return LocalMaxCertificate(S, j, sv._value_mask(mask), sv._value_mask(partner))


def eq_char_check(sv: SensitiveValuation, alloc) -> bool:
    """Two-bidder allocation sizes must be (m', m'+1) and the large side a
    j-local maximum through its recorded M clause."""
    if len(alloc) != 2:
        raise DomainError("the characterization is for two bidders")
    a, b = as_bundle(alloc[0]), as_bundle(alloc[1])
    if a | b != sv.all_items or len(a) + len(b) != sv.m:
        raise DomainError("allocation must partition the items")
    if sorted((len(a), len(b))) != [sv.mp, sv.mp + 1]:
        return False
    big = a if len(a) == sv.mp + 1 else b
    clause, tag = sv.sensitive_clause(big)
    if tag != "M":
        return False
    designated = [j for j, w in clause.items() if w != 1]
    if len(designated) != 1:
        return False
    return is_j_local_max(sv, big, designated[0])


# -- sparse exact demand -----------------------------------------------------------


def sparse_demand_oracle(sv: SensitiveValuation, prices):
    """Exact profit maximizer over nonempty bundles.

    Candidates are the cheapest prefix of every size plus, for window sizes,
    every stored bundle padded with the cheapest outsiders. A stored bundle
    inside a window prefix yields the identical padded candidate, so the
    prefix only needs its default-bump value and only when some subset is
    unstored; a candidate whose profit upper bound (value cap minus the
    cheapest conceivable cost of its size) falls strictly below the running
    best cannot win any tie and is skipped.
    """
    if len(sv.k_map) > KMAP_CAP:
        raise CapabilityError("k_map support too large for sparse demand")
    prices = [parse_money(p) for p in prices]
    if len(prices) != sv.m or any(p < 0 for p in prices):
        raise DomainError("need one price >= 0 per item")
    order = sorted(range(sv.m), key=lambda j: (prices[j], j))
    prefix_cost = [Fraction(0)]
    for j in order:
        prefix_cost.append(prefix_cost[-1] + prices[j])
    best_profit, best = None, None

    def consider(profit, bundle):
        nonlocal best_profit, best
        if best_profit is None or better_demand(profit, bundle, best_profit, best):
            best_profit, best = profit, bundle

    window = range(sv.mp + 1, sv.mp + sv.h)
    for s in range(1, sv.m + 1):
        if s in window:
            continue
        bundle = frozenset(order[:s])
        consider(sv._value_mask(mask_of(bundle)) - prefix_cost[s], bundle)
    stored = len(sv.k_map)
    for s in window:
        pm = mask_of(frozenset(order[:s]))
        room = math.comb(s, sv.mp + 1)
        if room > stored:
            unstored = True
        else:
            inside = sum(1 for b in sv.k_map if b & pm == b)
            unstored = inside < room
        if not unstored:
            continue
        value = sv.b_floor(s)
        bump = sv.mp + Fraction(1, 4) + sv.default_k
        if bump > value:
            value = bump
        consider(value - prefix_cost[s], frozenset(order[:s]))
    if not sv.k_map:
        return best
    max_pad = sv.h - 2
    base_cost = prefix_cost[sv.mp + 1]
    floor_cap = max(sv.b_floor(s) - prefix_cost[s] for s in window)
    quarter = sv.mp + Fraction(1, 4)
    items = list(sv.k_map.items())
    for bmask, k in reversed(items):
        if (
            best_profit is not None
            and quarter + k - base_cost < best_profit
            and floor_cap < best_profit
        ):
            continue
        cost0 = Fraction(0)
        for j in bundle_of(bmask):
            cost0 += prices[j]
        outsiders = []
        out_cost = [Fraction(0)]
        for j in order:
            if len(outsiders) == max_pad:
                break
            if not (bmask >> j) & 1:
                outsiders.append(j)
                out_cost.append(out_cost[-1] + prices[j])
        mterm = quarter + k
        for pad in range(max_pad + 1):
            s = sv.mp + 1 + pad
            value = mterm if mterm >= sv.b_floor(s) else sv.b_floor(s)
            profit = value - cost0 - out_cost[pad]
            if best_profit is not None and profit < best_profit:
                continue
            bundle = frozenset(bundle_of(bmask)) | frozenset(outsiders[:pad])
            consider(profit, bundle)
    return best


def _cheapest_vertex_iter(m: int, mp: int, prices):
    """Size-(m'+1) bundles in nondecreasing price order (ties by index
    vector), enumerated lazily through a heap."""
    import heapq

    order = sorted(range(m), key=lambda j: (prices[j], j))
    k = mp + 1

    def cost(idxs):
        return sum((prices[order[i]] for i in idxs), Fraction(0))

    start = tuple(range(k))
    heap = [(cost(start), start)]
    seen = {start}
    while heap:
        c, idxs = heapq.heappop(heap)
        yield c, frozenset(order[i] for i in idxs)
        for t in range(k):
            nxt = idxs[t] + 1
            if nxt < m and (t == k - 1 or nxt < idxs[t + 1]):
                cand = idxs[:t] + (nxt,) + idxs[t + 1 :]
                if cand not in seen:
                    seen.add(cand)
                    heapq.heappush(heap, (cost(cand), cand))


# -- the adversary -----------------------------------------------------------------


@dataclass
class AdversaryAnswer:
    vertex: frozenset
    value: Money
    k: Money
    clause: dict | None
    clause_item: int | None
    replay: bool
    conceded: bool


@dataclass
class _ColoredVertex:
    value: Money
    k: Money
    clause_item: int | None
    order: int


class OddGraphAdversary:
    """Adaptive value/clause answers over the odd graph on size-(m'+1) bundles.

    Small components cut off from the uncolored region are colored with
    distance-graded values before each fresh query is assigned the next
    counter value; the recorded clause always points at a later, larger
    vertex, so no transcript certifies a local maximum before CONCEDE.
    """

    def __init__(self, m: int, g=LITERAL_G, h=LITERAL_H, seed: int = 0):
        probe = SensitiveValuation(m, g=g, h=h)
        self.m = m
        self.mp = probe.mp
        self.g = probe.g
        self.h = probe.h
        self.literal = (self.g, self.h) == (LITERAL_G, LITERAL_H)
        self.eps = Fraction(1, 2 ** (m + 3))
        self.default_k = self.eps / 2
        self.c_small = _fourth_root_floor(1 << (3 * self.mp - 4)) if 3 * self.mp > 4 else 1
        self.full_mask = (1 << m) - 1
        self.colored = {}
        self.order = []
        self.q_set = set()
        self.q_list = []
        self.x = 0
        self.conceded = False
        self.transcript = []
        self.stats = []
        self.rng = random.Random(seed)
        self.walk_ok = odd_graph_ball_size(self.mp, 4) > self.c_small

    def num_queries(self) -> int:
        return len(self.q_set)

    def _check_vertex(self, S):
        S = as_bundle(S)
        if len(S) != self.mp + 1 or any(j < 0 or j >= self.m for j in S):
            raise DomainError("queries must be size-(m'+1) bundles")
        return S

    def _blocked(self, mask) -> bool:
        return mask in self.colored or mask in self.q_set

    def _clear(self, v: int, obstacles) -> bool:
        for w in obstacles:
            i = (v & w).bit_count()
            if i < 3 or i > self.mp - 2:
                return False
        return True

    def _random_step(self, cur: int) -> int:
        pick = self.rng.randrange(self.mp + 1)
        rest = cur
        for _ in range(pick):
            rest &= rest - 1
        b = rest & -rest
        return (self.full_mask ^ cur) | b

    def _component(self, start: int, obstacles):
        """(reached, materialized, is_small) for start's component in the
        uncolored non-queried region; capped BFS is the only small verdict."""
        reached = {start}
        if self.walk_ok:
            cur = start
            steps = 0
            limit = 8 * (self.mp + 2)
            while steps < limit:
                for _ in range(4):
                    if steps >= limit:
                        break
                    steps += 1
                    cand = self._random_step(cur)
                    if not self._blocked(cand):
                        cur = cand
                        reached.add(cand)
                if self._clear(cur, obstacles):
                    return reached, len(reached), False
        visited = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in odd_graph_neighbors(self.mp, v):
                if w in visited or self._blocked(w):
                    continue
                visited.add(w)
                if len(visited) > self.c_small:
                    reached |= visited
                    return reached, len(reached), False
                queue.append(w)
        reached |= visited
        return visited, len(reached), True

    def _bump(self) -> Money:
        self.x += 1
        k = self.x * self.eps
        if k >= Fraction(1, 4):
            raise ConstructionError("counter escaped the k range")
        return k

    def _color_component(self, qmask: int, comp):
        dist = {}
        frontier = deque()
        for w in odd_graph_neighbors(self.mp, qmask):
            if w in comp and w not in dist:
                dist[w] = 1
                frontier.append(w)
        while frontier:
            v = frontier.popleft()
            for w in odd_graph_neighbors(self.mp, v):
                if w in comp and w not in dist:
                    dist[w] = dist[v] + 1
                    frontier.append(w)
        if len(dist) != len(comp):
            raise ConstructionError("component must hang off the query")
        for w in sorted(comp, key=lambda v: (-dist[v], bundle_key(bundle_of(v)))):
            k = self._bump()
            parents = [
                p
                for p in odd_graph_neighbors(self.mp, w)
                if (p == qmask and dist[w] == 1) or dist.get(p, -1) == dist[w] - 1
            ]
            parent = min(parents, key=lambda p: bundle_key(bundle_of(p)))
            j = (w & parent).bit_length() - 1
            self.colored[w] = _ColoredVertex(self.mp + Fraction(1, 4) + k, k, j, len(self.order))
            self.order.append(w)

    def answer(self, S) -> AdversaryAnswer:
        S = self._check_vertex(S)
        mask = mask_of(S)
        if mask in self.colored:
            rec = self.colored[mask]
            self.q_set.add(mask)
            ans = AdversaryAnswer(
                S, rec.value, rec.k, self._clause_of(mask, rec), rec.clause_item,
                True, rec.clause_item is None,
            )
            self.transcript.append(ans)
            self.stats.append({"materialized": 0, "replay": True})
            return ans
        self.q_set.add(mask)
        self.q_list.append(mask)
        obstacles = [mask] + list(self.colored.keys())
        materialized = 0
        known_big = set()
        for nb in sorted(odd_graph_neighbors(self.mp, mask), key=lambda v: bundle_key(bundle_of(v))):
            if self._blocked(nb) or nb in known_big:
                continue
            reached, used, small = self._component(nb, obstacles)
            materialized += used
            if small:
                self._color_component(mask, reached)
                obstacles.extend(reached)
            else:
                known_big |= reached
        k = self._bump()
        value = self.mp + Fraction(1, 4) + k
        uncolored = [
            nb
            for nb in odd_graph_neighbors(self.mp, mask)
            if nb not in self.colored
        ]
        if uncolored:
            target = min(uncolored, key=lambda v: bundle_key(bundle_of(v)))
            j = (mask & target).bit_length() - 1
        else:
            self.conceded = True
            j = None
        rec = _ColoredVertex(value, k, j, len(self.order))
        self.colored[mask] = rec
        self.order.append(mask)
        ans = AdversaryAnswer(S, value, k, self._clause_of(mask, rec), j, False, j is None)
        self.transcript.append(ans)
        self.stats.append({"materialized": materialized, "replay": False})
        return ans

    def _clause_of(self, mask: int, rec: _ColoredVertex):
        if rec.clause_item is None:
            return None
        clause = {i: Fraction(1) for i in bundle_of(mask)}
        clause[rec.clause_item] = Fraction(1, 4) + rec.k
        return clause

    def view(self) -> SensitiveValuation:
        """The sensitive valuation realized so far (defaults elsewhere)."""
        return SensitiveValuation(
            self.m,
            k_map={mask: rec.k for mask, rec in self.colored.items()},
            default_k=self.default_k,
            clause_items={
                mask: rec.clause_item
                for mask, rec in self.colored.items()
                if rec.clause_item is not None
            },
            g=self.g,
            h=self.h,
        )

    def value_query(self, S) -> Money:
        """Value answers for any bundle size; window sizes may force vertex
        queries on their uncolored size-(m'+1) subsets."""
        S = as_bundle(S)
        if any(j < 0 or j >= self.m for j in S):
            raise DomainError("bundle out of range")
        s = len(S)
        if s == self.mp + 1:
            return self.answer(S).value
        if s <= self.mp or s >= self.mp + self.h:
            return self.view()._value(S)
        subsets = list(itertools.combinations(sorted(S), self.mp + 1))
        pending = [c for c in subsets if mask_of(c) not in self.colored]
        if len(pending) > WINDOW_QUERY_FACTOR * self.m:
            raise CapabilityError("window value query would force too many vertex queries")
        for c in pending:
            self.answer(frozenset(c))
        return self.view()._value(S)

    def demand_query(self, prices):
        """Exact demand against the realized map; while an unassigned vertex
        could still beat the best determined profit, the cheapest one is
        processed as a fresh query."""
        prices = [parse_money(p) for p in prices]
        if len(prices) != self.m or any(p < 0 for p in prices):
            raise DomainError("need one price >= 0 per item")
        half = self.mp + Fraction(1, 2)
        view = self.view()
        D = sparse_demand_oracle(view, prices)
        best = view._value(D) - sum((prices[j] for j in D), Fraction(0))
        feed = _cheapest_vertex_iter(self.m, self.mp, prices)
        cur = next(feed, None)
        processed = 0
        while True:
            while cur is not None and mask_of(cur[1]) in self.colored:
                cur = next(feed, None)
            if cur is None or half - cur[0] <= best:
                break
            processed += 1
            if processed > DEMAND_PIVOT_FACTOR * self.m:
                raise CapabilityError("demand pivoting exceeded its query cap")
            ans = self.answer(cur[1])
            profit = ans.value - cur[0]
            if profit > best:
                best = profit
        view = self.view()
        D = sparse_demand_oracle(view, prices)
        return D


def adversary_audit(adv: OddGraphAdversary):
    """Transcript realizability and safety checks; bound assertions only
    apply to the literal family."""
    problems = []
    seen = set()
    last_value = None
    view = adv.view()
    for mask in adv.order:
        if mask in seen:
            problems.append(("reassigned", bundle_of(mask)))
        seen.add(mask)
        rec = adv.colored[mask]
        if last_value is not None and rec.value <= last_value:
            problems.append(("value-not-increasing", bundle_of(mask)))
        last_value = rec.value
        if not 0 < rec.k < Fraction(1, 4):
            problems.append(("k-out-of-range", bundle_of(mask)))
        if view._value_mask(mask) != rec.value:
            problems.append(("value-mismatch", bundle_of(mask)))
        if rec.clause_item is not None:
            partner = odd_graph_partner(adv.mp, mask, rec.clause_item)
            if partner in adv.colored:
                prec = adv.colored[partner]
                if prec.order <= rec.order or prec.value <= rec.value:
                    problems.append(("partner-not-later-larger", bundle_of(mask)))
    for ans in adv.transcript:
        mask = mask_of(ans.vertex)
        rec = adv.colored.get(mask)
        if rec is None or rec.value != ans.value:
            problems.append(("transcript-mismatch", tuple(sorted(ans.vertex))))
        elif ans.clause is not None:
            legal = sum(ans.clause.values()) == ans.value and all(
                (mask >> i) & 1 for i in ans.clause
            )
            if not legal:
                problems.append(("clause-not-attaining", tuple(sorted(ans.vertex))))
    if adv.literal:
        cap = (adv.c_small + 1) * (adv.mp + 2)
        for i, st in enumerate(adv.stats):
            if st["materialized"] > cap:
                problems.append(("materialization-cap", i))
        if adv.conceded and adv.num_queries() < query_lower_bound(adv.m):
            problems.append(("concede-before-bound", adv.num_queries()))
    return (not problems), problems


# -- searchers ----------------------------------------------------------------------


@dataclass
class SearchResult:
    queries: int
    conceded: bool
    certified: bool
    certificate: LocalMaxCertificate | None = None
    steps: int = 0


class _CertTracker:
    """Local-max certification from revealed answers only, both directions."""

    def __init__(self, mp):
        self.mp = mp
        self.known = {}
        self.by_partner = {}
        self.hit = None

    def add(self, ans: AdversaryAnswer):
        mask = mask_of(ans.vertex)
        if mask in self.known:
            return
        self.known[mask] = ans
        if ans.clause_item is not None:
            partner = odd_graph_partner(self.mp, mask, ans.clause_item)
            other = self.known.get(partner)
            if other is not None and other.value <= ans.value:
                self.hit = LocalMaxCertificate(
                    ans.vertex, ans.clause_item, ans.value, other.value
                )
            self.by_partner.setdefault(partner, []).append(mask)
        for waiting in self.by_partner.get(mask, []):
            wans = self.known[waiting]
            if ans.value <= wans.value:
                self.hit = LocalMaxCertificate(
                    wans.vertex, wans.clause_item, wans.value, ans.value
                )


def _sync(tracker: _CertTracker, adv: OddGraphAdversary, upto: int) -> int:
    for ans in adv.transcript[upto:]:
        tracker.add(ans)
    return len(adv.transcript)


def hill_climb_search(adv: OddGraphAdversary, budget: int, start=None) -> SearchResult:
    """Follow each answer's designated item to its partner vertex."""
    S = as_bundle(start) if start is not None else frozenset(range(adv.mp + 1))
    tracker = _CertTracker(adv.mp)
    seen = 0
    steps = 0
    while adv.num_queries() < budget:
        ans = adv.answer(S)
        steps += 1
        seen = _sync(tracker, adv, seen)
        if ans.conceded or tracker.hit is not None:
            break
        S = bundle_of(odd_graph_partner(adv.mp, mask_of(S), ans.clause_item))
    return SearchResult(adv.num_queries(), adv.conceded, tracker.hit is not None, tracker.hit, steps)


def random_probe_search(adv: OddGraphAdversary, budget: int, seed: int = 0) -> SearchResult:
    """Query uniformly random fresh vertices."""
    rng = random.Random(seed)
    tracker = _CertTracker(adv.mp)
    asked = set()
    seen = 0
    steps = 0
    while adv.num_queries() < budget:
        S = None
        for _ in range(64):
            cand = frozenset(rng.sample(range(adv.m), adv.mp + 1))
            if mask_of(cand) not in asked:
                S = cand
                break
        if S is None:
            for combo in itertools.combinations(range(adv.m), adv.mp + 1):
                if mask_of(combo) not in asked:
                    S = frozenset(combo)
                    break
        if S is None:
            break
        asked.add(mask_of(S))
        ans = adv.answer(S)
        steps += 1
        seen = _sync(tracker, adv, seen)
        if ans.conceded or tracker.hit is not None:
            break
    return SearchResult(adv.num_queries(), adv.conceded, tracker.hit is not None, tracker.hit, steps)


def best_reply_search(adv: OddGraphAdversary, budget: int) -> SearchResult:
    """Two simulated bidders: the large side bids its answered clause, the
    small side responds with an exact demand (pivots count as queries)."""
    big = frozenset(range(adv.mp + 1))
    tracker = _CertTracker(adv.mp)
    seen = 0
    steps = 0
    while adv.num_queries() < budget:
        ans = adv.answer(big)
        steps += 1
        seen = _sync(tracker, adv, seen)
        if ans.conceded or tracker.hit is not None:
            break
        prices = [Fraction(0)] * adv.m
        for j, w in ans.clause.items():
            prices[j] = w
        try:
            D = adv.demand_query(prices)
        except CapabilityError:
            D = None
        seen = _sync(tracker, adv, seen)
        if tracker.hit is not None:
            break
        if D is not None and len(D) == adv.mp + 1 and D != big:
            big = D
        else:
            big = bundle_of(odd_graph_partner(adv.mp, mask_of(big), ans.clause_item))
    return SearchResult(adv.num_queries(), adv.conceded, tracker.hit is not None, tracker.hit, steps)


SEARCHERS = {
    "hill": hill_climb_search,
    "random": lambda adv, budget: random_probe_search(adv, budget, seed=0),
    "bestreply": best_reply_search,
}


# -- isoperimetry --------------------------------------------------------------------


ISO_EXHAUSTIVE_CAP = 22


def isoperimetric_check(n: int, samples: int | None = None, seed: int = 0):
    """Max internal-edge counts per subset size in O_n, with the exact bound
    2^(3E) <= k^(2k) and the neighbor corollary k^(4k) >= 2^(3n(k-|N|))."""
    if n < 2:
        raise DomainError("need n >= 2")
    verts = [mask_of(c) for c in itertools.combinations(range(2 * n - 1), n - 1)]
    nv = len(verts)
    if samples is None and nv > ISO_EXHAUSTIVE_CAP:
        raise CapabilityError("exhaustive mode needs a small odd graph")
    adj = [0] * nv
    for a in range(nv):
        for b in range(a + 1, nv):
            if verts[a] & verts[b] == 0:
                adj[a] |= 1 << b
                adj[b] |= 1 << a

    max_edges = {}
    failures = []

    def scan(subset_mask: int):
        k = subset_mask.bit_count()
        if k < 1:
            return
        edges = 0
        nbhd = 0
        v = subset_mask
        while v:
            low = v & -v
            idx = low.bit_length() - 1
            edges += (adj[idx] & subset_mask).bit_count()
            nbhd |= adj[idx]
            v ^= low
        edges //= 2
        if k not in max_edges or edges > max_edges[k]:
            max_edges[k] = edges
        if 2 ** (3 * edges) > k ** (2 * k):
            failures.append(("edge-bound", k, edges))
        outside = (nbhd & ~subset_mask).bit_count()
        if k > outside and k ** (4 * k) < 2 ** (3 * n * (k - outside)):
            failures.append(("neighbor-bound", k, outside))

    if samples is None:
        for subset_mask in range(1, 1 << nv):
            scan(subset_mask)
        mode = "exhaustive"
    else:
        rng = random.Random(seed)
        for a in range(nv):
            for b in range(a + 1, nv):
                scan((1 << a) | (1 << b))
        for _ in range(samples):
            k = rng.randint(2, nv)
            subset_mask = 0
            for idx in rng.sample(range(nv), k):
                subset_mask |= 1 << idx
            scan(subset_mask)
        mode = "sampled"
    floors = {k: (2 * k * math.log2(k)) / 3 for k in max_edges}
    return {
        "n": n,
        "vertices": nv,
        "mode": mode,
        "max_edges": dict(sorted(max_edges.items())),
        "bound_floor": {k: math.floor(v) for k, v in sorted(floors.items())},
        "ok": not failures,
        "failures": failures,
    }
