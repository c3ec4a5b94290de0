"""Valuation families over item bundles with exact rational values.

Items are 0..m-1. Bundles are frozensets in the public API; bitmask helpers
are provided for the subset-DP heavy code. Every family keeps a QueryLedger
counting value / demand / XOS-clause queries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .money import Money, format_money, parse_money

EXHAUSTIVE_DEMAND_CAP = 16
VERIFY_CAP = {
    "normalized": 30,
    "monotone": 14,
    "submodular": 13,
    "subadditive": 10,
    "additive": 14,
    "xos": 8,
}
BB_NODE_CAP = 200_000


class DomainError(ValueError):
    """Input violates an operation's precondition."""


class CapabilityError(Exception):
    """Instance is too large for an exact routine; nothing was computed."""


class ConstructionError(Exception):
    """A randomized construction exhausted its retry budget."""


def as_bundle(S) -> frozenset:
    return S if isinstance(S, frozenset) else frozenset(S)


def mask_of(S) -> int:
    m = 0
    for j in S:
        m |= 1 << j
    return m


def bundle_of(mask: int) -> frozenset:
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return frozenset(out)


def iter_bits(mask: int):
    j = 0
    while mask:
        if mask & 1:
            yield j
        mask >>= 1
        j += 1


def iter_submasks(mask: int):
    """All submasks of mask, descending, including mask and 0."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def bundle_key(S) -> tuple:
    return tuple(sorted(S))


def better_demand(profit_a, S_a, profit_b, S_b) -> bool:
    """True if (profit_a, S_a) beats (profit_b, S_b) under the demand tie rule:
    larger profit, then smaller cardinality, then lexicographically smaller."""
    if profit_a != profit_b:
        return profit_a > profit_b
    if len(S_a) != len(S_b):
        return len(S_a) < len(S_b)
    return bundle_key(S_a) < bundle_key(S_b)


@dataclass
class QueryLedger:
    value: int = 0
    demand: int = 0
    xos: int = 0

    def total(self) -> int:
        return self.value + self.demand + self.xos

    def snapshot(self) -> dict:
        return {"value": self.value, "demand": self.demand, "xos": self.xos}


class Valuation:
    """Monotone normalized set function with exact rational values."""

    kind = "abstract"

    def __init__(self, m: int):
        if not isinstance(m, int) or m < 1:
            raise DomainError(f"need at least one item, got m={m}")
        self.m = m
        self.full_mask = (1 << m) - 1
        self.all_items = frozenset(range(m))
        self.ledger = QueryLedger()

    # -- queries ----------------------------------------------------------

    def value(self, S) -> Money:
        S = as_bundle(S)
        if not S <= self.all_items:
            raise DomainError(f"bundle {sorted(S)} not within 0..{self.m - 1}")
        self.ledger.value += 1
        return self._value(S)

    def marginal(self, j: int, S) -> Money:
        """v(j | S) = v(S + j) - v(S); two value queries."""
        S = as_bundle(S)
        return self.value(S | {j}) - self.value(S)

    def demand(self, prices) -> frozenset:
        """Profit-maximizing bundle at item prices; ties break to the smallest
        cardinality, then the lexicographically smallest sorted tuple."""
        prices = self._check_prices(prices)
        self.ledger.demand += 1
        return self._demand(prices)

    def xos_clause(self, S) -> dict:
        """Additive clause a with a(S) = v(S) and a(T) <= v(T) everywhere,
        returned as {item: weight} supported on S."""
        S = as_bundle(S)
        if not S <= self.all_items:
            raise DomainError(f"bundle {sorted(S)} not within 0..{self.m - 1}")
        self.ledger.xos += 1
        return self._xos_clause(S)

    # -- family internals --------------------------------------------------

    def _value(self, S: frozenset) -> Money:
        raise NotImplementedError

    def _value_mask(self, mask: int) -> Money:
        return self._value(bundle_of(mask))

    def _check_prices(self, prices):
        prices = tuple(parse_money(p) for p in prices)
        if len(prices) != self.m:
            raise DomainError(f"expected {self.m} prices, got {len(prices)}")
        if any(p < 0 for p in prices):
            raise DomainError("prices must be nonnegative")
        return prices

    def _demand(self, prices) -> frozenset:
        if self.m > EXHAUSTIVE_DEMAND_CAP:
            raise CapabilityError(
                f"exhaustive demand needs m <= {EXHAUSTIVE_DEMAND_CAP}, got {self.m}"
            )
        psum = [Fraction(0)] * (1 << self.m)
        for mask in range(1, 1 << self.m):
            low = mask & -mask
            psum[mask] = psum[mask ^ low] + prices[low.bit_length() - 1]
        best_profit, best = Fraction(0), frozenset()
        for mask in range(1, 1 << self.m):
            profit = self._value_mask(mask) - psum[mask]
            if profit < best_profit:
                continue
            S = bundle_of(mask)
            if better_demand(profit, S, best_profit, best):
                best_profit, best = profit, S
        return best

    def _xos_clause(self, S: frozenset) -> dict:
        # greedy ascending-index marginals; a legal clause for submodular v
        clause = {}
        prev = frozenset()
        for j in sorted(S):
            nxt = prev | {j}
            clause[j] = self._value(nxt) - self._value(prev)
            prev = nxt
        return clause

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(d: dict) -> "Valuation":
        return valuation_from_json(d)


class TableValuation(Valuation):
    """Explicit table over all 2^m bundles, indexed by bitmask."""

    kind = "table"

    def __init__(self, m: int, values, validate: bool = True):
        super().__init__(m)
        if m > 20:
            raise CapabilityError(f"table valuation capped at m=20, got {m}")
        values = [parse_money(x) for x in values]
        if len(values) != 1 << m:
            raise DomainError(f"need {1 << m} table entries, got {len(values)}")
        if values[0] != 0:
            raise DomainError("v(empty) must be 0")
        if validate and m <= VERIFY_CAP["monotone"]:
            for mask in range(1 << m):
                rest = self.full_mask & ~mask
                for j in iter_bits(rest):
                    if values[mask] > values[mask | (1 << j)]:
                        raise DomainError(
                            f"not monotone at {sorted(bundle_of(mask))} + item {j}"
                        )
        self.table = values

    def _value(self, S):
        return self.table[mask_of(S)]

    def _value_mask(self, mask):
        return self.table[mask]

    def to_json(self):
        return {
            "kind": "table",
            "m": self.m,
            "values": [format_money(x) for x in self.table],
        }


class AdditiveValuation(Valuation):
    kind = "additive"

    def __init__(self, m: int, item_values):
        super().__init__(m)
        item_values = tuple(parse_money(x) for x in item_values)
        if len(item_values) != m:
            raise DomainError(f"need {m} item values, got {len(item_values)}")
        if any(x < 0 for x in item_values):
            raise DomainError("item values must be nonnegative")
        self.item_values = item_values

    def _value(self, S):
        return sum((self.item_values[j] for j in S), Fraction(0))

    def _demand(self, prices):
        return frozenset(j for j in range(self.m) if self.item_values[j] > prices[j])

    def _xos_clause(self, S):
        return {j: self.item_values[j] for j in sorted(S)}

    def to_json(self):
        return {
            "kind": "additive",
            "m": self.m,
            "items": [format_money(x) for x in self.item_values],
        }


class BudgetAdditiveValuation(Valuation):
    """v(S) = min(budget, sum of item values over S)."""

    kind = "budget_additive"

    def __init__(self, m: int, budget, item_values):
        super().__init__(m)
        self.budget = parse_money(budget)
        if self.budget < 0:
            raise DomainError("budget must be nonnegative")
        item_values = tuple(parse_money(x) for x in item_values)
        if len(item_values) != m:
            raise DomainError(f"need {m} item values, got {len(item_values)}")
        if any(x < 0 for x in item_values):
            raise DomainError("item values must be nonnegative")
        self.item_values = item_values

    def _value(self, S):
        total = sum((self.item_values[j] for j in S), Fraction(0))
        return min(self.budget, total)

    def _demand(self, prices):
        # exact knapsack-style branch and bound over profitable items
        cand = [j for j in range(self.m) if self.item_values[j] > prices[j]]
        gains = {j: self.item_values[j] - prices[j] for j in cand}
        if sum((self.item_values[j] for j in cand), Fraction(0)) <= self.budget:
            return frozenset(cand)
        best = [Fraction(0), frozenset()]
        nodes = [0]

        def walk(idx, chosen_val, chosen_price, chosen):
            nodes[0] += 1
            if nodes[0] > BB_NODE_CAP:
                raise CapabilityError("budget-additive demand search exceeded node cap")
            profit = min(self.budget, chosen_val) - chosen_price
            S = frozenset(chosen)
            if better_demand(profit, S, best[0], best[1]):
                best[0], best[1] = profit, S
            if idx == len(cand):
                return
            remaining = sum((gains[j] for j in cand[idx:]), Fraction(0))
            if profit + remaining < best[0]:
                return
            j = cand[idx]
            chosen.append(j)
            walk(idx + 1, chosen_val + self.item_values[j], chosen_price + prices[j], chosen)
            chosen.pop()
            walk(idx + 1, chosen_val, chosen_price, chosen)

        walk(0, Fraction(0), Fraction(0), [])
        return best[1]

    def to_json(self):
        return {
            "kind": "budget_additive",
            "m": self.m,
            "budget": format_money(self.budget),
            "items": [format_money(x) for x in self.item_values],
        }


class XOSExplicitValuation(Valuation):
    """Max over an explicit list of nonnegative additive clauses."""

    kind = "xos"

    def __init__(self, m: int, clauses):
        super().__init__(m)
        parsed = []
        for c in clauses:
            row = tuple(parse_money(x) for x in c)
            if len(row) != m:
                raise DomainError(f"clause needs {m} weights, got {len(row)}")
            if any(x < 0 for x in row):
                raise DomainError("clause weights must be nonnegative")
            parsed.append(row)
        if not parsed:
            raise DomainError("need at least one clause")
        self.clauses = parsed

    def _value(self, S):
        return max(sum((c[j] for j in S), Fraction(0)) for c in self.clauses)

    def _xos_clause(self, S):
        best_val, best_c = Fraction(0), self.clauses[0]
        for c in self.clauses:
            val = sum((c[j] for j in S), Fraction(0))
            if val > best_val:
                best_val, best_c = val, c
        return {j: best_c[j] for j in sorted(S)}

    def to_json(self):
        return {
            "kind": "xos",
            "m": self.m,
            "clauses": [[format_money(x) for x in c] for c in self.clauses],
        }


class CoverageValuation(Valuation):
    """v(S) = total weight of edges with at least one endpoint in S.

    Items are graph vertices; weights are nonnegative rationals.
    """

    kind = "coverage"

    def __init__(self, m: int, edges):
        super().__init__(m)
        parsed = []
        for u, v, w in edges:
            w = parse_money(w)
            if u == v:
                raise DomainError(f"self-loop at vertex {u}")
            if not (0 <= u < m and 0 <= v < m):
                raise DomainError(f"edge ({u},{v}) outside 0..{m - 1}")
            if w < 0:
                raise DomainError("edge weights must be nonnegative")
            parsed.append((min(u, v), max(u, v), w))
        self.edges = parsed
        self._edge_masks = [((1 << u) | (1 << v), w) for u, v, w in parsed]

    def _value(self, S):
        return self._value_mask(mask_of(S))

    def _value_mask(self, mask):
        return sum((w for em, w in self._edge_masks if em & mask), Fraction(0))

    def to_json(self):
        return {
            "kind": "coverage",
            "m": self.m,
            "edges": [[u, v, format_money(w)] for u, v, w in self.edges],
        }


# -- class verification ------------------------------------------------------


def verify_class(v: Valuation, cls: str):
    """Check a valuation class property exhaustively; returns (ok, witness).

    Witnesses carry the violating bundles and both side values.
    """
    m = v.m
    if cls not in VERIFY_CAP:
        raise DomainError(f"unknown class {cls!r}")
    if m > VERIFY_CAP[cls]:
        raise CapabilityError(f"verify_class({cls}) capped at m={VERIFY_CAP[cls]}")
    if cls == "normalized":
        val = v._value(frozenset())
        if val != 0:
            return False, {"S": [], "value": val}
        return True, None
    if cls == "monotone":
        for mask in range(1 << m):
            base = v._value_mask(mask)
            for j in iter_bits(v.full_mask & ~mask):
                up = v._value_mask(mask | (1 << j))
                if base > up:
                    return False, {
                        "S": sorted(bundle_of(mask)),
                        "item": j,
                        "lhs": base,
                        "rhs": up,
                    }
        return True, None
    if cls == "submodular":
        for mask in range(1 << m):
            rest = list(iter_bits(v.full_mask & ~mask))
            base = v._value_mask(mask)
            singles = {j: v._value_mask(mask | (1 << j)) for j in rest}
            for a in range(len(rest)):
                for b in range(a + 1, len(rest)):
                    j, jp = rest[a], rest[b]
                    both = v._value_mask(mask | (1 << j) | (1 << jp))
                    if singles[j] + singles[jp] < both + base:
                        return False, {
                            "S": sorted(bundle_of(mask)),
                            "items": [j, jp],
                            "lhs": singles[j] + singles[jp],
                            "rhs": both + base,
                        }
        return True, None
    if cls == "subadditive":
        vals = [v._value_mask(mask) for mask in range(1 << m)]
        for s in range(1, 1 << m):
            for t in range(1, 1 << m):
                if vals[s] + vals[t] < vals[s | t]:
                    return False, {
                        "S": sorted(bundle_of(s)),
                        "T": sorted(bundle_of(t)),
                        "lhs": vals[s] + vals[t],
                        "rhs": vals[s | t],
                    }
        return True, None
    if cls == "additive":
        singles = [v._value_mask(1 << j) for j in range(m)]
        for mask in range(1 << m):
            total = sum((singles[j] for j in iter_bits(mask)), Fraction(0))
            if v._value_mask(mask) != total:
                return False, {"S": sorted(bundle_of(mask)), "lhs": v._value_mask(mask)}
        return True, None
    if cls == "xos":
        return _verify_xos(v)
    raise DomainError(f"unknown class {cls!r}")


def _verify_xos(v: Valuation):
    """Exact LP membership test: v is XOS iff for every S the best additive
    vector dominated by v on subsets of S reaches v(S)."""
    from sympy import Rational
    from sympy.solvers.simplex import linprog

    m = v.m
    vals = [v._value_mask(mask) for mask in range(1 << m)]
    for smask in range(1, 1 << m):
        items = list(iter_bits(smask))
        idx = {j: i for i, j in enumerate(items)}
        A, b = [], []
        for t in iter_submasks(smask):
            if t == 0:
                continue
            row = [0] * len(items)
            for j in iter_bits(t):
                row[idx[j]] = 1
            A.append(row)
            b.append(Rational(vals[t].numerator, vals[t].denominator))
        # maximize sum a_j == minimize -sum a_j; variables are >= 0
        c = [-1] * len(items)
        opt, _ = linprog(c, A=A, b=b)
        reached = Fraction(-int(opt.p), int(opt.q)) if opt.is_Rational else None
        if reached is None or reached != vals[smask]:
            return False, {"S": sorted(bundle_of(smask)), "best": -opt, "value": vals[smask]}
    return True, None


def check_clause(v: Valuation, S, clause: dict, exhaustive: bool = True):
    """Clause legality: supported on S, a(S) = v(S), and a(T) <= v(T) for all T."""
    S = as_bundle(S)
    if not set(clause) <= S:
        return False, {"reason": "support outside bundle"}
    if any(w < 0 for w in clause.values()):
        return False, {"reason": "negative weight"}
    total = sum(clause.values(), Fraction(0))
    vS = v._value(S)
    if total != vS:
        return False, {"reason": "clause sum mismatch", "sum": total, "value": vS}
    if exhaustive:
        if v.m > EXHAUSTIVE_DEMAND_CAP:
            raise CapabilityError("exhaustive clause check capped at m=16")
        for tmask in range(1, 1 << v.m):
            at = sum((clause.get(j, Fraction(0)) for j in iter_bits(tmask)), Fraction(0))
            vt = v._value_mask(tmask)
            if at > vt:
                return False, {
                    "reason": "clause exceeds value",
                    "T": sorted(bundle_of(tmask)),
                    "clause": at,
                    "value": vt,
                }
    return True, None


# -- serialization registry ---------------------------------------------------

_LOADERS = {}


def register_kind(kind: str, loader):
    _LOADERS[kind] = loader


def valuation_from_json(d: dict) -> Valuation:
    kind = d.get("kind")
    if kind not in _LOADERS:
        raise DomainError(f"unknown valuation kind {kind!r}")
    return _LOADERS[kind](d)


register_kind("table", lambda d: TableValuation(d["m"], d["values"]))
register_kind("additive", lambda d: AdditiveValuation(d["m"], d["items"]))
register_kind(
    "budget_additive",
    lambda d: BudgetAdditiveValuation(d["m"], d["budget"], d["items"]),
)
register_kind("xos", lambda d: XOSExplicitValuation(d["m"], d["clauses"]))
register_kind("coverage", lambda d: CoverageValuation(d["m"], d["edges"]))
