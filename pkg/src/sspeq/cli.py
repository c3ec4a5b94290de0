"""Command line interface: instance generation, algorithm runs, verification,
and reports. Rationals serialize as "num/den" and reports are deterministic
under a fixed seed (wall times excluded)."""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
import time
from fractions import Fraction

from .money import format_money, parse_money
from .valuations import (
    CapabilityError,
    ConstructionError,
    DomainError,
    TableValuation,
    BudgetAdditiveValuation,
    CoverageValuation,
    valuation_from_json,
    verify_class,
)
from .auction import (
    OPT_WORK_CAP,
    check_allocation,
    greedy_allocation,
    is_pure_nash_no_overbid,
    is_traditional,
    optimal_welfare,
    resolve,
    welfare,
)
from .stealing import (
    StealCapExceeded,
    budget_additive_steal_bound,
    run_budget_additive_stealing,
    run_iterative_stealing,
)
from .topsteal import TopStealDiagnostic, steal_count_bound, top_steal
from .xos_dynamics import (
    AdaptiveGrayOracle,
    GrayValuation,
    build_exponential_instance,
    dynamic_trace_audit,
    run_best_reply_dynamic,
)
from .hardness import (
    SEARCHERS,
    OddGraphAdversary,
    SensitiveValuation,
    adversary_audit,
    isoperimetric_check,
    query_lower_bound,
)
from .reductions import (
    SetPairSystem,
    SetPairValuation,
    WeightedGraph,
    build_good_set_pair_system,
    local_max_check,
    maxcut_valuation,
    verify_set_pair_system,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CAPABILITY = 2

FAMILIES = (
    "table-submodular",
    "budget-additive",
    "coverage",
    "setpair",
    "sensitive",
    "gray-exponential",
)

CERTIFY_M_CAP = 8
GEN_TABLE_M_CAP = 10


# -- serialization helpers -----------------------------------------------------


def _jsonable(x):
    if isinstance(x, Fraction):
        return format_money(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (frozenset, set)):
        return sorted(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _alloc_json(alloc):
    return [sorted(S) for S in alloc]

def _bids_json(bids):
    return [[format_money(b) for b in row] for row in bids]


def _parse_bids(rows):
    return tuple(tuple(parse_money(b) for b in row) for row in rows)


def _ledgers(valuations):
    return [v.ledger.snapshot() for v in valuations]


def _emit(report, args, trace_rows=None):
    if getattr(args, "trace_out", None) and trace_rows is not None:
        with open(args.trace_out, "w") as fh:
            for row in trace_rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    if args.format == "csv":
        buf = io.StringIO()
        keys = sorted(report)
        writer = csv.writer(buf)
        writer.writerow(keys)
        writer.writerow(
            [
                v if isinstance(v, (str, int, float)) else json.dumps(v, sort_keys=True)
                for v in (report[k] for k in keys)
            ]
        )
        text = buf.getvalue()
    else:
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _load_instance(path):
    d = _load_json(path)
    vals = tuple(valuation_from_json(v) for v in d["valuations"])
    if len(vals) != d["n"] or any(v.m != d["m"] for v in vals):
        raise DomainError("instance header disagrees with its valuations")
    alloc = None
    if d.get("allocation") is not None:
        alloc = check_allocation([frozenset(S) for S in d["allocation"]], d["n"], d["m"])
    bids = _parse_bids(d["bids"]) if d.get("bids") else None
    return d, vals, alloc, bids


def _initial_alloc(kind, instance_alloc, valuations):
    n, m = len(valuations), valuations[0].m
    if kind == "instance":
        if instance_alloc is None:
            raise DomainError("instance carries no allocation")
        return instance_alloc
    if kind == "auto":
        return instance_alloc if instance_alloc is not None else greedy_allocation(valuations)
    if kind == "greedy":
        return greedy_allocation(valuations)
    if kind == "pool":
        return tuple([frozenset(range(m))] + [frozenset()] * (n - 1))
    raise DomainError(f"unknown init '{kind}'")


def _maybe_opt(valuations, alloc):
    n, m = len(valuations), valuations[0].m
    if n * 3 ** m > OPT_WORK_CAP:
        return None, None
    opt, _ = optimal_welfare(valuations)
    w = welfare(valuations, alloc)
    ratio = format_money(w / opt) if opt > 0 else None
    return format_money(opt), ratio


def _maybe_certify(valuations, bids, alloc):
    if valuations[0].m > CERTIFY_M_CAP:
        return None, None
    ok, witnesses = is_pure_nash_no_overbid(valuations, bids, alloc)
    return ok, [w["kind"] for w in witnesses[:4]]


# -- generators ------------------------------------------------------------------


def _gen_table_submodular(rng, m, universe=None):
    """Weighted coverage plus a capped linear cardinality term; both parts
    are monotone submodular, so the table is."""
    u = universe or 2 * m
    weights = [Fraction(rng.randint(1, 8), rng.choice((1, 2))) for _ in range(u)]
    umask = [
        sum(1 << e for e in rng.sample(range(u), rng.randint(1, max(2, u // 3))))
        for _ in range(m)
    ]
    slope = Fraction(rng.randint(1, 4), 2)
    cap = slope * rng.randint(1, m)
    cov = [0] * (1 << m)
    wsum = [Fraction(0)] * (1 << m)
    values = [Fraction(0)] * (1 << m)
    for mask in range(1, 1 << m):
        low = mask & -mask
        j = low.bit_length() - 1
        prev = mask ^ low
        cov[mask] = cov[prev] | umask[j]
        fresh = umask[j] & ~cov[prev]
        extra = Fraction(0)
        while fresh:
            b = fresh & -fresh
            extra += weights[b.bit_length() - 1]
            fresh ^= b
        wsum[mask] = wsum[prev] + extra
        s = mask.bit_count()
        values[mask] = wsum[mask] + min(slope * s, cap)
    return TableValuation(m, values)


def _gen_budget_additive(rng, m):
    items = [Fraction(rng.randint(1, 9)) for _ in range(m)]
    total = sum(items)
    budget = Fraction(rng.randint(2, max(3, int(total))))
    return BudgetAdditiveValuation(m, budget, items)


def _gen_coverage(rng, m):
    if m < 2:
        raise DomainError("coverage instances need m >= 2")
    edges = []
    for a in range(m):
        for b in range(a + 1, m):
            if rng.random() < 0.5:
                edges.append((a, b, Fraction(rng.randint(1, 4))))
    if not edges:
        edges.append((0, 1, Fraction(1)))
    return CoverageValuation(m, edges)


def cmd_gen(args):
    rng = random.Random(args.seed)
    family = args.family
    n = args.n
    m = args.m
    instance = {"family": family, "m": m, "n": n, "seed": args.seed, "allocation": None}
    if family == "table-submodular":
        if m > GEN_TABLE_M_CAP:
            raise CapabilityError(f"table generation capped at m={GEN_TABLE_M_CAP}")
        vals = [_gen_table_submodular(rng, m) for _ in range(n)]
        for v in vals:
            ok, witness = verify_class(v, "submodular")
            if not ok:
                raise ConstructionError(f"generated table not submodular: {witness}")
    elif family == "budget-additive":
        vals = [_gen_budget_additive(rng, m) for _ in range(n)]
    elif family == "coverage":
        vals = [_gen_coverage(rng, m) for _ in range(n)]
    elif family == "setpair":
        if n != 2:
            raise DomainError("setpair instances have two bidders")
        system = build_good_set_pair_system(m, args.count, args.seed)
        vals = []
        for player in (0, 1):
            flags = [rng.randint(0, 1) for _ in range(args.count)]
            if not any(flags):
                flags[rng.randrange(args.count)] = 1
            vals.append(SetPairValuation(system, flags, player))
    elif family == "sensitive":
        k_map = {}
        floor_k = Fraction(1, 2 ** (m + 4))
        while len(k_map) < args.support:
            bundle = frozenset(rng.sample(range(m), m // 2 + 1))
            k_map[bundle] = max(floor_k, Fraction(rng.randint(1, 2 ** 11 - 1), 2 ** 13))
        vals = [
            SensitiveValuation(m, k_map=k_map, g=args.g, h=args.h)
            for _ in range(n)
        ]
    elif family == "gray-exponential":
        if n != 2:
            raise DomainError("the exponential instance has two bidders")
        v0, v1, _, init_alloc = build_exponential_instance(m)
        vals = [v0, v1]
        instance["allocation"] = _alloc_json(init_alloc)
    else:
        raise DomainError(f"unknown family '{family}'")
    instance["valuations"] = [v.to_json() for v in vals]
    _emit(instance, args)
    return EXIT_OK


# -- algorithm runs ---------------------------------------------------------------


def cmd_steal(args):
    _, vals, inst_alloc, _ = _load_instance(args.instance)
    init = _initial_alloc(args.init, inst_alloc, vals)
    t0 = time.perf_counter()
    truncated = False
    budget_additive = all(isinstance(v, BudgetAdditiveValuation) for v in vals)
    ba_run = budget_additive and args.policy == "stolen-last"
    try:
        if ba_run:
            run = run_budget_additive_stealing(vals, init, step_cap=args.step_cap)
        else:
            run = run_iterative_stealing(vals, init, policy=args.policy, step_cap=args.step_cap)
    except StealCapExceeded as exc:
        truncated = True
        run = None
        log = exc.log
    wall_ms = round(1000 * (time.perf_counter() - t0), 3)
    if run is not None:
        log = run.log
        alloc, bids = run.alloc, run.bids
    else:
        alloc, bids = None, None
    steals = len(log.events)
    report = {
        "algorithm": "steal",
        "policy": args.policy,
        "steals": steals,
        "truncated": truncated,
        "welfare_initial": format_money(welfare(vals, log.initial_alloc)),
        "wall_ms": wall_ms,
    }
    trace_rows = [
        {
            "thief": e.thief,
            "victim": e.victim,
            "item": e.item,
            "welfare_before": format_money(e.welfare_before),
            "welfare_after": format_money(e.welfare_after),
            "prices_after": [format_money(p) for p in e.prices_after],
            "tag": e.tag,
        }
        for e in log.events
    ]
    if truncated:
        _emit(report, args, trace_rows)
        return EXIT_VIOLATION
    n, m = len(vals), vals[0].m
    report["allocation"] = _alloc_json(alloc)
    report["bids"] = _bids_json(bids)
    report["welfare"] = format_money(welfare(vals, alloc))
    opt, ratio = _maybe_opt(vals, alloc)
    report["opt"], report["ratio"] = opt, ratio
    if ba_run:
        report["steal_bound"] = budget_additive_steal_bound(n, m)
        report["within_bound"] = steals <= report["steal_bound"]
    certified, witnesses = _maybe_certify(vals, bids, alloc)
    report["equilibrium_verified"] = certified
    report["witness_kinds"] = witnesses
    report["ledgers"] = _ledgers(vals)
    _emit(report, args, trace_rows)
    if certified is False or (ba_run and not report["within_bound"]):
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_topsteal(args):
    _, vals, inst_alloc, _ = _load_instance(args.instance)
    init = _initial_alloc(args.init, inst_alloc, vals)
    greedy_w = welfare(vals, greedy_allocation(vals)) if args.init == "greedy" else None
    t0 = time.perf_counter()
    try:
        run = top_steal(vals, init, t=args.t)
    except TopStealDiagnostic as exc:
        _emit({"algorithm": "topsteal", "diagnostic": str(exc)}, args)
        return EXIT_VIOLATION
    wall_ms = round(1000 * (time.perf_counter() - t0), 3)
    n, m = len(vals), vals[0].m
    t = args.t if args.t is not None else n
    steals = len(run.steals)
    cases = {}
    for node in run.trace.walk():
        cases[node.case] = cases.get(node.case, 0) + 1
    report = {
        "algorithm": "topsteal",
        "t": t,
        "steals": steals,
        "steal_bound": steal_count_bound(m, t),
        "within_bound": steals <= steal_count_bound(m, t),
        "cases": cases,
        "allocation": _alloc_json(run.alloc),
        "bids": _bids_json(run.bids),
        "welfare": format_money(welfare(vals, run.alloc)),
        "wall_ms": wall_ms,
    }
    if greedy_w is not None:
        report["greedy_welfare"] = format_money(greedy_w)
        report["at_least_greedy"] = welfare(vals, run.alloc) >= greedy_w
    opt, ratio = _maybe_opt(vals, run.alloc)
    report["opt"], report["ratio"] = opt, ratio
    certified, witnesses = _maybe_certify(vals, run.bids, run.alloc)
    report["equilibrium_verified"] = certified
    report["witness_kinds"] = witnesses
    report["ledgers"] = _ledgers(vals)
    _emit(report, args)
    if not report["within_bound"] or certified is False:
        return EXIT_VIOLATION
    if report.get("at_least_greedy") is False:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_dynamic(args):
    _, vals, inst_alloc, _ = _load_instance(args.instance)
    if len(vals) != 2:
        raise DomainError("the dynamic runs with two bidders")
    init = _initial_alloc(args.init, inst_alloc, vals)
    oracles = None
    if all(isinstance(v, GrayValuation) for v in vals):
        oracles = tuple(AdaptiveGrayOracle(v) for v in vals)
    t0 = time.perf_counter()
    run = run_best_reply_dynamic(vals[0], vals[1], oracles=oracles, init_alloc=init, step_cap=args.step_cap)
    wall_ms = round(1000 * (time.perf_counter() - t0), 3)
    increasing, _ = dynamic_trace_audit(run.trace)
    report = {
        "algorithm": "dynamic",
        "exchanges": run.trace.exchanges(),
        "responses": run.trace.responses,
        "truncated": run.trace.truncated,
        "sums_strictly_increase": increasing,
        "allocation": _alloc_json(run.alloc),
        "bids": _bids_json(run.bids),
        "welfare": format_money(welfare(vals, run.alloc)),
        "wall_ms": wall_ms,
    }
    trace_rows = [
        {
            "responder": row.responder,
            "allocation": _alloc_json(row.alloc),
            "winning_sum": format_money(row.winning_sum),
        }
        for row in run.trace.rows
    ]
    if not run.trace.truncated:
        traditional, _ = is_traditional(vals, run.alloc, run.bids, oracles=oracles)
        report["traditional"] = traditional
        certified, witnesses = _maybe_certify(vals, run.bids, run.alloc)
        report["equilibrium_verified"] = certified
        report["witness_kinds"] = witnesses
    report["ledgers"] = _ledgers(vals)
    _emit(report, args, trace_rows)
    if run.trace.truncated or not increasing or report.get("traditional") is False:
        return EXIT_VIOLATION
    if report.get("equilibrium_verified") is False:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_adversary(args):
    adv = OddGraphAdversary(args.m, g=args.g, h=args.h, seed=args.seed)
    searcher = SEARCHERS[args.algorithm]
    t0 = time.perf_counter()
    result = searcher(adv, args.budget)
    wall_ms = round(1000 * (time.perf_counter() - t0), 3)
    ok, problems = adversary_audit(adv)
    report = {
        "algorithm": f"adversary-{args.algorithm}",
        "m": args.m,
        "budget": args.budget,
        "queries": result.queries,
        "steps": result.steps,
        "conceded": result.conceded,
        "certified": result.certified,
        "colored": len(adv.colored),
        "audit_ok": ok,
        "audit_problems": [str(p) for p in problems[:8]],
        "wall_ms": wall_ms,
    }
    if adv.literal:
        report["query_lower_bound"] = query_lower_bound(args.m)
    trace_rows = [
        {
            "vertex": sorted(ans.vertex),
            "value": format_money(ans.value),
            "clause_item": ans.clause_item,
            "replay": ans.replay,
        }
        for ans in adv.transcript
    ]
    _emit(report, args, trace_rows)
    return EXIT_OK if ok and not result.certified else EXIT_VIOLATION


def cmd_verify(args):
    inst, vals, alloc, bids = _load_instance(args.instance)
    if args.bids:
        bids = _parse_bids(_load_json(args.bids)["bids"])
    if bids is None:
        raise DomainError("verification needs bids (instance field or --bids)")
    ok, witnesses = is_pure_nash_no_overbid(vals, bids, alloc)
    res_alloc, _ = resolve(bids)
    report = {
        "equilibrium": ok,
        "witnesses": _jsonable(witnesses[:8]),
        "allocation": _alloc_json(res_alloc),
        "welfare": format_money(welfare(vals, res_alloc)),
    }
    opt, ratio = _maybe_opt(vals, res_alloc)
    report["opt"], report["ratio"] = opt, ratio
    _emit(report, args)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_setpair_gen(args):
    system = build_good_set_pair_system(args.m, args.count, args.seed)
    _emit(system.to_json(), args)
    return EXIT_OK


def cmd_setpair_check(args):
    system = SetPairSystem.from_json(_load_json(args.system))
    ok, problems = verify_set_pair_system(system)
    _emit({"good": ok, "problems": [list(p) for p in problems]}, args)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_maxcut_reduce(args):
    graph = WeightedGraph.from_json(_load_json(args.graph))
    vals = [maxcut_valuation(graph), maxcut_valuation(graph)]
    instance = {
        "family": "maxcut",
        "m": graph.vertices,
        "n": 2,
        "seed": args.seed,
        "graph": graph.to_json(),
        "valuations": [v.to_json() for v in vals],
        "allocation": None,
    }
    if args.side is not None:
        side = frozenset(int(x) for x in args.side.split(",") if x != "")
        alloc = (side, frozenset(range(graph.vertices)) - side)
        instance["allocation"] = _alloc_json(alloc)
        is_lm, move = local_max_check(vals, alloc)
        instance["local_max"] = is_lm
        instance["improving_move"] = list(move) if move else None
        instance["cut_weight"] = format_money(graph.cut_weight(side))
    _emit(instance, args)
    return EXIT_OK


def cmd_isoperimetric(args):
    report = isoperimetric_check(args.n, samples=args.samples, seed=args.seed)
    report["failures"] = [list(f) for f in report["failures"]]
    _emit(report, args)
    return EXIT_OK if report["ok"] else EXIT_VIOLATION


def cmd_bench(args):
    rng = random.Random(args.seed)
    rows = []

    def timed(name, fn):
        t0 = time.perf_counter()
        out = fn()
        rows.append({"name": name, "wall_ms": round(1000 * (time.perf_counter() - t0), 3), **out})

    def pool(n, m):
        return tuple([frozenset(range(m))] + [frozenset()] * (n - 1))

    def bench_steal():
        vals = [_gen_table_submodular(random.Random(rng.randint(0, 10 ** 6)), 6) for _ in range(3)]
        run = run_iterative_stealing(vals, pool(3, 6))
        return {"steals": len(run.log.events), "welfare": format_money(welfare(vals, run.alloc))}

    def bench_budget():
        vals = [_gen_budget_additive(random.Random(rng.randint(0, 10 ** 6)), 8) for _ in range(3)]
        run = run_budget_additive_stealing(vals, pool(3, 8))
        return {"steals": len(run.log.events)}

    def bench_topsteal():
        vals = [_gen_table_submodular(random.Random(rng.randint(0, 10 ** 6)), 6) for _ in range(2)]
        run = top_steal(vals, pool(2, 6))
        return {"steals": len(run.steals)}

    def bench_dynamic():
        v0, v1, oracles, init = build_exponential_instance(5)
        run = run_best_reply_dynamic(v0, v1, oracles=oracles, init_alloc=init)
        return {"exchanges": run.trace.exchanges()}

    def bench_adversary():
        adv = OddGraphAdversary(9, g=1, h=2, seed=0)
        res = SEARCHERS["hill"](adv, 40)
        return {"queries": res.queries, "conceded": res.conceded}

    timed("steal-submodular", bench_steal)
    timed("steal-budget-additive", bench_budget)
    timed("topsteal", bench_topsteal)
    timed("dynamic-gray-m5", bench_dynamic)
    timed("adversary-small", bench_adversary)
    _emit({"bench": rows}, args)
    return EXIT_OK


# -- wiring -----------------------------------------------------------------------


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="sspeq")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common])
    g.add_argument("--family", choices=FAMILIES, required=True)
    g.add_argument("--n", type=int, default=2)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--count", type=int, default=3)
    g.add_argument("--support", type=int, default=5)
    g.add_argument("--g", type=int, default=20)
    g.add_argument("--h", type=int, default=10)
    g.set_defaults(fn=cmd_gen)

    s = sub.add_parser("steal", parents=[common])
    s.add_argument("--instance", required=True)
    s.add_argument("--init", choices=("auto", "instance", "greedy", "pool"), default="auto")
    s.add_argument("--policy", choices=("stolen-last", "static"), default="stolen-last")
    s.add_argument("--step-cap", type=int, default=100_000)
    s.add_argument("--trace-out", default=None)
    s.set_defaults(fn=cmd_steal)

    ts = sub.add_parser("topsteal", parents=[common])
    ts.add_argument("--instance", required=True)
    ts.add_argument("--init", choices=("auto", "instance", "greedy", "pool"), default="auto")
    ts.add_argument("--t", type=int, default=None)
    ts.set_defaults(fn=cmd_topsteal)

    d = sub.add_parser("dynamic", parents=[common])
    d.add_argument("--instance", required=True)
    d.add_argument("--init", choices=("auto", "instance", "greedy", "pool"), default="auto")
    d.add_argument("--step-cap", type=int, default=10_000)
    d.add_argument("--trace-out", default=None)
    d.set_defaults(fn=cmd_dynamic)

    a = sub.add_parser("adversary", parents=[common])
    a.add_argument("--m", type=int, required=True)
    a.add_argument("--algorithm", choices=sorted(SEARCHERS), required=True)
    a.add_argument("--budget", type=int, default=2000)
    a.add_argument("--g", type=int, default=20)
    a.add_argument("--h", type=int, default=10)
    a.add_argument("--report", dest="out")
    a.add_argument("--trace-out", default=None)
    a.set_defaults(fn=cmd_adversary)

    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--instance", required=True)
    v.add_argument("--bids", default=None)
    v.set_defaults(fn=cmd_verify)

    sg = sub.add_parser("setpair-gen", parents=[common])
    sg.add_argument("--m", type=int, required=True)
    sg.add_argument("--count", type=int, default=3)
    sg.set_defaults(fn=cmd_setpair_gen)

    sc = sub.add_parser("setpair-check", parents=[common])
    sc.add_argument("--system", required=True)
    sc.set_defaults(fn=cmd_setpair_check)

    mr = sub.add_parser("maxcut-reduce", parents=[common])
    mr.add_argument("--graph", required=True)
    mr.add_argument("--side", default=None)
    mr.set_defaults(fn=cmd_maxcut_reduce)

    iso = sub.add_parser("isoperimetric", parents=[common])
    iso.add_argument("--n", type=int, required=True)
    iso.add_argument("--samples", type=int, default=None)
    iso.set_defaults(fn=cmd_isoperimetric)

    b = sub.add_parser("bench", parents=[common])
    b.set_defaults(fn=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (CapabilityError, DomainError, ConstructionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CAPABILITY


if __name__ == "__main__":
    sys.exit(main())
