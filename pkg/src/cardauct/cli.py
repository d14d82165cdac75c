"""Command-line entry point: ``cardauct <subcommand> ...``.

Exit codes: 0 success, 1 input error, 2 budget error, 3 verification failure.
Reports are JSON on stdout or in ``--output``; ``--figure`` adds a PNG.
"""

from __future__ import annotations

import argparse
import gc
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import io as bidio
from .equilibrium import (
    BidderMode, BidGrid, enumerate_equilibria, optimal_efficiency, poa, revenue_comparison,
)
from .instances import NamedInstance, generate, parse_random, random_instance
from .mechanisms import MechanismKind, PrefixInstance, mpp_prices, run, run_vcg, second_best_sum
from .model import Bid, Instance, InputError, format_money, parse_money
from .oracle import (
    BudgetError, OracleBudget, brute_best_allocation, brute_prefix_best, brute_second_best,
    brute_sigma, brute_vcg_prices, check_min_pay,
)
from .sigma import build, sigma_table, sigma_table_naive

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_VERIFY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _emit(data, output: Optional[str]):
    text = bidio.dump_json(data, output)
    if output is None:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    bids = bidio.read_bids(args.input)
    kind = MechanismKind(args.mechanism)
    if not bids:
        raise InputError("no bids in input")
    out = run(kind, bids, items=args.items, tie_k=args.tie_k)
    _emit(bidio.outcome_to_json(out, {b.bidder_id: b for b in bids}), args.output)
    return EXIT_OK


def cmd_sigma(args) -> int:
    inst = Instance(bidio.read_bids(args.input))
    if len(inst) == 0:
        raise InputError("no bids in input")
    table = sigma_table(inst, args.tie_k)
    _emit(table.to_json(), args.output)
    if args.figure:
        from .plotting import plot_sigma
        plot_sigma(table, args.figure)
    return EXIT_OK


def verify_checks(inst: Instance, items: Optional[int] = None, tie_k: str = "smallest",
                  budget: Optional[OracleBudget] = None) -> list[dict]:
    """Cross-check every fast path against the oracles on one instance."""
    budget = budget or OracleBudget.from_env()
    budget.check(len(inst))
    checks = []

    def add(name, ok, detail=""):
        checks.append({"name": name, "passed": bool(ok), "detail": detail})

    table = sigma_table(inst, tie_k)
    brute = [brute_sigma(inst, k, budget) for k in range(1, len(inst) + 1)]
    add("sigma_vs_brute", list(table.sigma) == brute)
    add("sigma_vs_scan", table == sigma_table_naive(inst, tie_k=tie_k))
    alloc, value = brute_best_allocation(inst, tie_k=tie_k, budget=budget)
    mpp = run(MechanismKind.MPP_CA, inst.bids, tie_k=tie_k, engine="range")
    add("best_allocation", (alloc, value) == (mpp.allocation, table.best),
        f"oracle {alloc.winners} = {format_money(value)}")
    add("second_best", second_best_sum(inst, table, build(inst)) == brute_second_best(inst, tie_k, budget))
    vcg = run_vcg(inst, tie_k=tie_k, engine="range")
    add("vcg_prices", dict(vcg.prices) == brute_vcg_prices(inst.bids, tie_k, budget))
    fails = check_min_pay(inst, tie_k)
    add("mpp_min_pay", not fails, "; ".join(fails))
    m = items if items is not None else len(inst)
    pv = run(MechanismKind.PVCG, inst.bids, items=m)
    add("prefix_best", pv.efficiency == brute_prefix_best(inst.bids, m, budget))
    return checks


def cmd_verify(args) -> int:
    inst = Instance(bidio.read_bids(args.input))
    if len(inst) == 0:
        raise InputError("no bids in input")
    checks = verify_checks(inst, args.items, args.tie_k)
    passed = all(c["passed"] for c in checks)
    _emit({"passed": passed, "checks": checks}, args.output)
    return EXIT_OK if passed else EXIT_VERIFY


def _grid(args) -> BidGrid:
    return BidGrid(parse_money(args.step), Fraction(args.max_mult), snap=args.snap)


def _eq_kwargs(args) -> dict:
    return dict(enumerate_caps=args.enumerate_caps, pin_losers=not args.no_pin_losers,
                workers=args.threads)


def _grid_json(args, grid: BidGrid) -> dict:
    return {"step": format_money(grid.step), "max_multiplier": str(grid.max_multiplier),
            "snap": grid.snap, "mode": args.mode}


def cmd_equilibria(args) -> int:
    vals = bidio.read_valuations(args.valuations)
    grid = _grid(args)
    eqs = enumerate_equilibria(vals, args.mechanism, grid, args.mode, args.items, **_eq_kwargs(args))
    best = optimal_efficiency(vals, args.mechanism, args.items)
    _emit({"mechanism": args.mechanism, "grid": _grid_json(args, grid),
           "optimal_efficiency": format_money(best),
           "equilibria": [r.to_json() for r in eqs]}, args.output)
    if args.figure:
        from .plotting import plot_equilibria
        plot_equilibria([r.efficiency for r in eqs], [r.revenue for r in eqs], best, args.figure)
    return EXIT_OK


def cmd_poa(args) -> int:
    vals = bidio.read_valuations(args.valuations)
    grid = _grid(args)
    res = poa(vals, args.mechanism, grid, args.mode, args.items, **_eq_kwargs(args))
    _emit({"mechanism": args.mechanism, "grid": _grid_json(args, grid), **res.to_json()}, args.output)
    return EXIT_OK


def cmd_revcmp(args) -> int:
    vals = bidio.read_valuations(args.valuations)
    grid = _grid(args)
    res = revenue_comparison(vals, grid, args.mode, args.mechanism, args.items, **_eq_kwargs(args))
    _emit({"mechanism": args.mechanism, "grid": _grid_json(args, grid), **res.to_json()}, args.output)
    return EXIT_OK


def cmd_gen(args) -> int:
    if (args.name is None) == (args.random is None):
        raise InputError("give exactly one of --name or --random")
    if args.name is not None:
        bids = list(generate(args.name).bids)
    else:
        bids = list(random_instance(parse_random(args.random)).bids)
    if args.output:
        bidio.write_bids(args.output, bids)
    else:
        sys.stdout.write(bidio.format_bids_csv(bids))
    return EXIT_OK


def bench_instance(n: int, seed: int) -> Instance:
    rng = np.random.default_rng(seed)
    amounts = rng.integers(1, 10**9, size=n)
    caps = rng.integers(1, n + 1, size=n)
    return Instance(Bid(i, int(a), int(c)) for i, (a, c) in enumerate(zip(amounts.tolist(), caps.tolist())))


def _time_once(inst: Instance) -> tuple[float, float, Optional[int]]:
    t0 = time.perf_counter()
    rs = build(inst)
    table = sigma_table(inst, rs=rs)
    t1 = time.perf_counter()
    mpp_prices(inst, table, rs)
    t2 = time.perf_counter()
    return t1 - t0, t2 - t1, table.k_star


def _bench_rows(sizes: Sequence[int], seed: int, reps: int) -> list[dict]:
    insts = []
    for n in sizes:
        inst = bench_instance(n, seed)
        inst.caps, inst.amounts  # warm the cached arrays outside the timed region
        insts.append(inst)
    sig_t = [[] for _ in sizes]
    mpp_t = [[] for _ in sizes]
    k_star = [None] * len(sizes)
    gc_was_on = gc.isenabled()
    gc.disable()
    try:
        # sizes take turns within each repetition so a burst of machine noise
        # cannot land on one size only
        for _ in range(reps):
            for j, inst in enumerate(insts):
                st, mt, k_star[j] = _time_once(inst)
                sig_t[j].append(st)
                mpp_t[j].append(mt)
    finally:
        if gc_was_on:
            gc.enable()
    return [{"n": n, "k_star": k_star[j], "sigma_seconds": statistics.median(sig_t[j]),
             "mpp_seconds": statistics.median(mpp_t[j]), "sigma_runs": sig_t[j]}
            for j, n in enumerate(sizes)]


def _bench_one(job) -> dict:
    n, seed, reps = job
    return _bench_rows([n], seed, reps)[0]


def bench(sizes: Sequence[int], seed: int = 0, reps: int = 3, naive_max: int = 2000,
          workers: int = 1) -> dict:
    """Median-of-``reps`` timings of table construction and MPP pricing per size.

    Sizes are timed in turns within one process unless ``workers > 1``, which
    runs them in parallel processes at the cost of noisier timings.  Sizes up
    to ``naive_max`` are also checked against the direct scan.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise InputError("bench sizes must be ascending")
    if any(n < 1 for n in sizes) or reps < 1:
        raise InputError("sizes and reps must be positive")
    if workers > 1 and len(sizes) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_bench_one, [(n, seed, reps) for n in sizes]))
    else:
        rows = _bench_rows(sizes, seed, reps)
    for row in rows:
        if row["n"] <= naive_max:
            inst = bench_instance(row["n"], seed)
            t0 = time.perf_counter()
            naive = sigma_table_naive(inst)
            row["naive_seconds"] = time.perf_counter() - t0
            row["naive_agrees"] = naive == sigma_table(inst, rs=build(inst))
    ratios = []
    for a, b in zip(rows, rows[1:]):
        # ratio within each repetition, then the median across repetitions
        per_rep = [tb / ta for ta, tb in zip(a["sigma_runs"], b["sigma_runs"]) if ta > 0]
        ratios.append({"from": a["n"], "to": b["n"],
                       "time_ratio": statistics.median(per_rep) if per_rep else None})
    return {"seed": seed, "reps": reps, "rows": rows, "ratios": ratios}


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()] if args.sizes else []
    report = bench(sizes, args.seed, args.reps, args.naive_max, args.threads)
    _emit(report, args.output)
    if args.figure and report["rows"]:
        from .plotting import plot_bench
        plot_bench(report["rows"], args.figure)
    return EXIT_OK


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise InputError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cardauct", description="Cardinal and prefix auctions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, output=True):
        sp.add_argument("--tie-k", choices=["smallest", "largest"], default="smallest",
                        help="allocation size preferred among equally good ones")
        if output:
            sp.add_argument("--output", "-o")

    sp = sub.add_parser("run", help="run one mechanism on a bid file")
    sp.add_argument("--mechanism", required=True, choices=[m.value for m in MechanismKind])
    sp.add_argument("--input", required=True)
    sp.add_argument("--items", type=_positive, help="copies on sale (prefix mechanisms)")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sigma", help="dump the best total for every allocation size")
    sp.add_argument("--input", required=True)
    sp.add_argument("--figure")
    common(sp)
    sp.set_defaults(func=cmd_sigma)

    sp = sub.add_parser("verify", help="cross-check fast paths against brute force")
    sp.add_argument("--input", required=True)
    sp.add_argument("--items", type=_positive)
    common(sp)
    sp.set_defaults(func=cmd_verify)

    for name, func, extra in (("equilibria", cmd_equilibria, True), ("poa", cmd_poa, False),
                              ("revcmp", cmd_revcmp, False)):
        sp = sub.add_parser(name)
        sp.add_argument("--valuations", required=True)
        sp.add_argument("--mechanism", default="mpp", choices=[m.value for m in MechanismKind])
        sp.add_argument("--mode", default="conservative", choices=[m.value for m in BidderMode])
        sp.add_argument("--step", required=True, help="grid step in currency units")
        sp.add_argument("--max-mult", default="2", help="grid spans [0, max-mult * top value]")
        sp.add_argument("--items", type=_positive)
        sp.add_argument("--snap", action="store_true",
                        help="round off-grid valuations down instead of rejecting them")
        sp.add_argument("--enumerate-caps", action="store_true")
        sp.add_argument("--no-pin-losers", action="store_true")
        sp.add_argument("--threads", type=_positive, default=1)
        sp.add_argument("--output", "-o")
        if extra:
            sp.add_argument("--figure")
        sp.set_defaults(func=func)

    sp = sub.add_parser("gen", help="write a named or random instance")
    sp.add_argument("--name", choices=[m.value for m in NamedInstance])
    sp.add_argument("--random", help="e.g. n=12,seed=7,step=5")
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("bench", help="time the table and pricing at growing sizes")
    sp.add_argument("--sizes", default="100000,200000,400000")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--reps", type=_positive, default=3)
    sp.add_argument("--naive-max", type=int, default=2000)
    sp.add_argument("--threads", type=_positive, default=1)
    sp.add_argument("--output", "-o")
    sp.add_argument("--figure")
    sp.set_defaults(func=cmd_bench)
    return p


def parse_and_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except BudgetError as exc:
        print(f"cardauct: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, ValueError) as exc:
        print(f"cardauct: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
