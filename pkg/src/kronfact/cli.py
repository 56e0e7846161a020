"""Command-line interface.

Subcommands: gen, solve, solve-all, batch, growth, oracle.  A key=value
config file can preset any SearchConfig field; explicit flags win.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .core import BinaryMatrix, load_matrix, save_matrix, divisor_splits
from .harness import (
    InstanceSpec,
    generate_instance,
    growth_study,
    run_batch,
    solve_all_divisor_splits,
    write_batch_csv,
    write_growth_dat,
    write_runs_json,
    run_record_dict,
    RunRecord,
)
from .oracle import brute_force_factorize, is_prime_for_all_splits, DEFAULT_MAX_N
from .search import SearchConfig, alternate_local_search

_CFG_FIELDS = {f.name: f.type for f in dataclasses.fields(SearchConfig)}
_INT_FIELDS = {
    "dim_b", "dim_c", "max_iter", "max_restarts", "perturbate_every",
    "metric_switch_stall", "cornerize_max_iter", "rng_seed",
}


def _parse_config_file(path: str) -> dict:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line (want key=value): {raw!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        if key not in _CFG_FIELDS:
            raise ValueError(f"unknown config key: {key}")
        out[key] = int(value) if key in _INT_FIELDS else float(value)
    return out


def _build_config(args, dim_b: int, dim_c: int) -> SearchConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(_parse_config_file(args.config))
    values["dim_b"] = dim_b
    values["dim_c"] = dim_c
    if getattr(args, "seed", None) is not None:
        values["rng_seed"] = args.seed
    if getattr(args, "max_iter", None) is not None:
        values["max_iter"] = args.max_iter
    if getattr(args, "max_restarts", None) is not None:
        values["max_restarts"] = args.max_restarts
    cfg = SearchConfig(**values)
    cfg.validate()
    return cfg


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file presetting search parameters")
    p.add_argument("--seed", type=int, default=None, help="search RNG seed")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--max-restarts", type=int, default=None)


def _report_line(tag: str, rep) -> str:
    status = "success" if rep.success else "no solution found"
    return (
        f"{tag}: {status} (iterations={rep.iterations} restarts={rep.restarts} "
        f"time={rep.wall_time:.3f}s)"
    )


def cmd_gen(args) -> int:
    spec = InstanceSpec(
        dim_b=args.dimB, dim_c=args.dimC, rho_b=args.rhoB, rho_c=args.rhoC,
        seed=args.seed,
    )
    a, _hidden = generate_instance(spec)
    save_matrix(a, args.out)
    print(f"wrote {a.n}x{a.n} matrix with {a.popcount()} ones to {args.out}")
    return 0


def cmd_solve(args) -> int:
    a = load_matrix(getattr(args, "in"))
    cfg = _build_config(args, args.dimB, args.dimC)
    rep = alternate_local_search(a, cfg)
    print(_report_line(f"solve {args.dimB}x{args.dimC}", rep))
    if args.out:
        rec = RunRecord(instance=0, variation=0, edges=a.popcount(), report=rep)
        Path(args.out).write_text(
            json.dumps(run_record_dict(rec, args.dimB, args.dimC), indent=1) + "\n"
        )
    return 0 if rep.success else 2


def cmd_solve_all(args) -> int:
    a = load_matrix(getattr(args, "in"))
    if not divisor_splits(a.n):
        print(f"n = {a.n} is prime: no nontrivial divisor split exists")
        return 0
    cfg = _build_config(args, 1, a.n)  # dims are replaced per split
    results = solve_all_divisor_splits(a, cfg)
    for n1, n2, rep in results:
        print(_report_line(f"split ({n1},{n2})", rep))
    return 0


def cmd_batch(args) -> int:
    spec = InstanceSpec(
        dim_b=args.dimB, dim_c=args.dimC, rho_b=args.rhoB, rho_c=args.rhoC,
        seed=args.seed,
    )
    cfg = _build_config(args, args.dimB, args.dimC)
    batch = run_batch(spec, args.instances, args.variations, cfg, jobs=args.jobs)
    write_batch_csv(batch, args.out)
    if args.runs_out:
        write_runs_json(batch, args.runs_out)
    print(
        f"batch {args.dimB}x{args.dimC}: failure {batch.failure_pct:.2f}%  "
        f"t_min={batch.t_min}  t_avg'={batch.t_avg_prime}  "
        f"t_avg={batch.t_avg}  t_max={batch.t_max}"
    )
    return 0


def cmd_growth(args) -> int:
    dim_c_values = [int(t) for t in args.dimC_list.split(",")]
    cfg = _build_config(args, args.dimB, dim_c_values[0])
    rows = growth_study(
        rho_a=args.rhoA,
        dim_b=args.dimB,
        dim_c_values=dim_c_values,
        cfg=cfg,
        n_instances=args.instances,
        n_variations=args.variations,
        seed=args.seed,
        jobs=args.jobs,
    )
    write_growth_dat(rows, args.out)
    for e, ta, tp in rows:
        print(f"edges={e} t_avg={ta:.3f} t_avg'={tp:.3f}")
    return 0


def cmd_oracle(args) -> int:
    a = load_matrix(getattr(args, "in"))
    try:
        if args.dimB is not None and args.dimC is not None:
            verdict = brute_force_factorize(a, args.dimB, args.dimC, max_n=args.max_n)
            kind = "composite" if verdict.composite else "prime"
            print(
                f"split ({args.dimB},{args.dimC}): {kind} "
                f"({len(verdict.witnesses)} distinct factor pairs)"
            )
            for p, b, c in verdict.witnesses:
                print(f"  p={p.map.tolist()} b={b.row_strings()} c={c.row_strings()}")
        else:
            prime = is_prime_for_all_splits(a, max_n=args.max_n)
            print("prime (all splits)" if prime else "composite (some split factors)")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kronfact",
        description="Factorize a directed graph as a direct (Kronecker) product "
        "of two smaller graphs by permutation local search.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random solvable instance")
    g.add_argument("--dimB", type=int, required=True)
    g.add_argument("--dimC", type=int, required=True)
    g.add_argument("--rhoB", type=float, required=True)
    g.add_argument("--rhoC", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one instance for a given blocking")
    s.add_argument("--in", required=True)
    s.add_argument("--dimB", type=int, required=True)
    s.add_argument("--dimC", type=int, required=True)
    s.add_argument("--out", default=None, help="write the run report as JSON")
    _add_config_flags(s)
    s.set_defaults(func=cmd_solve)

    sa = sub.add_parser("solve-all", help="try every nontrivial divisor split")
    sa.add_argument("--in", required=True)
    _add_config_flags(sa)
    sa.set_defaults(func=cmd_solve_all)

    b = sub.add_parser("batch", help="instances x variations batch with statistics")
    b.add_argument("--dimB", type=int, required=True)
    b.add_argument("--dimC", type=int, required=True)
    b.add_argument("--rhoB", type=float, required=True)
    b.add_argument("--rhoC", type=float, required=True)
    b.add_argument("--instances", type=int, default=10)
    b.add_argument("--variations", type=int, default=10)
    b.add_argument("--out", required=True, help="summary CSV path")
    b.add_argument("--runs-out", default=None, help="per-run JSON records path")
    b.add_argument("--jobs", type=int, default=1)
    _add_config_flags(b)
    b.set_defaults(func=cmd_batch)

    gr = sub.add_parser("growth", help="solve-time growth against edge count")
    gr.add_argument("--rhoA", type=float, default=0.25)
    gr.add_argument("--dimB", type=int, default=10)
    gr.add_argument("--dimC-list", dest="dimC_list", required=True,
                    help="comma-separated dimC values")
    gr.add_argument("--instances", type=int, default=6)
    gr.add_argument("--variations", type=int, default=10)
    gr.add_argument("--out", required=True)
    gr.add_argument("--jobs", type=int, default=1)
    _add_config_flags(gr)
    gr.set_defaults(func=cmd_growth)

    o = sub.add_parser("oracle", help="exhaustive verdict for a small matrix")
    o.add_argument("--in", required=True)
    o.add_argument("--dimB", type=int, default=None)
    o.add_argument("--dimC", type=int, default=None)
    o.add_argument("--max-n", dest="max_n", type=int, default=DEFAULT_MAX_N)
    o.set_defaults(func=cmd_oracle)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
