"""Experiment harness: instance generation, batches, sweeps, reports.

Batch protocol: a batch is n_instances random problem instances; each
instance fixes factors (b, c) and is solved n_variations times, each time
from a fresh uniformly random symmetric permutation of b (x) c.  Per batch
the five summary statistics are reported: failure percentage over all
runs, and min / average-of-per-instance-minima / average / max wall time
over the *successful* runs only (failed runs contribute to no time
aggregate).

Seeding: every random stream is derived from the batch seed through
numpy's SeedSequence with a distinct integer entropy tuple per purpose
(factors, variation permutation, solver), so identical invocations
reproduce every success flag, permutation and factor exactly; only wall
times vary.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import BinaryMatrix, Permutation, divisor_splits, kronecker, permute_symmetric
from .oracle import verify_certificate
from .search import RunReport, SearchConfig, alternate_local_search

_FACTOR_STREAM = 0
_PERM_STREAM = 1
_SOLVER_STREAM = 2
_RESAMPLE_BUDGET = 100


@dataclass(frozen=True)
class InstanceSpec:
    """Parameters of one random problem family (no structural constraints)."""

    dim_b: int
    dim_c: int
    rho_b: float
    rho_c: float
    seed: int

    def validate(self) -> None:
        if self.dim_b < 1 or self.dim_c < 1:
            raise ValueError("dim_b and dim_c must be positive")
        for name in ("rho_b", "rho_c"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ValueError(f"{name} must be in (0, 1)")

    @property
    def n(self) -> int:
        return self.dim_b * self.dim_c


@dataclass(frozen=True)
class RunRecord:
    instance: int
    variation: int
    edges: int
    report: RunReport


@dataclass(frozen=True)
class BatchReport:
    """Per-run reports plus the five summary statistics.

    Time aggregates are None when no run succeeded (reported as empty in
    the serialized summaries).
    """

    spec: InstanceSpec
    n_instances: int
    n_variations: int
    records: list
    failure_pct: float
    t_min: float | None
    t_avg_prime: float | None
    t_avg: float | None
    t_max: float | None


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=list(entropy)))


def _derive_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence(entropy=list(entropy)).generate_state(1, np.uint64)[0])


def _sample_nonzero(n: int, density: float, rng: np.random.Generator) -> BinaryMatrix:
    for _ in range(_RESAMPLE_BUDGET):
        m = BinaryMatrix.random(n, density, rng)
        if m.popcount() > 0:
            return m
    raise ValueError(
        f"could not sample a nonzero {n}x{n} factor at density {density} "
        f"within {_RESAMPLE_BUDGET} tries"
    )


def _sample_factors(
    spec: InstanceSpec, rng: np.random.Generator
) -> tuple[BinaryMatrix, BinaryMatrix]:
    b = _sample_nonzero(spec.dim_b, spec.rho_b, rng)
    c = _sample_nonzero(spec.dim_c, spec.rho_c, rng)
    return b, c


def generate_instance(
    spec: InstanceSpec,
) -> tuple[BinaryMatrix, tuple[Permutation, BinaryMatrix, BinaryMatrix]]:
    """One solvable instance: a = p-conjugated b (x) c, factors resampled if
    all zero.  The hidden triple is for test assertions only; the solver
    never sees it."""
    spec.validate()
    rng = _rng(spec.seed, _FACTOR_STREAM)
    b, c = _sample_factors(spec, rng)
    p = Permutation(rng.permutation(spec.n))
    a = permute_symmetric(kronecker(b, c), p)
    return a, (p, b, c)


def _solve_task(args) -> RunReport:
    bits, cfg = args
    return alternate_local_search(BinaryMatrix(bits), cfg)


def aggregate_records(spec, n_instances, n_variations, records) -> BatchReport:
    """Fold per-run records into the five batch statistics."""
    succ = [r for r in records if r.report.success]
    failure_pct = 100.0 * (len(records) - len(succ)) / len(records)
    times = [r.report.wall_time for r in succ]
    per_instance_mins = []
    for i in range(n_instances):
        ts = [r.report.wall_time for r in succ if r.instance == i]
        if ts:
            per_instance_mins.append(min(ts))
    return BatchReport(
        spec=spec,
        n_instances=n_instances,
        n_variations=n_variations,
        records=records,
        failure_pct=failure_pct,
        t_min=min(times) if times else None,
        t_avg_prime=(sum(per_instance_mins) / len(per_instance_mins))
        if per_instance_mins
        else None,
        t_avg=(sum(times) / len(times)) if times else None,
        t_max=max(times) if times else None,
    )


def run_batch(
    spec: InstanceSpec,
    n_instances: int = 10,
    n_variations: int = 10,
    cfg: SearchConfig | None = None,
    jobs: int = 1,
) -> BatchReport:
    """The 10x10 table protocol (counts configurable).

    Every success is re-verified against its certificate before being
    aggregated; a violation is a bug and raises.  Runs execute in a
    deterministic order; with jobs > 1 they are farmed out to worker
    processes and collected in submission order, which leaves all
    non-time fields identical to a sequential run.
    """
    spec.validate()
    if n_instances < 1 or n_variations < 1:
        raise ValueError("instance and variation counts must be >= 1")
    if cfg is None:
        cfg = SearchConfig(dim_b=spec.dim_b, dim_c=spec.dim_c)
    if (cfg.dim_b, cfg.dim_c) != (spec.dim_b, spec.dim_c):
        raise ValueError("cfg dimensions must match the instance spec")

    tasks = []
    meta = []
    for i in range(n_instances):
        b, c = _sample_factors(spec, _rng(spec.seed, _FACTOR_STREAM, i))
        prod = kronecker(b, c)
        edges = prod.popcount()
        for v in range(n_variations):
            p = Permutation(_rng(spec.seed, _PERM_STREAM, i, v).permutation(spec.n))
            a_v = permute_symmetric(prod, p)
            cfg_v = replace(cfg, rng_seed=_derive_seed(spec.seed, _SOLVER_STREAM, i, v))
            tasks.append((a_v.bits, cfg_v))
            meta.append((i, v, edges, a_v))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_solve_task, tasks))
    else:
        reports = [_solve_task(t) for t in tasks]

    records = []
    for (i, v, edges, a_v), rep in zip(meta, reports):
        if rep.success and not verify_certificate(a_v, rep.p, rep.b, rep.c):
            raise RuntimeError(
                f"certificate verification failed for instance {i} variation {v}"
            )
        records.append(RunRecord(instance=i, variation=v, edges=edges, report=rep))
    return aggregate_records(spec, n_instances, n_variations, records)


def solve_all_divisor_splits(
    a: BinaryMatrix, cfg: SearchConfig
) -> list[tuple[int, int, RunReport]]:
    """Run the search once per ordered nontrivial divisor pair of n.

    Empty for prime n (no nontrivial split exists).
    """
    if a.n < 4:
        raise ValueError("divisor sweep needs n >= 4")
    out = []
    for n1, n2 in divisor_splits(a.n):
        rep = alternate_local_search(a, cfg.with_dims(n1, n2))
        if rep.success and not verify_certificate(a, rep.p, rep.b, rep.c):
            raise RuntimeError(f"certificate verification failed for split ({n1},{n2})")
        out.append((n1, n2, rep))
    return out


def growth_study(
    rho_a: float,
    dim_b: int,
    dim_c_values: list[int],
    cfg: SearchConfig | None = None,
    n_instances: int = 6,
    n_variations: int = 10,
    seed: int = 0,
    jobs: int = 1,
) -> list[tuple[int, float, float]]:
    """Average solve time against graph size at fixed density and dim_b.

    Factor densities are split evenly (rho_b = rho_c = sqrt(rho_a)).  Each
    dim_c value runs n_instances x n_variations solves; rows are
    (mean edge count, t_avg, t_avg_prime) sorted by edge count.  Rows with
    zero successful runs are omitted (their averages are undefined).
    """
    if not dim_c_values:
        raise ValueError("dim_c_values must be nonempty")
    if not (0.0 < rho_a < 1.0):
        raise ValueError("rho_a must be in (0, 1)")
    rho = math.sqrt(rho_a)
    rows = []
    for dim_c in dim_c_values:
        spec = InstanceSpec(
            dim_b=dim_b,
            dim_c=dim_c,
            rho_b=rho,
            rho_c=rho,
            seed=_derive_seed(seed, dim_c),
        )
        base = cfg.with_dims(dim_b, dim_c) if cfg is not None else None
        batch = run_batch(spec, n_instances, n_variations, base, jobs=jobs)
        if batch.t_avg is None:
            continue
        edges = round(
            sum(r.edges for r in batch.records) / len(batch.records)
        )
        rows.append((int(edges), batch.t_avg, batch.t_avg_prime))
    rows.sort(key=lambda r: r[0])
    return rows


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------


def run_record_dict(rec: RunRecord, dim_b: int, dim_c: int) -> dict:
    rep = rec.report
    return {
        "instance": rec.instance,
        "variation": rec.variation,
        "success": rep.success,
        "n1": dim_b,
        "n2": dim_c,
        "iterations": rep.iterations,
        "restarts": rep.restarts,
        "time_s": rep.wall_time,
        "p": rep.p.map.tolist(),
        "b": rep.b.row_strings(),
        "c": rep.c.row_strings(),
        "zero_matrix": rep.zero_matrix,
    }


def write_runs_json(batch: BatchReport, path: str | Path) -> None:
    """Per-run JSON records; each success is certificate-checked on write."""
    recs = []
    for rec in batch.records:
        rep = rec.report
        if rep.success and permute_symmetric(
            _rebuild_variation(batch.spec, rec.instance, rec.variation), rep.p
        ) != kronecker(rep.b, rep.c):
            raise RuntimeError("certificate verification failed at write time")
        recs.append(run_record_dict(rec, batch.spec.dim_b, batch.spec.dim_c))
    Path(path).write_text(json.dumps(recs, indent=1) + "\n")


def _rebuild_variation(spec: InstanceSpec, i: int, v: int) -> BinaryMatrix:
    b, c = _sample_factors(spec, _rng(spec.seed, _FACTOR_STREAM, i))
    p = Permutation(_rng(spec.seed, _PERM_STREAM, i, v).permutation(spec.n))
    return permute_symmetric(kronecker(b, c), p)


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def write_batch_csv(batch: BatchReport, path: str | Path) -> None:
    """One-row summary with the five batch statistics."""
    header = (
        "dimB,dimC,rhoB,rhoC,instances,variations,seed,"
        "failure_pct,t_min,t_avg_prime,t_avg,t_max"
    )
    s = batch.spec
    row = (
        f"{s.dim_b},{s.dim_c},{s.rho_b},{s.rho_c},"
        f"{batch.n_instances},{batch.n_variations},{s.seed},"
        f"{batch.failure_pct:.2f},{_fmt(batch.t_min)},{_fmt(batch.t_avg_prime)},"
        f"{_fmt(batch.t_avg)},{_fmt(batch.t_max)}"
    )
    Path(path).write_text(header + "\n" + row + "\n")


def write_growth_dat(rows: list[tuple[int, float, float]], path: str | Path) -> None:
    """Whitespace-separated (edges, t_avg, t_avg_prime) rows, plot-ready."""
    lines = [f"{e} {ta:.6f} {tp:.6f}" for e, ta, tp in rows]
    Path(path).write_text("\n".join(lines) + "\n")
