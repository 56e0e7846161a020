"""Permutation local search for exact Kronecker structure.

Given a square 0/1 matrix and a blocking (dim_b, dim_c), the search looks
for a symmetric permutation p with a[p][:, p] = b (x) c.  The main loop
alternates two objectives (block-count variance, then block Gram norm),
seeded by two constructive subroutines:

* grouping: sorts similar rows/columns into common blocks,
* outsiders: ranks swaps that move 1s out of underfull blocks into
  overfull ones,

and, once the matrix is in balanced block form, a two-part layered
procedure (cornerize + layer-by-layer alignment) tries to finish the job.
Stalls are escaped by partial or full random re-permutations.

Success is certified by exact factor extraction, never by a metric value:
every report with success=True satisfies
``permute_symmetric(input, p) == kronecker(b, c)`` bit for bit.

Determinism: all randomness flows from one numpy PCG64 generator seeded
with ``SearchConfig.rng_seed``; identical (input, config) pairs give
identical reports apart from wall time.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from ._kernels import ScanWorkspace, pack_segments, var_scan
from .core import (
    BinaryMatrix,
    Permutation,
    block_counts,
    ceil_fraction,
    permute_symmetric,
)
from .metrics import (
    MetricKind,
    gram_matrix,
    is_exact_product,
    nearest_factors,
    frob_value,
)

_EMPTY_SWAPS = np.empty((0, 2), dtype=np.int64)


@dataclass(frozen=True)
class SearchConfig:
    """Every knob of the search; unspecified constants are exposed here."""

    dim_b: int
    dim_c: int
    max_iter: int = 500
    max_restarts: int = 10
    perturbate_every: int = 3
    metric_switch_stall: int = 20
    cornerize_max_iter: int = 200
    cornerize_target_fraction: float = 0.75
    blockfail_perm_fraction: float = 0.75
    outsiders_stall_perm_fraction: float = 0.45
    cornerize_perm_fraction: float = 0.55
    rng_seed: int = 0

    def validate(self) -> None:
        if self.dim_b < 1 or self.dim_c < 1:
            raise ValueError("dim_b and dim_c must be positive")
        for name in ("max_iter", "max_restarts", "perturbate_every",
                     "metric_switch_stall", "cornerize_max_iter"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("cornerize_target_fraction", "blockfail_perm_fraction",
                     "outsiders_stall_perm_fraction", "cornerize_perm_fraction"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ValueError(f"{name} must be in (0, 1]")

    @property
    def n(self) -> int:
        return self.dim_b * self.dim_c

    def with_dims(self, dim_b: int, dim_c: int) -> "SearchConfig":
        return replace(self, dim_b=dim_b, dim_c=dim_c)


@dataclass
class SearchState:
    """Snapshot of the loop state, handed to trace callbacks."""

    best_a: BinaryMatrix
    cumulative_p: Permutation
    metric: MetricKind
    iter: int
    n_restarts: int
    block_matrix: bool
    cornerized_matrix: bool


@dataclass(frozen=True, eq=False)
class RunReport:
    """Outcome of one solve.

    When success is True, ``permute_symmetric(input, p) == kronecker(b, c)``
    holds exactly; ``zero_matrix`` flags the degenerate all-zero input whose
    factorization is trivial.
    """

    success: bool
    p: Permutation
    b: BinaryMatrix
    c: BinaryMatrix
    iterations: int
    restarts: int
    wall_time: float
    zero_matrix: bool = False


def all_swap_pairs(n: int) -> np.ndarray:
    """(C(n,2), 2) int64 array of all unordered index pairs."""
    iu = np.triu_indices(n, 1)
    return np.column_stack(iu).astype(np.int64)


def perturbation_array(n: int, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Permutation moving ceil(fraction*n) uniformly chosen indices among
    themselves (identity elsewhere)."""
    if not (0.0 < fraction <= 1.0):
        raise ValueError("fraction must be in (0, 1]")
    k = ceil_fraction(fraction, n)
    idx = np.sort(rng.choice(n, size=k, replace=False))
    q = np.arange(n, dtype=np.int64)
    q[idx] = idx[rng.permutation(k)]
    return q


def random_perturbation(
    a: BinaryMatrix, fraction: float, rng: np.random.Generator
) -> tuple[BinaryMatrix, Permutation]:
    """Symmetrically permute a random subset of ceil(fraction*n) indices."""
    p = Permutation(perturbation_array(a.n, fraction, rng))
    return permute_symmetric(a, p), p


# ---------------------------------------------------------------------------
# Row/column grouping
# ---------------------------------------------------------------------------


def _similarity_matrices(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row and column similarity: matching 1s plus matching 0s, zero diagonal."""
    n = bits.shape[0]

    def sim(m: np.ndarray) -> np.ndarray:
        f = m.astype(np.float64)
        dot11 = f @ f.T  # exact: entries <= n << 2**53
        deg = m.sum(axis=1, dtype=np.int64)
        s = np.rint(2 * dot11).astype(np.int64) + n - deg[:, None] - deg[None, :]
        np.fill_diagonal(s, 0)
        return s

    return sim(bits), sim(np.ascontiguousarray(bits.T))


def _greedy_grouping(ms: np.ndarray, dim_c: int) -> np.ndarray:
    """Group each fresh pivot with its dim_c - 1 most similar unused indices.

    Ties break towards the lowest index (stable sort on descending score).
    """
    n = ms.shape[0]
    used = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    pos = 0
    for pivot in range(n):
        if used[pivot]:
            continue
        used[pivot] = True
        order[pos] = pivot
        pos += 1
        if dim_c == 1:
            continue
        row = ms[pivot].copy()
        row[used] = -1  # similarities are >= 0, so -1 excludes used indices
        best = np.argsort(-row, kind="stable")[: dim_c - 1]
        for t in best:
            used[t] = True
            order[pos] = t
            pos += 1
    return order


def grouping_candidates(bits: np.ndarray, dim_b: int, dim_c: int) -> list[np.ndarray]:
    """The six candidate permutations, one per row/column similarity mix."""
    mr, mc = _similarity_matrices(bits)
    out = []
    for w10 in (0, 2, 4, 6, 8, 10):
        ms = w10 * mr + (10 - w10) * mc
        out.append(_greedy_grouping(ms, dim_c))
    return out


def grouping_permutation(bits: np.ndarray, dim_b: int, dim_c: int) -> np.ndarray:
    """Best of the six grouping candidates by the block Gram objective."""
    best_perm = None
    best_val = -1
    for perm in grouping_candidates(bits, dim_b, dim_c):
        val = frob_value(bits[np.ix_(perm, perm)], dim_b, dim_c)
        if val > best_val:
            best_val = val
            best_perm = perm
    return best_perm


def kron_grouping(a: BinaryMatrix, cfg: SearchConfig) -> tuple[BinaryMatrix, Permutation]:
    """Permute similar rows/columns into common blocks (constructive seed)."""
    _check_cfg_dims(a, cfg)
    p = Permutation(grouping_permutation(a.bits, cfg.dim_b, cfg.dim_c))
    return permute_symmetric(a, p), p


# ---------------------------------------------------------------------------
# Outsiders: ranked repair swaps
# ---------------------------------------------------------------------------


def outsiders_swaps(bits: np.ndarray, dim_b: int, dim_c: int) -> np.ndarray | None:
    """Swaps that move 1s from underfull into overfull blocks, best first.

    A block is due to be emptied when its count is below the mean, due to
    be filled otherwise.  A swap (i, j) scores, over every block row/column
    where the two indices cross blocks in opposite conditions, the product
    of the 1s it removes and the 0s it fills, damped by the squared free
    capacity of the filling block; scores are <= 0 and more negative is
    better.  Returns pairs sorted by (score, i, j); zero-score pairs are
    omitted.  Returns None when every score is zero: no block due to be
    emptied has any usable 1s, i.e. the matrix is in block form.
    """
    n = bits.shape[0]
    s = block_counts(bits, dim_b, dim_c)
    total = int(s.sum())
    nb2 = dim_b * dim_b
    emptied = (s * nb2) < total  # strictly below the mean count
    dim_c2 = dim_c * dim_c
    free2 = (dim_c2 - s.astype(np.int64)) ** 2

    r_seg = bits.reshape(n, dim_b, dim_c).sum(axis=2, dtype=np.int64)
    c_seg = (
        np.ascontiguousarray(bits.T).reshape(n, dim_b, dim_c).sum(axis=2, dtype=np.int64)
    )
    p_of = np.repeat(np.arange(dim_b), dim_c)

    # Row contributions: value of row x in block (p, b) is its segment
    # 1-count when (p, b) empties and its negated 0-count when it fills.
    emp_row = emptied[p_of, :]  # (n, dim_b)
    wr = np.where(emp_row, r_seg, r_seg - dim_c)
    alpha_r = np.where(emp_row, wr, 0).astype(np.float64)
    beta_r = np.where(emp_row, 0, wr * free2[p_of, :]).astype(np.float64)
    ms = alpha_r @ beta_r.T + beta_r @ alpha_r.T

    # Column contributions, same structure on the transpose.
    emp_col = emptied[:, p_of].T  # (n, dim_b): block (b, x//dim_c)
    wc = np.where(emp_col, c_seg, c_seg - dim_c)
    free_col = free2[:, p_of].T
    alpha_c = np.where(emp_col, wc, 0).astype(np.float64)
    beta_c = np.where(emp_col, 0, wc * free_col).astype(np.float64)
    ms += alpha_c @ beta_c.T + beta_c @ alpha_c.T

    ms_int = np.rint(ms).astype(np.int64)
    same_block = p_of[:, None] == p_of[None, :]
    ms_int[same_block] = 0

    ii, jj = np.triu_indices(n, 1)
    vals = ms_int[ii, jj]
    keep = vals != 0
    if not keep.any():
        return None
    ii, jj, vals = ii[keep], jj[keep], vals[keep]
    order = np.lexsort((jj, ii, vals))
    return np.column_stack((ii[order], jj[order])).astype(np.int64)


def outsiders(a: BinaryMatrix, cfg: SearchConfig) -> list[tuple[int, int]] | None:
    """Public wrapper: ordered repair swaps, or None as the block-form signal."""
    _check_cfg_dims(a, cfg)
    sw = outsiders_swaps(a.bits, cfg.dim_b, cfg.dim_c)
    if sw is None:
        return None
    return [(int(i), int(j)) for i, j in sw]


# ---------------------------------------------------------------------------
# Cornerize (block-level top-left packing)
# ---------------------------------------------------------------------------


def corner_weights(dim_b: int) -> np.ndarray:
    """Weight (dim_b - max(i, j))^3: heaviest at the top-left block."""
    idx = np.arange(dim_b)
    return (dim_b - np.maximum.outer(idx, idx)).astype(np.int64) ** 3


def cornerize(
    occ: np.ndarray, cfg: SearchConfig, rng: np.random.Generator
) -> tuple[np.ndarray, int, int]:
    """Hill-climb block swaps pushing occupied blocks top-left.

    Works on the boolean occupancy grid only.  Stops once the weighted
    occupancy reaches cornerize_target_fraction of the optimum (the sum of
    the n_filled largest weights); on a stalled sweep, perturbs
    cornerize_perm_fraction of the block indices.  Returns
    (block permutation, value, optimum).
    """
    dim_b = occ.shape[0]
    w = corner_weights(dim_b)
    occ = occ.astype(np.int64).copy()
    perm = np.arange(dim_b, dtype=np.int64)
    n_filled = int((occ > 0).sum())
    opt = int(np.sort(w.ravel())[::-1][:n_filled].sum())
    val = int((occ * w).sum())
    pairs = all_swap_pairs(dim_b)
    target = cfg.cornerize_target_fraction * opt
    for _ in range(cfg.cornerize_max_iter):
        if val >= target:
            break
        improved = False
        for t in rng.permutation(len(pairs)):
            bi, bj = pairs[t]
            q = np.arange(dim_b)
            q[bi], q[bj] = bj, bi
            test = occ[np.ix_(q, q)]
            tv = int((test * w).sum())
            if tv > val:
                occ = test
                perm = perm[q]
                val = tv
                improved = True
                break
        if val >= target:
            break
        if not improved:
            q = perturbation_array(dim_b, cfg.cornerize_perm_fraction, rng)
            occ = occ[np.ix_(q, q)]
            perm = perm[q]
            val = int((occ * w).sum())
    return perm, val, opt


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------


class _Engine:
    """Owns the working matrix plus every derived table the kernels need.

    Single-threaded by design: one engine per search.  The permutation
    invariant ``original[perm][:, perm] == a`` holds after every mutation.
    """

    def __init__(self, bits: np.ndarray, cfg: SearchConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.dim_b = cfg.dim_b
        self.dim_c = cfg.dim_c
        self.n = bits.shape[0]
        self.a = np.array(bits, dtype=np.uint8, copy=True)
        self.perm = np.arange(self.n, dtype=np.int64)
        self.rng = rng
        self.ws = ScanWorkspace(self.dim_b, self.dim_c)
        self._g = None
        self._refresh()

    def _refresh(self) -> None:
        n, dim_b, dim_c = self.n, self.dim_b, self.dim_c
        at = np.ascontiguousarray(self.a.T)
        self.s_cnt = block_counts(self.a, dim_b, dim_c)
        self.r_seg = self.a.reshape(n, dim_b, dim_c).sum(axis=2, dtype=np.int64)
        self.c_seg = at.reshape(n, dim_b, dim_c).sum(axis=2, dtype=np.int64)
        self.row_bits = pack_segments(self.a, dim_b, dim_c)
        self.col_bits = pack_segments(at, dim_b, dim_c)
        self._g = None

    def gram(self) -> np.ndarray:
        if self._g is None:
            self._g = gram_matrix(self.a, self.dim_b, self.dim_c)
        return self._g

    def frob(self, limit: int | None = None) -> int:
        g = self.gram()
        if limit is not None and limit < self.dim_b:
            sub = g.reshape(self.dim_b, self.dim_b, self.dim_b, self.dim_b)[
                :limit, :limit, :limit, :limit
            ]
            return int((sub.astype(np.int64) ** 2).sum())
        return int((g.astype(np.int64) ** 2).sum())

    def apply_perm_array(self, q: np.ndarray) -> None:
        self.a = self.a[np.ix_(q, q)]
        self.perm = self.perm[q]
        self._refresh()

    def apply_swap(self, i: int, j: int) -> None:
        q = np.arange(self.n, dtype=np.int64)
        q[i], q[j] = j, i
        self.apply_perm_array(q)

    def random_perturbation(self, fraction: float) -> None:
        self.apply_perm_array(perturbation_array(self.n, fraction, self.rng))

    def kron_grouping(self) -> None:
        self.apply_perm_array(grouping_permutation(self.a, self.dim_b, self.dim_c))

    def outsiders(self) -> np.ndarray | None:
        return outsiders_swaps(self.a, self.dim_b, self.dim_c)

    def is_exact(self) -> bool:
        return is_exact_product(self.a, self.dim_b, self.dim_c)

    def balanced(self) -> bool:
        nz = self.s_cnt[self.s_cnt > 0]
        return nz.size == 0 or bool((nz == nz[0]).all())

    def counts_block_form(self) -> bool:
        """Extended block-form test on the maintained counts."""
        c = self.s_cnt
        total = int(c.sum())
        nb2 = self.dim_b**2
        if bool(((c == 0) | (c * nb2 > total)).all()):
            return True
        return bool((c > 0).all() and (c == c.flat[0]).all())

    def scan(self, metric: MetricKind, swaps: np.ndarray, limit: int | None = None) -> int:
        """Index of the first swap strictly improving the metric, or -1."""
        if swaps.shape[0] == 0:
            return -1
        if metric is MetricKind.VAR:
            k, _ = var_scan(swaps, self.a, self.r_seg, self.c_seg, self.s_cnt, self.dim_c)
        else:
            k, _ = self.ws.frob_scan(
                swaps, self.a, self.row_bits, self.col_bits, self.gram(), limit
            )
        return int(k)

    # -- layered factorization --------------------------------------------

    def apply_block_permutation(self, bperm: np.ndarray) -> None:
        q = (bperm[:, None] * self.dim_c + np.arange(self.dim_c)[None, :]).ravel()
        self.apply_perm_array(q.astype(np.int64))

    def _layer_exact(self, cur: int) -> bool:
        hi = cur * self.dim_c
        sub = np.ascontiguousarray(self.a[:hi, :hi])
        return is_exact_product(sub, cur, self.dim_c)

    def layer_search(self, cur: int, settled: int) -> bool:
        """Gram-objective local search on the leading cur x cur block
        submatrix, with swaps confined to the unsettled layers."""
        lo = settled * self.dim_c
        hi = cur * self.dim_c
        idx = np.arange(lo, hi, dtype=np.int64)
        ii, jj = np.triu_indices(len(idx), 1)
        pool = np.column_stack((idx[ii], idx[jj]))
        while True:
            if self._layer_exact(cur):
                return True
            order = pool[self.rng.permutation(len(pool))]
            k = self.scan(MetricKind.FROB, order, limit=cur)
            if k < 0:
                return False
            self.apply_swap(int(order[k, 0]), int(order[k, 1]))

    def onion(self) -> bool:
        """Cornerize the occupancy grid, then align layer by layer.

        Returns True when the last layer check succeeds, i.e. the whole
        matrix is an exact product.  Always leaves the matrix cornerized.
        """
        occ = (self.s_cnt > 0).astype(np.int64)
        bperm, _, _ = cornerize(occ, self.cfg, self.rng)
        self.apply_block_permutation(bperm)
        ok = self.dim_b == 1
        settled = 1
        for cur in range(2, self.dim_b + 1):
            ok = self.layer_search(cur, settled)
            if ok:
                settled = cur
        return ok


# ---------------------------------------------------------------------------
# Main loop
# ---------------------------------------------------------------------------


def _check_cfg_dims(a: BinaryMatrix, cfg: SearchConfig) -> None:
    cfg.validate()
    if cfg.dim_b * cfg.dim_c != a.n:
        raise ValueError(f"dim_b*dim_c = {cfg.dim_b}*{cfg.dim_c} != n = {a.n}")


def onion_search(
    a: BinaryMatrix, cfg: SearchConfig
) -> tuple[bool, BinaryMatrix, Permutation]:
    """Run the layered procedure alone on a balanced block matrix."""
    _check_cfg_dims(a, cfg)
    counts = block_counts(a.bits, cfg.dim_b, cfg.dim_c)
    nz = counts[counts > 0]
    if nz.size and not (nz == nz[0]).all():
        raise ValueError("input is not a balanced block matrix")
    eng = _Engine(a.bits, cfg, np.random.Generator(np.random.PCG64(cfg.rng_seed)))
    ok = eng.onion()
    return ok and eng.is_exact(), BinaryMatrix(eng.a), Permutation(eng.perm)


def alternate_local_search(a: BinaryMatrix, cfg: SearchConfig, trace=None) -> RunReport:
    """Full search: returns a certified RunReport (see module docstring).

    ``trace``, when given, is called as trace(event, SearchState) after
    every state-changing step; meant for tests and debugging.
    """
    _check_cfg_dims(a, cfg)
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.PCG64(cfg.rng_seed))
    eng = _Engine(a.bits, cfg, rng)
    dim_b, dim_c = cfg.dim_b, cfg.dim_c

    iterations = 0
    restarts = 0
    metric = MetricKind.VAR
    block_matrix = False
    cornerized = False
    var_stall = 0
    best_swaps = _EMPTY_SWAPS
    success = False

    def emit(event: str) -> None:
        if trace is not None:
            trace(
                event,
                SearchState(
                    best_a=BinaryMatrix(eng.a),
                    cumulative_p=Permutation(eng.perm),
                    metric=metric,
                    iter=iterations,
                    n_restarts=restarts,
                    block_matrix=block_matrix,
                    cornerized_matrix=cornerized,
                ),
            )

    def finish(ok: bool) -> RunReport:
        b_bits, c_bits, residual = nearest_factors(eng.a, dim_b, dim_c)
        certified = ok and residual == 0
        return RunReport(
            success=certified,
            p=Permutation(eng.perm),
            b=BinaryMatrix(b_bits),
            c=BinaryMatrix(c_bits),
            iterations=iterations,
            restarts=restarts,
            wall_time=time.perf_counter() - t0,
            zero_matrix=certified and int(eng.a.sum()) == 0,
        )

    if eng.is_exact():
        return finish(True)

    base_swaps = all_swap_pairs(eng.n)
    base_swaps = base_swaps[rng.permutation(len(base_swaps))]
    eng.kron_grouping()
    emit("grouped")

    while iterations < cfg.max_iter:
        iterations += 1

        if not block_matrix:
            sw = eng.outsiders()
            if sw is None:
                block_matrix = True
                best_swaps = _EMPTY_SWAPS
            else:
                best_swaps = sw

        if block_matrix and not cornerized and not eng.balanced():
            # Blocks carry different counts: no exact product looks like
            # this, so the climb reached a dead end.
            eng.random_perturbation(cfg.blockfail_perm_fraction)
            eng.kron_grouping()
            block_matrix = False
            emit("blockfail_perturb")

        if block_matrix and not cornerized:
            ok = eng.onion()
            cornerized = True
            emit("onion")
            if ok and eng.is_exact():
                success = True
                break
            continue

        accepted = False
        var_improved = False
        k = eng.scan(metric, best_swaps)
        if k >= 0:
            eng.apply_swap(int(best_swaps[k, 0]), int(best_swaps[k, 1]))
            accepted = True
            if metric is MetricKind.VAR:
                var_improved = True
                if eng.counts_block_form():
                    metric = MetricKind.FROB
            emit("accept_best")
        else:
            # Ranked swaps exhausted: continue over the general pool, with
            # the already-scheduled order; reshuffle only for later rounds.
            current_base = base_swaps
            base_swaps = base_swaps[rng.permutation(len(base_swaps))]
            if metric is MetricKind.FROB:
                eng.random_perturbation(cfg.outsiders_stall_perm_fraction)
                eng.kron_grouping()
                block_matrix = False
                cornerized = False
                metric = MetricKind.VAR
                emit("stall_perturb")
            else:
                metric = MetricKind.FROB
            k = eng.scan(metric, current_base)
            if k >= 0:
                eng.apply_swap(int(current_base[k, 0]), int(current_base[k, 1]))
                accepted = True
                emit("accept_base")

        if not accepted:
            restarts += 1
            if restarts % cfg.perturbate_every == 0:
                eng.random_perturbation(1.0)
                eng.kron_grouping()
                block_matrix = False
                cornerized = False
                metric = MetricKind.VAR
                emit("restart_perturb")
            else:
                metric = (
                    MetricKind.FROB if metric is MetricKind.VAR else MetricKind.VAR
                )
                emit("restart_swap_metric")

        if metric is MetricKind.VAR:
            if var_improved:
                var_stall = 0
            else:
                var_stall += 1
                if var_stall >= cfg.metric_switch_stall:
                    metric = MetricKind.FROB
                    var_stall = 0
        else:
            var_stall = 0

        if eng.is_exact():
            success = True
            break
        if restarts > cfg.max_restarts * cfg.perturbate_every:
            break

    return finish(success)


def warmup() -> None:
    """Compile the scan kernels on a tiny instance (call before timing)."""
    bits = np.zeros((4, 4), dtype=np.uint8)
    bits[0, 1] = bits[1, 0] = bits[2, 3] = 1
    alternate_local_search(
        BinaryMatrix(bits), SearchConfig(dim_b=2, dim_c=2, max_iter=3, rng_seed=1)
    )
