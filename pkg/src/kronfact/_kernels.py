"""Hot-loop kernels for the swap scans of the local search.

The search spends nearly all of its time testing candidate symmetric swaps
(i, j) against the active objective.  Recomputing an objective from scratch
per candidate is O(n^2) or worse, so these kernels evaluate exact integer
*deltas* instead:

* VAR:  a swap only moves row/column segments between block rows/columns,
  so the change of sum(counts^2) follows from per-row segment counts in
  O(dim_b) per candidate.
* FROB: a swap only rewrites one row and one column strip of blocks, so
  the change of sum(G^2) (G = Gram matrix of vectorized blocks) follows
  from popcount dot products of per-block row segments, packed 64 bits
  per word.

The FROB delta is computed in two phases, row exchange then column
exchange, because the two interact; phase one patches G in place (with an
undo log) so phase two sees the intermediate state, and every patch is
reverted before the kernel returns.  Column segments of the row-swapped
matrix differ from the original only in two bit positions per word, which
the read path fixes up on the fly instead of materializing a copy.

All kernels are pure functions of their array arguments apart from the
documented transient patching of G.  They are compiled with numba when it
is importable and run as plain Python otherwise (slow but identical).
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


_U = np.uint64

if HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _pc(x):
        # SWAR popcount of one 64-bit word.
        x = x - ((x >> _U(1)) & _U(0x5555555555555555))
        x = (x & _U(0x3333333333333333)) + ((x >> _U(2)) & _U(0x3333333333333333))
        x = (x + (x >> _U(4))) & _U(0x0F0F0F0F0F0F0F0F)
        return np.int64((x * _U(0x0101010101010101)) >> _U(56))

else:  # pragma: no cover

    def _pc(x):
        return int(x).bit_count()


def pack_segments(bits: np.ndarray, dim_b: int, dim_c: int) -> np.ndarray:
    """Pack each (row, block) segment of a 0/1 matrix into uint64 words.

    Returns shape (n, dim_b, W) with W = ceil(dim_c / 64); bit c of word w
    in segment (r, b) is bits[r][b*dim_c + 64*w + c].
    """
    n = bits.shape[0]
    w = (dim_c + 63) // 64
    padded = np.zeros((n, dim_b, w * 64), dtype=np.uint8)
    padded[:, :, :dim_c] = bits.reshape(n, dim_b, dim_c)
    packed = np.packbits(padded, axis=2, bitorder="little")
    return np.ascontiguousarray(packed).view(np.uint64).reshape(n, dim_b, w)


@njit(cache=True, nogil=True)
def var_scan(swaps, a, r_seg, c_seg, s_cnt, dim_c):
    """First candidate whose symmetric swap strictly raises sum(block_counts^2).

    Arguments: swaps (m, 2) int64; a the uint8 matrix; r_seg / c_seg the
    int64 (n, dim_b) row/column segment 1-counts; s_cnt the int64
    (dim_b, dim_b) block counts.  Returns (index, delta) or (-1, 0).
    """
    dim_b = s_cnt.shape[0]
    for k in range(swaps.shape[0]):
        i = swaps[k, 0]
        j = swaps[k, 1]
        pi = i // dim_c
        pj = j // dim_c
        if pi == pj:
            continue  # counts are unchanged by an intra-block swap
        kappa = (
            np.int64(a[i, i]) + np.int64(a[j, j]) - np.int64(a[i, j]) - np.int64(a[j, i])
        )
        dq = np.int64(0)
        for b in range(dim_b):
            if b == pi or b == pj:
                continue
            dr = r_seg[j, b] - r_seg[i, b]
            s1 = s_cnt[pi, b]
            s2 = s_cnt[pj, b]
            dq += (s1 + dr) ** 2 - s1 * s1 + (s2 - dr) ** 2 - s2 * s2
            dc = c_seg[j, b] - c_seg[i, b]
            t1 = s_cnt[b, pi]
            t2 = s_cnt[b, pj]
            dq += (t1 + dc) ** 2 - t1 * t1 + (t2 - dc) ** 2 - t2 * t2
        dr_pi = r_seg[j, pi] - r_seg[i, pi]
        dr_pj = r_seg[j, pj] - r_seg[i, pj]
        dc_pi = c_seg[j, pi] - c_seg[i, pi]
        dc_pj = c_seg[j, pj] - c_seg[i, pj]
        s = s_cnt[pi, pi]
        ns = s + dr_pi + dc_pi + kappa
        dq += ns * ns - s * s
        s = s_cnt[pi, pj]
        ns = s + dr_pj - dc_pi - kappa
        dq += ns * ns - s * s
        s = s_cnt[pj, pi]
        ns = s - dr_pi + dc_pj - kappa
        dq += ns * ns - s * s
        s = s_cnt[pj, pj]
        ns = s - dr_pj - dc_pj + kappa
        dq += ns * ns - s * s
        if dq > 0:
            return k, dq
    return -1, np.int64(0)


@njit(cache=True, inline="always")
def _read_word(segs, fix, rowi, rowj, x, b, w, pi, pj, ri, rj):
    """Segment word (x, b, w), optionally fixed up to the row-swapped matrix.

    With fix on, segs holds column segments of the original matrix while
    the caller works on the transpose of the row-swapped one: bit ri of
    block pi becomes rowj[x] and bit rj of block pj becomes rowi[x].
    """
    word = segs[x, b, w]
    if fix:
        if b == pi and (ri >> 6) == w:
            bit = _U(ri & 63)
            word = (word & ~(_U(1) << bit)) | (_U(rowj[x]) << bit)
        if b == pj and (rj >> 6) == w:
            bit = _U(rj & 63)
            word = (word & ~(_U(1) << bit)) | (_U(rowi[x]) << bit)
    return word


@njit(cache=True, inline="always")
def _pair(
    g, dim_b, transposed, limit, pa, pb, qa, qb, delta, factor, do_patch,
    patch_p, patch_q, patch_d, n_patch, acc,
):
    """Fold one changed block pair into the restricted sum(G^2) delta.

    Block coordinates are given in the working orientation; `transposed`
    maps them back to the orientation G was built in.  Only pairs whose
    four block coordinates are all < limit count towards the accumulator,
    but G is patched (symmetrically, with an undo record) regardless.
    """
    if transposed:
        pf = pb * dim_b + pa
        qf = qb * dim_b + qa
    else:
        pf = pa * dim_b + pb
        qf = qa * dim_b + qb
    gv = g[pf, qf]
    if pa < limit and pb < limit and qa < limit and qb < limit:
        acc += factor * (2 * gv * delta + delta * delta)
    if do_patch:
        g[pf, qf] = gv + delta
        if pf != qf:
            g[qf, pf] = gv + delta
        patch_p[n_patch] = pf
        patch_q[n_patch] = qf
        patch_d[n_patch] = delta
        n_patch += 1
    return acc, n_patch


@njit(cache=True, nogil=True)
def _swap_phase(
    segs, fix, rowi, rowj, g, i, j, dim_b, dim_c, n_words, limit, transposed,
    do_patch, patch_p, patch_q, patch_d, n_patch, dp, dm, qw1, qw2,
):
    """Delta of the restricted sum(G^2) for exchanging rows i, j.

    The matrix being operated on is defined by (segs, fix): its block
    Gram matrix is g up to `transposed` coordinates.  Deltas touch only
    block rows pi = i//dim_c and pj = j//dim_c; each changed (pair, value)
    is folded via _pair.  Returns (delta, n_patch).
    """
    pi = i // dim_c
    pj = j // dim_c
    ri = i % dim_c
    rj = j % dim_c
    acc = np.int64(0)

    for b in range(dim_b):
        for w in range(n_words):
            wi = _read_word(segs, fix, rowi, rowj, i, b, w, pi, pj, ri, rj)
            wj = _read_word(segs, fix, rowi, rowj, j, b, w, pi, pj, ri, rj)
            dp[b, w] = wj & ~wi
            dm[b, w] = wi & ~wj

    if pi == pj:
        # Rows stay inside one block row: pairs within the strip are
        # unchanged (both blocks swap the same two rows), so only pairs
        # against external blocks contribute.
        for s in range(dim_b):
            if s == pi:
                continue
            row1 = s * dim_c + ri
            row2 = s * dim_c + rj
            for t in range(dim_b):
                for w in range(n_words):
                    qw1[w] = _read_word(segs, fix, rowi, rowj, row1, t, w, pi, pj, ri, rj)
                    qw2[w] = _read_word(segs, fix, rowi, rowj, row2, t, w, pi, pj, ri, rj)
                for b in range(dim_b):
                    d = np.int64(0)
                    for w in range(n_words):
                        d += _pc(dp[b, w] & qw1[w]) - _pc(dm[b, w] & qw1[w])
                        d -= _pc(dp[b, w] & qw2[w]) - _pc(dm[b, w] & qw2[w])
                    if d != 0:
                        acc, n_patch = _pair(
                            g, dim_b, transposed, limit, pi, b, s, t, d, 2,
                            do_patch, patch_p, patch_q, patch_d, n_patch, acc,
                        )
        return acc, n_patch

    # Distinct block rows: row ri of strip pi takes row j's content and row
    # rj of strip pj takes row i's.
    for s in range(dim_b):
        if s == pi or s == pj:
            continue
        row1 = s * dim_c + ri
        row2 = s * dim_c + rj
        for t in range(dim_b):
            for w in range(n_words):
                qw1[w] = _read_word(segs, fix, rowi, rowj, row1, t, w, pi, pj, ri, rj)
                qw2[w] = _read_word(segs, fix, rowi, rowj, row2, t, w, pi, pj, ri, rj)
            for b in range(dim_b):
                d = np.int64(0)
                e = np.int64(0)
                for w in range(n_words):
                    d += _pc(dp[b, w] & qw1[w]) - _pc(dm[b, w] & qw1[w])
                    e += _pc(dp[b, w] & qw2[w]) - _pc(dm[b, w] & qw2[w])
                if d != 0:
                    acc, n_patch = _pair(
                        g, dim_b, transposed, limit, pi, b, s, t, d, 2,
                        do_patch, patch_p, patch_q, patch_d, n_patch, acc,
                    )
                if e != 0:
                    acc, n_patch = _pair(
                        g, dim_b, transposed, limit, pj, b, s, t, -e, 2,
                        do_patch, patch_p, patch_q, patch_d, n_patch, acc,
                    )

    # Cross pairs between the two strips.
    if ri != rj:
        row_a = pj * dim_c + ri  # row ri of blocks (pj, t), unchanged by the swap
        row_b = pi * dim_c + rj  # row rj of blocks (pi, b), unchanged by the swap
        for t in range(dim_b):
            for w in range(n_words):
                qw1[w] = _read_word(segs, fix, rowi, rowj, row_a, t, w, pi, pj, ri, rj)
            for b in range(dim_b):
                d = np.int64(0)
                for w in range(n_words):
                    d += _pc(dp[b, w] & qw1[w]) - _pc(dm[b, w] & qw1[w])
                    pw = _read_word(segs, fix, rowi, rowj, row_b, b, w, pi, pj, ri, rj)
                    d -= _pc(dp[t, w] & pw) - _pc(dm[t, w] & pw)
                if d != 0:
                    acc, n_patch = _pair(
                        g, dim_b, transposed, limit, pi, b, pj, t, d, 2,
                        do_patch, patch_p, patch_q, patch_d, n_patch, acc,
                    )
    else:
        # Same relative row: both strips change the very same row index.
        for t in range(dim_b):
            for b in range(dim_b):
                d = np.int64(0)
                for w in range(n_words):
                    wjb = _read_word(segs, fix, rowi, rowj, j, b, w, pi, pj, ri, rj)
                    wit = _read_word(segs, fix, rowi, rowj, i, t, w, pi, pj, ri, rj)
                    wib = _read_word(segs, fix, rowi, rowj, i, b, w, pi, pj, ri, rj)
                    wjt = _read_word(segs, fix, rowi, rowj, j, t, w, pi, pj, ri, rj)
                    d += _pc(wjb & wit) - _pc(wib & wjt)
                if d != 0:
                    acc, n_patch = _pair(
                        g, dim_b, transposed, limit, pi, b, pj, t, d, 2,
                        do_patch, patch_p, patch_q, patch_d, n_patch, acc,
                    )

    # Pairs inside each strip: both blocks replace the same relative row.
    for b in range(dim_b):
        for t in range(b, dim_b):
            d = np.int64(0)
            e = np.int64(0)
            for w in range(n_words):
                wjb = _read_word(segs, fix, rowi, rowj, j, b, w, pi, pj, ri, rj)
                wjt = _read_word(segs, fix, rowi, rowj, j, t, w, pi, pj, ri, rj)
                wib = _read_word(segs, fix, rowi, rowj, i, b, w, pi, pj, ri, rj)
                wit = _read_word(segs, fix, rowi, rowj, i, t, w, pi, pj, ri, rj)
                d += _pc(wjb & wjt) - _pc(wib & wit)
                e += _pc(wib & wit) - _pc(wjb & wjt)
            factor = 1 if b == t else 2
            if d != 0:
                acc, n_patch = _pair(
                    g, dim_b, transposed, limit, pi, b, pi, t, d, factor,
                    do_patch, patch_p, patch_q, patch_d, n_patch, acc,
                )
            if e != 0:
                acc, n_patch = _pair(
                    g, dim_b, transposed, limit, pj, b, pj, t, e, factor,
                    do_patch, patch_p, patch_q, patch_d, n_patch, acc,
                )
    return acc, n_patch


@njit(cache=True, nogil=True)
def frob_swap_delta(
    a, row_seg, col_seg, g, i, j, dim_b, dim_c, n_words, limit,
    patch_p, patch_q, patch_d, dp, dm, qw1, qw2,
):
    """Exact change of the restricted sum(G^2) under the symmetric swap (i, j).

    Phase one applies the row exchange (patching g along the way), phase
    two applies the column exchange on the transposed view; all patches
    are reverted before returning.
    """
    rowi = a[i]
    rowj = a[j]
    d1, n_patch = _swap_phase(
        row_seg, False, rowi, rowj, g, i, j, dim_b, dim_c, n_words, limit,
        False, True, patch_p, patch_q, patch_d, 0, dp, dm, qw1, qw2,
    )
    d2, n_patch = _swap_phase(
        col_seg, True, rowi, rowj, g, i, j, dim_b, dim_c, n_words, limit,
        True, False, patch_p, patch_q, patch_d, n_patch, dp, dm, qw1, qw2,
    )
    for t in range(n_patch - 1, -1, -1):
        pf = patch_p[t]
        qf = patch_q[t]
        g[pf, qf] -= patch_d[t]
        if pf != qf:
            g[qf, pf] -= patch_d[t]
    return d1 + d2


@njit(cache=True, nogil=True)
def frob_scan(
    swaps, a, row_seg, col_seg, g, dim_b, dim_c, n_words, limit,
    patch_p, patch_q, patch_d, dp, dm, qw1, qw2,
):
    """First candidate whose symmetric swap strictly raises the restricted
    sum(G^2); returns (index, delta) or (-1, 0)."""
    for k in range(swaps.shape[0]):
        d = frob_swap_delta(
            a, row_seg, col_seg, g, swaps[k, 0], swaps[k, 1], dim_b, dim_c,
            n_words, limit, patch_p, patch_q, patch_d, dp, dm, qw1, qw2,
        )
        if d > 0:
            return k, d
    return -1, np.int64(0)


class ScanWorkspace:
    """Preallocated scratch buffers shared by the scan kernels."""

    def __init__(self, dim_b: int, dim_c: int):
        self.dim_b = dim_b
        self.dim_c = dim_c
        self.n_words = (dim_c + 63) // 64
        cap = 4 * dim_b**3 + 8 * dim_b**2 + 16
        self.patch_p = np.zeros(cap, dtype=np.int64)
        self.patch_q = np.zeros(cap, dtype=np.int64)
        self.patch_d = np.zeros(cap, dtype=np.int64)
        self.dp = np.zeros((dim_b, self.n_words), dtype=np.uint64)
        self.dm = np.zeros((dim_b, self.n_words), dtype=np.uint64)
        self.qw1 = np.zeros(self.n_words, dtype=np.uint64)
        self.qw2 = np.zeros(self.n_words, dtype=np.uint64)

    def frob_scan(self, swaps, a, row_seg, col_seg, g, limit=None):
        if limit is None:
            limit = self.dim_b
        return frob_scan(
            swaps, a, row_seg, col_seg, g, self.dim_b, self.dim_c,
            self.n_words, limit, self.patch_p, self.patch_q, self.patch_d,
            self.dp, self.dm, self.qw1, self.qw2,
        )

    def frob_swap_delta(self, a, row_seg, col_seg, g, i, j, limit=None):
        if limit is None:
            limit = self.dim_b
        return frob_swap_delta(
            a, row_seg, col_seg, g, i, j, self.dim_b, self.dim_c,
            self.n_words, limit, self.patch_p, self.patch_q, self.patch_d,
            self.dp, self.dm, self.qw1, self.qw2,
        )
