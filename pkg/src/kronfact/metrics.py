"""Search objectives and binary nearest-Kronecker-product extraction.

Two objectives drive the permutation search, both higher-is-better:

* VAR  -- population variance of the per-block 1-counts; it grows as the
  matrix approaches block form (mass concentrates in few blocks).
* FROB -- sum of squared pairwise dot products of the vectorized blocks,
  i.e. the squared Frobenius norm of the Gram matrix F F^T where row k of
  F is block (k // dim_b, k % dim_b) flattened row-major.  For a fixed
  total number of 1s it is maximized when all nonzero blocks coincide.

Exact success is certified by the residual of the binary factor
extraction: the Hamming distance between the matrix and the product of
its extracted factors, which is zero iff the matrix is exactly a
Kronecker product under the given blocking.  Binary matrices make this an
exact integer test; no floating tolerance is involved.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import BinaryMatrix, block_counts, kronecker


class MetricKind(enum.Enum):
    VAR = "var"
    FROB = "frob"


@dataclass(frozen=True, eq=False)
class FactorPair:
    """Extracted factors plus the Hamming residual ||a - b (x) c||."""

    b: BinaryMatrix
    c: BinaryMatrix
    residual: int

    @property
    def exact(self) -> bool:
        return self.residual == 0


def _check_dims(n: int, dim_b: int, dim_c: int) -> None:
    if dim_b < 1 or dim_c < 1 or dim_b * dim_c != n:
        raise ValueError(f"dim_b*dim_c = {dim_b}*{dim_c} != n = {n}")


def blocks_as_rows(bits: np.ndarray, dim_b: int, dim_c: int) -> np.ndarray:
    """(dim_b^2, dim_c^2) array: row i*dim_b+j is block (i, j) flattened."""
    return (
        bits.reshape(dim_b, dim_c, dim_b, dim_c)
        .transpose(0, 2, 1, 3)
        .reshape(dim_b * dim_b, dim_c * dim_c)
    )


def gram_matrix(bits: np.ndarray, dim_b: int, dim_c: int) -> np.ndarray:
    """int64 Gram matrix of the vectorized blocks, G[p][q] = F_p . F_q.

    Entries are at most dim_c^2 so the float64 BLAS product is exact.
    """
    f = blocks_as_rows(bits, dim_b, dim_c).astype(np.float64)
    return np.rint(f @ f.T).astype(np.int64)


def var_stat(counts: np.ndarray) -> int:
    """Integer statistic dim_b^2 * sum(s^2) - (sum s)^2 = dim_b^4 * variance."""
    s = counts.astype(np.int64)
    return int(s.size * (s * s).sum() - s.sum() ** 2)


def var_metric_of_counts(counts: np.ndarray) -> float:
    return var_stat(counts) / counts.size**2


def var_metric(g) -> float:
    """Population variance of the block 1-counts (from a BlockGrid)."""
    return var_metric_of_counts(g.counts)


def frob_value(bits: np.ndarray, dim_b: int, dim_c: int) -> int:
    g = gram_matrix(bits, dim_b, dim_c)
    return int((g.astype(np.int64) ** 2).sum())


def frob_metric(a: BinaryMatrix, dim_b: int, dim_c: int) -> int:
    """Sum over all ordered block pairs (p, q) of (F_p . F_q)^2."""
    _check_dims(a.n, dim_b, dim_c)
    return frob_value(a.bits, dim_b, dim_c)


def nearest_factors(bits: np.ndarray, dim_b: int, dim_c: int):
    """Array-level binary factor extraction, returns (b, c, residual).

    b marks the nonzero blocks; c is the entrywise majority vote over the
    nonzero blocks, ties broken towards 1 (minimizes the Hamming residual
    per entry for the chosen b).  An all-zero input yields zero factors
    with residual 0: the empty graph factorizes trivially.
    """
    counts = block_counts(bits, dim_b, dim_c)
    b = (counts > 0).astype(np.uint8)
    k = int(b.sum())
    if k == 0:
        return b, np.zeros((dim_c, dim_c), dtype=np.uint8), 0
    blocks = bits.reshape(dim_b, dim_c, dim_b, dim_c).transpose(0, 2, 1, 3)
    votes = blocks[b.astype(bool)].sum(axis=0, dtype=np.int64)
    c = (2 * votes >= k).astype(np.uint8)
    residual = int((bits != np.kron(b, c)).sum())
    return b, c, residual


def nearest_binary_kronecker(a: BinaryMatrix, dim_b: int, dim_c: int) -> FactorPair:
    """Project ``a`` onto the closest binary Kronecker product for this blocking."""
    _check_dims(a.n, dim_b, dim_c)
    b, c, residual = nearest_factors(a.bits, dim_b, dim_c)
    return FactorPair(BinaryMatrix(b), BinaryMatrix(c), residual)


def is_exact_product(bits: np.ndarray, dim_b: int, dim_c: int) -> bool:
    """Fast array-level exactness test: all nonzero blocks equal, rest zero."""
    counts = block_counts(bits, dim_b, dim_c)
    nz = counts > 0
    k = int(nz.sum())
    if k == 0:
        return True
    first = counts[nz].flat[0]
    if not (counts[nz] == first).all():
        return False
    blocks = bits.reshape(dim_b, dim_c, dim_b, dim_c).transpose(0, 2, 1, 3)
    ref = blocks[nz][0]
    return bool((blocks[nz] == ref).all())


def is_exact_kronecker(a: BinaryMatrix, dim_b: int, dim_c: int) -> bool:
    """True iff ``a`` equals b (x) c exactly for the extracted binary factors."""
    _check_dims(a.n, dim_b, dim_c)
    return is_exact_product(a.bits, dim_b, dim_c)


def residual(a: BinaryMatrix, b: BinaryMatrix, c: BinaryMatrix) -> int:
    """Hamming distance ||a - b (x) c||; zero iff the factorization is exact."""
    prod = kronecker(b, c)
    if prod.n != a.n:
        raise ValueError("factor sizes do not multiply to the matrix size")
    return int((a.bits != prod.bits).sum())
