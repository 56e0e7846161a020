"""Exhaustive ground truth for small instances.

Enumerates all n! symmetric permutations of a matrix and tests each for
exact Kronecker structure, either collecting every distinct factor pair
(witnesses) or stopping at the first hit.  Used to validate the heuristic
and the metrics; guarded against accidental use beyond tiny sizes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import BinaryMatrix, Permutation, divisor_splits
from .metrics import nearest_factors

DEFAULT_MAX_N = 10
_CHUNK = 40320


@dataclass(frozen=True)
class OracleVerdict:
    """composite <=> witnesses nonempty; every witness is an exact factorization."""

    composite: bool
    witnesses: list  # of (Permutation, BinaryMatrix, BinaryMatrix)


def _check(a: BinaryMatrix, dim_b: int, dim_c: int, max_n: int) -> None:
    if dim_b * dim_c != a.n:
        raise ValueError(f"dim_b*dim_c = {dim_b}*{dim_c} != n = {a.n}")
    if a.n > max_n:
        raise ValueError(
            f"refusing to enumerate {a.n}! permutations (guard max_n={max_n})"
        )


def _exact_mask(mats: np.ndarray, dim_b: int, dim_c: int):
    """Boolean mask over a batch of matrices: exactly b (x) c for this blocking.

    Also returns the occupancy grids and the reference blocks so witnesses
    can be read off the hits without a second pass.
    """
    m, n, _ = mats.shape
    counts = mats.reshape(m, dim_b, dim_c, dim_b, dim_c).sum(axis=(2, 4))
    occ = (counts > 0).astype(np.uint8)
    blocks = (
        mats.reshape(m, dim_b, dim_c, dim_b, dim_c)
        .transpose(0, 1, 3, 2, 4)
        .reshape(m, dim_b * dim_b, dim_c, dim_c)
    )
    ref_idx = np.argmax(counts.reshape(m, -1) > 0, axis=1)
    ref = blocks[np.arange(m), ref_idx]
    recon = np.einsum("mij,mpq->mipjq", occ, ref).reshape(m, n, n)
    return (recon == mats).all(axis=(1, 2)), occ, ref


def _iter_perm_chunks(n: int):
    it = itertools.permutations(range(n))
    while True:
        chunk = list(itertools.islice(it, _CHUNK))
        if not chunk:
            return
        yield np.array(chunk, dtype=np.int64)


def brute_force_factorize(
    a: BinaryMatrix, dim_b: int, dim_c: int, max_n: int = DEFAULT_MAX_N
) -> OracleVerdict:
    """Try every symmetric permutation; collect the distinct factor pairs.

    Witnesses are deduplicated by (b, c) value; the lexicographically first
    permutation reaching each pair is kept (permutations are enumerated in
    lexicographic order).
    """
    _check(a, dim_b, dim_c, max_n)
    witnesses = []
    seen: set = set()
    for perms in _iter_perm_chunks(a.n):
        mats = a.bits[perms[:, :, None], perms[:, None, :]]
        mask, occ, ref = _exact_mask(mats, dim_b, dim_c)
        for t in np.nonzero(mask)[0]:
            key = (occ[t].tobytes(), ref[t].tobytes())
            if key not in seen:
                seen.add(key)
                witnesses.append(
                    (
                        Permutation(perms[t]),
                        BinaryMatrix(occ[t]),
                        BinaryMatrix(ref[t]),
                    )
                )
    return OracleVerdict(bool(witnesses), witnesses)


def has_kron_permutation(
    a: BinaryMatrix, dim_b: int, dim_c: int, max_n: int = DEFAULT_MAX_N
) -> bool:
    """Existence-only variant of brute_force_factorize (early exit)."""
    _check(a, dim_b, dim_c, max_n)
    for perms in _iter_perm_chunks(a.n):
        mats = a.bits[perms[:, :, None], perms[:, None, :]]
        mask, _, _ = _exact_mask(mats, dim_b, dim_c)
        if mask.any():
            return True
    return False


def is_prime_for_all_splits(a: BinaryMatrix, max_n: int = DEFAULT_MAX_N) -> bool:
    """True iff no nontrivial divisor split admits an exact factorization.

    A matrix of prime order is prime without enumeration (no nontrivial
    split exists); otherwise every ordered split (n1, n2) is enumerated.
    """
    splits = divisor_splits(a.n)
    if not splits:
        return True
    if a.n > max_n:
        raise ValueError(
            f"refusing to enumerate {a.n}! permutations (guard max_n={max_n})"
        )
    for n1, n2 in splits:
        if has_kron_permutation(a, n1, n2, max_n=max_n):
            return False
    return True


def verify_certificate(
    a: BinaryMatrix, p: Permutation, b: BinaryMatrix, c: BinaryMatrix
) -> bool:
    """Check p, b, c as an exact factorization witness without any search."""
    from .core import kronecker, permute_symmetric

    return permute_symmetric(a, p) == kronecker(b, c)
