"""Dense binary matrices, symmetric permutations and block structure.

Everything downstream (metrics, local search, oracle, harness) is written
against the small algebra defined here: square 0/1 adjacency matrices, the
Kronecker product, permutations applied symmetrically to rows and columns,
and the view of a matrix as a grid of equally sized blocks.

All value types are immutable after construction; operations return new
values, never mutate their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True, eq=False)
class BinaryMatrix:
    """Square 0/1 matrix; the adjacency matrix of a directed graph."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.array(self.bits, dtype=np.uint8, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"matrix must be square 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("matrix side must be >= 1")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("matrix entries must all be 0 or 1")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    def popcount(self) -> int:
        """Number of 1 entries (edges of the represented graph)."""
        return int(self.bits.sum())

    def density(self) -> float:
        return self.popcount() / self.n**2

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMatrix):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(
            np.array_equal(self.bits, other.bits)
        )

    __hash__ = None

    @classmethod
    def zeros(cls, n: int) -> "BinaryMatrix":
        return cls(np.zeros((n, n), dtype=np.uint8))

    @classmethod
    def identity(cls, n: int) -> "BinaryMatrix":
        return cls(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_rows(cls, rows) -> "BinaryMatrix":
        """Build from a sequence of rows; rows may be strings like "0110"."""
        parsed = [[int(ch) for ch in r] if isinstance(r, str) else list(r) for r in rows]
        return cls(np.array(parsed, dtype=np.uint8))

    @classmethod
    def random(cls, n: int, density: float, rng: np.random.Generator) -> "BinaryMatrix":
        return cls((rng.random((n, n)) < density).astype(np.uint8))

    def row_strings(self) -> list[str]:
        return ["".join("1" if v else "0" for v in row) for row in self.bits]


@dataclass(frozen=True, eq=False)
class Permutation:
    """Bijection on {0..n-1}, stored as an index vector.

    Applying ``p`` to a matrix ``a`` symmetrically means
    ``result[i][j] = a[p.map[i]][p.map[j]]`` (conjugation by the
    corresponding permutation matrix).
    """

    map: np.ndarray

    def __post_init__(self):
        arr = np.array(self.map, dtype=np.int64, copy=True)
        if arr.ndim != 1:
            raise ValueError("permutation map must be 1-D")
        n = arr.shape[0]
        if not np.array_equal(np.sort(arr), np.arange(n)):
            raise ValueError("permutation map must be a bijection on 0..n-1")
        arr.setflags(write=False)
        object.__setattr__(self, "map", arr)

    @property
    def n(self) -> int:
        return self.map.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return bool(np.array_equal(self.map, other.map))

    __hash__ = None

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(rng.permutation(n))

    @classmethod
    def transposition(cls, n: int, i: int, j: int) -> "Permutation":
        m = np.arange(n)
        m[i], m[j] = m[j], m[i]
        return cls(m)

    def inverse(self) -> "Permutation":
        inv = np.empty(self.n, dtype=np.int64)
        inv[self.map] = np.arange(self.n)
        return Permutation(inv)

    def then(self, after: "Permutation") -> "Permutation":
        """Composite permutation: apply ``self`` first, then ``after``."""
        if after.n != self.n:
            raise ValueError("size mismatch")
        return Permutation(self.map[after.map])

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.map, np.arange(self.n)))

    def to_matrix(self) -> BinaryMatrix:
        """Matrix form: a single 1 per row and column, P[i][map[i]] = 1."""
        m = np.zeros((self.n, self.n), dtype=np.uint8)
        m[np.arange(self.n), self.map] = 1
        return BinaryMatrix(m)

    @classmethod
    def from_matrix(cls, p: BinaryMatrix) -> "Permutation":
        bits = p.bits
        if not ((bits.sum(axis=0) == 1).all() and (bits.sum(axis=1) == 1).all()):
            raise ValueError("not a permutation matrix")
        return cls(np.argmax(bits, axis=1))


@dataclass(frozen=True, eq=False)
class BlockGrid:
    """Per-block 1-counts of a matrix partitioned into dim_b x dim_b blocks."""

    dim_b: int
    dim_c: int
    counts: np.ndarray

    def __post_init__(self):
        arr = np.array(self.counts, dtype=np.int64, copy=True)
        if arr.shape != (self.dim_b, self.dim_b):
            raise ValueError("counts must be dim_b x dim_b")
        if (arr < 0).any():
            raise ValueError("counts must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @property
    def mu(self) -> float:
        """Mean number of 1s per block."""
        return float(self.counts.sum()) / self.dim_b**2

    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class Graph:
    """Directed graph on nodes {0..n-1}; self-loops allowed, no multi-edges."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range for n={self.n}")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_adjacency(cls, a: BinaryMatrix) -> "Graph":
        us, vs = np.nonzero(a.bits)
        return cls(a.n, frozenset(zip(us.tolist(), vs.tolist())))

    def to_adjacency(self) -> BinaryMatrix:
        m = np.zeros((self.n, self.n), dtype=np.uint8)
        for u, v in self.edges:
            m[u, v] = 1
        return BinaryMatrix(m)


def direct_product(g1: Graph, g2: Graph) -> Graph:
    """Direct (Kronecker/tensor) product of two directed graphs.

    Nodes are pairs (u, v) numbered row-major as u * g2.n + v; there is an
    edge ((x, y), (x', y')) exactly when (x, x') and (y, y') are edges of
    the respective factors.  With this vertex ordering the adjacency matrix
    of the product equals the Kronecker product of the factor adjacencies.
    """
    n2 = g2.n
    edges = set()
    for x, xp in g1.edges:
        for y, yp in g2.edges:
            edges.add((x * n2 + y, xp * n2 + yp))
    return Graph(g1.n * n2, frozenset(edges))


def kronecker(b: BinaryMatrix, c: BinaryMatrix) -> BinaryMatrix:
    """Kronecker product: block (i, j) equals b[i][j] * c."""
    return BinaryMatrix(np.kron(b.bits, c.bits))


def permute_symmetric(a: BinaryMatrix, p: Permutation) -> BinaryMatrix:
    """Conjugate ``a`` by the permutation: result[i][j] = a[p[i]][p[j]]."""
    if p.n != a.n:
        raise ValueError(f"permutation size {p.n} != matrix size {a.n}")
    return BinaryMatrix(a.bits[np.ix_(p.map, p.map)])


def swap_pair(a: BinaryMatrix, i: int, j: int) -> BinaryMatrix:
    """Exchange rows i,j and columns i,j together (one symmetric transposition)."""
    n = a.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"swap indices ({i},{j}) out of range for n={n}")
    if i == j:
        raise ValueError("swap indices must differ")
    return permute_symmetric(a, Permutation.transposition(n, i, j))


def block_counts(bits: np.ndarray, dim_b: int, dim_c: int) -> np.ndarray:
    """dim_b x dim_b int64 array of per-block 1-counts (array-level helper)."""
    return (
        bits.reshape(dim_b, dim_c, dim_b, dim_c).sum(axis=(1, 3), dtype=np.int64)
    )


def block_grid(a: BinaryMatrix, dim_b: int, dim_c: int) -> BlockGrid:
    """View ``a`` as dim_b x dim_b blocks of side dim_c and count 1s per block."""
    if dim_b < 1 or dim_c < 1 or dim_b * dim_c != a.n:
        raise ValueError(f"dim_b*dim_c = {dim_b}*{dim_c} != n = {a.n}")
    return BlockGrid(dim_b, dim_c, block_counts(a.bits, dim_b, dim_c))


def is_block_matrix(g: BlockGrid) -> bool:
    """Every block is empty or strictly above the mean block count.

    The strict definition is unsatisfiable when all blocks are nonempty with
    identical counts (x > mu fails with x == mu), yet that is exactly the
    form of a Kronecker product with an all-ones left factor, so that case
    is accepted as well.  Comparison is exact integer arithmetic:
    count > mu  <=>  count * dim_b^2 > total.
    """
    counts = g.counts
    total = int(counts.sum())
    nb2 = g.dim_b**2
    if bool(((counts == 0) | (counts * nb2 > total)).all()):
        return True
    return bool((counts > 0).all() and (counts == counts.flat[0]).all())


def balanced_blocks(g: BlockGrid) -> bool:
    """True when all nonzero blocks carry the same number of 1s."""
    nz = g.counts[g.counts > 0]
    return nz.size == 0 or bool((nz == nz[0]).all())


# ---------------------------------------------------------------------------
# Text formats
# ---------------------------------------------------------------------------
#
# Matrix format:   first line n, then n lines of n characters from {0,1}.
# Edge-list format: first line "n m", then m lines "u v" (0-based).


def matrix_to_text(a: BinaryMatrix) -> str:
    return "\n".join([str(a.n)] + a.row_strings()) + "\n"


def matrix_from_text(text: str) -> BinaryMatrix:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix text")
    n = int(lines[0])
    rows = lines[1 : 1 + n]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError("matrix text does not contain n rows of n characters")
    return BinaryMatrix.from_rows(rows)


def graph_to_edgelist_text(g: Graph) -> str:
    lines = [f"{g.n} {len(g.edges)}"]
    lines += [f"{u} {v}" for u, v in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def graph_from_edgelist_text(text: str) -> Graph:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty edge-list text")
    n, m = (int(t) for t in lines[0].split())
    edges = set()
    for ln in lines[1 : 1 + m]:
        u, v = (int(t) for t in ln.split())
        edges.add((u, v))
    if len(lines) != 1 + m:
        raise ValueError("edge-list line count does not match header")
    return Graph(n, frozenset(edges))


def load_matrix(path: str | Path) -> BinaryMatrix:
    """Read either text format (auto-detected from the header line)."""
    text = Path(path).read_text()
    header = text.strip().splitlines()[0].split()
    if len(header) == 1:
        return matrix_from_text(text)
    if len(header) == 2:
        return graph_from_edgelist_text(text).to_adjacency()
    raise ValueError(f"unrecognized input header: {header!r}")


def save_matrix(a: BinaryMatrix, path: str | Path) -> None:
    Path(path).write_text(matrix_to_text(a))


def divisor_splits(n: int) -> list[tuple[int, int]]:
    """Ordered nontrivial divisor pairs (n1, n2) with n1*n2 = n, increasing n1."""
    return [(d, n // d) for d in range(2, n) if n % d == 0 and n // d >= 2]


def ceil_fraction(fraction: float, n: int) -> int:
    """ceil(fraction * n) with a guard against float fuzz just below integers."""
    return min(n, math.ceil(round(fraction * n, 9)))
