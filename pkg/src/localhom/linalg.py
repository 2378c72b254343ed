"""Sparse column-major linear algebra over pluggable scalar carriers.

Two carriers share one interface: exact rationals (`fractions.Fraction`,
the correctness reference) and binary64 floats with a relative zero
tolerance (the performance path). The left-to-right column reduction here
is the single algorithm behind every persistence computation in the
package; the dense brute-force oracle deliberately does not use it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ContractError, IllConditionedError

EXACT = "exact"
FLOAT = "float"
DEFAULT_EPS = 1e-9

# a sparse column is a list of (row, coeff) pairs with strictly increasing rows
Column = list[tuple[int, object]]


@dataclass(frozen=True)
class Field:
    """Scalar carrier: exact rationals or floats with zero tolerance eps."""

    kind: str = EXACT
    eps: float = DEFAULT_EPS

    def coerce(self, x):
        return Fraction(x) if self.kind == EXACT else float(x)

    @property
    def one(self):
        return Fraction(1) if self.kind == EXACT else 1.0

    def prune(self, col: Column) -> Column:
        """Drop entries indistinguishable from zero; flag ill-conditioning."""
        if self.kind == EXACT:
            return [(r, c) for r, c in col if c != 0]
        if not col:
            return col
        scale = max(abs(c) for _, c in col)
        if scale == 0.0:
            return []
        if scale > 1.0 / self.eps:
            raise IllConditionedError(
                f"entry magnitude {scale:.3e} exceeds 1/eps; retry with exact carrier"
            )
        tol = self.eps * scale
        return [(r, c) for r, c in col if abs(c) > tol]


def axpy(target: Column, source: Column, coeff) -> Column:
    """target + coeff * source, merging sorted sparse columns."""
    out: Column = []
    i = j = 0
    while i < len(target) and j < len(source):
        ri, rj = target[i][0], source[j][0]
        if ri < rj:
            out.append(target[i])
            i += 1
        elif ri > rj:
            out.append((rj, coeff * source[j][1]))
            j += 1
        else:
            s = target[i][1] + coeff * source[j][1]
            if s != 0:
                out.append((ri, s))
            i += 1
            j += 1
    out.extend(target[i:])
    out.extend((r, coeff * c) for r, c in source[j:])
    return out


@dataclass
class SparseColumnMatrix:
    """Column-major sparse matrix; no stored zeros, rows sorted per column."""

    row_count: int
    col_count: int
    cols: list[Column]
    field: Field

    def __post_init__(self):
        if len(self.cols) != self.col_count:
            raise ContractError("column list does not match col_count")
        for col in self.cols:
            rows = [r for r, _ in col]
            if rows != sorted(set(rows)):
                raise ContractError("column rows must be strictly increasing")
            if any(not (0 <= r < self.row_count) for r in rows):
                raise ContractError("row index out of range")

    @classmethod
    def from_entries(cls, row_count, col_count, entries, field=Field()):
        """entries: iterable of (row, col, value)."""
        cols: list[Column] = [[] for _ in range(col_count)]
        for r, c, v in entries:
            cols[c].append((r, field.coerce(v)))
        for col in cols:
            col.sort()
        m = cls(row_count, col_count, cols, field)
        m.cols = [field.prune(c) for c in m.cols]
        return m

    def column(self, j: int) -> Column:
        return self.cols[j]

    def entry(self, i: int, j: int):
        for r, c in self.cols[j]:
            if r == i:
                return c
        return self.field.coerce(0)

    def to_dense(self) -> list[list]:
        zero = self.field.coerce(0)
        dense = [[zero] * self.col_count for _ in range(self.row_count)]
        for j, col in enumerate(self.cols):
            for r, c in col:
                dense[r][j] = c
        return dense

    def matmul(self, other: "SparseColumnMatrix") -> "SparseColumnMatrix":
        if self.col_count != other.row_count:
            raise ContractError("shape mismatch in matmul")
        cols = []
        for j in range(other.col_count):
            acc: Column = []
            for r, c in other.cols[j]:
                acc = axpy(acc, self.cols[r], c)
            cols.append(self.field.prune(acc))
        return SparseColumnMatrix(self.row_count, other.col_count, cols, self.field)

    def transpose(self) -> "SparseColumnMatrix":
        cols: list[Column] = [[] for _ in range(self.row_count)]
        for j, col in enumerate(self.cols):
            for r, c in col:
                cols[r].append((j, c))
        for col in cols:
            col.sort()
        return SparseColumnMatrix(self.col_count, self.row_count, cols, self.field)


@dataclass
class Reduction:
    """R = M @ V with V invertible upper-triangular, distinct column pivots."""

    R: SparseColumnMatrix
    V: SparseColumnMatrix
    pivots: dict[int, int]  # pivot row -> column owning it


def reduce(matrix: SparseColumnMatrix, skip_cols=frozenset()) -> Reduction:
    """Left-to-right column reduction.

    A column's pivot is its lowest nonzero row; while some earlier column
    owns the same pivot, subtract the matching field multiple. Columns in
    skip_cols are zeroed without work (the clearing optimization; callers
    must only pass columns whose reduction is known to vanish).
    """
    fld = matrix.field
    one = fld.one
    rcols = [list(c) for c in matrix.cols]
    vcols: list[Column] = [[(j, one)] for j in range(matrix.col_count)]
    pivots: dict[int, int] = {}
    for j in range(matrix.col_count):
        if j in skip_cols:
            rcols[j] = []
            continue
        while rcols[j]:
            low = rcols[j][-1][0]
            owner = pivots.get(low)
            if owner is None:
                pivots[low] = j
                break
            coeff = -(rcols[j][-1][1] / rcols[owner][-1][1])
            rcols[j] = fld.prune(axpy(rcols[j], rcols[owner], coeff))
            vcols[j] = fld.prune(axpy(vcols[j], vcols[owner], coeff))
    R = SparseColumnMatrix(matrix.row_count, matrix.col_count, rcols, fld)
    V = SparseColumnMatrix(matrix.col_count, matrix.col_count, vcols, fld)
    return Reduction(R=R, V=V, pivots=pivots)


def rank(matrix: SparseColumnMatrix) -> int:
    """Number of pivot columns; mathematical rank for the exact carrier."""
    return len(reduce(matrix).pivots)


def restrict_rows_cols(
    matrix: SparseColumnMatrix,
    keep_rows,
    keep_cols,
) -> SparseColumnMatrix:
    """Submatrix on the given index sets, re-enumerated in original order."""
    keep_rows = sorted(set(keep_rows))
    keep_cols = sorted(set(keep_cols))
    if keep_rows and not (0 <= keep_rows[0] and keep_rows[-1] < matrix.row_count):
        raise ContractError("row index out of range")
    if keep_cols and not (0 <= keep_cols[0] and keep_cols[-1] < matrix.col_count):
        raise ContractError("column index out of range")
    rmap = {r: i for i, r in enumerate(keep_rows)}
    cols = []
    for c in keep_cols:
        cols.append([(rmap[r], v) for r, v in matrix.cols[c] if r in rmap])
    return SparseColumnMatrix(len(keep_rows), len(keep_cols), cols, matrix.field)


def solve_upper_triangular(V: SparseColumnMatrix, rhs: Column) -> Column:
    """Solve V x = rhs for upper-triangular V with nonzero diagonal."""
    residual = {r: c for r, c in rhs}
    x: dict[int, object] = {}
    for j in range(V.col_count - 1, -1, -1):
        rj = residual.get(j)
        if rj is None or rj == 0:
            continue
        col = V.cols[j]
        if not col or col[-1][0] != j:
            raise ContractError("V is not invertible upper-triangular")
        xj = rj / col[-1][1]
        x[j] = xj
        for r, c in col:
            residual[r] = residual.get(r, 0) - xj * c
    return sorted(x.items())


def dense_rank_exact(rows: list[list[Fraction]]) -> int:
    """Exact Gaussian-elimination rank of a dense rational matrix."""
    m = [list(r) for r in rows]
    nr = len(m)
    nc = len(m[0]) if nr else 0
    rank_ = 0
    row = 0
    for col in range(nc):
        piv = next((r for r in range(row, nr) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        pv = m[row][col]
        for r in range(row + 1, nr):
            if m[r][col] != 0:
                f = m[r][col] / pv
                m[r] = [a - f * b for a, b in zip(m[r], m[row])]
        row += 1
        rank_ += 1
        if row == nr:
            break
    return rank_


def write_matrixmarket(matrix: SparseColumnMatrix, path) -> None:
    """Coordinate-format MatrixMarket dump for external checkers."""
    lines = ["%%MatrixMarket matrix coordinate real general"]
    nnz = sum(len(c) for c in matrix.cols)
    lines.append(f"{matrix.row_count} {matrix.col_count} {nnz}")
    for j, col in enumerate(matrix.cols):
        for r, c in col:
            lines.append(f"{r + 1} {j + 1} {repr(float(c))}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
