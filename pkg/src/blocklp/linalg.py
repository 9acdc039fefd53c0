"""Sparse and dense linear algebra kernels used by the solver.

SparseMatrix is CSR with sorted column indices and no explicitly stored
zeros.  Symmetric dense matrices and Cholesky factors use packed
lower-triangular storage.  The heavy loops live in the kernel backend
(compiled extension or numpy fallback, see backend.py).
"""

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import DimensionMismatch, FactorFailed, IndexOutOfRange

# Relative pivot floor for the Cholesky factorization: a pivot below
# 1e-13 times the largest initial diagonal entry means the matrix is
# numerically indefinite and the factorization is reported as failed.
PIVOT_FLOOR_REL = 1e-13


@dataclass
class SparseMatrix:
    """Compressed-sparse-row matrix."""

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    @property
    def nnz(self):
        return len(self.values)

    def row_cols(self, i):
        """Column indices of the nonzeros in row i."""
        return self.col_idx[self.row_ptr[i] : self.row_ptr[i + 1]]

    def row_vals(self, i):
        return self.values[self.row_ptr[i] : self.row_ptr[i + 1]]

    def matvec(self, x):
        if len(x) != self.n_cols:
            raise DimensionMismatch("matvec: expected length %d" % self.n_cols)
        return kernels.csr_matvec(
            self.row_ptr, self.col_idx, self.values, np.ascontiguousarray(x, float), self.n_rows
        )

    def rmatvec(self, y):
        """A.T @ y."""
        if len(y) != self.n_rows:
            raise DimensionMismatch("rmatvec: expected length %d" % self.n_rows)
        return kernels.csr_rmatvec(
            self.row_ptr, self.col_idx, self.values, np.ascontiguousarray(y, float),
            self.n_rows, self.n_cols,
        )

    def matmat_dense(self, dense):
        """A @ X for a dense X of shape (n_cols, k)."""
        dense = np.ascontiguousarray(dense, float)
        if dense.shape[0] != self.n_cols:
            raise DimensionMismatch("matmat: expected %d rows" % self.n_cols)
        return kernels.csr_matmat_dense(
            self.row_ptr, self.col_idx, self.values, dense, self.n_rows
        )

    def to_dense(self):
        out = np.zeros((self.n_rows, self.n_cols))
        for i in range(self.n_rows):
            out[i, self.row_cols(i)] = self.row_vals(i)
        return out

    def triplets(self):
        rows = np.repeat(np.arange(self.n_rows), np.diff(self.row_ptr))
        return rows, self.col_idx.copy(), self.values.copy()

    def take_rows(self, rows):
        """Submatrix of the given rows (column count unchanged)."""
        rows = np.asarray(rows, dtype=np.int64)
        counts = self.row_ptr[rows + 1] - self.row_ptr[rows]
        row_ptr = np.zeros(len(rows) + 1, dtype=np.int64)
        np.cumsum(counts, out=row_ptr[1:])
        take = np.concatenate(
            [np.arange(self.row_ptr[r], self.row_ptr[r + 1]) for r in rows]
        ) if len(rows) else np.empty(0, dtype=np.int64)
        return SparseMatrix(
            len(rows), self.n_cols, row_ptr,
            self.col_idx[take].copy(), self.values[take].copy(),
        )

    def transpose(self):
        rows, cols, vals = self.triplets()
        return from_triplets(self.n_cols, self.n_rows, zip(cols, rows, vals))


@dataclass
class DenseSymMatrix:
    """Symmetric matrix in packed lower-triangular storage."""

    dim: int
    values: np.ndarray

    @classmethod
    def from_full(cls, full):
        full = np.asarray(full, float)
        dim = full.shape[0]
        return cls(dim, full[np.tril_indices(dim)].copy())

    def full(self):
        out = np.zeros((self.dim, self.dim))
        idx = np.tril_indices(self.dim)
        out[idx] = self.values
        out.T[idx] = self.values
        return out

    def diagonal(self):
        i = np.arange(self.dim)
        return self.values[i * (i + 1) // 2 + i]


@dataclass
class CholeskyFactor:
    """Lower-triangular factor with success flag (packed storage)."""

    dim: int
    values: np.ndarray
    success: bool
    failed_pivot: int = -1

    def full(self):
        out = np.zeros((self.dim, self.dim))
        out[np.tril_indices(self.dim)] = self.values
        return out


def from_triplets(n_rows, n_cols, entries):
    """Build a SparseMatrix from (row, col, value) triplets.

    Duplicate entries are summed and entries that cancel to exactly zero
    are dropped.
    """
    entries = list(entries)
    if entries:
        rows = np.array([e[0] for e in entries], dtype=np.int64)
        cols = np.array([e[1] for e in entries], dtype=np.int64)
        vals = np.array([e[2] for e in entries], dtype=float)
    else:
        rows = np.empty(0, dtype=np.int64)
        cols = np.empty(0, dtype=np.int64)
        vals = np.empty(0, dtype=float)
    if len(rows) and (
        rows.min() < 0 or cols.min() < 0
        or rows.max() >= n_rows or cols.max() >= n_cols
    ):
        raise IndexOutOfRange("triplet index outside %dx%d" % (n_rows, n_cols))
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if len(rows):
        new_group = np.ones(len(rows), dtype=bool)
        new_group[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(new_group)
        vals = np.add.reduceat(vals, starts)
        rows, cols = rows[starts], cols[starts]
        keep = vals != 0.0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_rows), out=row_ptr[1:])
    return SparseMatrix(n_rows, n_cols, row_ptr, cols, vals)


def from_dense(dense):
    dense = np.asarray(dense, float)
    rows, cols = np.nonzero(dense)
    return from_triplets(
        dense.shape[0], dense.shape[1], zip(rows, cols, dense[rows, cols])
    )


def weighted_gram(a, w):
    """A @ diag(w) @ A.T as a DenseSymMatrix."""
    w = np.ascontiguousarray(w, float)
    if len(w) != a.n_cols:
        raise DimensionMismatch("weight length %d != n_cols %d" % (len(w), a.n_cols))
    packed = kernels.weighted_gram_packed(
        a.row_ptr, a.col_idx, a.values, w, a.n_rows, a.n_cols
    )
    return DenseSymMatrix(a.n_rows, packed)


def cholesky(m, regularization=0.0):
    """Factor m + regularization * I; failure is reported via the flag."""
    if regularization < 0:
        raise ValueError("regularization must be nonnegative")
    diag = m.diagonal() + regularization
    floor = PIVOT_FLOOR_REL * max(diag.max(initial=0.0), 0.0)
    values, ok, bad = kernels.cholesky_packed(
        np.ascontiguousarray(m.values, float), m.dim, float(regularization), floor
    )
    return CholeskyFactor(m.dim, values, bool(ok), int(bad))


def solve_cholesky(factor, rhs):
    """Solve (L @ L.T) x = rhs."""
    if not factor.success:
        raise FactorFailed("factorization failed at pivot %d" % factor.failed_pivot)
    rhs = np.ascontiguousarray(rhs, float)
    if len(rhs) != factor.dim:
        raise DimensionMismatch("rhs length %d != dim %d" % (len(rhs), factor.dim))
    return kernels.solve_packed(factor.values, factor.dim, rhs)
