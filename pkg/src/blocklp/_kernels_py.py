"""Numpy implementations of the hot kernels.

These mirror the signatures of the compiled extension (_kernels.pyx) and are
selected at import time when the extension is unavailable or explicitly
disabled.  All matrices use CSR arrays (row_ptr, col_idx, values); symmetric
dense matrices use packed lower-triangular storage, row by row, so entry
(i, j) with j <= i lives at i*(i+1)//2 + j.
"""

import numpy as np

# Above this many dense entries, weighted_gram falls back to per-row scatter
# to bound memory; all solver call sites stay below it.
_DENSE_LIMIT = 80_000_000


def weighted_gram_packed(row_ptr, col_idx, values, w, n_rows, n_cols):
    """Packed lower triangle of A @ diag(w) @ A.T."""
    if n_rows * n_cols <= _DENSE_LIMIT:
        dense = np.zeros((n_rows, n_cols))
        for i in range(n_rows):
            lo, hi = row_ptr[i], row_ptr[i + 1]
            dense[i, col_idx[lo:hi]] = values[lo:hi]
        full = (dense * w) @ dense.T
        return full[np.tril_indices(n_rows)].copy()

    packed = np.zeros(n_rows * (n_rows + 1) // 2)
    scratch = np.zeros(n_cols)
    for i in range(n_rows):
        lo, hi = row_ptr[i], row_ptr[i + 1]
        cols_i = col_idx[lo:hi]
        scratch[cols_i] = values[lo:hi] * w[cols_i]
        base = i * (i + 1) // 2
        for j in range(i + 1):
            lo_j, hi_j = row_ptr[j], row_ptr[j + 1]
            packed[base + j] = scratch[col_idx[lo_j:hi_j]] @ values[lo_j:hi_j]
        scratch[cols_i] = 0.0
    return packed


def cholesky_packed(packed, dim, regularization, pivot_floor):
    """In-place style Cholesky of a packed symmetric matrix.

    Returns (L_packed, ok, bad_index): on failure bad_index is the pivot
    that dropped below pivot_floor (after regularization), else -1.
    """
    full = np.zeros((dim, dim))
    idx = np.tril_indices(dim)
    full[idx] = packed
    full[np.diag_indices(dim)] += regularization
    for j in range(dim):
        pivot = full[j, j] - full[j, :j] @ full[j, :j]
        if pivot < pivot_floor or not np.isfinite(pivot):
            return packed.copy(), False, j
        full[j, j] = np.sqrt(pivot)
        if j + 1 < dim:
            full[j + 1 :, j] -= full[j + 1 :, :j] @ full[j, :j]
            full[j + 1 :, j] /= full[j, j]
    return full[idx].copy(), True, -1


def solve_packed(l_packed, dim, rhs):
    """Solve L @ L.T @ x = rhs with L in packed lower storage."""
    full = np.zeros((dim, dim))
    full[np.tril_indices(dim)] = l_packed
    z = np.empty(dim)
    for i in range(dim):
        z[i] = (rhs[i] - full[i, :i] @ z[:i]) / full[i, i]
    x = np.empty(dim)
    for i in range(dim - 1, -1, -1):
        x[i] = (z[i] - full[i + 1 :, i] @ x[i + 1 :]) / full[i, i]
    return x


def csr_matvec(row_ptr, col_idx, values, x, n_rows):
    """y = A @ x."""
    y = np.zeros(n_rows)
    if len(values) == 0:
        return y
    prod = values * x[col_idx]
    nonempty = np.diff(row_ptr) > 0
    y[nonempty] = np.add.reduceat(prod, row_ptr[:-1][nonempty])
    return y


def csr_rmatvec(row_ptr, col_idx, values, y, n_rows, n_cols):
    """x = A.T @ y."""
    if len(values) == 0:
        return np.zeros(n_cols)
    y_nnz = np.repeat(y, np.diff(row_ptr))
    return np.bincount(col_idx, weights=values * y_nnz, minlength=n_cols)


def csr_matmat_dense(row_ptr, col_idx, values, dense, n_rows):
    """Y = A @ X with X dense of shape (n_cols, k)."""
    k = dense.shape[1]
    out = np.zeros((n_rows, k))
    if len(values) == 0:
        return out
    prod = values[:, None] * dense[col_idx]
    nonempty = np.diff(row_ptr) > 0
    out[nonempty] = np.add.reduceat(prod, row_ptr[:-1][nonempty], axis=0)
    return out
