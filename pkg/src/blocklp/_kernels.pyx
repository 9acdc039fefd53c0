# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels.

Same contracts as _kernels_py; see that module for the storage conventions.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, isfinite

cnp.import_array()


def weighted_gram_packed(cnp.int64_t[::1] row_ptr,
                         cnp.int64_t[::1] col_idx,
                         double[::1] values,
                         double[::1] w,
                         Py_ssize_t n_rows,
                         Py_ssize_t n_cols):
    """Packed lower triangle of A @ diag(w) @ A.T."""
    out = np.zeros(n_rows * (n_rows + 1) // 2)
    scratch = np.zeros(n_cols)
    cdef double[::1] packed = out
    cdef double[::1] sc = scratch
    cdef Py_ssize_t i, j, t, base
    cdef cnp.int64_t lo, hi, lo_j, hi_j
    cdef double acc
    for i in range(n_rows):
        lo = row_ptr[i]
        hi = row_ptr[i + 1]
        for t in range(lo, hi):
            sc[col_idx[t]] = values[t] * w[col_idx[t]]
        base = i * (i + 1) // 2
        for j in range(i + 1):
            lo_j = row_ptr[j]
            hi_j = row_ptr[j + 1]
            acc = 0.0
            for t in range(lo_j, hi_j):
                acc += sc[col_idx[t]] * values[t]
            packed[base + j] = acc
        for t in range(lo, hi):
            sc[col_idx[t]] = 0.0
    return out


def cholesky_packed(double[::1] packed, Py_ssize_t dim,
                    double regularization, double pivot_floor):
    """Cholesky of a packed symmetric matrix; see _kernels_py for contract."""
    out = np.array(packed, copy=True)
    cdef double[::1] l = out
    cdef Py_ssize_t i, j, t, base_i, base_j
    cdef double pivot, acc, inv
    for j in range(dim):
        base_j = j * (j + 1) // 2
        pivot = l[base_j + j] + regularization
        for t in range(j):
            pivot -= l[base_j + t] * l[base_j + t]
        if pivot < pivot_floor or not isfinite(pivot):
            return np.array(packed, copy=True), False, j
        pivot = sqrt(pivot)
        l[base_j + j] = pivot
        inv = 1.0 / pivot
        for i in range(j + 1, dim):
            base_i = i * (i + 1) // 2
            acc = l[base_i + j]
            for t in range(j):
                acc -= l[base_i + t] * l[base_j + t]
            l[base_i + j] = acc * inv
    return out, True, -1


def solve_packed(double[::1] l_packed, Py_ssize_t dim, double[::1] rhs):
    """Solve L @ L.T @ x = rhs with L in packed lower storage."""
    out = np.empty(dim)
    cdef double[::1] x = out
    cdef Py_ssize_t i, t, base
    cdef double acc
    for i in range(dim):
        base = i * (i + 1) // 2
        acc = rhs[i]
        for t in range(i):
            acc -= l_packed[base + t] * x[t]
        x[i] = acc / l_packed[base + i]
    for i in range(dim - 1, -1, -1):
        acc = x[i]
        for t in range(i + 1, dim):
            acc -= l_packed[t * (t + 1) // 2 + i] * x[t]
        x[i] = acc / l_packed[i * (i + 1) // 2 + i]
    return out


def csr_matvec(cnp.int64_t[::1] row_ptr, cnp.int64_t[::1] col_idx,
               double[::1] values, double[::1] x, Py_ssize_t n_rows):
    """y = A @ x."""
    out = np.empty(n_rows)
    cdef double[::1] y = out
    cdef Py_ssize_t i, t
    cdef double acc
    for i in range(n_rows):
        acc = 0.0
        for t in range(row_ptr[i], row_ptr[i + 1]):
            acc += values[t] * x[col_idx[t]]
        y[i] = acc
    return out


def csr_rmatvec(cnp.int64_t[::1] row_ptr, cnp.int64_t[::1] col_idx,
                double[::1] values, double[::1] y,
                Py_ssize_t n_rows, Py_ssize_t n_cols):
    """x = A.T @ y."""
    out = np.zeros(n_cols)
    cdef double[::1] x = out
    cdef Py_ssize_t i, t
    cdef double yi
    for i in range(n_rows):
        yi = y[i]
        if yi != 0.0:
            for t in range(row_ptr[i], row_ptr[i + 1]):
                x[col_idx[t]] += values[t] * yi
    return out


def csr_matmat_dense(cnp.int64_t[::1] row_ptr, cnp.int64_t[::1] col_idx,
                     double[::1] values, double[:, ::1] dense,
                     Py_ssize_t n_rows):
    """Y = A @ X with X dense of shape (n_cols, k)."""
    cdef Py_ssize_t k = dense.shape[1]
    out = np.zeros((n_rows, k))
    cdef double[:, ::1] y = out
    cdef Py_ssize_t i, t, col, q
    cdef double v
    for i in range(n_rows):
        for t in range(row_ptr[i], row_ptr[i + 1]):
            v = values[t]
            col = col_idx[t]
            for q in range(k):
                y[i, q] += v * dense[col, q]
    return out
