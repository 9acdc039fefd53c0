"""Shared oracles for the test suite: vertex enumeration, dense Newton solve."""

import itertools

import numpy as np

from blocklp.linalg import from_dense
from blocklp.model import StandardFormLP


def random_feasible_bounded_lp(rng, m, n):
    """Standard-form LP that is primal feasible and dual strictly feasible."""
    while True:
        a = rng.standard_normal((m, n))
        if np.linalg.matrix_rank(a) < m:
            continue
        x0 = rng.uniform(0.1, 2.0, n)
        b = a @ x0
        y0 = rng.standard_normal(m)
        s0 = rng.uniform(0.1, 2.0, n)
        c = a.T @ y0 + s0
        return StandardFormLP(from_dense(a), b, c, [])


def vertex_optimum(lp, tol=1e-9):
    """Minimum objective over basic feasible solutions (exhaustive)."""
    a = lp.a.to_dense()
    m, n = a.shape
    best = None
    for cols in itertools.combinations(range(n), m):
        basis = a[:, cols]
        if abs(np.linalg.det(basis)) < 1e-10:
            continue
        xb = np.linalg.solve(basis, lp.b)
        if xb.min(initial=0.0) < -tol:
            continue
        x = np.zeros(n)
        x[list(cols)] = np.maximum(xb, 0.0)
        if np.linalg.norm(a @ x - lp.b) > 1e-7 * (1 + np.linalg.norm(lp.b)):
            continue
        val = float(lp.c @ x)
        if best is None or val < best:
            best = val
    return best


def dense_newton_oracle(lp, x, y, s, mu):
    """Solve the full linearized optimality system densely."""
    a = lp.a.to_dense()
    m, n = a.shape
    kkt = np.zeros((2 * n + m, 2 * n + m))
    kkt[:m, :n] = a
    kkt[m : m + n, n : n + m] = a.T
    kkt[m : m + n, n + m :] = np.eye(n)
    kkt[m + n :, :n] = np.diag(s)
    kkt[m + n :, n + m :] = np.diag(x)
    rhs = np.concatenate([lp.b - a @ x, lp.c - a.T @ y - s, mu - x * s])
    sol = np.linalg.solve(kkt, rhs)
    return sol[:n], sol[n : n + m], sol[n + m :]
