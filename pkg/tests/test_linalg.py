import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blocklp import backend
from blocklp import _kernels_py
from blocklp.errors import DimensionMismatch, FactorFailed, IndexOutOfRange
from blocklp.linalg import (
    DenseSymMatrix,
    cholesky,
    from_dense,
    from_triplets,
    solve_cholesky,
    weighted_gram,
)


def random_sparse(rng, m, n, density=0.4):
    dense = rng.standard_normal((m, n))
    dense[rng.uniform(size=(m, n)) > density] = 0.0
    return from_dense(dense), dense


matrices = st.integers(0, 2**32 - 1).map(
    lambda seed: random_sparse(
        np.random.default_rng(seed),
        1 + seed % 7,
        1 + (seed // 7) % 9,
    )
)


class TestSparseMatrix:
    def test_from_triplets_duplicates_sum(self):
        a = from_triplets(2, 2, [(0, 0, 1.0), (0, 0, 2.0), (1, 1, 5.0)])
        assert a.to_dense().tolist() == [[3.0, 0.0], [0.0, 5.0]]

    def test_from_triplets_drops_exact_zero(self):
        a = from_triplets(1, 1, [(0, 0, 1.0), (0, 0, -1.0)])
        assert a.nnz == 0

    def test_from_triplets_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            from_triplets(2, 2, [(2, 0, 1.0)])
        with pytest.raises(IndexOutOfRange):
            from_triplets(2, 2, [(0, -1, 1.0)])

    def test_empty(self):
        a = from_triplets(3, 4, [])
        assert a.nnz == 0
        assert a.matvec(np.ones(4)).tolist() == [0.0, 0.0, 0.0]

    @settings(max_examples=40, deadline=None)
    @given(matrices, st.integers(0, 2**32 - 1))
    def test_products_match_dense(self, pair, seed):
        a, dense = pair
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(a.n_cols)
        y = rng.standard_normal(a.n_rows)
        z = rng.standard_normal((a.n_cols, 3))
        assert np.allclose(a.matvec(x), dense @ x)
        assert np.allclose(a.rmatvec(y), dense.T @ y)
        assert np.allclose(a.matmat_dense(z), dense @ z)

    def test_dimension_errors(self):
        a = from_dense(np.eye(3))
        with pytest.raises(DimensionMismatch):
            a.matvec(np.ones(4))
        with pytest.raises(DimensionMismatch):
            a.rmatvec(np.ones(4))
        with pytest.raises(DimensionMismatch):
            a.matmat_dense(np.ones((4, 2)))

    @settings(max_examples=25, deadline=None)
    @given(matrices)
    def test_take_rows_and_transpose(self, pair):
        a, dense = pair
        rows = list(range(0, a.n_rows, 2))
        sub = a.take_rows(rows)
        assert np.allclose(sub.to_dense(), dense[rows])
        assert np.allclose(a.transpose().to_dense(), dense.T)

    def test_triplets_round_trip(self):
        dense = np.array([[1.0, 0.0], [0.0, -2.0], [3.0, 4.0]])
        a = from_dense(dense)
        r, c, v = a.triplets()
        back = from_triplets(3, 2, zip(r, c, v))
        assert np.allclose(back.to_dense(), dense)


class TestWeightedGram:
    @settings(max_examples=40, deadline=None)
    @given(matrices, st.integers(0, 2**32 - 1))
    def test_matches_dense(self, pair, seed):
        a, dense = pair
        w = np.random.default_rng(seed).uniform(0.1, 2.0, a.n_cols)
        got = weighted_gram(a, w).full()
        assert np.allclose(got, dense @ np.diag(w) @ dense.T)

    def test_weight_length_checked(self):
        with pytest.raises(DimensionMismatch):
            weighted_gram(from_dense(np.eye(2)), np.ones(3))


class TestDenseSymAndCholesky:
    def test_packed_round_trip(self):
        rng = np.random.default_rng(0)
        full = rng.standard_normal((5, 5))
        full = full + full.T
        m = DenseSymMatrix.from_full(full)
        assert np.allclose(m.full(), full)
        assert np.allclose(m.diagonal(), np.diag(full))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 8))
    def test_cholesky_spd(self, seed, dim):
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((dim, dim + 2))
        full = g @ g.T + 0.5 * np.eye(dim)
        f = cholesky(DenseSymMatrix.from_full(full))
        assert f.success
        low = f.full()
        assert np.allclose(low @ low.T, full)
        rhs = rng.standard_normal(dim)
        assert np.allclose(
            solve_cholesky(f, rhs), np.linalg.solve(full, rhs)
        )

    def test_regularization_shifts_diagonal(self):
        full = np.array([[2.0, 1.0], [1.0, 2.0]])
        f = cholesky(DenseSymMatrix.from_full(full), regularization=3.0)
        low = f.full()
        assert np.allclose(low @ low.T, full + 3.0 * np.eye(2))
        with pytest.raises(ValueError):
            cholesky(DenseSymMatrix.from_full(full), regularization=-1.0)

    def test_indefinite_fails_with_pivot_index(self):
        full = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
        f = cholesky(DenseSymMatrix.from_full(full))
        assert not f.success
        assert f.failed_pivot == 1
        with pytest.raises(FactorFailed):
            solve_cholesky(f, np.ones(2))

    def test_pivot_floor_relative_to_initial_diagonal(self):
        # Second pivot cancels to ~0, far below 1e-13 of the leading entry.
        full = np.array([[1e4, 1e2], [1e2, 1.0]])
        f = cholesky(DenseSymMatrix.from_full(full))
        assert not f.success

    def test_solve_dimension_checked(self):
        f = cholesky(DenseSymMatrix.from_full(np.eye(2)))
        with pytest.raises(DimensionMismatch):
            solve_cholesky(f, np.ones(3))


@pytest.mark.skipif(not backend.COMPILED, reason="compiled kernels unavailable")
class TestKernelBackendsAgree:
    """Compiled extension and numpy fallback compute identical results."""

    @settings(max_examples=25, deadline=None)
    @given(matrices, st.integers(0, 2**32 - 1))
    def test_csr_ops(self, pair, seed):
        a, _ = pair
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(a.n_cols)
        y = rng.standard_normal(a.n_rows)
        z = np.ascontiguousarray(rng.standard_normal((a.n_cols, 2)))
        args = (a.row_ptr, a.col_idx, a.values)
        k_c, k_p = backend.kernels, _kernels_py
        assert np.allclose(
            k_c.csr_matvec(*args, x, a.n_rows),
            k_p.csr_matvec(*args, x, a.n_rows),
        )
        assert np.allclose(
            k_c.csr_rmatvec(*args, y, a.n_rows, a.n_cols),
            k_p.csr_rmatvec(*args, y, a.n_rows, a.n_cols),
        )
        assert np.allclose(
            k_c.csr_matmat_dense(*args, z, a.n_rows),
            k_p.csr_matmat_dense(*args, z, a.n_rows),
        )

    @settings(max_examples=25, deadline=None)
    @given(matrices, st.integers(0, 2**32 - 1))
    def test_gram_and_cholesky(self, pair, seed):
        a, _ = pair
        rng = np.random.default_rng(seed)
        w = rng.uniform(0.1, 2.0, a.n_cols)
        args = (a.row_ptr, a.col_idx, a.values, w, a.n_rows, a.n_cols)
        pk_c = backend.kernels.weighted_gram_packed(*args)
        pk_p = _kernels_py.weighted_gram_packed(*args)
        assert np.allclose(pk_c, pk_p)

        dim = a.n_rows
        g = rng.standard_normal((dim, dim + 2))
        full = g @ g.T + 0.5 * np.eye(dim)
        packed = DenseSymMatrix.from_full(full).values
        vc, okc, badc = backend.kernels.cholesky_packed(packed, dim, 0.0, 0.0)
        vp, okp, badp = _kernels_py.cholesky_packed(packed, dim, 0.0, 0.0)
        assert okc == okp and badc == badp
        assert np.allclose(vc, vp)
        rhs = rng.standard_normal(dim)
        assert np.allclose(
            backend.kernels.solve_packed(vc, dim, rhs),
            _kernels_py.solve_packed(vp, dim, rhs),
        )
