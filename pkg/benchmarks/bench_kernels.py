"""Micro-benchmark: compiled kernels vs the numpy fallback.

Times each hot kernel on random CSR inputs and prints a table with the
median per-call time for both implementations and the speedup.  Run as

    python3 benchmarks/bench_kernels.py [--rows 400] [--cols 2000] ...

The numpy fallback is imported directly, so this works regardless of the
BLOCKLP_PURE setting; if the extension is unavailable both columns time
the fallback and the table says so.
"""

import argparse
import statistics
import time

import numpy as np

from blocklp import _kernels_py
from blocklp.backend import COMPILED, kernels


def random_csr(rng, n_rows, n_cols, nnz_per_row):
    col_idx = []
    row_ptr = [0]
    for _ in range(n_rows):
        k = min(nnz_per_row, n_cols)
        col_idx.append(np.sort(rng.choice(n_cols, size=k, replace=False)))
        row_ptr.append(row_ptr[-1] + k)
    col_idx = np.concatenate(col_idx).astype(np.int64)
    values = rng.standard_normal(len(col_idx))
    return (
        np.array(row_ptr, dtype=np.int64),
        col_idx,
        values,
    )


def time_call(fn, args, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times) * 1000.0


def build_cases(args):
    rng = np.random.default_rng(args.seed)
    m, n = args.rows, args.cols
    row_ptr, col_idx, values = random_csr(rng, m, n, args.nnz)
    w = rng.uniform(0.2, 3.0, n)
    x = rng.standard_normal(n)
    y = rng.standard_normal(m)
    dense = rng.standard_normal((n, args.k))

    gram = _kernels_py.weighted_gram_packed(row_ptr, col_idx, values, w, m, n)
    # make the gram comfortably positive definite for the factor benchmarks
    diag_idx = np.array([i * (i + 1) // 2 + i for i in range(m)])
    gram[diag_idx] += 10.0
    l_packed, ok, _ = _kernels_py.cholesky_packed(gram, m, 0.0, 1e-300)
    assert ok

    return [
        ("weighted_gram_packed", "weighted_gram_packed",
         (row_ptr, col_idx, values, w, m, n)),
        ("cholesky_packed", "cholesky_packed", (gram, m, 0.0, 1e-300)),
        ("solve_packed", "solve_packed", (l_packed, m, y)),
        ("csr_matvec", "csr_matvec", (row_ptr, col_idx, values, x, m)),
        ("csr_rmatvec", "csr_rmatvec", (row_ptr, col_idx, values, y, m, n)),
        ("csr_matmat_dense", "csr_matmat_dense",
         (row_ptr, col_idx, values, dense, m)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=400)
    parser.add_argument("--cols", type=int, default=2000)
    parser.add_argument("--nnz", type=int, default=12,
                        help="nonzeros per row")
    parser.add_argument("--k", type=int, default=8,
                        help="dense right-hand-side columns for matmat")
    parser.add_argument("--repeats", type=int, default=11)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    cases = build_cases(args)
    label = "compiled" if COMPILED else "fallback (extension unavailable)"
    print(
        "kernel benchmark: %d x %d CSR, %d nnz/row, median of %d runs"
        % (args.rows, args.cols, args.nnz, args.repeats)
    )
    print("fast backend: %s" % label)
    header = "%-22s %12s %12s %9s" % (
        "kernel", "compiled ms", "pure ms", "speedup"
    )
    print(header)
    print("-" * len(header))
    for name, attr, call_args in cases:
        fast = time_call(getattr(kernels, attr), call_args, args.repeats)
        pure = time_call(getattr(_kernels_py, attr), call_args, args.repeats)
        out_fast = getattr(kernels, attr)(*call_args)
        out_pure = getattr(_kernels_py, attr)(*call_args)
        a = out_fast[0] if isinstance(out_fast, tuple) else out_fast
        b = out_pure[0] if isinstance(out_pure, tuple) else out_pure
        assert np.allclose(a, b, rtol=1e-10, atol=1e-12), name
        print(
            "%-22s %12.3f %12.3f %8.1fx" % (name, fast, pure, pure / fast)
        )


if __name__ == "__main__":
    main()
