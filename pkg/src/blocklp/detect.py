"""Detection of block-diagonal-plus-low-rank constraint structure.

A detected structure partitions the rows of A into a leading block plus K-1
trailing blocks.  Block k owns a row set, a set of diagonal columns whose
restriction to the block rows has pairwise structurally orthogonal rows, and
a set of coupling columns shared with the leading block.  Detection is a
single greedy pass over consecutive rows; optimal detection is intractable,
which the independent-set reduction below makes testable.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyGraph, TooLarge
from .linalg import from_triplets


@dataclass
class DetectionParams:
    m_min: int = 3
    j_max: int = 10
    require_nonzero_coupling: bool = False

    def __post_init__(self):
        if self.m_min < 2:
            raise ValueError("m_min must be at least 2")
        if self.j_max < 1:
            raise ValueError("j_max must be at least 1")


@dataclass
class Block:
    """One trailing block: rows, diagonal columns, coupling columns."""

    rows: list
    diag_cols: list
    coupling_cols: list


@dataclass
class BlockStructure:
    """Detected partition; blocks[0] corresponds to k=2."""

    n_rows: int
    n_cols: int
    blocks: list

    @property
    def k_blocks(self):
        return len(self.blocks) + 1

    @property
    def m1(self):
        return self.n_rows - sum(len(b.rows) for b in self.blocks)

    def block1_rows(self):
        """Rows of the leading block, in order."""
        taken = set()
        for b in self.blocks:
            taken.update(b.rows)
        return [i for i in range(self.n_rows) if i not in taken]

    def block1_cols(self):
        """Columns not owned by any block diagonal (includes coupling)."""
        taken = set()
        for b in self.blocks:
            taken.update(b.diag_cols)
        return [j for j in range(self.n_cols) if j not in taken]

    def coupling_ranks(self, a):
        """p_k per block: coupling columns with a nonzero in the block rows."""
        return [
            len(_nonzero_coupling_cols(a, b)) for b in self.blocks
        ]

    def to_dict(self):
        return {
            "k_blocks": self.k_blocks,
            "m1": self.m1,
            "blocks": [
                {
                    "rows": list(map(int, b.rows)),
                    "diag_cols": list(map(int, b.diag_cols)),
                    "coupling_cols": list(map(int, b.coupling_cols)),
                }
                for b in self.blocks
            ],
        }


@dataclass
class Graph:
    n_vertices: int
    edges: list

    def __post_init__(self):
        seen = set()
        norm = []
        for u, v in self.edges:
            if u == v:
                raise ValueError("self-loop at vertex %d" % u)
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError("edge endpoint out of range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError("duplicate edge %s" % (key,))
            seen.add(key)
            norm.append(key)
        self.edges = sorted(norm)


@dataclass
class ValidationCheck:
    passed: bool
    witness: tuple = None


@dataclass
class ValidationReport:
    """Structural checks on a candidate BlockStructure.

    off_diagonal_zero: block rows have no nonzero in another block's
      diagonal columns.
    diag_rows_orthogonal: within a block, no two rows share a nonzero
      diagonal column (so E_k @ E_k.T is diagonal).
    coupling_disjoint: nonzero coupling column sets are pairwise disjoint
      across blocks.
    ew_diag_positive: every block row touches at least one diagonal column
      (needed by the reduced solver, not part of structural soundness).
    """

    off_diagonal_zero: ValidationCheck
    diag_rows_orthogonal: ValidationCheck
    coupling_disjoint: ValidationCheck
    ew_diag_positive: ValidationCheck

    @property
    def passed(self):
        return (
            self.off_diagonal_zero.passed
            and self.diag_rows_orthogonal.passed
            and self.coupling_disjoint.passed
        )

    def to_dict(self):
        def check(c):
            return {"passed": c.passed, "witness": c.witness}

        return {
            "passed": self.passed,
            "off_diagonal_zero": check(self.off_diagonal_zero),
            "diag_rows_orthogonal": check(self.diag_rows_orthogonal),
            "coupling_disjoint": check(self.coupling_disjoint),
            "ew_diag_positive": check(self.ew_diag_positive),
        }


def _nonzero_coupling_cols(a, block):
    diag = set(block.diag_cols)
    cols = set()
    for i in block.rows:
        for j in a.row_cols(i):
            if j not in diag:
                cols.add(int(j))
    return cols


def detect_structure(a, params, _interval_coupling=True):
    """Greedy single-pass detection of trailing blocks.

    Consecutive rows with few nonzeros are grouped: the columns shared by
    the first two rows become the coupling set, all other columns of block
    rows accumulate into the diagonal set.  A row breaks the block when it
    misses the (nonempty) coupling pattern, shares a non-coupling column
    with the accumulated diagonal set, or shares a column outside the
    coupling set with its predecessor.
    """
    m = a.n_rows
    nnz_per_row = np.diff(a.row_ptr)
    jmax = params.j_max
    blocks = []
    claimed_cols = set()
    last_final_rows = set()

    cur_rows = []
    cur_diag = set()
    cur_coup = set()
    coup_lo = coup_hi = -1
    coup_contiguous = False

    def row_set(i):
        return set(map(int, a.row_cols(i)))

    def coup_contains(cols):
        # Interval compression: when the coupling set is a contiguous index
        # range, the subset test needs only two comparisons.
        if _interval_coupling and coup_contiguous:
            return all(coup_lo <= c <= coup_hi for c in cols)
        return cols <= cur_coup

    def coup_touches(cols):
        # A row fits the pattern only if it hits the coupling columns
        # (vacuously true for a couplingless block).
        if not cur_coup:
            return True
        if _interval_coupling and coup_contiguous:
            return any(coup_lo <= c <= coup_hi for c in cols)
        return not cols.isdisjoint(cur_coup)

    def finalize():
        nonlocal cur_rows, cur_diag, cur_coup, last_final_rows
        if len(cur_rows) >= params.m_min and not (
            (cur_diag | cur_coup) & claimed_cols
        ):
            claimed_cols.update(cur_diag | cur_coup)
            blocks.append(
                Block(list(cur_rows), sorted(cur_diag), sorted(cur_coup))
            )
            last_final_rows = set(cur_rows)
        cur_rows = []
        cur_diag = set()
        cur_coup = set()

    for i in range(1, m):
        if (
            nnz_per_row[i] <= jmax
            and nnz_per_row[i - 1] <= jmax
            and (i - 1) not in last_final_rows
        ):
            j_cur = row_set(i)
            if not cur_rows:
                j_prev = row_set(i - 1)
                cur_rows = [i - 1, i]
                cur_coup = j_prev & j_cur
                cur_diag = (j_prev | j_cur) - cur_coup
                if cur_coup:
                    coup_lo, coup_hi = min(cur_coup), max(cur_coup)
                    coup_contiguous = coup_hi - coup_lo + 1 == len(cur_coup)
                else:
                    coup_contiguous = False
            else:
                j_prev = row_set(i - 1)
                fresh = j_cur - cur_coup
                if (
                    coup_contains(j_prev & j_cur)
                    and coup_touches(j_cur)
                    and not (cur_diag & fresh)
                ):
                    cur_rows.append(i)
                    cur_diag |= fresh
                else:
                    finalize()
        else:
            finalize()
    finalize()

    if params.require_nonzero_coupling:
        blocks = [b for b in blocks if _nonzero_coupling_cols(a, b)]
    return BlockStructure(a.n_rows, a.n_cols, blocks)


def validate_structure(a, structure):
    """Check, on nonzero patterns only, that a structure fits its matrix."""
    col_owner = {}
    for k, b in enumerate(structure.blocks):
        for j in b.diag_cols:
            col_owner[j] = k

    off_diag = ValidationCheck(True)
    for k, b in enumerate(structure.blocks):
        for i in b.rows:
            for j in a.row_cols(i):
                owner = col_owner.get(int(j))
                if owner is not None and owner != k:
                    off_diag = ValidationCheck(False, (int(i), int(j)))
                    break
            if not off_diag.passed:
                break
        if not off_diag.passed:
            break

    orthogonal = ValidationCheck(True)
    for k, b in enumerate(structure.blocks):
        seen = {}
        diag = set(b.diag_cols)
        for i in b.rows:
            for j in a.row_cols(i):
                j = int(j)
                if j in diag:
                    if j in seen:
                        orthogonal = ValidationCheck(False, (seen[j], int(i), j))
                        break
                    seen[j] = int(i)
            if not orthogonal.passed:
                break
        if not orthogonal.passed:
            break

    disjoint = ValidationCheck(True)
    owner = {}
    for k, b in enumerate(structure.blocks):
        for j in _nonzero_coupling_cols(a, b):
            if j in owner and owner[j] != k:
                disjoint = ValidationCheck(False, (owner[j], k, j))
                break
            owner[j] = k
        if not disjoint.passed:
            break

    ew_positive = ValidationCheck(True)
    for k, b in enumerate(structure.blocks):
        diag = set(b.diag_cols)
        for i in b.rows:
            if not any(int(j) in diag for j in a.row_cols(i)):
                ew_positive = ValidationCheck(False, (k, int(i)))
                break
        if not ew_positive.passed:
            break

    return ValidationReport(off_diag, orthogonal, disjoint, ew_positive)


def reduce_independent_set(g):
    """Matrix whose largest single-block row set encodes max independent set.

    Column 0 is all ones; column j+1 has ones at the endpoints of edge j.
    """
    if g.n_vertices < 2:
        raise EmptyGraph("need at least 2 vertices")
    entries = [(i, 0, 1.0) for i in range(g.n_vertices)]
    for j, (u, v) in enumerate(g.edges):
        entries.append((u, j + 1, 1.0))
        entries.append((v, j + 1, 1.0))
    return from_triplets(g.n_vertices, len(g.edges) + 1, entries)


def brute_force_largest_block(b):
    """Exhaustive maximizer of the single-block decision problem.

    Over all exempt columns q and row subsets I, maximizes |I| subject to
    every column other than q having at most one nonzero among the rows I.
    Ties break toward the smallest q, then the lexicographically smallest
    row set.  Exponential; limited to 20 rows.
    """
    if b.n_rows > 20:
        raise TooLarge("brute force limited to 20 rows")
    m = b.n_rows
    col_rows = {}
    for i in range(m):
        for j in b.row_cols(i):
            col_rows.setdefault(int(j), []).append(i)

    best = None  # (size, q, rows tuple)
    for q in range(b.n_cols):
        adj = [0] * m
        for j, rows in col_rows.items():
            if j == q:
                continue
            for i1 in rows:
                for i2 in rows:
                    if i1 != i2:
                        adj[i1] |= 1 << i2

        memo = {}

        def mis(mask):
            if mask == 0:
                return ()
            if mask in memo:
                return memo[mask]
            v = (mask & -mask).bit_length() - 1
            take = (v,) + mis(mask & ~(adj[v] | (1 << v)))
            skip = mis(mask & ~(1 << v))
            result = take if len(take) >= len(skip) else skip
            memo[mask] = result
            return result

        rows = mis((1 << m) - 1)
        if best is None or len(rows) > best[0]:
            best = (len(rows), q, rows)
    if best is None:
        return (set(), -1, 0)
    return (set(best[2]), best[1], best[0])


def max_independent_set_size(g):
    """Exhaustive graph oracle, independent of the matrix reduction."""
    best = 0
    adj = [set() for _ in range(g.n_vertices)]
    for u, v in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    for mask in range(1 << g.n_vertices):
        members = [v for v in range(g.n_vertices) if mask >> v & 1]
        if all(u not in adj[v] for u in members for v in members):
            best = max(best, len(members))
    return best
