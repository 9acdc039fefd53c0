"""Primal-dual interior point solver with two Newton-direction backends.

The full backend factors the m-by-m normal matrix A W A' per iteration.
The reduced backend exploits a detected block structure: per trailing block
the normal matrix restricted to the block rows is diagonal plus a rank-p
coupling term, so its inverse is applied through a Sherman-Morrison-Woodbury
update and only an m1-by-m1 system is factored, m1 being the leading block
size.  Both backends produce the same step up to rounding.
"""

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .detect import validate_structure
from .errors import (
    DimensionMismatch,
    FactorFailed,
    NotPositiveDefinite,
    SingularGram,
    StructureViolation,
)
from .linalg import DenseSymMatrix, cholesky, solve_cholesky, weighted_gram


@dataclass
class IpmOptions:
    eps_p: float = 1e-8
    eps_d: float = 1e-8
    eps_c: float = 1e-8
    max_iter: int = 200
    step_factor: float = 0.99995
    sigma_min: float = 1e-3
    sigma_max: float = 0.5
    backend: str = "auto"  # "full" | "reduced" | "auto"
    regularization: float = 0.0

    def __post_init__(self):
        if not 0 < self.step_factor < 1:
            raise ValueError("step_factor must be in (0,1)")
        if min(self.eps_p, self.eps_d, self.eps_c) <= 0:
            raise ValueError("tolerances must be positive")
        if self.backend not in ("full", "reduced", "auto"):
            raise ValueError("backend must be full, reduced or auto")
        if self.regularization < 0:
            raise ValueError("regularization must be nonnegative")


@dataclass
class IpmState:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    mu: float
    r_primal: np.ndarray = None
    r_dual: np.ndarray = None
    r_comp: np.ndarray = None


@dataclass
class SolveReport:
    status: str  # Optimal | MaxIter | NumericalFailure | Infeasible-suspected
    objective: float
    iterations: int
    backend: str
    log: list = field(default_factory=list)
    structure_stats: dict = None
    x: np.ndarray = None
    y: np.ndarray = None
    s: np.ndarray = None
    timings: dict = None

    def to_dict(self):
        return {
            "status": self.status,
            "objective": self.objective,
            "iterations": self.iterations,
            "backend": self.backend,
            "log": self.log,
            "structure_stats": self.structure_stats,
            "timings": self.timings,
        }

    def iter_log_lines(self):
        """The per-iteration log as JSON lines."""
        return "".join(json.dumps(entry) + "\n" for entry in self.log)


def compute_residuals(lp, state):
    """Residuals of the optimality system at the current iterate."""
    x, y, s = state.x, state.y, state.s
    if len(x) != lp.n or len(s) != lp.n or len(y) != lp.m:
        raise DimensionMismatch("iterate dimensions do not match the LP")
    r_primal = lp.b - lp.a.matvec(x)
    r_dual = lp.c - lp.a.rmatvec(y) - s
    r_comp = state.mu - x * s
    return r_primal, r_dual, r_comp


def barrier_update(state, prev_gap=None, sigma_min=1e-3, sigma_max=0.5):
    """New barrier weight: sigma * (x's/n), sigma from the gap-reduction cube."""
    gap = float(state.x @ state.s)
    n = len(state.x)
    if gap <= 0.0:
        return 0.0
    if prev_gap is None or prev_gap <= 0.0:
        sigma = sigma_max
    else:
        sigma = (gap / prev_gap) ** 3
        sigma = min(max(sigma, sigma_min), sigma_max)
    return sigma * gap / n


def step_length(x, s, dx, ds, step_factor=0.99995):
    """Largest step keeping x and s strictly positive, scaled back."""
    alpha = 1.0 / step_factor
    neg = dx < 0
    if neg.any():
        alpha = min(alpha, float(np.min(-x[neg] / dx[neg])))
    neg = ds < 0
    if neg.any():
        alpha = min(alpha, float(np.min(-s[neg] / ds[neg])))
    return min(1.0, step_factor * alpha)


# ---------------------------------------------------------------------------
# Newton-direction backends
# ---------------------------------------------------------------------------


class FullNormalSolver:
    """Factors the full m-by-m normal matrix A diag(w) A'."""

    name = "full"

    def __init__(self, lp):
        self.lp = lp

    def factor(self, w, regularization=0.0):
        gram = weighted_gram(self.lp.a, w)
        f = cholesky(gram, regularization)
        if not f.success:
            raise NotPositiveDefinite(
                "normal matrix pivot %d not positive" % f.failed_pivot,
                scale=float(np.abs(gram.diagonal()).max(initial=0.0)),
            )
        self._factor = f

    def solve_normal(self, rhs):
        return solve_cholesky(self._factor, rhs)


class ReducedNormalSolver:
    """Applies the block-structured normal matrix through its m1 reduction.

    The reduced matrix is built per block as the leading-block accumulator
    minus the symmetric product B S_inv B', applied through a square root
    of the diagonal-plus-low-rank block inverse; the right-hand-side
    reduction and recovery reuse the same Woodbury stages.
    """

    name = "reduced"

    def __init__(self, lp, structure):
        report = validate_structure(lp.a, structure)
        if not report.passed or not report.ew_diag_positive.passed:
            raise StructureViolation(
                "structure does not fit the matrix: %s" % report.to_dict()
            )
        self.lp = lp
        self.structure = structure
        a = lp.a
        self.block1_rows = np.array(structure.block1_rows(), dtype=np.int64)
        self.m1 = len(self.block1_rows)
        # Dense view of the leading-block rows over all columns.
        self.a1 = a.take_rows(self.block1_rows).to_dense()

        self.blocks = []
        for b in structure.blocks:
            rows = np.array(b.rows, dtype=np.int64)
            diag = {j: t for t, j in enumerate(b.diag_cols)}
            sub = a.take_rows(rows)
            # Split block-row nonzeros into diagonal-column entries (one per
            # column by orthogonality) and coupling-column entries.
            e_cols = np.array(b.diag_cols, dtype=np.int64)
            e_row = np.zeros(len(e_cols), dtype=np.int64)
            e_val = np.zeros(len(e_cols))
            coup = {}
            for li in range(len(rows)):
                for j, v in zip(sub.row_cols(li), sub.row_vals(li)):
                    j = int(j)
                    t = diag.get(j)
                    if t is not None:
                        e_row[t] = li
                        e_val[t] = v
                    else:
                        coup.setdefault(j, []).append((li, float(v)))
            j_list = sorted(coup)
            u_rows = [
                np.array([e[0] for e in coup[j]], dtype=np.int64)
                for j in j_list
            ]
            u_vals = [np.array([e[1] for e in coup[j]]) for j in j_list]
            a1k = np.ascontiguousarray(self.a1[:, e_cols])
            a11 = [self.a1[:, j].copy() for j in j_list]
            self.blocks.append(
                {
                    "rows": rows,
                    "e_cols": e_cols,
                    "e_row": e_row,
                    "e_val": e_val,
                    "j_list": np.array(j_list, dtype=np.int64),
                    "u_rows": u_rows,
                    "u_vals": u_vals,
                    "a1k": a1k,
                    "a11": a11,
                }
            )

    def factor(self, w, regularization=0.0):
        m1 = self.m1
        a1 = self.a1
        reduced = (a1 * w) @ a1.T if m1 else np.zeros((0, 0))
        self.w = w

        for blk in self.blocks:
            mk = len(blk["rows"])
            wk = w[blk["e_cols"]]
            # diag(E W E') -- each diagonal column hits exactly one block row
            phi = np.zeros(mk)
            np.add.at(phi, blk["e_row"], blk["e_val"] ** 2 * wk)
            if np.min(phi, initial=np.inf) <= 0.0:
                raise StructureViolation("block row without diagonal support")
            blk["phi"] = phi

            j_list = blk["j_list"]
            p = len(j_list)
            w1 = w[j_list] if p else np.zeros(0)
            u_dense = np.zeros((mk, p))
            for t in range(p):
                u_dense[blk["u_rows"][t], t] = blk["u_vals"][t]
            v_mat = u_dense * np.sqrt(w1)[None, :]
            blk["v"] = v_mat

            # B = A11 W1 A_k1' + A_1k W_k E_k', stored densely (m1 x mk).
            ht = np.zeros((mk, m1))
            scaled = blk["a1k"] * (wk * blk["e_val"])[None, :]
            np.add.at(ht, blk["e_row"], scaled.T)
            b_mat = ht.T.copy()
            for t in range(p):
                b_mat[:, blk["u_rows"][t]] += (
                    w1[t] * np.outer(blk["a11"][t], blk["u_vals"][t])
                )
            blk["b"] = b_mat

            if p:
                vp = v_mat / phi[:, None]
                inner = np.eye(p) + v_mat.T @ vp
                l_inner = np.linalg.cholesky(inner)
                c_mat = np.linalg.solve(l_inner, np.eye(p)).T  # inner^(-1/2)
                d_mat = vp @ c_mat
            else:
                c_mat = np.zeros((0, 0))
                d_mat = np.zeros((mk, 0))
            blk["c"] = c_mat
            blk["d"] = d_mat

            # Symmetric square root of the block inverse:
            # S^-1 = Z Z' with Z = Phi^(-1/2) (I - Vh T Vh'), Vh = Phi^(1/2) D.
            # Applying S^-1 through Z (and assembling B S^-1 B' as a single
            # product Y Y') halves the digit loss of the huge-diagonal /
            # low-rank cancellation when Phi is badly scaled near convergence;
            # the split form loses the positive definiteness of the reduced
            # matrix and the accuracy of the recovery to rounding.
            sq = np.sqrt(phi)
            blk["sqrt_phi"] = sq
            if p:
                v_hat = d_mat * sq[:, None]
                # Vh' Vh = I - C' C, so the singular values of C carry the
                # distance to 1 exactly; the square-root coefficient
                # (1 - sqrt(1 - lam)) / lam collapses to 1 / (1 + sigma),
                # stable even when lam rounds to 1.
                _, sig, q_t = np.linalg.svd(c_mat)
                t_small = (q_t.T / (1.0 + sig)) @ q_t
                blk["v_hat"] = v_hat
                blk["t_small"] = t_small
            else:
                blk["v_hat"] = np.zeros((mk, 0))
                blk["t_small"] = np.zeros((0, 0))

            if m1:
                y_mat = b_mat / sq[None, :]
                if p:
                    y_mat = y_mat - (y_mat @ blk["v_hat"]) @ (
                        blk["t_small"] @ blk["v_hat"].T
                    )
                reduced -= y_mat @ y_mat.T

        f = cholesky(DenseSymMatrix.from_full(reduced), regularization)
        if not f.success:
            raise NotPositiveDefinite(
                "reduced matrix pivot %d not positive" % f.failed_pivot,
                scale=float(np.abs(np.diag(reduced)).max(initial=0.0)),
            )
        self._factor = f

    def _apply_block_inverse(self, blk, u):
        """(diag + V V')^{-1} u through the symmetric square root Z Z'."""
        sq = blk["sqrt_phi"]
        v_hat, t_small = blk["v_hat"], blk["t_small"]
        z = u / sq
        if v_hat.shape[1]:
            z = z - v_hat @ (t_small @ (v_hat.T @ z))
            out = z - v_hat @ (t_small @ (v_hat.T @ z))
            return out / sq
        return z / sq

    def solve_normal(self, rhs):
        r1 = rhs[self.block1_rows]
        reduced_rhs = r1.copy()
        for blk in self.blocks:
            rk = rhs[blk["rows"]]
            blk["_sinv_rk"] = self._apply_block_inverse(blk, rk)
            reduced_rhs -= blk["b"] @ blk["_sinv_rk"]
        dy1 = solve_cholesky(self._factor, reduced_rhs)
        dy = np.zeros(len(rhs))
        dy[self.block1_rows] = dy1
        for blk in self.blocks:
            rk = rhs[blk["rows"]]
            dy[blk["rows"]] = self._apply_block_inverse(
                blk, rk - blk["b"].T @ dy1
            )
        return dy


def _newton_direction(lp, solver, state, rhs_mu):
    """Back-substitutions around the normal-equation solve."""
    x, y, s = state.x, state.y, state.s
    w = x / s
    r_primal = lp.b - lp.a.matvec(x)
    r_dual = lp.c - lp.a.rmatvec(y) - s
    r_comp = rhs_mu - x * s
    rhs = r_primal + lp.a.matvec(w * r_dual - r_comp / s)
    dy = solver.solve_normal(rhs)
    # Iterative refinement: the weighted normal matrix becomes extremely
    # ill-conditioned near convergence, and the raw solve can leave residual
    # error far above the stopping tolerance.  Corrections are kept only
    # while they reduce the residual.
    rhs_norm = float(np.linalg.norm(rhs))
    res = rhs - lp.a.matvec(w * lp.a.rmatvec(dy))
    res_norm = float(np.linalg.norm(res))
    for _ in range(2):
        if res_norm <= 1e-14 * (1.0 + rhs_norm):
            break
        cand = dy + solver.solve_normal(res)
        cand_res = rhs - lp.a.matvec(w * lp.a.rmatvec(cand))
        cand_norm = float(np.linalg.norm(cand_res))
        if cand_norm >= res_norm:
            break
        dy, res, res_norm = cand, cand_res, cand_norm
    ds = r_dual - lp.a.rmatvec(dy)
    dx = r_comp / s - w * ds
    return dx, dy, ds


def direction_full(lp, state, rhs_mu, regularization=0.0):
    solver = FullNormalSolver(lp)
    solver.factor(state.x / state.s, regularization)
    return _newton_direction(lp, solver, state, rhs_mu)


def direction_reduced(lp, structure, state, rhs_mu, regularization=0.0):
    solver = ReducedNormalSolver(lp, structure)
    solver.factor(state.x / state.s, regularization)
    return _newton_direction(lp, solver, state, rhs_mu)


# ---------------------------------------------------------------------------
# Starting point and main loop
# ---------------------------------------------------------------------------


def _shift_positive(v):
    delta = max(-1.5 * float(v.min(initial=0.0)), 0.0)
    delta += 0.1 * (1.0 + float(np.mean(np.abs(v))) if len(v) else 1.0)
    return v + delta


def starting_point(lp, structure=None, regularization=0.0, _solver=None):
    """Least-squares iterate shifted strictly inside the positive orthant."""
    if _solver is not None:
        solver = _solver
    elif structure is not None:
        solver = ReducedNormalSolver(lp, structure)
    else:
        solver = FullNormalSolver(lp)
    w = np.ones(lp.n)
    try:
        solver.factor(w, regularization)
    except NotPositiveDefinite as exc:
        raise SingularGram("row gram matrix is numerically singular") from exc
    try:
        q = solver.solve_normal(lp.b)
        y = solver.solve_normal(lp.a.matvec(lp.c))
    except FactorFailed as exc:  # pragma: no cover - guarded above
        raise SingularGram(str(exc)) from exc
    x = lp.a.rmatvec(q)
    s = lp.c - lp.a.rmatvec(y)
    x = _shift_positive(x)
    s = _shift_positive(s)
    mu = float(x @ s) / max(lp.n, 1)
    return IpmState(x=x, y=y, s=s, mu=mu)


def _pick_backend(lp, structure, options):
    if options.backend == "full":
        return "full"
    if options.backend == "reduced":
        if structure is None:
            raise StructureViolation("reduced backend requires a structure")
        return "reduced"
    if structure is None:
        return "full"
    covered = sum(len(b.rows) for b in structure.blocks)
    return "reduced" if covered >= 0.25 * lp.m else "full"


def solve(lp, structure=None, options=None):
    """Path-following loop; see SolveReport for the outcome vocabulary."""
    options = options or IpmOptions()
    backend_name = _pick_backend(lp, structure, options)
    t0 = time.perf_counter()
    solver = None
    if backend_name == "reduced":
        try:
            solver = ReducedNormalSolver(lp, structure)
        except StructureViolation:
            # A detected structure may fail the solver-side checks (e.g. a
            # block row without diagonal support); auto mode falls back.
            if options.backend != "auto":
                raise
            backend_name = "full"
    if solver is not None:
        stats = {
            "K": structure.k_blocks,
            "m": lp.m,
            "m1": structure.m1,
            "sum_pk": int(sum(structure.coupling_ranks(lp.a))),
        }
    else:
        solver = FullNormalSolver(lp)
        stats = {"K": 1, "m": lp.m, "m1": lp.m, "sum_pk": 0}
    timings = {"setup": 0.0, "starting_point": 0.0, "directions": 0.0}
    timings["setup"] = time.perf_counter() - t0

    def finish(status, state, iters, log):
        obj = float(lp.c @ state.x)
        return SolveReport(
            status=status,
            objective=obj,
            iterations=iters,
            backend=backend_name,
            log=log,
            structure_stats=stats,
            x=state.x,
            y=state.y,
            s=state.s,
            timings=timings,
        )

    t0 = time.perf_counter()
    try:
        state = starting_point(
            lp, regularization=options.regularization, _solver=solver
        )
    except SingularGram:
        # Rank-deficient rows: fall back to a centered guess and rely on
        # regularized factorizations below.
        state = IpmState(
            x=np.ones(lp.n), y=np.zeros(lp.m), s=np.ones(lp.n), mu=1.0
        )
    timings["starting_point"] = time.perf_counter() - t0

    norm_b = float(np.linalg.norm(lp.b))
    norm_c = float(np.linalg.norm(lp.c))
    scale0 = 1.0 + max(
        float(np.abs(state.x).max(initial=0.0)),
        float(np.abs(state.y).max(initial=0.0)),
        float(np.abs(state.s).max(initial=0.0)),
    )
    log = []
    prev_gap = None
    consecutive_failures = 0

    for it in range(options.max_iter + 1):
        r_p, r_d, r_c = compute_residuals(lp, state)
        state.r_primal, state.r_dual, state.r_comp = r_p, r_d, r_c
        obj = float(lp.c @ state.x)
        np_r, nd_r, nc_r = (
            float(np.linalg.norm(r_p)),
            float(np.linalg.norm(r_d)),
            float(np.linalg.norm(r_c)),
        )
        # The centrality residual alone can pass at a well-centered iterate
        # whose barrier weight is still large, so optimality additionally
        # requires the complementarity products themselves to be small.
        nxs = float(np.linalg.norm(state.x * state.s))
        if (
            np_r < options.eps_p * (1 + norm_b)
            and nd_r < options.eps_d * (1 + norm_c)
            and nc_r < options.eps_c * (1 + abs(obj))
            and nxs < options.eps_c * (1 + abs(obj))
        ):
            return finish("Optimal", state, it, log)
        if it == options.max_iter:
            return finish("MaxIter", state, it, log)

        big = max(
            float(np.abs(state.x).max(initial=0.0)),
            float(np.abs(state.y).max(initial=0.0)),
            float(np.abs(state.s).max(initial=0.0)),
        )
        if not np.isfinite(big):
            return finish("NumericalFailure", state, it, log)
        if big > 1e10 * scale0 or big > 1e14:
            return finish("Infeasible-suspected", state, it, log)
        # Complementarity collapsed but feasibility residuals stalled well
        # above tolerance: no feasible point is being approached.
        gap = float(state.x @ state.s)
        if gap < 1e-10 * (1 + abs(obj)) and (
            np_r > 1e3 * options.eps_p * (1 + norm_b)
            or nd_r > 1e3 * options.eps_d * (1 + norm_c)
        ):
            return finish("Infeasible-suspected", state, it, log)

        mu = barrier_update(
            state, prev_gap, options.sigma_min, options.sigma_max
        )
        prev_gap = float(state.x @ state.s)
        state.mu = mu

        t0 = time.perf_counter()
        direction = None
        reg = options.regularization
        for attempt in range(4):
            try:
                solver.factor(state.x / state.s, reg)
                direction = _newton_direction(lp, solver, state, mu)
                break
            except NotPositiveDefinite as fail:
                # Shift relative to the matrix diagonal; the refinement in
                # _newton_direction corrects the perturbation afterwards.
                scale = fail.scale or (
                    1.0 + float(np.abs(state.x / state.s).max(initial=0.0))
                )
                reg = max(reg * 1e4, 1e-10 * scale) if reg else 1e-10 * scale
        backend_ms = (time.perf_counter() - t0) * 1000.0
        timings["directions"] += backend_ms / 1000.0

        if direction is None:
            consecutive_failures += 1
            if consecutive_failures >= 2:
                return finish("NumericalFailure", state, it, log)
            continue
        consecutive_failures = 0

        dx, dy, ds = direction
        alpha = step_length(state.x, state.s, dx, ds, options.step_factor)
        state.x = state.x + alpha * dx
        state.y = state.y + alpha * dy
        state.s = state.s + alpha * ds
        log.append(
            {
                "iteration": it,
                "mu": mu,
                "r_primal": np_r,
                "r_dual": nd_r,
                "r_comp": nc_r,
                "alpha": alpha,
                "backend_ms": backend_ms,
            }
        )

    return finish("MaxIter", state, options.max_iter, log)  # pragma: no cover
