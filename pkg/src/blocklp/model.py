"""Problem ingestion and generation.

Covers MPS parsing, conversion to standard form min c'x s.t. Ax = b, x >= 0,
dualization, the reformulation of convex piecewise linear (CPL) constraints
into the block-structured matrix layout the solver exploits, and synthetic
instance generators (inventory, l1 regression, CVaR, soft dose bounds, and a
fluence-map optimization model with mean over/underdose relaxation).
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadParams, DimensionMismatch, InfeasibleBounds, ParseError, UnsupportedSection
from .linalg import SparseMatrix, from_triplets

INF = math.inf


@dataclass
class Row:
    name: str
    sense: str  # "<=", "=", ">="
    coeffs: dict
    rhs: float = 0.0
    rng: float = None  # RANGES value, making the row two-sided


@dataclass
class GeneralLP:
    sense: str  # "min" | "max"
    objective: dict  # variable -> coefficient
    obj_constant: float
    rows: list
    variables: list
    lower: dict
    upper: dict

    def __post_init__(self):
        names = set()
        for r in self.rows:
            if r.name in names:
                raise ValueError("duplicate row name %r" % r.name)
            names.add(r.name)
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable name")


@dataclass
class StandardFormLP:
    """min c'x s.t. Ax = b, x >= 0, with provenance back to the source model.

    The source objective value of a solution x is
    obj_sign * (c @ x + obj_constant).
    """

    a: SparseMatrix
    b: np.ndarray
    c: np.ndarray
    provenance: list
    obj_constant: float = 0.0
    obj_sign: float = 1.0
    cpl_metadata: list = None

    @property
    def m(self):
        return self.a.n_rows

    @property
    def n(self):
        return self.a.n_cols

    def objective_value(self, x):
        return self.obj_sign * (float(self.c @ x) + self.obj_constant)

    def recover_solution(self, x):
        """Map a standard-form solution back to source-variable values."""
        out = {}
        for j, tag in enumerate(self.provenance):
            var = tag.get("var")
            if var is None:
                continue
            kind = tag["tag"]
            if kind == "original":
                out[var] = tag.get("shift", 0.0) + x[j]
            elif kind == "negated":
                out[var] = tag.get("shift", 0.0) - x[j]
            elif kind == "free-split-pos":
                out[var] = out.get(var, 0.0) + x[j]
            elif kind == "free-split-neg":
                out[var] = out.get(var, 0.0) - x[j]
        return out


@dataclass
class CplSpec:
    """One CPL constraint: sum_i max_l (pieces[i][l] . y + offsets[i][l]) <= bound.

    sum_coeffs, when given, adds entries over the base variables to the
    aggregation column (used to bound the sum by a variable, e.g. epigraphs).
    """

    pieces: list  # pieces[i][l] = coefficient vector over the base variables
    bound: float
    offsets: list = None
    sum_coeffs: np.ndarray = None

    def __post_init__(self):
        if not self.pieces or not self.pieces[0]:
            raise BadParams("need at least one term with one piece")
        self.n_pieces = len(self.pieces[0])
        if any(len(term) != self.n_pieces for term in self.pieces):
            raise BadParams("all terms must have the same number of pieces")
        if self.offsets is None:
            self.offsets = [[0.0] * self.n_pieces for _ in self.pieces]

    @property
    def n_terms(self):
        return len(self.pieces)

    def direct_value(self, y):
        """Evaluate the piecewise-linear left-hand side at y."""
        total = 0.0
        for term, offs in zip(self.pieces, self.offsets):
            total += max(
                float(np.dot(f, y)) + o for f, o in zip(term, offs)
            )
        return total


# ---------------------------------------------------------------------------
# MPS parsing
# ---------------------------------------------------------------------------

_ROW_SENSES = {"L": "<=", "G": ">=", "E": "="}


def parse_mps(text):
    """Parse fixed- or free-format MPS into a GeneralLP.

    The first N row is the objective; default variable bounds are [0, inf).
    Integer markers and SOS sections are rejected.
    """
    sense = "min"
    obj_name = None
    objective = {}
    obj_constant = 0.0
    rows = {}
    row_order = []
    variables = []
    var_seen = set()
    lower = {}
    upper = {}
    explicit_lower = set()
    section = None

    def err(msg, ln):
        raise ParseError(msg, line=ln)

    lines = text.splitlines()
    i = 0
    while i < len(lines):
        raw = lines[i]
        ln = i + 1
        i += 1
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if raw[:1] not in (" ", "\t"):
            parts = raw.split()
            keyword = parts[0].upper()
            if keyword == "NAME":
                section = None
                continue
            if keyword == "OBJSENSE":
                section = "OBJSENSE"
                if len(parts) > 1:
                    sense = "max" if parts[1].upper().startswith("MAX") else "min"
                continue
            if keyword in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"):
                section = keyword
                continue
            if keyword == "ENDATA":
                break
            if keyword == "SOS":
                raise UnsupportedSection("SOS sections not supported", line=ln)
            err("unknown section %r" % keyword, ln)
            continue

        fields = raw.split()
        if section == "OBJSENSE":
            sense = "max" if fields[0].upper().startswith("MAX") else "min"
        elif section == "ROWS":
            if len(fields) != 2:
                err("ROWS line needs a type and a name", ln)
            rtype, name = fields[0].upper(), fields[1]
            if rtype == "N":
                if obj_name is None:
                    obj_name = name
                continue
            if rtype not in _ROW_SENSES:
                err("unknown row type %r" % rtype, ln)
            if name in rows:
                err("duplicate row %r" % name, ln)
            rows[name] = Row(name, _ROW_SENSES[rtype], {})
            row_order.append(name)
        elif section == "COLUMNS":
            if len(fields) >= 3 and fields[1].upper() == "'MARKER'":
                raise UnsupportedSection("integer markers not supported", line=ln)
            if len(fields) < 3 or len(fields) % 2 == 0:
                err("COLUMNS line needs a column and (row, value) pairs", ln)
            col = fields[0]
            if col not in var_seen:
                var_seen.add(col)
                variables.append(col)
            for rname, val in zip(fields[1::2], fields[2::2]):
                try:
                    v = float(val)
                except ValueError:
                    err("bad numeric value %r" % val, ln)
                if rname == obj_name:
                    objective[col] = objective.get(col, 0.0) + v
                elif rname in rows:
                    cfs = rows[rname].coeffs
                    cfs[col] = cfs.get(col, 0.0) + v
                else:
                    err("unknown row %r" % rname, ln)
        elif section == "RHS":
            if len(fields) < 3:
                err("RHS line needs a set name and (row, value) pairs", ln)
            pairs = fields[1:] if len(fields) % 2 == 1 else fields
            for rname, val in zip(pairs[0::2], pairs[1::2]):
                try:
                    v = float(val)
                except ValueError:
                    err("bad numeric value %r" % val, ln)
                if rname == obj_name:
                    obj_constant = -v
                elif rname in rows:
                    rows[rname].rhs = v
                else:
                    err("unknown row %r" % rname, ln)
        elif section == "RANGES":
            pairs = fields[1:] if len(fields) % 2 == 1 else fields
            for rname, val in zip(pairs[0::2], pairs[1::2]):
                if rname not in rows:
                    err("unknown row %r" % rname, ln)
                try:
                    rows[rname].rng = float(val)
                except ValueError:
                    err("bad numeric value %r" % val, ln)
        elif section == "BOUNDS":
            btype = fields[0].upper()
            if btype in ("BV", "LI", "UI", "SC"):
                raise UnsupportedSection("bound type %s not supported" % btype, line=ln)
            if btype in ("FR", "MI", "PL"):
                if len(fields) < 3:
                    err("BOUNDS line needs a bound set and a column", ln)
                col = fields[2]
            else:
                if len(fields) < 4:
                    err("BOUNDS line needs a bound set, column and value", ln)
                col = fields[2]
                try:
                    v = float(fields[3])
                except ValueError:
                    err("bad numeric value %r" % fields[3], ln)
            if col not in var_seen:
                err("bound on unknown column %r" % col, ln)
            if btype == "UP":
                upper[col] = v
                # de-facto rule: a negative upper bound without an explicit
                # lower bound makes the variable unbounded below
                if v < 0 and col not in explicit_lower:
                    lower[col] = -INF
            elif btype == "LO":
                lower[col] = v
                explicit_lower.add(col)
            elif btype == "FX":
                lower[col] = v
                upper[col] = v
                explicit_lower.add(col)
            elif btype == "FR":
                lower[col] = -INF
                upper[col] = INF
            elif btype == "MI":
                lower[col] = -INF
            elif btype == "PL":
                upper[col] = INF
            else:
                err("unknown bound type %r" % btype, ln)
        elif section is None:
            err("data before any section header", ln)
        else:
            err("unhandled section %r" % section, ln)

    if obj_name is None:
        raise ParseError("no objective (N) row found")
    lo = {v: lower.get(v, 0.0) for v in variables}
    hi = {v: upper.get(v, INF) for v in variables}
    return GeneralLP(
        sense, objective, obj_constant,
        [rows[name] for name in row_order], variables, lo, hi,
    )


# ---------------------------------------------------------------------------
# Standard form
# ---------------------------------------------------------------------------


def to_standard_form(lp):
    """Convert a GeneralLP to min c'x, Ax = b, x >= 0.

    Inequalities get slack/surplus columns, finite lower bounds are shifted
    away, free variables are split, and upper bounds become extra rows.
    """
    sign = 1.0 if lp.sense == "min" else -1.0
    obj = {v: sign * lp.objective.get(v, 0.0) for v in lp.variables}
    constant = sign * lp.obj_constant

    # Expand two-sided (RANGES) rows into a <= / >= pair.
    expanded = []
    for r in lp.rows:
        if r.rng is None:
            expanded.append((r.coeffs, r.sense, r.rhs))
            continue
        rng = r.rng
        if r.sense == "<=":
            lo, hi = r.rhs - abs(rng), r.rhs
        elif r.sense == ">=":
            lo, hi = r.rhs, r.rhs + abs(rng)
        else:
            lo, hi = (r.rhs, r.rhs + rng) if rng >= 0 else (r.rhs + rng, r.rhs)
        expanded.append((r.coeffs, "<=", hi))
        expanded.append((r.coeffs, ">=", lo))

    rhs = [e[2] for e in expanded]
    senses = [e[1] for e in expanded]
    triplets = []
    provenance = []
    c = []
    bound_rows = []  # (column index, upper value) pending upper-bound rows
    col = 0

    for v in lp.variables:
        lo, hi = lp.lower[v], lp.upper[v]
        if lo > hi:
            raise InfeasibleBounds("variable %r has lo > hi" % v)
        coef_rows = [
            (i, e[0][v]) for i, e in enumerate(expanded) if v in e[0]
        ]
        cv = obj.get(v, 0.0)
        if lo == -INF and hi == INF:
            for i, a in coef_rows:
                triplets.append((i, col, a))
                triplets.append((i, col + 1, -a))
            c += [cv, -cv]
            provenance.append({"tag": "free-split-pos", "var": v})
            provenance.append({"tag": "free-split-neg", "var": v})
            col += 2
        elif lo == -INF:
            # substitute v = hi - v', v' >= 0
            for i, a in coef_rows:
                triplets.append((i, col, -a))
                rhs[i] -= a * hi
            constant += cv * hi
            c.append(-cv)
            provenance.append({"tag": "negated", "var": v, "shift": hi})
            col += 1
        else:
            for i, a in coef_rows:
                triplets.append((i, col, a))
                if lo != 0.0:
                    rhs[i] -= a * lo
            constant += cv * lo
            c.append(cv)
            provenance.append({"tag": "original", "var": v, "shift": lo})
            if hi != INF:
                bound_rows.append((col, hi - lo))
            col += 1

    n_main = len(expanded)
    for k, (j, ub) in enumerate(bound_rows):
        triplets.append((n_main + k, j, 1.0))
        rhs.append(ub)
        senses.append("<=")

    for i, s in enumerate(senses):
        if s == "<=":
            triplets.append((i, col, 1.0))
            provenance.append({"tag": "slack", "row": i})
            c.append(0.0)
            col += 1
        elif s == ">=":
            triplets.append((i, col, -1.0))
            provenance.append({"tag": "surplus", "row": i})
            c.append(0.0)
            col += 1

    a = from_triplets(len(rhs), col, triplets)
    return StandardFormLP(
        a, np.array(rhs, float), np.array(c, float), provenance,
        obj_constant=constant, obj_sign=sign,
    )


def dualize(lp):
    """Standard-form encoding of max b'y s.t. A'y + s = c, s >= 0.

    The free duals y are split; the source objective value of a dual
    solution carries the flipped sign in obj_sign.
    """
    a, b, c = lp.a, lp.b, lp.c
    m, n = a.n_rows, a.n_cols
    rows_t, cols_t, vals_t = a.triplets()
    triplets = []
    for r, cl, v in zip(rows_t, cols_t, vals_t):
        triplets.append((int(cl), int(r), float(v)))
        triplets.append((int(cl), m + int(r), -float(v)))
    for j in range(n):
        triplets.append((j, 2 * m + j, 1.0))
    a_dual = from_triplets(n, 2 * m + n, triplets)
    c_dual = np.concatenate([-b, b, np.zeros(n)])
    provenance = (
        [{"tag": "free-split-pos", "var": "y%d" % i} for i in range(m)]
        + [{"tag": "free-split-neg", "var": "y%d" % i} for i in range(m)]
        + [{"tag": "slack", "row": j} for j in range(n)]
    )
    return StandardFormLP(
        a_dual, c.copy(), c_dual, provenance,
        obj_constant=-lp.obj_constant, obj_sign=-lp.obj_sign,
    )


# ---------------------------------------------------------------------------
# CPL reformulation
# ---------------------------------------------------------------------------


def build_cpl(base_dim, specs, objective_y=None, extra_columns=()):
    """Assemble the block-structured standard form for CPL constraints.

    Rows are the base variables followed by one aggregation row per CPL
    term, blocks consecutive.  Per constraint the aggregation column comes
    first, then the term-by-piece columns carrying the -1 pattern in the
    block rows and the piece coefficients in the base rows.  extra_columns
    is a sequence of (coeffs over base vars, cost) for additional source
    constraints (e.g. sign constraints of the source problem).
    """
    if objective_y is None:
        objective_y = np.zeros(base_dim)
    objective_y = np.asarray(objective_y, float)
    if len(objective_y) != base_dim:
        raise DimensionMismatch("objective_y length != base_dim")

    n_aux = sum(s.n_terms for s in specs)
    triplets = []
    c = []
    provenance = []
    col = 0

    for coeffs, cost in extra_columns:
        if isinstance(coeffs, dict):
            items = coeffs.items()
        else:
            coeffs = np.asarray(coeffs, float)
            if len(coeffs) != base_dim:
                raise DimensionMismatch("extra column length != base_dim")
            items = [(i, v) for i, v in enumerate(coeffs) if v != 0.0]
        for i, v in items:
            triplets.append((int(i), col, float(v)))
        c.append(float(cost))
        provenance.append({"tag": "original"})
        col += 1

    metadata = []
    row = base_dim
    for spec in specs:
        block_rows = list(range(row, row + spec.n_terms))
        sum_col = col
        for i in block_rows:
            triplets.append((i, col, 1.0))
        if spec.sum_coeffs is not None:
            sc = np.asarray(spec.sum_coeffs, float)
            if len(sc) != base_dim:
                raise DimensionMismatch("sum_coeffs length != base_dim")
            for i, v in enumerate(sc):
                if v != 0.0:
                    triplets.append((i, col, float(v)))
        c.append(float(spec.bound))
        provenance.append({"tag": "cpl-aux-z"})
        col += 1

        diag_cols = []
        for t, (term, offs) in enumerate(zip(spec.pieces, spec.offsets)):
            aux_row = block_rows[t]
            for f, o in zip(term, offs):
                f = np.asarray(f, float)
                if len(f) != base_dim:
                    raise DimensionMismatch("piece vector length != base_dim")
                for i, v in enumerate(f):
                    if v != 0.0:
                        triplets.append((i, col, float(v)))
                triplets.append((aux_row, col, -1.0))
                c.append(-float(o))
                provenance.append({"tag": "cpl-slack"})
                diag_cols.append(col)
                col += 1
        metadata.append(
            {
                "rows": block_rows,
                "coupling_col": sum_col,
                "diag_cols": diag_cols,
                "P": spec.n_terms,
                "L": spec.n_pieces,
            }
        )
        row += spec.n_terms

    a = from_triplets(base_dim + n_aux, col, triplets)
    b = np.concatenate([objective_y, np.zeros(n_aux)])
    # The built LP is the dual of max objective_y . y subject to the CPL
    # constraints, so the source optimum is the negated LP optimum.
    return StandardFormLP(
        a, b, np.array(c, float), provenance, obj_sign=-1.0,
        cpl_metadata=metadata,
    )


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def gen_preset(kind, params=None, seed=0):
    """Named CPL formulations: inventory, l1_regression, cvar, soft_dose."""
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    if kind == "inventory":
        return _gen_inventory(params, rng)
    if kind == "l1_regression":
        return _gen_l1(params, rng)
    if kind == "cvar":
        return _gen_cvar(params, rng)
    if kind == "soft_dose":
        return _gen_soft_dose(params, rng)
    raise BadParams("unknown preset %r" % kind)


def _epigraph_spec(pieces, offsets, base_dim, t_index):
    """CPL spec bounding the piecewise sum by the epigraph variable t."""
    sum_coeffs = np.zeros(base_dim)
    sum_coeffs[t_index] = -1.0
    return CplSpec(pieces, 0.0, offsets=offsets, sum_coeffs=sum_coeffs)


def _gen_l1(params, rng):
    n_samples = int(params.get("n_samples", 8))
    n_features = int(params.get("n_features", 3))
    consistent = bool(params.get("consistent", False))
    if n_samples < 1 or n_features < 1:
        raise BadParams("need positive sample and feature counts")
    design = rng.standard_normal((n_samples, n_features))
    if consistent:
        target = design @ rng.standard_normal(n_features)
    else:
        target = rng.standard_normal(n_samples)
    base_dim = n_features + 1  # coefficients plus the epigraph variable t
    t = n_features
    pieces, offsets = [], []
    for i in range(n_samples):
        row = np.zeros(base_dim)
        row[:n_features] = design[i]
        pieces.append([row, -row])
        offsets.append([-target[i], target[i]])
    objective = np.zeros(base_dim)
    objective[t] = -1.0  # max -t  <=>  min t
    spec = _epigraph_spec(pieces, offsets, base_dim, t)
    lp = build_cpl(base_dim, [spec], objective_y=objective)
    lp.meta = {"kind": "l1_regression", "design": design, "target": target}
    return lp


def _gen_cvar(params, rng):
    n_samples = int(params.get("n_samples", 20))
    beta = float(params.get("beta", 0.9))
    if not 0 < beta < 1:
        raise BadParams("beta must be in (0,1)")
    losses = params.get("losses")
    losses = (
        np.asarray(losses, float) if losses is not None
        else rng.standard_normal(n_samples)
    )
    n = len(losses)
    base_dim = 2  # alpha and the epigraph variable t
    alpha, t = 0, 1
    pieces, offsets = [], []
    for li in losses:
        f = np.zeros(base_dim)
        f[alpha] = -1.0
        pieces.append([np.zeros(base_dim), f])
        offsets.append([0.0, float(li)])
    objective = np.zeros(base_dim)
    objective[alpha] = -1.0
    objective[t] = -1.0 / ((1 - beta) * n)
    spec = _epigraph_spec(pieces, offsets, base_dim, t)
    lp = build_cpl(base_dim, [spec], objective_y=objective)
    lp.meta = {"kind": "cvar", "losses": losses, "beta": beta}
    return lp


def _gen_inventory(params, rng):
    horizon = int(params.get("horizon", 6))
    hold_cost = float(params.get("hold_cost", 1.0))
    backlog_cost = float(params.get("backlog_cost", 2.0))
    initial = float(params.get("initial", 0.0))
    if horizon < 1 or hold_cost < 0 or backlog_cost < 0:
        raise BadParams("invalid inventory parameters")
    demand = params.get("demand")
    demand = (
        np.asarray(demand, float) if demand is not None
        else rng.uniform(0, 3, horizon)
    )
    if len(demand) != horizon:
        raise BadParams("demand length != horizon")
    base_dim = horizon + 1  # order quantities plus epigraph t
    t = horizon
    pieces, offsets = [], []
    for tau in range(horizon):
        cum = np.zeros(base_dim)
        cum[: tau + 1] = 1.0
        level_const = initial - float(demand[: tau + 1].sum())
        pieces.append([hold_cost * cum, -backlog_cost * cum])
        offsets.append([hold_cost * level_const, -backlog_cost * level_const])
    objective = np.zeros(base_dim)
    objective[t] = -1.0
    spec = _epigraph_spec(pieces, offsets, base_dim, t)
    extra = [({j: -1.0}, 0.0) for j in range(horizon)]  # orders >= 0
    lp = build_cpl(base_dim, [spec], objective_y=objective, extra_columns=extra)
    lp.meta = {"kind": "inventory", "demand": demand}
    return lp


def _gen_soft_dose(params, rng):
    n_beamlets = int(params.get("n_beamlets", 4))
    n_voxels = int(params.get("n_voxels", 10))
    if n_beamlets < 1 or n_voxels < 1:
        raise BadParams("need positive beamlet and voxel counts")
    dose = rng.uniform(0, 1, (n_voxels, n_beamlets))
    ref = rng.uniform(0.5, 1.5, n_beamlets)
    d_ref = dose @ ref
    low = d_ref * float(params.get("low_frac", 0.8))
    high = d_ref * float(params.get("high_frac", 1.2))
    base_dim = n_beamlets + 1
    t = n_beamlets
    pieces, offsets = [], []
    for i in range(n_voxels):
        row = np.zeros(base_dim)
        row[:n_beamlets] = dose[i]
        pieces.append([np.zeros(base_dim), row, -row])
        offsets.append([0.0, -float(high[i]), float(low[i])])
    objective = np.zeros(base_dim)
    objective[t] = -1.0
    spec = _epigraph_spec(pieces, offsets, base_dim, t)
    extra = [({j: -1.0}, 0.0) for j in range(n_beamlets)]
    lp = build_cpl(base_dim, [spec], objective_y=objective, extra_columns=extra)
    lp.meta = {"kind": "soft_dose", "dose": dose, "low": low, "high": high}
    return lp


def gen_random_cpl(base_dim=6, n_specs=3, p_terms=10, l_pieces=2, seed=0,
                   density=0.6):
    """Random CPL-reformulated instance, mainly for backend comparisons."""
    if min(base_dim, n_specs, p_terms, l_pieces) < 1:
        raise BadParams("sizes must be positive")
    rng = np.random.default_rng(seed)
    specs = []
    for _ in range(n_specs):
        pieces, offsets = [], []
        for _ in range(p_terms):
            term, offs = [], []
            for _ in range(l_pieces):
                f = rng.standard_normal(base_dim)
                f[rng.uniform(size=base_dim) > density] = 0.0
                term.append(f)
                offs.append(float(rng.standard_normal()))
            pieces.append(term)
            offsets.append(offs)
        sum_coeffs = None
        if rng.uniform() < 0.5:
            sum_coeffs = rng.standard_normal(base_dim)
            sum_coeffs[rng.uniform(size=base_dim) > density] = 0.0
        # bound above the constraint value at y = 0 keeps y = 0 feasible
        at_zero = sum(max(offs) for offs in offsets)
        specs.append(
            CplSpec(
                pieces, at_zero + float(rng.uniform(0.5, 3.0)),
                offsets=offsets, sum_coeffs=sum_coeffs,
            )
        )
    # nonnegative costs keep y = 0 feasible for the extra constraints, and
    # box constraints keep the feasible set compact (so an optimum exists)
    extra = [
        (rng.standard_normal(base_dim), float(rng.uniform(0.1, 1.0)))
        for _ in range(base_dim)
    ]
    box = 10.0
    for i in range(base_dim):
        extra.append(({i: 1.0}, box))
        extra.append(({i: -1.0}, box))
    return build_cpl(
        base_dim, specs,
        objective_y=rng.standard_normal(base_dim), extra_columns=extra,
    )


def gen_scaling_instance(m1=20, m2=1000, p=2, seed=0):
    """Two-block instance with fixed leading size for timing slopes.

    Returns (lp, structure); the trailing block has m2 rows, two diagonal
    columns per row, and p coupling columns.
    """
    from .detect import Block, BlockStructure

    if m1 < 1 or m2 < 2 or p < 0:
        raise BadParams("invalid sizes")
    rng = np.random.default_rng(seed)
    triplets = []
    col = 0
    # leading-block-only columns, enough for full row rank
    for _ in range(m1 + 4):
        for i in range(m1):
            triplets.append((i, col, float(rng.standard_normal())))
        col += 1
    coupling = []
    for _ in range(p):
        for i in range(m1):
            triplets.append((i, col, float(rng.standard_normal())))
        hits = rng.choice(m2, size=max(3, m2 // 100), replace=False)
        for r in hits:
            triplets.append(
                (m1 + int(r), col, float(rng.uniform(0.5, 1.5)))
            )
        coupling.append(col)
        col += 1
    diag = []
    for r in range(m2):
        for _ in range(2):
            triplets.append(
                (m1 + r, col, -float(rng.uniform(0.5, 1.5)))
            )
            # an occasional entry in the leading rows, as eq. columns of a
            # piecewise reformulation would have
            if rng.uniform() < 0.3:
                i = int(rng.integers(m1))
                triplets.append((i, col, float(rng.standard_normal())))
            diag.append(col)
            col += 1
    a = from_triplets(m1 + m2, col, triplets)
    # feasible and bounded by construction
    x0 = rng.uniform(0.5, 1.5, col)
    y0 = rng.standard_normal(m1 + m2)
    s0 = rng.uniform(0.1, 1.0, col)
    lp = StandardFormLP(
        a,
        a.matvec(x0),
        a.rmatvec(y0) + s0,
        [{"tag": "original"}] * col,
    )
    structure = BlockStructure(
        a.n_rows, a.n_cols,
        [Block(list(range(m1, m1 + m2)), diag, coupling)],
    )
    return lp, structure


# ---------------------------------------------------------------------------
# Fluence-map optimization instances
# ---------------------------------------------------------------------------


@dataclass
class RtStructure:
    name: str
    role: str  # "objective" | "constrained"
    n_voxels: int
    weight: float = 1.0
    lower: float = None
    upper: float = None

    def __post_init__(self):
        if self.role not in ("objective", "constrained"):
            raise BadParams("role must be objective or constrained")
        if self.weight < 0:
            raise BadParams("weight must be nonnegative")


@dataclass
class RtConfig:
    n_beamlets: int
    structures: list
    cap: float = 0.1
    robust_scenarios: int = 1
    seed: int = 0
    kernel_nnz: int = 20

    def __post_init__(self):
        if self.n_beamlets < 1:
            raise BadParams("need at least one beamlet")
        if self.cap < 0:
            raise BadParams("cap must be nonnegative")
        if self.robust_scenarios not in (1, 9):
            raise BadParams("robust_scenarios must be 1 or 9")
        for s in self.structures:
            if s.lower is not None and s.upper is not None and s.lower > s.upper:
                raise BadParams("structure %s has lower > upper" % s.name)


def _dose_rows(cfg, n_voxels, rng):
    """Sparse nonnegative dose kernel rows with a distance-decay profile."""
    n = cfg.n_beamlets
    radius = max(cfg.kernel_nnz / (2.0 * n), 1.5 / n)
    beam_pos = (np.arange(n) + 0.5) / n
    voxel_pos = rng.uniform(0, 1, n_voxels)
    rows = []
    for p in voxel_pos:
        dist = np.abs(beam_pos - p)
        vals = np.maximum(0.0, 1.0 - dist / radius) ** 2
        nz = np.flatnonzero(vals)
        if len(nz) == 0:
            nz = np.array([int(np.argmin(dist))])
            vals[nz[0]] = 0.5
        rows.append((nz, vals[nz]))
    return rows


def gen_radiotherapy(cfg):
    """Structured LP for the fluence-map model with mean-violation relaxation.

    Objective structures contribute a max-dose variable minimized with their
    weight; constrained structures get two CPL constraints capping the mean
    overdose above the upper bound and the mean underdose below the lower
    bound.  The robust option replicates voxels over 9 perturbed kernels.
    """
    rng = np.random.default_rng(cfg.seed)
    n_beam = cfg.n_beamlets
    obj_structs = [s for s in cfg.structures if s.role == "objective"]
    con_structs = [s for s in cfg.structures if s.role == "constrained"]
    base_dim = n_beam + len(obj_structs)
    z_index = {s.name: n_beam + i for i, s in enumerate(obj_structs)}

    # Reference fluence used to auto-derive achievable dose bounds.
    x_ref = rng.uniform(0.5, 1.5, n_beam)

    def scenarios(base_rows):
        out = [base_rows]
        for _ in range(cfg.robust_scenarios - 1):
            scale = rng.uniform(0.95, 1.05)
            out.append([(nz, vals * scale) for nz, vals in base_rows])
        return out

    extra = [({j: -1.0}, 0.0) for j in range(n_beam)]  # fluence >= 0
    objective = np.zeros(base_dim)

    for s in obj_structs:
        objective[z_index[s.name]] = -s.weight  # max -sum(w z) = min sum(w z)
        base_rows = _dose_rows(cfg, s.n_voxels, rng)
        for scen in scenarios(base_rows):
            for nz, vals in scen:
                coeffs = {int(j): float(v) for j, v in zip(nz, vals)}
                coeffs[z_index[s.name]] = -1.0
                extra.append((coeffs, 0.0))  # dose - z_s <= 0

    specs = []
    struct_bounds = {}
    for s in con_structs:
        base_rows = _dose_rows(cfg, s.n_voxels, rng)
        all_rows = [r for scen in scenarios(base_rows) for r in scen]
        d_ref = np.array([float(vals @ x_ref[nz]) for nz, vals in all_rows])
        upper = s.upper if s.upper is not None else float(
            np.quantile(d_ref, 0.9)
        )
        lower = s.lower if s.lower is not None else float(
            np.quantile(d_ref, 0.1)
        )
        struct_bounds[s.name] = (lower, upper)
        n_vox = len(all_rows)

        over_pieces, over_offs = [], []
        under_pieces, under_offs = [], []
        for nz, vals in all_rows:
            row = np.zeros(base_dim)
            row[nz] = vals
            over_pieces.append([np.zeros(base_dim), row])
            over_offs.append([0.0, -upper])
            under_pieces.append([np.zeros(base_dim), -row])
            under_offs.append([0.0, lower])
        specs.append(
            CplSpec(over_pieces, cfg.cap * n_vox, offsets=over_offs)
        )
        specs.append(
            CplSpec(under_pieces, cfg.cap * n_vox, offsets=under_offs)
        )

    lp = build_cpl(base_dim, specs, objective_y=objective, extra_columns=extra)
    lp.meta = {
        "kind": "radiotherapy",
        "n_beamlets": n_beam,
        "base_dim": base_dim,
        "bounds": struct_bounds,
        "cap": cfg.cap,
        "specs": specs,
        "spec_names": [
            name for s in con_structs for name in (s.name + "/over", s.name + "/under")
        ],
    }
    return lp


# ---------------------------------------------------------------------------
# Instance JSON interchange
# ---------------------------------------------------------------------------


def instance_to_json(lp):
    rows, cols, vals = lp.a.triplets()
    doc = {
        "m": lp.m,
        "n": lp.n,
        "triplets": [
            [int(r), int(c), float(v)] for r, c, v in zip(rows, cols, vals)
        ],
        "b": [float(v) for v in lp.b],
        "c": [float(v) for v in lp.c],
        "provenance": lp.provenance,
        "cpl_metadata": lp.cpl_metadata,
        "obj_constant": lp.obj_constant,
        "obj_sign": lp.obj_sign,
    }
    return json.dumps(doc, indent=None, separators=(",", ":")) + "\n"


def instance_from_json(text):
    doc = json.loads(text)
    a = from_triplets(doc["m"], doc["n"], [tuple(t) for t in doc["triplets"]])
    return StandardFormLP(
        a,
        np.array(doc["b"], float),
        np.array(doc["c"], float),
        doc.get("provenance", []),
        obj_constant=doc.get("obj_constant", 0.0),
        obj_sign=doc.get("obj_sign", 1.0),
        cpl_metadata=doc.get("cpl_metadata"),
    )
