"""Command-line front end: detect, solve, gen, bench, survey.

Exit codes: 0 success/Optimal, 2 MaxIter, 3 NumericalFailure,
4 Infeasible-suspected, 64 usage error, 65 parse error.
"""

import argparse
import json
import statistics
import sys
import time

import numpy as np

from . import detect as detect_mod
from . import ipm, model
from .errors import BadParams, BlockLpError, ParseError

EXIT_USAGE = 64
EXIT_PARSE = 65
STATUS_EXIT = {
    "Optimal": 0,
    "MaxIter": 2,
    "NumericalFailure": 3,
    "Infeasible-suspected": 4,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print("%s: error: %s" % (self.prog, message), file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_instance(path, dualize=False):
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".json") or text.lstrip().startswith("{"):
        lp = model.instance_from_json(text)
    else:
        lp = model.to_standard_form(model.parse_mps(text))
    if dualize:
        lp = model.dualize(lp)
    return lp


def _detection_params(args):
    return detect_mod.DetectionParams(
        m_min=args.mmin,
        j_max=args.jmax,
        require_nonzero_coupling=args.require_coupling,
    )


def _emit(doc, out_path):
    text = json.dumps(doc, indent=2, sort_keys=False) + "\n"
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)


def _survey_entry(name, lp, params):
    structure = detect_mod.detect_structure(lp.a, params)
    report = detect_mod.validate_structure(lp.a, structure)
    m = lp.m
    m1 = structure.m1
    return {
        "name": name,
        "m": m,
        "n": lp.n,
        "k_blocks": structure.k_blocks,
        "m1": m1,
        "reduction": (m - m1) / m if m else 0.0,
        "has_nonzero_coupling": any(
            p > 0 for p in structure.coupling_ranks(lp.a)
        ),
        "validated": report.passed,
    }


def cmd_detect(args):
    try:
        lp = _load_instance(args.path, args.dualize)
    except ParseError as exc:
        print("parse error: %s" % exc, file=sys.stderr)
        return EXIT_PARSE
    entry = _survey_entry(args.path, lp, _detection_params(args))
    _emit(entry, args.out)
    return 0


def cmd_solve(args):
    try:
        lp = _load_instance(args.path, args.dualize)
    except ParseError as exc:
        print("parse error: %s" % exc, file=sys.stderr)
        return EXIT_PARSE
    params = _detection_params(args)
    structure = detect_mod.detect_structure(lp.a, params)
    if structure.k_blocks == 1:
        structure = None
    options = ipm.IpmOptions(
        eps_p=args.tol,
        eps_d=args.tol,
        eps_c=args.tol,
        max_iter=args.max_iter,
        backend=args.backend,
        regularization=args.reg,
    )
    report = ipm.solve(lp, structure=structure, options=options)
    doc = report.to_dict()
    doc["source_objective"] = lp.objective_value(report.x)
    if not args.log_iterations:
        doc.pop("log")
    _emit(doc, args.out)
    if args.log_iterations:
        sys.stdout.write(report.iter_log_lines())
    return STATUS_EXIT[report.status]


def _build_generated(args):
    kind = args.kind
    if kind == "cpl":
        return model.gen_random_cpl(
            base_dim=args.base_dim,
            n_specs=args.specs,
            p_terms=args.P,
            l_pieces=args.L,
            seed=args.seed,
        )
    if kind == "rt":
        per = max(args.voxels // 3, 1)
        structures = [
            model.RtStructure("target", "objective", per, weight=1.0)
        ] + [
            model.RtStructure("oar%d" % i, "constrained", per)
            for i in range(1, args.structures)
        ]
        cfg = model.RtConfig(
            n_beamlets=args.beamlets,
            structures=structures,
            cap=args.cap,
            robust_scenarios=9 if args.robust else 1,
            seed=args.seed,
        )
        return model.gen_radiotherapy(cfg)
    if kind == "l1":
        return model.gen_preset(
            "l1_regression",
            {
                "n_samples": args.n_samples,
                "n_features": args.n_features,
                "consistent": args.consistent,
            },
            seed=args.seed,
        )
    if kind == "cvar":
        return model.gen_preset(
            "cvar", {"n_samples": args.n_samples, "beta": args.beta},
            seed=args.seed,
        )
    if kind == "inventory":
        return model.gen_preset(
            "inventory", {"horizon": args.horizon}, seed=args.seed
        )
    if kind == "soft_dose":
        return model.gen_preset(
            "soft_dose",
            {"n_beamlets": args.beamlets, "n_voxels": args.voxels},
            seed=args.seed,
        )
    raise BadParams("unknown kind %r" % kind)


def cmd_gen(args):
    try:
        lp = _build_generated(args)
    except BadParams as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    text = model.instance_to_json(lp)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(
            json.dumps(
                {"written": args.out, "m": lp.m, "n": lp.n, "nnz": lp.a.nnz}
            )
        )
    else:
        sys.stdout.write(text)
    return 0


def cmd_bench(args):
    sizes = [int(s) for s in args.sizes.split(",") if s]
    rng = np.random.default_rng(args.seed)
    results = []
    full_cut = False
    for m2 in sizes:
        lp, structure = model.gen_scaling_instance(
            m1=args.m1, m2=m2, p=args.p, seed=args.seed
        )
        w = rng.uniform(0.2, 3.0, lp.n)
        rhs = rng.standard_normal(lp.m)
        entry = {"m2": m2, "m": lp.m, "n": lp.n}
        for name in ("reduced", "full"):
            if name == "full" and full_cut:
                entry["full_ms"] = None
                entry["full_skipped"] = "cutoff"
                continue
            if name == "reduced":
                solver = ipm.ReducedNormalSolver(lp, structure)
            else:
                solver = ipm.FullNormalSolver(lp)
            times = []
            dy = None
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                solver.factor(w)
                dy = solver.solve_normal(rhs)
                times.append(time.perf_counter() - t0)
            entry[name + "_ms"] = statistics.median(times) * 1000.0
            entry[name + "_dy_norm"] = float(np.linalg.norm(dy))
            if name == "full" and times[-1] > args.cutoff:
                full_cut = True
        results.append(entry)
    _emit(
        {
            "m1": args.m1,
            "p": args.p,
            "repeats": args.repeats,
            "cutoff_s": args.cutoff,
            "results": results,
        },
        args.out,
    )
    return 0


def cmd_survey(args):
    params = _detection_params(args)
    entries = []
    for path in args.paths:
        try:
            lp = _load_instance(path, args.dualize)
            entries.append(_survey_entry(path, lp, params))
        except (BlockLpError, OSError) as exc:
            entries.append({"name": path, "error": str(exc)})
    ok = [e for e in entries if "error" not in e]
    report = {
        "problems": entries,
        "n_problems": len(entries),
        "n_analyzed": len(ok),
        "fraction_with_structure": (
            sum(1 for e in ok if e["k_blocks"] > 1) / len(ok) if ok else 0.0
        ),
        "fraction_reduction_at_least_half": (
            sum(1 for e in ok if e["reduction"] >= 0.5) / len(ok)
            if ok else 0.0
        ),
    }
    _emit(report, args.out)
    return 0


def _add_detection_flags(p):
    p.add_argument("--mmin", type=int, default=3,
                   help="minimum rows per detected block")
    p.add_argument("--jmax", type=int, default=10,
                   help="maximum nonzeros per block row")
    p.add_argument("--require-coupling", action="store_true",
                   help="drop blocks whose coupling columns are all zero")


def build_parser():
    parser = _Parser(prog="blocklp",
                     description="Block-structured LP interior point solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect block structure in an instance")
    p.add_argument("path")
    _add_detection_flags(p)
    p.add_argument("--dualize", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("solve", help="solve an instance")
    p.add_argument("path")
    _add_detection_flags(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--backend", choices=("full", "reduced", "auto"),
                   default="auto")
    p.add_argument("--reg", type=float, default=0.0,
                   help="static diagonal regularization")
    p.add_argument("--dualize", action="store_true")
    p.add_argument("--log-iterations", action="store_true",
                   help="emit the per-iteration log as JSON lines")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="generate an instance")
    p.add_argument("kind", choices=(
        "cpl", "rt", "l1", "cvar", "inventory", "soft_dose"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--base-dim", type=int, default=6)
    p.add_argument("--specs", type=int, default=3)
    p.add_argument("--P", type=int, default=10)
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--beamlets", type=int, default=20)
    p.add_argument("--voxels", type=int, default=300)
    p.add_argument("--structures", type=int, default=3)
    p.add_argument("--cap", type=float, default=0.1)
    p.add_argument("--robust", action="store_true")
    p.add_argument("--n-samples", type=int, default=10)
    p.add_argument("--n-features", type=int, default=3)
    p.add_argument("--consistent", action="store_true")
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--horizon", type=int, default=6)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="time the direction backends")
    p.add_argument("--sizes", default="1000,2000,4000")
    p.add_argument("--m1", type=int, default=20)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--cutoff", type=float, default=10.0,
                   help="skip larger full-backend runs past this many seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("survey", help="detection statistics over a corpus")
    p.add_argument("paths", nargs="+")
    _add_detection_flags(p)
    p.add_argument("--dualize", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_survey)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code else 0
    try:
        return args.func(args)
    except (BlockLpError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
