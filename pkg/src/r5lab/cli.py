"""Command-line entry point: ``r5lab <subcommand> ...``.

Exit codes: 0 success, 2 invalid input or failed validation, 3 work cap hit.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .apcount import SetInInterval, count_5aps, interval_ap_count
from .bohr import BohrSpec, bohr_enumerate
from .cyclic import CyclicFunction
from .driver import ExperimentConfig, density_increment_run, prime_embed
from .gowers import DEFAULT_WORK_CAP, WorkCapExceeded, u_norm
from .nilpotent import load_fixture, multiplication_forms
from .schmidt import Lattice, capital_a, f_avg_forms, recurrence_search

EXIT_OK, EXIT_INVALID, EXIT_CAP = 0, 2, 3


def _read_lines(path):
    return [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def read_set_file(path, bound=None) -> SetInInterval:
    els = [int(t) for t in _read_lines(path)]
    if not els:
        raise ValueError("set file is empty")
    return SetInInterval(bound or max(els), els)


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_unorm(args):
    vals = [complex(t.replace(" ", "")) for t in _read_lines(args.file)]
    f = CyclicFunction(vals)
    _emit({"modulus": f.modulus, "k": args.k, "norm": u_norm(f, args.k, method=args.method, work_cap=args.work_cap)})


def cmd_lambda(args):
    a = read_set_file(args.file, args.bound)
    n = prime_embed(a.bound)
    count = count_5aps(a, n)
    _emit({
        "n_prime": a.bound, "modulus": n, "size": len(a), "density": a.density,
        "count": count, "lambda": count / n**2,
        "count_constant": a.density**5 * interval_ap_count(a.bound),
    })


def cmd_bohr(args):
    spec = BohrSpec.from_json(json.loads(Path(args.spec).read_text()))
    members = bohr_enumerate(spec)
    out = {"modulus": spec.modulus, "rank": spec.rank, "size": len(members)}
    if args.members:
        out["members"] = members
    _emit(out)


def cmd_recur(args):
    alphas = [Fraction(a) for a in args.alphas]
    res = recurrence_search(alphas, args.k, args.n)
    _emit({"n_star": res.n_star, "value": str(res.value), "value_float": res.value_float,
           "bound": res.bound, "bound_holds": res.bound_holds})


def cmd_favg(args):
    d = json.loads(Path(args.fixture).read_text())
    lam = Lattice(np.array(d["basis"], dtype=float))
    primal, dual = f_avg_forms(lam, d["alpha"], int(d["k"]), d["n"])
    _emit({"A": capital_a(lam), "primal": primal, "dual": dual, "difference": abs(primal - dual)})


def cmd_nilcheck(args):
    alg = load_fixture(args.fixture)
    divisible = alg.integral_divisible_by(12)
    forms = multiplication_forms(alg, require_integral=divisible)
    _emit({
        "dimension": alg.dim, "degree": alg.degree, "filtration_dims": list(alg.filtration),
        "constants_divisible_by_12": divisible, "forms_integral": forms.all_integral(),
    })


def cmd_increment(args):
    a = read_set_file(args.file, args.bound)
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.csv:
        cfg.trace_csv = args.csv
    if args.json:
        cfg.trace_json = args.json
    trace = density_increment_run(a, cfg)
    sys.stdout.write(trace.to_csv())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="r5lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("unorm", help="Gowers U^k norm of a function file (one value per line)")
    s.add_argument("file")
    s.add_argument("k", type=int)
    s.add_argument("--method", default="auto", choices=["auto", "direct", "recursive", "support"])
    s.add_argument("--work-cap", type=int, default=DEFAULT_WORK_CAP)
    s.set_defaults(func=cmd_unorm)

    s = sub.add_parser("lambda", help="5-AP count of a set file after prime embedding")
    s.add_argument("file")
    s.add_argument("--bound", type=int, help="N' (default: largest element)")
    s.set_defaults(func=cmd_lambda)

    s = sub.add_parser("bohr", help="enumerate a Bohr set from a JSON spec")
    s.add_argument("spec")
    s.add_argument("--members", action="store_true")
    s.set_defaults(func=cmd_bohr)

    s = sub.add_parser("recur", help="exact minimiser of max ||alpha_i m^k|| over m <= N")
    s.add_argument("--alphas", nargs="+", required=True, help="rationals such as 1/3 or 0.25")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_recur)

    s = sub.add_parser("favg", help="theta average in primal and dual form from a lattice fixture")
    s.add_argument("fixture")
    s.set_defaults(func=cmd_favg)

    s = sub.add_parser("nilcheck", help="validate a nilpotent algebra fixture")
    s.add_argument("fixture", help="path or shipped fixture name")
    s.set_defaults(func=cmd_nilcheck)

    s = sub.add_parser("increment", help="density-increment run on a set file")
    s.add_argument("file")
    s.add_argument("--bound", type=int)
    s.add_argument("--config")
    s.add_argument("--csv")
    s.add_argument("--json")
    s.set_defaults(func=cmd_increment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except WorkCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValueError, KeyError, OSError, json.JSONDecodeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
