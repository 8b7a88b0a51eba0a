"""Command-line front end.

Exit codes: 0 success or positive verdict, 1 negative verdict or property
failure, 2 usage or I/O error.
"""

import argparse
import json
import sys

import numpy as np

from ..decomp import decompose
from ..errors import FKRankError, UsageError
from ..fkdet import GridSpec, brown_from_grid, brown_measure, fk_det, hs_projection
from ..maps import (
    MatrixMap, ProbeSet, is_brown_preserving, is_det_preserving, is_multiplicative,
    is_rank_isometry,
)
from ..matcore import matrix_from_json, matrix_to_json
from ..regions import region_from_json
from ..regring import rank_metric
from .generators import FAMILIES, generate
from .suite import SUITES, SuiteConfig, run_suite


def fmt(v):
    """Fixed 15-digit formatting for reals."""
    return f"{v:.15f}"


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _matrix(path):
    return matrix_from_json(_load_json(path))


def _map(path):
    return MatrixMap.from_json(_load_json(path))


def _emit(obj):
    print(json.dumps(obj, indent=1))


def cmd_det(args):
    print(fmt(fk_det(_matrix(args.matrix))))
    return 0


def cmd_brown(args):
    x = _matrix(args.matrix)
    if args.grid is None:
        _emit(brown_measure(x).to_json())
        return 0
    lo, hi, m = args.grid
    gm = brown_from_grid(x, GridSpec.square(float(lo), float(hi), int(m)),
                         smoothing=args.smoothing)
    sys.stdout.write(gm.to_csv())
    print(f"# total_mass {fmt(gm.total_mass)} clipped_mass {fmt(gm.clipped_mass)}", file=sys.stderr)
    return 0


def cmd_hsproj(args):
    x = _matrix(args.matrix)
    region = region_from_json(_load_json(args.region))
    r = hs_projection(x, region)
    _emit({
        "p": matrix_to_json(r.p.matrix),
        "trace": str(r.trace_p),
        "mu_B": str(r.mu_B),
        "invariance_residual": float(r.invariance_residual),
        "checks": {k: bool(v) for k, v in r.checks.items()},
    })
    return 0 if r.ok else 1


def cmd_rank(args):
    d = rank_metric(_matrix(args.a), _matrix(args.b))
    print(f"{d.numerator}/{d.denominator} {fmt(float(d))}")
    return 0


def cmd_decompose(args):
    mode = {"det": "det", "rank": "rank"}[args.mode]
    r = decompose(_map(args.map), mode=mode, seed=args.seed)
    _emit(r.to_json())
    return 0 if r.is_jordan else 1


def cmd_verify(args):
    f = _map(args.map)
    probes = ProbeSet(count=args.probes, seed=args.seed)
    if args.check == "mult":
        kind = is_multiplicative(f, probes)
        _emit({"check": "mult", "classification": kind})
        return 0 if kind != "neither" else 1
    checker = {
        "rank": lambda: is_rank_isometry(f, probes),
        "det": lambda: is_det_preserving(f, probes, allow_conjugate=True),
        "brown": lambda: is_brown_preserving(f, probes),
    }[args.check]
    v = checker()
    out = {"check": args.check, "passed": v.passed, "checked": v.checked,
           "seed": v.seed, "detail": v.detail}
    if v.witness is not None:
        out["witness"] = [matrix_to_json(w) for w in v.witness]
    _emit(out)
    return 0 if v.passed else 1


def _parse_param(text):
    key, _, value = text.partition("=")
    if not key or not _:
        raise UsageError(f"parameters look like key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def cmd_gen(args):
    params = dict(_parse_param(p) for p in args.param)
    obj = generate(args.family, args.n, args.seed, **params)
    if isinstance(obj, MatrixMap):
        _emit(obj.to_json())
    else:
        _emit(matrix_to_json(np.asarray(obj)))
    return 0


def cmd_suite(args):
    data = _load_json(args.config) if args.config else {}
    cfg = SuiteConfig.from_json(data, suite=args.name)
    if args.output:
        cfg.output = args.output
    cfg.with_env()
    report = run_suite(cfg)
    print(report.to_text())
    return report.exit_code


def build_parser():
    p = argparse.ArgumentParser(prog="fkrank", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("det", help="Fuglede-Kadison determinant of a matrix")
    s.add_argument("matrix")
    s.set_defaults(func=cmd_det)

    s = sub.add_parser("brown", help="Brown measure (atoms, or a grid density as CSV)")
    s.add_argument("matrix")
    s.add_argument("--grid", nargs=3, metavar=("LO", "HI", "M"),
                   help="square grid [LO,HI]^2 with M nodes per side")
    s.add_argument("--smoothing", type=float, default=None,
                   help="potential smoothing width in grid steps (0 for none)")
    s.set_defaults(func=cmd_brown)

    s = sub.add_parser("hsproj", help="invariant projection for a region")
    s.add_argument("matrix")
    s.add_argument("region")
    s.set_defaults(func=cmd_hsproj)

    s = sub.add_parser("rank", help="rank distance rank(a - b)/n")
    s.add_argument("a")
    s.add_argument("b")
    s.set_defaults(func=cmd_rank)

    s = sub.add_parser("decompose", help="canonical form of a map")
    s.add_argument("map")
    s.add_argument("--mode", choices=("rank", "det"), default="rank")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("verify", help="run one preservation check on a map")
    s.add_argument("map")
    s.add_argument("--check", choices=("rank", "det", "mult", "brown"), required=True)
    s.add_argument("--probes", type=int, default=64)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("gen", help="generate an instance as JSON")
    s.add_argument("family", choices=FAMILIES)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--param", action="append", default=[], help="family parameter key=value")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("suite", help="run a property suite")
    s.add_argument("name", choices=list(SUITES))
    s.add_argument("--config", help="JSON suite config")
    s.add_argument("--output", help="write the JSON report here (plus a .txt twin)")
    s.set_defaults(func=cmd_suite)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        return args.func(args)
    except FKRankError as exc:
        print(f"fkrank: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
