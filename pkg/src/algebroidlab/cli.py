"""Command-line front end emitting deterministic JSON reports.

Every command reads an algebroid from a JSON file, runs one computation,
and prints a report document to standard output. Reports carry the schema
tag, the command name, a content digest of the input file, and the seed,
so identical inputs produce byte-identical output. Numbers are printed
with 17 significant digits.

Exit codes: 0 on success, 2 when validation fails (the report is still
printed), 1 on any input or usage error (a JSON error document is
printed).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys

import numpy as np

from .algebroid import (
    anchor_rank_at,
    isotropy_at,
    linearize_at,
    validate,
)
from .calculus import AForm, differential
from .classes import modular_cocycle, modular_theorem_check, secondary_class
from .connections import compatible_connection, curvature, torsion
from .errors import AlgebroidError, BadOrderError, NotALoopError
from .fields import ScalarField
from .specio import algebroid_from_dict, path_from_dict
from .transport import JOINT_TOL, parallel_transport

SCHEMA = "algebroidlab/1"
TWO_PI = 2.0 * math.pi


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _ReportEncoder(json.JSONEncoder):
    """17-significant-digit floats; everything else as the default encoder."""

    def iterencode(self, o, _one_shot=False):
        markers = {} if self.check_circular else None

        def floatstr(x, _inf=float("inf")):
            if x != x or x == _inf or x == -_inf:
                raise ValueError("non-finite number in report")
            return format(x, ".17g")

        make = json.encoder._make_iterencode(
            markers, self.default, json.encoder.encode_basestring_ascii,
            self.indent, floatstr, self.key_separator, self.item_separator,
            self.sort_keys, self.skipkeys, _one_shot)
        return make(o, 0)


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def _emit(doc):
    text = json.dumps(_plain(doc), cls=_ReportEncoder,
                      sort_keys=True, indent=2)
    sys.stdout.write(text + "\n")


def _load_spec(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    digest = hashlib.sha256(raw).hexdigest()
    return algebroid_from_dict(json.loads(raw.decode("utf-8"))), digest


def _parse_point(text, dimension):
    if text is None or text.strip() == "":
        return (0.0,) * dimension
    return tuple(float(v) for v in text.split(","))


# ------------------------------------------------------------- subcommands

def _cmd_validate(a, args):
    tol = args.tol if args.tol is not None else 1e-10
    report = validate(a, tol=tol, n_samples=args.samples, seed=args.seed)
    results = {
        "pass": report.passed,
        "anchor_pass": report.anchor_pass,
        "jacobi_pass": report.jacobi_pass,
        "antisymmetry_pass": report.antisymmetry_pass,
        "n_points": report.n_points,
    }
    residuals = {
        "anchor": report.anchor_residual,
        "jacobi": report.jacobi_residual,
        "antisymmetry": report.antisymmetry_residual,
    }
    return results, residuals, {"residual": tol}, 0 if report.passed else 2


def _cmd_rank(a, args):
    p = _parse_point(args.point, a.dimension)
    rank = anchor_rank_at(a, p)
    return ({"rank": rank, "point": list(p)}, {}, {}, 0)


def _cmd_isotropy(a, args):
    p = _parse_point(args.point, a.dimension)
    tol = args.tol if args.tol is not None else 1e-9
    iso = isotropy_at(a, p, tol=tol)
    basis = [list(iso.basis[:, j]) for j in range(iso.basis.shape[1])]
    results = {
        "dimension": iso.basis.shape[1],
        "basis": basis,
        "constants": iso.constants,
        "point": list(p),
    }
    return results, {"closure": iso.residual}, {"closure": tol}, 0


def _cmd_linearize(a, args):
    p = _parse_point(args.point, a.dimension)
    tol = args.tol if args.tol is not None else 1e-9
    data = linearize_at(a, p, tol=tol)
    results = {
        "isotropy_dimension": data.algebra_dim,
        "normal_dimension": data.chart.dimension,
        "constants": data.constants,
        "fields": [[c.to_string() for c in f.comps] for f in data.fields],
        "kernel_basis": data.kernel_basis,
        "normal_basis": data.normal_basis,
        "point": list(p),
    }
    return results, {}, {"jacobi": data.jacobi_tol}, 0


def _cmd_differential(a, args):
    coords = []
    for i in range(a.dimension):
        f = AForm(a, 0, {(): ScalarField.coordinate(a.chart, i)})
        d = differential(f)
        coords.append([d.coeff((s,)).to_string() for s in range(a.rank)])
    duals = []
    for u in range(a.rank):
        d = differential(AForm(a, 1, {(u,): 1.0}))
        for key in sorted(d.coeffs):
            duals.append({"u": u + 1, "s": key[0] + 1, "t": key[1] + 1,
                          "value": d.coeffs[key].to_string()})
    return ({"coordinates": coords, "frame_duals": duals}, {}, {}, 0)


def _cmd_torsion(a, args):
    conn = compatible_connection(a)[0]
    tens = torsion(conn)
    entries = []
    q = conn.q
    for u in range(q):
        for s in range(q):
            for t in range(q):
                f = tens.comps[u, s, t]
                if not f.is_zero():
                    entries.append({"u": u + 1, "s": s + 1, "t": t + 1,
                                    "value": f.to_string()})
    return ({"bundle": "A", "entries": entries}, {}, {}, 0)


def _cmd_curvature(a, args):
    conn = compatible_connection(a)[0]
    form = curvature(conn)
    entries = []
    for key in sorted(form.coeffs):
        mat = form.coeffs[key]
        for row in range(conn.q):
            for col in range(conn.q):
                f = mat[row, col]
                if not f.is_zero():
                    entries.append({
                        "alpha": key[0] + 1, "beta": key[1] + 1,
                        "row": row + 1, "col": col + 1,
                        "value": f.to_string()})
    return ({"bundle": "A", "entries": entries}, {}, {}, 0)


def _load_path(a, args):
    if not args.path:
        raise UsageError("this command needs --path")
    with open(args.path, "rb") as fh:
        raw = fh.read()
    digest = hashlib.sha256(raw).hexdigest()
    return path_from_dict(a, json.loads(raw.decode("utf-8"))), digest


def _cmd_transport(a, args):
    path, digest = _load_path(a, args)
    conn = compatible_connection(a)[0]
    res = parallel_transport(conn, path, np.eye(conn.q),
                             n_steps=args.steps, tol=args.tol)
    results = {"matrix": res.value, "steps": res.steps,
               "path_digest": digest}
    tolerances = {} if args.tol is None else {"transport": args.tol}
    return results, {"step_halving": res.error}, tolerances, 0


def _cmd_holonomy(a, args):
    path, digest = _load_path(a, args)
    start = path.base_at(0.0)
    end = path.base_at(1.0)
    if start.size and np.max(np.abs(start - end)) > JOINT_TOL:
        raise NotALoopError("base path does not close up")
    conn = compatible_connection(a)[0]
    res = parallel_transport(conn, path, np.eye(conn.q),
                             n_steps=args.steps, tol=args.tol)
    results = {"matrix": res.value, "steps": res.steps,
               "path_digest": digest}
    tolerances = {} if args.tol is None else {"transport": args.tol}
    return results, {"step_halving": res.error}, tolerances, 0


def _cmd_classes(a, args):
    k = args.k if args.k is not None else 1
    if k > 3:
        raise BadOrderError("orders above 3 are not exposed on the "
                            "command line")
    sec = secondary_class(a, k)
    coefficients = []
    for key in sorted(sec.form.coeffs):
        coefficients.append({"key": [i + 1 for i in key],
                             "value": sec.form.coeffs[key].to_string()})
    results = {"k": k, "degree": 2 * k - 1, "overflow": sec.overflow,
               "coefficients": coefficients}
    residuals = {"closedness": sec.closedness_residual}
    return results, residuals, {"closedness": 1e-7}, 0


def _cmd_modular(a, args):
    theta = modular_cocycle(a)
    check = modular_theorem_check(a, n_points=20, seed=args.seed)
    theta_strings = [theta.form.coeff((s,)).to_string()
                     for s in range(a.rank)]
    m1 = secondary_class(a, 1)
    scaled = [(TWO_PI * m1.form.coeff((s,))).to_string()
              for s in range(a.rank)]
    results = {"theta": theta_strings, "m1_times_2pi": scaled,
               "max_deviation": check["max_deviation"]}
    residuals = {"modular_identity": check["max_deviation"],
                 "theta_closedness": theta.closedness_residual}
    return results, residuals, {"modular_identity": 1e-8}, 0


_COMMANDS = {
    "validate": _cmd_validate,
    "rank": _cmd_rank,
    "isotropy": _cmd_isotropy,
    "linearize": _cmd_linearize,
    "differential": _cmd_differential,
    "curvature": _cmd_curvature,
    "torsion": _cmd_torsion,
    "transport": _cmd_transport,
    "holonomy": _cmd_holonomy,
    "classes": _cmd_classes,
    "modular": _cmd_modular,
}


def _build_parser():
    parser = _Parser(prog="algebroidlab",
                     description="algebroid computations on chart data")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--spec", required=True,
                       help="algebroid description file (JSON)")
        p.add_argument("--point", default=None,
                       help="comma-separated chart coordinates")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=int, default=50)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--path", default=None,
                       help="path description file (JSON)")
        p.add_argument("--steps", type=int, default=200)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("no command given")
        algebroid, digest = _load_spec(args.spec)
        results, residuals, tolerances, code = \
            _COMMANDS[args.command](algebroid, args)
    except UsageError as exc:
        _emit({"error": "usage: %s" % exc})
        return 1
    except AlgebroidError as exc:
        _emit({"error": str(exc)})
        return 1
    except (OSError, ValueError, KeyError, TypeError) as exc:
        _emit({"error": "%s: %s" % (type(exc).__name__, exc)})
        return 1
    _emit({
        "schema": SCHEMA,
        "command": args.command,
        "input_digest": digest,
        "results": results,
        "residuals": residuals,
        "tolerances": tolerances,
        "seed": args.seed,
    })
    return code


if __name__ == "__main__":
    sys.exit(main())
