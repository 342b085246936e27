"""Command-line entry point: ``dlgraphs <command> [flags]``.

Every output carries a provenance header (library version, command and all
parameters). CSV outputs put it on leading ``#`` lines so they stay
plot-ready (``pandas.read_csv(path, comment="#")``); JSON outputs put it
under the ``"provenance"`` key.

Exit codes: 0 success, 2 invalid parameters or usage, 3 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import cayley_algebra as ca
from .cell_complex import CellError, make_octahedron, octahedron_report
from .dl_graph import DEFAULT_CAP, DLError, DLParams, ball, growth
from .lattice_spectrum import (SpectrumError, block_eigenvalues, build_Qh, eigh, lambda_d3_all,
                               rho, rho_prime)
from .random_walk import StepLaw, WalkConfig, WalkError, drift, simulate, trials_csv
from .spectral_basis import (BasisError, apply_P, basis_for_polyhedron, horizontal_dimension,
                             inner, make_polyhedron, return_probabilities)
from .tree_core import TreeError, TreeVertex

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 2, 3

VALIDATION_ERRORS = (DLError, TreeError, SpectrumError, BasisError, ca.AlgebraError, CellError,
                     WalkError, ValueError)


class UsageError(Exception):
    """Bad command line; reported with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would call sys.exit itself
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


# ---------------------------------------------------------------- argument helpers

def int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def branching(args: argparse.Namespace) -> tuple[int, ...]:
    """``--q`` as given, or a single value repeated ``--d`` times."""
    if args.q is None:
        raise UsageError("--q is required")
    qs = list(args.q)
    if args.d is not None:
        if len(qs) == 1:
            qs = qs * args.d
        elif len(qs) != args.d:
            raise UsageError(f"--q has {len(qs)} entries but --d is {args.d}")
    return tuple(qs)


def ring_from_args(args: argparse.Namespace) -> ca.CoefficientRing:
    d = args.d if args.d is not None else 3
    if args.ring == "Z":
        if args.q is None or len(args.q) != 1:
            raise UsageError("--q must be a single modulus for the ring Z_q")
        return ca.zq_ring(args.q[0], args.ells, d)
    if not args.prime_powers:
        raise UsageError("--ring F needs --prime-powers, e.g. 2^2 or 2,3")
    ring = ca.field_product_ring(ca.parse_prime_powers(args.prime_powers), args.ells, d)
    if args.q and args.q != [ring.q]:
        raise UsageError(f"--q {args.q} does not match the field product of size {ring.q}")
    return ring


def provenance(args: argparse.Namespace) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("handler", "out", "command")}
    return {"library": "dlgraphs", "version": __version__, "command": args.command, "params": params}


def render_csv(args: argparse.Namespace, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(f"# {json.dumps(provenance(args), sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_json(args: argparse.Namespace, body: dict) -> str:
    return json.dumps({"provenance": provenance(args), **body}, indent=2, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def emit(args: argparse.Namespace, body: dict, header: Sequence[str] | None = None,
         rows: Sequence[Sequence] | None = None) -> None:
    """Write CSV when asked and rows exist, JSON otherwise."""
    if args.format == "csv" and header is not None:
        text = render_csv(args, header, rows or [])
    else:
        text = render_json(args, body)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_growth(args) -> int:
    params = DLParams(branching(args))
    if args.radius < 0:
        raise UsageError("--radius must be >= 0")
    if args.ball_out:
        b = ball(params, None, args.radius, args.cap)
        Path(args.ball_out).write_text(b.to_json())
        sizes = b.sphere_sizes()
    else:
        sizes = growth(params, args.radius, args.cap)
    rows = [(r, n, sum(sizes[:r + 1])) for r, n in enumerate(sizes)]
    emit(args, {"sphere_sizes": sizes, "ball_sizes": [row[2] for row in rows]},
         ["radius", "sphere_size", "ball_size"], rows)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    qs = branching(args)
    if args.hmax < 2:
        raise UsageError("--hmax must be >= 2")
    low, high = rho_prime(qs), rho(qs)
    rows, outside = [], 0
    for h in range(2, args.hmax + 1):
        for i, lam in enumerate(block_eigenvalues(qs, h, args.method)):
            inside = low - args.tol <= lam <= high + args.tol
            outside += not inside
            rows.append((h, i, float(lam), int(inside)))
    body = {"interval": [low, high], "eigenvalues": [{"h": h, "index": i, "value": v} for h, i, v, _ in rows],
            "outside_interval": outside, "max_eigenvalue": max((r[2] for r in rows), default=None)}
    emit(args, body, ["h", "index", "eigenvalue", "in_interval"], rows)
    return EXIT_OK if outside == 0 else EXIT_FAILED


def cmd_eig(args) -> int:
    qs = branching(args)
    M = build_Qh(len(qs), qs, args.h)
    if M.size == 0:
        raise UsageError(f"Q_h is empty for h={args.h} and d={len(qs)}")
    values, vectors = eigh(M, args.method)
    residual = float(np.max(np.abs(M @ vectors - vectors * values)))
    ok = residual <= args.tol
    body = {"eigenvalues": values.tolist(), "residual": residual}
    if len(qs) == 3 and len(set(qs)) == 1:
        closed = np.sort(lambda_d3_all(args.h))
        gap = float(np.max(np.abs(np.sort(values) - closed)))
        body["closed_form_max_deviation"] = gap
        ok = ok and gap <= args.tol
    if args.vectors:
        body["eigenvectors"] = vectors.T.tolist()
    rows = [(args.h, i, float(v)) for i, v in enumerate(values)]
    emit(args, body, ["h", "index", "eigenvalue"], rows)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_basis_check(args) -> int:
    params = DLParams(branching(args))
    if args.anchors:
        anchors = [TreeVertex.parse(s) for s in args.anchors.split("|")]
    else:
        anchors = [TreeVertex(-args.height)] + [TreeVertex(0)] * (params.d - 1)
    S = make_polyhedron(params, anchors)
    expected = horizontal_dimension(params, S)
    if expected > args.cap:
        raise UsageError(f"basis would have {expected} functions, above --cap {args.cap}")
    basis = basis_for_polyhedron(params, S, args.cap, args.method)
    residual = 0.0
    for b in basis:
        Pg = apply_P(params, b.values)
        keys = set(Pg) | set(b.values)
        residual = max([residual] + [abs(Pg.get(x, 0.0) - b.eigenvalue * b.values.get(x, 0.0)) for x in keys])
    gram = np.array([[inner(a.values, b.values) for b in basis] for a in basis])
    gram_error = float(np.max(np.abs(gram - np.eye(len(basis))))) if basis else 0.0
    ok = len(basis) == expected and residual <= args.tol and gram_error <= args.gram_tol
    body = {"polyhedron": S.text(), "height": S.height, "size": len(basis), "expected_size": expected,
            "eigen_residual": residual, "gram_error": gram_error, "ok": ok,
            "functions": [b.provenance() for b in basis]}
    rows = [(m, b.polyhedron.text(), b.mode, " ".join(map(str, b.labels)), b.eigenvalue)
            for m, b in enumerate(basis)]
    emit(args, body, ["index", "polyhedron", "mode", "labels", "eigenvalue"], rows)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_return_prob(args) -> int:
    qs = branching(args)
    if args.nmax < 0:
        raise UsageError("--nmax must be >= 0")
    ns = list(range(0, args.nmax + 1, args.stride))
    values, bounds = return_probabilities(qs, ns, args.H, args.method)
    rows = [(n, float(v), float(b)) for n, v, b in zip(ns, values, bounds)]
    emit(args, {"n": ns, "p": values.tolist(), "tail_bound": bounds.tolist()},
         ["n", "return_probability", "tail_bound"], rows)
    return EXIT_OK


def cmd_cayley_verify(args) -> int:
    ring = ring_from_args(args)
    report = ca.cayley_ball(ring, args.radius, args.cap)
    rows = [(k, v) for k, v in report.to_dict().items() if not isinstance(v, (list, dict))]
    emit(args, {"report": report.to_dict()}, ["field", "value"], rows)
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_presentation_check(args) -> int:
    ring = ring_from_args(args)
    report = ca.relator_check(ring)
    rows = [(kind, report.counts[kind], report.expected_counts[kind]) for kind in report.counts]
    emit(args, {"report": report.to_dict()}, ["kind", "count", "expected"], rows)
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_automaton_check(args) -> int:
    ring = ring_from_args(args)
    rng = np.random.default_rng(args.seed)
    indices = [args.j] if args.j is not None else [j for j in range(ring.d - 1)
                                                   if ring.inv(ring.ells[j]) is not None]
    if not indices:
        raise UsageError("no distinguished element of this ring is invertible")
    rows, mismatches = [], 0
    for j in indices:
        for trial in range(args.trials):
            a = int(rng.integers(ring.q))
            f = [int(x) for x in rng.integers(ring.q, size=args.depth)]
            agree = ca.automaton_apply(ring, j, a, f, args.depth) == ca.automaton_direct(ring, j, a, f, args.depth)
            mismatches += not agree
            rows.append((j, trial, a, " ".join(map(str, f)), int(agree)))
    body = {"ring": ring.describe(), "checked": len(rows), "mismatches": mismatches}
    emit(args, body, ["j", "trial", "a", "f", "agree"], rows)
    return EXIT_OK if mismatches == 0 else EXIT_FAILED


def cmd_euler(args) -> int:
    qs = branching(args)
    reports = [octahedron_report(make_octahedron(qs, R), args.cap) for R in range(1, args.R + 1)]
    ok = all(r["euler_characteristic"] == r["sphere_value"] for r in reports)
    rows = [(r["spec"]["R"], r["euler_characteristic"], r["sphere_value"], r["extremal_vertices"],
             r["top_cells"], json.dumps(r["counts"], sort_keys=True)) for r in reports]
    emit(args, {"octahedra": reports},
         ["R", "euler_characteristic", "sphere_value", "extremal_vertices", "top_cells", "counts"], rows)
    return EXIT_OK if ok else EXIT_FAILED


def _walk_config(args) -> WalkConfig:
    params = DLParams(branching(args))
    law = StepLaw.from_dict(json.loads(Path(args.law).read_text())) if args.law else None
    if args.trials * args.steps > args.cap * 100:
        raise UsageError(f"{args.trials} x {args.steps} steps exceeds --cap budget")
    return WalkConfig(params, args.steps, args.trials, args.seed, law)


def cmd_simulate(args) -> int:
    config = _walk_config(args)
    results = simulate(config)
    if args.format == "csv":
        text = f"# {json.dumps(provenance(args), sort_keys=True)}\n" + trials_csv(config, results)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    emit(args, {"config": config.describe(),
                "trials": [{"trial": r.trial, "final": r.final.text(), "hor": list(r.hor),
                            "min_h": list(r.min_h)} for r in results]})
    return EXIT_OK


def cmd_drift(args) -> int:
    config = _walk_config(args)
    report = drift(config)
    ok = args.check_se is None or report.within(args.check_se)
    rows = [(j, float(a), str(a), m, s, z) for j, (a, m, s, z)
            in enumerate(zip(report.alpha, report.mean, report.stderr, report.z_scores()))]
    emit(args, {"report": report.to_dict(), "ok": ok},
         ["coordinate", "alpha", "alpha_exact", "mean_rate", "stderr", "z"], rows)
    return EXIT_OK if ok else EXIT_FAILED


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser, fmt: str = "csv") -> None:
    p.add_argument("--q", type=int_list, default=None,
                   help="branching numbers, e.g. 2,3 (for ring commands: the modulus of Z_q)")
    p.add_argument("--d", type=int, default=None, help="number of trees (repeats a single --q)")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=fmt)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="size guard for balls, bases and regions")


def _ring_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ring", choices=("Z", "F"), default="Z", help="Z_q or a product of finite fields")
    p.add_argument("--prime-powers", default=None, help="field factors for --ring F, e.g. 2^2 or 2,3")
    p.add_argument("--ells", type=int_list, default=None, help="distinguished ring elements (encoded ints)")


def _method(p: argparse.ArgumentParser, default: str = "jacobi") -> None:
    p.add_argument("--method", choices=("jacobi", "lapack", "auto"), default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dlgraphs", description="Diestel-Leader graph toolkit")
    parser.add_argument("--version", action="version", version=f"dlgraphs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("growth", help="sphere sizes of balls around the origin")
    _common(p)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--ball-out", default=None, help="also write the ball as a JSON graph dump")
    p.set_defaults(handler=cmd_growth)

    p = sub.add_parser("spectrum", help="eigenvalues of Q_h for 2 <= h <= hmax")
    _common(p)
    p.add_argument("--hmax", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    _method(p)
    p.set_defaults(handler=cmd_spectrum)

    p = sub.add_parser("eig", help="eigenpairs of a single Q_h")
    _common(p, "json")
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--vectors", action="store_true", help="include eigenvectors in JSON output")
    _method(p)
    p.set_defaults(handler=cmd_eig)

    p = sub.add_parser("basis-check", help="eigenbasis of a polyhedron: size, residuals, Gram matrix")
    _common(p, "json")
    p.add_argument("--height", type=int, default=2)
    p.add_argument("--anchors", default=None, help="anchors as h:word|h:word|..., overrides --height")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--gram-tol", type=float, default=1e-9)
    _method(p)
    p.set_defaults(handler=cmd_basis_check)

    p = sub.add_parser("return-prob", help="spectral return probabilities p^(n)(o,o)")
    _common(p)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--H", type=int, default=40, help="largest block height in the spectral sum")
    _method(p, "auto")
    p.set_defaults(handler=cmd_return_prob)

    p = sub.add_parser("cayley-verify", help="compare a Cayley ball of the affine group with the DL ball")
    _common(p, "json")
    _ring_flags(p)
    p.add_argument("--radius", type=int, default=3)
    p.set_defaults(handler=cmd_cayley_verify)

    p = sub.add_parser("presentation-check", help="evaluate every relator of the presentation")
    _common(p, "json")
    _ring_flags(p)
    p.set_defaults(handler=cmd_presentation_check)

    p = sub.add_parser("automaton-check", help="transducer output against polynomial arithmetic")
    _common(p, "json")
    _ring_flags(p)
    p.add_argument("--j", type=int, default=None, help="distinguished element index (default: all invertible)")
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(handler=cmd_automaton_check)

    p = sub.add_parser("euler", help="Euler characteristics of basic octahedra of size 1..R")
    _common(p)
    p.add_argument("--R", type=int, default=3)
    p.set_defaults(handler=cmd_euler)

    for name, handler, text in (("simulate", cmd_simulate, "seeded random-walk trials"),
                                ("drift", cmd_drift, "empirical drift against the exact value")):
        p = sub.add_parser(name, help=text)
        _common(p, "json" if name == "drift" else "csv")
        p.add_argument("--steps", type=int, required=True)
        p.add_argument("--trials", type=int, default=1)
        p.add_argument("--law", default=None, help="JSON step law file; default is the simple random walk")
        if name == "drift":
            p.add_argument("--check-se", type=float, default=None,
                           help="exit 3 unless every coordinate is within this many standard errors")
        p.set_defaults(handler=handler)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_INVALID
    except VALIDATION_ERRORS as exc:
        sys.stderr.write(f"dlgraphs: invalid parameters: {exc}\n")
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        sys.stderr.write(f"dlgraphs: cannot read input: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
