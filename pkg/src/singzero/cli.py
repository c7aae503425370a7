"""Command-line front end.

Subcommands: ``deflate`` (one system), ``bench`` (corpus table), ``cases``
(list stored cases) and ``show`` (print a stored case).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import BenchmarkCase, generate_breadth_system, list_cases, load_case, random_power_suite
from .deflation import DEFAULT_EPS, DEFAULT_ZERO_DIGITS, DeflationError
from .polycore import PolySystem
from .refine import DEFAULT_THETA_PRIME, adaptive_refine, format_max_err, is_machine_zero
from .textio import ParseError, format_system, parse_point, parse_system
from .verify import VerificationFailed, format_breadth, format_interval, krawczyk_verify

log = logging.getLogger("singzero")

EXIT_OK, EXIT_ERROR, EXIT_PERTURBED, EXIT_UNVERIFIED = 0, 1, 2, 3

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "case", "status", "n_vars", "n_alpha", "final_size", "poly_count", "verdict",
        "convergence", "delta", "max_err", "breadth", "verified", "time",
    ],
    "properties": {
        "case": {"type": "string"},
        "status": {"enum": ["ok", "error"]},
        "error": {"type": ["string", "null"]},
        "n_vars": {"type": "integer", "minimum": 0},
        "multiplicity": {"type": ["integer", "null"]},
        "n_alpha": {"type": ["integer", "null"], "minimum": 0},
        "final_size": {"type": ["integer", "null"], "minimum": 0},
        "poly_count": {"type": ["integer", "null"], "minimum": 0},
        "rounds": {"type": ["integer", "null"], "minimum": 0},
        "verdict": {"enum": ["Exact", "Perturbed", None]},
        "convergence": {"enum": ["Quadratic", "Linear", "Stalled", "Diverged", None]},
        "path": {"type": ["string", "null"]},
        "theta": {"type": ["number", "null"]},
        "delta": {"type": ["number", "null"]},
        "max_err": {"type": ["number", "null"]},
        "max_err_display": {"type": ["string", "null"]},
        "breadth": {"type": ["number", "null"]},
        "accuracy": {"type": ["string", "null"]},
        "verified": {"type": "boolean"},
        "time": {"type": "number", "minimum": 0},
        "point": {"type": "array", "items": {"type": "number"}},
        "variables": {"type": "array", "items": {"type": "string"}},
        "system": {"type": "array", "items": {"type": "string"}},
        "inclusion": {"type": "array", "items": {"type": "string"}},
        "attempts": {"type": "array", "items": {"type": "string"}},
        "message": {"type": ["string", "null"]},
    },
}


@dataclass
class RunReport:
    """One pipeline run in the shape of a benchmark table row."""

    case: str
    n_vars: int
    status: str = "ok"
    error: str | None = None
    multiplicity: int | None = None
    n_alpha: int | None = None
    final_size: int | None = None
    poly_count: int | None = None
    rounds: int | None = None
    verdict: str | None = None
    convergence: str | None = None
    path: str | None = None
    theta: float | None = None
    delta: float | None = None
    max_err: float | None = None
    max_err_display: str | None = None
    breadth: float | None = None
    accuracy: str | None = None
    verified: bool = False
    time: float = 0.0
    point: list[float] = field(default_factory=list)
    variables: list[str] = field(default_factory=list)
    system: list[str] = field(default_factory=list)
    inclusion: list[str] = field(default_factory=list)
    attempts: list[str] = field(default_factory=list)
    message: str | None = None

    def exit_code(self) -> int:
        if self.status != "ok":
            return EXIT_ERROR
        if self.verdict != "Exact":
            return EXIT_PERTURBED
        if self.accuracy == "unverified":
            return EXIT_UNVERIFIED
        return EXIT_OK

    def to_json(self) -> dict:
        return asdict(self)


def run_pipeline(
    F: PolySystem,
    point,
    name: str = "input",
    *,
    theta: float | None = None,
    eps: float = DEFAULT_EPS,
    theta_prime: float = DEFAULT_THETA_PRIME,
    zero_digits: int = DEFAULT_ZERO_DIGITS,
    max_retries: int = 3,
    verify: bool = True,
    rank_guess: bool = False,
    relative_rank: bool = False,
    multiplicity: int | None = None,
) -> RunReport:
    """Deflate, refine, diagnose and (for Exact results) certify."""
    report = RunReport(case=name, n_vars=F.nvars, multiplicity=multiplicity)
    t0 = time.perf_counter()
    try:
        D, p, diag = adaptive_refine(
            F, point, theta, eps, theta_prime, max_retries,
            zero_digits=zero_digits, relative_rank=relative_rank, force_rank_guess=rank_guess,
        )
    except (DeflationError, ValueError) as exc:
        report.status, report.error = "error", str(exc)
        report.time = time.perf_counter() - t0
        return report
    report.n_alpha = D.n_alpha
    report.final_size = D.size
    report.poly_count = D.poly_count
    report.rounds = D.rounds
    report.verdict = diag.verdict.value
    report.convergence = diag.convergence.value
    report.path = diag.path
    report.theta = diag.theta
    report.delta = diag.delta
    report.max_err = diag.max_err
    report.max_err_display = format_max_err(diag.max_err)
    report.point = [float(v) for v in p]
    report.variables = list(D.variables)
    report.system = [str(f) for f in D.system]
    report.attempts = diag.attempts
    if D.rounds == 0 and set(D.system.polys) == set(F.polys):
        report.message = "no deflation needed"
    if diag.exact and verify:
        try:
            inc = krawczyk_verify(D.system, p)
        except VerificationFailed as exc:
            report.accuracy = "unverified"
            report.inclusion = [f"verification failed: {exc}"]
        else:
            report.verified = True
            report.breadth = inc.breadth
            report.accuracy = format_breadth(inc.breadth)
            report.inclusion = inc.lines()
    elif diag.exact:
        report.accuracy = "not requested"
    else:
        report.accuracy = "unverified"
    report.time = time.perf_counter() - t0
    return report


def _print_report(r: RunReport, out) -> None:
    if r.status != "ok":
        print(f"{r.case}: error: {r.error}", file=out)
        return
    print(f"case         {r.case}", file=out)
    if r.message:
        print(f"note         {r.message}", file=out)
    print(f"variables    {', '.join(r.variables)}", file=out)
    print(f"final size   {r.final_size} ({r.n_alpha} new variables, {r.rounds} rounds, poly count {r.poly_count})", file=out)
    print(f"verdict      {r.verdict} via {r.path} ({r.convergence}, delta={r.delta:.3g})", file=out)
    print(f"max err      {r.max_err_display}", file=out)
    print(f"verified acc {r.accuracy}", file=out)
    print("system:", file=out)
    for line in r.system:
        print(f"  {line}", file=out)
    print("refined point:", file=out)
    for v, x in zip(r.variables, r.point):
        print(f"  {v} = {x!r}", file=out)
    if r.inclusion:
        print("inclusion:", file=out)
        for line in r.inclusion:
            print(f"  {line}", file=out)


TABLE_COLUMNS = ("System", "var", "mul", "Verified acc", "Max err", "time", "Final size", "alpha", "Poly")


def format_table(reports: Sequence[RunReport]) -> str:
    rows = [TABLE_COLUMNS]
    for r in reports:
        if r.status != "ok":
            rows.append((r.case, str(r.n_vars), str(r.multiplicity or "-"), "error", "-", f"{r.time:.3f}", "-", "-", r.error or ""))
            continue
        err = "0" if is_machine_zero(r.max_err) else f"e{int(np.floor(np.log10(r.max_err)))}"
        rows.append(
            (
                r.case,
                str(r.n_vars),
                str(r.multiplicity or "-"),
                r.accuracy or "-",
                err,
                f"{r.time:.3f}",
                str(r.final_size),
                str(r.n_alpha),
                str(r.poly_count),
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(TABLE_COLUMNS))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows)


def _case_kwargs(case: BenchmarkCase | None, args) -> dict:
    theta = args.theta if args.theta is not None else (case.theta if case else None)
    eps = args.eps if args.eps is not None else (case.eps if case and case.eps else DEFAULT_EPS)
    return dict(
        theta=theta,
        eps=eps,
        theta_prime=args.theta_prime,
        zero_digits=args.zero_digits,
        max_retries=args.max_retries,
        verify=not args.no_verify,
        rank_guess=args.rank_guess,
        relative_rank=args.relative_rank,
    )


def cmd_deflate(args, out=None) -> int:
    out = out or sys.stdout
    case = None
    try:
        if args.case:
            case = load_case(args.case)
            F, point, name = case.system, case.approx_zero, case.name
        elif args.system:
            F = parse_system(Path(args.system).read_text())
            name = Path(args.system).stem
            point = None
        else:
            raise ValueError("give a system file or --case")
        if args.point:
            point = parse_point(args.point)
        elif args.point_file:
            point = parse_point(Path(args.point_file).read_text())
        if point is None:
            raise ValueError("no approximate zero: use --point or --point-file")
        if not F.is_square:
            raise ValueError(f"system is not square: {len(F)} equations in {F.nvars} variables")
        if len(point) != F.nvars:
            raise ValueError(f"point has {len(point)} coordinates, system has {F.nvars} variables")
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    report = run_pipeline(
        F, point, name, multiplicity=case.reference_multiplicity if case else None, **_case_kwargs(case, args)
    )
    if args.json:
        json.dump(report.to_json(), out, indent=2)
        print(file=out)
    else:
        _print_report(report, out)
    if report.status != "ok":
        print(f"error: {report.error}", file=sys.stderr)
    return report.exit_code()


def _bench_cases(args) -> list[BenchmarkCase]:
    cases = []
    names = list(args.cases)
    if args.all:
        names = list_cases() + [n for n in names if n not in list_cases()]
    for name in names:
        cases.append(load_case(name))
    for n in args.breadth or []:
        cases.append(generate_breadth_system(n))
    cases.extend(random_power_suite(args.random or 0, args.seed))
    return cases


def cmd_bench(args, out=None) -> int:
    out = out or sys.stdout
    try:
        cases = _bench_cases(args)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    reports = []
    for case in cases:
        kw = _case_kwargs(case, args)
        reports.append(run_pipeline(case.system, case.approx_zero, case.name, multiplicity=case.reference_multiplicity, **kw))
    if args.json:
        json.dump([r.to_json() for r in reports], out, indent=2)
        print(file=out)
    else:
        print(format_table(reports), file=out)
    return EXIT_OK


def cmd_cases(args, out=None) -> int:
    out = out or sys.stdout
    for name in list_cases():
        c = load_case(name)
        mu = c.reference_multiplicity if c.reference_multiplicity is not None else "-"
        print(f"{name:10s} vars={c.nvars} mul={mu} {c.notes}".rstrip(), file=out)
    return EXIT_OK


def cmd_show(args, out=None) -> int:
    out = out or sys.stdout
    try:
        c = load_case(args.name)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"# {c.name}", file=out)
    out.write(format_system(c.system))
    print(f"# approximate zero: {', '.join(repr(float(v)) for v in c.approx_zero)}", file=out)
    return EXIT_OK


def _add_tolerance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta", type=float, help="regularity tolerance (default: per-polynomial heuristic)")
    p.add_argument("--eps", type=float, help=f"numerical rank threshold (default {DEFAULT_EPS})")
    p.add_argument("--theta-prime", type=float, default=DEFAULT_THETA_PRIME, help="residual tolerance for an Exact verdict")
    p.add_argument("--zero-digits", type=int, default=DEFAULT_ZERO_DIGITS, help="trusted digits of the approximate zero")
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--no-verify", action="store_true", help="skip interval verification")
    p.add_argument("--rank-guess", action="store_true", help="use the rank-guess deflation path only")
    p.add_argument("--relative-rank", action="store_true", help="rank threshold relative to the largest singular value")
    p.add_argument("--json", action="store_true", help="emit a JSON report")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="singzero", description="Deflate and certify singular zeros of polynomial systems.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("deflate", help="deflate one system")
    d.add_argument("system", nargs="?", help="system file in the text format")
    d.add_argument("--case", help="stored case name instead of a file")
    d.add_argument("--point", help="approximate zero, comma separated")
    d.add_argument("--point-file", help="file holding the approximate zero")
    _add_tolerance_flags(d)
    d.set_defaults(func=cmd_deflate)

    b = sub.add_parser("bench", help="run corpus cases and print a table")
    b.add_argument("cases", nargs="*", help="case names (breadth<n> allowed)")
    b.add_argument("--all", action="store_true", help="every stored case")
    b.add_argument("--breadth", type=int, action="append", help="add a breadth-family case of size n")
    b.add_argument("--random", type=int, help="add this many random power systems")
    _add_tolerance_flags(b)
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("cases", help="list stored cases")
    c.set_defaults(func=cmd_cases)

    s = sub.add_parser("show", help="print a stored case in the text format")
    s.add_argument("name")
    s.set_defaults(func=cmd_show)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
