"""Command-line driver for the convergence studies and the complex check.

    rectcomplex biharmonic --element plate12 --levels 4,8,16,32,64
    rectcomplex stokes --levels 4,8,16 --format csv --out stokes.csv
    rectcomplex complex-check --levels 2,4,8

Exit codes: 0 success, 1 usage error, 2 solver failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass, field

from .analysis import (
    ErrorReport,
    broken_error,
    divergence_residual,
    p1_error,
    postprocess_pressure,
    pressure_error,
    verify_complex,
)
from .assembly import DEFAULT_TOL, SolverError, solve_biharmonic, solve_stokes
from .cases import benchmark_biharmonic, benchmark_stokes
from .mesh import Domain, MeshError, build_uniform_mesh
from .quadrature import ASSEMBLY_ORDER, ERROR_ORDER, MAX_POINTS

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3

BIHARMONIC_NORMS = ["H2", "H1", "L2"]
STOKES_NORMS = ["u_H1", "u_L2", "p_L2", "pstar_L2"]
COMPLEX_COLUMNS = [
    "n", "dim_W", "dim_V", "dim_P", "dim_identity", "div_rank", "div_nullity", "curl_rank",
    "div_curl_defect", "curl_conformity_defect", "commutativity_defect",
    "curl_commutativity_defect", "passed",
]


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    element: str = "plate12"
    levels: list[int] = field(default_factory=lambda: [4, 8, 16, 32, 64])
    domain: Domain = field(default_factory=Domain)
    output_format: str = "table"
    out: str | None = None
    tol: float = DEFAULT_TOL
    quad_assembly: int = ASSEMBLY_ORDER
    quad_error: int = ERROR_ORDER

    def __post_init__(self) -> None:
        if self.subcommand not in ("biharmonic", "stokes", "complex-check"):
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        if self.element not in ("plate12", "adini"):
            raise UsageError(f"element must be plate12 or adini, got {self.element!r}")
        if not self.levels:
            raise UsageError("at least one level is required")
        if any(n < 2 for n in self.levels):
            raise UsageError("every level must be at least 2")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise UsageError("levels must be strictly increasing")
        if self.output_format not in ("table", "csv"):
            raise UsageError(f"format must be table or csv, got {self.output_format!r}")
        if not self.tol > 0:
            raise UsageError("tolerance must be positive")
        for q in (self.quad_assembly, self.quad_error):
            if not 1 <= q <= MAX_POINTS:
                raise UsageError(f"quadrature order must lie in [1, {MAX_POINTS}]")


# ---------------------------------------------------------------------------
# runs


def run_biharmonic(config: RunConfig) -> ErrorReport:
    case = benchmark_biharmonic(config.domain)
    report = ErrorReport(list(BIHARMONIC_NORMS))
    for n in config.levels:
        mesh = build_uniform_mesh(config.domain, n, n)
        uh, solve = solve_biharmonic(mesh, config.element, case, config.tol,
                                     config.quad_assembly, config.quad_error)
        errs = {name: broken_error(mesh, uh, case, m, config.quad_error)
                for name, m in zip(BIHARMONIC_NORMS, (2, 1, 0))}
        log.info("biharmonic %s n=%d dofs=%d residual=%.2e", config.element, n, uh.dofmap.ndofs,
                 solve.relative_residual)
        report.add(n, mesh.h, uh.dofmap.ndofs, errs)
    return report


def run_stokes(config: RunConfig) -> ErrorReport:
    case = benchmark_stokes(config.domain)
    report = ErrorReport(list(STOKES_NORMS))
    for n in config.levels:
        mesh = build_uniform_mesh(config.domain, n, n)
        uh, ph, solve = solve_stokes(mesh, case, config.tol, config.quad_assembly, config.quad_error)
        pstar = postprocess_pressure(mesh, uh, ph, case.f, config.quad_error)
        errs = {
            "u_H1": broken_error(mesh, uh, case, 1, config.quad_error),
            "u_L2": broken_error(mesh, uh, case, 0, config.quad_error),
            "p_L2": pressure_error(mesh, ph, case.p, config.quad_error),
            "pstar_L2": p1_error(pstar, case.p, config.quad_error),
        }
        log.info("stokes n=%d dofs=%d residual=%.2e", n, uh.dofmap.ndofs + ph.dofmap.ndofs,
                 solve.relative_residual)
        report.add(n, mesh.h, uh.dofmap.ndofs + ph.dofmap.ndofs, errs,
                   div_residual=divergence_residual(mesh, uh))
    return report


def run_complex_check(config: RunConfig) -> list[dict]:
    rows = []
    for n in config.levels:
        r = verify_complex(build_uniform_mesh(config.domain, n, n))
        rows.append({
            "n": n, "dim_W": r.dim_w, "dim_V": r.dim_v, "dim_P": r.dim_p,
            "dim_identity": r.dim_identity, "div_rank": r.div_rank, "div_nullity": r.div_nullity,
            "curl_rank": r.curl_rank, "div_curl_defect": r.div_curl_defect,
            "curl_conformity_defect": r.curl_conformity_defect,
            "commutativity_defect": r.commutativity_defect,
            "curl_commutativity_defect": r.curl_commutativity_defect,
            "passed": r.passed,
        })
    return rows


# ---------------------------------------------------------------------------
# tables and CSV


def report_columns(report: ErrorReport) -> list[str]:
    cols = ["n", "dofs"]
    for name in report.norms:
        cols += [name, f"{name}_order"]
    return cols + list(report.extras)


def report_rows(report: ErrorReport) -> list[dict]:
    orders = {name: report.orders(name) for name in report.norms}
    rows = []
    for k, n in enumerate(report.n):
        row = {"n": n, "dofs": report.dofs[k]}
        for name in report.norms:
            row[name] = report.errors[name][k]
            row[f"{name}_order"] = orders[name][k]
        for name, vals in report.extras.items():
            row[name] = vals[k]
        rows.append(row)
    return rows


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return f"{v:.5e}"


def parse_value(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        return float(s)


def to_csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[c]) for c in columns])
    return buf.getvalue()


def from_csv(text: str) -> tuple[list[str], list[dict]]:
    reader = csv.reader(io.StringIO(text))
    columns = next(reader)
    return columns, [dict(zip(columns, map(parse_value, rec))) for rec in reader]


def to_table(columns: list[str], rows: list[dict]) -> str:
    def cell(c, v):
        if v is None:
            return ""
        if isinstance(v, bool):
            return "yes" if v else "no"
        if isinstance(v, int):
            return str(v)
        if c.endswith("_order"):
            return f"{v:.2f}"
        return f"{v:.3E}"

    head = [c.replace("_order", " ord") for c in columns]
    body = [[cell(c, row[c]) for c in columns] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in body)) if body else len(h) for i, h in enumerate(head)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(head, widths)),
             "  ".join("-" * w for w in widths)]
    lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in body]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _levels(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid level list {text!r}") from None


def _domain(text: str) -> Domain:
    try:
        vals = [float(t) for t in text.split(",")]
        if len(vals) != 4:
            raise ValueError
        return Domain(*vals)
    except (ValueError, MeshError):
        raise argparse.ArgumentTypeError(f"invalid domain {text!r}; expected x_min,x_max,y_min,y_max") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rectcomplex", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in ("biharmonic", "stokes", "complex-check"):
        p = sub.add_parser(name)
        if name == "biharmonic":
            p.add_argument("--element", choices=["plate12", "adini"], default="plate12")
        default_levels = "2,4,8" if name == "complex-check" else "4,8,16,32,64"
        p.add_argument("--levels", type=_levels, default=_levels(default_levels),
                       help=f"comma-separated mesh sizes n (default {default_levels})")
        p.add_argument("--domain", type=_domain, default=Domain(), help="x_min,x_max,y_min,y_max")
        p.add_argument("--format", dest="output_format", choices=["table", "csv"], default="table")
        p.add_argument("--out", default=None, help="output file (default: standard output)")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="solver residual tolerance")
        p.add_argument("--quad-assembly", type=int, default=ASSEMBLY_ORDER)
        p.add_argument("--quad-error", type=int, default=ERROR_ORDER)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    opts = vars(args)
    opts.pop("verbose")
    try:
        config = RunConfig(**opts)
    except UsageError as exc:
        print(f"rectcomplex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    status = EXIT_OK
    try:
        if config.subcommand == "complex-check":
            rows = run_complex_check(config)
            columns = COMPLEX_COLUMNS
            if not all(r["passed"] for r in rows):
                status = EXIT_VERIFY
        else:
            report = run_biharmonic(config) if config.subcommand == "biharmonic" else run_stokes(config)
            columns, rows = report_columns(report), report_rows(report)
    except SolverError as exc:
        print(f"rectcomplex: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    text = to_csv(columns, rows) if config.output_format == "csv" else to_table(columns, rows)
    if config.out:
        with open(config.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if status == EXIT_VERIFY:
        print("rectcomplex: complex verification failed", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
