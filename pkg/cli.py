#!/usr/bin/env python

# Purpose: Command-line front end. Generates and ingests Matrix Market pencils, runs
# either solver, and emits JSON run records or CSV tables (accuracy grids, filter
# samples). Every failure path maps to its own exit code, listed in `--help`.

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import scipy.sparse as sp
from pydantic import ValidationError

import settings
from errors import PhaseError, ReferenceUnavailableError, RfDdesError
from partitioner import partition_pencil
from rational_filter import RULES
from services import SUITES, EigenService, build_record, compare_grid, reference_eigenvalues, run_verify_suite
from sparse_core import analytic_interval, gen_fd_laplacian, load_matrix_market, save_matrix_market

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INGESTION = 3
EXIT_SOLVER = 4
EXIT_REFERENCE = 5
EXIT_OUTPUT = 6
EXIT_VERIFY = 7

EXIT_CODES_HELP = """exit codes:
  0  success
  2  usage error or invalid configuration
  3  ingestion failure (missing or malformed matrix file)
  4  solver phase failure (the message names the phase)
  5  reference eigenvalues unavailable (matrix above the dense cap, no --mesh)
  6  output I/O failure
  7  verification suite failed
"""


class UsageError(Exception):
    """Flag combination the parser itself cannot reject."""


# --- Input / output --- #

def _ingest(path: Optional[str]):
    if path is None:
        return None
    try:
        return load_matrix_market(path)
    except (OSError, ValueError) as exc:
        raise PhaseError("ingestion", exc) from exc


def _load_pencil(args: argparse.Namespace):
    """(A, M) from --A/--M, or the FD Laplacian of --mesh when no --A is given."""
    if args.A is None and getattr(args, "mesh", None) is None:
        raise UsageError("either --A or --mesh is required")
    a_matrix = _ingest(args.A) if args.A is not None else gen_fd_laplacian(*args.mesh)
    m_matrix = _ingest(args.M)
    if m_matrix is None:
        m_matrix = sp.identity(a_matrix.shape[0], format="csr")
    elif m_matrix.shape != a_matrix.shape:
        raise PhaseError("ingestion", ValueError(f"A is {a_matrix.shape} but M is {m_matrix.shape}"))
    return a_matrix, m_matrix


def _interval(args: argparse.Namespace) -> Tuple[float, float]:
    if args.alpha is not None and args.beta is not None:
        return args.alpha, args.beta
    if args.mesh is not None and args.nev is not None:
        try:
            return analytic_interval(args.mesh[0], args.mesh[1], args.nev)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    raise UsageError("give --alpha and --beta, or --mesh NX NY with --nev")


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    try:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    except OSError as exc:
        raise PhaseError("output", exc) from exc
    logger.info(f"Wrote {out}")


def _csv(rows: List[Dict[str, Any]], fields: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(fields), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def _int_list(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _config(args: argparse.Namespace, alpha: float, beta: float) -> Dict[str, Any]:
    """Solver config from flags; unset flags fall back to the model defaults."""
    config: Dict[str, Any] = {"alpha": alpha, "beta": beta, "workers": args.threads}
    for flag, key in (("nc", "n_c"), ("rule", "rule"), ("tol", "tol"), ("check_every", "check_every"),
                      ("max_iter", "max_iter"), ("seed", "seed"), ("sigma", "sigma"), ("p", "p"),
                      ("nevb", "nev_b"), ("psi", "psi")):
        value = getattr(args, flag, None)
        if value is not None:
            config[key] = value
    return config


# --- Commands --- #

def cmd_gen(args: argparse.Namespace) -> int:
    if args.nx < 1 or args.ny < 1:
        raise UsageError(f"grid counts must be >= 1, got ({args.nx}, {args.ny})")
    matrix = gen_fd_laplacian(args.nx, args.ny)
    try:
        save_matrix_market(args.out, matrix)
    except OSError as exc:
        raise PhaseError("output", exc) from exc
    logger.info(f"Wrote {args.nx}x{args.ny} Laplacian (n={matrix.shape[0]}, nnz={matrix.nnz}) to {args.out}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    alpha, beta = _interval(args)
    a_matrix, m_matrix = _load_pencil(args)
    result, echo = EigenService.solve_pencil(args.method, a_matrix, m_matrix, _config(args, alpha, beta))
    inputs = {"A": args.A, "M": args.M, "mesh": None if args.mesh is None else f"{args.mesh[0]}x{args.mesh[1]}"}
    record = build_record(args.method, inputs, echo, result)
    _emit(record.to_json(omit_timings=args.omit_timings), args.out)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    alpha, beta = _interval(args)
    a_matrix, m_matrix = _load_pencil(args)
    fields = ["nev_b"] + [f"psi={psi}" for psi in args.psi_grid]
    if not args.nevb_grid or not args.psi_grid:
        _emit(_csv([], fields), args.out)
        return EXIT_OK
    # --mesh declares A to be the FD Laplacian of that grid: the reference is analytic
    mesh = tuple(args.mesh) if args.mesh is not None else None
    reference = reference_eigenvalues(a_matrix, m_matrix, alpha, beta, mesh)
    base = _config(args, alpha, beta)
    rows = compare_grid(a_matrix, m_matrix, base, args.nevb_grid, args.psi_grid, reference)
    _emit(_csv(rows, fields), args.out)
    return EXIT_OK


def cmd_partition_stats(args: argparse.Namespace) -> int:
    a_matrix, m_matrix = _load_pencil(args)
    stats = partition_pencil(a_matrix, m_matrix, args.p, args.seed).stats()
    _emit(json.dumps(stats, indent=2, sort_keys=True), args.out)
    return EXIT_OK


def cmd_filter_plot(args: argparse.Namespace) -> int:
    try:
        samples = EigenService.filter_curve(args.alpha, args.beta, args.nc, args.rule, args.lo, args.hi,
                                            args.num, args.scaled)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(_csv(samples, ["z", "abs_rho"]), args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    summary = run_verify_suite(args.suite, args.count, args.seed)
    _emit(json.dumps(summary, indent=2, sort_keys=True, default=float), args.out)
    if not summary["passed"]:
        logger.error(f"Verification suite '{args.suite}' failed")
        return EXIT_VERIFY
    return EXIT_OK


# --- Parser --- #

def _add_pencil_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--A", help="Matrix Market file holding A")
    parser.add_argument("--M", help="Matrix Market file holding M (identity when omitted)")
    parser.add_argument("--mesh", type=int, nargs=2, metavar=("NX", "NY"),
                        help="FD Laplacian grid: generates A when --A is absent and enables analytic references")


def _add_interval_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--nev", type=int, help="with --mesh: interval holding exactly the nev lowest eigenvalues")


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sigma", type=float, help="real shift for interior eigenvectors (default 0)")
    parser.add_argument("--p", type=int, help="number of subdomains (default 2)")
    parser.add_argument("--nc", type=int, help="quadrature nodes in the upper half-plane (default 2)")
    parser.add_argument("--rule", choices=RULES, help="quadrature rule (default midpoint)")
    parser.add_argument("--nevb", type=int, help="interior eigenvectors per subdomain (default 100)")
    parser.add_argument("--psi", type=int, help="resolvent expansion depth (default 3)")
    parser.add_argument("--tol", type=float, help="trace stopping tolerance (default 1e-6)")
    parser.add_argument("--check-every", type=int, help="iterations between trace checks (default 10)")
    parser.add_argument("--max-iter", type=int, help="iteration cap (default: no cap)")
    parser.add_argument("--seed", type=int, help="start vector seed (default 0)")
    parser.add_argument("--threads", type=int, default=settings.THREADS,
                        help="worker threads for factorizations (env RFDDES_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cli.py",
        description="Rational-filtering eigensolvers for sparse symmetric pencils (A, M).",
        epilog=EXIT_CODES_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="write the 5-point FD Laplacian on an NX x NY grid")
    gen.add_argument("nx", type=int)
    gen.add_argument("ny", type=int)
    gen.add_argument("--out", required=True)
    gen.set_defaults(handler=cmd_gen)

    solve = commands.add_parser("solve", help="compute eigenpairs in [alpha, beta] as a JSON run record")
    solve.add_argument("--method", choices=("rfddes", "rfkrylov"), default="rfddes")
    _add_pencil_flags(solve)
    _add_interval_flags(solve)
    _add_solver_flags(solve)
    solve.add_argument("--out")
    solve.add_argument("--omit-timings", action="store_true", help="drop wall-clock timings from the record")
    solve.set_defaults(handler=cmd_solve)

    compare = commands.add_parser("compare", help="max relative error over a (nev_B, psi) grid as CSV")
    _add_pencil_flags(compare)
    _add_interval_flags(compare)
    _add_solver_flags(compare)
    compare.add_argument("--nevb-grid", type=_int_list, default=[50, 100, 200])
    compare.add_argument("--psi-grid", type=_int_list, default=[1, 2, 3])
    compare.add_argument("--out")
    compare.set_defaults(handler=cmd_compare)

    stats = commands.add_parser("partition-stats", help="subdomain sizes d_j, interface sizes s_j and s/n")
    _add_pencil_flags(stats)
    stats.add_argument("--p", type=int, default=2)
    stats.add_argument("--seed", type=int, default=0)
    stats.add_argument("--out")
    stats.set_defaults(handler=cmd_partition_stats)

    plot = commands.add_parser("filter-plot", help="samples of |rho(z)| on a uniform grid as CSV")
    plot.add_argument("--alpha", type=float, required=True)
    plot.add_argument("--beta", type=float, required=True)
    plot.add_argument("--nc", type=int, default=2)
    plot.add_argument("--rule", choices=RULES, default="midpoint")
    plot.add_argument("--lo", type=float)
    plot.add_argument("--hi", type=float)
    plot.add_argument("--num", type=int, default=401)
    plot.add_argument("--scaled", action="store_true", help="rescale so rho(alpha) = rho(beta) = 1/2")
    plot.add_argument("--out")
    plot.set_defaults(handler=cmd_filter_plot)

    verify = commands.add_parser("verify", help="run a verification suite on seeded random pencils")
    verify.add_argument("--suite", choices=SUITES, required=True)
    verify.add_argument("--count", type=int, default=10)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--out")
    verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK

    logging.basicConfig(level=settings.LOG_LEVEL, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"error: invalid configuration:\n{exc}", file=sys.stderr)
        return EXIT_USAGE
    except PhaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.phase == "ingestion":
            return EXIT_INGESTION
        if exc.phase == "output":
            return EXIT_OUTPUT
        return EXIT_SOLVER
    except ReferenceUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFERENCE
    except (RfDdesError, ValueError) as exc:
        # solver errors raised outside a phase (RF-KRYLOV, argument checks)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
