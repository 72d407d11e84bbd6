"""Command-line entry point of the laboratory.

Every subcommand resolves its parameters into an ``ExperimentSpec``, calls the
numerical modules and writes a CSV table (``# `` header lines carry the
parameter JSON) or a JSON document (with a ``"parameters"`` block). Exit codes:
0 on success, 1 for invalid input or usage errors, 2 for numerical failures.
"""
import argparse
import csv
import json
import logging
import sys
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import ValidationError
from sqlmodel import Session

from app.borel_tauber import abel_mean, adell_lekuona_probe, borel_integral, catalog_entry
from app.borel_tauber import CATALOG as COEFF_CATALOG
from app.continuous_ops import (
    build_function,
    cesaro_apply_fn,
    construct_preimage_fn,
    orbit_norms_fn,
    range_membership_fn,
)
from app.exceptions import InvalidInputError, NumericalError
from app.laguerre import (
    abs_integral,
    laguerre_eval,
    signed_integral,
    signed_integral_quadrature,
)
from app.models import (
    ConvergentSeq,
    DualFunctional,
    ExperimentRunCreate,
    ExperimentSpec,
    FunctionSpec,
    NormHistory,
)
from app.orbit_engine import (
    SEQUENCE_CATALOG,
    fit_rate,
    orbit_norms,
    sequence_catalog_entry,
    talpha_norm_bounds,
)
from app.range_analysis import construct_preimage, range_membership
from app.repositories import ExperimentRunRepository
from app.seq_core import dual_orbit
from app.spectral import kt_decay_table, resolvent_table, spectrum_classify
from app.utils import dyadic_schedule, encode_scalar, format_float
from config import APP_DESCRIPTION, APP_NAME, APP_VERSION, LEDGER_ENABLED, LOG_FORMAT, LOG_LEVEL, WORKERS

logger = logging.getLogger(__name__)

DEFAULT_N = 100_000
GLOBAL_KEYS = ("handler", "command", "workers", "seed", "record", "log_level", "out")


class UsageError(Exception):
    """Raised instead of exiting when the argument parser rejects argv."""


class LabArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


class Table(NamedTuple):
    columns: List[str]
    rows: List[List[Any]]


Report = Any  # Table or a JSON-ready dict
Handler = Callable[[argparse.Namespace], Report]


# ============================================================================
# Input helpers
# ============================================================================


def _read_json(path: str) -> Any:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def _load_sequence(args: argparse.Namespace) -> ConvergentSeq:
    """Sequence from ``--input`` JSON or from the catalog, resized to ``--N``."""
    if args.input:
        x = ConvergentSeq.model_validate(_read_json(args.input))
        if args.N is None or args.N == x.size:
            return x
        if args.N < x.size:
            return x.with_prefix(x.prefix[: args.N])
        logger.warning("Padding %d stored entries with the limit up to N=%d", x.size, args.N)
        padded = np.full(args.N, x.limit, dtype=np.complex128)
        padded[: x.size] = x.prefix
        return x.with_prefix(padded)
    return sequence_catalog_entry(args.sequence, args.N or DEFAULT_N)


def _load_function(args: argparse.Namespace):
    if args.function:
        spec = FunctionSpec.model_validate(_read_json(args.function))
    else:
        spec = FunctionSpec(
            space=args.space,
            kind=args.kind,
            coeffs=args.coeffs or [],
            scale=args.scale,
        )
    return build_function(spec)


def _history_table(history: NormHistory) -> Table:
    rows = [
        [s.n, s.value, s.boundary_saturated, "" if s.peak_log_index is None else s.peak_log_index]
        for s in history.samples
    ]
    return Table(["n", "value", "boundary_saturated", "peak_log_index"], rows)


def _history_json(history: NormHistory, window: Optional[Sequence[int]]) -> Dict[str, Any]:
    fit = fit_rate(history, tuple(window) if window else None)
    return {
        "fit": fit.model_dump(mode="json"),
        "history": [s.model_dump(mode="json") for s in history.samples],
    }


# ============================================================================
# Handlers
# ============================================================================


def cmd_orbit(args: argparse.Namespace) -> Report:
    x = _load_sequence(args)
    return _history_table(orbit_norms(x, dyadic_schedule(args.nmax), far_field=args.far_field))


def cmd_rate(args: argparse.Namespace) -> Report:
    x = _load_sequence(args)
    history = orbit_norms(x, dyadic_schedule(args.nmax), far_field=args.far_field)
    return _history_json(history, args.window)


def cmd_range_check(args: argparse.Namespace) -> Report:
    return {"verdict": range_membership(_load_sequence(args), args.order).to_json()}


def cmd_preimage(args: argparse.Namespace) -> Report:
    result = construct_preimage(_load_sequence(args), args.y0)
    return {
        "preimage": result.sequence.to_json(),
        "limit_uncertainty": result.limit_uncertainty,
        "membership": result.membership.to_json(),
    }


def cmd_laguerre_eval(args: argparse.Namespace) -> Report:
    values = laguerre_eval(args.n, np.asarray(args.t, dtype=np.float64))
    return Table(["t", "value"], [[t, float(v)] for t, v in zip(args.t, np.atleast_1d(values))])


def cmd_laguerre_signed(args: argparse.Namespace) -> Report:
    rows = [
        [n, signed_integral(n, args.alpha), signed_integral_quadrature(n, args.alpha)]
        for n in range(args.nmax + 1)
    ]
    return Table(["n", "closed_form", "quadrature"], rows)


def cmd_laguerre_abs(args: argparse.Namespace) -> Report:
    rows = [[n, args.alpha, abs_integral(n, args.alpha)] for n in range(args.nmax + 1)]
    return Table(["n", "alpha", "abs_integral"], rows)


def cmd_laguerre_ratio(args: argparse.Namespace) -> Report:
    rows = []
    for n in range(1, args.nmax + 1):
        absolute = abs_integral(n, args.alpha)
        signed = signed_integral(n, args.alpha)
        scale = ((1.0 - args.alpha) / args.alpha) ** (n + 1)
        rows.append([n, args.alpha, absolute, signed, absolute / scale])
    return Table(["n", "alpha", "abs_integral", "signed_closed_form", "ratio"], rows)


def cmd_talpha(args: argparse.Namespace) -> Report:
    powers = list(range(1, args.nmax + 1))
    bounds = talpha_norm_bounds(args.alpha, powers, workers=args.workers)
    return Table(["n", "alpha", "bound"], [[n, args.alpha, b] for n, b in zip(powers, bounds)])


def cmd_opnorm(args: argparse.Namespace) -> Report:
    powers = args.powers or dyadic_schedule(args.nmax)
    table = kt_decay_table(powers, args.N, full_sweep=args.full_sweep, workers=args.workers)
    columns = [
        "n", "N", "value", "sqrt_scaled", "argmax_row",
        "boundary_flag", "log_comparison", "continuum_limit",
    ]
    return Table(columns, [[getattr(row, c) for c in columns] for row in table])


def cmd_spectrum(args: argparse.Namespace) -> Report:
    verdict = spectrum_classify(complex(args.re, args.im), args.space)
    return {"z": encode_scalar(complex(args.re, args.im)), "verdict": verdict.model_dump(mode="json")}


def cmd_resolvent(args: argparse.Namespace) -> Report:
    rows = resolvent_table(args.theta)
    return Table(["theta", "bound", "two_over_theta_sq"], [list(r.values()) for r in rows])


def cmd_borel_integral(args: argparse.Namespace) -> Report:
    result = borel_integral(catalog_entry(args.name))
    payload = result.model_dump()
    payload["value"] = encode_scalar(result.value)
    if result.series_value is not None:
        payload["series_value"] = encode_scalar(result.series_value)
    return {"name": args.name, "borel": payload}


def cmd_borel_abel(args: argparse.Namespace) -> Report:
    a = catalog_entry(args.name)
    rows = []
    for r in args.r:
        value = abel_mean(a, r)
        rows.append([r, value.real, value.imag])
    return Table(["r", "value_re", "value_im"], rows)


def cmd_borel_al_probe(args: argparse.Namespace) -> Report:
    return {"verdict": adell_lekuona_probe(_load_sequence(args)).to_json()}


def cmd_continuous_orbit(args: argparse.Namespace) -> Report:
    f = _load_function(args)
    history = orbit_norms_fn(f, dyadic_schedule(args.nmax), args.grid_size, workers=args.workers)
    return _history_table(history)


def cmd_continuous_rate(args: argparse.Namespace) -> Report:
    f = _load_function(args)
    history = orbit_norms_fn(f, dyadic_schedule(args.nmax), args.grid_size, workers=args.workers)
    return _history_json(history, args.window)


def cmd_continuous_range(args: argparse.Namespace) -> Report:
    return {"verdict": range_membership_fn(_load_function(args), args.mode).to_json()}


def cmd_continuous_preimage(args: argparse.Namespace) -> Report:
    f = _load_function(args)
    h = construct_preimage_fn(f, force=args.force)
    points = np.linspace(0.0, args.t_max, args.points)
    values = h(points)
    columns = ["t", "h_re", "h_im"]
    if args.check:
        residual = np.abs(values - cesaro_apply_fn(h)(points) - f(points))
        columns.append("residual")
        return Table(columns, [[t, v.real, v.imag, r] for t, v, r in zip(points, values, residual)])
    return Table(columns, [[t, v.real, v.imag] for t, v in zip(points, values)])


def cmd_dual_orbit(args: argparse.Namespace) -> Report:
    phi = DualFunctional.model_validate(_read_json(args.input))
    history = dual_orbit(phi, dyadic_schedule(args.nmax))
    return Table(["n", "value"], [[s.n, s.value] for s in history.samples])


# ============================================================================
# Parser
# ============================================================================


def _sequence_arguments(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="Sequence JSON {\"prefix\": [...], \"limit\": ...}")
    source.add_argument("--sequence", choices=sorted(SEQUENCE_CATALOG), help="Catalog sequence")
    parser.add_argument("--N", type=int, default=None, help="Prefix length")


def _function_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--function", help="Function description JSON file")
    parser.add_argument("--space", choices=["interval", "halfline"], default="interval")
    parser.add_argument(
        "--kind",
        choices=["poly", "sinlog", "loginv", "loginv2", "rational", "expdecay"],
        default="poly",
    )
    parser.add_argument("--coeffs", type=float, nargs="+", help="Polynomial coefficients c_0 c_1 ...")
    parser.add_argument("--scale", type=float, default=1.0)


def _add(
    subparsers,
    name: str,
    handler: Handler,
    command: str,
    help_text: str,
) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(name, help=help_text)
    parser.add_argument("--out", help="Output file (.csv or .json); stdout when omitted")
    parser.set_defaults(handler=handler, command=command)
    return parser


def build_parser() -> LabArgumentParser:
    """Assemble the subcommand tree."""
    parser = LabArgumentParser(prog="cesaro-lab", description=APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    parser.add_argument("--workers", type=int, default=WORKERS, help="Threads for parallel regions")
    parser.add_argument("--seed", type=int, default=None, help="Seed recorded with the run")
    parser.add_argument("--record", action="store_true", help="Record the run in the ledger")
    parser.add_argument("--log-level", default=None, help="Logging level (default from LOG_LEVEL)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = _add(sub, "orbit", cmd_orbit, "orbit", "Orbit distances ||T^n x - Px|| on a dyadic schedule")
    _sequence_arguments(p)
    p.add_argument("--nmax", type=int, default=1024)
    p.add_argument("--far-field", action="store_true", help="Scan indices beyond the prefix")

    p = _add(sub, "rate", cmd_rate, "rate", "Fit the decay slope of the orbit")
    _sequence_arguments(p)
    p.add_argument("--nmax", type=int, default=1024)
    p.add_argument("--far-field", action="store_true")
    p.add_argument("--window", type=int, nargs=2, metavar=("LO", "HI"))

    p = _add(sub, "range-check", cmd_range_check, "range-check", "Probe x in Ran(I-T)^order")
    _sequence_arguments(p)
    p.add_argument("--order", type=int, choices=[1, 2], default=1)

    p = _add(sub, "preimage", cmd_preimage, "preimage", "Solve (I-T)y = x")
    _sequence_arguments(p)
    p.add_argument("--y0", type=float, default=0.0)

    laguerre = sub.add_parser("laguerre", help="Laguerre integrals").add_subparsers(
        dest="laguerre_command", required=True
    )
    p = _add(laguerre, "eval", cmd_laguerre_eval, "laguerre eval", "L_n^(1)(t)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=float, nargs="+", required=True)
    for name, handler, help_text in (
        ("signed", cmd_laguerre_signed, "Signed integral: closed form and quadrature"),
        ("abs", cmd_laguerre_abs, "Absolute integral"),
        ("ratio", cmd_laguerre_ratio, "Absolute over leading signed term"),
    ):
        p = _add(laguerre, name, handler, f"laguerre {name}", help_text)
        p.add_argument("--alpha", type=float, required=True)
        p.add_argument("--nmax", type=int, default=40)

    p = _add(sub, "talpha", cmd_talpha, "talpha", "Norm bounds for powers of T_alpha")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--nmax", type=int, default=60)

    p = _add(sub, "opnorm", cmd_opnorm, "opnorm", "Finite-section ||T^n (I-T)|| table")
    p.add_argument("--N", type=int, default=4096)
    p.add_argument("--nmax", type=int, default=512)
    p.add_argument("--powers", type=int, nargs="+", help="Explicit increasing powers")
    p.add_argument(
        "--full-sweep", action="store_true", default=None, help="Evaluate every row (default for N <= 1024)"
    )

    p = _add(sub, "spectrum", cmd_spectrum, "spectrum", "Locate z relative to the spectrum")
    p.add_argument("--re", type=float, required=True)
    p.add_argument("--im", type=float, default=0.0)
    p.add_argument("--space", choices=["sequence", "interval", "halfline"], default="sequence")

    p = _add(sub, "resolvent", cmd_resolvent, "resolvent", "Resolvent growth on the unit circle")
    p.add_argument("--theta", type=float, nargs="+", required=True)

    borel = sub.add_parser("borel", help="Borel and Abel summation").add_subparsers(
        dest="borel_command", required=True
    )
    p = _add(borel, "integral", cmd_borel_integral, "borel integral", "Borel integral of a series")
    p.add_argument("--name", choices=sorted(COEFF_CATALOG), required=True)
    p = _add(borel, "abel", cmd_borel_abel, "borel abel", "Abel means sum a_k r^k")
    p.add_argument("--name", choices=sorted(COEFF_CATALOG), required=True)
    p.add_argument("--r", type=float, nargs="+", required=True)
    p = _add(borel, "al-probe", cmd_borel_al_probe, "borel al-probe", "Borel-integral range probe")
    _sequence_arguments(p)

    continuous = sub.add_parser("continuous", help="Cesàro operator on functions").add_subparsers(
        dest="continuous_command", required=True
    )
    p = _add(continuous, "orbit", cmd_continuous_orbit, "continuous orbit", "sup |T^n f - f(0)|")
    _function_arguments(p)
    p.add_argument("--nmax", type=int, default=1024)
    p.add_argument("--grid-size", type=int, default=64)
    p = _add(continuous, "rate", cmd_continuous_rate, "continuous rate", "Decay slope for f")
    _function_arguments(p)
    p.add_argument("--nmax", type=int, default=1024)
    p.add_argument("--grid-size", type=int, default=64)
    p.add_argument("--window", type=int, nargs=2, metavar=("LO", "HI"))
    p = _add(continuous, "range", cmd_continuous_range, "continuous range", "Probe f in Ran(I-T)")
    _function_arguments(p)
    p.add_argument("--mode", choices=["raw", "centered"], default="raw")
    p = _add(continuous, "preimage", cmd_continuous_preimage, "continuous preimage", "h with (I-T)h = f")
    _function_arguments(p)
    p.add_argument("--points", type=int, default=17)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--force", action="store_true", help="Build h for a non-member")
    p.add_argument("--check", action="store_true", help="Add the residual |h - Th - f|")

    dual = sub.add_parser("dual", help="Dual functionals").add_subparsers(
        dest="dual_command", required=True
    )
    p = _add(dual, "orbit", cmd_dual_orbit, "dual orbit", "||S^n phi - Q phi|| on a dyadic schedule")
    p.add_argument("--input", required=True, help="Dual JSON {\"a_inf\": ..., \"coeffs\": [...]}")
    p.add_argument("--nmax", type=int, default=1024)
    return parser


# ============================================================================
# Output
# ============================================================================


def _cell(value: Any) -> str:
    if isinstance(value, str):
        return value
    return format_float(value)


def write_report(spec: ExperimentSpec, report: Report, stream) -> None:
    """Write a Table as CSV or a dict as JSON, both carrying the parameters."""
    header = spec.header()
    as_json = isinstance(report, dict) or (spec.output or "").endswith(".json")
    if as_json:
        if isinstance(report, Table):
            report = {"columns": report.columns, "rows": report.rows}
        document = {"parameters": header, **report}
        stream.write(json.dumps(document, indent=2, sort_keys=True, default=str))
        stream.write("\n")
        return
    stream.write("# " + json.dumps(header, sort_keys=True) + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([_cell(v) for v in row])


def record_run(spec: ExperimentSpec, exit_code: int) -> None:
    """Append the run to the ledger; failures are logged, never raised."""
    from app.database import create_db_and_tables, engine

    try:
        create_db_and_tables()
        with Session(engine) as session:
            ExperimentRunRepository(session).create(
                ExperimentRunCreate(
                    command=spec.command,
                    parameters=json.dumps(spec.parameters, sort_keys=True, default=str),
                    seed=spec.seed,
                    exit_code=exit_code,
                    output_path=spec.output,
                )
            )
    except Exception as exc:  # noqa: BLE001
        logger.error("Could not record run in the ledger: %s", exc)


# ============================================================================
# Entry point
# ============================================================================


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run one experiment and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except SystemExit as exc:  # --help, --version
        return int(exc.code or 0)

    logging.basicConfig(level=(args.log_level or LOG_LEVEL).upper(), format=LOG_FORMAT)
    parameters = {
        key: value
        for key, value in sorted(vars(args).items())
        if key not in GLOBAL_KEYS and not key.endswith("command")
    }
    parameters["workers"] = args.workers
    spec = ExperimentSpec(
        command=args.command, parameters=parameters, seed=args.seed, output=args.out
    )
    if args.seed is not None:
        np.random.seed(args.seed)

    try:
        report = args.handler(args)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as handle:
                write_report(spec, report, handle)
        else:
            write_report(spec, report, sys.stdout)
        exit_code = 0
    except NumericalError as exc:
        logger.error("%s failed: %s", spec.command, exc)
        sys.stderr.write(f"numerical failure: {exc}\n")
        exit_code = 2
    except (InvalidInputError, ValidationError, ValueError, OSError) as exc:
        logger.error("%s rejected its input: %s", spec.command, exc)
        sys.stderr.write(f"invalid input: {exc}\n")
        exit_code = 1

    if args.record or LEDGER_ENABLED:
        record_run(spec, exit_code)
    return exit_code
