"""
Command line for the spectral toolkit.

    python -m app spectrum    --family F (--n N | --n-range A:B[:log]) [--box x0,x1,y0,y1]
    python -m app certify     --b {1,2} (--n N | --n-range ...)
    python -m app asymptote   --family F (--n N | --n-range ...)
    python -m app simulate    --family F --n N [--t-end T] [--dt D] [--history SPEC]
    python -m app stablecheck [--family F] (--n N | --n-range ...) [--box ...] [--lemma-disk]

Exit codes: 0 success, 1 usage error, 2 certification failure or NONEMPTY
stability window, 3 numeric error.
"""

import argparse
import logging
import re
import sys
from typing import List, Optional

from pydantic import ValidationError

from . import __version__
from .config import Settings, load_settings
from .exceptions import SpectralError, UsageError
from .integrator import HistorySpec
from .report import (
    ReportManager,
    SpectrumReport,
    run_asymptote,
    run_certify,
    run_simulate,
    run_spectrum,
    run_stablecheck,
)
from .rootfinder import Rectangle
from .symbols import FamilyKind, SymbolFamily

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CERTIFICATION = 2
EXIT_NUMERIC = 3

# flags whose values may start with '-'
_VALUE_FLAGS = ("--box", "--n-range")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_n_range(text: str) -> List[int]:
    """
    'a:b' is every integer in [a, b]; 'a:b:log' is a, 10a, 100a, ... up to b.
    """
    parts = text.split(":")
    try:
        if len(parts) == 2:
            a, b = int(parts[0]), int(parts[1])
            log = False
        elif len(parts) == 3 and parts[2] == "log":
            a, b = int(parts[0]), int(parts[1])
            log = True
        else:
            raise ValueError(text)
    except ValueError:
        raise UsageError(f"Cannot parse --n-range '{text}' (expected a:b or a:b:log)")
    if a < 1 or b < a:
        raise UsageError(f"--n-range needs 1 <= a <= b, got {text}")

    if not log:
        return list(range(a, b + 1))
    ns, n = [], a
    while n <= b:
        ns.append(n)
        n *= 10
    return ns


def parse_box(text: str) -> Rectangle:
    values = text.split(",")
    if len(values) != 4:
        raise UsageError(f"--box needs four comma-separated reals, got '{text}'")
    try:
        return Rectangle.from_bounds(float(v) for v in values)
    except ValueError as e:
        raise UsageError(f"Invalid --box '{text}': {e}")


def _normalize_argv(argv: List[str]) -> List[str]:
    """Join '--box -1,...' into '--box=-1,...' so negative values parse."""
    result, i = [], 0
    while i < len(argv):
        arg = argv[i]
        if arg in _VALUE_FLAGS and i + 1 < len(argv) and re.match(r"^-\d|^-\.", argv[i + 1]):
            result.append(f"{arg}={argv[i + 1]}")
            i += 2
            continue
        result.append(arg)
        i += 1
    return result


def _add_modes(parser: argparse.ArgumentParser, required: bool = True) -> None:
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--n", type=int, help="Single mode index")
    group.add_argument("--n-range", help="a:b (inclusive) or a:b:log (decades)")


def _add_output(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=["csv", "json", "both"], default="csv", help="Output format")
    parser.add_argument("--output", help="Output path (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quasiroots", description="Characteristic roots of delay-PDE modal equations")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key=value settings file")
    parser.add_argument("--tol", type=float, help="Relative residual for refined roots")
    parser.add_argument("--samples", type=int, help="Minimum contour samples")
    parser.add_argument("--workers", type=int, help="Threads for mode sweeps")
    parser.add_argument("--theta", type=float, default=2.0, help="Coefficient exponent, mu = n**theta")
    parser.add_argument("--h", type=float, default=1.0, help="Delay")
    parser.add_argument("--log-level", help="Logging level")

    families = [kind.value for kind in FamilyKind]
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    spectrum = commands.add_parser("spectrum", help="Roots of each mode inside a box")
    spectrum.add_argument("--family", required=True, choices=families)
    _add_modes(spectrum)
    spectrum.add_argument("--box", help="x_min,x_max,y_min,y_max")
    _add_output(spectrum)

    certify = commands.add_parser("certify", help="Certify the unstable root (b=1 parabolic, b=2 hyperbolic)")
    certify.add_argument("--b", type=int, required=True, choices=[1, 2])
    _add_modes(certify)
    _add_output(certify)

    asymptote = commands.add_parser("asymptote", help="Compare predicted and found real parts")
    asymptote.add_argument("--family", required=True, choices=families)
    _add_modes(asymptote)
    _add_output(asymptote)

    simulate = commands.add_parser("simulate", help="Integrate one mode and fit its growth rate")
    simulate.add_argument("--family", required=True, choices=families)
    simulate.add_argument("--n", type=int, required=True)
    simulate.add_argument("--t-end", type=float, help="Final time (default 80 delays)")
    simulate.add_argument("--dt", type=float, default=0.01)
    simulate.add_argument("--history", default="constant:1", help="constant:c | sinusoid:A,f,phi | polynomial:c0,c1,...")
    simulate.add_argument("--derivative-history", help="History of T' for second-order families")
    simulate.add_argument("--box", help="Window for the abscissa comparison")
    simulate.add_argument("--no-compare", action="store_true", help="Skip the abscissa comparison")
    simulate.add_argument("--trajectory", help="Write the trajectory columns to this file")
    _add_output(simulate)

    stablecheck = commands.add_parser("stablecheck", help="Check that a window holds no roots")
    stablecheck.add_argument("--family", default=FamilyKind.STABLE_PARABOLIC_DELAY.value, choices=families)
    _add_modes(stablecheck)
    stablecheck.add_argument("--box", help="x_min,x_max,y_min,y_max (default 0.5,40,-200,200)")
    stablecheck.add_argument("--lemma-disk", action="store_true", help="Count inside each mode's Lemma disk")
    _add_output(stablecheck)

    return parser


def _modes(args) -> List[int]:
    if args.n is not None:
        if args.n < 1:
            raise UsageError(f"--n must be >= 1, got {args.n}")
        return [args.n]
    return parse_n_range(args.n_range)


def _run(args, settings: Settings) -> SpectrumReport:
    box = parse_box(args.box) if getattr(args, "box", None) else None

    if args.command == "certify":
        return run_certify(args.b, _modes(args), settings, theta=args.theta)

    family = SymbolFamily(kind=FamilyKind.from_token(args.family), h=args.h, theta=args.theta)
    if args.command == "spectrum":
        return run_spectrum(family, _modes(args), settings, box)
    if args.command == "asymptote":
        return run_asymptote(family, _modes(args), settings)
    if args.command == "stablecheck":
        return run_stablecheck(family, _modes(args), settings, box, args.lemma_disk)

    history = HistorySpec.parse(args.history, args.derivative_history)
    return run_simulate(
        family, args.n, settings, args.t_end, args.dt, history,
        box=box, compare=not args.no_compare, trajectory_path=args.trajectory,
    )


def _emit(report: SpectrumReport, args, manager: ReportManager) -> None:
    if args.output:
        for path in manager.write(report, args.output, args.format):
            print(path)
        return
    if args.format in ("csv", "both"):
        text = manager.to_csv(report) if report.command == "spectrum" else manager.table_to_csv(report)
        sys.stdout.write(text)
    if args.format in ("json", "both"):
        sys.stdout.write(manager.to_json(report) + "\n")


def _exit_code(report: SpectrumReport) -> int:
    if report.command == "certify" and report.meta.get("failures"):
        for failure in report.meta["failures"]:
            logger.error(f"n={failure['n']}: {failure['error']}: {failure['message']}")
        return EXIT_CERTIFICATION
    if report.command == "stablecheck" and report.meta.get("verdict") == "NONEMPTY":
        return EXIT_CERTIFICATION
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Run the command line; returns the process exit code."""
    argv = _normalize_argv(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        settings = load_settings(
            args.config,
            newton_tol=args.tol,
            boundary_samples=args.samples,
            workers=args.workers,
            log_level=args.log_level,
        )
        logging.basicConfig(
            level=getattr(logging, settings.log_level.upper(), logging.INFO),
            format="%(asctime)s %(name)s %(levelname)s %(message)s",
            stream=sys.stderr,
        )
        report = _run(args, settings)
        _emit(report, args, ReportManager())
    except (UsageError, ValidationError) as e:
        logger.error(str(e))
        print(f"quasiroots: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SpectralError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"quasiroots: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code

    return _exit_code(report)
