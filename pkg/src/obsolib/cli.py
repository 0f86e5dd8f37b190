"""Command-line entry point: ``obsolib <command> [options]``.

Exit status: 0 ok, 1 usage error, 2 data error, 3 numerical
non-convergence, 4 verification failure.
"""
from __future__ import annotations

import argparse
import io
import json
import re
import sys

from . import report as rpt
from . import verify as vfy
from .dist import NegBinModel
from .errors import ConvergenceError, DataError, DomainError, ObsolibError, TailUnderflowError
from .ingest import DEFAULT_AGE_CAP, FORMATS, read_ages, write_records
from .sampling import simulate_negbin

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3, 4

COMMANDS = ("describe", "fit", "tails", "risk", "compare", "simulate", "report", "verify")
_SECTIONS = {
    "describe": ("stats",),
    "fit": ("fit",),
    "compare": ("compare",),
    "tails": ("tails",),
    "risk": ("risk",),
    "report": rpt.SECTIONS,
}
_RANGE_RE = re.compile(r"^\s*(\d+)\s*\.\.\s*(\d+)\s*(?::\s*(\d+)\s*)?$")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_ages(text: str) -> tuple[int, ...]:
    """``A..B:STEP`` (inclusive, STEP defaults to 1) or a comma list."""
    m = _RANGE_RE.match(text)
    if m:
        lo, hi, step = int(m.group(1)), int(m.group(2)), int(m.group(3) or 1)
        if step < 1 or hi < lo:
            raise UsageError(f"bad age range {text!r}")
        return tuple(range(lo, hi + 1, step))
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"bad age grid {text!r}; use A..B:STEP or a comma list") from None


def parse_probs(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"bad probability list {text!r}") from None


def parse_seed(text: str) -> int:
    try:
        seed = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="obsolib", description="Citation-age obsolescence models: fits, tails and risk measures.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    def output_flags(p):
        p.add_argument("--out", help="write output here instead of stdout")
        group = p.add_mutually_exclusive_group()
        group.add_argument("--json", dest="output", action="store_const", const="json")
        group.add_argument("--csv", dest="output", action="store_const", const="csv")
        group.add_argument("--table", dest="output", action="store_const", const="table")
        p.set_defaults(output="table")

    def input_flags(p):
        p.add_argument("--input", default="-", help="CSV file, or - for stdin (default)")
        p.add_argument("--format", choices=FORMATS, default="records", help="input layout")
        p.add_argument("--age-cap", type=int, default=DEFAULT_AGE_CAP)
        p.add_argument("--lenient", action="store_true", help="skip bad rows instead of failing")

    def model_flags(p):
        p.add_argument("--alpha", type=float, help="NB shape; with --beta, skips reading data")
        p.add_argument("--beta", type=float, help="NB rate")

    def grid_flags(p, ages=True, probs=True):
        if ages:
            p.add_argument("--ages", type=parse_ages, default=rpt.DEFAULT_AGES, help="A..B:STEP or comma list")
        if probs:
            p.add_argument("--probs", type=parse_probs, default=rpt.DEFAULT_PROBS, help="comma list in (0, 1)")

    helps = {
        "describe": "descriptive statistics per dataset",
        "fit": "Poisson and NB parameters with AIC",
        "compare": "full model-comparison records",
        "tails": "survival and mortality on an age grid",
        "risk": "VaR and TVaR on a probability grid",
        "report": "everything, plus verification checks",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        input_flags(p)
        output_flags(p)
        if name in ("tails", "risk", "report"):
            model_flags(p)
            grid_flags(p, ages=name != "risk", probs=name != "tails")

    p = sub.add_parser("simulate", help="synthetic records CSV from an NB model")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=parse_seed, required=True)
    p.add_argument("--journal", default="SIM")
    p.add_argument("--category", default="SIM")
    p.add_argument("--out")

    p = sub.add_parser("verify", help="run the oracle-equivalence suites")
    p.add_argument("--quick", action="store_true", help="smaller samples, for smoke tests")
    output_flags(p)
    return parser


def _model_from_args(args):
    alpha, beta = getattr(args, "alpha", None), getattr(args, "beta", None)
    if alpha is None and beta is None:
        return None
    if alpha is None or beta is None:
        raise UsageError("--alpha and --beta must be given together")
    try:
        return NegBinModel(alpha, beta)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _read_input(args, stdin):
    if args.input == "-":
        stream = stdin.buffer if hasattr(stdin, "buffer") else stdin
        return read_ages(stream, args.format, age_cap=args.age_cap, lenient=args.lenient)
    try:
        with open(args.input, "rb") as fh:
            return read_ages(fh, args.format, age_cap=args.age_cap, lenient=args.lenient)
    except OSError as exc:
        raise DataError(f"cannot read {args.input}: {exc.strerror}") from None


def _emit(data: bytes, out, stdout):
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
    elif hasattr(stdout, "buffer"):
        stdout.flush()
        stdout.buffer.write(data)
        stdout.buffer.flush()
    else:
        stdout.write(data.decode("utf-8"))


def _run_simulate(args, stdout):
    if args.n < 1:
        raise UsageError("--n must be a positive integer")
    try:
        ages = simulate_negbin(args.alpha, args.beta, args.n, args.seed)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    buf = io.StringIO()
    write_records(args.journal, args.category, ages.tolist(), buf)
    _emit(buf.getvalue().encode("utf-8"), args.out, stdout)
    return EXIT_OK


def _run_verify(args, stdout):
    checks = vfy.run_all(quick=args.quick)
    if args.output == "json":
        data = [{"name": c.name, "max_deviation": c.max_deviation, "tolerance": c.tolerance, "passed": c.passed}
                for c in checks]
        payload = (json.dumps({"checks": data}, indent=2) + "\n").encode("utf-8")
    else:
        rows = [rpt.check_cells(c) for c in checks]
        headers = ["check", "max dev", "tol", "status"]
        payload = (rpt.csv_bytes(headers, rows) if args.output == "csv"
                   else (rpt.text_table(headers, rows) + "\n").encode("utf-8"))
    _emit(payload, args.out, stdout)
    return EXIT_OK if vfy.all_passed(checks) else EXIT_VERIFY


def _run_study(args, stdin, stdout, stderr):
    model = _model_from_args(args)
    ages = getattr(args, "ages", rpt.DEFAULT_AGES)
    probs = getattr(args, "probs", rpt.DEFAULT_PROBS)
    try:
        rpt.validate_grids(ages, probs)
    except DataError as exc:
        raise UsageError(str(exc)) from None
    if model is not None:
        samples = ()
        options = rpt.StudyOptions(models={"model": model}, verify=args.command == "report")
    else:
        result = _read_input(args, stdin)
        for issue in result.issues:
            print(f"warning: skipped {issue}", file=stderr)
        if not result.samples:
            raise DataError("no usable rows in input")
        samples = result.samples
        options = rpt.StudyOptions(verify=args.command == "report")
    study = rpt.build_study(samples, ages, probs, options)
    sections = _SECTIONS[args.command]
    _emit(rpt.render(study, args.output, sections), args.out, stdout)
    wanted = {"fit" if s == "compare" else s for s in sections}
    failures = study.numerical_failures(tuple(wanted))
    if failures:
        for dataset_id, section in failures:
            print(f"numerical error: {dataset_id}: {section} did not converge", file=stderr)
        return EXIT_NUMERIC
    if args.command == "report" and not study.verification_passed:
        return EXIT_VERIFY
    return EXIT_OK


def main(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command == "simulate":
            return _run_simulate(args, stdout)
        if args.command == "verify":
            return _run_verify(args, stdout)
        return _run_study(args, stdin, stdout, stderr)
    except UsageError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except (ConvergenceError, TailUnderflowError) as exc:
        print(f"numerical error: {exc}", file=stderr)
        return EXIT_NUMERIC
    except (DataError, DomainError) as exc:
        print(f"data error: {exc}", file=stderr)
        return EXIT_DATA
    except ObsolibError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_DATA
    except SystemExit as exc:
        # --help exits through argparse
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
