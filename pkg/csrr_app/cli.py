"""
Command-line entry point.

Reports are printed to standard output as a JSON array; diagnostics go to standard error.
Exit codes: 0 when every report passes (possibly modulo dlog units or exact forms), 1 when any
report fails, 2 on unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import logging
import logging.config
import sys
from dataclasses import replace
from itertools import combinations
from typing import Sequence

from csrr_proj import settings
from csrr_app.chern_simons import check_transgression, chern_from_newton
from csrr_app.errors import EngineError, ParseError, SchemaError
from csrr_app.logconn_p1 import gm_words
from csrr_app.numeric_oracle import NumericConfig, verify_prop44_lemma45, verify_rr_numeric
from csrr_app.parsing import ProblemFile, load_problem
from csrr_app.pushforward import pushforward_checks
from csrr_app.reports import Status, Stopwatch, VerificationReport, all_passed, emit_report, status_of
from csrr_app.rr_engine import check_lemma_4_6, verify_rr_symbolic
from csrr_app.selftest import run_suite, summarize

logger = logging.getLogger(__name__)


class InputError(Exception):
    pass


def _grid(value: str) -> tuple[int, int, int]:
    try:
        rank, delta, n = (int(part) for part in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N,delta,n, got {value!r}") from None
    return rank, delta, n


def _add_global_options(parser: argparse.ArgumentParser, default=None) -> None:
    parser.add_argument("--seed", type=int, default=default, help="random seed (default from settings)")
    parser.add_argument("--tol", type=float, default=default, help="numeric tolerance")
    parser.add_argument("--samples", type=int, default=default, help="numeric samples per check")
    parser.add_argument("--grid", type=_grid, default=default, help="restrict RR grid runs to one N,delta,n point")
    parser.add_argument("--workers", type=int, default=default, help="worker processes for grid runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csrr", description="Chern-Simons Riemann-Roch verification engine")
    _add_global_options(parser)
    # the same options after the subcommand; SUPPRESS keeps a value given before it
    common = argparse.ArgumentParser(add_help=False)
    _add_global_options(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("check-basic", "gm", "pushforward"):
        cmd = sub.add_parser(name, parents=[common])
        cmd.add_argument("problem", help="problem file (JSON)")
    cs = sub.add_parser("cs", parents=[common])
    cs.add_argument("problem")
    cs.add_argument("--n", type=int, default=2, help="highest Newton class")

    gm = sub.choices["gm"]
    gm.add_argument("--n", type=int, default=1)

    rr = sub.add_parser("verify-rr", parents=[common])
    rr.add_argument("problem")
    rr.add_argument("--n", type=int, default=1)
    rr.add_argument("--symbolic", action="store_true")
    rr.add_argument("--numeric", action="store_true")

    identities = sub.add_parser("verify-identities", parents=[common])
    identities.add_argument("problem", nargs="?")
    identities.add_argument("--lemma", choices=["4.3", "4.4", "4.6"], action="append")
    identities.add_argument("--delta", type=int, default=None, help="number of points for 4.4")
    identities.add_argument("--r", type=int, default=3, help="largest r for 4.6")
    identities.add_argument("--len", type=int, default=4, dest="length", help="longest word for 4.3")

    selftest = sub.add_parser("selftest", parents=[common])
    selftest.add_argument("--seeds", type=int, default=None)
    selftest.add_argument("--only", action="append", help="restrict to task kinds")
    return parser


def _numeric_overrides(args: argparse.Namespace) -> dict:
    names = ("seed", "tol", "samples")
    return {name: getattr(args, name) for name in names if getattr(args, name) is not None}


def _problem(args: argparse.Namespace, required: bool = True) -> ProblemFile | None:
    path = getattr(args, "problem", None)
    if path is None:
        if required:
            raise InputError(f"{args.command} needs a problem file")
        return None
    try:
        problem = load_problem(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except (ParseError, SchemaError) as exc:
        raise InputError(str(exc)) from None
    overrides = _numeric_overrides(args)
    if overrides:
        problem.numeric = replace(problem.numeric, **overrides)
    return problem


def _connection(problem: ProblemFile):
    if problem.connection is None:
        raise InputError("problem file has no connection block")
    return problem.connection


def _check_basic(args, problem) -> list[VerificationReport]:
    watch = Stopwatch()
    connection = _connection(problem)
    verdict = connection.check_basic()
    return [
        VerificationReport(
            "check-basic",
            {"N": connection.rank, "delta": connection.delta, "basic": verdict.basic},
            status_of(verdict.basic),
            verdict.witness,
            millis=watch.millis,
        )
    ]


def _cs(args, problem) -> list[VerificationReport]:
    connection = _connection(problem)
    total = connection.total_matrix()
    reports = []
    classes = []
    for n in range(1, args.n + 1):
        watch = Stopwatch()
        nw = connection.nw_bundle(n)
        classes.append(nw)
        ok, difference = check_transgression(total, n)
        reports.append(
            VerificationReport(
                "cs",
                {"n": n, "modulus": nw.modulus, "form": nw.form},
                status_of(ok),
                None if ok else difference,
                millis=watch.millis,
            )
        )
    for w in chern_from_newton(classes, args.n):
        reports.append(VerificationReport("cs-chern", {"n": w.degree, "modulus": w.modulus, "form": w.form}, Status.PASS))
    return reports


def _gm(args, problem) -> list[VerificationReport]:
    connection = _connection(problem)
    watch = Stopwatch()
    data = connection.gm
    value = connection.nw_gm(args.n)
    compatibility = connection.check_gm_compatibility()
    return [
        VerificationReport("gm", {"n": args.n, "B": data.b, "nw_gm": value}, Status.PASS, millis=watch.millis),
        VerificationReport(
            "gm-compatibility",
            {"N": connection.rank, "delta": connection.delta},
            status_of(compatibility.ok),
            compatibility.witness,
        ),
    ]


def _verify_rr(args, problem) -> list[VerificationReport]:
    connection = _connection(problem)
    both = not args.symbolic and not args.numeric
    reports = []
    if args.symbolic or both:
        reports.append(verify_rr_symbolic(connection, args.n, problem.numeric.seed))
    if args.numeric or both:
        reports.append(verify_rr_numeric(connection, args.n, problem.numeric))
    return reports


def _verify_identities(args, problem) -> list[VerificationReport]:
    lemmas = args.lemma or ["4.3", "4.4", "4.6"]
    reports = []
    if "4.3" in lemmas:
        if problem is None or problem.connection is None:
            raise InputError("lemma 4.3 needs a problem file with a connection")
        watch = Stopwatch()
        failures = [w for w in gm_words(args.length) if not problem.connection.check_lemma_4_3(w).ok]
        reports.append(
            VerificationReport(
                "lemma-4.3",
                {"max_length": args.length, "failing_words": [" ".join(w) for w in failures]},
                status_of(not failures),
                millis=watch.millis,
            )
        )
    if "4.4" in lemmas:
        delta = args.delta or (problem.connection.delta if problem and problem.connection else None)
        if delta is None:
            raise InputError("proposition 4.4 needs --delta or a connection")
        numeric = problem.numeric if problem else None
        for size in range(1, delta + 1):
            for subset in combinations(range(1, delta + 1), size):
                reports.append(verify_prop44_lemma45(delta, subset, numeric))
    if "4.6" in lemmas:
        reports.extend(check_lemma_4_6(r) for r in range(1, args.r + 1))
    return reports


def _pushforward(args, problem) -> list[VerificationReport]:
    if problem.pushforward is None:
        raise InputError("problem file has no pushforward block")
    return [pushforward_checks(problem.pushforward, problem.numeric.seed)]


def _selftest(args, problem) -> list[VerificationReport]:
    reports = run_suite(
        seeds=args.seeds,
        base_seed=args.seed,
        workers=args.workers,
        numeric=replace(NumericConfig(), **_numeric_overrides(args)),
        kinds=set(args.only) if args.only else None,
        grid=args.grid,
    )
    for check, counts in sorted(summarize(reports).items()):
        logger.info("%s: %s", check, counts)
    return reports


HANDLERS = {
    "check-basic": _check_basic,
    "cs": _cs,
    "gm": _gm,
    "verify-rr": _verify_rr,
    "verify-identities": _verify_identities,
    "pushforward": _pushforward,
    "selftest": _selftest,
}


def run(args: argparse.Namespace) -> list[VerificationReport]:
    required = args.command not in ("selftest", "verify-identities")
    problem = None if args.command == "selftest" else _problem(args, required)
    try:
        return HANDLERS[args.command](args, problem)
    except InputError:
        raise
    except EngineError as exc:
        logger.error("%s failed: %s", args.command, exc)
        params = {"error": type(exc).__name__, "message": str(exc)}
        return [VerificationReport(args.command, params, Status.FAIL)]


def main(argv: Sequence[str] | None = None) -> int:
    logging.config.dictConfig(settings.LOGGING)
    args = build_parser().parse_args(argv)
    try:
        reports = run(args)
    except InputError as exc:
        print(f"csrr: {exc}", file=sys.stderr)
        return 2
    print(emit_report(reports))
    return 0 if all_passed(reports) else 1
