"""
Deterministic self-test grid.

Every task is keyed by (kind, params, seed) and builds its own instance from the seed, so a grid
run produces the same reports, in the same order, with one worker or many.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Callable

import numpy as np

from csrr_proj import settings
from csrr_app import instances
from csrr_app.chern_simons import (
    CSClass,
    Modulus,
    check_flat_closed,
    check_transgression,
    chern_from_newton,
    gauge_delta,
    newton_from_chern,
)
from csrr_app.errors import EngineError
from csrr_app.exterior import Form, dlog
from csrr_app.logconn_p1 import gm_words, mutate_residue
from csrr_app.matform import MatForm, check_bianchi, determinant
from csrr_app.numeric_oracle import NumericConfig, verify_prop44_lemma45, verify_rr_numeric
from csrr_app.pushforward import FiniteAlgebra, pushforward_build, pushforward_checks
from csrr_app.reports import Status, Stopwatch, VerificationReport, status_of
from csrr_app.rr_engine import check_lemma_4_6, check_pj_multilinearity, verify_rr_symbolic

logger = logging.getLogger(__name__)

BASIC_FAMILIES = ("scalar", "diagonal", "tensor")
NON_BASIC_FAMILIES = ("generic", "constant-residues")
GRID_KINDS = ("rr-symbolic", "rr-numeric")
CONSISTENCY_FAMILIES = ("generic", "scalar", "diagonal", "tensor", "constant-points")

# Instance counts at the default number of seeds.
GRID_COUNTS = {
    "transgression": 100,
    "flat-closed": 30,
    "gauge": 30,
    "chern-newton": 20,
    "lemma-4.3": 50,
    "consistency": 200,
    "pushforward": 30,
    "splitting": 50,
}


@dataclass(frozen=True, order=True)
class Task:
    kind: str
    params: tuple
    seed: int
    numeric: NumericConfig = field(default_factory=NumericConfig, compare=False)


def _scaled(kind: str, seeds: int) -> int:
    return max(1, math.ceil(GRID_COUNTS[kind] * seeds / settings.SELFTEST_SEEDS))


def build_tasks(seeds: int, base_seed: int = 0, numeric: NumericConfig | None = None) -> list[Task]:
    numeric = numeric or NumericConfig()
    tasks: list[Task] = []

    def add(kind: str, params: tuple, seed: int) -> None:
        tasks.append(Task(kind, params, base_seed + seed, numeric.with_seed(base_seed + seed)))

    for s in range(_scaled("transgression", seeds)):
        add("transgression", (1 + s % 3, 1 + (s // 3) % 3), s)
    for s in range(_scaled("flat-closed", seeds)):
        add("flat-closed", (1 + s % 2, 1 + s % 3), s)
    for s in range(_scaled("gauge", seeds)):
        add("gauge", (1 + s % 3,), s)
    for s in range(_scaled("chern-newton", seeds)):
        add("chern-newton", (1 + s % 3,), s)
    for s in range(_scaled("lemma-4.3", seeds)):
        add("lemma-4.3", (1 + s % 2, 1 + s % 3, CONSISTENCY_FAMILIES[s % len(CONSISTENCY_FAMILIES)]), s)
    for s in range(_scaled("consistency", seeds)):
        add("consistency", (1 + s % 2, 1 + (s // 2) % 3, CONSISTENCY_FAMILIES[s % len(CONSISTENCY_FAMILIES)]), s)
    for s in range(seeds):
        family = BASIC_FAMILIES[s % len(BASIC_FAMILIES)]
        for rank in (1, 2):
            for delta in (1, 2, 3):
                for n in (1, 2):
                    add("rr-symbolic", (rank, delta, n, family), s)
                    add("rr-numeric", (rank, delta, n, family), s)
    # the identity holds without basic curvature too
    for s in range(seeds):
        add("rr-symbolic", (2, 2 + s % 2, 1 + (s // 2) % 2, NON_BASIC_FAMILIES[s % 2]), s)
    add("rr-symbolic", (2, 3, 1, "constant-residues"), 0)
    for s in range(seeds):
        add("rr-numeric", (1 + s % 2, 4, 1 + (s // 2) % 2, BASIC_FAMILIES[s % len(BASIC_FAMILIES)]), s)
    add("rr-worked", (), 0)
    add("rr-mutation", (1,), 0)
    add("rr-mutation", (2,), 0)
    for delta in (1, 2, 3, 4):
        for size in range(1, delta + 1):
            for subset in combinations(range(1, delta + 1), size):
                add("prop-4.4", (delta, subset), 0)
    for r in (1, 2, 3):
        add("lemma-4.6", (r,), 0)
    for s in range(_scaled("pushforward", seeds)):
        add("pushforward", (2 + s % 3, 1 + (s // 3) % 2), s)
    add("pushforward-worked", (), 0)
    add("pushforward-split", (), 0)
    for s in range(_scaled("splitting", seeds)):
        add("splitting", (1 + s % 2, 1 + s % 3), s)
    return tasks


def _transgression(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    rank, p = task.params
    universe = instances.generic_universe(5 if p == 3 else 4)
    names = universe.variables.names
    a = instances.random_matform(universe, rng, rank, 1, names, rational=bool(rng.integers(0, 2)))
    ok, difference = check_transgression(a, p)
    ok = ok and check_bianchi(a)
    return [VerificationReport("transgression", {"N": rank, "p": p}, status_of(ok), None if ok else difference)]


def _flat_closed(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    rank, p = task.params
    universe = instances.generic_universe(3)
    names = universe.variables.names
    if rank == 1 and rng.integers(0, 2):
        a = instances.dlog_connection(universe, rng, names)
    else:
        a = instances.flat_connection(universe, rng, rank, names)
    ok, derivative = check_flat_closed(a, p)
    return [VerificationReport("flat-closed", {"N": rank, "p": p}, status_of(ok), None if ok else derivative)]


def _closed_status(delta: Form) -> Status:
    if delta.is_zero:
        return Status.PASS
    return Status.PASS_MOD_EXACT if delta.d().is_zero else Status.FAIL


def _gauge(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    (rank,) = task.params
    universe = instances.generic_universe(6)
    names = universe.variables.names
    a = instances.random_matform(universe, rng, rank, 1, names[:3])
    g = instances.random_invertible(universe, rng, rank, names[:3])
    first = gauge_delta(a, g, 1)
    unit = determinant(g)
    reports = [
        VerificationReport("gauge-nw1", {"N": rank, "unit": unit}, status_of(first == dlog(unit, universe))),
        VerificationReport("gauge-nw2", {"N": rank}, _closed_status(gauge_delta(a, g, 2))),
    ]
    # a 5-form needs all six differentials to be nonzero after d
    a = instances.random_matform(universe, rng, rank, 1, names)
    g = instances.random_unipotent(universe, rng, rank, names)
    reports.append(VerificationReport("gauge-nw3", {"N": rank}, _closed_status(gauge_delta(a, g, 3))))
    return reports


def _chern_newton(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    (n,) = task.params
    universe = instances.generic_universe(5)
    names = universe.variables.names
    classes = [
        CSClass(k, instances.random_form(universe, rng, 2 * k - 1, names), Modulus.for_degree(k))
        for k in range(1, n + 1)
    ]
    round_trip = newton_from_chern(chern_from_newton(classes, n), n)
    ok = all(x.form == y.form for x, y in zip(classes, round_trip))
    return [VerificationReport("chern-newton", {"n": n}, status_of(ok))]


def _lemma_4_3(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    rank, delta, family = task.params
    connection = instances.random_connection(rank, delta, rng, family)
    failures = [w for w in gm_words(4) if not connection.check_lemma_4_3(w).ok]
    return [
        VerificationReport(
            "lemma-4.3",
            {"N": rank, "delta": delta, "family": family, "failing_words": [" ".join(w) for w in failures]},
            status_of(not failures),
        )
    ]


def _consistency(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    rank, delta, family = task.params
    connection = instances.random_connection(rank, delta, rng, family)
    verdict = connection.check_basic()
    compatibility = connection.check_gm_compatibility()
    connection.nw_gm(1)
    ok = compatibility.ok == verdict.basic and (verdict.basic or family == "generic")
    return [
        VerificationReport(
            "consistency",
            {"N": rank, "delta": delta, "family": family, "basic": verdict.basic},
            status_of(ok),
            verdict.witness,
        )
    ]


def _rr_symbolic(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    rank, delta, n, family = task.params
    connection = instances.random_connection(rank, delta, rng, family)
    report = verify_rr_symbolic(connection, n, task.seed)
    multilinear = check_pj_multilinearity(connection, n)
    if not multilinear.ok:
        report.status = Status.FAIL
        report.witness = multilinear.witness
    report.params["family"] = family
    return [report]


def _rr_numeric(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    rank, delta, n, family = task.params
    connection = instances.random_connection(rank, delta, rng, family)
    report = verify_rr_numeric(connection, n, task.numeric)
    report.params["family"] = family
    return [report]


def _rr_worked(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    connection = instances.worked_connection()
    universe = connection.universe
    expected = (
        connection.base_dlog(1, 2)
        .wedge(Form.from_terms(universe, [(1, ["dt1", "dt2"])]))
        * -3
    )
    value = connection.nw_gm(2)
    report = verify_rr_symbolic(connection, 2, task.seed)
    if value != expected:
        report.status = Status.FAIL
        report.witness = value - expected
    report.check = "rr-worked"
    return [report]


def _rr_mutation(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    (n,) = task.params
    if n == 1:
        original = instances.worked_connection(with_phi=False)
        mutated = mutate_residue(original, 1, 0, 0, 1)
    else:
        original = instances.mutation_connection()
        mutated = mutate_residue(original, 1, 0, 1, 1)
    report = verify_rr_numeric(mutated, n, task.numeric, gm_connection=original)
    detected = report.status is Status.FAIL
    return [
        VerificationReport(
            "rr-mutation",
            {"n": n, "max_error": report.params["max_error"]},
            status_of(detected),
            seed=report.seed,
        )
    ]


def _prop_4_4(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    delta, subset = task.params
    return [verify_prop44_lemma45(delta, subset, task.numeric)]


def _lemma_4_6(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    (r,) = task.params
    return [check_lemma_4_6(r)]


def _pushforward(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    degree, rank = task.params
    return [pushforward_checks(instances.random_finite_algebra(rng, degree, rank), task.seed)]


def _pushforward_worked(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    universe = instances.pushforward_universe()
    variables = universe.variables
    s = variables.var("s")
    algebra = FiniteAlgebra(universe, [-s, 0, 1])
    data = pushforward_build(algebra)
    half = Form.from_terms(universe, [(1 / (2 * s), ["ds"])])
    zero = Form.zero(universe)
    expected_b = [[zero, zero], [zero, half]]
    ok = [list(row) for row in data.connection.entries] == expected_b
    ok = ok and data.gram.scalars() == [[variables.const(2), variables.zero], [variables.zero, 2 * s]]
    report = pushforward_checks(algebra, task.seed)
    if not ok:
        report.status = Status.FAIL
    report.check = "pushforward-worked"
    return [report]


def _pushforward_split(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    universe = instances.pushforward_universe()
    ds = Form.from_terms(universe, [(1, ["ds"])])
    constant = instances.split_algebra([1, 2], [MatForm(universe, [[Form.zero(universe)]]), MatForm(universe, [[ds]])])
    moving = instances.split_algebra(["s", "s + 1"], [MatForm(universe, [[ds]])])
    reports = []
    for name, algebra in (("constant-roots", constant), ("moving-roots", moving)):
        report = pushforward_checks(algebra, task.seed)
        report.params["case"] = name
        reports.append(report)
    return reports


def _splitting(task: Task, rng: np.random.Generator) -> list[VerificationReport]:
    rank, delta = task.params
    family = BASIC_FAMILIES[task.seed % len(BASIC_FAMILIES)]
    connection = instances.random_connection(rank, delta, rng, family)
    perturbation = instances.random_splitting_perturbation(connection, rng)
    changed = connection.perturb_splitting(perturbation)
    original = connection.gm
    reference = original.phi.trace() - original.b.trace()
    ok = changed.trace_difference == reference
    return [
        VerificationReport(
            "splitting",
            {"N": rank, "delta": delta, "family": family},
            status_of(ok),
            None if ok else changed.trace_difference - reference,
        )
    ]


RUNNERS: dict[str, Callable[[Task, np.random.Generator], list[VerificationReport]]] = {
    "transgression": _transgression,
    "flat-closed": _flat_closed,
    "gauge": _gauge,
    "chern-newton": _chern_newton,
    "lemma-4.3": _lemma_4_3,
    "consistency": _consistency,
    "rr-symbolic": _rr_symbolic,
    "rr-numeric": _rr_numeric,
    "rr-worked": _rr_worked,
    "rr-mutation": _rr_mutation,
    "prop-4.4": _prop_4_4,
    "lemma-4.6": _lemma_4_6,
    "pushforward": _pushforward,
    "pushforward-worked": _pushforward_worked,
    "pushforward-split": _pushforward_split,
    "splitting": _splitting,
}


def run_task(task: Task) -> list[VerificationReport]:
    watch = Stopwatch()
    rng = np.random.default_rng(task.seed)
    try:
        reports = RUNNERS[task.kind](task, rng)
    except EngineError as exc:
        logger.exception("task %s %s seed=%d raised", task.kind, task.params, task.seed)
        params = {"params": list(task.params), "error": type(exc).__name__, "message": str(exc)}
        reports = [VerificationReport(task.kind, params, Status.FAIL)]
    for report in reports:
        report.seed = task.seed
        report.millis = watch.millis
    return [report.detached() for report in reports]


def run_suite(
    seeds: int | None = None,
    base_seed: int | None = None,
    workers: int | None = None,
    numeric: NumericConfig | None = None,
    kinds: set[str] | None = None,
    grid: tuple[int, int, int] | None = None,
) -> list[VerificationReport]:
    seeds = settings.SELFTEST_SEEDS if seeds is None else seeds
    base_seed = settings.DEFAULT_SEED if base_seed is None else base_seed
    workers = settings.WORKERS if workers is None else workers
    tasks = build_tasks(seeds, base_seed, numeric)
    if kinds:
        tasks = [t for t in tasks if t.kind in kinds]
    if grid:
        tasks = [t for t in tasks if t.kind not in GRID_KINDS or t.params[:3] == grid]
    logger.info("self-test: %d tasks on %d worker(s)", len(tasks), workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(run_task, tasks, chunksize=4))
    else:
        batches = [run_task(task) for task in tasks]
    return [report for batch in batches for report in batch]


def summarize(reports: list[VerificationReport]) -> dict[str, Any]:
    counts: dict[str, dict[str, int]] = {}
    for report in reports:
        bucket = counts.setdefault(report.check, {})
        bucket[report.status.value] = bucket.get(report.status.value, 0) + 1
    return counts

