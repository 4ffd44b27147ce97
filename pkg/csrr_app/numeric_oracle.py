"""
Independent floating-point evaluation of the direct side of the Riemann-Roch identity.

The roots beta_i of F(z) = sum_tau a_tau prod_{theta != tau} (z - a_theta) - prod_tau (z - a_tau)
are the zeros of the section sum_tau a_tau/(z - a_tau) - 1. The direct side is
    - sum_i (Nw_n(A) pulled back along z = beta_i) + (Nw_n(A) pulled back along z = 0),
with dz replaced by d(beta_i) = sum_nu (d beta_i / d a_nu) da_nu, which comes from implicit
differentiation of F. Everything is sampled at random rational points; a pole or a cluster of
roots triggers a resample.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from csrr_proj import settings
from csrr_app.errors import InvalidConnectionError, PoleError, ResamplingExhaustedError
from csrr_app.exterior import Form, GenUniverse, NumericForm, dlog, eval_numeric_form, wedge_all
from csrr_app.logconn_p1 import FIBER, LogConnectionP1
from csrr_app.ratfun import RatFun, VarKind, VarUniverse
from csrr_app.reports import Stopwatch, VerificationReport, status_of
from csrr_app.rr_engine import prop_4_4_combinatorial, standard_universe

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NumericConfig:
    seed: int = field(default_factory=lambda: settings.DEFAULT_SEED)
    tol: float = field(default_factory=lambda: settings.NUMERIC_TOLERANCE)
    samples: int = field(default_factory=lambda: settings.NUMERIC_SAMPLES)
    sample_range: tuple[int, int] = field(default_factory=lambda: settings.SAMPLE_RANGE)
    denominator_floor: float = field(default_factory=lambda: settings.DENOMINATOR_FLOOR)
    root_separation: float = field(default_factory=lambda: settings.ROOT_SEPARATION)
    backward_error: float = field(default_factory=lambda: settings.ROOT_BACKWARD_ERROR)
    vieta_tol: float = field(default_factory=lambda: settings.VIETA_TOLERANCE)
    collision_margin: float = field(default_factory=lambda: settings.COLLISION_MARGIN)
    max_attempts: int = field(default_factory=lambda: settings.MAX_RESAMPLE_ATTEMPTS)

    def with_seed(self, seed: int) -> NumericConfig:
        return replace(self, seed=seed)


@dataclass(frozen=True)
class RootData:
    roots: np.ndarray
    derivatives: np.ndarray
    names: tuple[str, ...]
    backward_error: float = 0.0
    vieta_residual: float = 0.0


def build_F(points: Sequence[RatFun | Fraction | int], universe: VarUniverse | None = None) -> RatFun:
    """F(z) = sum_tau a_tau prod_{theta != tau}(z - a_theta) - prod_tau(z - a_tau)."""
    if universe is None:
        universe = VarUniverse.build(fiber=FIBER)
    values = [universe.const(p) for p in points]
    for i, a in enumerate(values):
        if a.is_zero:
            raise InvalidConnectionError("a marked point equals 0")
        if any(a == b for b in values[i + 1:]):
            raise InvalidConnectionError("marked points coincide")
    z = universe.var(FIBER)
    total = universe.zero
    full = universe.one
    for tau, a in enumerate(values):
        term = a
        for theta, b in enumerate(values):
            if theta != tau:
                term = term * (z - b)
        total = total + term
        full = full * (z - a)
    return total - full


def _numeric_coefficients(f: RatFun, assign: dict[str, complex], floor: float) -> np.ndarray:
    return np.array([c.eval_numeric(assign, floor) for c in f.coefficients_in(FIBER)], dtype=complex)


def _polish(coefficients: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """One Newton step per root, kept only where it lowers the residual."""
    high_first = coefficients[::-1]
    derivative = np.polyder(high_first)
    polished = roots.copy()
    for i, beta in enumerate(roots):
        slope = np.polyval(derivative, beta)
        if slope == 0:
            continue
        candidate = beta - np.polyval(high_first, beta) / slope
        if abs(np.polyval(high_first, candidate)) < abs(np.polyval(high_first, beta)):
            polished[i] = candidate
    return polished


def _vieta_residual(coefficients: np.ndarray, roots: np.ndarray) -> float:
    """Relative gap between sum(roots) and -c[d-1]/c[d], coefficients lowest degree first."""
    if len(coefficients) < 2:
        return 0.0
    expected = -coefficients[-2] / coefficients[-1]
    return float(abs(np.sum(roots) - expected)) / max(1.0, float(np.sum(np.abs(roots))))


def roots_and_derivatives(
    f: RatFun,
    point_names: Sequence[str],
    assign: dict[str, complex],
    cfg: NumericConfig | None = None,
) -> RootData:
    cfg = cfg or NumericConfig()
    coefficients = _numeric_coefficients(f, assign, cfg.denominator_floor)
    if abs(coefficients[-1]) <= cfg.denominator_floor:
        raise PoleError("leading coefficient of F vanishes")
    roots = _polish(coefficients, np.roots(coefficients[::-1]))
    scale = max(1.0, float(np.max(np.abs(roots))) if roots.size else 1.0)
    magnitudes = np.abs(coefficients)
    worst_backward = 0.0
    for beta in roots:
        powers = np.abs(beta) ** np.arange(len(coefficients))
        backward = abs(np.polyval(coefficients[::-1], beta)) / float(np.dot(magnitudes, powers))
        if backward > cfg.backward_error:
            raise PoleError(f"root {beta} has backward error {backward:.2e}")
        worst_backward = max(worst_backward, backward)
    vieta = _vieta_residual(coefficients, roots)
    if vieta > cfg.vieta_tol:
        raise PoleError(f"root sum misses -c[d-1]/c[d] by {vieta:.2e}")
    for x, y in combinations(roots, 2):
        if abs(x - y) <= cfg.root_separation * scale:
            raise PoleError("roots of F are not separated")
    f_prime = f.derivative(FIBER)
    partials = [f.derivative(name) for name in point_names]
    derivatives = np.zeros((len(roots), len(point_names)), dtype=complex)
    for i, beta in enumerate(roots):
        at_root = dict(assign, **{FIBER: complex(beta)})
        slope = f_prime.eval_numeric(at_root, cfg.denominator_floor)
        if abs(slope) <= cfg.denominator_floor * scale:
            raise PoleError("F' vanishes at a root")
        for k, partial in enumerate(partials):
            derivatives[i, k] = -partial.eval_numeric(at_root, cfg.denominator_floor) / slope
    return RootData(roots, derivatives, tuple(point_names), worst_backward, vieta)


def check_root_derivatives(
    f: RatFun,
    point_names: Sequence[str],
    assign: dict[str, complex],
    step: float = 1e-6,
) -> float:
    """Largest relative gap between implicit derivatives and central finite differences."""
    cfg = NumericConfig()
    base = roots_and_derivatives(f, point_names, assign, cfg)
    worst = 0.0
    for k, name in enumerate(point_names):
        plus = roots_and_derivatives(f, point_names, dict(assign, **{name: assign[name] + step}), cfg).roots
        minus = roots_and_derivatives(f, point_names, dict(assign, **{name: assign[name] - step}), cfg).roots
        for i, beta in enumerate(base.roots):
            forward = plus[np.argmin(np.abs(plus - beta))]
            backward = minus[np.argmin(np.abs(minus - beta))]
            estimate = (forward - backward) / (2 * step)
            gap = abs(estimate - base.derivatives[i, k]) / max(1.0, abs(base.derivatives[i, k]))
            worst = max(worst, gap)
    return worst


def sample_assignment(names: Sequence[str], rng: np.random.Generator, cfg: NumericConfig) -> dict[str, complex]:
    """Distinct nonzero rationals p/q, |p| in the sampling range, q in {1, 2}."""
    low, high = cfg.sample_range
    chosen: dict[str, complex] = {}
    taken: set[Fraction] = set()
    for name in names:
        while True:
            value = Fraction(int(rng.integers(low, high + 1)), int(rng.integers(1, 3)))
            if rng.integers(0, 2):
                value = -value
            if value != 0 and value not in taken:
                break
        taken.add(value)
        chosen[name] = complex(float(value))
    return chosen


def _require_symbolic(connection: LogConnectionP1) -> list[str]:
    names = [connection.points[nu - 1].symbol for nu in connection.symbolic_points]
    if not names:
        raise InvalidConnectionError("numeric evaluation needs symbolic marked points")
    return names


def _check_collisions(roots: np.ndarray, assign: dict[str, complex], names: Sequence[str], cfg: NumericConfig) -> None:
    scale = max(1.0, float(np.max(np.abs(roots))))
    for beta in roots:
        if abs(beta) <= cfg.collision_margin * scale:
            raise PoleError("root of F near 0")
        for name in names:
            if abs(beta - assign[name]) <= cfg.collision_margin * scale:
                raise PoleError(f"root of F near {name}")


def _sampled_names(connection: LogConnectionP1) -> list[str]:
    variables = connection.universe.variables
    return [v.name for v in variables.variables if v.kind is not VarKind.FIBER]


def eval_rhs_direct(
    connection: LogConnectionP1,
    n: int,
    assign: dict[str, complex],
    cfg: NumericConfig | None = None,
    *,
    form: Form | None = None,
    f: RatFun | None = None,
) -> NumericForm:
    """
    Direct side at one sample. `form` (Nw_n of the bundle connection) and `f` may be passed in
    when the caller evaluates many samples of the same connection.
    """
    cfg = cfg or NumericConfig()
    if form is None:
        form = connection.nw_bundle(n).form
    if f is None:
        f = build_F([connection.point_value(nu) for nu in range(1, connection.delta + 1)], connection.universe.variables)
    universe = connection.universe
    names = _require_symbolic(connection)
    data = roots_and_derivatives(f, names, assign, cfg)
    _check_collisions(data.roots, assign, names, cfg)
    z_index = universe.differential(FIBER)
    point_indices = [universe.differential(name) for name in names]
    total = NumericForm(universe)
    for i, beta in enumerate(data.roots):
        tangent = {g: data.derivatives[i, k] for k, g in enumerate(point_indices)}
        value = eval_numeric_form(form, dict(assign, **{FIBER: complex(beta)}), {z_index: tangent}, cfg.denominator_floor)
        total = total - value
    at_zero = eval_numeric_form(form, dict(assign, **{FIBER: 0j}), {z_index: {}}, cfg.denominator_floor)
    return total + at_zero


def _resample(names: Sequence[str], rng: np.random.Generator, cfg: NumericConfig, evaluate):
    for attempt in range(cfg.max_attempts):
        assign = sample_assignment(names, rng, cfg)
        try:
            return assign, evaluate(assign)
        except PoleError as exc:
            logger.debug("resampling after attempt %d: %s", attempt + 1, exc)
    raise ResamplingExhaustedError(f"no admissible sample after {cfg.max_attempts} attempts")


def verify_rr_numeric(
    connection: LogConnectionP1,
    n: int,
    cfg: NumericConfig | None = None,
    gm_connection: LogConnectionP1 | None = None,
) -> VerificationReport:
    """Compare the direct side for `connection` with Nw_n(Phi) - Nw_n(GM) for `gm_connection`."""
    cfg = cfg or NumericConfig()
    watch = Stopwatch()
    gm_connection = gm_connection or connection
    if gm_connection.universe != connection.universe:
        raise InvalidConnectionError("both connections must share a universe")
    _require_symbolic(connection)
    form = connection.nw_bundle(n).form
    gm_form = gm_connection.nw_gm(n)
    f = build_F([connection.point_value(nu) for nu in range(1, connection.delta + 1)], connection.universe.variables)
    rng = np.random.default_rng(cfg.seed)
    names = _sampled_names(connection)
    worst = 0.0
    passed = True
    failing_sample = None
    for _ in range(cfg.samples):
        def evaluate(assign):
            direct = eval_rhs_direct(connection, n, assign, cfg, form=form, f=f)
            return direct, eval_numeric_form(gm_form, assign, None, cfg.denominator_floor)

        assign, (direct, via_gm) = _resample(names, rng, cfg, evaluate)
        ok, error = via_gm.close_to(direct, cfg.tol)
        worst = max(worst, error)
        if not ok and passed:
            passed = False
            failing_sample = {name: assign[name].real for name in names}
    logger.info("numeric RR N=%d delta=%d n=%d max error %.3e", connection.rank, connection.delta, n, worst)
    return VerificationReport(
        check="verify-rr-numeric",
        params={
            "N": connection.rank,
            "delta": connection.delta,
            "n": n,
            "samples": cfg.samples,
            "max_error": worst,
            "failing_sample": failing_sample,
        },
        status=status_of(passed),
        seed=cfg.seed,
        millis=watch.millis,
    )


def _numeric_dlog_root(
    universe: GenUniverse,
    beta: complex,
    tangent: dict[int, complex],
    point_value: complex,
    point_index: int,
) -> NumericForm:
    """dlog(beta - a_j) from d(beta) and da_j."""
    covector = dict(tangent)
    covector[point_index] = covector.get(point_index, 0j) - 1
    return NumericForm.covector(universe, covector).scale(1 / (beta - point_value))


def lemma_4_5_form(delta: int, subset: Sequence[int], f: RatFun, universe: GenUniverse) -> Form:
    """sum_s (-1)^(s-1) dlog F(a_js) ^ /\\_{m != s} dlog(a_js - a_jm)."""
    points = [universe.variables.var(f"a{j}") for j in range(1, delta + 1)]
    total = Form.zero(universe)
    for s, j in enumerate(subset):
        at_point = f.substitute(FIBER, points[j - 1])
        term = dlog(at_point, universe).wedge(
            wedge_all(universe, (dlog(points[j - 1] - points[m - 1], universe) for m in subset if m != j))
        )
        total = total + term if s % 2 == 0 else total - term
    return total


def verify_prop44_lemma45(delta: int, subset: Sequence[int], cfg: NumericConfig | None = None) -> VerificationReport:
    cfg = cfg or NumericConfig()
    watch = Stopwatch()
    subset = tuple(sorted(subset))
    universe = standard_universe(delta)
    names = [f"a{j}" for j in range(1, delta + 1)]
    f = build_F([universe.variables.var(name) for name in names], universe.variables)
    combinatorial = prop_4_4_combinatorial(delta, subset, universe)
    lemma_form = lemma_4_5_form(delta, subset, f, universe)
    base_wedge = wedge_all(universe, (dlog(universe.variables.var(f"a{j}"), universe) for j in subset))
    point_indices = [universe.differential(name) for name in names]
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    passed = True
    for _ in range(cfg.samples):
        def evaluate(assign):
            data = roots_and_derivatives(f, names, assign, cfg)
            _check_collisions(data.roots, assign, names, cfg)
            root_sum = NumericForm(universe)
            for i, beta in enumerate(data.roots):
                tangent = {g: data.derivatives[i, k] for k, g in enumerate(point_indices)}
                piece = NumericForm.scalar(universe, 1)
                for j in subset:
                    piece = piece.wedge(
                        _numeric_dlog_root(universe, beta, tangent, assign[f"a{j}"], point_indices[j - 1])
                    )
                root_sum = root_sum + piece
            return (
                root_sum,
                eval_numeric_form(lemma_form, assign, None, cfg.denominator_floor),
                eval_numeric_form(combinatorial, assign, None, cfg.denominator_floor),
                eval_numeric_form(base_wedge, assign, None, cfg.denominator_floor),
            )

        _, (root_sum, lemma_value, comb_value, base_value) = _resample(names, rng, cfg, evaluate)
        ok_lemma, err_lemma = root_sum.close_to(lemma_value, cfg.tol)
        ok_prop, err_prop = (root_sum - base_value).close_to(comb_value, cfg.tol)
        worst = max(worst, err_lemma, err_prop)
        passed = passed and ok_lemma and ok_prop
    return VerificationReport(
        check="prop-4.4",
        params={"delta": delta, "J": list(subset), "samples": cfg.samples, "max_error": worst},
        status=status_of(passed),
        seed=cfg.seed,
        millis=watch.millis,
    )
