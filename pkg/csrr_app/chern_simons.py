"""
Chern-Simons transgression forms and the Newton/Chern change of basis for CS classes.

A CS class is an odd form TP with dTP = P(F) for an invariant polynomial P; it is defined modulo
dlog of units in degree 1 and modulo exact forms in higher degree. The product of two classes is
the CS product a * b = a ^ db, the only product available without a splitting.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from csrr_app.errors import DegreeError, ShapeError
from csrr_app.exterior import Form, in_base_ideal
from csrr_app.matform import (
    MatForm,
    chern_weil,
    curvature,
    curvature_t,
    gauge,
    trace,
    tpoly_mul,
)

logger = logging.getLogger(__name__)


class Modulus(str, Enum):
    NONE = "none"
    DLOG_UNITS = "mod-dlog-units"
    EXACT = "mod-exact"

    @classmethod
    def for_degree(cls, p: int) -> Modulus:
        if p == 0:
            return cls.NONE
        return cls.DLOG_UNITS if p == 1 else cls.EXACT


@dataclass(frozen=True)
class CSClass:
    degree: int
    form: Form
    modulus: Modulus

    def __post_init__(self):
        actual = self.form.homogeneous_degree()
        if actual is not None and actual != max(2 * self.degree - 1, 0):
            raise DegreeError(f"class of degree {self.degree} carries a {actual}-form")

    @classmethod
    def unit(cls, universe) -> CSClass:
        return cls(0, Form.scalar(universe, 1), Modulus.NONE)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CSClass):
            return NotImplemented
        return self.degree == other.degree and self.form == other.form


def transgress(a: MatForm, p: int) -> CSClass:
    """TP(A) = p * integral_0^1 Tr(A ^ F(tA)^(p-1)) dt for P = Tr(X^p)."""
    if not a.is_square:
        raise ShapeError(f"connection matrix of shape {a.shape}")
    if p < 1:
        raise ValueError("transgression degree must be at least 1")
    steps = curvature_t(a)
    power = [MatForm.identity(a.universe, a.rows)]
    for _ in range(p - 1):
        power = tpoly_mul(power, steps)
    total = Form.zero(a.universe)
    for k, coefficient in enumerate(power):
        if coefficient.is_zero:
            continue
        total = total + trace(a @ coefficient) * Fraction(p, k + 1)
    return CSClass(p, total, Modulus.for_degree(p))


def cs_product(a: CSClass, b: CSClass) -> CSClass:
    if a.degree == 0:
        return CSClass(b.degree, b.form * a.form.scalar_value(), b.modulus)
    if b.degree == 0:
        return CSClass(a.degree, a.form * b.form.scalar_value(), a.modulus)
    degree = a.degree + b.degree
    return CSClass(degree, a.form.wedge(b.form.d()), Modulus.for_degree(degree))


def _by_degree(classes: Iterable[CSClass], n: int) -> dict[int, CSClass]:
    table = {c.degree: c for c in classes}
    missing = [k for k in range(1, n + 1) if k not in table]
    if missing:
        raise ValueError(f"missing lower-degree classes {missing}")
    return table


def chern_from_newton(newton: Sequence[CSClass], n: int) -> list[CSClass]:
    """w_1..w_n from Nw_1..Nw_n via k w_k = sum_i (-1)^(i-1) w_(k-i) * Nw_i."""
    p = _by_degree(newton, n)
    universe = p[1].form.universe
    w = {0: CSClass.unit(universe)}
    for k in range(1, n + 1):
        acc = Form.zero(universe)
        for i in range(1, k + 1):
            term = cs_product(w[k - i], p[i]).form
            acc = acc + term if i % 2 else acc - term
        w[k] = CSClass(k, acc * Fraction(1, k), Modulus.for_degree(k))
    return [w[k] for k in range(1, n + 1)]


def newton_from_chern(chern: Sequence[CSClass], n: int) -> list[CSClass]:
    """Inverse of chern_from_newton, solving the same recursion for Nw_k."""
    w = _by_degree(chern, n)
    universe = w[1].form.universe
    p: dict[int, CSClass] = {}
    for k in range(1, n + 1):
        acc = Form.zero(universe)
        for i in range(1, k):
            term = cs_product(w[i], p[k - i]).form
            acc = acc + term if i % 2 else acc - term
        top = w[k].form * k
        acc = acc + top if k % 2 else acc - top
        p[k] = CSClass(k, acc, Modulus.for_degree(k))
    return [p[k] for k in range(1, n + 1)]


def gauge_delta(a: MatForm, g: MatForm, p: int) -> Form:
    return transgress(gauge(a, g), p).form - transgress(a, p).form


def check_transgression(a: MatForm, p: int) -> tuple[bool, Form]:
    """d TP(A) = Tr(F^p); returns the verdict and the difference."""
    difference = transgress(a, p).form.d() - chern_weil(a, p)
    return difference.is_zero, difference


def check_flat_closed(a: MatForm, p: int) -> tuple[bool, Form]:
    if not curvature(a).is_zero:
        raise ValueError("connection is not flat")
    derivative = transgress(a, p).form.d()
    return derivative.is_zero, derivative


def check_basic_ideal(a: MatForm, p: int, base: Iterable[int]) -> tuple[bool, bool]:
    """
    (applicable, holds). Applicable when every term of F(A) is built from base differentials only;
    then d TP(A) must lie in the ideal generated by base 2-forms.
    """
    base = set(base)
    f = curvature(a)
    applicable = all(in_base_ideal(e, base, 2) for row in f.entries for e in row)
    if not applicable:
        return False, True
    derivative = transgress(a, p).form.d()
    holds = in_base_ideal(derivative, base, 2)
    logger.debug("basic ideal check p=%d holds=%s", p, holds)
    return True, holds
