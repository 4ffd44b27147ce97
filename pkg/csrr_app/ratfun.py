"""
Exact arithmetic in the rational function field Q(x_1, ..., x_m).

Important points:
- polynomials are sympy PolyElements over QQ with graded-lexicographic order
- a RatFun is always canonical: gcd(num, den) = 1 and den has integer, coprime coefficients
  with a positive leading coefficient, so equality is representation identity
- the variable universe is fixed for a session; values from different universes never mix
- printing uses the same grammar the parser reads, so print -> parse -> print is a fixed point
"""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence, Union

from sympy import QQ, Symbol
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyRing

from csrr_proj import settings
from csrr_app.errors import (
    DivisionByZeroError,
    PoleError,
    UniverseMismatchError,
    UnknownVariableError,
)

_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

Scalar = Union[int, Fraction]


class VarKind(str, Enum):
    BASE = "base"
    FIBER = "fiber"
    PARAMETER = "parameter"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: VarKind = VarKind.BASE


class VarUniverse:
    """Ordered, fixed set of variables; owns the polynomial ring every RatFun lives in."""

    def __init__(self, variables: Sequence[Variable]):
        variables = tuple(variables)
        if not variables:
            raise ValueError("a universe needs at least one variable")
        names = tuple(v.name for v in variables)
        for name in names:
            if not _IDENTIFIER.match(name):
                raise ValueError(f"invalid variable name {name!r}")
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"duplicate variable names: {', '.join(duplicates)}")
        if sum(1 for v in variables if v.kind is VarKind.FIBER) > 1:
            raise ValueError("at most one fiber variable is allowed")
        self.variables = variables
        self.names = names
        self._index = {name: i for i, name in enumerate(names)}
        self.ring = PolyRing(tuple(Symbol(name) for name in names), QQ, grlex)
        self._zero_monom = (0,) * len(names)

    @classmethod
    def build(
        cls,
        base: Sequence[str] = (),
        parameters: Sequence[str] = (),
        fiber: str | None = None,
    ) -> VarUniverse:
        variables = [Variable(name, VarKind.BASE) for name in base]
        variables += [Variable(name, VarKind.PARAMETER) for name in parameters]
        if fiber is not None:
            variables.append(Variable(fiber, VarKind.FIBER))
        return cls(variables)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VarUniverse) and self.variables == other.variables

    def __hash__(self) -> int:
        return hash(self.variables)

    def __repr__(self) -> str:
        return f"VarUniverse({', '.join(self.names)})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownVariableError(f"unknown variable {name!r}") from None

    def kind(self, name: str) -> VarKind:
        return self.variables[self.index(name)].kind

    @property
    def fiber(self) -> str | None:
        for v in self.variables:
            if v.kind is VarKind.FIBER:
                return v.name
        return None

    def names_of_kind(self, kind: VarKind) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.kind is kind)

    def var(self, name: str) -> RatFun:
        monom = [0] * len(self.names)
        monom[self.index(name)] = 1
        return RatFun(self, self.ring.from_dict({tuple(monom): QQ(1)}), self.ring.one)

    def const(self, value: Scalar | RatFun) -> RatFun:
        if isinstance(value, RatFun):
            if value.universe != self:
                raise UniverseMismatchError("constant from another universe")
            return value
        value = Fraction(value)
        if value == 0:
            return RatFun(self, self.ring.zero, self.ring.one)
        coeff = QQ(value.numerator, value.denominator)
        return RatFun(self, self.ring.from_dict({self._zero_monom: coeff}), self.ring.one)

    @property
    def zero(self) -> RatFun:
        return RatFun(self, self.ring.zero, self.ring.one)

    @property
    def one(self) -> RatFun:
        return RatFun(self, self.ring.one, self.ring.one)


def _is_ground(poly) -> bool:
    return len(poly) == 1 and not any(next(iter(poly.keys())))


def _normalize_scale(num, den):
    numerators = [int(c.numerator) for c in den.values()]
    denominators = [int(c.denominator) for c in den.values()]
    scale = QQ(math.gcd(*numerators), math.lcm(*denominators))
    if den.LC < 0:
        scale = -scale
    if scale != 1:
        num = num.quo_ground(scale)
        den = den.quo_ground(scale)
    return num, den


def canonical(universe: VarUniverse, num, den) -> RatFun:
    """Reduce num/den to the canonical representative."""
    ring = universe.ring
    if not den:
        raise DivisionByZeroError("zero denominator")
    if not num:
        return RatFun(universe, ring.zero, ring.one)
    if _is_ground(den):
        return RatFun(universe, num.quo_ground(den.LC), ring.one)
    num, den = num.cancel(den)
    num, den = _normalize_scale(num, den)
    return RatFun(universe, num, den)


def _diff(poly, i: int):
    terms = {}
    for monom, coeff in poly.items():
        exponent = monom[i]
        if exponent:
            shifted = list(monom)
            shifted[i] = exponent - 1
            terms[tuple(shifted)] = coeff * exponent
    return poly.ring.from_dict(terms)


def _split_by_variable(poly, i: int) -> dict[int, object]:
    parts: dict[int, dict] = {}
    for monom, coeff in poly.items():
        shifted = list(monom)
        exponent = shifted[i]
        shifted[i] = 0
        parts.setdefault(exponent, {})[tuple(shifted)] = coeff
    return {exponent: poly.ring.from_dict(terms) for exponent, terms in parts.items()}


def _homogenized(poly, i: int, gn, gd):
    """Return (H, D) with poly(x_i = gn/gd) = H / gd**D."""
    ring = poly.ring
    if not poly:
        return ring.zero, 0
    parts = _split_by_variable(poly, i)
    top = max(parts)
    result = ring.zero
    for exponent, part in parts.items():
        result += part * gn**exponent * gd ** (top - exponent)
    return result, top


def _eval_poly(poly, values: Sequence[complex | None], names: Sequence[str]) -> tuple[complex, float]:
    total = 0j
    scale = 0.0
    for monom, coeff in poly.items():
        term = complex(float(coeff))
        for i, exponent in enumerate(monom):
            if exponent:
                value = values[i]
                if value is None:
                    raise UnknownVariableError(f"variable {names[i]!r} is not assigned")
                term *= value**exponent
        total += term
        scale += abs(term)
    return total, scale


def _format_coefficient(coeff) -> str:
    numerator, denominator = int(coeff.numerator), int(coeff.denominator)
    return str(numerator) if denominator == 1 else f"{numerator}/{denominator}"


def _format_term(magnitude, monom, names) -> str:
    factors = []
    for name, exponent in zip(names, monom):
        if exponent == 1:
            factors.append(name)
        elif exponent:
            factors.append(f"{name}^{exponent}")
    if not factors:
        return _format_coefficient(magnitude)
    if magnitude == 1:
        return "*".join(factors)
    return _format_coefficient(magnitude) + "*" + "*".join(factors)


def _format_poly(poly, names) -> str:
    if not poly:
        return "0"
    monoms = sorted(poly.keys(), key=poly.ring.order, reverse=True)
    pieces = []
    for position, monom in enumerate(monoms):
        coeff = poly[monom]
        negative = coeff < 0
        body = _format_term(-coeff if negative else coeff, monom, names)
        if position == 0:
            pieces.append("-" + body if negative else body)
        else:
            pieces.append((" - " if negative else " + ") + body)
    return "".join(pieces)


class RatFun:
    """Canonical element of Q(universe). Build through VarUniverse.var/const or canonical()."""

    __slots__ = ("universe", "num", "den", "_hash")

    def __init__(self, universe: VarUniverse, num, den):
        self.universe = universe
        self.num = num
        self.den = den
        self._hash = None

    def _coerce(self, other) -> RatFun:
        if isinstance(other, RatFun):
            if other.universe != self.universe:
                raise UniverseMismatchError(
                    f"{self.universe!r} and {other.universe!r} differ"
                )
            return other
        if isinstance(other, (int, Fraction)):
            return self.universe.const(other)
        return NotImplemented

    def __add__(self, other) -> RatFun:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        if self.den == other.den:
            return canonical(self.universe, self.num + other.num, self.den)
        return canonical(
            self.universe,
            self.num * other.den + other.num * self.den,
            self.den * other.den,
        )

    __radd__ = __add__

    def __neg__(self) -> RatFun:
        return RatFun(self.universe, -self.num, self.den)

    def __sub__(self, other) -> RatFun:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> RatFun:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> RatFun:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_zero or other.is_zero:
            return self.universe.zero
        return canonical(self.universe, self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> RatFun:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other) -> RatFun:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, exponent: int) -> RatFun:
        if exponent < 0:
            return self.inverse() ** (-exponent)
        return canonical(self.universe, self.num**exponent, self.den**exponent)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = self.universe.const(other)
        if not isinstance(other, RatFun):
            return NotImplemented
        return (
            self.universe == other.universe
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((frozenset(self.num.items()), frozenset(self.den.items())))
        return self._hash

    def __str__(self) -> str:
        names = self.universe.names
        num_text = _format_poly(self.num, names)
        if self.den == self.den.ring.one:
            return num_text
        den_text = _format_poly(self.den, names)
        if len(self.num) > 1:
            num_text = f"({num_text})"
        single_power = len(self.den) == 1 and sum(1 for e in next(iter(self.den.keys())) if e) == 1
        if not single_power:
            den_text = f"({den_text})"
        return f"{num_text}/{den_text}"

    def __repr__(self) -> str:
        return f"RatFun({self})"

    @property
    def is_zero(self) -> bool:
        return not self.num

    @property
    def is_constant(self) -> bool:
        return (not self.num or _is_ground(self.num)) and _is_ground(self.den)

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError(f"{self} is not a constant")
        if not self.num:
            return Fraction(0)
        coeff = self.num.LC / self.den.LC
        return Fraction(int(coeff.numerator), int(coeff.denominator))

    def support(self) -> set[int]:
        """Indices of the variables this value actually depends on."""
        used = set()
        for poly in (self.num, self.den):
            for monom in poly.keys():
                used.update(i for i, e in enumerate(monom) if e)
        return used

    def depends_on(self, name: str) -> bool:
        return self.universe.index(name) in self.support()

    def inverse(self) -> RatFun:
        if self.is_zero:
            raise DivisionByZeroError("inverse of zero")
        return canonical(self.universe, self.den, self.num)

    def derivative_index(self, i: int) -> RatFun:
        dn = _diff(self.num, i)
        dd = _diff(self.den, i)
        if not dn and not dd:
            return self.universe.zero
        return canonical(self.universe, dn * self.den - self.num * dd, self.den**2)

    def derivative(self, name: str) -> RatFun:
        return self.derivative_index(self.universe.index(name))

    def substitute(self, name: str, value: RatFun | Scalar) -> RatFun:
        i = self.universe.index(name)
        value = self._coerce(value)
        if i not in self.support():
            return self
        num_h, num_deg = _homogenized(self.num, i, value.num, value.den)
        den_h, den_deg = _homogenized(self.den, i, value.num, value.den)
        if not den_h:
            raise PoleError(f"substituting {name} = {value} into {self} hits a pole")
        return canonical(
            self.universe,
            num_h * value.den**den_deg,
            den_h * value.den**num_deg,
        )

    def eval_numeric(
        self,
        assign: Mapping[str, complex],
        floor: float | None = None,
    ) -> complex:
        floor = settings.DENOMINATOR_FLOOR if floor is None else floor
        names = self.universe.names
        values = [complex(assign[name]) if name in assign else None for name in names]
        den_value, den_scale = _eval_poly(self.den, values, names)
        if abs(den_value) <= floor * max(den_scale, 1e-300):
            raise PoleError(f"denominator of {self} vanishes numerically")
        num_value, _ = _eval_poly(self.num, values, names)
        return num_value / den_value

    def coefficients_in(self, name: str) -> list[RatFun]:
        """Coefficients c_k with self = sum c_k name^k; the denominator must not involve name."""
        i = self.universe.index(name)
        if any(monom[i] for monom in self.den.keys()):
            raise ValueError(f"{self} is not polynomial in {name}")
        parts = _split_by_variable(self.num, i)
        if not parts:
            return [self.universe.zero]
        return [
            canonical(self.universe, parts[k], self.den) if k in parts else self.universe.zero
            for k in range(max(parts) + 1)
        ]

    def transfer(self, universe: VarUniverse) -> RatFun:
        """The same rational function read in another universe that declares every used variable."""
        if universe == self.universe:
            return self
        positions = {}
        for i in self.support():
            positions[i] = universe.index(self.universe.names[i])

        def move(poly):
            terms = {}
            for monom, coeff in poly.items():
                target = [0] * len(universe)
                for i, e in enumerate(monom):
                    if e:
                        target[positions[i]] = e
                terms[tuple(target)] = coeff
            return universe.ring.from_dict(terms)

        return canonical(universe, move(self.num), move(self.den))


# The operations below are the module's public surface; RatFun methods carry the work.

_ARITH = {"add": operator.add, "sub": operator.sub, "mul": operator.mul}


def arith(op: str, f: RatFun, g: RatFun) -> RatFun:
    if f.universe != g.universe:
        raise UniverseMismatchError(f"{f.universe!r} and {g.universe!r} differ")
    return _ARITH[op](f, g)


def inverse(f: RatFun) -> RatFun:
    return f.inverse()


def derivative(f: RatFun, name: str) -> RatFun:
    return f.derivative(name)


def substitute(f: RatFun, name: str, value: RatFun | Scalar) -> RatFun:
    return f.substitute(name, value)


def eval_numeric(f: RatFun, assign: Mapping[str, complex], floor: float | None = None) -> complex:
    return f.eval_numeric(assign, floor)
