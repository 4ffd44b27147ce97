"""
Differential forms with rational-function coefficients.

Important points:
- generators are dv for every variable (universe order) followed by the auxiliary rho_1..rho_k
- a basis monomial is a strictly increasing tuple of generator indices; rho factors therefore
  always sit to the right of every differential
- a Form maps basis monomials to nonzero RatFun coefficients and is immutable
- rho generators have no differential and never appear as coordinates of a RatFun
"""

from __future__ import annotations

from bisect import bisect_left
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from csrr_proj import settings
from csrr_app.errors import DegreeError, DivisionByZeroError, UniverseMismatchError, UnknownVariableError
from csrr_app.ratfun import RatFun, Scalar, VarUniverse

Term = tuple[int, ...]


class GenUniverse:
    """Generators of the exterior algebra over a VarUniverse."""

    def __init__(self, variables: VarUniverse, n_rho: int = 0):
        if n_rho < 0:
            raise ValueError("n_rho must be non-negative")
        self.variables = variables
        self.n_rho = n_rho
        self.nvars = len(variables)
        self.names = tuple("d" + name for name in variables.names) + tuple(
            f"rho{nu}" for nu in range(1, n_rho + 1)
        )
        self._index = {name: i for i, name in enumerate(self.names)}

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, GenUniverse)
            and self.n_rho == other.n_rho
            and self.variables == other.variables
        )

    def __hash__(self) -> int:
        return hash((self.variables, self.n_rho))

    def __repr__(self) -> str:
        return f"GenUniverse({', '.join(self.names)})"

    @property
    def size(self) -> int:
        return len(self.names)

    def differential(self, name: str) -> int:
        return self.variables.index(name)

    def rho(self, nu: int) -> int:
        if not 1 <= nu <= self.n_rho:
            raise UnknownVariableError(f"rho{nu} is not a generator of {self!r}")
        return self.nvars + nu - 1

    def generator(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownVariableError(f"unknown generator {name!r}") from None

    def is_rho(self, index: int) -> bool:
        return index >= self.nvars

    def with_rho(self, n_rho: int) -> GenUniverse:
        return GenUniverse(self.variables, n_rho)

    def without_rho(self) -> GenUniverse:
        return self.with_rho(0) if self.n_rho else self


def _merge(left: Term, right: Term) -> tuple[int, Term] | None:
    """Sign and sorted tuple of left ^ right, or None when a generator repeats."""
    inversions = 0
    for g in left:
        position = bisect_left(right, g)
        if position < len(right) and right[position] == g:
            return None
        inversions += position
    sign = -1 if inversions % 2 else 1
    return sign, tuple(sorted(left + right))


def _accumulate(target: dict[Term, RatFun], key: Term, value: RatFun) -> None:
    if key in target:
        total = target[key] + value
        if total.is_zero:
            del target[key]
        else:
            target[key] = total
    elif not value.is_zero:
        target[key] = value


class Form:
    __slots__ = ("universe", "terms", "_hash")

    def __init__(self, universe: GenUniverse, terms: Mapping[Term, RatFun] | None = None):
        self.universe = universe
        self.terms = {k: v for k, v in (terms or {}).items() if not v.is_zero}
        self._hash = None

    @classmethod
    def zero(cls, universe: GenUniverse) -> Form:
        return cls(universe)

    @classmethod
    def scalar(cls, universe: GenUniverse, value: RatFun | Scalar) -> Form:
        return cls(universe, {(): universe.variables.const(value)})

    @classmethod
    def generator(cls, universe: GenUniverse, index: int) -> Form:
        return cls(universe, {(index,): universe.variables.one})

    @classmethod
    def differential(cls, universe: GenUniverse, name: str) -> Form:
        return cls.generator(universe, universe.differential(name))

    @classmethod
    def rho(cls, universe: GenUniverse, nu: int) -> Form:
        return cls.generator(universe, universe.rho(nu))

    @classmethod
    def from_terms(
        cls,
        universe: GenUniverse,
        terms: Iterable[tuple[RatFun | Scalar, Sequence[str]]],
    ) -> Form:
        """Sum of coeff * g_1 ^ ... ^ g_k for generator names given in any order."""
        result: dict[Term, RatFun] = {}
        for coeff, gens in terms:
            coeff = universe.variables.const(coeff)
            indices = [universe.generator(name) for name in gens]
            if len(set(indices)) != len(indices):
                continue
            key: Term = ()
            sign = 1
            for index in indices:
                merged = _merge(key, (index,))
                sign *= merged[0]
                key = merged[1]
            _accumulate(result, key, coeff if sign > 0 else -coeff)
        return cls(universe, result)

    def _check(self, other: Form) -> None:
        if self.universe != other.universe:
            raise UniverseMismatchError(f"{self.universe!r} and {other.universe!r} differ")

    def __add__(self, other: Form) -> Form:
        self._check(other)
        if not other.terms:
            return self
        result = dict(self.terms)
        for key, value in other.terms.items():
            _accumulate(result, key, value)
        return Form(self.universe, result)

    def __neg__(self) -> Form:
        return Form(self.universe, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: Form) -> Form:
        return self + (-other)

    def __mul__(self, scalar: RatFun | Scalar) -> Form:
        if isinstance(scalar, Form):
            return NotImplemented
        scalar = self.universe.variables.const(scalar)
        if scalar.is_zero:
            return Form(self.universe)
        return Form(self.universe, {k: v * scalar for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Form):
            return NotImplemented
        return self.universe == other.universe and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for key in sorted(self.terms):
            gens = "^".join(self.universe.names[g] for g in key)
            coeff = str(self.terms[key])
            pieces.append(f"({coeff})" + (f"*{gens}" if gens else ""))
        return " + ".join(pieces)

    def __repr__(self) -> str:
        return f"Form({self})"

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degrees(self) -> set[int]:
        return {len(key) for key in self.terms}

    def homogeneous_degree(self) -> int | None:
        """Degree of a homogeneous form; None for the zero form."""
        degrees = self.degrees()
        if len(degrees) > 1:
            raise DegreeError(f"form of mixed degrees {sorted(degrees)}")
        return degrees.pop() if degrees else None

    def degree_part(self, p: int) -> Form:
        return Form(self.universe, {k: v for k, v in self.terms.items() if len(k) == p})

    def has_rho(self) -> bool:
        nvars = self.universe.nvars
        return any(key and key[-1] >= nvars for key in self.terms)

    def scalar_value(self) -> RatFun:
        """Coefficient of a 0-form."""
        if any(self.terms.keys() - {()}):
            raise DegreeError(f"{self} is not a 0-form")
        return self.terms.get((), self.universe.variables.zero)

    def wedge(self, other: Form) -> Form:
        self._check(other)
        result: dict[Term, RatFun] = {}
        for left, f in self.terms.items():
            for right, g in other.terms.items():
                merged = _merge(left, right)
                if merged is None:
                    continue
                sign, key = merged
                product = f * g
                _accumulate(result, key, product if sign > 0 else -product)
        return Form(self.universe, result)

    def d(self) -> Form:
        result: dict[Term, RatFun] = {}
        for key, coeff in self.terms.items():
            for i in sorted(coeff.support()):
                position = bisect_left(key, i)
                if position < len(key) and key[position] == i:
                    continue
                partial = coeff.derivative_index(i)
                if partial.is_zero:
                    continue
                new_key = key[:position] + (i,) + key[position:]
                _accumulate(result, new_key, -partial if position % 2 else partial)
        return Form(self.universe, result)

    def map_coefficients(self, fn) -> Form:
        return Form(self.universe, {k: fn(v) for k, v in self.terms.items()})

    def lift(self, universe: GenUniverse) -> Form:
        """The same form in a universe with the same variables and at least as many rho."""
        if universe.variables != self.universe.variables:
            raise UniverseMismatchError("lift needs identical variables")
        if universe == self.universe:
            return self
        shift = universe.n_rho - self.universe.n_rho
        if shift < 0 and self.has_rho():
            raise UniverseMismatchError("target universe drops rho generators in use")
        return Form(universe, self.terms)

    def transfer(self, universe: GenUniverse) -> Form:
        """Re-home a rho-free form into another universe that declares its variables."""
        if universe == self.universe:
            return self
        if self.has_rho():
            raise UniverseMismatchError("only rho-free forms transfer between universes")
        source = self.universe.variables.names
        target = universe.variables
        result: dict[Term, RatFun] = {}
        for key, coeff in self.terms.items():
            indices = [target.index(source[g]) for g in key]
            merged: tuple[int, Term] = (1, ())
            for index in indices:
                step = _merge(merged[1], (index,))
                merged = (merged[0] * step[0], step[1])
            moved = coeff.transfer(target)
            _accumulate(result, merged[1], moved if merged[0] > 0 else -moved)
        return Form(universe, result)


def wedge(*forms: Form) -> Form:
    if not forms:
        raise ValueError("wedge needs at least one form")
    result = forms[0]
    for form in forms[1:]:
        result = result.wedge(form)
    return result


def wedge_all(universe: GenUniverse, forms: Iterable[Form]) -> Form:
    """Ordered wedge product; the empty product is the constant 1."""
    result = Form.scalar(universe, 1)
    for form in forms:
        result = result.wedge(form)
    return result


def d(form: Form) -> Form:
    return form.d()


def dlog(value: RatFun | Scalar, universe: GenUniverse) -> Form:
    value = universe.variables.const(value)
    if value.is_zero:
        raise DivisionByZeroError("dlog of zero")
    result: dict[Term, RatFun] = {}
    for i in value.support():
        partial = value.derivative_index(i)
        if not partial.is_zero:
            result[(i,)] = partial / value
    return Form(universe, result)


def rho_extract(form: Form, subset: Iterable[int]) -> Form:
    """Coefficient eta_J of rho_J = rho_{j1} ^ ... ^ rho_{jk} (j increasing), as a rho-free form."""
    universe = form.universe
    rho_part = tuple(universe.rho(nu) for nu in sorted(subset))
    nvars = universe.nvars
    target = universe.without_rho()
    result = {}
    for key, coeff in form.terms.items():
        split = bisect_left(key, nvars)
        if key[split:] == rho_part:
            result[key[:split]] = coeff
    return Form(target, result)


def rho_assemble(universe: GenUniverse, table: Mapping[tuple[int, ...], Form]) -> Form:
    """Inverse of rho_extract: sum of eta_J ^ rho_J."""
    total = Form.zero(universe)
    for subset, eta in table.items():
        rho_j = wedge_all(universe, (Form.rho(universe, nu) for nu in sorted(subset)))
        total = total + eta.lift(universe).wedge(rho_j)
    return total


def substitute_rho(form: Form, images: Mapping[int, Form]) -> Form:
    """Replace rho_nu by images[nu] (a rho-free 1-form); rho generators without an image map to 0."""
    universe = form.universe
    target = universe.without_rho()
    nvars = universe.nvars
    total = Form.zero(target)
    for key, coeff in form.terms.items():
        split = bisect_left(key, nvars)
        piece = Form(target, {key[:split]: coeff})
        for g in key[split:]:
            image = images.get(g - nvars + 1)
            if image is None:
                piece = Form.zero(target)
                break
            piece = piece.wedge(image)
        total = total + piece
    return total


def pullback_section(form: Form, value: RatFun | Scalar, fiber: str | None = None) -> Form:
    """Pull back along the section fiber = value, a function of the other variables."""
    universe = form.universe
    if form.has_rho():
        raise DegreeError("pullback of forms carrying rho generators")
    fiber = fiber or universe.variables.fiber
    if fiber is None:
        raise UnknownVariableError("universe has no fiber variable")
    value = universe.variables.const(value)
    if value.depends_on(fiber):
        raise ValueError(f"section value {value} depends on {fiber}")
    z_index = universe.differential(fiber)
    dvalue = Form.scalar(universe, value).d()
    total = Form.zero(universe)
    for key, coeff in form.terms.items():
        restricted = coeff.substitute(fiber, value)
        if z_index not in key:
            total = total + Form(universe, {key: restricted})
            continue
        k = key.index(z_index)
        before = Form(universe, {key[:k]: restricted})
        after = Form(universe, {key[k + 1:]: universe.variables.one})
        total = total + before.wedge(dvalue).wedge(after)
    return total


def in_base_ideal(form: Form, base: Iterable[int], order: int = 2) -> bool:
    """True when every monomial carries at least `order` generators from `base`."""
    base = set(base)
    return all(len(base.intersection(key)) >= order for key in form.terms)


class NumericForm:
    """A form with complex coefficients, the image of Form under numeric evaluation."""

    __slots__ = ("universe", "data")

    def __init__(self, universe: GenUniverse, data: Mapping[Term, complex] | None = None):
        self.universe = universe
        self.data = {k: complex(v) for k, v in (data or {}).items() if v != 0}

    @classmethod
    def scalar(cls, universe: GenUniverse, value: complex) -> NumericForm:
        return cls(universe, {(): value})

    @classmethod
    def covector(cls, universe: GenUniverse, coefficients: Mapping[int, complex]) -> NumericForm:
        return cls(universe, {(g,): c for g, c in coefficients.items()})

    def __add__(self, other: NumericForm) -> NumericForm:
        result = dict(self.data)
        for key, value in other.data.items():
            result[key] = result.get(key, 0j) + value
        return NumericForm(self.universe, result)

    def __neg__(self) -> NumericForm:
        return NumericForm(self.universe, {k: -v for k, v in self.data.items()})

    def __sub__(self, other: NumericForm) -> NumericForm:
        return self + (-other)

    def scale(self, factor: complex) -> NumericForm:
        return NumericForm(self.universe, {k: v * factor for k, v in self.data.items()})

    def wedge(self, other: NumericForm) -> NumericForm:
        result: dict[Term, complex] = {}
        for left, a in self.data.items():
            for right, b in other.data.items():
                merged = _merge(left, right)
                if merged is None:
                    continue
                sign, key = merged
                result[key] = result.get(key, 0j) + sign * a * b
        return NumericForm(self.universe, result)

    def max_abs(self) -> float:
        return max((abs(v) for v in self.data.values()), default=0.0)

    def distance(self, other: NumericForm) -> float:
        return (self - other).max_abs()

    def close_to(self, other: NumericForm, tol: float) -> tuple[bool, float]:
        """Relative comparison: |x - y| <= tol * max(1, |x|, |y|) over all coefficients."""
        error = self.distance(other)
        scale = max(1.0, self.max_abs(), other.max_abs())
        return error <= tol * scale, error / scale

    def __getitem__(self, key: Term) -> complex:
        return self.data.get(tuple(key), 0j)


def eval_numeric_form(
    form: Form,
    assign: Mapping[str, complex],
    extra: Mapping[int, NumericForm | Mapping[int, complex]] | None = None,
    floor: float | None = None,
) -> NumericForm:
    """Evaluate coefficients at `assign`; generators listed in `extra` are replaced by numeric 1-forms."""
    universe = form.universe
    floor = settings.DENOMINATOR_FLOOR if floor is None else floor
    images: dict[int, NumericForm] = {}
    for g, image in (extra or {}).items():
        images[g] = image if isinstance(image, NumericForm) else NumericForm.covector(universe, image)
    total = NumericForm(universe)
    for key, coeff in form.terms.items():
        piece = NumericForm.scalar(universe, coeff.eval_numeric(assign, floor))
        for g in key:
            image = images.get(g)
            piece = piece.wedge(image if image is not None else NumericForm.covector(universe, {g: 1}))
        total = total + piece
    return total


def subsets(indices: Sequence[int], min_size: int = 0, max_size: int | None = None):
    """Increasing tuples of `indices`, by size."""
    max_size = len(indices) if max_size is None else min(max_size, len(indices))
    for size in range(min_size, max_size + 1):
        yield from combinations(indices, size)
