"""Random and worked instances for tests and the self-test grid."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from csrr_app.errors import SingularMatrixError
from csrr_app.exterior import Form, GenUniverse, dlog
from csrr_app.logconn_p1 import LogConnectionP1, Point, p1_universe, tensor_connection
from csrr_app.matform import MatForm, determinant, from_scalars, gauge
from csrr_app.parsing import parse_ratfun
from csrr_app.pushforward import FiniteAlgebra
from csrr_app.ratfun import RatFun, VarUniverse

PARAMETERS = ("t1", "t2")


def random_rational(rng: np.random.Generator, bound: int = 3, nonzero: bool = False) -> Fraction:
    while True:
        value = Fraction(int(rng.integers(-bound, bound + 1)), int(rng.integers(1, 3)))
        if value or not nonzero:
            return value


def random_polynomial(
    universe: VarUniverse,
    rng: np.random.Generator,
    names: Sequence[str],
    max_degree: int = 1,
    terms: int = 2,
) -> RatFun:
    total = universe.const(random_rational(rng))
    for _ in range(terms):
        monomial = universe.const(random_rational(rng, nonzero=True))
        for _ in range(int(rng.integers(1, max_degree + 1))):
            monomial = monomial * universe.var(names[int(rng.integers(0, len(names)))])
        total = total + monomial
    return total


def random_ratfun(universe: VarUniverse, rng: np.random.Generator, names: Sequence[str]) -> RatFun:
    numerator = random_polynomial(universe, rng, names)
    denominator = random_polynomial(universe, rng, names, terms=1) + 4
    return numerator / denominator


def random_form(
    universe: GenUniverse,
    rng: np.random.Generator,
    degree: int,
    names: Sequence[str],
    terms: int = 2,
    rational: bool = False,
) -> Form:
    """Sum of random coefficients times wedges of differentials of `names`."""
    total = Form.zero(universe)
    variables = universe.variables
    for _ in range(terms):
        chosen = rng.choice(len(names), size=degree, replace=False) if degree else []
        coeff = random_ratfun(variables, rng, names) if rational else random_polynomial(variables, rng, names)
        total = total + Form.from_terms(universe, [(coeff, ["d" + names[int(i)] for i in chosen])])
    return total


def random_matform(
    universe: GenUniverse,
    rng: np.random.Generator,
    size: int,
    degree: int,
    names: Sequence[str],
    density: float = 0.7,
    rational: bool = False,
) -> MatForm:
    rows = []
    for _ in range(size):
        row = []
        for _ in range(size):
            if rng.random() < density:
                row.append(random_form(universe, rng, degree, names, terms=1, rational=rational))
            else:
                row.append(Form.zero(universe))
        rows.append(row)
    return MatForm(universe, rows)


def random_invertible(universe: GenUniverse, rng: np.random.Generator, size: int, names: Sequence[str]) -> MatForm:
    for _ in range(50):
        g = MatForm(
            universe,
            [[random_polynomial(universe.variables, rng, names, terms=1) for _ in range(size)] for _ in range(size)],
        )
        if not determinant(g).is_zero:
            return g
    raise SingularMatrixError("no invertible matrix found")


def random_unipotent(universe: GenUniverse, rng: np.random.Generator, size: int, names: Sequence[str]) -> MatForm:
    """Upper unitriangular with random polynomial entries, so the inverse stays polynomial."""
    variables = universe.variables
    return MatForm(
        universe,
        [
            [
                variables.one if i == j else random_polynomial(variables, rng, names, terms=1) if j > i else variables.zero
                for j in range(size)
            ]
            for i in range(size)
        ],
    )


def generic_universe(size: int = 3) -> GenUniverse:
    return GenUniverse(VarUniverse.build(base=[f"x{i}" for i in range(1, size + 1)]))


def flat_connection(universe: GenUniverse, rng: np.random.Generator, size: int, names: Sequence[str]) -> MatForm:
    """A pure gauge dg g^-1, flat by construction."""
    return gauge(MatForm.zeros(universe, size), random_invertible(universe, rng, size, names))


def _constant_matrix(universe: GenUniverse, rng: np.random.Generator, size: int, diagonal: bool = False) -> MatForm:
    return from_scalars(
        universe,
        [
            [random_rational(rng) if (i == j or not diagonal) else 0 for j in range(size)]
            for i in range(size)
        ],
    )


def _phi(universe: GenUniverse, rng: np.random.Generator, size: int, diagonal: bool = False) -> MatForm:
    rows = []
    for i in range(size):
        row = []
        for j in range(size):
            if diagonal and i != j:
                row.append(Form.zero(universe))
                continue
            coefficient = random_polynomial(universe.variables, rng, PARAMETERS, terms=1)
            generator = PARAMETERS[int(rng.integers(0, len(PARAMETERS)))]
            row.append(Form.from_terms(universe, [(coefficient, ["d" + generator])]))
        rows.append(row)
    return MatForm(universe, rows)


def random_connection(
    rank: int,
    delta: int,
    rng: np.random.Generator,
    family: str = "generic",
) -> LogConnectionP1:
    """
    Families: "generic" (residues may depend on the parameters, usually not basic),
    "constant-residues" (random constant residues over symbolic points, usually not basic), "scalar"
    (A^nu = lambda_nu Id), "diagonal" (diagonal residues and Phi), "tensor" (a tensor product with
    commuting constant residues) and "constant-points" (rational marked points, constant residues).
    The last four are basic.
    """
    if family == "constant-points":
        points = [Point(value=Fraction(nu)) for nu in range(1, delta + 1)]
    else:
        points = [Point(symbol=f"a{nu}") for nu in range(1, delta + 1)]
    universe = p1_universe(points, PARAMETERS)
    if family == "generic":
        residues = []
        for _ in range(delta):
            grid = [
                [random_polynomial(universe.variables, rng, PARAMETERS[:1], terms=1) for _ in range(rank)]
                for _ in range(rank)
            ]
            residues.append(from_scalars(universe, grid))
        return LogConnectionP1(universe, points, residues, _phi(universe, rng, rank))
    if family == "constant-residues":
        residues = [_constant_matrix(universe, rng, rank) for _ in range(delta)]
        return LogConnectionP1(universe, points, residues, _phi(universe, rng, rank))
    if family == "scalar":
        scalars = [random_rational(rng) for _ in range(delta)]
        residues = [
            from_scalars(universe, [[s if i == j else 0 for j in range(rank)] for i in range(rank)])
            for s in scalars
        ]
        return LogConnectionP1(universe, points, residues, _phi(universe, rng, rank))
    if family == "diagonal":
        residues = [_constant_matrix(universe, rng, rank, diagonal=True) for _ in range(delta)]
        return LogConnectionP1(universe, points, residues, _phi(universe, rng, rank, diagonal=True))
    if family == "tensor":
        outer = rank if rng.integers(0, 2) else 1
        inner = rank // outer
        phi_m = _phi(universe, rng, outer)
        residues_n = [_constant_matrix(universe, rng, inner, diagonal=True) for _ in range(delta)]
        return tensor_connection(universe, points, phi_m, residues_n)
    if family == "constant-points":
        residues = [_constant_matrix(universe, rng, rank) for _ in range(delta)]
        return LogConnectionP1(universe, points, residues, MatForm.zeros(universe, rank))
    raise ValueError(f"unknown family {family!r}")


def worked_connection(
    delta: int = 2,
    residues: Sequence[Fraction | int] = (1, 2),
    with_phi: bool = True,
) -> LogConnectionP1:
    """Rank 1 over symbolic points a1..a_delta with scalar residues and Phi = t1 dt2 (or 0)."""
    points = [Point(symbol=f"a{nu}") for nu in range(1, delta + 1)]
    universe = p1_universe(points, PARAMETERS)
    matrices = [from_scalars(universe, [[value]]) for value in residues]
    if with_phi:
        entry = Form.from_terms(universe, [(universe.variables.var("t1"), ["dt2"])])
    else:
        entry = Form.zero(universe)
    return LogConnectionP1(universe, points, matrices, MatForm(universe, [[entry]]))


def mutation_connection() -> LogConnectionP1:
    """Rank 2, delta 2, scalar residues and Phi with a single entry t1 dt2 below the diagonal."""
    points = [Point(symbol="a1"), Point(symbol="a2")]
    universe = p1_universe(points, PARAMETERS)
    zero = Form.zero(universe)
    lower = Form.from_terms(universe, [(universe.variables.var("t1"), ["dt2"])])
    phi = MatForm(universe, [[zero, zero], [lower, zero]])
    residues = [from_scalars(universe, [[1, 0], [0, 1]]), from_scalars(universe, [[2, 0], [0, 2]])]
    return LogConnectionP1(universe, points, residues, phi)


def pushforward_universe() -> GenUniverse:
    return GenUniverse(VarUniverse.build(base=["s"]))


def random_finite_algebra(rng: np.random.Generator, degree: int, rank: int = 1) -> FiniteAlgebra:
    """A random separable monic polynomial over Q(s), optionally with a random connection."""
    universe = pushforward_universe()
    variables = universe.variables
    for _ in range(50):
        phi = [random_polynomial(variables, rng, ["s"], max_degree=2, terms=1) for _ in range(degree)]
        phi.append(variables.one)
        connection = [
            MatForm(
                universe,
                [
                    [Form.from_terms(universe, [(random_polynomial(variables, rng, ["s"], terms=1), ["ds"])]) for _ in range(rank)]
                    for _ in range(rank)
                ],
            )
            for _ in range(degree)
        ]
        try:
            return FiniteAlgebra(universe, phi, connection, rank=rank)
        except SingularMatrixError:
            continue
    raise SingularMatrixError("no separable polynomial found")


def split_algebra(roots: Sequence[str | int], connection: Sequence[MatForm] | None = None) -> FiniteAlgebra:
    """phi = prod (t - r_m) for roots given as expressions in s."""
    universe = pushforward_universe()
    variables = universe.variables
    values = [parse_ratfun(str(r), variables) for r in roots]
    phi = [variables.one]
    for root in values:
        shifted = [variables.zero] + phi
        phi = [shifted[k] - root * (phi[k] if k < len(phi) else variables.zero) for k in range(len(shifted))]
    return FiniteAlgebra(universe, phi, connection, values)


def random_splitting_perturbation(connection: LogConnectionP1, rng: np.random.Generator) -> MatForm:
    names = [v for v in connection.universe.variables.names if v != "z"]
    rows = []
    for _ in range(connection.rank * connection.delta):
        rows.append(
            [random_form(connection.universe, rng, 1, names, terms=1) for _ in range(connection.rank)]
        )
    return MatForm(connection.universe, rows)


def dlog_connection(universe: GenUniverse, rng: np.random.Generator, names: Sequence[str]) -> MatForm:
    """Rank 1 flat connection dlog f."""
    f = random_polynomial(universe.variables, rng, names, terms=2)
    while f.is_zero:
        f = random_polynomial(universe.variables, rng, names, terms=2)
    return MatForm(universe, [[dlog(f, universe)]])
