"""
Relative logarithmic connections on the trivial rank N bundle over P^1 x S.

The connection matrix is A = sum_nu A^nu dlog(z - a_nu) + Phi, where the residues A^nu are
z-free matrices of functions, Phi is a z-free matrix of 1-forms without dz and the marked points
a_nu are base variables or rational constants. Marked points are labelled 1..delta throughout;
matrix indices are 0-based.

The Gauss-Manin data of a basic connection live on the rank N*delta bundle of relative de Rham
cohomology. Basis element (nu, j) has flat index (nu - 1) * N + j.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from csrr_app.chern_simons import CSClass, transgress
from csrr_app.errors import ConsistencyError, InvalidConnectionError, ShapeError
from csrr_app.exterior import Form, GenUniverse, dlog
from csrr_app.matform import MatForm, block_matrix, commutator, curvature, kron, trace
from csrr_app.ratfun import RatFun, VarKind, VarUniverse
from csrr_app.reports import Verdict

logger = logging.getLogger(__name__)

FIBER = "z"

# Sign in Psi' = Psi + s * (phi o nabla_rel) that keeps Tr(Phi') - Tr(Psi') invariant.
SPLITTING_SIGN = -1
# Sign in Phi o nabla_rel = s * (d nabla_rel + nabla_rel o B) for basic connections.
COMPATIBILITY_SIGN = 1


@dataclass(frozen=True)
class Point:
    symbol: str | None = None
    value: Fraction | None = None

    def __post_init__(self):
        if (self.symbol is None) == (self.value is None):
            raise InvalidConnectionError("a marked point is either a symbol or a rational value")
        if self.value is not None:
            object.__setattr__(self, "value", Fraction(self.value))

    def __str__(self) -> str:
        return self.symbol if self.symbol is not None else str(self.value)


def p1_universe(
    points: Sequence[Point],
    parameters: Sequence[str] = (),
    extra_base: Sequence[str] = (),
) -> GenUniverse:
    """Point symbols, then extra base variables and parameters, then the fiber coordinate."""
    base = [p.symbol for p in points if p.symbol is not None] + list(extra_base)
    return GenUniverse(VarUniverse.build(base=base, parameters=parameters, fiber=FIBER))


@dataclass(frozen=True)
class BasicVerdict:
    basic: bool
    witness: Form | None
    curvature_is_base: bool
    residues_satisfy_system: bool


@dataclass(frozen=True)
class GaussManinData:
    phi: MatForm
    blocks: tuple[tuple[MatForm, ...], ...]
    b: MatForm
    nabla_rel: MatForm

    @property
    def diagonal(self) -> list[MatForm]:
        return [self.blocks[tau][tau] for tau in range(len(self.blocks))]


@dataclass(frozen=True)
class SplittingPerturbation:
    phi: MatForm
    psi: MatForm
    trace_difference: Form


class LogConnectionP1:
    def __init__(
        self,
        universe: GenUniverse,
        points: Sequence[Point],
        residues: Sequence[MatForm],
        phi: MatForm | None = None,
    ):
        self.universe = universe
        self.points = tuple(points)
        self.residues = tuple(residues)
        rank = self.residues[0].rows if self.residues else 0
        self.phi = phi if phi is not None else MatForm.zeros(universe, rank)
        self._validate()

    def _validate(self) -> None:
        u = self.universe
        if u.n_rho:
            raise InvalidConnectionError("connection universe must not carry rho generators")
        if FIBER not in u.variables or u.variables.kind(FIBER) is not VarKind.FIBER:
            raise InvalidConnectionError(f"universe needs the fiber variable {FIBER!r}")
        if not self.points:
            raise InvalidConnectionError("at least one marked point is required")
        if len(self.residues) != len(self.points):
            raise InvalidConnectionError(
                f"{len(self.points)} points but {len(self.residues)} residue matrices"
            )
        symbols = [p.symbol for p in self.points if p.symbol is not None]
        values = [p.value for p in self.points if p.value is not None]
        if len(set(symbols)) != len(symbols) or len(set(values)) != len(values):
            raise InvalidConnectionError("marked points must be distinct")
        for symbol in symbols:
            if symbol not in u.variables or u.variables.kind(symbol) is not VarKind.BASE:
                raise InvalidConnectionError(f"point {symbol!r} is not a base variable")
        n = self.rank
        z_index = u.differential(FIBER)
        for nu, residue in enumerate(self.residues, start=1):
            if residue.universe != u or residue.shape != (n, n):
                raise InvalidConnectionError(f"residue {nu} must be an {n}x{n} matrix over the connection universe")
            if residue.entry_degrees() - {0}:
                raise InvalidConnectionError(f"residue {nu} must have function entries")
            if self._depends_on_fiber(residue, z_index):
                raise InvalidConnectionError(f"residue {nu} depends on {FIBER}")
        if self.phi.universe != u or self.phi.shape != (n, n):
            raise InvalidConnectionError(f"Phi must be an {n}x{n} matrix over the connection universe")
        if self.phi.entry_degrees() - {1}:
            raise InvalidConnectionError("Phi must have 1-form entries")
        if self._depends_on_fiber(self.phi, z_index):
            raise InvalidConnectionError(f"Phi must not involve {FIBER} or d{FIBER}")

    @staticmethod
    def _depends_on_fiber(matrix: MatForm, z_index: int) -> bool:
        for _, _, entry in matrix.nonzero_entries():
            for key, coeff in entry.terms.items():
                if z_index in key or z_index in coeff.support():
                    return True
        return False

    def __repr__(self) -> str:
        points = ", ".join(str(p) for p in self.points)
        return f"LogConnectionP1(N={self.rank}, points=[{points}])"

    @property
    def rank(self) -> int:
        return self.residues[0].rows

    @property
    def delta(self) -> int:
        return len(self.points)

    @property
    def symbolic_points(self) -> list[int]:
        return [nu for nu, p in enumerate(self.points, start=1) if p.symbol is not None]

    def point_value(self, nu: int) -> RatFun:
        point = self.points[nu - 1]
        variables = self.universe.variables
        return variables.var(point.symbol) if point.symbol is not None else variables.const(point.value)

    @cached_property
    def _log_forms(self) -> list[Form]:
        z = self.universe.variables.var(FIBER)
        return [dlog(z - self.point_value(nu), self.universe) for nu in range(1, self.delta + 1)]

    def log_form(self, nu: int) -> Form:
        """dlog(z - a_nu)."""
        return self._log_forms[nu - 1]

    def base_dlog(self, nu: int, mu: int) -> Form:
        """dlog(a_nu - a_mu); zero when both points are constants."""
        return dlog(self.point_value(nu) - self.point_value(mu), self.universe)

    def base_generators(self) -> set[int]:
        z_index = self.universe.differential(FIBER)
        return set(range(self.universe.nvars)) - {z_index}

    def total_matrix(self) -> MatForm:
        total = self.phi
        for nu, residue in enumerate(self.residues, start=1):
            total = total + residue.wedge_right(self.log_form(nu))
        return total

    def residue(self, at: int | str) -> MatForm:
        """Residue at the marked point `at` (1-based) or at infinity ("inf")."""
        if at == "inf":
            total = MatForm.zeros(self.universe, self.rank)
            for residue in self.residues:
                total = total - residue
            return total
        if not 1 <= int(at) <= self.delta:
            raise InvalidConnectionError(f"no marked point {at}")
        return self.residues[int(at) - 1]

    def discrepancies(self) -> list[MatForm]:
        """X_nu = dA^nu + [A^nu, Phi] + sum_mu [A^nu, A^mu] dlog(a_nu - a_mu); all zero iff basic."""
        result = []
        for nu, a_nu in enumerate(self.residues, start=1):
            x = a_nu.d() + commutator(a_nu, self.phi)
            for mu, a_mu in enumerate(self.residues, start=1):
                if mu == nu:
                    continue
                bracket = commutator(a_nu, a_mu)
                if not bracket.is_zero:
                    x = x + bracket.wedge_right(self.base_dlog(nu, mu))
            result.append(x)
        return result

    def check_basic(self) -> BasicVerdict:
        z_index = self.universe.differential(FIBER)
        f = curvature(self.total_matrix())
        curvature_witness = None
        for _, _, entry in f.nonzero_entries():
            vertical = Form(
                entry.universe,
                {k: v for k, v in entry.terms.items() if z_index in k or z_index in v.support()},
            )
            if not vertical.is_zero:
                curvature_witness = vertical
                break
        system_witness = None
        for x in self.discrepancies():
            found = next((e for _, _, e in x.nonzero_entries()), None)
            if found is not None:
                system_witness = found
                break
        by_curvature = curvature_witness is None
        by_system = system_witness is None
        if by_curvature != by_system:
            raise ConsistencyError(
                f"basicness routes disagree: curvature={by_curvature}, residue system={by_system}"
            )
        if by_curvature and f != self.phi.d() - self.phi @ self.phi:
            raise ConsistencyError("curvature of a basic connection differs from the curvature of Phi")
        logger.debug("%r basic=%s", self, by_curvature)
        return BasicVerdict(by_curvature, system_witness, by_curvature, by_system)

    @cached_property
    def gm(self) -> GaussManinData:
        blocks = []
        for nu in range(1, self.delta + 1):
            row = []
            for tau in range(1, self.delta + 1):
                if nu == tau:
                    psi = self.phi
                    for theta in range(1, self.delta + 1):
                        if theta != nu:
                            psi = psi + self.residues[theta - 1].wedge_right(self.base_dlog(nu, theta))
                    row.append(psi)
                else:
                    row.append(-self.residues[tau - 1].wedge_right(self.base_dlog(nu, tau)))
            blocks.append(tuple(row))
        return GaussManinData(
            phi=self.phi,
            blocks=tuple(blocks),
            b=block_matrix(blocks),
            nabla_rel=block_matrix([list(self.residues)]),
        )

    def gm_data(self) -> GaussManinData:
        return self.gm

    def nw_bundle(self, n: int) -> CSClass:
        return transgress(self.total_matrix(), n)

    def nw_gm(self, n: int) -> Form:
        """Nw_n(Phi) - Nw_n(GM), cross-checked against the block-diagonal route."""
        data = self.gm
        diagonal = Form.zero(self.universe)
        for psi in data.diagonal:
            diagonal = diagonal + transgress(psi, n).form
        full = transgress(data.b, n).form
        if full != diagonal:
            raise ConsistencyError(f"transgression of B differs from the sum over its diagonal blocks (n={n})")
        return transgress(data.phi, n).form - full

    def check_lemma_4_3(self, word: Sequence[str]) -> Verdict:
        """Tr of a word in B and dB equals the sum of the same traces over the diagonal blocks."""
        data = self.gm
        full = trace(_evaluate_word(data.b, word))
        diagonal = Form.zero(self.universe)
        for psi in data.diagonal:
            diagonal = diagonal + trace(_evaluate_word(psi, word))
        difference = full - diagonal
        return Verdict(difference.is_zero, None if difference.is_zero else difference)

    def check_gm_compatibility(self) -> Verdict:
        """M_Phi M_nabla_rel = s (d M_nabla_rel + M_nabla_rel M_B); holds exactly when basic."""
        data = self.gm
        lhs = data.phi @ data.nabla_rel
        rhs = (data.nabla_rel.d() + data.nabla_rel @ data.b) * COMPATIBILITY_SIGN
        difference = lhs - rhs
        witness = next((e for _, _, e in difference.nonzero_entries()), None)
        return Verdict(witness is None, witness)

    def perturb_splitting(self, perturbation: MatForm) -> SplittingPerturbation:
        """Change the splitting by phi, stored as an (N*delta) x N matrix of base 1-forms."""
        data = self.gm
        n, delta = self.rank, self.delta
        if perturbation.shape != (n * delta, n):
            raise ShapeError(f"splitting perturbation must be {n * delta}x{n}, got {perturbation.shape}")
        phi_prime = data.phi - data.nabla_rel @ perturbation
        psi_prime = data.b + (perturbation @ data.nabla_rel) * SPLITTING_SIGN
        return SplittingPerturbation(phi_prime, psi_prime, trace(phi_prime) - trace(psi_prime))

    def with_residues(self, residues: Sequence[MatForm], phi: MatForm | None = None) -> LogConnectionP1:
        return LogConnectionP1(self.universe, self.points, residues, self.phi if phi is None else phi)


def _evaluate_word(b: MatForm, word: Sequence[str]) -> MatForm:
    factors = {"B": b, "dB": b.d()}
    product = MatForm.identity(b.universe, b.rows)
    for letter in word:
        try:
            product = product @ factors[letter]
        except KeyError:
            raise ValueError(f"unknown letter {letter!r}, expected 'B' or 'dB'") from None
    return product


def gm_words(max_length: int) -> list[tuple[str, ...]]:
    words: list[tuple[str, ...]] = [()]
    frontier: list[tuple[str, ...]] = [()]
    for _ in range(max_length):
        frontier = [w + (letter,) for w in frontier for letter in ("B", "dB")]
        words.extend(frontier)
    return words[1:]


def mutate_residue(connection: LogConnectionP1, nu: int, j: int, k: int, delta: Fraction | int = 1) -> LogConnectionP1:
    """The same connection with A^nu[j][k] shifted by a constant."""
    residues = list(connection.residues)
    target = residues[nu - 1]
    entries = [list(row) for row in target.entries]
    entries[j][k] = entries[j][k] + Form.scalar(connection.universe, delta)
    residues[nu - 1] = MatForm(connection.universe, entries)
    return connection.with_residues(residues)


def tensor_connection(
    universe: GenUniverse,
    points: Sequence[Point],
    phi_m: MatForm,
    residues_n: Sequence[MatForm],
) -> LogConnectionP1:
    """(M, Phi_M) tensored with the trivial bundle carrying constant commuting residues C^nu."""
    for nu, c in enumerate(residues_n, start=1):
        if any(not v.is_constant for row in c.scalars() for v in row):
            raise InvalidConnectionError(f"tensor residue {nu} must be constant")
    for i, c in enumerate(residues_n):
        for other in residues_n[i + 1:]:
            if not commutator(c, other).is_zero:
                raise InvalidConnectionError("tensor residues must commute")
    size = residues_n[0].rows
    residues = [kron(MatForm.identity(universe, phi_m.rows), c) for c in residues_n]
    phi = kron(phi_m, MatForm.identity(universe, size))
    return LogConnectionP1(universe, points, residues, phi)


def search_basic(
    rank: int,
    delta: int,
    rng: np.random.Generator,
    trials: int = 20,
    entry_range: int = 2,
) -> list[LogConnectionP1]:
    """Random constant residues with Phi = 0 that come out basic and do not all commute."""
    found = []
    for trial in range(trials):
        symbolic = bool(rng.integers(0, 2))
        if symbolic:
            points = [Point(symbol=f"a{nu}") for nu in range(1, delta + 1)]
        else:
            points = [Point(value=Fraction(nu)) for nu in range(1, delta + 1)]
        universe = p1_universe(points)
        residues = [
            MatForm(
                universe,
                [
                    [Form.scalar(universe, int(rng.integers(-entry_range, entry_range + 1))) for _ in range(rank)]
                    for _ in range(rank)
                ],
            )
            for _ in range(delta)
        ]
        connection = LogConnectionP1(universe, points, residues)
        noncommuting = any(
            not commutator(x, y).is_zero for i, x in enumerate(residues) for y in residues[i + 1:]
        )
        if noncommuting and connection.check_basic().basic:
            found.append(connection)
        logger.debug("search_basic trial %d symbolic=%s noncommuting=%s", trial, symbolic, noncommuting)
    return found
