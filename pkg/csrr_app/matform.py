"""
Matrices whose entries are differential forms.

Convention: row index = lower index j, column index = upper index k, so a connection matrix acts
by de_j = sum_k A[j][k] e_k, the curvature is F = dA - A^A and a gauge change e' = g e gives
gAg^-1 + dg g^-1. Products are ordinary matrix products with the wedge product on entries.
"""

from __future__ import annotations

from typing import Callable, Sequence

from csrr_app.errors import DegreeError, ShapeError, SingularMatrixError, UniverseMismatchError
from csrr_app.exterior import Form, GenUniverse
from csrr_app.ratfun import RatFun, Scalar

Entry = Form | RatFun | Scalar


class MatForm:
    __slots__ = ("universe", "rows", "cols", "entries")

    def __init__(self, universe: GenUniverse, entries: Sequence[Sequence[Entry]]):
        grid = []
        width = None
        for row in entries:
            row = [self._as_form(universe, e) for e in row]
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ShapeError("ragged matrix rows")
            grid.append(tuple(row))
        self.universe = universe
        self.rows = len(grid)
        self.cols = width or 0
        self.entries = tuple(grid)

    @staticmethod
    def _as_form(universe: GenUniverse, entry: Entry) -> Form:
        if isinstance(entry, Form):
            if entry.universe != universe:
                raise UniverseMismatchError(f"entry from {entry.universe!r} in a {universe!r} matrix")
            return entry
        return Form.scalar(universe, entry)

    @classmethod
    def zeros(cls, universe: GenUniverse, rows: int, cols: int | None = None) -> MatForm:
        zero = Form.zero(universe)
        return cls(universe, [[zero] * (rows if cols is None else cols) for _ in range(rows)])

    @classmethod
    def identity(cls, universe: GenUniverse, n: int) -> MatForm:
        zero, one = Form.zero(universe), Form.scalar(universe, 1)
        return cls(universe, [[one if i == j else zero for j in range(n)] for i in range(n)])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, index: tuple[int, int]) -> Form:
        i, j = index
        return self.entries[i][j]

    def _check(self, other: MatForm) -> None:
        if self.universe != other.universe:
            raise UniverseMismatchError(f"{self.universe!r} and {other.universe!r} differ")

    def map(self, fn: Callable[[Form], Form]) -> MatForm:
        return MatForm(self.universe, [[fn(e) for e in row] for row in self.entries])

    def __add__(self, other: MatForm) -> MatForm:
        self._check(other)
        if self.shape != other.shape:
            raise ShapeError(f"cannot add {self.shape} and {other.shape}")
        return MatForm(
            self.universe,
            [[a + b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)],
        )

    def __neg__(self) -> MatForm:
        return self.map(lambda e: -e)

    def __sub__(self, other: MatForm) -> MatForm:
        return self + (-other)

    def __mul__(self, scalar: RatFun | Scalar) -> MatForm:
        return self.map(lambda e: e * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other: MatForm) -> MatForm:
        return mat_mul(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MatForm):
            return NotImplemented
        return self.universe == other.universe and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        return f"MatForm({self.rows}x{self.cols})"

    @property
    def is_zero(self) -> bool:
        return all(e.is_zero for row in self.entries for e in row)

    def wedge_right(self, form: Form) -> MatForm:
        return self.map(lambda e: e.wedge(form))

    def wedge_left(self, form: Form) -> MatForm:
        return self.map(lambda e: form.wedge(e))

    def d(self) -> MatForm:
        return self.map(lambda e: e.d())

    def transpose(self) -> MatForm:
        return MatForm(
            self.universe,
            [[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)],
        )

    def trace(self) -> Form:
        return trace(self)

    def lift(self, universe: GenUniverse) -> MatForm:
        return MatForm(universe, [[e.lift(universe) for e in row] for row in self.entries])

    def transfer(self, universe: GenUniverse) -> MatForm:
        return MatForm(universe, [[e.transfer(universe) for e in row] for row in self.entries])

    def block(self, row: int, col: int, height: int, width: int | None = None) -> MatForm:
        """Sub-matrix with top-left corner (row*height, col*width)."""
        width = height if width is None else width
        return MatForm(
            self.universe,
            [
                list(self.entries[row * height + i][col * width: (col + 1) * width])
                for i in range(height)
            ],
        )

    def entry_degrees(self) -> set[int]:
        degrees = set()
        for row in self.entries:
            for e in row:
                degrees |= e.degrees()
        return degrees

    def require_degree(self, degree: int, what: str = "matrix") -> None:
        extra = self.entry_degrees() - {degree}
        if extra:
            raise DegreeError(f"{what} entries must be {degree}-forms, found degrees {sorted(extra)}")

    def scalars(self) -> list[list[RatFun]]:
        """Entries of a matrix of 0-forms."""
        self.require_degree(0)
        return [[e.scalar_value() for e in row] for row in self.entries]

    def nonzero_entries(self):
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                if not e.is_zero:
                    yield i, j, e


def from_scalars(universe: GenUniverse, grid: Sequence[Sequence[RatFun | Scalar]]) -> MatForm:
    return MatForm(universe, [[Form.scalar(universe, v) for v in row] for row in grid])


def mat_mul(x: MatForm, y: MatForm) -> MatForm:
    x._check(y)
    if x.cols != y.rows:
        raise ShapeError(f"cannot multiply {x.shape} by {y.shape}")
    zero = Form.zero(x.universe)
    result = []
    for i in range(x.rows):
        row = []
        for k in range(y.cols):
            total = zero
            for j in range(x.cols):
                left = x.entries[i][j]
                if left.is_zero:
                    continue
                right = y.entries[j][k]
                if right.is_zero:
                    continue
                total = total + left.wedge(right)
            row.append(total)
        result.append(row)
    return MatForm(x.universe, result)


def trace(x: MatForm) -> Form:
    if not x.is_square:
        raise ShapeError(f"trace of a {x.shape} matrix")
    total = Form.zero(x.universe)
    for i in range(x.rows):
        total = total + x.entries[i][i]
    return total


def commutator(x: MatForm, y: MatForm) -> MatForm:
    return x @ y - y @ x


def curvature(a: MatForm) -> MatForm:
    if not a.is_square:
        raise ShapeError(f"connection matrix of shape {a.shape}")
    a.require_degree(1, "connection")
    return a.d() - a @ a


def curvature_t(a: MatForm) -> list[MatForm]:
    """Coefficients in t of the curvature of tA: [0, dA, -A^A]."""
    if not a.is_square:
        raise ShapeError(f"connection matrix of shape {a.shape}")
    a.require_degree(1, "connection")
    return [MatForm.zeros(a.universe, a.rows), a.d(), -(a @ a)]


def tpoly_mul(p: Sequence[MatForm], q: Sequence[MatForm]) -> list[MatForm]:
    """Product of matrix-valued polynomials in t, given by coefficient lists."""
    universe = (p[0] if p else q[0]).universe
    size = p[0].rows if p else q[0].rows
    result = [MatForm.zeros(universe, size) for _ in range(len(p) + len(q) - 1)]
    for i, x in enumerate(p):
        if x.is_zero:
            continue
        for j, y in enumerate(q):
            if y.is_zero:
                continue
            result[i + j] = result[i + j] + x @ y
    return result


def matrix_power(x: MatForm, p: int) -> MatForm:
    result = MatForm.identity(x.universe, x.rows)
    for _ in range(p):
        result = result @ x
    return result


def chern_weil(a: MatForm, p: int) -> Form:
    """Tr(F^p), the Chern-Weil representative of the p-th Newton class."""
    return trace(matrix_power(curvature(a), p))


def check_bianchi(a: MatForm) -> bool:
    f = curvature(a)
    return f.d() == a @ f - f @ a


def kron(x: MatForm, y: MatForm) -> MatForm:
    x._check(y)
    rows = []
    for i in range(x.rows):
        for k in range(y.rows):
            rows.append(
                [x.entries[i][j].wedge(y.entries[k][l]) for j in range(x.cols) for l in range(y.cols)]
            )
    return MatForm(x.universe, rows)


def block_matrix(blocks: Sequence[Sequence[MatForm]]) -> MatForm:
    universe = blocks[0][0].universe
    rows = []
    for block_row in blocks:
        height = block_row[0].rows
        for b in block_row:
            if b.rows != height:
                raise ShapeError("blocks in one row must share a height")
        for i in range(height):
            row = []
            for b in block_row:
                row.extend(b.entries[i])
            rows.append(row)
    return MatForm(universe, rows)


def block_diagonal(blocks: Sequence[MatForm]) -> MatForm:
    universe = blocks[0].universe
    return block_matrix(
        [
            [b if i == j else MatForm.zeros(universe, blocks[i].rows, b.cols) for j, b in enumerate(blocks)]
            for i in range(len(blocks))
        ]
    )


def scalar_determinant(grid: Sequence[Sequence[RatFun]]) -> RatFun:
    """Fraction-free (Bareiss) elimination."""
    n = len(grid)
    if n == 0:
        raise ShapeError("determinant of an empty matrix")
    m = [list(row) for row in grid]
    universe = m[0][0].universe
    sign = 1
    previous = universe.one
    for k in range(n - 1):
        if m[k][k].is_zero:
            swap = next((i for i in range(k + 1, n) if not m[i][k].is_zero), None)
            if swap is None:
                return universe.zero
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / previous
        previous = m[k][k]
    det = m[n - 1][n - 1]
    return det if sign > 0 else -det


def scalar_inverse(grid: Sequence[Sequence[RatFun]]) -> list[list[RatFun]]:
    """Gauss-Jordan over the rational function field."""
    n = len(grid)
    universe = grid[0][0].universe
    zero, one = universe.zero, universe.one
    augmented = [list(row) + [one if i == j else zero for j in range(n)] for i, row in enumerate(grid)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if not augmented[r][col].is_zero), None)
        if pivot is None:
            raise SingularMatrixError("matrix is not invertible")
        augmented[col], augmented[pivot] = augmented[pivot], augmented[col]
        scale = augmented[col][col].inverse()
        augmented[col] = [x * scale for x in augmented[col]]
        for r in range(n):
            factor = augmented[r][col]
            if r == col or factor.is_zero:
                continue
            augmented[r] = [x - factor * y for x, y in zip(augmented[r], augmented[col])]
    return [row[n:] for row in augmented]


def determinant(g: MatForm) -> RatFun:
    if not g.is_square:
        raise ShapeError(f"determinant of a {g.shape} matrix")
    return scalar_determinant(g.scalars())


def inverse(g: MatForm) -> MatForm:
    if not g.is_square:
        raise ShapeError(f"inverse of a {g.shape} matrix")
    return from_scalars(g.universe, scalar_inverse(g.scalars()))


def gauge(a: MatForm, g: MatForm) -> MatForm:
    """Connection matrix in the frame e' = g e: g A g^-1 + dg g^-1."""
    if a.shape != g.shape or not a.is_square:
        raise ShapeError(f"gauge of {a.shape} by {g.shape}")
    g_inv = inverse(g)
    return g @ a @ g_inv + g.d() @ g_inv
