"""
Pushforward of a connection along a finite etale map.

M = L[t]/(phi) for a monic separable phi of degree r over L = Q(variables), with basis 1, t, ...,
t^(r-1). A rank N connection on M, d + sum_l t^l A_l, pushes forward to a rank rN connection on L
with basis t^i e_j (flat index i*N + j). Elements of M are coefficient lists, lowest power first.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

from csrr_app.chern_simons import transgress
from csrr_app.errors import ShapeError, SingularMatrixError
from csrr_app.exterior import Form, GenUniverse, dlog
from csrr_app.matform import (
    MatForm,
    block_diagonal,
    determinant,
    from_scalars,
    gauge,
    scalar_determinant,
    scalar_inverse,
    trace,
)
from csrr_app.ratfun import RatFun
from csrr_app.reports import Status, Stopwatch, VerificationReport, worst_status

logger = logging.getLogger(__name__)


class FiniteAlgebra:
    def __init__(
        self,
        universe: GenUniverse,
        phi: Sequence[RatFun],
        connection: Sequence[MatForm] | None = None,
        roots: Sequence[RatFun] | None = None,
        rank: int = 1,
    ):
        """phi lists all coefficients c_0..c_r of the monic polynomial; connection lists A_0..A_(r-1)."""
        self.universe = universe
        self.phi = [universe.variables.const(c) for c in phi]
        if len(self.phi) < 2 or self.phi[-1] != 1:
            raise ValueError("phi must be monic of degree at least 1")
        self.degree = len(self.phi) - 1
        self.rank = connection[0].rows if connection else rank
        connection = list(connection or [])
        for a in connection:
            if a.shape != (self.rank, self.rank):
                raise ShapeError(f"connection coefficient of shape {a.shape}, expected rank {self.rank}")
            a.require_degree(1, "connection")
        if len(connection) > self.degree:
            raise ShapeError("connection must be reduced modulo phi")
        self.connection = connection + [
            MatForm.zeros(universe, self.rank) for _ in range(self.degree - len(connection))
        ]
        self.roots = [universe.variables.const(x) for x in roots] if roots else None
        if self.discriminant().is_zero:
            raise SingularMatrixError("phi is not separable")

    @property
    def _zero(self) -> RatFun:
        return self.universe.variables.zero

    @cached_property
    def powers(self) -> list[list[RatFun]]:
        """Coefficients of t^k reduced modulo phi, for k < 2r."""
        r = self.degree
        table = []
        current = [self._zero] * r
        current[0] = self.universe.variables.one
        for _ in range(2 * r):
            table.append(current)
            top = current[-1]
            shifted = [self._zero] + current[:-1]
            current = [x - top * c for x, c in zip(shifted, self.phi[:-1])]
        return table

    def reduce(self, coefficients: Sequence[RatFun]) -> list[RatFun]:
        result = [self._zero] * self.degree
        for k, a in enumerate(coefficients):
            if a.is_zero:
                continue
            row = self.power(k)
            result = [x + a * y for x, y in zip(result, row)]
        return result

    def reduce_forms(self, coefficients: Sequence[Form]) -> list[Form]:
        result = [Form.zero(self.universe)] * self.degree
        for k, a in enumerate(coefficients):
            if a.is_zero:
                continue
            row = self.power(k)
            result = [x + a * y for x, y in zip(result, row)]
        return result

    def power(self, k: int) -> list[RatFun]:
        if k < len(self.powers):
            return self.powers[k]
        return self.multiply(self.powers[1], self.power(k - 1))

    def multiply(self, x: Sequence[RatFun], y: Sequence[RatFun]) -> list[RatFun]:
        product = [self._zero] * (len(x) + len(y) - 1)
        for i, a in enumerate(x):
            for j, b in enumerate(y):
                product[i + j] = product[i + j] + a * b
        return self.reduce(product)

    def multiplication_matrix(self, x: Sequence[RatFun]) -> list[list[RatFun]]:
        """Row i holds the coefficients of x * t^i."""
        return [self.reduce([self._zero] * i + list(x)) for i in range(self.degree)]

    def trace(self, x: Sequence[RatFun]) -> RatFun:
        m = self.multiplication_matrix(x)
        total = self._zero
        for i in range(self.degree):
            total = total + m[i][i]
        return total

    def inverse(self, x: Sequence[RatFun]) -> list[RatFun]:
        return scalar_inverse(self.multiplication_matrix(x))[0]

    def phi_prime(self) -> list[RatFun]:
        return [self.phi[k] * k for k in range(1, self.degree + 1)]

    def discriminant(self) -> RatFun:
        r = self.degree
        sign = -1 if (r * (r - 1) // 2) % 2 else 1
        return scalar_determinant(self.multiplication_matrix(self.phi_prime())) * sign

    @cached_property
    def dt(self) -> list[Form]:
        """dt = -(d_L phi)(t) / phi'(t) in M (x) Omega_L."""
        inv = self.inverse(self.phi_prime())
        dphi = [Form.scalar(self.universe, c).d() for c in self.phi[:-1]]
        product = [Form.zero(self.universe)] * (2 * self.degree - 1)
        for i, a in enumerate(dphi):
            for j, b in enumerate(inv):
                product[i + j] = product[i + j] - a * b
        return self.reduce_forms(product)

    def d_basis(self, i: int) -> list[Form]:
        """d(t^i) = i t^(i-1) dt, reduced."""
        if i == 0:
            return [Form.zero(self.universe)] * self.degree
        shifted = [Form.zero(self.universe)] * (i - 1) + [f * i for f in self.dt]
        return self.reduce_forms(shifted)

    def connection_at(self, value: RatFun) -> MatForm:
        total = MatForm.zeros(self.universe, self.rank)
        for l, a in enumerate(self.connection):
            total = total + a * value**l
        return total


@dataclass(frozen=True)
class PushforwardData:
    connection: MatForm
    beta: tuple[tuple[Form, ...], ...]
    gram: MatForm
    w1: Form
    trace_part: Form
    torsion_part: Form


def pushforward_build(algebra: FiniteAlgebra) -> PushforwardData:
    r, n = algebra.degree, algebra.rank
    universe = algebra.universe
    beta = tuple(tuple(algebra.d_basis(i)) for i in range(r))
    rows = []
    for i in range(r):
        for j in range(n):
            row = []
            for m in range(r):
                for k in range(n):
                    entry = beta[i][m] if j == k else Form.zero(universe)
                    for l, a in enumerate(algebra.connection):
                        c = algebra.power(i + l)[m]
                        if not c.is_zero:
                            entry = entry + a[j, k] * c
                    row.append(entry)
            rows.append(row)
    b = MatForm(universe, rows)
    gram = from_scalars(universe, [[algebra.trace(algebra.power(i + j)) for j in range(r)] for i in range(r)])
    trace_part = Form.zero(universe)
    for l, a in enumerate(algebra.connection):
        t_l = algebra.trace(algebra.power(l))
        if not t_l.is_zero:
            trace_part = trace_part + trace(a) * t_l
    torsion_part = Form.zero(universe)
    for j in range(r):
        torsion_part = torsion_part + beta[j][j]
    torsion_part = torsion_part * n
    return PushforwardData(b, beta, gram, trace(b), trace_part, torsion_part)


def _base_connection(algebra: FiniteAlgebra, data: PushforwardData) -> MatForm:
    return MatForm(algebra.universe, [list(row) for row in data.beta])


def vandermonde(algebra: FiniteAlgebra) -> MatForm:
    """V[(i,j)][(m,k)] = r_m^i delta_jk, the frame change to the split basis."""
    r, n = algebra.degree, algebra.rank
    grid = []
    for i in range(r):
        for j in range(n):
            grid.append([algebra.roots[m] ** i if j == k else 0 for m in range(r) for k in range(n)])
    return from_scalars(algebra.universe, grid)


def _split_statuses(algebra: FiniteAlgebra, data: PushforwardData, params: dict) -> list[Status]:
    universe = algebra.universe
    t = universe.variables
    product = [t.one]
    for root in algebra.roots:
        shifted = [t.zero] + product
        product = [shifted[k] - root * (product[k] if k < len(product) else t.zero) for k in range(len(shifted))]
    if product != algebra.phi:
        raise ValueError("declared roots do not factor phi")
    diagonal = block_diagonal([algebra.connection_at(root) for root in algebra.roots])
    v = vandermonde(algebra)
    gauge_ok = gauge(diagonal, v) == data.connection
    params["split_gauge"] = gauge_ok
    statuses = [Status.PASS if gauge_ok else Status.FAIL]
    for n in (1, 2):
        lhs = transgress(data.connection, n).form
        rhs = Form.zero(universe)
        for root in algebra.roots:
            rhs = rhs + transgress(algebra.connection_at(root), n).form
        difference = lhs - rhs
        if difference.is_zero:
            status = Status.PASS
        elif n == 1 and difference == dlog(determinant(v), universe):
            status = Status.PASS_MOD_DLOG
            params["split_unit"] = determinant(v)
        elif n >= 2 and difference.d().is_zero:
            status = Status.PASS_MOD_EXACT
        else:
            status = Status.FAIL
        params[f"split_nw{n}"] = status
        statuses.append(status)
    return statuses


def pushforward_checks(algebra: FiniteAlgebra, seed: int | None = None) -> VerificationReport:
    watch = Stopwatch()
    data = pushforward_build(algebra)
    universe = algebra.universe
    b0 = _base_connection(algebra, data)
    gram = data.gram
    params: dict = {"r": algebra.degree, "N": algebra.rank, "phi": list(algebra.phi), "w1": data.w1}

    flat_pairing = gram.d() == b0 @ gram + gram @ b0.transpose()
    det_gram = determinant(gram)
    dlog_disc = trace(b0) * 2 == dlog(det_gram, universe)
    decomposition = data.w1 == data.trace_part + data.torsion_part
    discriminant_matches = det_gram == algebra.discriminant()
    params.update(
        {
            "trace_pairing_flat": flat_pairing,
            "dlog_discriminant": dlog_disc,
            "w1_decomposition": decomposition,
            "gram_is_discriminant": discriminant_matches,
        }
    )
    statuses = [
        Status.PASS if ok else Status.FAIL
        for ok in (flat_pairing, dlog_disc, decomposition, discriminant_matches)
    ]
    if algebra.roots is not None:
        statuses.extend(_split_statuses(algebra, data, params))
    status = worst_status(statuses)
    logger.info("pushforward r=%d N=%d status=%s", algebra.degree, algebra.rank, status.value)
    witness = None
    if not flat_pairing:
        witness = gram.d() - (b0 @ gram + gram @ b0.transpose())
    return VerificationReport("pushforward", params, status, witness, seed, watch.millis)
