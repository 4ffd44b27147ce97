"""
Unit tests for csrr_app.pushforward module.
"""
import numpy as np
import pytest
from unittest import TestCase

from csrr_app import instances
from csrr_app.errors import SingularMatrixError
from csrr_app.exterior import Form
from csrr_app.matform import MatForm, determinant, from_scalars, trace
from csrr_app.pushforward import FiniteAlgebra, pushforward_build, pushforward_checks, vandermonde
from csrr_app.reports import Status


class TestFiniteAlgebra(TestCase):
    """
    Unit tests for arithmetic in L[t]/(phi).
    Test kind: unit_tests
    """

    def setUp(self):
        self.universe = instances.pushforward_universe()
        self.s = self.universe.variables.var("s")
        self.algebra = FiniteAlgebra(self.universe, [-self.s, 0, 1])

    @pytest.mark.timeout(30)
    def test_reduction(self):
        self.assertEqual(self.algebra.power(2), [self.s, 0])
        self.assertEqual(self.algebra.power(3), [0, self.s])
        self.assertEqual(self.algebra.power(5), [0, self.s**2])

    @pytest.mark.timeout(30)
    def test_trace_and_inverse(self):
        one, t = self.universe.variables.one, [0, 1]
        t = [self.universe.variables.const(c) for c in t]
        self.assertEqual(self.algebra.trace([one, self.universe.variables.zero]), 2)
        self.assertTrue(self.algebra.trace(t).is_zero)
        self.assertEqual(self.algebra.inverse(t), [0, 1 / self.s])

    @pytest.mark.timeout(30)
    def test_discriminant(self):
        self.assertEqual(self.algebra.discriminant(), 4 * self.s)

    @pytest.mark.timeout(30)
    def test_dt(self):
        ds = Form.differential(self.universe, "s")
        self.assertEqual(self.algebra.dt, [Form.zero(self.universe), ds * (1 / (2 * self.s))])

    @pytest.mark.timeout(30)
    def test_rejects_bad_polynomials(self):
        with self.assertRaises(SingularMatrixError):
            FiniteAlgebra(self.universe, [0, 0, 1])
        with self.assertRaises(ValueError):
            FiniteAlgebra(self.universe, [1, 2])


class TestPushforwardChecks(TestCase):
    """
    Unit tests for pushforward_build and pushforward_checks.
    Test kind: unit_tests
    """

    def setUp(self):
        self.universe = instances.pushforward_universe()
        self.s = self.universe.variables.var("s")
        self.ds = Form.differential(self.universe, "s")

    @pytest.mark.timeout(30)
    def test_worked_square_root(self):
        algebra = FiniteAlgebra(self.universe, [-self.s, 0, 1])
        data = pushforward_build(algebra)
        half = self.ds * (1 / (2 * self.s))
        zero = Form.zero(self.universe)
        self.assertEqual(data.connection, MatForm(self.universe, [[zero, zero], [zero, half]]))
        self.assertEqual(data.gram, from_scalars(self.universe, [[2, 0], [0, 2 * self.s]]))
        self.assertEqual(determinant(data.gram), 4 * self.s)
        self.assertEqual(data.w1, half)

        report = pushforward_checks(algebra, seed=1)
        self.assertEqual(report.status, Status.PASS)
        for key in ("trace_pairing_flat", "dlog_discriminant", "w1_decomposition", "gram_is_discriminant"):
            self.assertTrue(report.params[key], key)

    @pytest.mark.timeout(30)
    def test_constant_roots(self):
        algebra = instances.split_algebra([1, 2], [MatForm(self.universe, [[Form.zero(self.universe)]]), MatForm(self.universe, [[self.ds]])])
        data = pushforward_build(algebra)
        self.assertEqual(trace(data.connection), self.ds * 3)
        report = pushforward_checks(algebra)
        self.assertEqual(report.status, Status.PASS)
        self.assertTrue(report.params["split_gauge"])

    @pytest.mark.timeout(30)
    def test_moving_roots(self):
        algebra = instances.split_algebra(["s", "s + 1"], [MatForm(self.universe, [[self.ds]])])
        self.assertEqual(determinant(vandermonde(algebra)), 1)
        report = pushforward_checks(algebra)
        self.assertEqual(report.status, Status.PASS)

    @pytest.mark.timeout(30)
    def test_roots_with_unit_determinant(self):
        # Vandermonde determinant 2s - s = s, so Nw_1 only matches modulo dlog s
        algebra = instances.split_algebra(["s", "2*s"], [MatForm(self.universe, [[self.ds]])])
        report = pushforward_checks(algebra)
        self.assertEqual(report.params["split_nw1"], Status.PASS_MOD_DLOG)
        self.assertTrue(report.status.passed)

    @pytest.mark.timeout(120)
    def test_random_algebras(self):
        rng = np.random.default_rng(13)
        for degree, rank in ((2, 1), (3, 1), (2, 2)):
            algebra = instances.random_finite_algebra(rng, degree, rank)
            report = pushforward_checks(algebra)
            self.assertEqual(report.status, Status.PASS, report.params)
