"""
Unit tests for csrr_app.exterior module.
"""
import pytest
from unittest import TestCase

from csrr_app.errors import DegreeError, UnknownVariableError
from csrr_app.exterior import (
    Form,
    GenUniverse,
    NumericForm,
    d,
    dlog,
    eval_numeric_form,
    in_base_ideal,
    pullback_section,
    rho_assemble,
    rho_extract,
    substitute_rho,
    wedge,
    wedge_all,
)
from csrr_app.ratfun import VarUniverse


class TestWedge(TestCase):
    """
    Unit tests for the graded-commutative wedge product.
    Test kind: unit_tests
    """

    def setUp(self):
        self.universe = GenUniverse(VarUniverse.build(base=["x", "y", "w"]))
        self.x = self.universe.variables.var("x")
        self.dx = Form.differential(self.universe, "x")
        self.dy = Form.differential(self.universe, "y")
        self.dw = Form.differential(self.universe, "w")

    @pytest.mark.timeout(30)
    def test_anticommutes(self):
        self.assertEqual(self.dx.wedge(self.dy), -self.dy.wedge(self.dx))
        self.assertTrue(self.dx.wedge(self.dx).is_zero)

    @pytest.mark.timeout(30)
    def test_from_terms_sorts_with_sign(self):
        form = Form.from_terms(self.universe, [(3, ["dw", "dx"])])
        self.assertEqual(form, self.dx.wedge(self.dw) * -3)
        self.assertTrue(Form.from_terms(self.universe, [(1, ["dx", "dx"])]).is_zero)

    @pytest.mark.timeout(30)
    def test_associative(self):
        a = self.dx * self.x + self.dy
        b = self.dy + self.dw * 2
        c = self.dw * self.x
        self.assertEqual(wedge(wedge(a, b), c), wedge(a, wedge(b, c)))

    @pytest.mark.timeout(30)
    def test_empty_wedge_is_one(self):
        self.assertEqual(wedge_all(self.universe, []), Form.scalar(self.universe, 1))

    @pytest.mark.timeout(30)
    def test_degrees(self):
        mixed = Form.scalar(self.universe, self.x) + self.dx
        with self.assertRaises(DegreeError):
            mixed.homogeneous_degree()
        self.assertIsNone(Form.zero(self.universe).homogeneous_degree())
        self.assertEqual(mixed.degree_part(1), self.dx)
        with self.assertRaises(DegreeError):
            self.dx.scalar_value()


class TestExteriorDerivative(TestCase):
    """
    Unit tests for d and dlog.
    Test kind: unit_tests
    """

    def setUp(self):
        self.universe = GenUniverse(VarUniverse.build(base=["x", "y"]))
        self.x = self.universe.variables.var("x")
        self.y = self.universe.variables.var("y")
        self.dx = Form.differential(self.universe, "x")
        self.dy = Form.differential(self.universe, "y")

    @pytest.mark.timeout(30)
    def test_d_of_function(self):
        f = Form.scalar(self.universe, self.x**2 * self.y)
        self.assertEqual(d(f), self.dx * (2 * self.x * self.y) + self.dy * self.x**2)

    @pytest.mark.timeout(30)
    def test_d_squared_vanishes(self):
        f = Form.scalar(self.universe, self.x**2 * self.y / (self.x + self.y))
        self.assertTrue(f.d().d().is_zero)
        one_form = self.dx * (self.y / (self.x - 1)) + self.dy * self.x**3
        self.assertTrue(one_form.d().d().is_zero)

    @pytest.mark.timeout(30)
    def test_d_of_one_form(self):
        self.assertEqual((self.dy * self.x).d(), self.dx.wedge(self.dy))
        self.assertEqual((self.dx * self.y).d(), -self.dx.wedge(self.dy))

    @pytest.mark.timeout(30)
    def test_leibniz(self):
        alpha = self.dx * (self.x * self.y)
        beta = self.dy * (1 / self.x) + self.dx * self.y**2
        lhs = alpha.wedge(beta).d()
        rhs = alpha.d().wedge(beta) - alpha.wedge(beta.d())
        self.assertEqual(lhs, rhs)

    @pytest.mark.timeout(30)
    def test_dlog(self):
        self.assertEqual(dlog(self.x * self.y, self.universe), self.dx * (1 / self.x) + self.dy * (1 / self.y))
        self.assertEqual(dlog(-self.x, self.universe), dlog(self.x, self.universe))
        self.assertTrue(dlog(5, self.universe).is_zero)


class TestRhoGenerators(TestCase):
    """
    Unit tests for rho extraction, assembly and substitution.
    Test kind: unit_tests
    """

    def setUp(self):
        self.base = GenUniverse(VarUniverse.build(base=["x", "y"]))
        self.universe = self.base.with_rho(2)
        self.x = self.universe.variables.var("x")

    @pytest.mark.timeout(30)
    def test_extract_and_assemble(self):
        u = self.universe
        form = Form.from_terms(u, [(self.x, ["dy", "rho1", "rho2"]), (1, ["dx", "rho2"])])
        eta12 = rho_extract(form, (1, 2))
        eta2 = rho_extract(form, (2,))
        self.assertEqual(eta12, Form.from_terms(self.base, [(self.base.variables.var("x"), ["dy"])]))
        self.assertEqual(eta2, Form.differential(self.base, "x"))
        self.assertTrue(rho_extract(form, ()).is_zero)
        self.assertEqual(rho_assemble(u, {(1, 2): eta12, (2,): eta2}), form)

    @pytest.mark.timeout(30)
    def test_substitute(self):
        u = self.universe
        form = Form.from_terms(u, [(1, ["dy", "rho1"]), (1, ["dx", "rho2"])])
        images = {1: Form.differential(self.base, "x")}
        expected = Form.from_terms(self.base, [(-1, ["dx", "dy"])])
        self.assertEqual(substitute_rho(form, images), expected)

    @pytest.mark.timeout(30)
    def test_unknown_rho(self):
        with self.assertRaises(UnknownVariableError):
            Form.rho(self.universe, 3)


class TestPullbackAndNumeric(TestCase):
    """
    Unit tests for pullback_section, in_base_ideal and numeric evaluation.
    Test kind: unit_tests
    """

    def setUp(self):
        self.universe = GenUniverse(VarUniverse.build(base=["a"], fiber="z"))
        self.a = self.universe.variables.var("a")
        self.z = self.universe.variables.var("z")

    @pytest.mark.timeout(30)
    def test_pullback_of_dlog(self):
        form = dlog(self.z - self.a, self.universe)
        pulled = pullback_section(form, 2 * self.a)
        self.assertEqual(pulled, dlog(self.a, self.universe))

    @pytest.mark.timeout(30)
    def test_pullback_rejects_fiber_dependent_section(self):
        with self.assertRaises(ValueError):
            pullback_section(Form.differential(self.universe, "z"), self.z)

    @pytest.mark.timeout(30)
    def test_in_base_ideal(self):
        da = Form.differential(self.universe, "a")
        dz = Form.differential(self.universe, "z")
        base = {self.universe.differential("a")}
        self.assertTrue(in_base_ideal(da.wedge(dz), base, 1))
        self.assertFalse(in_base_ideal(dz, base, 1))

    @pytest.mark.timeout(30)
    def test_eval_numeric_form(self):
        form = Form.differential(self.universe, "z") * (1 / self.a)
        z_index = self.universe.differential("z")
        a_index = self.universe.differential("a")
        value = eval_numeric_form(form, {"a": 2, "z": 0}, {z_index: {a_index: 3}})
        expected = NumericForm.covector(self.universe, {a_index: 1.5})
        ok, error = value.close_to(expected, 1e-12)
        self.assertTrue(ok)
        self.assertLess(error, 1e-12)
        self.assertAlmostEqual(value[(a_index,)], 1.5)
