"""
Unit tests for csrr_app.matform module.
"""
import numpy as np
import pytest
from unittest import TestCase

from csrr_app import instances
from csrr_app.errors import ShapeError, SingularMatrixError
from csrr_app.exterior import Form
from csrr_app.matform import (
    MatForm,
    block_diagonal,
    check_bianchi,
    curvature,
    determinant,
    from_scalars,
    gauge,
    inverse,
    kron,
    trace,
)


class TestMatrixAlgebra(TestCase):
    """
    Unit tests for products, traces and scalar linear algebra.
    Test kind: unit_tests
    """

    def setUp(self):
        self.universe = instances.generic_universe(3)
        self.x = self.universe.variables.var("x1")
        self.y = self.universe.variables.var("x2")

    @pytest.mark.timeout(60)
    def test_product_is_associative(self):
        rng = np.random.default_rng(3)
        a = instances.random_matform(self.universe, rng, 2, 1, ["x1", "x2", "x3"])
        b = instances.random_matform(self.universe, rng, 2, 0, ["x1", "x2", "x3"])
        c = instances.random_matform(self.universe, rng, 2, 1, ["x1", "x2", "x3"])
        self.assertEqual((a @ b) @ c, a @ (b @ c))

    @pytest.mark.timeout(30)
    def test_determinant_and_inverse(self):
        g = from_scalars(self.universe, [[self.x, 1], [1, self.y]])
        self.assertEqual(determinant(g), self.x * self.y - 1)
        self.assertEqual(g @ inverse(g), MatForm.identity(self.universe, 2))
        self.assertEqual(inverse(g) @ g, MatForm.identity(self.universe, 2))

    @pytest.mark.timeout(30)
    def test_singular_matrix(self):
        g = from_scalars(self.universe, [[self.x, self.x], [1, 1]])
        self.assertTrue(determinant(g).is_zero)
        with self.assertRaises(SingularMatrixError):
            inverse(g)

    @pytest.mark.timeout(30)
    def test_shape_errors(self):
        square = MatForm.identity(self.universe, 2)
        wide = MatForm.zeros(self.universe, 2, 3)
        with self.assertRaises(ShapeError):
            wide @ square
        with self.assertRaises(ShapeError):
            trace(wide)
        with self.assertRaises(ShapeError):
            MatForm(self.universe, [[0, 1], [0]])

    @pytest.mark.timeout(30)
    def test_kron_and_block_diagonal(self):
        x = from_scalars(self.universe, [[1, 2], [3, 4]])
        identity = MatForm.identity(self.universe, 2)
        product = kron(identity, x)
        self.assertEqual(product, block_diagonal([x, x]))
        self.assertEqual(trace(kron(x, x)), Form.scalar(self.universe, 25))


class TestConnections(TestCase):
    """
    Unit tests for curvature and gauge transformations.
    Test kind: unit_tests
    """

    def setUp(self):
        self.universe = instances.generic_universe(3)
        self.names = ["x1", "x2", "x3"]

    @pytest.mark.timeout(60)
    def test_bianchi_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(3):
            a = instances.random_matform(self.universe, rng, 2, 1, self.names, rational=True)
            self.assertTrue(check_bianchi(a))

    @pytest.mark.timeout(60)
    def test_pure_gauge_is_flat(self):
        rng = np.random.default_rng(5)
        a = instances.flat_connection(self.universe, rng, 2, self.names)
        self.assertTrue(curvature(a).is_zero)

    @pytest.mark.timeout(60)
    def test_curvature_transforms_by_conjugation(self):
        rng = np.random.default_rng(7)
        a = instances.random_matform(self.universe, rng, 2, 1, self.names)
        g = instances.random_invertible(self.universe, rng, 2, self.names)
        expected = g @ curvature(a) @ inverse(g)
        self.assertEqual(curvature(gauge(a, g)), expected)

    @pytest.mark.timeout(60)
    def test_gauge_composes(self):
        rng = np.random.default_rng(9)
        a = instances.random_matform(self.universe, rng, 2, 1, self.names)
        g = instances.random_invertible(self.universe, rng, 2, self.names)
        h = instances.random_invertible(self.universe, rng, 2, self.names)
        self.assertEqual(gauge(gauge(a, g), h), gauge(a, h @ g))
