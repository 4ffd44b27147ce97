"""
Unit tests for csrr_app.numeric_oracle module.
"""
import numpy as np
import pytest
from unittest import TestCase

from csrr_app import instances
from csrr_app.errors import InvalidConnectionError, PoleError
from csrr_app.exterior import eval_numeric_form
from csrr_app.logconn_p1 import mutate_residue
from csrr_app.numeric_oracle import (
    NumericConfig,
    build_F,
    check_root_derivatives,
    eval_rhs_direct,
    roots_and_derivatives,
    sample_assignment,
    verify_prop44_lemma45,
    verify_rr_numeric,
)
from csrr_app.ratfun import VarUniverse
from csrr_app.reports import Status


class TestBuildF(TestCase):
    """
    Unit tests for build_F and its roots.
    Test kind: unit_tests
    """

    @pytest.mark.timeout(30)
    def test_two_constant_points(self):
        universe = VarUniverse.build(fiber="z")
        z = universe.var("z")
        self.assertEqual(build_F([1, 2], universe), -z**2 + 6 * z - 6)

    @pytest.mark.timeout(30)
    def test_single_point(self):
        universe = VarUniverse.build(fiber="z")
        self.assertEqual(build_F([3], universe), 6 - universe.var("z"))

    @pytest.mark.timeout(30)
    def test_rejects_degenerate_points(self):
        with self.assertRaises(InvalidConnectionError):
            build_F([0, 2])
        with self.assertRaises(InvalidConnectionError):
            build_F([2, 2])

    @pytest.mark.timeout(30)
    def test_roots(self):
        universe = VarUniverse.build(base=["a1", "a2"], fiber="z")
        f = build_F([universe.var("a1"), universe.var("a2")], universe)
        data = roots_and_derivatives(f, ["a1", "a2"], {"a1": 1, "a2": 2})
        found = sorted(r.real for r in data.roots)
        self.assertAlmostEqual(found[0], 3 - np.sqrt(3), places=10)
        self.assertAlmostEqual(found[1], 3 + np.sqrt(3), places=10)
        self.assertEqual(data.derivatives.shape, (2, 2))

    @pytest.mark.timeout(30)
    def test_root_quality_is_reported(self):
        universe = VarUniverse.build(base=["a1", "a2"], fiber="z")
        f = build_F([universe.var("a1"), universe.var("a2")], universe)
        cfg = NumericConfig()
        data = roots_and_derivatives(f, ["a1", "a2"], {"a1": 1, "a2": 2}, cfg)
        self.assertLessEqual(data.backward_error, cfg.backward_error)
        self.assertLessEqual(cfg.backward_error, 1e-12)
        self.assertLessEqual(data.vieta_residual, 1e-10)
        self.assertAlmostEqual(complex(sum(data.roots)).real, 6.0, places=10)

    @pytest.mark.timeout(30)
    def test_unmet_root_bounds_are_rejected(self):
        universe = VarUniverse.build(base=["a1", "a2"], fiber="z")
        f = build_F([universe.var("a1"), universe.var("a2")], universe)
        with self.assertRaises(PoleError):
            roots_and_derivatives(f, ["a1", "a2"], {"a1": 1, "a2": 2}, NumericConfig(backward_error=-1.0))
        with self.assertRaises(PoleError):
            roots_and_derivatives(f, ["a1", "a2"], {"a1": 1, "a2": 2}, NumericConfig(vieta_tol=-1.0))

    @pytest.mark.timeout(30)
    def test_implicit_derivatives_match_finite_differences(self):
        universe = VarUniverse.build(base=["a1", "a2", "a3"], fiber="z")
        f = build_F([universe.var(n) for n in ("a1", "a2", "a3")], universe)
        gap = check_root_derivatives(f, ["a1", "a2", "a3"], {"a1": 1.5, "a2": -2, "a3": 4})
        self.assertLess(gap, 1e-5)


class TestSampling(TestCase):
    """
    Unit tests for sample_assignment.
    Test kind: unit_tests
    """

    @pytest.mark.timeout(30)
    def test_distinct_nonzero(self):
        cfg = NumericConfig(sample_range=(1, 3))
        rng = np.random.default_rng(0)
        for _ in range(20):
            values = sample_assignment(["a1", "a2", "a3", "t1"], rng, cfg)
            self.assertEqual(len(set(values.values())), 4)
            self.assertNotIn(0, values.values())
            self.assertTrue(all(abs(v.real) <= 3 for v in values.values()))

    @pytest.mark.timeout(30)
    def test_same_seed_same_samples(self):
        cfg = NumericConfig()
        first = sample_assignment(["a1", "a2"], np.random.default_rng(5), cfg)
        second = sample_assignment(["a1", "a2"], np.random.default_rng(5), cfg)
        self.assertEqual(first, second)


class TestEvalRhsDirect(TestCase):
    """
    Unit tests for eval_rhs_direct.
    Test kind: unit_tests
    """

    @pytest.mark.timeout(30)
    def test_single_point_sides_cancel(self):
        for with_phi in (False, True):
            connection = instances.worked_connection(delta=1, residues=(5,), with_phi=with_phi)
            value = eval_rhs_direct(connection, 1, {"a1": 3.0, "t1": 1.5, "t2": -2.0})
            self.assertLess(value.max_abs(), 1e-12)

    @pytest.mark.timeout(60)
    def test_matches_gauss_manin_side(self):
        connection = instances.worked_connection()
        assign = {"a1": 1.0, "a2": 2.0, "t1": 0.5, "t2": 3.0}
        cfg = NumericConfig()
        for n in (1, 2):
            direct = eval_rhs_direct(connection, n, assign, cfg)
            via_gm = eval_numeric_form(connection.nw_gm(n), assign, None, cfg.denominator_floor)
            ok, error = direct.close_to(via_gm, 1e-9)
            self.assertTrue(ok, (n, error))
            self.assertGreater(via_gm.max_abs(), 0.1)


class TestVerifyRRNumeric(TestCase):
    """
    Unit tests for verify_rr_numeric.
    Test kind: unit_tests
    """

    def setUp(self):
        self.cfg = NumericConfig(seed=4, samples=3)

    @pytest.mark.timeout(60)
    def test_worked_connection_passes(self):
        for n in (1, 2):
            report = verify_rr_numeric(instances.worked_connection(), n, self.cfg)
            self.assertEqual(report.status, Status.PASS, report.params)
            self.assertLessEqual(report.params["max_error"], self.cfg.tol)
            self.assertIsNone(report.witness)

    @pytest.mark.timeout(60)
    def test_three_points(self):
        connection = instances.worked_connection(delta=3, residues=(1, -2, 5))
        report = verify_rr_numeric(connection, 1, self.cfg)
        self.assertEqual(report.status, Status.PASS, report.params)

    @pytest.mark.timeout(60)
    def test_mutated_residue_fails(self):
        original = instances.worked_connection(with_phi=False)
        mutated = mutate_residue(original, 1, 0, 0)
        report = verify_rr_numeric(mutated, 1, self.cfg, gm_connection=original)
        self.assertEqual(report.status, Status.FAIL)
        self.assertIsNone(report.witness)
        self.assertEqual(set(report.params["failing_sample"]), {"a1", "a2", "t1", "t2"})

    @pytest.mark.timeout(60)
    def test_mutated_rank_two_fails(self):
        original = instances.mutation_connection()
        mutated = mutate_residue(original, 1, 0, 1)
        report = verify_rr_numeric(mutated, 2, self.cfg, gm_connection=original)
        self.assertEqual(report.status, Status.FAIL)

    @pytest.mark.timeout(30)
    def test_constant_points_are_rejected(self):
        connection = instances.random_connection(1, 2, np.random.default_rng(0), "constant-points")
        with self.assertRaises(InvalidConnectionError):
            verify_rr_numeric(connection, 1, self.cfg)


class TestProp44(TestCase):
    """
    Unit tests for verify_prop44_lemma45.
    Test kind: unit_tests
    """

    @pytest.mark.timeout(60)
    def test_all_subsets_of_three_points(self):
        cfg = NumericConfig(seed=2, samples=2)
        for subset in ((1,), (2,), (1, 3), (1, 2, 3)):
            report = verify_prop44_lemma45(3, subset, cfg)
            self.assertEqual(report.status, Status.PASS, (subset, report.params))
