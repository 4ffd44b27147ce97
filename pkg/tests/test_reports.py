"""
Unit tests for csrr_app.reports module.
"""
import json
from fractions import Fraction

import pytest
from unittest import TestCase

from csrr_app import instances
from csrr_app.exterior import Form
from csrr_app.matform import from_scalars
from csrr_app.reports import Status, VerificationReport, all_passed, emit_report, status_of, worst_status


class TestStatus(TestCase):
    """
    Unit tests for Status ordering.
    Test kind: unit_tests
    """

    @pytest.mark.timeout(30)
    def test_worst_status(self):
        self.assertEqual(worst_status([]), Status.PASS)
        self.assertEqual(worst_status([Status.PASS, Status.PASS_MOD_DLOG]), Status.PASS_MOD_DLOG)
        self.assertEqual(worst_status([Status.PASS_MOD_EXACT, Status.FAIL, Status.PASS]), Status.FAIL)

    @pytest.mark.timeout(30)
    def test_passed(self):
        self.assertTrue(Status.PASS_MOD_EXACT.passed)
        self.assertFalse(Status.FAIL.passed)
        self.assertEqual(status_of(False), Status.FAIL)


class TestVerificationReport(TestCase):
    """
    Unit tests for report serialization.
    Test kind: unit_tests
    """

    def setUp(self):
        self.universe = instances.generic_universe(2)
        x1 = self.universe.variables.var("x1")
        self.form = Form.from_terms(self.universe, [(x1 / 2, ["dx2"])])
        self.matrix = from_scalars(self.universe, [[x1, 0]])

    @pytest.mark.timeout(30)
    def test_to_dict(self):
        report = VerificationReport(
            "cs",
            {"form": self.form, "B": self.matrix, "ratio": Fraction(1, 3), "status": Status.PASS_MOD_DLOG},
            Status.PASS,
            seed=5,
            millis=1.23456,
        )
        data = report.to_dict()
        self.assertEqual(data["params"]["form"], [{"coeff": "1/2*x1", "gens": ["dx2"]}])
        self.assertEqual(data["params"]["B"], [["x1", "0"]])
        self.assertEqual(data["params"]["ratio"], "1/3")
        self.assertEqual(data["params"]["status"], "pass-mod-dlog")
        self.assertEqual(data["status"], "pass")
        self.assertEqual(data["millis"], 1.235)
        self.assertIsNone(data["witness"])

    @pytest.mark.timeout(30)
    def test_detached_is_plain_json(self):
        report = VerificationReport("gm", {"value": self.form}, Status.FAIL, self.form).detached()
        self.assertEqual(report.witness, [{"coeff": "1/2*x1", "gens": ["dx2"]}])
        json.dumps(report.to_dict())

    @pytest.mark.timeout(30)
    def test_emit_and_all_passed(self):
        reports = [
            VerificationReport("a", {}, Status.PASS),
            VerificationReport("b", {}, Status.PASS_MOD_EXACT),
        ]
        self.assertTrue(all_passed(reports))
        decoded = json.loads(emit_report(reports))
        self.assertEqual([r["check"] for r in decoded], ["a", "b"])
        reports.append(VerificationReport("c", {}, Status.FAIL))
        self.assertFalse(all_passed(reports))
