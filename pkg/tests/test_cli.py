"""
Endpoint tests for csrr_app.cli module.
"""
import json
import os
import tempfile
from pathlib import Path
from unittest.mock import patch

import pytest
from unittest import TestCase

from csrr_app.cli import HANDLERS, main
from csrr_app.errors import SingularMatrixError


WORKED = {
    "parameters": ["t1", "t2"],
    "connection": {
        "N": 1,
        "delta": 2,
        "points": [{"symbol": "a1"}, {"symbol": "a2"}],
        "residues": [[["1"]], [["2"]]],
        "phi": [[[{"coeff": "t1", "gens": ["dt2"]}]]],
    },
    "pushforward": {"variables": ["s"], "phi": "t^2 - s"},
    "numeric": {"seed": 7, "samples": 3},
}


class TestCommands(TestCase):
    """
    Endpoint tests for the command-line interface.
    Test kind: endpoint_tests
    """

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.problem = os.path.join(self.temp_dir.name, "worked.json")
        Path(self.problem).write_text(json.dumps(WORKED))

    def tearDown(self):
        self.temp_dir.cleanup()

    def run_cli(self, *argv):
        code = main(list(argv))
        output = self._capsys.readouterr()
        return code, output

    @pytest.fixture(autouse=True)
    def _capture(self, capsys):
        self._capsys = capsys

    @pytest.mark.timeout(60)
    def test_check_basic(self):
        code, output = self.run_cli("check-basic", self.problem)
        self.assertEqual(code, 0)
        (report,) = json.loads(output.out)
        self.assertEqual(report["check"], "check-basic")
        self.assertTrue(report["params"]["basic"])

    @pytest.mark.timeout(60)
    def test_verify_rr_both_routes(self):
        code, output = self.run_cli("verify-rr", self.problem, "--n", "2")
        self.assertEqual(code, 0)
        checks = [r["check"] for r in json.loads(output.out)]
        self.assertEqual(checks, ["verify-rr-symbolic", "verify-rr-numeric"])

    @pytest.mark.timeout(60)
    def test_seed_flag_overrides_problem(self):
        code, output = self.run_cli("--seed", "11", "verify-rr", self.problem, "--numeric")
        self.assertEqual(code, 0)
        (report,) = json.loads(output.out)
        self.assertEqual(report["seed"], 11)

    @pytest.mark.timeout(60)
    def test_global_flags_after_subcommand(self):
        code, output = self.run_cli("verify-rr", self.problem, "--numeric", "--seed", "13", "--samples", "2")
        self.assertEqual(code, 0)
        (report,) = json.loads(output.out)
        self.assertEqual(report["seed"], 13)
        self.assertEqual(report["params"]["samples"], 2)

        code, output = self.run_cli("--seed", "5", "verify-rr", self.problem, "--numeric")
        (report,) = json.loads(output.out)
        self.assertEqual(report["seed"], 5)

    @pytest.mark.timeout(30)
    def test_engine_error_is_reported_in_params(self):
        def failing(args, problem):
            raise SingularMatrixError("determinant vanishes")

        with patch.dict(HANDLERS, {"check-basic": failing}):
            code, output = self.run_cli("check-basic", self.problem)
        self.assertEqual(code, 1)
        (report,) = json.loads(output.out)
        self.assertEqual(report["status"], "fail")
        self.assertIsNone(report["witness"])
        self.assertEqual(report["params"], {"error": "SingularMatrixError", "message": "determinant vanishes"})

    @pytest.mark.timeout(60)
    def test_cs_and_gm(self):
        code, output = self.run_cli("cs", self.problem, "--n", "2")
        self.assertEqual(code, 0)
        checks = [r["check"] for r in json.loads(output.out)]
        self.assertEqual(checks, ["cs", "cs", "cs-chern", "cs-chern"])

        code, output = self.run_cli("gm", self.problem)
        self.assertEqual(code, 0)
        self.assertEqual([r["check"] for r in json.loads(output.out)], ["gm", "gm-compatibility"])

    @pytest.mark.timeout(60)
    def test_pushforward(self):
        code, output = self.run_cli("pushforward", self.problem)
        self.assertEqual(code, 0)
        (report,) = json.loads(output.out)
        self.assertTrue(report["params"]["gram_is_discriminant"])

    @pytest.mark.timeout(60)
    def test_verify_identities(self):
        code, output = self.run_cli("verify-identities", "--lemma", "4.6", "--r", "2")
        self.assertEqual(code, 0)
        self.assertEqual(len(json.loads(output.out)), 2)

        code, output = self.run_cli("verify-identities", self.problem, "--lemma", "4.3", "--len", "2")
        self.assertEqual(code, 0)

        code, output = self.run_cli("verify-identities", "--lemma", "4.3")
        self.assertEqual(code, 2)

    @pytest.mark.timeout(30)
    def test_bad_input_exits_2(self):
        bad = os.path.join(self.temp_dir.name, "bad.json")
        Path(bad).write_text('{"connection": {"N": 0}}')
        code, output = self.run_cli("check-basic", bad)
        self.assertEqual(code, 2)
        self.assertEqual(output.out, "")
        self.assertIn("connection.N", output.err)

        code, output = self.run_cli("check-basic", os.path.join(self.temp_dir.name, "missing.json"))
        self.assertEqual(code, 2)

    @pytest.mark.timeout(60)
    def test_failing_report_exits_1(self):
        document = json.loads(json.dumps(WORKED))
        document["connection"]["residues"][0] = [["t1"]]
        path = os.path.join(self.temp_dir.name, "nonbasic.json")
        Path(path).write_text(json.dumps(document))
        code, output = self.run_cli("check-basic", path)
        self.assertEqual(code, 1)
        (report,) = json.loads(output.out)
        self.assertEqual(report["status"], "fail")

    @pytest.mark.timeout(30)
    def test_malformed_grid_is_rejected(self):
        with self.assertRaises(SystemExit) as raised:
            self.run_cli("--grid", "1,2", "selftest")
        self.assertEqual(raised.exception.code, 2)
