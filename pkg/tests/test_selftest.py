"""
Unit tests for csrr_app.selftest module.
"""
import json

import pytest
from unittest import TestCase

from csrr_app.reports import Status, all_passed
from csrr_app.selftest import RUNNERS, Task, build_tasks, run_suite, run_task, summarize


def _without_timing(reports):
    return [{k: v for k, v in r.to_dict().items() if k != "millis"} for r in reports]


class TestBuildTasks(TestCase):
    """
    Unit tests for the self-test grid.
    Test kind: unit_tests
    """

    @pytest.mark.timeout(30)
    def test_grid_is_deterministic(self):
        self.assertEqual(build_tasks(2, 10), build_tasks(2, 10))
        self.assertNotEqual(build_tasks(2, 10), build_tasks(2, 11))

    @pytest.mark.timeout(30)
    def test_every_kind_has_a_runner(self):
        kinds = {task.kind for task in build_tasks(1)}
        self.assertEqual(kinds, set(RUNNERS))

    @pytest.mark.timeout(30)
    def test_prop_4_4_covers_all_subsets(self):
        subsets = [t.params for t in build_tasks(1) if t.kind == "prop-4.4"]
        self.assertEqual(len(subsets), 1 + 3 + 7 + 15)

    @pytest.mark.timeout(30)
    def test_symbolic_grid_includes_non_basic_families(self):
        families = {t.params[3] for t in build_tasks(2) if t.kind == "rr-symbolic"}
        self.assertTrue({"generic", "constant-residues"} <= families)
        numeric = {t.params[3] for t in build_tasks(2) if t.kind == "rr-numeric"}
        self.assertFalse(numeric & {"generic", "constant-residues"})


class TestRunTask(TestCase):
    """
    Unit tests for run_task and run_suite.
    Test kind: unit_tests
    """

    @pytest.mark.timeout(60)
    def test_fixed_tasks_pass(self):
        for kind in ("rr-worked", "pushforward-worked", "pushforward-split"):
            reports = run_task(Task(kind, (), 0))
            self.assertTrue(all_passed(reports), kind)
            for report in reports:
                json.dumps(report.to_dict())

    @pytest.mark.timeout(60)
    def test_mutation_is_detected(self):
        for n in (1, 2):
            (report,) = run_task(Task("rr-mutation", (n,), 0))
            self.assertEqual(report.status, Status.PASS, n)

    @pytest.mark.timeout(60)
    def test_seed_is_recorded(self):
        (report,) = run_task(Task("gauge", (1,), 42))[:1]
        self.assertEqual(report.seed, 42)
        self.assertTrue(report.status.passed)

    @pytest.mark.timeout(120)
    def test_gauge_task_covers_three_classes(self):
        reports = run_task(Task("gauge", (2,), 5))
        self.assertEqual([r.check for r in reports], ["gauge-nw1", "gauge-nw2", "gauge-nw3"])
        self.assertEqual(reports[0].status, Status.PASS)
        self.assertTrue(all_passed(reports))

    @pytest.mark.timeout(240)
    def test_noncommuting_residue_task_passes(self):
        (report,) = run_task(Task("rr-symbolic", (2, 3, 1, "constant-residues"), 0))
        self.assertEqual(report.status, Status.PASS)
        self.assertEqual(report.params["family"], "constant-residues")

    @pytest.mark.timeout(120)
    def test_suite_is_reproducible_across_workers(self):
        kinds = {"lemma-4.6", "transgression", "splitting"}
        serial = run_suite(seeds=1, base_seed=3, workers=1, kinds=kinds)
        parallel = run_suite(seeds=1, base_seed=3, workers=2, kinds=kinds)
        self.assertEqual(_without_timing(serial), _without_timing(parallel))
        self.assertTrue(all_passed(serial))
        counts = summarize(serial)
        self.assertEqual(counts["lemma-4.6"], {"pass": 3})

    @pytest.mark.timeout(120)
    def test_grid_restricts_rr_tasks(self):
        reports = run_suite(seeds=1, base_seed=0, workers=1, kinds={"rr-symbolic", "lemma-4.6"}, grid=(1, 1, 1))
        self.assertEqual(summarize(reports)["lemma-4.6"], {"pass": 3})
        self.assertEqual(len(reports), 4)
        self.assertTrue(all_passed(reports))
