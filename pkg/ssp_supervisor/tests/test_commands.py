# Copyright (c) 2025, ahmad mohammad and Contributors
# See license.txt

import unittest
from pathlib import Path

from click.testing import CliRunner

from ssp_supervisor.commands import ssp
from ssp_supervisor.core.pn_io import FIXTURE_DIR, load_net, parse_report


def fixture(name):
	return str(FIXTURE_DIR / f"{name}.net")


class TestCommands(unittest.TestCase):
	def setUp(self):
		self.runner = CliRunner()

	def invoke(self, *args):
		return self.runner.invoke(ssp, [str(a) for a in args])

	def test_validate(self):
		result = self.invoke("validate", fixture("two_agents"))
		self.assertEqual(result.exit_code, 0, result.output)
		self.assertIn("valid = true", result.output)

	def test_validate_rejects_non_ssp(self):
		result = self.invoke("validate", fixture("fork_join"))
		self.assertEqual(result.exit_code, 1)
		self.assertIn("validate:", result.output)

	def test_parse_error_is_a_usage_error(self):
		with self.runner.isolated_filesystem():
			Path("broken.net").write_text("NET broken\nPLACE p MARKING x\n", encoding="utf-8")
			result = self.invoke("validate", "broken.net")
		self.assertEqual(result.exit_code, 2)
		self.assertIn("parse: line 2, column 17", result.output)

	def test_missing_file(self):
		result = self.invoke("census", "no-such-file.net")
		self.assertEqual(result.exit_code, 2)

	def test_bad_budget(self):
		result = self.invoke("census", fixture("two_agents"), "--budget", "0")
		self.assertEqual(result.exit_code, 2)
		self.assertIn("--budget must be at least 1", result.output)

	def test_bad_monitor_rounds(self):
		result = self.invoke("census", fixture("two_agents"), "--monitor-rounds", "0")
		self.assertEqual(result.exit_code, 2)
		self.assertIn("monitor_rounds must be at least 1", result.output)

	def test_semiflows(self):
		result = self.invoke("semiflows", fixture("two_agents"))
		self.assertEqual(result.exit_code, 0, result.output)
		self.assertIn("x1 = t1 + t2 + t3 + t4 + t5  (global)", result.output)
		self.assertIn("x4 = t1 + t2  (local N1)", result.output)
		self.assertIn("x9 = t11 + t12  (local N2)", result.output)

	def test_synthesize_writes_control_net(self):
		with self.runner.isolated_filesystem():
			result = self.invoke("synthesize", fixture("two_agents"), "--out", "out")
			self.assertEqual(result.exit_code, 0, result.output)
			control = load_net("out/two_agents.control.net")
			report = parse_report(Path("out/two_agents.report").read_text(encoding="utf-8"))
		self.assertEqual(control.net, load_net(fixture("two_agents_control")).net)
		self.assertEqual(report["prop1"]["structurally_live"], "true")

	def test_enforce(self):
		result = self.invoke("enforce", fixture("weighted_return"))
		self.assertEqual(result.exit_code, 0, result.output)
		self.assertIn("PLACE pt_tx2 MARKING 1", result.output)

	def test_compose(self):
		result = self.invoke("compose", fixture("two_agents"))
		self.assertEqual(result.exit_code, 0, result.output)
		self.assertIn("NET two_agents_composed", result.output)
		self.assertIn("TRANS t4_x7 LABEL t4", result.output)

	def test_simulate_random(self):
		result = self.invoke("simulate", fixture("two_agents"), "--seed", 3, "--steps", 20)
		self.assertEqual(result.exit_code, 0, result.output)
		self.assertIn("verdict = completed", result.output)
		self.assertIn("19 ", result.output)

	def test_simulate_exhaustive(self):
		result = self.invoke("simulate", fixture("two_agents"), "--policy", "exhaustive")
		self.assertEqual(result.exit_code, 0, result.output)
		sections = parse_report(result.output)
		self.assertEqual(sections["census.control"]["reachable"], "94")
		self.assertEqual(sections["simulate"]["verdict"], "live")

	def test_simulate_blocked_script(self):
		with self.runner.isolated_filesystem():
			Path("deadlock.trace").write_text("t3 t4 t5 t6 t3 t5 t9\n", encoding="utf-8")
			result = self.invoke("simulate", fixture("three_agents"), "--policy", "script:deadlock.trace")
		self.assertEqual(result.exit_code, 1)
		self.assertIn("verdict = blocked", result.output)
		self.assertIn("blocked_at = 4", result.output)

	def test_unknown_policy(self):
		result = self.invoke("simulate", fixture("two_agents"), "--policy", "greedy")
		self.assertEqual(result.exit_code, 2)

	def test_census(self):
		with self.runner.isolated_filesystem():
			result = self.invoke("census", fixture("weighted_return"), "--out", "out")
			self.assertEqual(result.exit_code, 0, result.output)
			report = parse_report(Path("out/weighted_return.report").read_text(encoding="utf-8"))
		self.assertEqual(report["census.plant"]["deadlock"], "4")
		self.assertEqual(report["census.monitors"]["skipped"], "non-ordinary net")
		self.assertEqual(report["census.control"]["livelock"], "0")
