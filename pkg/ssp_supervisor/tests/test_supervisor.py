# Copyright (c) 2025, ahmad mohammad and Contributors
# See license.txt

import unittest
from dataclasses import replace

from ssp_supervisor.core.analysis import full_pipeline_census
from ssp_supervisor.core.control_synthesis import build_control_pn
from ssp_supervisor.core.exceptions import HypothesisError, ParseError, PolicyError
from ssp_supervisor.core.liveness_enforcement import synthesize_control
from ssp_supervisor.core.petri_core import (
	NetBuilder,
	classify_markings,
	enabled,
	fire_sequence,
	format_marking,
	reachability_graph,
)
from ssp_supervisor.core.pn_io import load_fixture
from ssp_supervisor.core.supervisor import (
	EXHAUSTIVE,
	GuardTable,
	RandomPolicy,
	ScriptedPolicy,
	Verdict,
	compose,
	control_step,
	copy_names,
	fireable,
	format_trace,
	guard_true,
	initial_state,
	parse_trace,
	run,
)

DEADLOCK_SCRIPT = ["t3", "t4", "t5", "t6", "t3", "t5", "t9"]


class TestGuards(unittest.TestCase):
	def setUp(self):
		self.doc = load_fixture("two_agents")
		self.cn = build_control_pn(self.doc)
		self.gt = GuardTable.from_control_net(self.cn, self.doc.net.transitions)

	def test_initial_guards(self):
		m_c = self.cn.initial_marking
		self.assertTrue(guard_true("t1", m_c, self.gt))
		self.assertTrue(guard_true("t5", m_c, self.gt))
		self.assertFalse(guard_true("t2", m_c, self.gt))
		self.assertFalse(guard_true("t12", m_c, self.gt))
		self.assertEqual(fireable(self.doc.net, self.gt, initial_state(self.doc, self.cn)), ("t1", "t5", "t9"))

	def test_step_opens_the_sequence(self):
		state = initial_state(self.doc, self.cn)
		steps = control_step(self.doc.net, self.gt, state, ScriptedPolicy(["t5"]))
		self.assertEqual([s.render() for s in steps], ["0 t5 tx8_first"])
		self.assertEqual(self.gt.active_place("t6", state.m_c), "px_x8")
		self.assertTrue(guard_true("t6", state.m_c, self.gt))
		self.assertFalse(guard_true("t4", state.m_c, self.gt))

	def test_policy_outside_fireable_set(self):
		state = initial_state(self.doc, self.cn)
		self.assertRaises(PolicyError, control_step, self.doc.net, self.gt, state, ScriptedPolicy(["t12"]))

	def test_scripted_control_must_be_enabled(self):
		state = initial_state(self.doc, self.cn)
		policy = ScriptedPolicy([("t1", "tx6_first")])
		self.assertRaises(PolicyError, control_step, self.doc.net, self.gt, state, policy)

	def test_scripted_control_choice(self):
		state = initial_state(self.doc, self.cn)
		steps = control_step(self.doc.net, self.gt, state, ScriptedPolicy([("t1", "tx5_first")]))
		self.assertEqual(steps[0].control, "tx5_first")
		self.assertFalse(guard_true("t2", state.m_c, self.gt))
		self.assertTrue(guard_true("t8", state.m_c, self.gt))

	def test_empty_control_net_supervises_nothing(self):
		cn = replace(self.cn, net=NetBuilder().build(), initial_marking=(), sequences={})
		gt = GuardTable.from_control_net(cn, self.doc.net.transitions)
		self.assertTrue(gt.unsupervised)
		self.assertTrue(guard_true("t12", (), gt))


class TestRuns(unittest.TestCase):
	@classmethod
	def setUpClass(cls):
		cls.two = synthesize_control(load_fixture("two_agents"))
		cls.three = synthesize_control(load_fixture("three_agents"))

	def test_scripted_deadlock_is_blocked(self):
		outcome = run(self.three.document, self.three.supervised, ScriptedPolicy(DEADLOCK_SCRIPT), len(DEADLOCK_SCRIPT) + 1)
		self.assertEqual(outcome.verdict, Verdict.BLOCKED)
		self.assertEqual(outcome.blocked_at, 4)
		self.assertEqual([s.plant for s in outcome.trace if s.plant != "-"], DEADLOCK_SCRIPT[:4])

	def test_unsupervised_replay_deadlocks(self):
		doc = self.three.document
		m = fire_sequence(doc.net, doc.initial_marking, DEADLOCK_SCRIPT)
		self.assertEqual(format_marking(doc.net, m), "p3+p5+p8+b1+b4+b6+b7")
		self.assertEqual(enabled(doc.net, m), frozenset())

	def test_exhausted_script(self):
		outcome = run(self.two.document, self.two.supervised, ScriptedPolicy(["t1", "t2"]), 10)
		self.assertEqual(outcome.verdict, Verdict.EXHAUSTED)
		self.assertEqual(format_trace(outcome.trace), "0 t1 tx4_first\n1 t2 tx4_last\n")

	def test_random_runs_repeat_with_the_seed(self):
		first = run(self.two.document, self.two.supervised, RandomPolicy(7), 50)
		second = run(self.two.document, self.two.supervised, RandomPolicy(7), 50)
		self.assertEqual(first.verdict, Verdict.COMPLETED)
		self.assertEqual(first.trace, second.trace)
		self.assertEqual(len(first.trace), 50)

	def test_zero_steps(self):
		outcome = run(self.two.document, self.two.supervised, RandomPolicy(0), 0)
		self.assertEqual(outcome.verdict, Verdict.COMPLETED)
		self.assertEqual(outcome.trace, [])
		self.assertEqual(format_trace(outcome.trace), "")

	def test_exhaustive_run(self):
		outcome = run(self.two.document, self.two.supervised, EXHAUSTIVE)
		self.assertEqual(outcome.verdict, Verdict.LIVE)
		self.assertEqual((outcome.census.reachable, outcome.census.livelock), (94, 0))

	def test_hypothesis_needs_buffer_tokens(self):
		result = synthesize_control(load_fixture("weighted_return"))
		doc = result.document
		tokens = list(doc.initial_marking)
		tokens[doc.net.place_index("b1")] = 1
		starved = replace(doc, initial_marking=tuple(tokens))
		self.assertRaises(HypothesisError, run, starved, result.supervised, RandomPolicy(0), 10)

	def test_weighted_return_joint_graph(self):
		result = synthesize_control(load_fixture("weighted_return"))
		outcome = run(result.document, result.supervised, EXHAUSTIVE)
		self.assertEqual((outcome.census.reachable, outcome.census.livelock), (9, 0))

		bare = run(result.document, result.control, EXHAUSTIVE, check=False)
		self.assertEqual((bare.census.reachable, bare.census.deadlock), (13, 2))
		self.assertEqual(bare.verdict, Verdict.NOT_LIVE)


class TestComposition(unittest.TestCase):
	def test_matches_reference_composition(self):
		doc = load_fixture("two_agents")
		composed = compose(doc, build_control_pn(doc))
		expected = load_fixture("two_agents_composed")
		self.assertEqual(composed.net, expected.net)
		self.assertEqual(composed.initial_marking, expected.initial_marking)
		self.assertEqual(composed.name, "two_agents_composed")

	def test_composed_graph_matches_joint_graph(self):
		for name, size in (("two_agents", 94), ("three_agents", 100)):
			result = synthesize_control(load_fixture(name))
			composed = compose(result.document, result.supervised)
			census = classify_markings(reachability_graph(composed.net, composed.initial_marking))
			self.assertEqual((census.reachable, census.livelock), (size, 0), name)

	def test_copy_names(self):
		names = copy_names(build_control_pn(load_fixture("two_agents")))
		self.assertEqual(names["tx9_first"], "t12_x9")
		self.assertEqual(names["tx9_last"], "t11_x9")


class TestSelfLoopSequences(unittest.TestCase):
	@classmethod
	def setUpClass(cls):
		cls.doc = load_fixture("self_loops")
		cls.result = synthesize_control(cls.doc)

	def test_first_and_last_fire_together(self):
		cn = self.result.supervised
		gt = GuardTable.from_control_net(cn, self.doc.net.transitions)
		self.assertEqual(gt.chained, {"tx2_first": "tx2_last", "tx3_first": "tx3_last"})
		self.assertEqual(gt.labeled["t1"], ["tx2_first"])
		state = initial_state(self.doc, cn)
		steps = control_step(self.doc.net, gt, state, ScriptedPolicy(["t1"]))
		self.assertEqual([s.render() for s in steps], ["0 t1 tx2_first+tx2_last"])
		self.assertEqual(format_marking(cn.net, state.m_c), "pb_b2+pN_N1+pN_N2")
		self.assertEqual(fireable(self.doc.net, gt, state), ("t2",))

	def test_random_run_alternates(self):
		outcome = run(self.doc, self.result.supervised, RandomPolicy(3), 4)
		self.assertEqual(outcome.verdict, Verdict.COMPLETED)
		self.assertEqual(
			format_trace(outcome.trace),
			"0 t1 tx2_first+tx2_last\n1 t2 tx3_first+tx3_last\n2 t1 tx2_first+tx2_last\n3 t2 tx3_first+tx3_last\n",
		)

	def test_exhaustive_run_is_live(self):
		outcome = run(self.doc, self.result.supervised, EXHAUSTIVE)
		self.assertEqual(outcome.verdict, Verdict.LIVE)
		self.assertEqual((outcome.census.reachable, outcome.census.deadlock, outcome.census.livelock), (2, 0, 0))

	def test_composition_fuses_the_pair(self):
		composed = compose(self.doc, self.result.supervised)
		self.assertEqual(composed.net.transitions, ("t1_x2", "t2_x3"))
		self.assertEqual(composed.net.preset("t1_x2"), {"q1": 1, "b1": 1, "pb_b1": 1, "pN_N1": 1})
		self.assertEqual(composed.net.postset("t1_x2"), {"q1": 1, "b2": 1, "pb_b2": 1, "pN_N1": 1})
		census = classify_markings(reachability_graph(composed.net, composed.initial_marking))
		self.assertEqual((census.reachable, census.deadlock, census.livelock), (2, 0, 0))

	def test_pipeline_control_row(self):
		pipeline = full_pipeline_census(self.doc)
		self.assertEqual(pipeline.rows["plant"].as_row()["reachable"], 2)
		control = pipeline.rows["control"]
		self.assertEqual((control.reachable, control.deadlock, control.livelock), (2, 0, 0))


class TestReducedPipeline(unittest.TestCase):
	def test_reduced_nets_stay_live_under_control(self):
		for name in ("weighted_return", "three_agents_preassigned"):
			result = synthesize_control(load_fixture(name), reduce=True)
			self.assertTrue(
				any(seq.first_label == seq.last_label for seq in result.supervised.sequences.values()), name
			)
			outcome = run(result.document, result.supervised, EXHAUSTIVE, check=False)
			self.assertEqual(outcome.verdict, Verdict.LIVE, name)
			self.assertEqual((outcome.census.deadlock, outcome.census.livelock), (0, 0), name)
			walk = run(result.document, result.supervised, RandomPolicy(5), 200, check=False)
			self.assertEqual(walk.verdict, Verdict.COMPLETED, name)

	def test_reduced_pipeline_census(self):
		for name in ("weighted_return", "three_agents_preassigned"):
			control = full_pipeline_census(load_fixture(name), reduce=True).rows["control"]
			self.assertEqual((control.deadlock, control.livelock), (0, 0), name)


class TestTraceFiles(unittest.TestCase):
	def test_trace_lines(self):
		text = "0 t1 tx4_first\n1 - tch_s1x1\n2 t2 -\n"
		self.assertEqual(parse_trace(text), [("t1", "tx4_first"), ("t2", None)])

	def test_plain_list(self):
		self.assertEqual(parse_trace("t3 t4  # first round\nt5\n"), [("t3", None), ("t4", None), ("t5", None)])

	def test_malformed_line(self):
		self.assertRaises(ParseError, parse_trace, "0 t1 tx4_first extra\n")

	def test_chained_control_move(self):
		self.assertEqual(parse_trace("0 t1 tx2_first+tx2_last\n"), [("t1", "tx2_first")])
