# Copyright (c) 2025, ahmad mohammad and Contributors
# See license.txt

import unittest
from dataclasses import replace

from ssp_supervisor.core.control_synthesis import (
	build_control_pn,
	check_prop1_constructive,
	classify_subnets,
	fuse_sequences,
	is_choice_free,
	is_join_free,
	round_marking,
	simplify_control_pn,
)
from ssp_supervisor.core.exceptions import NotSspError, StructuralError
from ssp_supervisor.core.petri_core import format_marking
from ssp_supervisor.core.pn_io import Report, load_fixture


class TestControlNet(unittest.TestCase):
	def setUp(self):
		self.doc = load_fixture("two_agents")
		self.cn = build_control_pn(self.doc)

	def test_matches_reference_control_net(self):
		expected = load_fixture("two_agents_control")
		self.assertEqual(self.cn.net, expected.net)
		self.assertEqual(self.cn.initial_marking, expected.initial_marking)

	def test_sequences(self):
		seq = self.cn.sequences["x7"]
		self.assertEqual((seq.first, seq.place, seq.last), ("tx7_first", "px_x7", "tx7_last"))
		self.assertEqual((seq.first_label, seq.last_label), ("t5", "t3"))
		self.assertEqual(seq.support, ("t3", "t4", "t5"))
		self.assertIs(self.cn.sequence_of("tx7_last"), seq)
		self.assertEqual(self.cn.plant_buffer("pb_b4"), "b4")
		self.assertEqual(set(self.cn.fused), {"tx4", "tx5", "tx6", "tx7", "tx8", "tx9"})

	def test_round_marking(self):
		marking = round_marking(self.cn)
		self.assertEqual(format_marking(self.cn.net, marking), "2*pb_b1+pb_b2+pb_b3+pb_b4+pb_b5+pN_N1+pN_N2")
		self.assertTrue(check_prop1_constructive(self.cn))

	def test_rejects_non_ssp(self):
		tokens = list(self.doc.initial_marking)
		tokens[self.doc.net.place_index("p1")] = 0
		tokens[self.doc.net.place_index("p2")] = 1
		with self.assertRaises(NotSspError) as ctx:
			build_control_pn(replace(self.doc, initial_marking=tuple(tokens)))
		self.assertEqual(ctx.exception.report.failed, [5])

	def test_requires_decomposition(self):
		self.assertRaises(StructuralError, build_control_pn, load_fixture("fork_join"))

	def test_weighted_buffers(self):
		cn = build_control_pn(load_fixture("weighted_return"))
		self.assertEqual(cn.net.postset("tx4_last"), {"pb_b1": 2, "pN_N2": 1})
		self.assertEqual(cn.net.preset("tx4_first"), {"pb_b2": 1, "pb_b3": 1, "pN_N2": 1})


class TestSimplification(unittest.TestCase):
	def setUp(self):
		self.cn = build_control_pn(load_fixture("two_agents"))

	def test_fused_net_keeps_agent_self_loops(self):
		fused = fuse_sequences(self.cn)
		self.assertEqual(fused.preset("tx4"), {"pb_b1": 1, "pN_N1": 1})
		self.assertEqual(fused.postset("tx4"), {"pb_b2": 1, "pN_N1": 1})
		self.assertFalse(any(p.startswith("px_") for p in fused.places))

	def test_subnets(self):
		scn = simplify_control_pn(self.cn)
		self.assertEqual([s.name for s in scn.subnets], ["s1", "s2"])
		s1, s2 = scn.subnets
		self.assertEqual(s1.places, ("pb_b1", "pb_b2", "pb_b3"))
		self.assertEqual(s1.transitions, ("tx4", "tx5", "tx7", "tx8"))
		self.assertEqual(s2.places, ("pb_b4", "pb_b5"))
		self.assertEqual(s2.transitions, ("tx6", "tx9"))
		self.assertEqual(scn.origin["tx9"], "x9")

	def test_choice_and_join(self):
		verdict = classify_subnets(simplify_control_pn(self.cn))
		first, second = verdict.classes
		self.assertEqual((first.choice_free, first.join_free), (False, True))
		self.assertEqual((second.choice_free, second.join_free), (True, True))
		self.assertTrue(verdict.structurally_live)
		self.assertEqual(verdict.needing_enforcement(), [])

		sections = verdict.to_report(Report()).sections
		self.assertEqual(sections["prop1"]["structurally_live"], True)
		self.assertEqual(sections["prop1.s1"]["choice_free"], False)

	def test_weighted_return_needs_enforcement(self):
		scn = simplify_control_pn(build_control_pn(load_fixture("weighted_return")))
		self.assertEqual(len(scn.subnets), 1)
		net = scn.subnets[0].net
		self.assertFalse(is_choice_free(net))
		self.assertFalse(is_join_free(net))
		self.assertEqual([s.name for s in classify_subnets(scn).needing_enforcement()], ["s1"])
