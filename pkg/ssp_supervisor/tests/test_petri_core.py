# Copyright (c) 2025, ahmad mohammad and Contributors
# See license.txt

import unittest

from ssp_supervisor.core.exceptions import FiringError, SequenceError, StructuralError, TruncatedGraphError
from ssp_supervisor.core.petri_core import (
	LIVELOCK_TERMINAL,
	Net,
	NetBuilder,
	classify_markings,
	dead_transitions,
	enabled,
	fire,
	fire_sequence,
	format_marking,
	is_live,
	marking_from_dict,
	place_bounds,
	reachability_graph,
)
from ssp_supervisor.core.pn_io import load_fixture


def cycle_net():
	return (
		NetBuilder()
		.add_place("a")
		.add_place("b")
		.add_transition("t1")
		.add_transition("t2")
		.add_pre("a", "t1")
		.add_post("t1", "b")
		.add_pre("b", "t2")
		.add_post("t2", "a")
		.build()
	)


class TestNet(unittest.TestCase):
	def test_builder_rejects_duplicates(self):
		builder = NetBuilder().add_place("p")
		self.assertRaises(StructuralError, builder.add_place, "p")
		self.assertRaises(StructuralError, builder.add_transition, "p")

	def test_negative_weight_rejected(self):
		self.assertRaises(StructuralError, Net, ["p"], ["t"], [[-1]], [[0]])

	def test_arc_to_undeclared_place(self):
		builder = NetBuilder().add_transition("t")
		self.assertRaises(StructuralError, builder.add_pre, "p", "t")

	def test_presets_and_incidence(self):
		net = cycle_net()
		self.assertEqual(net.preset("t1"), {"a": 1})
		self.assertEqual(net.postset("t1"), {"b": 1})
		self.assertEqual(net.input_transitions("a"), ("t2",))
		self.assertEqual(net.incidence.tolist(), [[-1, 1], [1, -1]])
		self.assertTrue(net.is_ordinary)

	def test_restrict_keeps_order(self):
		net = load_fixture("two_agents").net
		sub = net.restrict(["p3", "p1", "p2"], ["t9", "t1"])
		self.assertEqual(sub.places, ("p1", "p2", "p3"))
		self.assertEqual(sub.transitions, ("t1", "t9"))

	def test_to_builder_round_trip(self):
		net = load_fixture("weighted_return").net
		self.assertEqual(net.to_builder().build(), net)


class TestFiring(unittest.TestCase):
	def setUp(self):
		self.doc = load_fixture("two_agents")
		self.net = self.doc.net
		self.m0 = self.doc.initial_marking

	def test_enabled_at_initial_marking(self):
		self.assertEqual(enabled(self.net, self.m0), {"t1", "t5", "t9", "t12"})

	def test_fire_moves_tokens(self):
		m1 = fire(self.net, self.m0, "t1")
		self.assertEqual(format_marking(self.net, m1), "p2+p4+b1+b3+b4")
		self.assertEqual(enabled(self.net, m1), {"t2", "t8", "t5", "t12"})

	def test_fire_reports_missing_tokens(self):
		with self.assertRaises(FiringError) as ctx:
			fire(self.net, self.m0, "t2")
		self.assertEqual(ctx.exception.deficient, {"p2": (1, 0)})

	def test_fire_sequence_names_failing_step(self):
		with self.assertRaises(SequenceError) as ctx:
			fire_sequence(self.net, self.m0, ["t1", "t2", "t2"])
		self.assertEqual(ctx.exception.index, 2)

	def test_fire_sequence_matches_state_equation(self):
		m = fire_sequence(self.net, self.m0, ["t1", "t2", "t5", "t4", "t3"])
		self.assertEqual(m, tuple(self.m0))

	def test_marking_from_dict(self):
		m = marking_from_dict(self.net, {"p1": 1, "b3": 2})
		self.assertEqual(format_marking(self.net, m), "p1+2*b3")
		self.assertRaises(StructuralError, marking_from_dict, self.net, {"nope": 1})


class TestCensus(unittest.TestCase):
	def test_two_agents_plant(self):
		doc = load_fixture("two_agents")
		census = classify_markings(reachability_graph(doc.net, doc.initial_marking))
		self.assertEqual((census.reachable, census.deadlock, census.livelock), (180, 13, 13))
		self.assertEqual(census.dead_transition_markings, 20)
		self.assertEqual(census.definition, LIVELOCK_TERMINAL)

	def test_three_agents_plant(self):
		doc = load_fixture("three_agents")
		census = classify_markings(reachability_graph(doc.net, doc.initial_marking))
		self.assertEqual((census.reachable, census.deadlock, census.livelock), (576, 14, 14))
		self.assertEqual(census.dead_transition_markings, 60)

	def test_weighted_return_plant(self):
		doc = load_fixture("weighted_return")
		census = classify_markings(reachability_graph(doc.net, doc.initial_marking))
		self.assertEqual((census.reachable, census.deadlock), (36, 4))

	def test_cycle_is_live(self):
		net = cycle_net()
		self.assertTrue(is_live(net, (1, 0)))
		self.assertFalse(is_live(net, (0, 0)))

	def test_deadlock_kills_every_transition(self):
		doc = load_fixture("three_agents")
		rg = reachability_graph(doc.net, doc.initial_marking)
		deadlock = fire_sequence(doc.net, doc.initial_marking, ["t3", "t4", "t5", "t6", "t3", "t5", "t9"])
		self.assertEqual(dead_transitions(rg, deadlock), frozenset(doc.net.transitions))
		self.assertEqual(dead_transitions(rg, doc.initial_marking), frozenset())

	def test_truncated_graph_refuses_census(self):
		doc = load_fixture("two_agents")
		rg = reachability_graph(doc.net, doc.initial_marking, node_budget=10)
		self.assertTrue(rg.truncated)
		self.assertEqual(len(rg), 10)
		self.assertRaises(TruncatedGraphError, classify_markings, rg)

	def test_agent_places_are_safe(self):
		doc = load_fixture("two_agents")
		bounds = place_bounds(reachability_graph(doc.net, doc.initial_marking))
		for agent in doc.decomposition.agents:
			for p in agent.places:
				self.assertEqual(bounds[p], 1)
