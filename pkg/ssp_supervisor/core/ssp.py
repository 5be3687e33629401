# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

"""Synchronized Sequential Processes: class membership, semiflow naming and net reductions"""

from dataclasses import dataclass, field, replace
from itertools import count

import networkx as nx
import numpy as np

from ssp_supervisor.core.decomposition import Agent, SspDecomposition
from ssp_supervisor.core.exceptions import StructuralError
from ssp_supervisor.core.log import get_logger
from ssp_supervisor.core.pn_io import Report
from ssp_supervisor.core.semiflows import (
    DEFAULT_BASIS_CAP,
    Semiflow,
    T_KIND,
    format_semiflow,
    is_conservative,
    is_consistent,
    minimal_t_semiflows,
)

logger = get_logger("ssp")

CONDITIONS = {
    1: "places split into agents and buffers",
    2: "transitions split into agents",
    3: "agents are strongly connected state machines",
    4: "buffers are destination private",
    5: "one marked waiting place on every buffer cycle",
    6: "consistent and conservative",
}


@dataclass
class ConditionVerdict:
    passed: bool = True
    evidence: list = field(default_factory=list)

    def fail(self, message):
        self.passed = False
        self.evidence.append(message)


@dataclass
class SspValidationReport:
    conditions: dict
    notes: list = field(default_factory=list)

    @property
    def ok(self):
        return all(v.passed for v in self.conditions.values())

    @property
    def failed(self):
        return [n for n, v in self.conditions.items() if not v.passed]

    def to_report(self, report=None):
        report = report or Report()
        report.update("ssp", {"valid": self.ok, "failed_conditions": self.failed, "notes": self.notes})
        for number, verdict in self.conditions.items():
            report.update(
                f"ssp.condition{number}",
                {"description": CONDITIONS[number], "passed": verdict.passed, "evidence": verdict.evidence},
            )
        return report

    def render(self):
        return self.to_report().render()


def _agent_graph(net, agent):
    graph = nx.DiGraph()
    places = set(agent.places)
    graph.add_nodes_from(agent.places)
    graph.add_nodes_from(agent.transitions)
    for t in agent.transitions:
        for p in net.preset(t):
            if p in places:
                graph.add_edge(p, t)
        for p in net.postset(t):
            if p in places:
                graph.add_edge(t, p)
    return graph


def _check_partitions(net, decomposition, verdicts):
    owner = {}
    for agent in decomposition.agents:
        for p in agent.places:
            if p in owner:
                verdicts[1].fail(f"place {p} belongs to {owner[p]} and {agent.name}")
            owner[p] = agent.name
    for b in decomposition.buffers:
        if b in owner:
            verdicts[1].fail(f"place {b} is both a buffer and a place of {owner[b]}")
        owner[b] = "buffers"
    for p in net.places:
        if p not in owner:
            verdicts[1].fail(f"place {p} is neither an agent place nor a buffer")

    owner = {}
    for agent in decomposition.agents:
        for t in agent.transitions:
            if t in owner:
                verdicts[2].fail(f"transition {t} belongs to {owner[t]} and {agent.name}")
            owner[t] = agent.name
    for t in net.transitions:
        if t not in owner:
            verdicts[2].fail(f"transition {t} belongs to no agent")


def _check_state_machines(net, decomposition, verdicts):
    buffers = set(decomposition.buffers)
    for agent in decomposition.agents:
        places = set(agent.places)
        transitions = set(agent.transitions)
        for t in agent.transitions:
            inside_in = {p: w for p, w in net.preset(t).items() if p in places}
            inside_out = {p: w for p, w in net.postset(t).items() if p in places}
            if list(inside_in.values()) != [1] or list(inside_out.values()) != [1]:
                verdicts[3].fail(f"{t} of {agent.name} does not move one token between agent places")
            foreign = [p for p in {**net.preset(t), **net.postset(t)} if p not in places and p not in buffers]
            if foreign:
                verdicts[3].fail(f"{t} of {agent.name} touches places of other agents: {', '.join(sorted(foreign))}")
        for p in agent.places:
            strangers = [t for t in net.input_transitions(p) + net.output_transitions(p) if t not in transitions]
            if strangers:
                verdicts[3].fail(f"place {p} of {agent.name} is connected to {', '.join(sorted(set(strangers)))}")
        graph = _agent_graph(net, agent)
        if not agent.places or not nx.is_strongly_connected(graph):
            verdicts[3].fail(f"{agent.name} is not strongly connected")


def _check_privacy(net, decomposition, verdicts):
    for b in decomposition.buffers:
        consumers = []
        for t in net.output_transitions(b):
            agent = decomposition.agent_of_transition(t)
            name = agent.name if agent else "?"
            if name not in consumers:
                consumers.append(name)
        if len(consumers) > 1:
            verdicts[4].fail(f"{b} feeds agents {', '.join(consumers)}")


def _check_waiting_places(net, marking, decomposition, verdicts, notes):
    buffers = set(decomposition.buffers)
    for agent in decomposition.agents:
        marked = [p for p in agent.places if marking[net.place_index(p)] > 0]
        if len(marked) != 1:
            verdicts[5].fail(f"{agent.name} has {len(marked)} marked places: {', '.join(marked) or 'none'}")
        elif marked[0] != agent.waiting_place:
            verdicts[5].fail(f"{agent.name} marks {marked[0]} but declares waiting place {agent.waiting_place}")
        if agent.waiting_place not in agent.places:
            verdicts[5].fail(f"waiting place {agent.waiting_place} is not a place of {agent.name}")
            continue
        tokens = marking[net.place_index(agent.waiting_place)]
        if tokens > 1:
            notes.append(f"waiting place {agent.waiting_place} of {agent.name} holds {tokens} tokens")

        for cycle in nx.simple_cycles(_agent_graph(net, agent)):
            fed = any(any(p in buffers for p in net.preset(n)) for n in cycle if n in agent.transitions)
            if fed and agent.waiting_place not in cycle:
                ordered = sorted(cycle, key=lambda n: (n not in agent.places, n))
                verdicts[5].fail(
                    f"cycle {' '.join(ordered)} of {agent.name} takes buffer tokens without passing {agent.waiting_place}"
                )


def validate_ssp(doc, cap=DEFAULT_BASIS_CAP):
    """Check the six conditions of the SSP class and collect evidence for each failure"""
    if doc.decomposition is None:
        raise StructuralError(f"{doc.name} carries no AGENT/BUFFERS decomposition")
    net = doc.net
    decomposition = doc.decomposition
    verdicts = {n: ConditionVerdict() for n in CONDITIONS}
    notes = []

    _check_partitions(net, decomposition, verdicts)
    _check_state_machines(net, decomposition, verdicts)
    _check_privacy(net, decomposition, verdicts)
    _check_waiting_places(net, doc.initial_marking, decomposition, verdicts, notes)

    consistent = is_consistent(net, cap)
    if not consistent:
        uncovered = [t for t, c in zip(net.transitions, consistent.witness) if not c]
        verdicts[6].fail(f"not consistent: {', '.join(uncovered)} in no T-semiflow")
    conservative = is_conservative(net, cap)
    if not conservative:
        uncovered = [p for p, c in zip(net.places, conservative.witness) if not c]
        verdicts[6].fail(f"not conservative: {', '.join(uncovered)} in no P-semiflow")

    report = SspValidationReport(verdicts, notes)
    logger.info(f"SSP validation of {doc.name}: {'passed' if report.ok else f'failed {report.failed}'}")
    return report


def first_last_transitions(net, agent, semiflow, name=None):
    """The transitions of a local semiflow leaving and entering the agent's waiting place"""
    support = set(semiflow.support_names(net.transitions))
    label = name or format_semiflow(semiflow, net.transitions)
    firsts = [t for t in net.output_transitions(agent.waiting_place) if t in support]
    lasts = [t for t in net.input_transitions(agent.waiting_place) if t in support]
    if len(firsts) != 1 or len(lasts) != 1:
        raise StructuralError(
            f"semiflow {label} of {agent.name} needs exactly one first and one last transition "
            f"around {agent.waiting_place}, found {firsts} and {lasts}"
        )
    return firsts[0], lasts[0]


@dataclass(frozen=True)
class NamedSemiflow:
    name: str
    semiflow: Semiflow
    agent: str = None

    @property
    def is_local(self):
        return self.agent is not None


@dataclass
class SemiflowTable:
    transitions: tuple
    global_flows: list
    local_flows: dict

    def all(self):
        return self.global_flows + self.local_semiflows()

    def local_semiflows(self):
        return [ns for agent in self.local_flows.values() for ns in agent]

    def get(self, name):
        for ns in self.all():
            if ns.name == name:
                return ns
        raise KeyError(name)

    def containing(self, transition):
        j = self.transitions.index(transition)
        return [ns for ns in self.local_semiflows() if ns.semiflow.coefficients[j]]

    def rows(self):
        return [
            (ns.name, "local" if ns.is_local else "global", ns.agent or "-", format_semiflow(ns.semiflow, self.transitions))
            for ns in self.all()
        ]


def t_semiflow_table(doc, cap=DEFAULT_BASIS_CAP):
    """Global minimal T-semiflows first, then each agent's local ones, numbered x1, x2, ..."""
    net = doc.net
    global_vectors = minimal_t_semiflows(net, cap)
    counter = count(1)
    globals_ = [NamedSemiflow(f"x{next(counter)}", sf) for sf in global_vectors]

    locals_ = {}
    agents = doc.decomposition.agents if doc.decomposition else ()
    for agent in agents:
        sub = net.restrict(agent.places, agent.transitions)
        lifted = []
        for sf in minimal_t_semiflows(sub, cap):
            vector = [0] * len(net.transitions)
            for t, c in sf.as_dict(sub.transitions).items():
                vector[net.transition_index(t)] = c
            lifted.append(tuple(vector))
        locals_[agent.name] = [
            NamedSemiflow(f"x{next(counter)}", Semiflow(T_KIND, v), agent.name) for v in sorted(lifted, reverse=True)
        ]
    return SemiflowTable(net.transitions, globals_, locals_)


def _reduce_once(net, marking, protected, groups):
    """One reduction step; returns (net, removed places, removed transitions) or None at fixpoint"""
    pre, post = net.pre, net.post

    def same_group(*nodes):
        if groups is None:
            return True
        return len({groups.get(n) for n in nodes}) == 1 and groups.get(nodes[0]) is not None

    for j in range(len(net.transitions)):
        for k in range(j + 1, len(net.transitions)):
            tj, tk = net.transitions[j], net.transitions[k]
            if (
                np.array_equal(pre[:, j], pre[:, k])
                and np.array_equal(post[:, j], post[:, k])
                and net.label(tj) == net.label(tk)
                and same_group(tj, tk)
            ):
                builder = net.to_builder().remove_transition(tk)
                return builder.build(), (), (tk,)

    for t in net.transitions:
        ins, outs = net.preset(t), net.postset(t)
        if list(ins.values()) != [1] or list(outs.values()) != [1]:
            continue
        (p,), (q,) = ins, outs
        if p == q or q in protected or marking.get(q, 0):
            continue
        if net.output_transitions(p) != (t,) or net.input_transitions(q) != (t,) or not same_group(p, q, t):
            continue
        builder = net.to_builder()
        for u in net.output_transitions(q):
            builder.add_pre(p, u, int(net.pre[net.place_index(q), net.transition_index(u)]))
        builder.remove_transition(t).remove_place(q)
        return builder.build(), (q,), (t,)

    for p in net.places:
        if p in protected or marking.get(p, 0):
            continue
        producers, consumers = net.input_transitions(p), net.output_transitions(p)
        if len(producers) != 1 or len(consumers) != 1 or producers == consumers:
            continue
        (t1,), (t2,) = producers, consumers
        i = net.place_index(p)
        if net.preset(t2) != {p: 1} or net.post[i, net.transition_index(t1)] != 1 or not same_group(p, t1, t2):
            continue
        builder = net.to_builder()
        for q, w in net.postset(t2).items():
            builder.add_post(t1, q, w)
        builder.remove_transition(t2).remove_place(p)
        return builder.build(), (p,), (t2,)
    return None


def _reduce(net, marking=None, protected=(), groups=None):
    marking = dict(marking or {})
    removed_places, removed_transitions = [], []
    while True:
        step = _reduce_once(net, marking, set(protected), groups)
        if step is None:
            return net, removed_places, removed_transitions
        net, places, transitions = step
        removed_places.extend(places)
        removed_transitions.extend(transitions)


def preprocess_reductions(net, m0=None):
    """Identical-transition merging and series place/transition fusion until fixpoint"""
    marking = dict(zip(net.places, m0)) if m0 is not None else {}
    reduced, places, transitions = _reduce(net, marking)
    logger.info(f"Reductions removed {len(places)} places and {len(transitions)} transitions")
    return reduced


def reduce_document(doc):
    """Reduce the plant without crossing agent borders; buffers and waiting places are kept"""
    net = doc.net
    marking = dict(zip(net.places, doc.initial_marking))
    decomposition = doc.decomposition
    protected, groups = set(), None
    if decomposition is not None:
        protected = set(decomposition.buffers) | {a.waiting_place for a in decomposition.agents}
        groups = {}
        for agent in decomposition.agents:
            for n in agent.places + agent.transitions:
                groups[n] = agent.name
    reduced, places, transitions = _reduce(net, marking, protected, groups)
    if decomposition is not None:
        decomposition = SspDecomposition(
            tuple(
                Agent(
                    a.name,
                    tuple(p for p in a.places if p not in places),
                    tuple(t for t in a.transitions if t not in transitions),
                    a.waiting_place,
                )
                for a in decomposition.agents
            ),
            decomposition.buffers,
        )
    new_marking = tuple(marking.get(p, 0) for p in reduced.places)
    return replace(doc, net=reduced, initial_marking=new_marking, decomposition=decomposition)
