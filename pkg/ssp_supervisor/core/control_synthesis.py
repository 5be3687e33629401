# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

"""Control net of an SSP: one first/last transition pair per local T-semiflow, its fused form and the CF/JF test"""

from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from ssp_supervisor.core.decomposition import NetDocument
from ssp_supervisor.core.exceptions import NotSspError, StructuralError
from ssp_supervisor.core.log import get_logger
from ssp_supervisor.core.petri_core import DEFAULT_NODE_BUDGET, NetBuilder, is_live
from ssp_supervisor.core.semiflows import DEFAULT_BASIS_CAP
from ssp_supervisor.core.ssp import first_last_transitions, t_semiflow_table, validate_ssp

logger = get_logger("control_synthesis")


def buffer_place(buffer):
    return f"pb_{buffer}"


def agent_place(agent):
    return f"pN_{agent}"


def sequence_place(semiflow):
    return f"px_{semiflow}"


def fused_transition(semiflow):
    return f"t{semiflow}"


@dataclass(frozen=True)
class Sequence:
    """The t_first -> px -> t_last chain standing for one local T-semiflow"""

    semiflow: str
    agent: str
    first: str
    place: str
    last: str
    first_label: str
    last_label: str
    support: tuple


@dataclass
class ControlNet:
    net: object
    initial_marking: tuple
    buffer_places: dict
    agent_places: dict
    sequences: dict
    place_labels: dict
    table: object = None
    plant: object = None
    # pb place -> tokens the enforced control net needs to be live
    required_buffers: dict = field(default_factory=dict)

    @property
    def fused(self):
        return {fused_transition(name): seq for name, seq in self.sequences.items()}

    def sequence_of(self, transition):
        for seq in self.sequences.values():
            if transition in (seq.first, seq.last):
                return seq
        return None

    def plant_buffer(self, place):
        for b, pb in self.buffer_places.items():
            if pb == place:
                return b
        return None

    def as_document(self, name="control"):
        return NetDocument(self.net, self.initial_marking, None, {"kind": "control"}, name)


def build_control_pn(doc, validate=True, cap=DEFAULT_BASIS_CAP):
    """Abstract every local T-semiflow of a validated SSP as a first/last sequence over buffer copies"""
    if doc.decomposition is None:
        raise StructuralError(f"{doc.name} carries no AGENT/BUFFERS decomposition")
    if validate:
        report = validate_ssp(doc, cap)
        if not report.ok:
            raise NotSspError(f"{doc.name} is not an SSP: conditions {report.failed} fail", report)

    net = doc.net
    table = t_semiflow_table(doc, cap)
    decomposition = doc.decomposition
    builder = NetBuilder()
    marking = {}

    buffer_places = {}
    for b in decomposition.buffers:
        buffer_places[b] = buffer_place(b)
        builder.add_place(buffer_places[b])
        marking[buffer_places[b]] = doc.initial_marking[net.place_index(b)]

    agent_places = {}
    for agent in decomposition.agents:
        agent_places[agent.name] = agent_place(agent.name)
        builder.add_place(agent_places[agent.name])
        marking[agent_places[agent.name]] = 1

    sequences = {}
    place_labels = {}
    for agent in decomposition.agents:
        for ns in table.local_flows.get(agent.name, []):
            first, last = first_last_transitions(net, agent, ns.semiflow, ns.name)
            px = sequence_place(ns.name)
            builder.add_place(px)
            place_labels[px] = ns.name
            seq = Sequence(
                semiflow=ns.name,
                agent=agent.name,
                first=f"t{ns.name}_first",
                place=px,
                last=f"t{ns.name}_last",
                first_label=first,
                last_label=last,
                support=ns.semiflow.support_names(net.transitions),
            )
            sequences[ns.name] = seq
            builder.add_transition(seq.first, first).add_transition(seq.last, last)
            builder.add_pre(agent_places[agent.name], seq.first).add_post(seq.first, px)
            builder.add_pre(px, seq.last).add_post(seq.last, agent_places[agent.name])

            x = np.asarray(ns.semiflow.coefficients, dtype=np.int64)
            for b, pb in buffer_places.items():
                i = net.place_index(b)
                consumed = int(net.pre[i] @ x)
                produced = int(net.post[i] @ x)
                if consumed:
                    builder.add_pre(pb, seq.first, consumed)
                if produced:
                    builder.add_post(seq.last, pb, produced)

    control = builder.build()
    cn = ControlNet(
        net=control,
        initial_marking=tuple(marking.get(p, 0) for p in control.places),
        buffer_places=buffer_places,
        agent_places=agent_places,
        sequences=sequences,
        place_labels=place_labels,
        table=table,
        plant=net,
    )
    logger.info(f"Control net of {doc.name}: {len(sequences)} sequences over {len(buffer_places)} buffers")
    return cn


def round_marking(cn):
    """Control marking whose buffers hold what one firing of every global T-semiflow of the plant produces"""
    if cn.plant is None or cn.table is None:
        raise StructuralError("round_marking needs the plant net the control net was built from")
    marking = dict(zip(cn.net.places, cn.initial_marking))
    flows = [np.asarray(ns.semiflow.coefficients, dtype=np.int64) for ns in cn.table.global_flows]
    for b, pb in cn.buffer_places.items():
        row = cn.plant.post[cn.plant.place_index(b)]
        marking[pb] = sum(int(row @ x) for x in flows)
    for px in cn.place_labels:
        marking[px] = 0
    return tuple(marking[p] for p in cn.net.places)


def fuse_sequences(cn):
    """Each first/px/last chain collapsed into one transition t<x>; agent places stay as self-loops"""
    net = cn.net
    builder = NetBuilder()
    sequence_places = set(cn.place_labels)
    for p in net.places:
        if p not in sequence_places:
            builder.add_place(p)
    for name, seq in cn.sequences.items():
        t = fused_transition(name)
        builder.add_transition(t)
        for p, w in net.preset(seq.first).items():
            if p not in sequence_places:
                builder.add_pre(p, t, w)
        for p, w in net.postset(seq.last).items():
            if p not in sequence_places:
                builder.add_post(t, p, w)
    for t in net.transitions:
        if cn.sequence_of(t) is None:
            builder.add_transition(t, net.label(t))
            for p, w in net.preset(t).items():
                builder.add_pre(p, t, w)
            for p, w in net.postset(t).items():
                builder.add_post(t, p, w)
    return builder.build()


@dataclass(frozen=True)
class Subnet:
    index: int
    places: tuple
    transitions: tuple
    net: object

    @property
    def name(self):
        return f"s{self.index}"


@dataclass
class SimplifiedControlNet:
    net: object
    subnets: list
    origin: dict  # fused transition -> semiflow name


def simplify_control_pn(cn):
    fused = fuse_sequences(cn)
    for agent, pN in cn.agent_places.items():
        i = fused.place_index(pN)
        if not np.array_equal(fused.pre[i], fused.post[i]):
            raise StructuralError(f"{pN} of agent {agent} is not a pure self-loop after fusing its sequences")
    builder = fused.to_builder()
    for pN in cn.agent_places.values():
        builder.remove_place(pN)
    net = builder.build()

    graph = nx.Graph()
    graph.add_nodes_from(net.places)
    graph.add_nodes_from(net.transitions)
    rows, cols = np.nonzero(net.pre + net.post)
    graph.add_edges_from((net.places[i], net.transitions[j]) for i, j in zip(rows, cols))

    order = {n: k for k, n in enumerate(net.transitions + net.places)}
    components = sorted(nx.connected_components(graph), key=lambda c: min(order[n] for n in c))
    subnets = []
    for index, component in enumerate(components, start=1):
        places = tuple(p for p in net.places if p in component)
        transitions = tuple(t for t in net.transitions if t in component)
        subnets.append(Subnet(index, places, transitions, net.restrict(places, transitions)))

    origin = {fused_transition(name): name for name in cn.sequences}
    logger.info(f"Simplified control net: {len(net.transitions)} transitions in {len(subnets)} subnets")
    return SimplifiedControlNet(net, subnets, origin)


@dataclass(frozen=True)
class SubnetClass:
    subnet: Subnet
    choice_free: bool
    join_free: bool

    @property
    def live_by_prop1(self):
        return self.choice_free or self.join_free


@dataclass
class Prop1Verdict:
    classes: list

    @property
    def structurally_live(self):
        return all(c.live_by_prop1 for c in self.classes)

    def needing_enforcement(self):
        return [c.subnet for c in self.classes if not c.live_by_prop1]

    def to_report(self, report):
        report.add("prop1", "structurally_live", self.structurally_live)
        for c in self.classes:
            report.update(
                f"prop1.{c.subnet.name}",
                {
                    "places": c.subnet.places,
                    "transitions": c.subnet.transitions,
                    "choice_free": c.choice_free,
                    "join_free": c.join_free,
                },
            )
        return report


def is_choice_free(net):
    return bool(np.all(np.count_nonzero(net.pre, axis=1) <= 1))


def is_join_free(net):
    return bool(np.all(np.count_nonzero(net.pre, axis=0) <= 1))


def classify_subnets(scn):
    """Choice-free or join-free subnets make the control net structurally live"""
    classes = [SubnetClass(s, is_choice_free(s.net), is_join_free(s.net)) for s in scn.subnets]
    for c in classes:
        logger.debug(f"{c.subnet.name}: CF={c.choice_free} JF={c.join_free}")
    return Prop1Verdict(classes)


def check_prop1_constructive(cn, node_budget=DEFAULT_NODE_BUDGET):
    """Liveness of the control net under the one-round buffer marking"""
    return is_live(cn.net, round_marking(cn), node_budget)
