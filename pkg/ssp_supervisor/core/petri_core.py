# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

"""Place/transition nets, the firing rule, reachability and the liveness census"""

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import networkx as nx
import numpy as np

from ssp_supervisor.core.exceptions import (
    FiringError,
    SequenceError,
    StructuralError,
    TruncatedGraphError,
)
from ssp_supervisor.core.log import get_logger

logger = get_logger("petri_core")

DEFAULT_NODE_BUDGET = 1_000_000

# Readings of the "livelock marking" column of the census
LIVELOCK_TERMINAL = "terminal-component"
LIVELOCK_DEAD_TRANSITION = "dead-transition"


def _frozen_matrix(values, shape):
    matrix = np.array(values, dtype=np.int64)
    if matrix.size == 0:
        matrix = np.zeros(shape, dtype=np.int64)
    matrix = matrix.reshape(shape)
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class Net:
    places: tuple
    transitions: tuple
    pre: np.ndarray
    post: np.ndarray
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        places = tuple(self.places)
        transitions = tuple(self.transitions)
        shape = (len(places), len(transitions))
        object.__setattr__(self, "places", places)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "pre", _frozen_matrix(self.pre, shape))
        object.__setattr__(self, "post", _frozen_matrix(self.post, shape))
        object.__setattr__(self, "labels", {t: l for t, l in dict(self.labels).items() if l is not None})

        if len(set(places)) != len(places):
            raise StructuralError(f"Duplicate place identifier in {places}")
        if len(set(transitions)) != len(transitions):
            raise StructuralError(f"Duplicate transition identifier in {transitions}")
        if set(places) & set(transitions):
            raise StructuralError(f"Identifiers used both as place and transition: {sorted(set(places) & set(transitions))}")
        if (self.pre < 0).any() or (self.post < 0).any():
            raise StructuralError("Arc weights must be nonnegative")
        unknown = set(self.labels) - set(transitions)
        if unknown:
            raise StructuralError(f"Labels given for unknown transitions: {sorted(unknown)}")

    def __eq__(self, other):
        if not isinstance(other, Net):
            return NotImplemented
        return (
            self.places == other.places
            and self.transitions == other.transitions
            and np.array_equal(self.pre, other.pre)
            and np.array_equal(self.post, other.post)
            and self.labels == other.labels
        )

    __hash__ = None

    def __repr__(self):
        return f"Net(|P|={len(self.places)}, |T|={len(self.transitions)})"

    @cached_property
    def _place_index(self):
        return {p: i for i, p in enumerate(self.places)}

    @cached_property
    def _transition_index(self):
        return {t: i for i, t in enumerate(self.transitions)}

    @cached_property
    def incidence(self):
        c = self.post - self.pre
        c.setflags(write=False)
        return c

    @property
    def is_ordinary(self):
        weights = np.concatenate([self.pre.ravel(), self.post.ravel()])
        return bool(np.all((weights == 0) | (weights == 1)))

    def place_index(self, place):
        try:
            return self._place_index[place]
        except KeyError:
            raise StructuralError(f"Unknown place {place}") from None

    def transition_index(self, transition):
        try:
            return self._transition_index[transition]
        except KeyError:
            raise StructuralError(f"Unknown transition {transition}") from None

    def has_place(self, place):
        return place in self._place_index

    def has_transition(self, transition):
        return transition in self._transition_index

    def label(self, transition):
        return self.labels.get(transition)

    def preset(self, transition):
        """Input places of a transition with their arc weights"""
        j = self.transition_index(transition)
        return {self.places[i]: int(w) for i, w in enumerate(self.pre[:, j]) if w}

    def postset(self, transition):
        j = self.transition_index(transition)
        return {self.places[i]: int(w) for i, w in enumerate(self.post[:, j]) if w}

    def input_transitions(self, place):
        i = self.place_index(place)
        return tuple(t for j, t in enumerate(self.transitions) if self.post[i, j])

    def output_transitions(self, place):
        i = self.place_index(place)
        return tuple(t for j, t in enumerate(self.transitions) if self.pre[i, j])

    def restrict(self, places, transitions):
        """Subnet induced by the given places and transitions, kept in this net's order"""
        keep_p = set(places)
        keep_t = set(transitions)
        pi = [i for i, p in enumerate(self.places) if p in keep_p]
        ti = [j for j, t in enumerate(self.transitions) if t in keep_t]
        missing = (keep_p - set(self.places)) | (keep_t - set(self.transitions))
        if missing:
            raise StructuralError(f"Cannot restrict to unknown nodes {sorted(missing)}")
        return Net(
            places=[self.places[i] for i in pi],
            transitions=[self.transitions[j] for j in ti],
            pre=self.pre[np.ix_(pi, ti)],
            post=self.post[np.ix_(pi, ti)],
            labels={t: l for t, l in self.labels.items() if t in keep_t},
        )

    def to_builder(self):
        builder = NetBuilder()
        for p in self.places:
            builder.add_place(p)
        for t in self.transitions:
            builder.add_transition(t, self.labels.get(t))
        rows, cols = np.nonzero(self.pre)
        for i, j in zip(rows, cols):
            builder.add_pre(self.places[i], self.transitions[j], int(self.pre[i, j]))
        rows, cols = np.nonzero(self.post)
        for i, j in zip(rows, cols):
            builder.add_post(self.transitions[j], self.places[i], int(self.post[i, j]))
        return builder


class NetBuilder:
    """Mutable staging area for nets; build() freezes the result"""

    def __init__(self):
        self.places = []
        self.transitions = []
        self.labels = {}
        self.pre = {}
        self.post = {}

    def add_place(self, place):
        if place in self.places or place in self.transitions:
            raise StructuralError(f"Duplicate identifier {place}")
        self.places.append(place)
        return self

    def add_transition(self, transition, label=None):
        if transition in self.transitions or transition in self.places:
            raise StructuralError(f"Duplicate identifier {transition}")
        if label is not None and ('"' in label or "\n" in label):
            raise StructuralError(f"Label {label!r} of {transition} contains a quote or a line break")
        self.transitions.append(transition)
        if label is not None:
            self.labels[transition] = label
        return self

    def _check(self, place, transition, weight):
        if place not in self.places:
            raise StructuralError(f"Arc references undeclared place {place}")
        if transition not in self.transitions:
            raise StructuralError(f"Arc references undeclared transition {transition}")
        if weight < 0:
            raise StructuralError(f"Negative weight {weight} on arc {place}/{transition}")

    def add_pre(self, place, transition, weight=1):
        self._check(place, transition, weight)
        self.pre[place, transition] = self.pre.get((place, transition), 0) + weight
        return self

    def add_post(self, transition, place, weight=1):
        self._check(place, transition, weight)
        self.post[place, transition] = self.post.get((place, transition), 0) + weight
        return self

    def remove_place(self, place):
        self.places.remove(place)
        self.pre = {k: w for k, w in self.pre.items() if k[0] != place}
        self.post = {k: w for k, w in self.post.items() if k[0] != place}
        return self

    def remove_transition(self, transition):
        self.transitions.remove(transition)
        self.labels.pop(transition, None)
        self.pre = {k: w for k, w in self.pre.items() if k[1] != transition}
        self.post = {k: w for k, w in self.post.items() if k[1] != transition}
        return self

    def build(self):
        shape = (len(self.places), len(self.transitions))
        pre = np.zeros(shape, dtype=np.int64)
        post = np.zeros(shape, dtype=np.int64)
        pi = {p: i for i, p in enumerate(self.places)}
        ti = {t: j for j, t in enumerate(self.transitions)}
        for (p, t), w in self.pre.items():
            pre[pi[p], ti[t]] = w
        for (p, t), w in self.post.items():
            post[pi[p], ti[t]] = w
        return Net(self.places, self.transitions, pre, post, self.labels)


# Markings are plain tuples of ints in the owning net's place order

def zero_marking(net):
    return (0,) * len(net.places)


def marking_from_dict(net, tokens):
    marking = [0] * len(net.places)
    for place, count in tokens.items():
        if count < 0:
            raise StructuralError(f"Negative marking {count} for {place}")
        marking[net.place_index(place)] = int(count)
    return tuple(marking)


def marking_to_dict(net, marking):
    check_marking(net, marking)
    return {p: int(n) for p, n in zip(net.places, marking) if n}


def format_marking(net, marking):
    """Multiset notation, e.g. p1+p4+2*b3+b4"""
    terms = [p if n == 1 else f"{n}*{p}" for p, n in marking_to_dict(net, marking).items()]
    return "+".join(terms) or "0"


def check_marking(net, marking):
    if len(marking) != len(net.places):
        raise StructuralError(f"Marking has {len(marking)} entries, the net has {len(net.places)} places")
    if any(n < 0 for n in marking):
        raise StructuralError("Markings must be nonnegative")


def enabled(net, marking):
    check_marking(net, marking)
    m = np.asarray(marking, dtype=np.int64)
    mask = np.all(m[:, None] >= net.pre, axis=0)
    return frozenset(net.transitions[j] for j in np.flatnonzero(mask))


def _deficient(net, marking, j):
    return {
        net.places[i]: (int(net.pre[i, j]), int(marking[i]))
        for i in range(len(net.places))
        if marking[i] < net.pre[i, j]
    }


def fire(net, marking, transition):
    check_marking(net, marking)
    j = net.transition_index(transition)
    deficient = _deficient(net, marking, j)
    if deficient:
        raise FiringError(transition, deficient)
    return tuple(int(v) for v in np.asarray(marking, dtype=np.int64) + net.incidence[:, j])


def firing_count_vector(net, sequence):
    counts = np.zeros(len(net.transitions), dtype=np.int64)
    for t in sequence:
        counts[net.transition_index(t)] += 1
    return counts


def fire_sequence(net, marking, sequence):
    """Fire a sequence step by step and cross-check the result with the state equation"""
    check_marking(net, marking)
    current = tuple(marking)
    for index, t in enumerate(sequence):
        j = net.transition_index(t)
        deficient = _deficient(net, current, j)
        if deficient:
            raise SequenceError(index, t, deficient)
        current = tuple(int(v) for v in np.asarray(current) + net.incidence[:, j])

    expected = np.asarray(marking, dtype=np.int64) + net.incidence @ firing_count_vector(net, sequence)
    if tuple(int(v) for v in expected) != current:
        raise StructuralError("State equation disagrees with step-by-step firing")
    return current


@dataclass
class ReachabilityGraph:
    root: tuple
    nodes: list
    edges: list  # (source index, transition, target index)
    transitions: tuple
    places: tuple = ()
    truncated: bool = False

    def __post_init__(self):
        self.index = {m: i for i, m in enumerate(self.nodes)}
        self._out = [[] for _ in self.nodes]
        for source, t, target in self.edges:
            self._out[source].append((t, target))

    def __len__(self):
        return len(self.nodes)

    def successors(self, node):
        return self._out[node]

    def edge_markings(self):
        for source, t, target in self.edges:
            yield self.nodes[source], t, self.nodes[target]

    def node_of(self, marking):
        try:
            return self.index[tuple(marking)]
        except KeyError:
            raise StructuralError("Marking is not a node of the reachability graph") from None

    def require_exhaustive(self, operation):
        if self.truncated:
            raise TruncatedGraphError(
                f"{operation} needs an exhaustive graph; exploration stopped at {len(self.nodes)} nodes"
            )

    def to_digraph(self):
        graph = nx.DiGraph()
        graph.add_nodes_from(range(len(self.nodes)))
        graph.add_edges_from((s, d) for s, _, d in self.edges)
        return graph


def explore(root, successors, transitions, node_budget=DEFAULT_NODE_BUDGET, places=()):
    """Breadth-first closure of a successor function; stops and flags truncation at node_budget"""
    if node_budget < 1:
        raise StructuralError("node_budget must be at least 1")

    root = tuple(root)
    nodes = [root]
    index = {root: 0}
    edges = []
    queue = deque([0])
    truncated = False

    while queue and not truncated:
        source = queue.popleft()
        for t, target in successors(nodes[source]):
            target = tuple(target)
            j = index.get(target)
            if j is None:
                if len(nodes) >= node_budget:
                    truncated = True
                    break
                j = len(nodes)
                nodes.append(target)
                index[target] = j
                queue.append(j)
            edges.append((source, t, j))

    if truncated:
        logger.info(f"Exploration truncated at {len(nodes)} nodes")
    return ReachabilityGraph(root, nodes, edges, tuple(transitions), tuple(places), truncated)


def net_successors(net):
    pre = net.pre
    incidence = net.incidence
    names = net.transitions

    def successors(marking):
        m = np.asarray(marking, dtype=np.int64)
        for j in np.flatnonzero(np.all(m[:, None] >= pre, axis=0)):
            yield names[j], tuple(int(v) for v in m + incidence[:, j])

    return successors


def reachability_graph(net, m0, node_budget=DEFAULT_NODE_BUDGET):
    check_marking(net, m0)
    rg = explore(m0, net_successors(net), net.transitions, node_budget, net.places)
    logger.debug(f"Reachability graph: {len(rg.nodes)} nodes, {len(rg.edges)} edges")
    return rg


def dead_transitions(rg, marking):
    """Transitions that no marking reachable from `marking` enables"""
    rg.require_exhaustive("dead_transitions")
    start = rg.node_of(marking)
    reach = nx.descendants(rg.to_digraph(), start) | {start}
    alive = {t for node in reach for t, _ in rg.successors(node)}
    return frozenset(t for t in rg.transitions if t not in alive)


@dataclass(frozen=True)
class Census:
    reachable: int
    deadlock: int
    livelock: int
    dead_transition_markings: int
    definition: str = LIVELOCK_TERMINAL

    def as_row(self):
        return {
            "reachable": self.reachable,
            "deadlock": self.deadlock,
            "livelock": self.livelock,
            "dead_transition_markings": self.dead_transition_markings,
        }


def classify_markings(rg):
    """Count reachable, deadlock and livelock markings of an exhaustive graph.

    `livelock` counts markings lying in a terminal strongly connected component in which
    some transition never fires (deadlocks are one-node terminal components).
    `dead_transition_markings` counts markings from which some transition can never fire.
    """
    rg.require_exhaustive("classify_markings")
    universe = set(rg.transitions)
    graph = rg.to_digraph()
    condensed = nx.condensation(graph)
    component = condensed.graph["mapping"]

    fired_inside = {c: set() for c in condensed.nodes}
    enabled_in = {c: set() for c in condensed.nodes}
    for source, t, target in rg.edges:
        c = component[source]
        enabled_in[c].add(t)
        if component[target] == c:
            fired_inside[c].add(t)

    reach_enabled = {}
    for c in reversed(list(nx.topological_sort(condensed))):
        acc = set(enabled_in[c])
        for d in condensed.successors(c):
            acc |= reach_enabled[d]
        reach_enabled[c] = acc

    deadlock = livelock = dead_marked = 0
    for node in range(len(rg.nodes)):
        c = component[node]
        is_dead = not rg.successors(node)
        deadlock += is_dead
        if is_dead or reach_enabled[c] != universe:
            dead_marked += 1
        if condensed.out_degree(c) == 0 and (is_dead or fired_inside[c] != universe):
            livelock += 1

    return Census(len(rg.nodes), deadlock, livelock, dead_marked)


def is_live(net, m0, node_budget=DEFAULT_NODE_BUDGET):
    return classify_markings(reachability_graph(net, m0, node_budget)).livelock == 0


def is_implicit_place(net, m0, place, node_budget=DEFAULT_NODE_BUDGET):
    """Behavioural check: the place never is the only reason an output transition is disabled"""
    rg = reachability_graph(net, m0, node_budget)
    rg.require_exhaustive("is_implicit_place")
    i = net.place_index(place)
    others = [k for k in range(len(net.places)) if k != i]
    outputs = [net.transition_index(t) for t in net.output_transitions(place)]
    for marking in rg.nodes:
        m = np.asarray(marking, dtype=np.int64)
        for j in outputs:
            if np.all(m[others] >= net.pre[others, j]) and m[i] < net.pre[i, j]:
                return False
    return True


def place_bounds(rg):
    rg.require_exhaustive("place_bounds")
    bounds = np.max(np.asarray(rg.nodes, dtype=np.int64), axis=0)
    return {p: int(b) for p, b in zip(rg.places, bounds)}
