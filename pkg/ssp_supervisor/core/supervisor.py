# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

"""Guarded evolution of a plant next to its control net, and their synchronous composition"""

import random
from dataclasses import dataclass, field
from enum import Enum

from ssp_supervisor.core.decomposition import NetDocument
from ssp_supervisor.core.exceptions import HypothesisError, ParseError, PolicyError, StructuralError
from ssp_supervisor.core.log import get_logger
from ssp_supervisor.core.petri_core import (
    DEFAULT_NODE_BUDGET,
    NetBuilder,
    classify_markings,
    enabled,
    explore,
    fire,
    is_live,
)

logger = get_logger("supervisor")

NO_TRANSITION = "-"


class Verdict(str, Enum):
    COMPLETED = "completed"
    BLOCKED = "blocked"
    TERMINAL = "terminal"
    EXHAUSTED = "exhausted"
    LIVE = "live"
    NOT_LIVE = "not_live"


@dataclass
class GuardTable:
    """Per plant transition: the control transitions labeled with it and the px places of semiflows holding it.

    A semiflow whose first and last transitions carry the same plant label is a single self-loop on the
    waiting place; its first transition is chained to its last and both fire as one control move.
    """

    control: object
    labeled: dict
    places: dict
    chained: dict = field(default_factory=dict)

    @classmethod
    def from_control_net(cls, cn, plant_transitions):
        chained = {seq.first: seq.last for seq in cn.sequences.values() if seq.first_label == seq.last_label}
        closing = set(chained.values())
        labeled = {t: [] for t in plant_transitions}
        for c in cn.net.transitions:
            label = cn.net.label(c)
            if label is None:
                continue
            if label not in labeled:
                raise StructuralError(f"Control transition {c} is labeled {label}, which the plant does not have")
            if c not in closing:
                labeled[label].append(c)
        places = {t: [] for t in plant_transitions}
        for seq in cn.sequences.values():
            for t in seq.support:
                places[t].append(seq.place)
        return cls(cn.net, labeled, places, chained)

    @property
    def unsupervised(self):
        return not self.control.transitions

    @property
    def unlabeled(self):
        return tuple(c for c in self.control.transitions if self.control.label(c) is None)

    def fire_move(self, c, m_c):
        m_c = fire(self.control, m_c, c)
        if c in self.chained:
            m_c = fire(self.control, m_c, self.chained[c])
        return m_c

    def move_name(self, c):
        return f"{c}+{self.chained[c]}" if c in self.chained else c

    def move_arcs(self, c):
        """Pre and post of a control move, with the chained place consumed in between left out"""
        pre = dict(self.control.preset(c))
        post = dict(self.control.postset(c))
        if c in self.chained:
            last = self.chained[c]
            for p, w in self.control.preset(last).items():
                carried = min(w, post.get(p, 0))
                if carried:
                    post[p] -= carried
                if w > carried:
                    pre[p] = pre.get(p, 0) + w - carried
            for p, w in self.control.postset(last).items():
                post[p] = post.get(p, 0) + w
        return {p: w for p, w in pre.items() if w}, {p: w for p, w in post.items() if w}

    def enabled_control(self, t, m_c):
        active = enabled(self.control, m_c)
        options = []
        for c in self.labeled.get(t, ()):
            if c not in active:
                continue
            if c in self.chained and self.chained[c] not in enabled(self.control, fire(self.control, m_c, c)):
                continue
            options.append(c)
        return options

    def active_place(self, t, m_c):
        for p in self.places.get(t, ()):
            if m_c[self.control.place_index(p)] == 1:
                return p
        return None


def guard_true(t, m_c, gt):
    """An enabled control transition labeled t, or a px place at exactly one token for a semiflow holding t"""
    if gt.unsupervised:
        return True
    return bool(gt.enabled_control(t, m_c)) or gt.active_place(t, m_c) is not None


@dataclass(frozen=True)
class TraceStep:
    index: int
    plant: str
    control: str = None

    def render(self):
        return f"{self.index} {self.plant} {self.control or NO_TRANSITION}"


@dataclass
class SupervisorState:
    m_s: tuple
    m_c: tuple
    trace: list = field(default_factory=list)

    def record(self, plant, control):
        step = TraceStep(len(self.trace), plant, control)
        self.trace.append(step)
        return step


class RandomPolicy:
    """Seeded choice among the fireable plant transitions and among same-labeled control transitions"""

    def __init__(self, seed=0):
        self.seed = seed
        self.rng = random.Random(seed)

    def choose(self, candidates, state):
        return self.rng.choice(sorted(candidates))

    def choose_control(self, plant, options, state):
        return options[0] if len(options) == 1 else self.rng.choice(sorted(options))


class ScriptedPolicy:
    """Replays plant transitions, and the control choice where the script names one"""

    def __init__(self, steps):
        self.steps = [(s, None) if isinstance(s, str) else tuple(s) for s in steps]
        self.position = 0

    @property
    def exhausted(self):
        return self.position >= len(self.steps)

    def peek(self):
        return self.steps[self.position][0]

    def choose(self, candidates, state):
        plant, _ = self.steps[self.position]
        self.position += 1
        return plant

    def choose_control(self, plant, options, state):
        wanted = self.steps[self.position - 1][1]
        if wanted is None:
            return sorted(options)[0]
        if wanted not in options:
            raise PolicyError(f"Scripted control transition {wanted} is not enabled with {plant}")
        return wanted


EXHAUSTIVE = "exhaustive"


def fireable(plant, gt, state):
    """Plant-enabled transitions whose guard holds, in plant order"""
    active = enabled(plant, state.m_s)
    return tuple(t for t in plant.transitions if t in active and guard_true(t, state.m_c, gt))


def _fire_unlabeled(gt, state):
    steps = []
    progress = True
    while progress:
        progress = False
        active = enabled(gt.control, state.m_c)
        for c in gt.unlabeled:
            if c in active:
                state.m_c = fire(gt.control, state.m_c, c)
                steps.append(state.record(NO_TRANSITION, c))
                progress = True
                break
    return steps


def control_step(plant, gt, state, policy):
    """Fire one guarded plant transition and the control transition it synchronizes with.

    Returns the recorded steps, or None when no plant transition passes its guard.
    """
    candidates = fireable(plant, gt, state)
    if not candidates:
        return None
    t = policy.choose(candidates, state)
    if t not in candidates:
        raise PolicyError(f"Policy chose {t}, fireable are {', '.join(candidates)}")

    options = gt.enabled_control(t, state.m_c)
    control = policy.choose_control(t, options, state) if options else None
    state.m_s = fire(plant, state.m_s, t)
    if control is not None:
        state.m_c = gt.fire_move(control, state.m_c)
        control = gt.move_name(control)
    steps = [state.record(t, control)]
    return steps + _fire_unlabeled(gt, state)


def check_hypothesis(doc, cn, node_budget=DEFAULT_NODE_BUDGET):
    """Plant buffers cover the enforced live buffer marking and the control net is live"""
    for pb, required in cn.required_buffers.items():
        b = cn.plant_buffer(pb)
        have = doc.initial_marking[doc.net.place_index(b)]
        if have < required:
            raise HypothesisError(f"Buffer {b} holds {have} tokens, the live control net needs {required}")
    if cn.net.transitions and not is_live(cn.net, cn.initial_marking, node_budget):
        raise HypothesisError("The control net is not live from its initial marking")


@dataclass
class RunResult:
    verdict: Verdict
    trace: list
    state: SupervisorState
    census: object = None
    graph: object = None
    blocked_at: int = None

    def render_trace(self):
        return format_trace(self.trace)


def run(doc, cn, policy, steps=100, node_budget=DEFAULT_NODE_BUDGET, check=True):
    """Supervised evolution: a seeded or scripted run, or the exhaustive joint graph with its census"""
    if check:
        check_hypothesis(doc, cn, node_budget)
    state = initial_state(doc, cn)

    if policy == EXHAUSTIVE:
        rg = joint_reachability(doc, cn, node_budget)
        census = classify_markings(rg)
        verdict = Verdict.LIVE if census.livelock == 0 else Verdict.NOT_LIVE
        logger.info(f"Exhaustive supervised run of {doc.name}: {census.reachable} joint markings, {verdict.value}")
        return RunResult(verdict, [], state, census, rg)

    gt = GuardTable.from_control_net(cn, doc.net.transitions)
    scripted = isinstance(policy, ScriptedPolicy)
    for _ in range(steps):
        if scripted and policy.exhausted:
            return RunResult(Verdict.EXHAUSTED, state.trace, state)
        candidates = fireable(doc.net, gt, state)
        if scripted and policy.peek() not in candidates:
            logger.info(f"Script blocked at step {policy.position} ({policy.peek()})")
            return RunResult(Verdict.BLOCKED, state.trace, state, blocked_at=policy.position)
        if control_step(doc.net, gt, state, policy) is None:
            return RunResult(Verdict.TERMINAL, state.trace, state)
    return RunResult(Verdict.COMPLETED, state.trace, state)


def copy_names(cn):
    """Composed transition name of every control transition: <plant transition>_<semiflow>"""
    names = {}
    for seq in cn.sequences.values():
        names[seq.first] = f"{seq.first_label}_{seq.semiflow}"
        names[seq.last] = f"{seq.last_label}_{seq.semiflow}"
        if seq.first_label == seq.last_label:
            names[seq.last] += "_last"
    for c in cn.net.transitions:
        names.setdefault(c, c)
    return names


def _semiflow_of_place(cn, place):
    return cn.place_labels[place]


def joint_reachability(doc, cn, node_budget=DEFAULT_NODE_BUDGET):
    """Reachability graph over (plant marking, control marking) pairs under the guards"""
    plant = doc.net
    gt = GuardTable.from_control_net(cn, plant.transitions)
    names = copy_names(cn)
    split = len(plant.places)

    def successors(marking):
        m_s, m_c = marking[:split], marking[split:]
        active = enabled(plant, m_s)
        for t in plant.transitions:
            if t not in active:
                continue
            options = gt.enabled_control(t, m_c)
            if options:
                m_s2 = fire(plant, m_s, t)
                for c in options:
                    yield names[c], m_s2 + gt.fire_move(c, m_c)
                continue
            place = gt.active_place(t, m_c)
            if place is not None:
                yield f"{t}_{_semiflow_of_place(cn, place)}", fire(plant, m_s, t) + m_c
            elif gt.unsupervised:
                yield t, fire(plant, m_s, t) + m_c
        active = enabled(cn.net, m_c)
        for c in gt.unlabeled:
            if c in active:
                yield c, m_s + fire(cn.net, m_c, c)

    composed = compose(doc, cn)
    rg = explore(
        tuple(doc.initial_marking) + tuple(cn.initial_marking),
        successors,
        composed.net.transitions,
        node_budget,
        composed.net.places,
    )
    logger.debug(f"Joint graph of {doc.name}: {len(rg.nodes)} nodes")
    return rg


def compose(doc, cn):
    """Single net behaving like the plant run under the guards of its control net"""
    plant = doc.net
    control = cn.net
    if not control.transitions:
        return NetDocument(plant, tuple(doc.initial_marking), None, dict(doc.metadata), f"{doc.name}_composed")
    clash = set(plant.places + plant.transitions) & set(control.places + control.transitions)
    if clash:
        raise StructuralError(f"Plant and control net share identifiers: {sorted(clash)}")

    gt = GuardTable.from_control_net(cn, plant.transitions)
    names = copy_names(cn)
    builder = NetBuilder()
    # pb_<b> is not merged with b: the control copy moves a whole semiflow's tokens at its first and last
    # transitions, the plant buffer moves them at the transitions that touch it.
    for p in plant.places + control.places:
        builder.add_place(p)

    def add_copy(name, t, arcs):
        builder.add_transition(name, t)
        for pre, post in arcs:
            for p, w in pre.items():
                builder.add_pre(p, name, w)
            for p, w in post.items():
                builder.add_post(name, p, w)

    for t in plant.transitions:
        plant_arcs = (plant.preset(t), plant.postset(t))
        if gt.labeled[t]:
            for c in gt.labeled[t]:
                add_copy(names[c], t, [plant_arcs, gt.move_arcs(c)])
        else:
            for px in gt.places[t]:
                name = f"{t}_{_semiflow_of_place(cn, px)}"
                add_copy(name, t, [plant_arcs, ({px: 1}, {px: 1})])
    for c in gt.unlabeled:
        add_copy(c, None, [(control.preset(c), control.postset(c))])

    net = builder.build()
    marking = tuple(doc.initial_marking) + tuple(cn.initial_marking)
    return NetDocument(net, marking, None, {"kind": "composed"}, f"{doc.name}_composed")


def format_trace(trace):
    return "".join(step.render() + "\n" for step in trace)


def parse_trace(text):
    """Scripted steps from a trace file or a plain list of plant transitions"""
    steps = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split("#", 1)[0].split()
        if not tokens:
            continue
        if tokens[0].isdigit():
            if len(tokens) not in (2, 3):
                raise ParseError("expected: <index> <plant-transition> [<control-transition>|-]", lineno, 1)
            plant = tokens[1]
            control = tokens[2].split("+", 1)[0] if len(tokens) == 3 and tokens[2] != NO_TRANSITION else None
            if plant != NO_TRANSITION:
                steps.append((plant, control))
        else:
            steps.extend((t, None) for t in tokens)
    return steps


def initial_state(doc, cn):
    return SupervisorState(tuple(doc.initial_marking), tuple(cn.initial_marking))
