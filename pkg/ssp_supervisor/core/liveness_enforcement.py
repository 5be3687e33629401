# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

"""Check transitions and control places that make a non CF/JF subnet live"""

from dataclasses import dataclass, field
from itertools import combinations, count

import numpy as np

from ssp_supervisor.core.control_synthesis import (
    ControlNet,
    build_control_pn,
    classify_subnets,
    simplify_control_pn,
)
from ssp_supervisor.core.exceptions import EnforcementError, StructuralError
from ssp_supervisor.core.log import get_logger
from ssp_supervisor.core.petri_core import DEFAULT_NODE_BUDGET, format_marking, is_live
from ssp_supervisor.core.semiflows import (
    DEFAULT_BASIS_CAP,
    format_semiflow,
    is_conservative,
    is_consistent,
    minimal_t_semiflows,
)
from ssp_supervisor.core.ssp import NamedSemiflow, reduce_document

logger = get_logger("liveness_enforcement")

DEFAULT_CHECK_SET_SIZE = 4
DEFAULT_SEARCH_BUDGET = 200_000


def enforcement_place(transition):
    return f"pt_{transition}"


def conflict_transitions(net):
    """Transitions sharing an input place with another transition, in net order"""
    shared = np.count_nonzero(net.pre, axis=1) >= 2
    mask = np.any(net.pre[shared] > 0, axis=0) if shared.any() else np.zeros(len(net.transitions), dtype=bool)
    return tuple(t for t, hit in zip(net.transitions, mask) if hit)


def replay_semiflow(net, start, vector, budget=DEFAULT_SEARCH_BUDGET):
    """A firing sequence with count vector exactly `vector` from `start`, or None"""
    pre = net.pre
    incidence = net.incidence
    root = (tuple(int(v) for v in start), tuple(int(v) for v in vector))
    stack = [(root, ())]
    seen = set()
    while stack:
        (marking, remaining), path = stack.pop()
        if not any(remaining):
            return path
        if (marking, remaining) in seen:
            continue
        seen.add((marking, remaining))
        if len(seen) > budget:
            raise EnforcementError(f"Replay search exceeded {budget} states")
        m = np.asarray(marking, dtype=np.int64)
        for j in reversed(range(len(remaining))):
            if remaining[j] and np.all(m >= pre[:, j]):
                left = remaining[:j] + (remaining[j] - 1,) + remaining[j + 1:]
                stack.append(((tuple(int(v) for v in m + incidence[:, j]), left), path + (net.transitions[j],)))
    return None


@dataclass(frozen=True)
class Check:
    semiflow: str
    members: tuple
    sequence: tuple

    @property
    def is_virtual(self):
        return len(self.members) > 1

    @property
    def transition(self):
        return f"tch_{self.semiflow}" if self.is_virtual else self.members[0]


@dataclass
class CheckAssignment:
    semiflows: list
    checks: dict

    @property
    def check_transitions(self):
        return tuple(c.transition for c in self.checks.values())

    def rows(self, transitions):
        return [
            (ns.name, format_semiflow(ns.semiflow, transitions), self.checks[ns.name].transition, self.checks[ns.name].members)
            for ns in self.semiflows
        ]


def subnet_semiflows(net, prefix="x", cap=DEFAULT_BASIS_CAP):
    counter = count(1)
    return [NamedSemiflow(f"{prefix}{next(counter)}", sf) for sf in minimal_t_semiflows(net, cap)]


def _post_sum(net, members):
    return np.sum([net.post[:, net.transition_index(t)] for t in members], axis=0)


def _check_set(net, candidates, vector, max_set_size, budget):
    """Smallest set of candidates whose joint firing lets the semiflow replay, searched by size"""
    for size in range(2, max_set_size + 1):
        for members in combinations(candidates, size):
            sequence = replay_semiflow(net, _post_sum(net, members), vector, budget)
            if sequence is not None:
                return members, sequence
    return None


def find_check_transitions(net, semiflows=None, max_set_size=DEFAULT_CHECK_SET_SIZE, budget=DEFAULT_SEARCH_BUDGET):
    """One check transition per semiflow, or a set of them synchronized by a virtual check"""
    semiflows = semiflows if semiflows is not None else subnet_semiflows(net)
    conflicts = set(conflict_transitions(net))
    supports = {ns.name: ns.semiflow.support_names(net.transitions) for ns in semiflows}
    checks = {}

    for ns in semiflows:
        others = {t for name, s in supports.items() if name != ns.name for t in s}
        unique = [t for t in supports[ns.name] if t not in others]
        vector = ns.semiflow.coefficients
        candidates = sorted(unique, key=lambda t: (t in conflicts, net.transition_index(t)))
        for t in candidates:
            sequence = replay_semiflow(net, _post_sum(net, (t,)), vector, budget)
            if sequence is not None:
                checks[ns.name] = Check(ns.name, (t,), sequence)
                break
        else:
            found = _check_set(net, unique, vector, max_set_size, budget)
            if found is None:
                raise EnforcementError(
                    f"No check transition or set of at most {max_set_size} transitions for "
                    f"{format_semiflow(ns.semiflow, net.transitions, ns.name)}"
                )
            checks[ns.name] = Check(ns.name, *found)
        logger.debug(f"Check of {ns.name}: {checks[ns.name].transition} {checks[ns.name].members}")
    return CheckAssignment(list(semiflows), checks)


def check_place(transition):
    return f"pch_{transition}"


def capacity_place(transition):
    return f"pcap_{transition}"


def make_virtual_check(net, members, semiflow):
    """Synchronize a set of check transitions through a new unlabeled transition tch_<semiflow>"""
    if len(members) < 2:
        return net, members[0]
    name = f"tch_{semiflow.name}"
    builder = net.to_builder()
    builder.add_transition(name)
    for t in members:
        weight = semiflow.semiflow[net.transition_index(t)]
        builder.add_place(check_place(t)).add_place(capacity_place(t))
        builder.add_post(t, check_place(t)).add_pre(check_place(t), name, weight)
        builder.add_pre(capacity_place(t), t).add_post(name, capacity_place(t), weight)
    return builder.build(), name


@dataclass
class EnforcementResult:
    enforced_net: object
    added_places: dict  # controlled transition -> its control place
    live_m0: tuple
    checks: CheckAssignment = None
    base_places: tuple = ()
    virtual_transitions: tuple = field(default_factory=tuple)

    def marking_of(self, place):
        return self.live_m0[self.enforced_net.place_index(place)]

    def to_report(self, report, section="enforcement"):
        net = self.enforced_net
        report.update(
            section,
            {
                "checks": self.checks.check_transitions if self.checks else (),
                "added_places": list(self.added_places.values()),
                "virtual_transitions": self.virtual_transitions,
                "live_m0": format_marking(net, self.live_m0),
            },
        )
        for t, p in self.added_places.items():
            report.update(
                f"{section}.{p}",
                {"controls": t, "fed_by": net.input_transitions(p), "initial": self.marking_of(p)},
            )
        return report


def enforce_liveness(net, checks, node_budget=DEFAULT_NODE_BUDGET):
    """Add one control place per uncontrolled conflict transition, refilled by the check transitions"""
    if not is_consistent(net) or not is_conservative(net):
        raise EnforcementError("Enforcement needs a consistent and conservative subnet")
    base_places = net.places
    semiflows = {ns.name: ns for ns in checks.semiflows}

    enforced = net
    for name, check in checks.checks.items():
        if check.is_virtual:
            enforced, _ = make_virtual_check(enforced, check.members, semiflows[name])

    check_transitions = set(checks.check_transitions)
    controlled = [t for t in conflict_transitions(net) if t not in check_transitions]
    builder = enforced.to_builder()
    added = {}
    for t in controlled:
        added[t] = enforcement_place(t)
        builder.add_place(added[t]).add_pre(added[t], t)
    for name, check in checks.checks.items():
        x = semiflows[name].semiflow
        for t in controlled:
            weight = x[net.transition_index(t)]
            if weight:
                builder.add_post(check.transition, added[t], weight)
    enforced = builder.build()

    m0 = np.zeros(len(enforced.places), dtype=np.int64)
    base = [enforced.place_index(p) for p in base_places]
    for check in checks.checks.values():
        if check.is_virtual:
            m0 += enforced.post[:, enforced.transition_index(check.transition)]
            m0[base] += _post_sum(enforced, check.members)[base]
        else:
            m0 += enforced.post[:, enforced.transition_index(check.transition)]
    live_m0 = tuple(int(v) for v in m0)

    if not is_live(enforced, live_m0, node_budget):
        raise EnforcementError(f"Enforced net is not live from its constructed marking (checks {sorted(check_transitions)})")
    virtual = tuple(c.transition for c in checks.checks.values() if c.is_virtual)
    logger.info(f"Enforcement added {len(added)} control places and {len(virtual)} virtual checks")
    return EnforcementResult(enforced, added, live_m0, checks, tuple(base_places), virtual)


def translate_to_control_net(cn, result):
    """Carry places added on fused transitions back onto the first/last transitions of their sequences"""
    fused = cn.fused
    enforced = result.enforced_net
    existing = set(cn.net.places)
    new_places = [p for p in enforced.places if p not in existing]
    new_transitions = [t for t in enforced.transitions if t not in fused]
    if not new_places:
        return cn

    builder = cn.net.to_builder()
    for t in new_transitions:
        if cn.net.has_transition(t):
            raise StructuralError(f"{t} of the enforced subnet has no sequence in the control net")
        builder.add_transition(t, enforced.label(t))
    for p in new_places:
        builder.add_place(p)

    for p in enforced.places:
        for t, w in ((t, int(enforced.pre[enforced.place_index(p), j])) for j, t in enumerate(enforced.transitions)):
            if not w or (p in existing and t in fused):
                continue
            builder.add_pre(p, fused[t].first if t in fused else t, w)
        for t, w in ((t, int(enforced.post[enforced.place_index(p), j])) for j, t in enumerate(enforced.transitions)):
            if not w or (p in existing and t in fused):
                continue
            builder.add_post(fused[t].last if t in fused else t, p, w)

    net = builder.build()
    marking = dict(zip(cn.net.places, cn.initial_marking))
    marking.update({p: result.marking_of(p) for p in new_places})
    required = dict(cn.required_buffers)
    for p in result.base_places:
        if p in cn.buffer_places.values() and result.marking_of(p):
            required[p] = max(required.get(p, 0), result.marking_of(p))
    return ControlNet(
        net=net,
        initial_marking=tuple(marking[p] for p in net.places),
        buffer_places=cn.buffer_places,
        agent_places=cn.agent_places,
        sequences=cn.sequences,
        place_labels=cn.place_labels,
        table=cn.table,
        plant=cn.plant,
        required_buffers=required,
    )


@dataclass
class SynthesisResult:
    document: object
    control: ControlNet
    simplified: object
    verdict: object
    enforcement: dict  # subnet name -> EnforcementResult
    supervised: ControlNet

    def to_report(self, report):
        self.verdict.to_report(report)
        for name, result in self.enforcement.items():
            result.to_report(report, f"enforcement.{name}")
        return report


def synthesize_control(
    doc,
    node_budget=DEFAULT_NODE_BUDGET,
    reduce=False,
    cap=DEFAULT_BASIS_CAP,
    max_set_size=DEFAULT_CHECK_SET_SIZE,
):
    """Control net, its simplified form, the CF/JF verdict and enforcement of the subnets that need it"""
    if reduce:
        doc = reduce_document(doc)
    control = build_control_pn(doc, cap=cap)
    simplified = simplify_control_pn(control)
    verdict = classify_subnets(simplified)

    supervised = control
    enforcement = {}
    for subnet in verdict.needing_enforcement():
        semiflows = subnet_semiflows(subnet.net, f"{subnet.name}x", cap)
        checks = find_check_transitions(subnet.net, semiflows, max_set_size)
        result = enforce_liveness(subnet.net, checks, node_budget)
        enforcement[subnet.name] = result
        supervised = translate_to_control_net(supervised, result)
    logger.info(
        f"Synthesis of {doc.name}: {len(simplified.subnets)} subnets, {len(enforcement)} enforced"
    )
    return SynthesisResult(doc, control, simplified, verdict, enforcement, supervised)
