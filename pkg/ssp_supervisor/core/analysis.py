# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

"""Siphon-based monitor baseline and the plant / monitors / control census"""

from dataclasses import dataclass, field, replace

import numpy as np

from ssp_supervisor.core.exceptions import MonitorError, NotOrdinaryError, SiphonCapError
from ssp_supervisor.core.liveness_enforcement import synthesize_control
from ssp_supervisor.core.log import get_logger
from ssp_supervisor.core.petri_core import (
    DEFAULT_NODE_BUDGET,
    LIVELOCK_TERMINAL,
    classify_markings,
    reachability_graph,
)
from ssp_supervisor.core.pn_io import Report, format_census_table
from ssp_supervisor.core.supervisor import compose

logger = get_logger("analysis")

DEFAULT_SIPHON_CAP = 50_000
DEFAULT_MONITOR_ROUNDS = 10


@dataclass(frozen=True)
class Siphon:
    places: frozenset
    is_minimal: bool = True
    is_bad: bool = False

    def ordered(self, net):
        return tuple(p for p in net.places if p in self.places)

    def tokens(self, net, marking):
        return sum(marking[net.place_index(p)] for p in self.places)


def is_siphon(net, places):
    places = set(places)
    feeding = {t for p in places for t in net.input_transitions(p)}
    draining = {t for p in places for t in net.output_transitions(p)}
    return bool(places) and feeding <= draining


def maximal_trap(net, places):
    """Largest trap inside the place set; empty for a bad siphon"""
    trap = set(places)
    changed = True
    while changed:
        changed = False
        for p in [q for q in net.places if q in trap]:
            if any(not set(net.postset(t)) & trap for t in net.output_transitions(p)):
                trap.discard(p)
                changed = True
    return frozenset(trap)


def minimal_siphons(net, cap=DEFAULT_SIPHON_CAP):
    """Every minimal siphon of an ordinary net, grown from each single place"""
    if not net.is_ordinary:
        raise NotOrdinaryError("Siphon enumeration is only defined here for ordinary nets")
    seen = set()
    found = set()

    def grow(places):
        if places in seen:
            return
        seen.add(places)
        if len(seen) > cap:
            raise SiphonCapError(f"Siphon search visited more than {cap} place sets")
        for p in net.places:
            if p not in places:
                continue
            for t in net.input_transitions(p):
                inputs = net.preset(t)
                if not places & set(inputs):
                    for q in sorted(inputs, key=net.place_index):
                        grow(places | {q})
                    return
        found.add(places)

    for p in net.places:
        grow(frozenset({p}))
    minimal = [s for s in found if not any(other < s for other in found)]
    order = {p: i for i, p in enumerate(net.places)}
    minimal.sort(key=lambda s: (len(s), sorted(order[p] for p in s)))
    logger.debug(f"{len(minimal)} minimal siphons after visiting {len(seen)} place sets")
    return [Siphon(s, True, not maximal_trap(net, s)) for s in minimal]


def bad_siphons(net, cap=DEFAULT_SIPHON_CAP):
    return [s for s in minimal_siphons(net, cap) if s.is_bad]


@dataclass
class MonitorResult:
    net: object
    marking: tuple
    place: str
    siphon: Siphon
    feeds: tuple = ()

    @property
    def breaks_privacy(self):
        return len(self.feeds) > 1


def add_monitor(net, m0, siphon, name="pm", decomposition=None):
    """Monitor place keeping at least one token in the siphon"""
    places = siphon.places if isinstance(siphon, Siphon) else frozenset(siphon)
    siphon = siphon if isinstance(siphon, Siphon) else Siphon(places)
    rows = [net.place_index(p) for p in places]
    tokens = int(sum(m0[i] for i in rows))
    if tokens == 0:
        raise MonitorError(f"Siphon {{{', '.join(siphon.ordered(net))}}} is unmarked and cannot be protected")

    column = np.sum(net.incidence[rows], axis=0)
    builder = net.to_builder().add_place(name)
    for j, t in enumerate(net.transitions):
        if column[j] < 0:
            builder.add_pre(name, t, int(-column[j]))
        elif column[j] > 0:
            builder.add_post(t, name, int(column[j]))
    monitored = builder.build()

    feeds = []
    for t in monitored.output_transitions(name):
        agent = decomposition.agent_of_transition(t) if decomposition else None
        label = agent.name if agent else t
        if label not in feeds:
            feeds.append(label)
    marking = tuple(m0) + (tokens - 1,)
    return MonitorResult(monitored, marking, name, siphon, tuple(feeds))


@dataclass
class BaselineResult:
    document: object
    monitors: list
    census: object
    rounds: int

    def siphon_sets(self):
        return [m.siphon.ordered(self.document.net) for m in self.monitors]

    def privacy_violations(self):
        return [m for m in self.monitors if m.breaks_privacy]


def _emptiable(net, rg, siphon):
    rows = [net.place_index(p) for p in siphon.places]
    nodes = np.asarray(rg.nodes, dtype=np.int64)
    return bool(np.any(nodes[:, rows].sum(axis=1) == 0))


def monitor_baseline(
    doc,
    node_budget=DEFAULT_NODE_BUDGET,
    max_rounds=DEFAULT_MONITOR_ROUNDS,
    cap=DEFAULT_SIPHON_CAP,
):
    """Monitor every initially marked minimal bad siphon that can empty, round after round"""
    net, marking = doc.net, tuple(doc.initial_marking)
    monitors = []
    done = set()
    rounds = 0
    while True:
        rg = reachability_graph(net, marking, node_budget)
        rg.require_exhaustive("monitor_baseline")
        targets = [
            s
            for s in bad_siphons(net, cap)
            if s.places not in done and s.tokens(net, marking) > 0 and _emptiable(net, rg, s)
        ]
        if not targets:
            break
        rounds += 1
        if rounds > max_rounds:
            raise MonitorError(f"Bad siphons still emptiable after {max_rounds} monitor rounds")
        for siphon in targets:
            done.add(siphon.places)
            result = add_monitor(net, marking, siphon, f"pm{len(monitors) + 1}", doc.decomposition)
            net, marking = result.net, result.marking
            monitors.append(result)
        logger.info(f"Monitor round {rounds}: {len(targets)} siphons controlled")

    census = classify_markings(rg)
    decomposition = doc.decomposition
    if decomposition is not None and monitors:
        decomposition = replace(decomposition, buffers=decomposition.buffers + tuple(m.place for m in monitors))
    monitored = replace(doc, net=net, initial_marking=marking, decomposition=decomposition, name=f"{doc.name}_monitored")
    return BaselineResult(monitored, monitors, census, rounds)


STAGES = ("plant", "monitors", "control")


@dataclass
class PipelineReport:
    name: str
    rows: dict
    definition: str = LIVELOCK_TERMINAL
    skipped: dict = field(default_factory=dict)
    baseline: BaselineResult = None
    synthesis: object = None

    def to_report(self):
        report = Report()
        report.update("pipeline", {"net": self.name, "livelock_definition": self.definition})
        for stage in STAGES:
            census = self.rows.get(stage)
            if census is not None:
                report.update(f"census.{stage}", census.as_row())
            else:
                report.add(f"census.{stage}", "skipped", self.skipped.get(stage, "-"))
        if self.baseline is not None:
            report.add("monitors", "count", len(self.baseline.monitors))
            for m in self.baseline.monitors:
                report.update(
                    f"monitors.{m.place}",
                    {"siphon": m.siphon.ordered(self.baseline.document.net), "feeds": m.feeds},
                )
        if self.synthesis is not None:
            self.synthesis.to_report(report)
        return report

    def render(self):
        return self.to_report().render()

    def table(self):
        return format_census_table({stage: self.rows.get(stage) for stage in STAGES})


def full_pipeline_census(
    doc,
    node_budget=DEFAULT_NODE_BUDGET,
    reduce=False,
    siphon_cap=DEFAULT_SIPHON_CAP,
    max_rounds=DEFAULT_MONITOR_ROUNDS,
):
    """Plant census, monitor baseline census and supervised census of one SSP"""
    rows = {}
    skipped = {}
    rows["plant"] = classify_markings(reachability_graph(doc.net, doc.initial_marking, node_budget))

    baseline = None
    try:
        baseline = monitor_baseline(doc, node_budget, max_rounds, siphon_cap)
        rows["monitors"] = baseline.census
    except NotOrdinaryError:
        skipped["monitors"] = "non-ordinary net"
    except (MonitorError, SiphonCapError) as e:
        skipped["monitors"] = str(e)

    synthesis = synthesize_control(doc, node_budget, reduce)
    composed = compose(synthesis.document, synthesis.supervised)
    rows["control"] = classify_markings(reachability_graph(composed.net, composed.initial_marking, node_budget))

    logger.info(f"Pipeline census of {doc.name}: " + ", ".join(f"{s} {c.reachable}/{c.livelock}" for s, c in rows.items()))
    return PipelineReport(doc.name, rows, skipped=skipped, baseline=baseline, synthesis=synthesis)


__all__ = [
    "BaselineResult",
    "MonitorResult",
    "PipelineReport",
    "Siphon",
    "add_monitor",
    "full_pipeline_census",
    "maximal_trap",
    "minimal_siphons",
    "monitor_baseline",
]
