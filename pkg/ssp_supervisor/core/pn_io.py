# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

"""Text format for nets, reports and DOT export"""

import re
from pathlib import Path

from ssp_supervisor.core.decomposition import Agent, NetDocument, SspDecomposition
from ssp_supervisor.core.exceptions import ParseError, StructuralError
from ssp_supervisor.core.petri_core import (
    Net,
    NetBuilder,
    ReachabilityGraph,
    format_marking,
    marking_from_dict,
)

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "nets"

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")
NUMBER_RE = re.compile(r"-?\d+\Z")
TOKEN_RE = re.compile(r'"[^"]*"|[^\s"]+')


def _strip_comment(line):
    in_quotes = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_quotes = not in_quotes
        elif ch == "#" and not in_quotes:
            return line[:i]
    return line


def _tokens(line):
    """(text, 1-based column) pairs; quoted strings lose their quotes"""
    body = _strip_comment(line)
    if body.count('"') % 2:
        raise ValueError("unterminated string")
    out = []
    for match in TOKEN_RE.finditer(body):
        text = match.group(0)
        if text.startswith('"'):
            text = text[1:-1]
        out.append((text, match.start() + 1))
    return out


class _Parser:
    def __init__(self, text):
        self.text = text
        self.name = None
        self.metadata = {}
        self.places = []
        self.marking = {}
        self.transitions = []
        self.labels = {}
        self.arcs = []
        self.agents = []
        self.buffers = []
        self.declared_at = {}

    def error(self, message, lineno, column):
        raise ParseError(message, lineno, column)

    def ident(self, token, lineno):
        text, column = token
        if not IDENT_RE.match(text):
            self.error(f"invalid identifier '{text}'", lineno, column)
        return text

    def number(self, token, lineno, what):
        text, column = token
        if not NUMBER_RE.match(text):
            self.error(f"expected a natural number for {what}, got '{text}'", lineno, column)
        value = int(text)
        if value < 0:
            self.error(f"negative {what} {value}", lineno, column)
        return value

    def declare(self, token, lineno):
        ident = self.ident(token, lineno)
        if ident in self.declared_at:
            self.error(f"duplicate identifier '{ident}' (first declared on line {self.declared_at[ident]})", lineno, token[1])
        self.declared_at[ident] = lineno
        return ident

    def parse(self):
        for lineno, line in enumerate(self.text.splitlines(), start=1):
            try:
                tokens = _tokens(line)
            except ValueError as e:
                self.error(str(e), lineno, line.index('"') + 1)
            if not tokens:
                continue
            keyword = tokens[0][0]
            handler = getattr(self, f"stmt_{keyword.lower()}", None) if keyword.isupper() else None
            if handler is None:
                self.error(f"unknown statement '{keyword}'", lineno, tokens[0][1])
            handler(tokens[1:], lineno, tokens[0][1])
        return self.finish()

    def stmt_net(self, args, lineno, column):
        if self.name is not None:
            self.error("NET declared twice", lineno, column)
        if len(args) != 1:
            self.error("expected: NET <name>", lineno, column)
        self.name = args[0][0]

    def stmt_meta(self, args, lineno, column):
        if len(args) != 2:
            self.error("expected: META <key> <value>", lineno, column)
        self.metadata[self.ident(args[0], lineno)] = args[1][0]

    def stmt_place(self, args, lineno, column):
        if len(args) not in (1, 3) or (len(args) == 3 and args[1][0] != "MARKING"):
            self.error("expected: PLACE <id> [MARKING <nat>]", lineno, column)
        place = self.declare(args[0], lineno)
        self.places.append(place)
        if len(args) == 3:
            self.marking[place] = self.number(args[2], lineno, "marking")

    def stmt_trans(self, args, lineno, column):
        if len(args) not in (1, 3) or (len(args) == 3 and args[1][0] != "LABEL"):
            self.error("expected: TRANS <id> [LABEL <string>]", lineno, column)
        transition = self.declare(args[0], lineno)
        self.transitions.append(transition)
        if len(args) == 3:
            self.labels[transition] = args[2][0]

    def stmt_arc(self, args, lineno, column):
        if len(args) not in (3, 5) or args[1][0] != "->" or (len(args) == 5 and args[3][0] != "WEIGHT"):
            self.error("expected: ARC <source> -> <target> [WEIGHT <nat>]", lineno, column)
        weight = 1
        if len(args) == 5:
            weight = self.number(args[4], lineno, "weight")
            if weight == 0:
                self.error("arc weight must be positive", lineno, args[4][1])
        self.arcs.append((args[0], args[2], weight, lineno))

    def _id_list(self, tokens, lineno):
        joined = ",".join(t for t, _ in tokens)
        column = tokens[0][1] if tokens else 0
        items = [item for item in joined.split(",") if item]
        return [self.ident((item, column), lineno) for item in items], column

    def stmt_agent(self, args, lineno, column):
        keys = [i for i, (t, _) in enumerate(args) if t in ("PLACES", "TRANS", "WAIT")]
        if len(args) < 7 or [args[i][0] for i in keys] != ["PLACES", "TRANS", "WAIT"] or keys[0] != 1:
            self.error("expected: AGENT <name> PLACES <id,...> TRANS <id,...> WAIT <place>", lineno, column)
        name = self.ident(args[0], lineno)
        if any(a[0] == name for a in self.agents):
            self.error(f"duplicate agent '{name}'", lineno, args[0][1])
        places = self._id_list(args[keys[0] + 1:keys[1]], lineno)
        transitions = self._id_list(args[keys[1] + 1:keys[2]], lineno)
        wait = args[keys[2] + 1:]
        if len(wait) != 1:
            self.error("WAIT takes exactly one place", lineno, column)
        self.agents.append((name, places, transitions, (self.ident(wait[0], lineno), wait[0][1]), lineno))

    def stmt_buffers(self, args, lineno, column):
        if not args:
            self.error("expected: BUFFERS <id,...>", lineno, column)
        ids, col = self._id_list(args, lineno)
        for b in ids:
            if b in self.buffers:
                self.error(f"duplicate buffer '{b}'", lineno, col)
            self.buffers.append((b, lineno, col))

    def _require(self, ident, kind, lineno, column):
        known = self.places if kind == "place" else self.transitions
        if ident not in known:
            self.error(f"undeclared {kind} '{ident}'", lineno, column)

    def finish(self):
        builder = NetBuilder()
        for p in self.places:
            builder.add_place(p)
        for t in self.transitions:
            builder.add_transition(t, self.labels.get(t))

        seen = set()
        places = set(self.places)
        transitions = set(self.transitions)
        for (src, src_col), (dst, dst_col), weight, lineno in self.arcs:
            for ident, col in ((src, src_col), (dst, dst_col)):
                if ident not in places and ident not in transitions:
                    self.error(f"arc references undeclared node '{ident}'", lineno, col)
            if src in places and dst in transitions:
                key = ("pre", src, dst)
                builder.add_pre(src, dst, weight)
            elif src in transitions and dst in places:
                key = ("post", dst, src)
                builder.add_post(src, dst, weight)
            else:
                self.error(f"arc {src} -> {dst} must join a place and a transition", lineno, src_col)
            if key in seen:
                self.error(f"duplicate arc {src} -> {dst}", lineno, src_col)
            seen.add(key)

        decomposition = None
        if self.agents or self.buffers:
            agents = []
            for name, (p_ids, p_col), (t_ids, t_col), (wait, w_col), lineno in self.agents:
                for p in p_ids:
                    self._require(p, "place", lineno, p_col)
                for t in t_ids:
                    self._require(t, "transition", lineno, t_col)
                self._require(wait, "place", lineno, w_col)
                agents.append(Agent(name, tuple(p_ids), tuple(t_ids), wait))
            for b, lineno, col in self.buffers:
                self._require(b, "place", lineno, col)
            decomposition = SspDecomposition(tuple(agents), tuple(b for b, _, _ in self.buffers))

        net = builder.build()
        return NetDocument(
            net=net,
            initial_marking=marking_from_dict(net, self.marking),
            decomposition=decomposition,
            metadata=self.metadata,
            name=self.name or "net",
        )


def parse_net(text):
    return _Parser(text).parse()


def _quote(value):
    value = str(value)
    if '"' in value or "\n" in value:
        raise StructuralError(f"{value!r} cannot be written: quotes and line breaks are not allowed")
    if not value or re.search(r"[\s#]", value):
        return f'"{value}"'
    return value


def serialize_net(doc):
    net = doc.net
    lines = [f"NET {_quote(doc.name)}"]
    for key, value in doc.metadata.items():
        lines.append(f"META {key} {_quote(value)}")
    for p, tokens in zip(net.places, doc.initial_marking):
        lines.append(f"PLACE {p} MARKING {tokens}" if tokens else f"PLACE {p}")
    for t in net.transitions:
        label = net.label(t)
        lines.append(f"TRANS {t} LABEL {_quote(label)}" if label is not None else f"TRANS {t}")
    for t in net.transitions:
        for p, w in net.preset(t).items():
            lines.append(f"ARC {p} -> {t}" + (f" WEIGHT {w}" if w != 1 else ""))
        for p, w in net.postset(t).items():
            lines.append(f"ARC {t} -> {p}" + (f" WEIGHT {w}" if w != 1 else ""))
    if doc.decomposition is not None:
        for agent in doc.decomposition.agents:
            lines.append(
                f"AGENT {agent.name} PLACES {','.join(agent.places)} "
                f"TRANS {','.join(agent.transitions)} WAIT {agent.waiting_place}"
            )
        if doc.decomposition.buffers:
            lines.append(f"BUFFERS {','.join(doc.decomposition.buffers)}")
    return "\n".join(lines) + "\n"


def load_net(path):
    return parse_net(Path(path).read_text(encoding="utf-8"))


def dump_net(doc, path):
    Path(path).write_text(serialize_net(doc), encoding="utf-8")


def load_fixture(name):
    return load_net(FIXTURE_DIR / f"{name}.net")


def fixture_names():
    return sorted(p.stem for p in FIXTURE_DIR.glob("*.net"))


def _dot_id(value):
    return '"' + str(value).replace('"', '\\"') + '"'


def export_dot(obj, name=None):
    """DOT text for a net, a net document or a reachability graph"""
    if isinstance(obj, NetDocument):
        return _net_dot(obj.net, obj.initial_marking, name or obj.name)
    if isinstance(obj, Net):
        return _net_dot(obj, None, name or "net")
    if isinstance(obj, ReachabilityGraph):
        return _graph_dot(obj, name or "reachability")
    raise StructuralError(f"Cannot export {type(obj).__name__} to DOT")


def _net_dot(net, marking, name):
    lines = [f"digraph {_dot_id(name)} {{"]
    if net.places or net.transitions:
        lines.append("  rankdir=LR;")
    for i, p in enumerate(net.places):
        tokens = marking[i] if marking is not None else 0
        label = f"{p}\\n{tokens}" if tokens else p
        lines.append(f"  {_dot_id(p)} [shape=circle, label={_dot_id(label)}];")
    for t in net.transitions:
        label = f"{t}\\n[{net.label(t)}]" if net.label(t) is not None else t
        lines.append(f"  {_dot_id(t)} [shape=box, label={_dot_id(label)}];")
    for t in net.transitions:
        for p, w in net.preset(t).items():
            lines.append(f"  {_dot_id(p)} -> {_dot_id(t)}" + (f" [label={_dot_id(w)}]" if w != 1 else "") + ";")
        for p, w in net.postset(t).items():
            lines.append(f"  {_dot_id(t)} -> {_dot_id(p)}" + (f" [label={_dot_id(w)}]" if w != 1 else "") + ";")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _graph_dot(rg, name):
    lines = [f"digraph {_dot_id(name)} {{"]
    for i, marking in enumerate(rg.nodes):
        terms = [p if n == 1 else f"{n}*{p}" for p, n in zip(rg.places, marking) if n]
        label = "+".join(terms) or "0"
        lines.append(f"  m{i} [label={_dot_id(label)}];")
    for source, t, target in rg.edges:
        lines.append(f"  m{source} -> m{target} [label={_dot_id(t)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "-"
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return ", ".join(str(v) for v in items) or "-"
    return str(value)


class Report:
    """Ordered `[section]` blocks of `key = value` lines"""

    def __init__(self):
        self.sections = {}

    def section(self, name):
        return self.sections.setdefault(name, {})

    def add(self, section, key, value):
        self.section(section)[key] = value
        return self

    def update(self, section, values):
        self.section(section).update(values)
        return self

    def render(self):
        blocks = []
        for name, values in self.sections.items():
            lines = [f"[{name}]"] + [f"{key} = {_format_value(value)}" for key, value in values.items()]
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"


def parse_report(text):
    sections = {}
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1], {})
        elif current is not None and " = " in line:
            key, value = line.split(" = ", 1)
            current[key] = value
        else:
            raise ParseError(f"unexpected report line '{line}'", lineno, 1)
    return sections


def emit_report(rows, definition=None, extra=None):
    """Census rows per pipeline stage, plus optional extra sections"""
    report = Report()
    for stage, census in rows.items():
        report.update(f"census.{stage}", census.as_row())
    if definition is None and rows:
        definition = next(iter(rows.values())).definition
    if definition is not None:
        report.add("census", "livelock_definition", definition)
    for name, values in (extra or {}).items():
        report.update(name, values)
    return report.render()


def format_census_table(rows):
    """Plain-text table of census rows, one line per stage"""
    header = f"{'stage':<12}{'reachable':>10}{'deadlock':>10}{'livelock':>10}"
    lines = [header]
    for stage, census in rows.items():
        if census is None:
            lines.append(f"{stage:<12}{'-':>10}{'-':>10}{'-':>10}")
        else:
            lines.append(f"{stage:<12}{census.reachable:>10}{census.deadlock:>10}{census.livelock:>10}")
    return "\n".join(lines)


__all__ = [
    "Report",
    "dump_net",
    "emit_report",
    "export_dot",
    "fixture_names",
    "format_census_table",
    "format_marking",
    "load_fixture",
    "load_net",
    "parse_net",
    "parse_report",
    "serialize_net",
]
