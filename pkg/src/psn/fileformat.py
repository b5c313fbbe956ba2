"""Text formats: PSN specs, morphism maps, time series, relations, tables.

PSN spec (``.psn``)::

    # comments run to end of line
    [graph]
    vertices = 3
    cardinalities = 2 2 2
    edges = 1-2 1-3 2-3

    [family 1]
    f11 = 1                 # new value of x1
    f12 = (x1+1, x2, x3)    # or the whole image vector
    [family 2]
    f21 = table             # rows over the neighbourhood, ascending vertices
      0 0 0 : 0
      ...

    [schedules]
    a1 = 3 2 1

    [updates]
    f1 = a1 : f11 f21 f31 @ 0.18
    r1 = raw @ 0.82         # full table rows follow: state : image
      0 0 0 : 1 0 0
      ...

The canonical form written by :func:`emit_psn_spec` orders families by
vertex and every list of names in natural order (``f2`` before ``f10``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import expr as ex
from .core import PSN, StateDomain
from .document import RuleDecl, SpecDocument, UpdateDecl
from .expr import ParseError

_SECTION = re.compile(r"^\[\s*([A-Za-z]+)(?:\s+(\S+))?\s*\]$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_|.']*$")


def natural_key(name: str):
    return [(1, int(p)) if p.isdigit() else (0, p) for p in re.split(r"(\d+)", name)]


def _strip(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def _ints(text: str, line: int, col: int) -> tuple:
    out = []
    for tok in text.split():
        try:
            out.append(int(tok))
        except ValueError:
            raise ParseError(f"expected an integer, got {tok!r}", line, col) from None
    return tuple(out)


def _row(text: str, line: int, col: int):
    if text.count(":") != 1:
        raise ParseError("table rows look like 'v1 v2 ... : w'", line, col)
    left, right = text.split(":")
    return _ints(left, line, col), _ints(right, line, col + len(left) + 1)


def _probability(text: str, line: int, col: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"probability must be a decimal literal, got {text!r}", line, col) from None


def parse_psn_spec(text: str) -> SpecDocument:
    """Parse spec text; raises :class:`ParseError` with line and column."""
    graph: dict = {}
    families: dict[int, list[RuleDecl]] = {}
    schedules: list = []
    updates: list[UpdateDecl] = []
    section = None
    family_vertex = None
    pending = None  # (kind, index) of the table currently receiving rows
    seen_sections = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        body = line.strip()
        m = _SECTION.match(body)
        if m:
            kind, arg = m.group(1).lower(), m.group(2)
            pending = None
            if kind == "family":
                if arg is None or not arg.isdigit():
                    raise ParseError("family sections look like [family <vertex>]", lineno, col)
                key = ("family", int(arg))
                family_vertex = int(arg)
                families.setdefault(family_vertex, [])
            elif kind in ("graph", "schedules", "updates") and arg is None:
                key = kind
            else:
                raise ParseError(f"unknown section {body}", lineno, col)
            if key in seen_sections:
                raise ParseError(f"duplicate section {body}", lineno, col)
            seen_sections.add(key)
            section = kind
            continue
        if section is None:
            raise ParseError("content before the first section", lineno, col)

        if "=" not in body:
            if pending is None:
                raise ParseError("table row outside a table", lineno, col)
            row = _row(body, lineno, col)
            where, idx = pending
            if where == "family":
                rules = families[family_vertex]
                if len(row[1]) != 1:
                    raise ParseError("local table rows have exactly one output value", lineno, col)
                d = rules[idx]
                rules[idx] = RuleDecl(d.name, d.kind, d.exprs, d.rows + ((row[0], row[1][0]),), d.line)
            else:
                d = updates[idx]
                updates[idx] = UpdateDecl(d.name, d.probability, None, None, d.rows + (row,), d.line)
            continue

        key, value = (p.strip() for p in body.split("=", 1))
        vcol = col + body.index("=") + 1 + (len(body.split("=", 1)[1]) - len(body.split("=", 1)[1].lstrip()))
        pending = None
        if section == "graph":
            if key in graph:
                raise ParseError(f"duplicate graph key {key!r}", lineno, col)
            if key == "vertices":
                vals = _ints(value, lineno, vcol)
                if len(vals) != 1:
                    raise ParseError("vertices takes one integer", lineno, vcol)
                graph[key] = vals[0]
            elif key == "cardinalities":
                graph[key] = _ints(value, lineno, vcol)
            elif key == "edges":
                edges = []
                for tok in value.split():
                    parts = tok.split("-")
                    if len(parts) != 2 or not all(p.isdigit() for p in parts):
                        raise ParseError(f"edges look like 'a-b', got {tok!r}", lineno, vcol)
                    edges.append((int(parts[0]), int(parts[1])))
                graph[key] = tuple(edges)
            else:
                raise ParseError(f"unknown graph key {key!r}", lineno, col)
            continue

        if not _NAME.match(key):
            raise ParseError(f"invalid name {key!r}", lineno, col)
        if section == "family":
            rules = families[family_vertex]
            if any(r.name == key for r in rules):
                raise ParseError(f"duplicate name {key!r} in family {family_vertex}", lineno, col)
            if value == "table":
                rules.append(RuleDecl(key, "table", (), (), lineno))
                pending = ("family", len(rules) - 1)
            elif value.startswith("(") and _is_tuple(value):
                parts = _split_tuple(value[1:-1])
                exprs = []
                offset = vcol + 1
                for part in parts:
                    exprs.append(ex.parse_expression(part, lineno, offset))
                    offset += len(part) + 1
                rules.append(RuleDecl(key, "tuple", tuple(exprs), (), lineno))
            else:
                rules.append(RuleDecl(key, "expr", (ex.parse_expression(value, lineno, vcol),), (), lineno))
        elif section == "schedules":
            if any(n == key for n, _ in schedules):
                raise ParseError(f"duplicate schedule {key!r}", lineno, col)
            schedules.append((key, _ints(value, lineno, vcol)))
        elif section == "updates":
            if any(u.name == key for u in updates):
                raise ParseError(f"duplicate update {key!r}", lineno, col)
            if "@" not in value:
                raise ParseError("updates look like 'name = schedule : f1 f2 ... @ p'", lineno, vcol)
            head, prob = (p.strip() for p in value.rsplit("@", 1))
            p = _probability(prob, lineno, vcol + value.rindex("@") + 1)
            if head == "raw":
                updates.append(UpdateDecl(key, p, None, None, (), lineno))
                pending = ("update", len(updates) - 1)
            else:
                if ":" not in head:
                    raise ParseError("updates look like 'name = schedule : f1 f2 ... @ p'", lineno, vcol)
                sched, sel = (p.strip() for p in head.split(":", 1))
                updates.append(UpdateDecl(key, p, sched, tuple(sel.split()), (), lineno))

    for k in ("vertices", "cardinalities"):
        if k not in graph:
            raise ParseError(f"[graph] section is missing {k!r}", 1, 1)
    return SpecDocument(
        vertices=graph["vertices"],
        cardinalities=graph["cardinalities"],
        edges=graph.get("edges", ()),
        families=tuple((v, tuple(rs)) for v, rs in families.items()),
        schedules=tuple(schedules),
        updates=tuple(updates),
    )


def _is_tuple(value: str) -> bool:
    # "(x1+1)" is a parenthesised expression, "(x1+1, x2)" a tuple
    depth = 0
    for i, ch in enumerate(value):
        depth += ch == "("
        depth -= ch == ")"
        if depth == 0 and i != len(value) - 1:
            return False
    return "," in value


def _split_tuple(inner: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(inner):
        depth += ch == "("
        depth -= ch == ")"
        if ch == "," and depth == 0:
            parts.append(inner[start:i])
            start = i + 1
    parts.append(inner[start:])
    return parts


def canonicalize(doc: SpecDocument) -> SpecDocument:
    edges = tuple(sorted({(min(a, b), max(a, b)) for a, b in doc.edges}))
    families = tuple(
        (v, tuple(sorted(rules, key=lambda r: natural_key(r.name))))
        for v, rules in sorted(doc.families, key=lambda item: item[0])
    )
    schedules = tuple(sorted(doc.schedules, key=lambda s: natural_key(s[0])))
    updates = tuple(sorted(doc.updates, key=lambda u: natural_key(u.name)))
    rows_sorted = []
    for u in updates:
        if u.is_raw:
            u = UpdateDecl(u.name, u.probability, None, None, tuple(sorted(u.rows)), u.line)
        rows_sorted.append(u)
    fams = tuple(
        (v, tuple(RuleDecl(r.name, r.kind, r.exprs, tuple(sorted(r.rows)), r.line) for r in rules))
        for v, rules in families
    )
    return SpecDocument(doc.vertices, tuple(doc.cardinalities), edges, fams, schedules, tuple(rows_sorted))


def emit_document(doc: SpecDocument) -> str:
    doc = canonicalize(doc)
    out = ["[graph]", f"vertices = {doc.vertices}",
           "cardinalities = " + " ".join(map(str, doc.cardinalities)),
           ("edges = " + " ".join(f"{a}-{b}" for a, b in doc.edges)).rstrip()]
    for v, rules in doc.families:
        out += ["", f"[family {v}]"]
        for r in rules:
            if r.kind == "expr":
                out.append(f"{r.name} = {ex.render(r.exprs[0])}")
            elif r.kind == "tuple":
                out.append(f"{r.name} = (" + ", ".join(ex.render(e) for e in r.exprs) + ")")
            else:
                out.append(f"{r.name} = table")
                out += [f"  {' '.join(map(str, i))} : {o}" for i, o in r.rows]
    out += ["", "[schedules]"]
    out += [f"{name} = {' '.join(map(str, order))}" for name, order in doc.schedules]
    out += ["", "[updates]"]
    for u in doc.updates:
        if u.is_raw:
            out.append(f"{u.name} = raw @ {u.probability!r}")
            out += [f"  {' '.join(map(str, s))} : {' '.join(map(str, t))}" for s, t in u.rows]
        else:
            out.append(f"{u.name} = {u.schedule} : {' '.join(u.selection)} @ {u.probability!r}")
    return "\n".join(out) + "\n"


def to_document(psn: PSN) -> SpecDocument:
    """Declaration that re-validates to ``psn``.

    Local functions keep their original declaration when they have one;
    others are written as neighbourhood tables.
    """
    dom, graph = psn.domain, psn.graph
    families = []
    for fam in psn.families:
        rules = []
        for lf in fam:
            if lf.source is not None:
                s = lf.source
                rules.append(RuleDecl(lf.name, s.kind, s.exprs, s.rows))
                continue
            inputs = graph.neighborhood(lf.vertex)
            rows = []
            for combo in np.ndindex(*[dom.card(b) for b in inputs]):
                state = [0] * dom.n
                for b, v in zip(inputs, combo):
                    state[b - 1] = int(v)
                rows.append((tuple(int(v) for v in combo), int(lf.rule[dom.encode(state)])))
            rules.append(RuleDecl(lf.name, "table", (), tuple(rows)))
        families.append((fam.vertex, tuple(rules)))
    updates = []
    for u in psn.updates:
        if u.has_provenance:
            updates.append(UpdateDecl(u.name, u.probability, u.schedule.name, u.selection))
        else:
            rows = tuple((dom.decode(i), dom.decode(j)) for i, j in enumerate(u.table))
            updates.append(UpdateDecl(u.name, u.probability, None, None, rows))
    return SpecDocument(
        psn.n, dom.cardinalities, tuple(sorted(graph.edges)), tuple(families),
        tuple((s.name, s.order) for s in psn.schedules), tuple(updates),
    )


def emit_psn_spec(psn_or_doc) -> str:
    doc = psn_or_doc if isinstance(psn_or_doc, SpecDocument) else to_document(psn_or_doc)
    return emit_document(doc)


def load_psn(path, **kwargs) -> PSN:
    from .core import validate_psn

    with open(path) as fh:
        return validate_psn(parse_psn_spec(fh.read()), **kwargs)


# --- morphism maps ----------------------------------------------------------

@dataclass
class MapsDocument:
    """``phi: b -> a`` lines (target-graph vertex to source-graph vertex),
    ``phihat b: v -> w`` value maps and optional ``mu: f -> g`` lines."""

    phi: dict = field(default_factory=dict)
    phihat: dict = field(default_factory=dict)
    mu: dict = field(default_factory=dict)


_PHI = re.compile(r"^phi\s*:\s*(\d+)\s*->\s*(\d+)$")
_PHIHAT = re.compile(r"^phihat\s+(\d+)\s*:\s*(\d+)\s*->\s*(\d+)$")
_MU = re.compile(r"^mu\s*:\s*(\S+)\s*->\s*(\S+)$")


def parse_maps(text: str) -> MapsDocument:
    doc = MapsDocument()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip(raw).strip()
        if not body:
            continue
        if m := _PHI.match(body):
            b, a = int(m.group(1)), int(m.group(2))
            if b in doc.phi:
                raise ParseError(f"phi({b}) given twice", lineno, 1)
            doc.phi[b] = a
        elif m := _PHIHAT.match(body):
            b, v, w = map(int, m.groups())
            if v in doc.phihat.setdefault(b, {}):
                raise ParseError(f"phihat {b} given twice for {v}", lineno, 1)
            doc.phihat[b][v] = w
        elif m := _MU.match(body):
            if m.group(1) in doc.mu:
                raise ParseError(f"mu({m.group(1)}) given twice", lineno, 1)
            doc.mu[m.group(1)] = m.group(2)
        else:
            raise ParseError(f"unrecognised map line {body!r}", lineno, 1)
    return doc


def emit_maps(doc: MapsDocument) -> str:
    out = [f"phi: {b} -> {a}" for b, a in sorted(doc.phi.items())]
    for b in sorted(doc.phihat):
        out += [f"phihat {b}: {v} -> {w}" for v, w in sorted(doc.phihat[b].items())]
    out += [f"mu: {f} -> {g}" for f, g in sorted(doc.mu.items(), key=lambda kv: natural_key(kv[0]))]
    return "\n".join(out) + "\n"


# --- reverse-engineering inputs ---------------------------------------------

def parse_relations(text: str):
    """Square 0/1 matrix, one row per line, plus optional ``cardinalities = ...``.

    Returns ``(matrix, cardinalities or None)``.
    """
    rows, cards = [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip(raw).strip()
        if not body:
            continue
        if body.startswith("cardinalities"):
            cards = _ints(body.split("=", 1)[1], lineno, 1)
            continue
        row = _ints(body, lineno, 1)
        if any(v not in (0, 1) for v in row):
            raise ParseError("relation entries are 0 or 1", lineno, 1)
        rows.append(row)
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ParseError("the relation matrix must be square", 1, 1)
    return np.array(rows, dtype=np.int64), cards


def parse_series(text: str) -> list[tuple[str, list[tuple]]]:
    """Blocks ``[series NAME]`` followed by one state per line."""
    out: list[tuple[str, list[tuple]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip(raw).strip()
        if not body:
            continue
        m = _SECTION.match(body)
        if m:
            if m.group(1).lower() != "series" or m.group(2) is None:
                raise ParseError("series blocks start with [series <name>]", lineno, 1)
            if any(name == m.group(2) for name, _ in out):
                raise ParseError(f"duplicate series {m.group(2)!r}", lineno, 1)
            out.append((m.group(2), []))
            continue
        if not out:
            raise ParseError("state before the first [series ...] header", lineno, 1)
        out[-1][1].append(_ints(body.replace(",", " "), lineno, 1))
    return out


def parse_probabilities(text: str) -> list[float]:
    """Whitespace-separated decimals or fractions such as ``2/3``."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        for tok in _strip(raw).replace(",", " ").split():
            try:
                out.append(float(Fraction(tok)))
            except (ValueError, ZeroDivisionError):
                raise ParseError(f"bad probability {tok!r}", lineno, 1) from None
    return out


def parse_table(text: str):
    """A full map ``k^n -> k^n``: ``cardinalities = ...`` then ``state : image`` rows."""
    cards, rows = None, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip(raw).strip()
        if not body:
            continue
        if body.startswith("cardinalities"):
            cards = _ints(body.split("=", 1)[1], lineno, 1)
            continue
        rows.append((_row(body, lineno, 1), lineno))
    if cards is None:
        raise ParseError("table files start with 'cardinalities = ...'", 1, 1)
    domain = StateDomain(cards)
    table = np.full(domain.size, -1, dtype=np.int64)
    for (state, image), lineno in rows:
        try:
            table[domain.encode(state)] = domain.encode(image)
        except ValueError as e:
            raise ParseError(str(e), lineno, 1) from None
    if (table < 0).any():
        raise ParseError(f"{int((table < 0).sum())} states have no image", 1, 1)
    return domain, table
