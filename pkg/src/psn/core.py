"""Graphs, state domains, local functions, schedules and PSNs.

States of ``k^n = k_1 x ... x k_n`` are indexed in mixed radix with vertex 1
the most significant digit, so ``(0, 0, 1)`` is index 1 over Z_2^3. Every
map on states is stored as a dense int64 table over these indices.

Composition follows ``f = f_{a_1} o ... o f_{a_n}``: the local function of
the last vertex listed in the schedule is applied first.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import expr as ex
from . import kernels
from .document import RuleDecl, SpecDocument, UpdateDecl

MAX_STATES = 2 ** 20
MAX_COMBINATIONS = 10 ** 6
PROBABILITY_TOL = 1e-9


class ValidationError(ValueError):
    """Raised by :func:`validate_psn`; ``violations`` lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"{len(self.violations)} violation(s):\n{lines}")


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    vertex: int | None = None
    variable: int | None = None
    witness: tuple | None = None
    name: str | None = None
    residual: float | None = None

    def __str__(self):
        return f"[{self.kind}] {self.message}"

    def to_json(self) -> dict:
        out = {"kind": self.kind, "message": self.message}
        for key in ("vertex", "variable", "name", "residual"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.witness is not None:
            out["witness"] = [list(s) for s in self.witness]
        return out


@dataclass(frozen=True)
class GraphSpec:
    vertex_count: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError("a graph needs at least one vertex")
        norm = frozenset((min(a, b), max(a, b)) for a, b in self.edges)
        for a, b in norm:
            if not (1 <= a <= self.vertex_count and 1 <= b <= self.vertex_count):
                raise ValueError(f"edge {a}-{b} has an endpoint outside 1..{self.vertex_count}")
        object.__setattr__(self, "edges", norm)

    @property
    def vertices(self) -> range:
        return range(1, self.vertex_count + 1)

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def neighbors(self, a: int) -> frozenset:
        out = set()
        for u, v in self.edges:
            if u == a and v != a:
                out.add(v)
            elif v == a and u != a:
                out.add(u)
        return frozenset(out)

    def neighborhood(self, a: int) -> tuple:
        """``{a}`` plus its neighbours, ascending. A vertex always reads itself."""
        return tuple(sorted(self.neighbors(a) | {a}))

    def components(self, subset) -> list[list[int]]:
        """Connected components of the subgraph induced on ``subset``."""
        remaining = set(subset)
        out = []
        while remaining:
            seed = min(remaining)
            comp, stack = {seed}, [seed]
            while stack:
                u = stack.pop()
                for v in self.neighbors(u):
                    if v in remaining and v not in comp:
                        comp.add(v)
                        stack.append(v)
            remaining -= comp
            out.append(sorted(comp))
        return out


class StateDomain:
    """The product ``k_1 x ... x k_n`` with ``k_a = {0, ..., |k_a| - 1}``."""

    def __init__(self, cardinalities):
        cards = tuple(int(c) for c in cardinalities)
        if not cards:
            raise ValueError("a state domain needs at least one vertex")
        if any(c < 1 for c in cards):
            raise ValueError(f"cardinalities must be positive, got {cards}")
        self.cardinalities = cards
        self.n = len(cards)
        self.size = math.prod(cards)
        strides = [1] * self.n
        for a in range(self.n - 2, -1, -1):
            strides[a] = strides[a + 1] * cards[a + 1]
        self.strides = tuple(strides)

    def __eq__(self, other):
        return isinstance(other, StateDomain) and other.cardinalities == self.cardinalities

    def __hash__(self):
        return hash(self.cardinalities)

    def __repr__(self):
        return f"StateDomain({self.cardinalities})"

    def card(self, vertex: int) -> int:
        return self.cardinalities[vertex - 1]

    def stride(self, vertex: int) -> int:
        return self.strides[vertex - 1]

    def encode(self, state) -> int:
        state = tuple(state)
        if len(state) != self.n:
            raise ValueError(f"state {state} has length {len(state)}, expected {self.n}")
        idx = 0
        for x, c, s in zip(state, self.cardinalities, self.strides):
            if not 0 <= x < c:
                raise ValueError(f"state {state} is outside {self.cardinalities}")
            idx += x * s
        return idx

    def decode(self, index: int) -> tuple:
        return tuple(int(v) for v in self.coords[int(index)])

    @cached_property
    def coords(self) -> np.ndarray:
        idx = np.arange(self.size, dtype=np.int64)
        cols = [(idx // s) % c for c, s in zip(self.cardinalities, self.strides)]
        return np.stack(cols, axis=1)

    def states(self):
        return [tuple(int(v) for v in row) for row in self.coords]

    def digit(self, vertex: int) -> np.ndarray:
        return self.coords[:, vertex - 1]

    def encode_many(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords, dtype=np.int64) @ np.asarray(self.strides, dtype=np.int64)


class LocalFunction:
    """A map on ``k^n`` that rewrites only the coordinate of ``vertex``.

    ``rule[i]`` is the new value of ``x_vertex`` in state ``i``; ``table`` is
    the induced full map. ``source`` keeps the declaration it came from
    (for re-emission); ``None`` means it will be written as a table.
    """

    def __init__(self, vertex: int, name: str, rule, domain: StateDomain, source: RuleDecl | None = None):
        self.vertex = vertex
        self.name = name
        self.domain = domain
        self.rule = np.asarray(rule, dtype=np.int64)
        self.source = source
        if self.rule.shape != (domain.size,):
            raise ValueError(f"rule for {name} has shape {self.rule.shape}, expected ({domain.size},)")

    def __repr__(self):
        return f"LocalFunction({self.vertex}, {self.name!r})"

    @cached_property
    def table(self) -> np.ndarray:
        idx = np.arange(self.domain.size, dtype=np.int64)
        return idx + (self.rule - self.domain.digit(self.vertex)) * self.domain.stride(self.vertex)

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.rule, self.domain.digit(self.vertex)))

    def __call__(self, state) -> tuple:
        return self.domain.decode(self.table[self.domain.encode(state)])

    @classmethod
    def identity(cls, vertex: int, domain: StateDomain, name: str = "Id") -> "LocalFunction":
        return cls(vertex, name, domain.digit(vertex).copy(), domain)

    @classmethod
    def from_expression(cls, vertex, name, expression, domain, source=None):
        if isinstance(expression, str):
            expression = ex.parse_expression(expression)
        rule = ex.evaluate(expression, domain.coords, domain.card(vertex))
        if source is None:
            source = RuleDecl(name, "expr", (expression,))
        return cls(vertex, name, rule, domain, source)

    @classmethod
    def from_neighborhood_table(cls, vertex, name, inputs, values, domain, source=None):
        """``values`` is indexed by the mixed-radix projection onto ``inputs``."""
        inputs = tuple(inputs)
        cards = [domain.card(b) for b in inputs]
        proj = np.zeros(domain.size, dtype=np.int64)
        for b, c in zip(inputs, cards):
            proj = proj * c + domain.digit(b)
        rule = np.asarray(values, dtype=np.int64)[proj]
        return cls(vertex, name, rule, domain, source)

    def dependency_witness(self, variable: int):
        """Two states differing only in ``x_variable`` that this rule tells apart."""
        i, j = kernels.dependency_witness(
            self.rule, self.domain.card(variable), self.domain.stride(variable)
        )
        if i < 0:
            return None
        return self.domain.decode(i), self.domain.decode(j)


@dataclass(frozen=True, eq=False)
class LocalFamily:
    vertex: int
    functions: tuple

    def __post_init__(self):
        if not self.functions:
            raise ValueError(f"family of vertex {self.vertex} is empty")
        names = [f.name for f in self.functions]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate names in family of vertex {self.vertex}: {names}")
        if any(f.vertex != self.vertex for f in self.functions):
            raise ValueError(f"family of vertex {self.vertex} holds a function of another vertex")

    def __len__(self):
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def get(self, name: str) -> LocalFunction:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(f"vertex {self.vertex} has no local function {name!r}")

    @property
    def names(self) -> tuple:
        return tuple(f.name for f in self.functions)


@dataclass(frozen=True)
class Schedule:
    name: str
    order: tuple

    def __post_init__(self):
        order = tuple(int(v) for v in self.order)
        if sorted(order) != list(range(1, len(order) + 1)):
            raise ValueError(f"schedule {self.name!r} is not a permutation of 1..{len(order)}: {order}")
        object.__setattr__(self, "order", order)

    def position(self, vertex: int) -> int:
        return self.order.index(vertex)


class UpdateFunction:
    """A global update ``f = f_{a_1} o ... o f_{a_n}`` with its probability.

    ``locals`` holds the selected local function of each vertex (index
    ``vertex - 1``) and ``schedule`` the order; both are ``None`` for an
    update loaded as a raw table.
    """

    def __init__(self, name, table, probability, schedule=None, locals=None):
        self.name = name
        self.table = np.asarray(table, dtype=np.int64)
        self.probability = float(probability)
        self.schedule = schedule
        self.locals = tuple(locals) if locals is not None else None

    def __repr__(self):
        return f"UpdateFunction({self.name!r}, p={self.probability})"

    @property
    def has_provenance(self) -> bool:
        return self.locals is not None and self.schedule is not None

    @property
    def selection(self) -> tuple | None:
        return None if self.locals is None else tuple(f.name for f in self.locals)

    def local(self, vertex: int) -> LocalFunction:
        if self.locals is None:
            raise ValueError(f"update {self.name!r} has no selection provenance")
        return self.locals[vertex - 1]

    def with_probability(self, p: float, name: str | None = None) -> "UpdateFunction":
        return UpdateFunction(name or self.name, self.table, p, self.schedule, self.locals)


class PSN:
    """A validated probabilistic sequential network (immutable by convention)."""

    def __init__(self, graph, domain, families, schedules, updates, document=None):
        self.graph = graph
        self.domain = domain
        self.families = tuple(families)
        self.schedules = tuple(schedules)
        self.updates = tuple(updates)
        self.document = document

    def __repr__(self):
        return f"PSN(n={self.graph.vertex_count}, states={self.domain.size}, updates={len(self.updates)})"

    @property
    def n(self) -> int:
        return self.graph.vertex_count

    def family(self, vertex: int) -> LocalFamily:
        return self.families[vertex - 1]

    def schedule(self, name: str) -> Schedule:
        for s in self.schedules:
            if s.name == name:
                return s
        raise KeyError(f"no schedule {name!r}")

    def update(self, name: str) -> UpdateFunction:
        for u in self.updates:
            if u.name == name:
                return u
        raise KeyError(f"no update function {name!r}")

    @property
    def update_names(self) -> tuple:
        return tuple(u.name for u in self.updates)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([u.probability for u in self.updates])

    def with_updates(self, updates) -> "PSN":
        return PSN(self.graph, self.domain, self.families, self.schedules, updates)


def compose_update(families, schedule: Schedule, selection, domain: StateDomain) -> np.ndarray:
    """Table of ``f_{a_1} o ... o f_{a_n}`` for one choice per vertex.

    ``selection`` maps vertex -> local function name (a dict) or lists the
    names in vertex order. ``families`` is indexed by vertex - 1.
    """
    n = len(families)
    if not isinstance(selection, dict):
        selection = dict(zip(range(1, n + 1), selection))
    missing = [a for a in range(1, n + 1) if a not in selection]
    if missing:
        raise ValueError(f"no local function selected for vertices {missing}")
    chosen = {a: families[a - 1].get(selection[a]) for a in range(1, n + 1)}
    return compose_locals([chosen[a] for a in schedule.order], domain)


def compose_locals(listed, domain: StateDomain) -> np.ndarray:
    """Compose local functions given in schedule listing order (last applied first)."""
    if not listed:
        return np.arange(domain.size, dtype=np.int64)
    tables = np.stack([f.table for f in reversed(listed)])
    return kernels.apply_chain(np.ascontiguousarray(tables))


def enumerate_updates(psn: PSN, probabilities=None, dedupe: bool = False,
                      prefix: str = "f", cap: int = MAX_COMBINATIONS) -> list[UpdateFunction]:
    """Every (selection, schedule) combination, vertex 1 varying slowest and
    the schedule fastest.

    Over the declared schedules only; the count before de-duplication is
    ``m * l(1) * ... * l(n)``. ``probabilities`` defaults to uniform. With
    ``dedupe`` identical tables merge into one entry named ``"a|b"`` whose
    probability is the sum.
    """
    count = len(psn.schedules) * math.prod(len(f) for f in psn.families)
    if count > cap:
        raise ValueError(f"{count} combinations exceed the cap of {cap}")
    if probabilities is None:
        probabilities = [1.0 / count] * count
    probabilities = list(probabilities)
    if len(probabilities) != count:
        raise ValueError(f"expected {count} probabilities, got {len(probabilities)}")
    out = []
    combos = itertools.product(*[fam.functions for fam in psn.families], psn.schedules)
    for k, combo in enumerate(combos):
        *chosen, sched = combo
        listed = [chosen[a - 1] for a in sched.order]
        table = compose_locals(listed, psn.domain)
        out.append(UpdateFunction(f"{prefix}{k + 1}", table, probabilities[k], sched, chosen))
    if not dedupe:
        return out
    merged: dict[bytes, UpdateFunction] = {}
    for u in out:
        key = u.table.tobytes()
        if key in merged:
            m = merged[key]
            merged[key] = UpdateFunction(f"{m.name}|{u.name}", m.table,
                                         m.probability + u.probability, m.schedule, m.locals)
        else:
            merged[key] = u
    return list(merged.values())


def full_psn(psn: PSN, probabilities=None, dedupe: bool = False) -> PSN:
    return psn.with_updates(enumerate_updates(psn, probabilities, dedupe=dedupe))


# --- validation -------------------------------------------------------------

def _rule_from_decl(decl: RuleDecl, vertex: int, graph: GraphSpec, domain: StateDomain, violations):
    n = domain.n
    if decl.kind in ("expr", "tuple"):
        bad = sorted(i for e in decl.exprs for i in ex.variables(e) if i > n)
        if bad:
            violations.append(Violation("variable-range", f"{decl.name} at vertex {vertex} reads x{bad[0]} but there are {n} vertices",
                                        vertex=vertex, variable=bad[0], name=decl.name))
            return None
    if decl.kind == "expr":
        return ex.evaluate(decl.exprs[0], domain.coords, domain.card(vertex))
    if decl.kind == "tuple":
        if len(decl.exprs) != n:
            violations.append(Violation("tuple-length", f"{decl.name} has {len(decl.exprs)} components, expected {n}",
                                        vertex=vertex, name=decl.name))
            return None
        for b, e in enumerate(decl.exprs, start=1):
            if b == vertex:
                continue
            values = ex.evaluate(e, domain.coords, domain.card(b))
            diff = np.flatnonzero(values != domain.digit(b))
            if diff.size:
                s = domain.decode(diff[0])
                violations.append(Violation(
                    "locality", f"{decl.name} at vertex {vertex} changes coordinate {b} (state {s})",
                    vertex=vertex, variable=b, witness=(s,), name=decl.name))
        return ex.evaluate(decl.exprs[vertex - 1], domain.coords, domain.card(vertex))
    # truth table over the neighbourhood
    inputs = graph.neighborhood(vertex)
    cards = [domain.card(b) for b in inputs]
    size = math.prod(cards)
    values = np.full(size, -1, dtype=np.int64)
    ok = True
    for row_in, row_out in decl.rows:
        if len(row_in) != len(inputs) or any(not 0 <= v < c for v, c in zip(row_in, cards)) \
                or not 0 <= row_out < domain.card(vertex):
            violations.append(Violation("table-row", f"{decl.name}: row {row_in} : {row_out} does not fit neighbourhood {inputs}",
                                        vertex=vertex, name=decl.name))
            ok = False
            continue
        k = 0
        for v, c in zip(row_in, cards):
            k = k * c + v
        if values[k] not in (-1, row_out):
            violations.append(Violation("table-row", f"{decl.name}: conflicting rows for {row_in}",
                                        vertex=vertex, name=decl.name))
            ok = False
        values[k] = row_out
    if ok and (values < 0).any():
        violations.append(Violation("table-incomplete", f"{decl.name}: {int((values < 0).sum())} neighbourhood rows missing",
                                    vertex=vertex, name=decl.name))
        ok = False
    if not ok:
        return None
    lf = LocalFunction.from_neighborhood_table(vertex, decl.name, inputs, values, domain)
    return lf.rule


def validate_psn(doc: SpecDocument, max_states: int = MAX_STATES, tol: float = PROBABILITY_TOL) -> PSN:
    """Check every invariant of a PSN declaration and build it.

    Raises :class:`ValidationError` listing all violations found (locality,
    probability sum, schedules, dangling references, ...).
    """
    violations: list[Violation] = []
    n = doc.vertices
    if n < 1:
        raise ValidationError([Violation("graph", "at least one vertex is required")])
    if len(doc.cardinalities) != n:
        raise ValidationError([Violation("graph", f"{len(doc.cardinalities)} cardinalities for {n} vertices")])
    if any(c < 1 for c in doc.cardinalities):
        raise ValidationError([Violation("graph", f"cardinalities must be positive: {doc.cardinalities}")])
    size = math.prod(doc.cardinalities)
    if size > max_states:
        raise ValidationError([Violation("size", f"{size} states exceed the cap of {max_states}")])

    edges = []
    for a, b in doc.edges:
        if 1 <= a <= n and 1 <= b <= n:
            edges.append((a, b))
        else:
            violations.append(Violation("edge", f"edge {a}-{b} has an endpoint outside 1..{n}"))
    graph = GraphSpec(n, frozenset(edges))
    domain = StateDomain(doc.cardinalities)

    families: list[list[LocalFunction]] = [[] for _ in range(n)]
    for vertex, rules in doc.families:
        if not 1 <= vertex <= n:
            violations.append(Violation("family", f"family declared for vertex {vertex} outside 1..{n}", vertex=vertex))
            continue
        for decl in rules:
            rule = _rule_from_decl(decl, vertex, graph, domain, violations)
            if rule is None:
                continue
            lf = LocalFunction(vertex, decl.name, rule, domain, source=decl)
            nbhd = set(graph.neighborhood(vertex))
            for b in range(1, n + 1):
                if b in nbhd:
                    continue
                w = lf.dependency_witness(b)
                if w is not None:
                    violations.append(Violation(
                        "locality",
                        f"{decl.name} at vertex {vertex} reads x{b} but {vertex}-{b} is not an edge "
                        f"(outputs differ on {w[0]} and {w[1]})",
                        vertex=vertex, variable=b, witness=w, name=decl.name))
            families[vertex - 1].append(lf)
    for a in range(1, n + 1):
        if not doc.family(a):
            violations.append(Violation("family", f"vertex {a} has no local functions", vertex=a))

    schedules = []
    for name, order in doc.schedules:
        try:
            sched = Schedule(name, tuple(order))
        except ValueError as e:
            violations.append(Violation("schedule", str(e), name=name))
            continue
        if len(sched.order) != n:
            violations.append(Violation("schedule", f"schedule {name!r} has length {len(order)}, expected {n}", name=name))
            continue
        schedules.append(sched)
    sched_by_name = {s.name: s for s in schedules}
    declared_schedules = {name for name, _ in doc.schedules}

    updates = []
    probs = []
    for u in doc.updates:
        probs.append(u.probability)
        if not 0.0 <= u.probability <= 1.0:
            violations.append(Violation("probability", f"{u.name}: probability {u.probability} outside [0, 1]", name=u.name))
        if u.is_raw:
            table = _raw_table(u, domain, violations)
            if table is not None:
                updates.append(UpdateFunction(u.name, table, u.probability))
            continue
        if u.schedule not in declared_schedules:
            violations.append(Violation("reference", f"{u.name}: unknown schedule {u.schedule!r}", name=u.name))
        if len(u.selection) != n:
            violations.append(Violation("reference", f"{u.name}: selects {len(u.selection)} local functions for {n} vertices",
                                        name=u.name))
            continue
        chosen = []
        for a, fname in enumerate(u.selection, start=1):
            match = [f for f in families[a - 1] if f.name == fname]
            if match:
                chosen.append(match[0])
            elif fname not in {d.name for d in doc.family(a)}:
                violations.append(Violation("reference", f"{u.name}: vertex {a} has no local function {fname!r}",
                                            vertex=a, name=u.name))
        if len(chosen) == n and u.schedule in sched_by_name:
            sched = sched_by_name[u.schedule]
            table = compose_locals([chosen[a - 1] for a in sched.order], domain)
            updates.append(UpdateFunction(u.name, table, u.probability, sched, chosen))

    total = math.fsum(probs)
    if abs(total - 1.0) > tol:
        violations.append(Violation("probability-sum", f"probabilities sum to {total!r} (residual {total - 1.0:+.3e})",
                                    residual=total - 1.0))
    if violations:
        raise ValidationError(violations)
    fams = [LocalFamily(a, tuple(families[a - 1])) for a in range(1, n + 1)]
    return PSN(graph, domain, fams, schedules, updates, document=doc)


def _raw_table(u: UpdateDecl, domain: StateDomain, violations):
    table = np.full(domain.size, -1, dtype=np.int64)
    for state, image in u.rows:
        try:
            i, j = domain.encode(state), domain.encode(image)
        except ValueError as e:
            violations.append(Violation("table-row", f"{u.name}: {e}", name=u.name))
            return None
        if table[i] not in (-1, j):
            violations.append(Violation("table-row", f"{u.name}: conflicting rows for {tuple(state)}", name=u.name))
            return None
        table[i] = j
    if (table < 0).any():
        violations.append(Violation("table-incomplete", f"{u.name}: {int((table < 0).sum())} states have no image", name=u.name))
        return None
    return table


def identity_psn(cardinalities, edges=()) -> PSN:
    """The network whose single update is the identity, with probability 1."""
    domain = StateDomain(cardinalities)
    graph = GraphSpec(domain.n, frozenset(edges))
    fams = [LocalFamily(a, (LocalFunction.identity(a, domain),)) for a in graph.vertices]
    sched = Schedule("id", tuple(graph.vertices))
    update = UpdateFunction("Id", np.arange(domain.size, dtype=np.int64), 1.0, sched,
                            [fam.functions[0] for fam in fams])
    return PSN(graph, domain, fams, [sched], [update])
