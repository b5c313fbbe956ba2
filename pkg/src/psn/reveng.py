"""Reverse engineering a PSN from relation data and time series.

Steps: build the low-level graph from the relation matrix, fit one local
rule per vertex and time-series family, test which schedules decompose each
family's simultaneous map, attach the supplied probabilities, select, and
build the resulting network with its state space.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (PSN, GraphSpec, LocalFamily, LocalFunction, Schedule, StateDomain,
                   UpdateFunction, compose_locals, enumerate_updates)
from .statespace import build_state_space

FILLS = ("auto", "identity", "zero", "enumerate")
ENUMERATE_CAP = 64


class PipelineError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RelationMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.int64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"relation matrix must be square, got shape {m.shape}")
        if not np.isin(m, (0, 1)).all():
            raise ValueError("relation entries must be 0 or 1")
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def build_low_level_graph(rel: RelationMatrix, cardinalities=None) -> tuple[GraphSpec, StateDomain]:
    """Undirected edge ``a-b`` whenever ``m[a,b]`` or ``m[b,a]`` is 1; the diagonal is ignored."""
    if not isinstance(rel, RelationMatrix):
        rel = RelationMatrix(rel)
    n = rel.n
    cards = tuple(cardinalities) if cardinalities is not None else (2,) * n
    if len(cards) != n:
        raise ValueError(f"{len(cards)} cardinalities for {n} entities")
    m = rel.matrix
    edges = {(a + 1, b + 1) for a in range(n) for b in range(a + 1, n) if m[a, b] or m[b, a]}
    return GraphSpec(n, frozenset(edges)), StateDomain(cards)


@dataclass
class TimeSeriesFamily:
    """One trajectory; consecutive states are one-step transitions.

    ``explicit_pairs`` replaces the derived pairs when given.
    """

    name: str
    states: list
    explicit_pairs: list | None = None

    @classmethod
    def from_pairs(cls, name, pairs):
        pairs = [(tuple(a), tuple(b)) for a, b in pairs]
        return cls(name, [s for p in pairs for s in p], pairs)

    @property
    def pairs(self) -> list:
        if self.explicit_pairs is not None:
            return self.explicit_pairs
        st = [tuple(s) for s in self.states]
        return list(zip(st, st[1:]))

    def check(self, domain: StateDomain) -> None:
        if not self.pairs:
            raise PipelineError(f"series {self.name!r} has no transition pair (needs at least two states)")
        for s in self.states:
            domain.encode(s)


@dataclass
class Contradiction:
    family: str
    vertex: int
    projection: tuple  # values on the neighbourhood of the vertex
    pairs: tuple  # the two conflicting (x_t, x_t+1) pairs

    def to_json(self) -> dict:
        return {"family": self.family, "vertex": self.vertex, "projection": list(self.projection),
                "pairs": [[list(a), list(b)] for a, b in self.pairs]}


@dataclass
class VertexFit:
    vertex: int
    inputs: tuple  # neighbourhood, ascending
    witnessed: dict  # projection -> (output, pair index)
    dont_care: list  # projections never witnessed
    fill: str  # strategy actually used
    candidates: list  # rule vectors over k^n, one unless fill == "enumerate"


@dataclass
class FamilyFit:
    name: str
    vertices: list  # VertexFit per vertex
    contradictions: list = field(default_factory=list)

    def rules(self) -> list:
        """First candidate rule of every vertex."""
        return [v.candidates[0] for v in self.vertices]


def _projection(domain, inputs):
    proj = np.zeros(domain.size, dtype=np.int64)
    for b in inputs:
        proj = proj * domain.card(b) + domain.digit(b)
    return proj


def _fit_vertex(graph, domain, fam: TimeSeriesFamily, a: int, fill: str, contradictions):
    inputs = graph.neighborhood(a)
    cards = [domain.card(b) for b in inputs]
    witnessed: dict[tuple, tuple] = {}
    for k, (x, y) in enumerate(fam.pairs):
        key = tuple(x[b - 1] for b in inputs)
        out = y[a - 1]
        if key in witnessed:
            prev, j = witnessed[key]
            if prev != out:
                contradictions.append(Contradiction(fam.name, a, key, (fam.pairs[j], (x, y))))
            continue
        witnessed[key] = (out, k)
    all_keys = list(itertools.product(*(range(c) for c in cards)))
    dont_care = [key for key in all_keys if key not in witnessed]
    own = inputs.index(a)
    if fill == "auto":
        fill = "identity" if all(v == key[own] for key, (v, _) in witnessed.items()) else "zero"
    base = np.array([witnessed[key][0] if key in witnessed else
                     (key[own] if fill == "identity" else 0) for key in all_keys], dtype=np.int64)
    proj = _projection(domain, inputs)
    if fill != "enumerate" or not dont_care:
        tables = [base]
    else:
        combos = math.prod([domain.card(a)] * len(dont_care))
        if combos > ENUMERATE_CAP:
            raise PipelineError(f"vertex {a} of {fam.name!r} has {combos} completions (cap {ENUMERATE_CAP})")
        slots = [all_keys.index(key) for key in dont_care]
        tables = []
        for values in itertools.product(range(domain.card(a)), repeat=len(dont_care)):
            t = base.copy()
            t[slots] = values
            tables.append(t)
    return VertexFit(a, inputs, witnessed, dont_care, fill, [t[proj] for t in tables])


def infer_local_functions(graph: GraphSpec, domain: StateDomain, families, fill: str = "auto") -> list[FamilyFit]:
    """Fit ``k_{N(a)} -> k_a`` per family and vertex from the transition pairs.

    Unwitnessed neighbourhood values are filled by ``fill``: ``"identity"``
    keeps the vertex value, ``"zero"`` writes 0, ``"enumerate"`` yields every
    completion (at most 64), and ``"auto"`` uses identity when the witnessed
    data are themselves identity, zero otherwise.
    """
    if fill not in FILLS:
        raise ValueError(f"unknown fill {fill!r}; choose from {FILLS}")
    fits = []
    for fam in families:
        fam.check(domain)
        contradictions: list[Contradiction] = []
        verts = [_fit_vertex(graph, domain, fam, a, fill, contradictions) for a in graph.vertices]
        fits.append(FamilyFit(fam.name, verts, contradictions))
    return fits


def merge_families(domain: StateDomain, fits) -> tuple[list[LocalFamily], list[list[tuple]]]:
    """Unique rules per vertex across families: ``Id`` first, then the others
    as ``f{a}{k}`` in order of first appearance. Also returns, per family,
    the chosen name of every candidate at every vertex."""
    n = domain.n
    families, chosen = [], [[() for _ in range(n)] for _ in fits]
    for a in range(1, n + 1):
        ident = domain.digit(a)
        uniq: list[np.ndarray] = []
        for fit in fits:
            for r in fit.vertices[a - 1].candidates:
                if not any(np.array_equal(r, u) for u in uniq):
                    uniq.append(r)
        has_id = any(np.array_equal(u, ident) for u in uniq)
        others = [u for u in uniq if not np.array_equal(u, ident)]
        funcs = [LocalFunction(a, "Id", ident.copy(), domain)] if has_id else []
        funcs += [LocalFunction(a, f"f{a}{k}", r, domain) for k, r in enumerate(others, start=1)]
        families.append(LocalFamily(a, tuple(funcs)))
        for j, fit in enumerate(fits):
            chosen[j][a - 1] = tuple(
                next(f.name for f in funcs if np.array_equal(f.rule, r))
                for r in fit.vertices[a - 1].candidates)
    return families, chosen


@dataclass
class Decomposition:
    accepted: bool
    schedule: Schedule
    locals: list | None = None  # LocalFunction per vertex (index vertex - 1)
    violation: tuple | None = None  # (i, j, (state, state)) with 1-based positions in the schedule
    verified: bool = False  # composition equals f pointwise

    def to_json(self, domain: StateDomain | None = None) -> dict:
        out = {"accepted": self.accepted, "schedule": list(self.schedule.order), "verified": self.verified}
        if self.violation is not None:
            i, j, (s, t) = self.violation
            out["violation"] = {"i": i, "j": j, "vertex": self.schedule.order[i - 1],
                                "variable": self.schedule.order[j - 1], "witness": [list(s), list(t)]}
        if self.locals is not None and domain is not None:
            out["locals"] = {str(f.vertex): [int(v) for v in f.rule] for f in self.locals}
        return out


def coordinate_rules(table, domain: StateDomain) -> list[np.ndarray]:
    coords = domain.coords[np.asarray(table, dtype=np.int64)]
    return [np.ascontiguousarray(coords[:, a]) for a in range(domain.n)]


def decompose_sequential(table, domain: StateDomain, schedule) -> Decomposition:
    """Factor a simultaneous map ``f`` as ``fbar_{a(1)} o ... o fbar_{a(n)}``.

    Accepted iff every coordinate ``f_{a(i)}`` ignores each ``x_{a(j)}`` with
    ``j > i``; ``fbar_{a(i)}`` then rewrites ``x_{a(i)}`` to ``f_{a(i)}(x)``.
    The criterion is sufficient, not necessary: a refusal only means this
    construction does not apply.
    """
    if not isinstance(schedule, Schedule):
        schedule = Schedule("alpha", tuple(schedule))
    if len(schedule.order) != domain.n:
        raise ValueError(f"schedule {schedule.order} does not cover {domain.n} vertices")
    table = np.asarray(table, dtype=np.int64)
    rules = coordinate_rules(table, domain)
    order = schedule.order
    for i, a in enumerate(order, start=1):
        probe = LocalFunction(a, f"f{a}", rules[a - 1], domain)
        for j in range(i + 1, domain.n + 1):
            w = probe.dependency_witness(order[j - 1])
            if w is not None:
                return Decomposition(False, schedule, violation=(i, j, w))
    locs = [LocalFunction(a, f"fbar{a}", rules[a - 1], domain) for a in range(1, domain.n + 1)]
    composed = compose_locals([locs[a - 1] for a in order], domain)
    return Decomposition(True, schedule, locs, verified=bool(np.array_equal(composed, table)))


def composition_matches(table, domain: StateDomain, schedule) -> bool:
    """Brute force: compose the coordinate rules of ``f`` as local functions
    in schedule order and compare with ``f`` on every state."""
    if not isinstance(schedule, Schedule):
        schedule = Schedule("alpha", tuple(schedule))
    rules = coordinate_rules(table, domain)
    locs = [LocalFunction(a, f"f{a}", rules[a - 1], domain) for a in schedule.order]
    return bool(np.array_equal(compose_locals(locs, domain), np.asarray(table)))


@dataclass
class InferenceResult:
    graph: GraphSpec
    domain: StateDomain
    fits: list
    families: list
    schedules: list  # candidates tested
    schedule_tests: dict  # schedule name -> [Decomposition per family]
    admitted: list  # schedules admitted by every family
    candidates: list  # UpdateFunction with the supplied probabilities, before selection
    psn: PSN
    state_space: object
    replay: dict  # family name -> {"update", "ok", "failures", "selected"}
    mode: str

    @property
    def contradictions(self) -> list:
        return [c for fit in self.fits for c in fit.contradictions]

    def to_json(self) -> dict:
        dom = self.domain
        fits = []
        for fit in self.fits:
            fits.append({
                "family": fit.name,
                "vertices": [{
                    "vertex": v.vertex,
                    "inputs": list(v.inputs),
                    "witnessed": len(v.witnessed),
                    "dont_care": [list(k) for k in v.dont_care],
                    "fill": v.fill,
                    "candidates": len(v.candidates),
                } for v in fit.vertices],
                "contradictions": [c.to_json() for c in fit.contradictions],
            })
        return {
            "graph": {"vertices": self.graph.vertex_count, "edges": [list(e) for e in sorted(self.graph.edges)]},
            "families": {str(f.vertex): list(f.names) for f in self.families},
            "fits": fits,
            "schedules": {name: [d.to_json() for d in ds] for name, ds in self.schedule_tests.items()},
            "admitted": [s.name for s in self.admitted],
            "mode": self.mode,
            "candidates": [{"name": u.name, "selection": list(u.selection), "schedule": u.schedule.name,
                            "probability": u.probability} for u in self.candidates],
            "selected": [{"name": u.name, "selection": list(u.selection), "schedule": u.schedule.name,
                          "probability": u.probability} for u in self.psn.updates],
            "replay": self.replay,
            "states": dom.size,
        }


def run_pipeline(rel, cardinalities, families, C, schedules=None, mode: str = "updates",
                 fill: str = "auto", threshold: float = 0.0, top: int | None = None,
                 tol: float = 1e-9) -> InferenceResult:
    """Relation matrix + trajectories + probabilities -> PSN.

    ``mode="updates"`` pairs ``C`` with the enumerated update functions
    (families x admitted schedules, vertex 1 slowest); ``mode="families"``
    gives ``c_j`` to the update fitted from family ``j``. Selection keeps
    ``c > threshold`` (or the ``top`` largest) and renormalises.
    """
    graph, domain = build_low_level_graph(rel, cardinalities)
    C = [float(c) for c in C]
    if any(not 0.0 <= c <= 1.0 for c in C) or abs(math.fsum(C) - 1.0) > tol:
        raise PipelineError(f"probabilities must lie in [0, 1] and sum to 1, got {C}")
    if schedules is None:
        schedules = [Schedule("alpha", tuple(graph.vertices))]
    schedules = [s if isinstance(s, Schedule) else Schedule(f"s{k}", tuple(s))
                 for k, s in enumerate(schedules, start=1)]
    fits = infer_local_functions(graph, domain, families, fill)
    fams, chosen = merge_families(domain, fits)

    tests = {}
    for s in schedules:
        tests[s.name] = [decompose_sequential(_simultaneous(fit, domain), domain, s) for fit in fits]
    admitted = [s for s in schedules if all(d.accepted for d in tests[s.name])]
    if not admitted:
        raise PipelineError("no candidate schedule decomposes every family's fitted map")

    skeleton = PSN(graph, domain, fams, admitted, [])
    if mode == "updates":
        candidates = enumerate_updates(skeleton, [0.0] * _count(skeleton))
        if len(C) != len(candidates):
            raise PipelineError(f"{len(C)} probabilities for {len(candidates)} enumerated update functions")
        candidates = [u.with_probability(c) for u, c in zip(candidates, C)]
    elif mode == "families":
        if len(C) != len(fits):
            raise PipelineError(f"{len(C)} probabilities for {len(fits)} families")
        candidates = []
        sched = admitted[0]
        for j, (fit, c) in enumerate(zip(fits, C), start=1):
            locs = [fams[a].get(chosen[j - 1][a][0]) for a in range(domain.n)]
            table = compose_locals([locs[a - 1] for a in sched.order], domain)
            candidates.append(UpdateFunction(f"f{j}", table, c, sched, locs))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    selected = select(candidates, threshold, top)
    psn = PSN(graph, domain, fams, admitted, selected)
    replay = _replay(fits, families, chosen, candidates, selected, domain)
    return InferenceResult(graph, domain, fits, fams, schedules, tests, admitted, candidates,
                           psn, build_state_space(psn), replay, mode)


def _count(psn: PSN) -> int:
    return len(psn.schedules) * math.prod(len(f) for f in psn.families)


def _simultaneous(fit: FamilyFit, domain: StateDomain) -> np.ndarray:
    coords = np.stack(fit.rules(), axis=1)
    return domain.encode_many(coords)


def select(candidates, threshold: float = 0.0, top: int | None = None) -> list[UpdateFunction]:
    """Keep ``c > threshold`` (or the ``top`` largest, ties by order) and renormalise."""
    if top is not None:
        ranked = sorted(range(len(candidates)), key=lambda k: -candidates[k].probability)
        keep = sorted(k for k in ranked[:top] if candidates[k].probability > 0)
    else:
        keep = [k for k, u in enumerate(candidates) if u.probability > threshold]
    if not keep:
        raise PipelineError("the selection is empty")
    total = math.fsum(candidates[k].probability for k in keep)
    return [candidates[k].with_probability(candidates[k].probability / total) for k in keep]


def _replay(fits, families, chosen, candidates, selected, domain) -> dict:
    kept = {u.name for u in selected}
    out = {}
    for j, (fit, fam) in enumerate(zip(fits, families)):
        names = tuple(chosen[j][a][0] for a in range(domain.n))
        match = [u for u in candidates if u.selection == names]
        if not match:
            out[fit.name] = {"update": None, "ok": False, "failures": [], "selected": False}
            continue
        u = match[0]
        failures = [k for k, (x, y) in enumerate(fam.pairs)
                    if u.table[domain.encode(x)] != domain.encode(y)]
        out[fit.name] = {"update": u.name, "ok": not failures, "failures": failures,
                         "selected": u.name in kept}
    return out
