"""Morphisms of SDS and PSN.

Direction conventions. A morphism ``D1 -> D2`` carries a graph morphism
``phi`` from the graph of ``D2`` (``Delta``, m vertices) to the graph of
``D1`` (``Gamma``, n vertices), value maps ``phihat_b : k_{phi(b)} -> k_b``
and the induced adjoint map ``h : k^n -> k^m`` with
``h(x)_b = phihat_b(x_{phi(b)})``. States flow from ``D1`` to ``D2``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import PSN, GraphSpec, StateDomain, UpdateFunction, compose_locals
from .statespace import TransitionMatrix, build_state_space, matrix_power, transition_matrix

NONZERO_TOL = 1e-12
ISO_TOL = 1e-12
EQUILIBRIUM_CHECKPOINTS = (1, 2, 5, 10, 50, 100, 200)
MAX_DENSE_STATES = 4096
MAX_STRICT_ORDERS = 40320


class MorphismError(ValueError):
    """Malformed maps or a certificate that cannot support the request."""


@dataclass(frozen=True)
class GraphMorphism:
    source: GraphSpec  # Delta, graph of the target network
    target: GraphSpec  # Gamma, graph of the source network
    phi: tuple  # phi[b - 1] is the image of vertex b of Delta

    def __post_init__(self):
        phi = tuple(int(a) for a in self.phi)
        object.__setattr__(self, "phi", phi)
        if len(phi) != self.source.vertex_count:
            raise MorphismError(f"phi is given on {len(phi)} vertices, the graph has {self.source.vertex_count}")
        for b, a in enumerate(phi, start=1):
            if not 1 <= a <= self.target.vertex_count:
                raise MorphismError(f"phi({b}) = {a} is outside 1..{self.target.vertex_count}")
        for b, c in sorted(self.source.edges):
            if phi[b - 1] != phi[c - 1] and not self.target.has_edge(phi[b - 1], phi[c - 1]):
                raise MorphismError(
                    f"edge {b}-{c} maps to {phi[b - 1]}-{phi[c - 1]}, which is not an edge")

    def __call__(self, b: int) -> int:
        return self.phi[b - 1]

    def preimage(self, a: int) -> tuple:
        return tuple(b for b, x in enumerate(self.phi, start=1) if x == a)

    @property
    def is_injective(self) -> bool:
        return len(set(self.phi)) == len(self.phi)

    @property
    def is_surjective(self) -> bool:
        return set(self.phi) == set(self.target.vertices)

    @property
    def is_identity(self) -> bool:
        return self.source.vertex_count == self.target.vertex_count and self.phi == tuple(self.target.vertices)


@dataclass(frozen=True, eq=False)
class VertexMaps:
    """``maps[b - 1][v] = phihat_b(v)`` for ``v`` in ``k_{phi(b)}``."""

    maps: tuple

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(np.asarray(m, dtype=np.int64) for m in self.maps))

    def __eq__(self, other):
        return isinstance(other, VertexMaps) and len(self.maps) == len(other.maps) and all(
            np.array_equal(a, b) for a, b in zip(self.maps, other.maps))

    def __getitem__(self, b: int) -> np.ndarray:
        return self.maps[b - 1]

    @property
    def is_identity(self) -> bool:
        return all(np.array_equal(m, np.arange(len(m))) for m in self.maps)

    @classmethod
    def identities(cls, gm: GraphMorphism, source_domain: StateDomain, target_domain: StateDomain):
        maps = []
        for b in gm.source.vertices:
            ka, kb = source_domain.card(gm(b)), target_domain.card(b)
            if ka != kb:
                raise MorphismError(f"no default value map for vertex {b}: |k_{gm(b)}| = {ka} but |k_{b}| = {kb}")
            maps.append(np.arange(ka))
        return cls(tuple(maps))


class AdjointMap:
    """``h : k^n -> k^m`` as an index table, with cached (in|sur)jectivity."""

    def __init__(self, table, source_domain: StateDomain, target_domain: StateDomain):
        self.table = np.asarray(table, dtype=np.int64)
        self.source_domain = source_domain
        self.target_domain = target_domain
        counts = np.bincount(self.table, minlength=target_domain.size)
        self.preimage_counts = counts
        self.is_injective = bool(counts.max(initial=0) <= 1)
        self.is_surjective = bool((counts > 0).all())

    @property
    def is_bijective(self) -> bool:
        return self.is_injective and self.is_surjective

    def __call__(self, state) -> tuple:
        return self.target_domain.decode(self.table[self.source_domain.encode(state)])

    def collision(self):
        """Two source states with the same image, or ``None``."""
        seen: dict[int, int] = {}
        for u, y in enumerate(self.table.tolist()):
            if y in seen:
                return self.source_domain.decode(seen[y]), self.source_domain.decode(u)
            seen[y] = u
        return None


def adjoint_map(gm: GraphMorphism, vm: VertexMaps, source_domain: StateDomain,
                target_domain: StateDomain) -> AdjointMap:
    if len(vm.maps) != gm.source.vertex_count:
        raise MorphismError(f"{len(vm.maps)} value maps for {gm.source.vertex_count} vertices")
    cols = []
    for b in gm.source.vertices:
        a, m = gm(b), vm[b]
        if len(m) != source_domain.card(a):
            raise MorphismError(f"phihat_{b} is defined on {len(m)} values, but |k_{a}| = {source_domain.card(a)}")
        if m.size and (m.min() < 0 or m.max() >= target_domain.card(b)):
            raise MorphismError(f"phihat_{b} takes values outside k_{b}")
        cols.append(m[source_domain.digit(a)])
    coords = np.stack(cols, axis=1)
    return AdjointMap(target_domain.encode_many(coords), source_domain, target_domain)


def maps_from_document(doc, D1: PSN, D2: PSN):
    """``(GraphMorphism, VertexMaps, mu or None)`` from a parsed map file."""
    m = D2.n
    missing = [b for b in range(1, m + 1) if b not in doc.phi]
    extra = [b for b in doc.phi if not 1 <= b <= m]
    if missing or extra:
        raise MorphismError(f"phi must be given exactly on 1..{m} (missing {missing}, unexpected {extra})")
    gm = GraphMorphism(D2.graph, D1.graph, tuple(doc.phi[b] for b in range(1, m + 1)))
    maps = []
    for b in range(1, m + 1):
        ka, kb = D1.domain.card(gm(b)), D2.domain.card(b)
        given = doc.phihat.get(b)
        if given is None:
            if ka != kb:
                raise MorphismError(f"phihat {b} is required: |k_{gm(b)}| = {ka} but |k_{b}| = {kb}")
            maps.append(np.arange(ka))
            continue
        if sorted(given) != list(range(ka)):
            raise MorphismError(f"phihat {b} must be defined on 0..{ka - 1}")
        maps.append(np.array([given[v] for v in range(ka)]))
    return gm, VertexMaps(tuple(maps)), (dict(doc.mu) if doc.mu else None)


# --- SDS diagrams ---------------------------------------------------------------

@dataclass
class StepResult:
    vertex: int  # alpha_i
    preimage: tuple  # phi^{-1}(alpha_i) in the order composed (beta-induced)
    block: tuple  # names of the g local functions composed
    passed: bool
    witness: tuple | None = None  # a source state where the two sides differ
    orders_checked: int = 1

    def to_json(self) -> dict:
        out = {"vertex": self.vertex, "preimage": list(self.preimage), "block": list(self.block),
               "passed": self.passed, "orders_checked": self.orders_checked}
        if self.witness is not None:
            out["witness"] = list(self.witness)
        return out


@dataclass
class DiagramResult:
    source: str
    target: str
    steps: list
    global_passed: bool
    global_witness: tuple | None = None
    mismatches: int = 0  # states where the global diagram fails

    @property
    def steps_passed(self) -> bool:
        return all(s.passed for s in self.steps)

    @property
    def passed(self) -> bool:
        return self.steps_passed and self.global_passed

    @property
    def stepwise_implies_global(self) -> bool:
        return not self.steps_passed or self.global_passed

    def to_json(self) -> dict:
        out = {"source": self.source, "target": self.target, "passed": self.passed,
               "steps": [s.to_json() for s in self.steps], "global_passed": self.global_passed,
               "stepwise_implies_global": self.stepwise_implies_global}
        if self.global_witness is not None:
            out["global_witness"] = list(self.global_witness)
        return out


def _first_difference(a: np.ndarray, b: np.ndarray):
    diff = np.flatnonzero(a != b)
    return (int(diff[0]), int(diff.size)) if diff.size else (None, 0)


def _strict_orders(gm: GraphMorphism, members: tuple):
    """Every ordering of ``members`` that permutes within the connected
    components of ``Delta`` restricted to them. Non-adjacent local functions
    commute, so the order between components is immaterial."""
    comps = gm.source.components(members)
    position = {b: k for k, b in enumerate(members)}
    comps = [sorted(c, key=position.get) for c in comps]
    comps.sort(key=lambda c: position[c[0]])
    count = math.prod(math.factorial(len(c)) for c in comps)
    if count > MAX_STRICT_ORDERS:
        raise MorphismError(f"strict mode would check {count} orders (cap {MAX_STRICT_ORDERS})")
    for perms in itertools.product(*(itertools.permutations(c) for c in comps)):
        yield tuple(b for p in perms for b in p)


def check_sds_morphism(f: UpdateFunction, g: UpdateFunction, gm: GraphMorphism, vm: VertexMaps,
                       source_domain: StateDomain, target_domain: StateDomain,
                       h: AdjointMap | None = None, strict: bool = False) -> DiagramResult:
    """Per-step diagrams ``block_i o h = h o f_{alpha_i}`` and the global
    diagram ``h o f = g o h``, each checked on every state of ``k^n``.

    ``block_i`` composes the local functions of ``g`` at ``phi^{-1}(alpha_i)``
    in the order induced by ``g``'s schedule; an empty preimage asks for
    ``h o f_{alpha_i} = h``. With ``strict`` every admissible reordering of
    each block must pass as well.
    """
    for u, label in ((f, "source"), (g, "target")):
        if not u.has_provenance:
            raise MorphismError(f"{label} update {u.name!r} has no local-function provenance")
    if h is None:
        h = adjoint_map(gm, vm, source_domain, target_domain)
    H = h.table
    beta = g.schedule.order
    steps = []
    for a in f.schedule.order:
        members = tuple(sorted(gm.preimage(a), key=beta.index))
        rhs = H[f.local(a).table]
        orders = list(_strict_orders(gm, members)) if strict and members else [members]
        passed, witness = True, None
        for order in orders:
            block = compose_locals([g.local(b) for b in order], target_domain)
            k, _ = _first_difference(block[H], rhs)
            if k is not None:
                passed, witness = False, source_domain.decode(k)
                break
        steps.append(StepResult(a, members, tuple(g.local(b).name for b in members), passed,
                                witness, len(orders)))
    k, count = _first_difference(g.table[H], H[f.table])
    return DiagramResult(f.name, g.name, steps, k is None,
                         None if k is None else source_domain.decode(k), count)


def global_diagram_holds(f_table, g_table, h_table) -> bool:
    return bool(np.array_equal(np.asarray(g_table)[h_table], np.asarray(h_table)[f_table]))


# --- epsilon ----------------------------------------------------------------------

def epsilon_contribution(f: UpdateFunction, g: UpdateFunction, h: AdjointMap):
    """``max_{u,v} |c_f(u,v) - d_g(h(u),h(v))|`` with its arg max ``(u, v)``.

    Only ``v = f(u)`` and the ``v`` with ``h(v) = g(h(u))`` can be nonzero, so
    the scan is linear in the state count.
    """
    H = h.table
    gh = g.table[H]
    hits = gh == H[f.table]
    on_f = np.abs(f.probability - np.where(hits, g.probability, 0.0))
    # states v != f(u) with h(v) = g(h(u)) contribute |0 - p(g)|
    others = h.preimage_counts[gh] - hits.astype(np.int64)
    off_f = np.where(others > 0, g.probability, 0.0)
    u1, u2 = int(np.argmax(on_f)), int(np.argmax(off_f))
    if on_f[u1] >= off_f[u2]:
        return float(on_f[u1]), (u1, int(f.table[u1]))
    u = u2
    cands = np.flatnonzero(H == gh[u])
    v = int(cands[cands != f.table[u]][0])
    return float(off_f[u]), (u, v)


# --- certificates -------------------------------------------------------------------

@dataclass
class Classification:
    monomorphism: bool
    epimorphism: bool
    isomorphism: bool
    equivalence: bool
    identity: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class MorphismCertificate:
    source: PSN
    target: PSN
    graph_morphism: GraphMorphism
    vertex_maps: VertexMaps
    adjoint: AdjointMap
    mu: dict
    diagrams: dict  # source update name -> DiagramResult for mu(f)
    failures: dict = field(default_factory=dict)  # name -> near-miss DiagramResult or None
    strict: bool = False
    epsilon: float | None = None
    epsilon_witness: tuple | None = None  # (f name, u, v) as state indices

    @property
    def valid(self) -> bool:
        return not self.failures and len(self.mu) == len(self.source.updates)

    @property
    def stepwise_implies_global(self) -> bool:
        return all(d.stepwise_implies_global for d in self.diagrams.values())

    @property
    def mu_image(self) -> set:
        return set(self.mu.values())

    @property
    def mu_injective(self) -> bool:
        return len(self.mu_image) == len(self.mu)

    @property
    def mu_bijective(self) -> bool:
        return self.mu_injective and self.mu_image == set(self.target.update_names)

    def same_morphism(self, other: "MorphismCertificate") -> bool:
        """Pointwise equality of phi, the value maps, h and mu."""
        return (self.graph_morphism.phi == other.graph_morphism.phi
                and self.vertex_maps == other.vertex_maps
                and np.array_equal(self.adjoint.table, other.adjoint.table)
                and self.mu == other.mu)

    def to_json(self) -> dict:
        d1 = self.source.domain
        out = {
            "valid": self.valid,
            "strict": self.strict,
            "phi": {str(b): a for b, a in enumerate(self.graph_morphism.phi, start=1)},
            "phihat": {str(b): m.tolist() for b, m in enumerate(self.vertex_maps.maps, start=1)},
            "adjoint": {"injective": self.adjoint.is_injective, "surjective": self.adjoint.is_surjective},
            "mu": dict(self.mu),
            "diagrams": {f: d.to_json() for f, d in self.diagrams.items()},
            "stepwise_implies_global": self.stepwise_implies_global,
            "failures": {f: (None if d is None else d.to_json()) for f, d in self.failures.items()},
            "epsilon": self.epsilon,
        }
        if self.epsilon_witness is not None:
            name, u, v = self.epsilon_witness
            out["epsilon_witness"] = {"function": name, "u": list(d1.decode(u)), "v": list(d1.decode(v))}
        if self.valid:
            out["classification"] = classify_morphism(self).to_json()
        return out


def check_psn_morphism(D1: PSN, D2: PSN, gm: GraphMorphism, vm: VertexMaps,
                       mu: dict | None = None, strict: bool = False) -> MorphismCertificate:
    """Verify a supplied ``mu`` or search one.

    The search keeps, for each ``f`` in ``S_1``, the passing ``g`` in ``S_2``
    with the smallest epsilon contribution, ties going to the earlier ``g``.
    An ``f`` with no passing ``g`` lands in ``failures`` together with the
    candidate whose global diagram fails on the fewest states.
    """
    if gm.source != D2.graph or gm.target != D1.graph:
        raise MorphismError("the graph morphism does not join the graphs of these networks")
    h = adjoint_map(gm, vm, D1.domain, D2.domain)
    chosen, diagrams, failures = {}, {}, {}
    for f in D1.updates:
        if mu is not None:
            if f.name not in mu:
                failures[f.name] = None
                continue
            candidates = [D2.update(mu[f.name])]
        else:
            candidates = D2.updates
        best, best_eps, near = None, None, None
        for g in candidates:
            res = check_sds_morphism(f, g, gm, vm, D1.domain, D2.domain, h, strict)
            if res.passed:
                eps, _ = epsilon_contribution(f, g, h)
                if best is None or eps < best_eps:
                    best, best_eps = res, eps
            elif near is None or res.mismatches < near.mismatches or (
                    res.mismatches == near.mismatches and sum(not s.passed for s in res.steps)
                    < sum(not s.passed for s in near.steps)):
                near = res
        if best is None:
            failures[f.name] = near
        else:
            chosen[f.name] = best.target
            diagrams[f.name] = best
    if mu is not None:
        unknown = set(mu) - set(D1.update_names)
        if unknown:
            raise MorphismError(f"mu mentions unknown source updates {sorted(unknown)}")
    cert = MorphismCertificate(D1, D2, gm, vm, h, chosen, diagrams, failures, strict)
    if cert.valid:
        cert.epsilon, cert.epsilon_witness = _epsilon(cert)
    return cert


def _epsilon(cert: MorphismCertificate):
    best, witness = -1.0, None
    for f in cert.source.updates:
        eps, (u, v) = epsilon_contribution(f, cert.target.update(cert.mu[f.name]), cert.adjoint)
        if eps > best:
            best, witness = eps, (f.name, u, v)
    return best, witness


def epsilon_bound(cert: MorphismCertificate) -> float:
    """``max_{f, u, v} |c_f(u,v) - d_{mu(f)}(h(u), h(v))|``."""
    if not cert.valid:
        raise MorphismError("epsilon is defined for valid certificates only")
    if cert.epsilon is None:
        cert.epsilon, cert.epsilon_witness = _epsilon(cert)
    return cert.epsilon


def classify_morphism(cert: MorphismCertificate) -> Classification:
    if not cert.valid:
        raise MorphismError("cannot classify an invalid certificate")
    gm, h = cert.graph_morphism, cert.adjoint
    mono = gm.is_surjective and h.is_injective
    epi = gm.is_injective and h.is_surjective
    bij = gm.is_injective and gm.is_surjective and h.is_bijective and cert.mu_bijective
    iso = bij
    if iso:
        for f in cert.source.updates:
            g = cert.target.update(cert.mu[f.name])
            H = h.table
            d = np.where(g.table[H] == H[f.table], g.probability, 0.0)
            if np.max(np.abs(d - f.probability)) > ISO_TOL:
                iso = False
                break
    identity = (gm.is_identity and cert.vertex_maps.is_identity
                and np.array_equal(h.table, np.arange(cert.source.domain.size))
                and cert.source.domain == cert.target.domain
                and all(f == g for f, g in cert.mu.items()))
    return Classification(mono, epi, iso, bij, identity)


def identity_morphism(D: PSN) -> MorphismCertificate:
    gm = GraphMorphism(D.graph, D.graph, tuple(D.graph.vertices))
    vm = VertexMaps.identities(gm, D.domain, D.domain)
    return check_psn_morphism(D, D, gm, vm, {n: n for n in D.update_names})


def _same_network(a: PSN, b: PSN) -> bool:
    if a is b:
        return True
    return (a.domain == b.domain and a.graph == b.graph and a.update_names == b.update_names
            and all(np.array_equal(x.table, y.table) and x.probability == y.probability
                    for x, y in zip(a.updates, b.updates)))


def compose_morphisms(c1: MorphismCertificate, c2: MorphismCertificate, strict: bool | None = None) -> MorphismCertificate:
    """``c2 o c1`` for ``c1 : D1 -> D2`` and ``c2 : D2 -> D3``.

    ``phi(b) = phi_1(phi_2(b))``, ``phihat_b = phihat2_b o phihat1_{phi_2(b)}``,
    ``h = h_2 o h_1`` and ``mu = mu_2 o mu_1``. The composite is verified
    again from scratch and must pass.
    """
    if not (c1.valid and c2.valid):
        raise MorphismError("both certificates must be valid")
    if not _same_network(c1.target, c2.source):
        raise MorphismError("the middle networks differ")
    D1, D3 = c1.source, c2.target
    phi1, phi2 = c1.graph_morphism, c2.graph_morphism
    gm = GraphMorphism(D3.graph, D1.graph, tuple(phi1(phi2(b)) for b in D3.graph.vertices))
    vm = VertexMaps(tuple(c2.vertex_maps[b][c1.vertex_maps[phi2(b)]] for b in D3.graph.vertices))
    mu = {f: c2.mu[g] for f, g in c1.mu.items()}
    cert = check_psn_morphism(D1, D3, gm, vm, mu, c1.strict if strict is None else strict)
    if not cert.valid:
        raise MorphismError(f"the composite failed verification for {sorted(cert.failures)}")
    expected = c2.adjoint.table[c1.adjoint.table]
    if not np.array_equal(cert.adjoint.table, expected):
        raise MorphismError("the composite adjoint differs from h_2 o h_1")
    return cert


@dataclass
class SubPSNResult:
    is_sub: bool
    is_proper: bool


def check_sub_psn(cert: MorphismCertificate) -> SubPSNResult:
    """The source is a sub-PSN of the target iff ``cert`` is a monomorphism;
    proper when ``mu`` is not bijective."""
    mono = classify_morphism(cert).monomorphism
    return SubPSNResult(mono, mono and not cert.mu_bijective)


# --- equilibrium --------------------------------------------------------------------

@dataclass
class EquilibriumReport:
    trajectory: list  # D_m for m = 1..m_max
    tol: float
    verdict: str  # "converged" or "not converged"
    checkpoints: dict  # m -> D_m recomputed by repeated squaring
    checkpoint_powers: dict  # m -> (T1^m, T2^m) dense
    delta: float  # total probability of target updates outside mu(S_1)
    delta_powers: dict  # t -> delta**t at the checkpoints
    k_source: int  # most source updates sharing one (u, v) edge
    k_target: int

    @property
    def m_max(self) -> int:
        return len(self.trajectory)

    def to_json(self) -> dict:
        return {
            "m_max": self.m_max,
            "tol": self.tol,
            "trajectory": list(self.trajectory),
            "final": self.trajectory[-1],
            "verdict": self.verdict,
            "checkpoints": {str(m): d for m, d in self.checkpoints.items()},
            "delta": self.delta,
            "delta_powers": {str(t): d for t, d in self.delta_powers.items()},
            "k_source": self.k_source,
            "k_target": self.k_target,
        }


def _max_shared(psn: PSN) -> int:
    if not psn.updates:
        return 0
    tables = np.stack([u.table for u in psn.updates])
    best = 0
    for u in range(tables.shape[1]):
        _, counts = np.unique(tables[:, u], return_counts=True)
        best = max(best, int(counts.max()))
    return best


def _dense(psn: PSN) -> np.ndarray:
    if psn.domain.size > MAX_DENSE_STATES:
        raise MorphismError(f"{psn.domain.size} states exceed the dense limit of {MAX_DENSE_STATES}")
    return transition_matrix(build_state_space(psn), "dense").dense()


def equilibrium_distance(cert: MorphismCertificate, m_max: int = 200, tol: float = 1e-8,
                         window: int = 10) -> EquilibriumReport:
    """Measure ``D_m = max_{u,v} |T1^m[u,v] - T2^m[h(u),h(v)]|`` for ``m = 1..m_max``.

    The verdict is ``"converged"`` iff ``D_{m_max} <= tol`` and the last
    ``window`` steps do not increase. Nothing about the limit is assumed.
    """
    if not cert.valid:
        raise MorphismError("equilibrium comparison needs a valid certificate")
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    T1, T2 = _dense(cert.source), _dense(cert.target)
    H = cert.adjoint.table
    traj = []
    P1, P2 = T1.copy(), T2.copy()
    for m in range(1, m_max + 1):
        traj.append(float(np.max(np.abs(P1 - P2[np.ix_(H, H)]))))
        if m < m_max:
            P1, P2 = P1 @ T1, P2 @ T2
    checkpoints, powers = {}, {}
    for m in EQUILIBRIUM_CHECKPOINTS:
        if m > m_max:
            break
        A = matrix_power(TransitionMatrix(T1), m).dense()
        B = matrix_power(TransitionMatrix(T2), m).dense()
        powers[m] = (A, B)
        checkpoints[m] = float(np.max(np.abs(A - B[np.ix_(H, H)])))
    tail = traj[-(window + 1):]
    monotone = all(b <= a + 1e-15 for a, b in zip(tail, tail[1:]))
    verdict = "converged" if traj[-1] <= tol and monotone else "not converged"
    image = cert.mu_image
    delta = math.fsum(g.probability for g in cert.target.updates if g.name not in image)
    return EquilibriumReport(traj, tol, verdict, checkpoints, powers, delta,
                             {m: delta ** m for m in checkpoints}, _max_shared(cert.source),
                             _max_shared(cert.target))


def nonzero_pattern_check(cert: MorphismCertificate, m_max: int) -> list[bool]:
    """For ``m = 1..m_max``: do ``T1^m`` and the pulled-back ``T2^m`` have the
    same support? Only defined for equivalences."""
    if not cert.valid or not classify_morphism(cert).equivalence:
        raise MorphismError("the nonzero-pattern comparison needs an equivalence")
    T1, T2 = _dense(cert.source), _dense(cert.target)
    H = cert.adjoint.table
    out = []
    P1, P2 = T1.copy(), T2.copy()
    for m in range(1, m_max + 1):
        out.append(bool(np.array_equal(P1 > NONZERO_TOL, P2[np.ix_(H, H)] > NONZERO_TOL)))
        if m < m_max:
            P1, P2 = P1 @ T1, P2 @ T2
    return out
