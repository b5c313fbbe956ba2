"""Weighted state space of a PSN and its Markov-chain behaviour."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import kernels
from .core import PSN, StateDomain

SPARSE_DENSITY = 0.25
STEADY_TOL = 1e-10
STEADY_MAX_ITER = 10 ** 6


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual, iterations):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class TransitionSystem:
    """Edges ``u -> v`` weighted by ``p(u, v) = sum of p(f) over f with f(u) = v``."""

    def __init__(self, domain: StateDomain, names, tables, probabilities):
        self.domain = domain
        self.names = tuple(names)
        self.tables = np.asarray(tables, dtype=np.int64).reshape(len(self.names), domain.size)
        self.probabilities = np.asarray(probabilities, dtype=float)
        n = domain.size
        rows = np.tile(np.arange(n, dtype=np.int64), len(self.names))
        cols = self.tables.ravel()
        vals = np.repeat(self.probabilities, n)
        keep = vals > 0
        mat = sp.coo_array((vals[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
        mat.sum_duplicates()
        mat.sort_indices()
        self.csr = mat

    @property
    def size(self) -> int:
        return self.domain.size

    def edge_items(self):
        """Yield ``(u, v, p)`` over state indices, rows in order."""
        indptr, indices, data = self.csr.indptr, self.csr.indices, self.csr.data
        for u in range(self.size):
            for k in range(indptr[u], indptr[u + 1]):
                yield u, int(indices[k]), float(data[k])

    @property
    def edges(self) -> dict:
        """``{(u_state, v_state): p}``; materialises every edge."""
        dec = self.domain.decode
        return {(dec(u), dec(v)): p for u, v, p in self.edge_items()}

    def _index(self, s) -> int:
        return s if isinstance(s, (int, np.integer)) else self.domain.encode(s)

    def successors(self, u) -> dict:
        u = self._index(u)
        lo, hi = self.csr.indptr[u], self.csr.indptr[u + 1]
        return {self.domain.decode(v): float(p) for v, p in zip(self.csr.indices[lo:hi], self.csr.data[lo:hi])}

    def probability(self, u, v) -> float:
        return float(self.csr[self._index(u), self._index(v)])

    def contributing(self, u, v) -> tuple:
        u, v = self._index(u), self._index(v)
        return tuple(n for n, t, p in zip(self.names, self.tables, self.probabilities) if t[u] == v and p > 0)


def build_state_space(psn: PSN) -> TransitionSystem:
    return TransitionSystem(psn.domain, psn.update_names, [u.table for u in psn.updates],
                            psn.probabilities)


class TransitionMatrix:
    """Row-stochastic matrix, held dense (ndarray) or sparse (CSR)."""

    def __init__(self, data):
        if sp.issparse(data):
            data = sp.csr_array(data)
        else:
            data = np.asarray(data, dtype=float)
        self.data = data

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.data)

    @property
    def size(self) -> int:
        return self.data.shape[0]

    def dense(self) -> np.ndarray:
        return self.data.toarray() if self.is_sparse else self.data

    def csr(self):
        return self.data if self.is_sparse else sp.csr_array(self.data)

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.data.sum(axis=1)).ravel()

    def __getitem__(self, uv) -> float:
        return float(self.data[uv])

    def __matmul__(self, other: "TransitionMatrix") -> "TransitionMatrix":
        out = self.data @ other.data
        if self.is_sparse and not sp.issparse(out):
            out = sp.csr_array(out)
        return TransitionMatrix(out)

    def as_representation(self, sparse: bool) -> "TransitionMatrix":
        return TransitionMatrix(self.csr() if sparse else self.dense())


def transition_matrix(ts: TransitionSystem, representation: str = "auto") -> TransitionMatrix:
    """``T[u][v] = p(u, v)``. ``"auto"`` goes sparse below 25% density."""
    if representation == "auto":
        sparse = ts.csr.nnz < SPARSE_DENSITY * ts.size * ts.size
    elif representation in ("dense", "sparse"):
        sparse = representation == "sparse"
    else:
        raise ValueError(f"unknown representation {representation!r}")
    return TransitionMatrix(ts.csr.copy() if sparse else ts.csr.toarray())


def matrix_power(T: TransitionMatrix, t: int) -> TransitionMatrix:
    """``T**t`` by repeated squaring."""
    if t < 1:
        raise ValueError("the exponent must be a positive integer")
    result = None
    base = T
    while t:
        if t & 1:
            result = base if result is None else result @ base
        t >>= 1
        if t:
            base = base @ base
    return result


@dataclass
class RecurrentClass:
    states: np.ndarray
    pi: np.ndarray
    iterations: int
    residual: float
    period: int

    @property
    def cesaro(self) -> bool:
        return self.period > 1


@dataclass
class SteadyStateReport:
    domain: StateDomain
    classes: list = field(default_factory=list)

    @property
    def residual(self) -> float:
        return max((c.residual for c in self.classes), default=0.0)

    @property
    def iterations(self) -> int:
        return max((c.iterations for c in self.classes), default=0)

    def distribution(self, k: int) -> np.ndarray:
        """Stationary vector of class ``k`` embedded in the whole state space."""
        out = np.zeros(self.domain.size)
        out[self.classes[k].states] = self.classes[k].pi
        return out

    def to_json(self) -> dict:
        dec = self.domain.decode
        return {
            "classes": [[list(dec(s)) for s in c.states] for c in self.classes],
            "pi": [c.pi.tolist() for c in self.classes],
            "residual": self.residual,
            "iterations": self.iterations,
            "periods": [c.period for c in self.classes],
            "cesaro": [c.cesaro for c in self.classes],
        }


def recurrent_classes(T: TransitionMatrix) -> list[np.ndarray]:
    """Closed strongly connected components of the positive-entry digraph,
    ordered by their smallest state."""
    g = T.csr().copy()
    g.eliminate_zeros()
    _, labels = connected_components(g, directed=True, connection="strong")
    coo = g.tocoo()
    leaving = labels[coo.row] != labels[coo.col]
    open_labels = set(labels[coo.row[leaving]].tolist())
    classes: dict[int, list[int]] = {}
    for s, lab in enumerate(labels.tolist()):
        if lab not in open_labels:
            classes.setdefault(lab, []).append(s)
    return sorted((np.array(v, dtype=np.int64) for v in classes.values()), key=lambda a: a[0])


def _period(P) -> int:
    n = P.shape[0]
    level = np.full(n, -1, dtype=np.int64)
    level[0] = 0
    frontier = [0]
    indptr, indices = P.indptr, P.indices
    g = 0
    while frontier:
        nxt = []
        for u in frontier:
            for v in indices[indptr[u]:indptr[u + 1]]:
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    for u in range(n):
        for v in indices[indptr[u]:indptr[u + 1]]:
            g = math.gcd(g, int(level[u] + 1 - level[v]))
    return max(g, 1)


def steady_state(T: TransitionMatrix, tol: float = STEADY_TOL, max_iter: int = STEADY_MAX_ITER) -> SteadyStateReport:
    """Stationary distribution of every recurrent class by power iteration.

    Reducible chains get one distribution per closed class. A class of
    period ``d > 1`` is iterated with ``P**d`` and the result averaged over
    one period (Cesaro limit); ``RecurrentClass.cesaro`` flags this.
    Raises :class:`ConvergenceError` when ``max_iter`` is exhausted.
    """
    full = T.csr()
    report = SteadyStateReport(StateDomain((T.size,)))
    for states in recurrent_classes(T):
        P = full[states][:, states].tocsr()
        P.eliminate_zeros()
        d = _period(P)
        PT = P.T.tocsr()
        x = np.full(len(states), 1.0 / len(states))
        it = 0
        while True:
            y = x
            for _ in range(d):
                y = PT @ y
            it += d
            y /= y.sum()
            r = float(np.max(np.abs(y - x)))
            x = y
            if r <= tol:
                break
            if it >= max_iter:
                raise ConvergenceError(f"power iteration on a class of {len(states)} states did not converge", r, it)
        if d > 1:
            acc, y = x.copy(), x
            for _ in range(d - 1):
                y = PT @ y
                acc += y
            x = acc / d
        x /= x.sum()
        residual = float(np.max(np.abs(PT @ x - x)))
        report.classes.append(RecurrentClass(states, x, it, residual, d))
    return report


def steady_state_of(psn: PSN, **kwargs) -> SteadyStateReport:
    T = transition_matrix(build_state_space(psn))
    report = steady_state(T, **kwargs)
    report.domain = psn.domain
    return report


# --- attractors ---------------------------------------------------------------

@dataclass
class FunctionAttractors:
    name: str
    cycles: list  # each a tuple of state indices, rotated to start at its minimum
    basin: np.ndarray  # attractor number per state
    depth: np.ndarray  # steps until the cycle is reached

    @property
    def fixed_points(self) -> list:
        return [c[0] for c in self.cycles if len(c) == 1]

    @property
    def basin_sizes(self) -> list:
        return np.bincount(self.basin, minlength=len(self.cycles)).tolist()


@dataclass
class AttractorReport:
    domain: StateDomain
    per_function: list

    @property
    def attractors(self) -> list:
        """Union over the selected updates: ``(cycle, names)`` sorted by cycle."""
        seen: dict[tuple, list] = {}
        for fa in self.per_function:
            for c in fa.cycles:
                seen.setdefault(c, []).append(fa.name)
        return sorted(seen.items(), key=lambda kv: (len(kv[0]), kv[0]))

    def to_json(self) -> dict:
        dec = self.domain.decode
        return {
            "functions": [
                {
                    "name": fa.name,
                    "fixed_points": [list(dec(s)) for s in fa.fixed_points],
                    "cycles": [[list(dec(s)) for s in c] for c in fa.cycles],
                    "cycle_lengths": [len(c) for c in fa.cycles],
                    "basin_sizes": fa.basin_sizes,
                    "max_depth": int(fa.depth.max()) if len(fa.depth) else 0,
                }
                for fa in self.per_function
            ],
            "attractors": [
                {"cycle": [list(dec(s)) for s in c], "length": len(c), "functions": names}
                for c, names in self.attractors
            ],
        }


def function_attractors(name: str, table) -> FunctionAttractors:
    basin, depth, nodes, offsets = kernels.functional_graph(np.ascontiguousarray(table, dtype=np.int64))
    raw = [nodes[offsets[k]:offsets[k + 1]].tolist() for k in range(len(offsets) - 1)]
    canon = []
    for c in raw:
        k = c.index(min(c))
        canon.append(tuple(c[k:] + c[:k]))
    order = sorted(range(len(canon)), key=lambda k: canon[k][0])
    relabel = np.empty(len(canon), dtype=np.int64)
    relabel[order] = np.arange(len(canon))
    return FunctionAttractors(name, [canon[k] for k in order], relabel[basin], depth)


def attractors(psn: PSN) -> AttractorReport:
    return AttractorReport(psn.domain, [function_attractors(u.name, u.table) for u in psn.updates])


def vertex_selection_probabilities(psn: PSN) -> dict:
    """``{(vertex, local name): c}`` with ``c`` the total probability of the
    updates that select that local function at that vertex."""
    missing = [u.name for u in psn.updates if not u.has_provenance]
    if missing:
        raise ValueError(f"updates without selection provenance: {missing}")
    parts: dict[tuple, list] = {(fam.vertex, f.name): [] for fam in psn.families for f in fam}
    for u in psn.updates:
        for a, name in enumerate(u.selection, start=1):
            parts[(a, name)].append(u.probability)
    return {k: math.fsum(v) for k, v in parts.items()}
