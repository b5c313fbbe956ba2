"""Independent oracles: closed forms transcribed from the worked examples and
naive reference algorithms that share no code with the package."""
import itertools

import numpy as np


def states(n, k=2):
    return list(itertools.product(range(k), repeat=n))


def neg(x):
    return 1 - x


# Example 4.1, the eight update functions over Z_2^3 in closed form
EX41 = {
    "f1": lambda x1, x2, x3: (1, x2, x2),
    "f2": lambda x1, x2, x3: (1, x1 * x2, x1 * x2),
    "f3": lambda x1, x2, x3: (1, x2, (x2 + x3) % 2),
    "f4": lambda x1, x2, x3: (1, x1 * x2, (x1 * x2 + x3) % 2),
    "f5": lambda x1, x2, x3: (neg(x1), neg(x1) * x2, neg(x1) * x2),
    "f6": lambda x1, x2, x3: (neg(x1), x1 * x2, x1 * x2),
    "f7": lambda x1, x2, x3: (neg(x1), neg(x1) * x2, (neg(x1) * x2 + x3) % 2),
    "f8": lambda x1, x2, x3: (neg(x1), x1 * x2, (x1 * x2 + x3) % 2),
}
EX41_P = {"f1": .18, "f2": .12, "f3": .18, "f4": .12, "f5": .12, "f6": .08, "f7": .12, "f8": .08}

# Example 6.2 networks F (Z_2^3) and G (Z_2^4)
EX62_F = {
    "f1": lambda x1, x2, x3: (x1, x2, x2 * neg(x3)),
    "f2": lambda x1, x2, x3: (1, x2, x2 * neg(x3)),
}
EX62_F_P = {"f1": .5168, "f2": .4832}
EX62_G = {
    "g5": lambda x1, x2, x3, x4: (x1, x2, x1 * x2, x2 * neg(x4)),
    "g6": lambda x1, x2, x3, x4: (1, x2, x1 * x2, x2 * neg(x4)),
    "g7": lambda x1, x2, x3, x4: (x1, x2, x2, x2 * neg(x4)),
    "g8": lambda x1, x2, x3, x4: (1, x2, x2, x2 * neg(x4)),
}
EX62_G_P = {"g5": .00252, "g6": .08321, "g7": .51428, "g8": .39999}


def h62(x):
    return (x[0], x[1], x[1], x[2])


def h63(y):
    return (y[0], y[1], y[3])


def transition_dict(funcs, probs, n):
    """``{u: {v: p}}`` by evaluating every function at every state."""
    out = {}
    for u in states(n):
        row = {}
        for name, f in funcs.items():
            v = f(*u)
            row[v] = row.get(v, 0.0) + probs[name]
        out[u] = row
    return out


def dense_from_dict(T, n):
    ss = states(n)
    idx = {s: i for i, s in enumerate(ss)}
    M = np.zeros((len(ss), len(ss)))
    for u, row in T.items():
        for v, p in row.items():
            M[idx[u], idx[v]] += p
    return M


def naive_matmul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += A[i][t] * B[t][j]
            out[i][j] = s
    return out


def naive_power(M, t):
    M = [list(map(float, r)) for r in np.asarray(M)]
    out = M
    for _ in range(t - 1):
        out = naive_matmul(out, M)
    return np.array(out)


def stationary_linear(P):
    """Solve ``pi P = pi``, ``sum(pi) = 1`` for an irreducible block."""
    n = P.shape[0]
    A = np.vstack([P.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    return pi


def closed_classes(M, tol=0.0):
    """Recurrent classes by transitive closure (Floyd-Warshall style)."""
    n = M.shape[0]
    reach = (M > tol) | np.eye(n, dtype=bool)
    for k in range(n):
        reach = reach | (reach[:, [k]] & reach[[k], :])
    out = []
    seen = set()
    for u in range(n):
        if u in seen:
            continue
        cls = [v for v in range(n) if reach[u, v] and reach[v, u]]
        seen.update(cls)
        if all(set(np.flatnonzero(reach[v])) <= set(cls) for v in cls):
            out.append(cls)
    return out


def brute_commutes(f, g, h, n_states):
    """``h o f == g o h`` by enumeration over index tables."""
    return all(h[f[u]] == g[h[u]] for u in range(n_states))


def brute_epsilon(f_table, pf, g_table, pg, h_table):
    N = len(f_table)
    best = 0.0
    for u in range(N):
        for v in range(N):
            c = pf if f_table[u] == v else 0.0
            d = pg if g_table[h_table[u]] == h_table[v] else 0.0
            best = max(best, abs(c - d))
    return best
