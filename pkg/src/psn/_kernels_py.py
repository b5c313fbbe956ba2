"""Pure-Python/numpy implementations of the kernels in ``_kernels.pyx``.

Results are identical to the compiled versions, including witness order.
"""
import numpy as np


def apply_chain(tables):
    tables = np.asarray(tables, dtype=np.int64)
    out = np.arange(tables.shape[1], dtype=np.int64)
    for t in tables:
        out = t[out]
    return out


def functional_graph(table):
    table = np.asarray(table, dtype=np.int64)
    n = len(table)
    succ = table.tolist()
    basin = [-1] * n
    depth = [0] * n
    mark = [0] * n
    nodes = []
    offsets = [0]
    attractor_id = 0
    for start in range(n):
        if mark[start] == 2:
            continue
        path = []
        s = start
        while mark[s] == 0:
            mark[s] = 1
            path.append(s)
            s = succ[s]
        if mark[s] == 1:
            p = path.index(s)
            for v in path[p:]:
                basin[v] = attractor_id
                depth[v] = 0
                mark[v] = 2
                nodes.append(v)
            offsets.append(len(nodes))
            b, d = attractor_id, 0
            attractor_id += 1
            del path[p:]
        else:
            b, d = basin[s], depth[s]
        for v in reversed(path):
            d += 1
            basin[v] = b
            depth[v] = d
            mark[v] = 2
    return (np.asarray(basin, dtype=np.int64), np.asarray(depth, dtype=np.int64),
            np.asarray(nodes, dtype=np.int64), np.asarray(offsets, dtype=np.int64))


def dependency_witness(rule, card, stride):
    rule = np.asarray(rule, dtype=np.int64)
    idx = np.arange(len(rule), dtype=np.int64)
    digit = (idx // stride) % card
    best = None
    for w in range(1, card):
        lo = idx[digit < w]
        partner = lo + (w - digit[lo]) * stride
        hit = np.flatnonzero(rule[lo] != rule[partner])
        if hit.size:
            cand = (int(lo[hit[0]]), int(partner[hit[0]]))
            # the compiled loop visits (i, w) with i outermost
            if best is None or cand[0] < best[0]:
                best = cand
    return best if best is not None else (-1, -1)
