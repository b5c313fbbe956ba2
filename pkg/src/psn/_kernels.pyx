# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-state loops over dense state tables (int64, mixed-radix indexed)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


def apply_chain(const i64[:, ::1] tables):
    cdef Py_ssize_t k = tables.shape[0], n = tables.shape[1]
    cdef Py_ssize_t x, j
    cdef i64 s
    out = np.empty(n, dtype=np.int64)
    cdef i64[::1] res = out
    for x in range(n):
        s = x
        for j in range(k):
            s = tables[j, s]
        res[x] = s
    return out


def functional_graph(const i64[::1] table):
    cdef Py_ssize_t n = table.shape[0]
    basin_arr = np.full(n, -1, dtype=np.int64)
    depth_arr = np.zeros(n, dtype=np.int64)
    mark_arr = np.zeros(n, dtype=np.int8)
    path_arr = np.empty(n, dtype=np.int64)
    cdef i64[::1] basin = basin_arr
    cdef i64[::1] depth = depth_arr
    cdef cnp.int8_t[::1] mark = mark_arr
    cdef i64[::1] path = path_arr
    cdef Py_ssize_t start, top, p, i
    cdef i64 s, attractor_id = 0, d, b
    nodes = []
    offsets = [0]
    for start in range(n):
        if mark[start] == 2:
            continue
        top = 0
        s = start
        while mark[s] == 0:
            mark[s] = 1
            path[top] = s
            top += 1
            s = table[s]
        if mark[s] == 1:
            # closed a new cycle; s is on the current path
            p = top - 1
            while path[p] != s:
                p -= 1
            for i in range(p, top):
                basin[path[i]] = attractor_id
                depth[path[i]] = 0
                mark[path[i]] = 2
                nodes.append(path[i])
            offsets.append(len(nodes))
            b = attractor_id
            d = 0
            attractor_id += 1
            top = p
        else:
            b = basin[s]
            d = depth[s]
        for i in range(top - 1, -1, -1):
            d += 1
            basin[path[i]] = b
            depth[path[i]] = d
            mark[path[i]] = 2
    return (basin_arr, depth_arr, np.asarray(nodes, dtype=np.int64),
            np.asarray(offsets, dtype=np.int64))


def dependency_witness(const i64[::1] rule, i64 card, i64 stride):
    cdef Py_ssize_t n = rule.shape[0], i
    cdef i64 digit, w, j
    for i in range(n):
        digit = (i // stride) % card
        for w in range(digit + 1, card):
            j = i + (w - digit) * stride
            if rule[i] != rule[j]:
                return i, j
    return -1, -1
