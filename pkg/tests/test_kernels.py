import os
import subprocess
import sys

import numpy as np
from hypothesis import given, settings, strategies as st

from psn import _kernels_py as py
from psn import kernels


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


def test_pure_python_switch():
    env = dict(os.environ, PSN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import psn; print(psn.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


tables = st.integers(1, 40).flatmap(lambda n: st.lists(st.integers(0, n - 1), min_size=n, max_size=n))


@given(tables)
def test_functional_graph_agrees(table):
    t = np.array(table, dtype=np.int64)
    for a, b in zip(kernels.functional_graph(t), py.functional_graph(t)):
        assert np.array_equal(a, b)


@given(tables)
def test_functional_graph_is_a_valid_decomposition(table):
    t = np.array(table, dtype=np.int64)
    basin, depth, nodes, offsets = kernels.functional_graph(t)
    on_cycle = set(nodes.tolist())
    for k in range(len(offsets) - 1):
        cyc = nodes[offsets[k]:offsets[k + 1]].tolist()
        for i, s in enumerate(cyc):
            assert t[s] == cyc[(i + 1) % len(cyc)]
    for s in range(len(t)):
        x = s
        for _ in range(depth[s]):
            x = t[x]
        assert x in on_cycle and basin[x] == basin[s]


@settings(max_examples=50)
@given(st.data())
def test_apply_chain_agrees(data):
    n = data.draw(st.integers(1, 30))
    k = data.draw(st.integers(1, 5))
    tabs = np.array([data.draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n)) for _ in range(k)])
    assert np.array_equal(kernels.apply_chain(tabs), py.apply_chain(tabs))


@settings(max_examples=50)
@given(st.data())
def test_dependency_witness_agrees(data):
    cards = data.draw(st.lists(st.integers(2, 3), min_size=1, max_size=3))
    size = int(np.prod(cards))
    rule = np.array(data.draw(st.lists(st.integers(0, 2), min_size=size, max_size=size)), dtype=np.int64)
    stride = 1
    for v in range(len(cards) - 1, -1, -1):
        got = kernels.dependency_witness(rule, cards[v], stride)
        assert tuple(got) == tuple(py.dependency_witness(rule, cards[v], stride))
        stride *= cards[v]
