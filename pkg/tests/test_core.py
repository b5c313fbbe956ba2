import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import fixture_text
from oracles import EX41, EX41_P, states
from psn import (GraphSpec, LocalFunction, Schedule, StateDomain, ValidationError, enumerate_updates,
                 identity_psn, parse_psn_spec, validate_psn)
from psn.core import compose_locals, full_psn


def _validate(text):
    return validate_psn(parse_psn_spec(text))


def _violations(text):
    with pytest.raises(ValidationError) as info:
        _validate(text)
    return info.value.violations


# --- domains -------------------------------------------------------------------------

def test_mixed_radix_vertex_one_most_significant():
    d = StateDomain((2, 3, 2))
    assert d.encode((0, 0, 1)) == 1
    assert d.encode((1, 0, 0)) == 6
    assert d.decode(11) == (1, 2, 1)
    assert d.size == 12


@given(st.lists(st.integers(1, 4), min_size=1, max_size=4))
def test_encode_decode_inverse(cards):
    d = StateDomain(cards)
    for i in range(d.size):
        assert d.encode(d.decode(i)) == i
    assert np.array_equal(d.encode_many(d.coords), np.arange(d.size))


def test_encode_rejects_out_of_range():
    with pytest.raises(ValueError):
        StateDomain((2, 2)).encode((0, 2))


def test_graph_neighbourhood_includes_vertex():
    g = GraphSpec(4, frozenset({(2, 1), (2, 3)}))
    assert g.neighborhood(2) == (1, 2, 3)
    assert g.neighborhood(4) == (4,)
    assert g.components([1, 3, 4]) == [[1], [3], [4]]
    assert g.components([1, 2, 3]) == [[1, 2, 3]]


# --- Example 4.1 ---------------------------------------------------------------------

def test_example_41_tables_match_closed_forms(D41):
    for u in D41.updates:
        for s in states(3):
            assert D41.domain.decode(u.table[D41.domain.encode(s)]) == EX41[u.name](*s), (u.name, s)


def test_example_41_probabilities(D41):
    assert dict(zip(D41.update_names, D41.probabilities)) == EX41_P


def test_composition_applies_last_listed_first(D41):
    # f5 = f31 o f21 o f12 under a1 = (3 2 1): f12 acts first
    f5, d = D41.update("f5"), D41.domain
    assert f5.schedule.order == (3, 2, 1)
    assert d.decode(f5.table[d.encode((1, 1, 0))]) == (0, 0, 0)


def test_enumerate_updates_order_and_count(D41):
    ups = enumerate_updates(D41)
    assert len(ups) == 2 * 2 * 1 * 2
    assert [(u.selection, u.schedule.name) for u in ups[:3]] == [
        (("f11", "f21", "f31"), "a1"), (("f11", "f21", "f31"), "a2"), (("f11", "f21", "f32"), "a1")]
    assert all(np.array_equal(a.table, b.table) for a, b in zip(ups, D41.updates))
    assert sum(u.probability for u in ups) == pytest.approx(1.0)


def test_enumerate_updates_dedupe_merges_names():
    d = identity_psn((2, 2), [(1, 2)])
    d = d.__class__(d.graph, d.domain, d.families, [Schedule("a", (1, 2)), Schedule("b", (2, 1))], d.updates)
    ups = enumerate_updates(d, dedupe=True)
    assert len(ups) == 1
    assert ups[0].name == "f1|f2"
    assert ups[0].probability == pytest.approx(1.0)


def test_enumerate_updates_cap(D41):
    with pytest.raises(ValueError, match="cap"):
        enumerate_updates(D41, cap=4)


def test_full_psn_is_uniform(D41):
    full = full_psn(D41)
    assert np.allclose(full.probabilities, 1 / 8)


def test_identity_psn():
    d = identity_psn((2, 3))
    assert np.array_equal(d.updates[0].table, np.arange(6))
    assert d.family(2).functions[0].is_identity


# --- validation ----------------------------------------------------------------------

def test_locality_violation_names_vertex_variable_and_witness():
    text = fixture_text("example_4_1.psn").replace("edges = 1-2 1-3 2-3", "edges = 1-2 1-3")
    text = text.replace("f21 = x1*x2", "f21 = x1*x2*x3")
    found = [v for v in _violations(text) if v.kind == "locality" and v.vertex == 2]
    assert len(found) == 1
    v = found[0]
    assert v.variable == 3 and v.name == "f21"
    assert v.witness == ((1, 1, 0), (1, 1, 1))


def test_all_violations_are_collected():
    text = fixture_text("example_4_1.psn").replace("@ 0.18", "@ 0.2").replace("f8 = a2 : f12 f21 f32", "f8 = zz : f12 f21 f32")
    kinds = {v.kind for v in _violations(text)}
    assert {"probability-sum", "reference"} <= kinds


def test_probability_sum_residual_is_reported():
    text = fixture_text("example_4_1.psn").replace("f8 = a2 : f12 f21 f32 @ 0.08", "f8 = a2 : f12 f21 f32 @ 0.07")
    (v,) = _violations(text)
    assert v.kind == "probability-sum"
    assert v.residual == pytest.approx(-0.01)


def test_empty_updates_are_rejected():
    text = fixture_text("example_4_1.psn").split("[updates]")[0] + "[updates]\n"
    doc = parse_psn_spec(text)
    assert doc.updates == ()
    assert [v.kind for v in _violations(text)] == ["probability-sum"]


def test_schedule_must_be_permutation():
    text = fixture_text("example_4_1.psn").replace("a2 = 1 2 3", "a2 = 1 2 2")
    assert "schedule" in {v.kind for v in _violations(text)}


def test_tuple_rule_must_only_touch_its_vertex():
    text = fixture_text("identity_1.psn").replace("vertices = 1", "vertices = 2").replace(
        "cardinalities = 2", "cardinalities = 2 2").replace("Id = x1", "Id = (x1, x1)")
    text = text.replace("s = 1", "s = 1 2").replace("Id = s : Id", "Id = s : Id Id")
    text = text.replace("[schedules]", "[family 2]\nId = x2\n\n[schedules]")
    kinds = [v.kind for v in _violations(text)]
    assert "locality" in kinds


def test_incomplete_table_rule():
    text = fixture_text("identity_1.psn").replace("Id = x1", "Id = table\n  0 : 0")
    assert [v.kind for v in _violations(text)] == ["table-incomplete"]


def test_size_cap():
    with pytest.raises(ValidationError, match="cap"):
        validate_psn(parse_psn_spec(fixture_text("example_4_1.psn")), max_states=4)


# --- local functions -------------------------------------------------------------------

def test_local_function_rewrites_only_its_coordinate():
    d = StateDomain((2, 3, 2))
    f = LocalFunction.from_expression(2, "f", "x1+x3+1", d)
    for i in range(d.size):
        s, t = d.decode(i), f(d.decode(i))
        assert (s[0], s[2]) == (t[0], t[2])
        assert t[1] == (s[0] + s[2] + 1) % 3


def test_dependency_witness():
    d = StateDomain((2, 2))
    f = LocalFunction.from_expression(1, "f", "x2", d)
    assert f.dependency_witness(2) == ((0, 0), (0, 1))
    assert LocalFunction.identity(1, d).dependency_witness(2) is None


@settings(max_examples=30)
@given(st.data())
def test_compose_locals_matches_sequential_application(data):
    n = data.draw(st.integers(1, 3))
    d = StateDomain(data.draw(st.lists(st.integers(2, 3), min_size=n, max_size=n)))
    order = data.draw(st.permutations(range(1, n + 1)))
    locs = []
    for a in order:
        values = data.draw(st.lists(st.integers(0, d.card(a) - 1), min_size=d.size, max_size=d.size))
        locs.append(LocalFunction(a, f"f{a}", values, d))
    table = compose_locals(locs, d)
    for i in range(d.size):
        s = d.decode(i)
        for f in reversed(locs):
            s = f(s)
        assert d.decode(table[i]) == s


def test_enumeration_under_one_second(D41):
    t = time.perf_counter()
    enumerate_updates(D41)
    assert time.perf_counter() - t < 1.0
