import numpy as np
import pytest

import psn
from conftest import fixture_text
from psn.expr import ParseError
from psn.fileformat import (canonicalize, emit_document, emit_maps, emit_psn_spec, parse_maps,
                            parse_probabilities, parse_psn_spec, parse_relations, parse_series, parse_table)

SPECS = ["example_4_1.psn", "example_4_2.psn", "example_6_2_F.psn", "example_6_2_G.psn", "identity_1.psn"]


@pytest.mark.parametrize("name", SPECS)
def test_parse_emit_round_trip(name):
    doc = parse_psn_spec(fixture_text(name))
    text = emit_document(doc)
    assert parse_psn_spec(text) == canonicalize(doc)
    assert emit_document(parse_psn_spec(text)) == text


@pytest.mark.parametrize("name", SPECS)
def test_emit_from_validated_network_revalidates(name):
    net = psn.load_fixture(name)
    again = psn.validate_psn(parse_psn_spec(emit_psn_spec(net)))
    assert again.update_names == net.update_names
    for a, b in zip(again.updates, net.updates):
        assert np.array_equal(a.table, b.table) and a.probability == b.probability


def test_network_without_declarations_emits_tables():
    net = psn.identity_psn((2, 3), [(1, 2)])
    text = emit_psn_spec(net)
    assert "= table" in text
    again = psn.validate_psn(parse_psn_spec(text))
    assert np.array_equal(again.updates[0].table, np.arange(6))


def test_raw_update_round_trip():
    text = """
[graph]
vertices = 1
cardinalities = 2
[family 1]
Id = x1
[schedules]
s = 1
[updates]
flip = raw @ 1.0
  0 : 1
  1 : 0
"""
    net = psn.validate_psn(parse_psn_spec(text))
    assert net.updates[0].table.tolist() == [1, 0]
    assert not net.updates[0].has_provenance
    again = psn.validate_psn(parse_psn_spec(emit_psn_spec(net)))
    assert again.updates[0].table.tolist() == [1, 0]


def test_g_probabilities_load_as_listed():
    doc = parse_psn_spec(fixture_text("example_6_2_G.psn"))
    assert [u.probability for u in doc.updates] == [.00252, .08321, .51428, .39999]


@pytest.mark.parametrize("text, line", [
    ("[graph]\nvertices = x\n", 2),
    ("[graph]\nvertices = 1\ncardinalities = 2\n[family 1]\nf = x1 +\n", 5),
    ("[bogus]\n", 1),
    ("[graph]\nvertices = 1\ncardinalities = 2\n[family 1]\nf = 1\nf = 0\n", 6),
])
def test_parse_errors_have_locations(text, line):
    with pytest.raises(ParseError) as info:
        parse_psn_spec(text)
    assert info.value.line == line


def test_maps_round_trip():
    doc = parse_maps(fixture_text("maps_6_2.txt"))
    assert doc.phi == {1: 1, 2: 2, 3: 2, 4: 3}
    assert parse_maps(emit_maps(doc)) == doc
    full = parse_maps("phi: 1 -> 2\nphihat 1: 0 -> 1\nphihat 1: 1 -> 0\nmu: f1 -> g2\n")
    assert full.phihat == {1: {0: 1, 1: 0}} and full.mu == {"f1": "g2"}


def test_maps_reject_duplicates():
    with pytest.raises(ParseError):
        parse_maps("phi: 1 -> 1\nphi: 1 -> 2\n")


def test_reveng_inputs():
    m, cards = parse_relations(fixture_text("reveng_3_1_relations.txt"))
    assert cards == (2, 2, 2)
    assert m[1, 2] == 1 and m.sum() >= 1 and m[0].sum() == 0
    series = parse_series(fixture_text("reveng_3_1_series.txt"))
    assert [name for name, _ in series] == ["A1", "A2"]
    assert series[0][1][0] == (0, 1, 0)
    assert parse_probabilities(fixture_text("reveng_3_1_probs.txt")) == [2 / 3, 1 / 3]


def test_relations_must_be_square_binary():
    with pytest.raises(ParseError):
        parse_relations("0 1\n1\n")
    with pytest.raises(ParseError):
        parse_relations("0 2\n1 0\n")


def test_table_file():
    domain, table = parse_table("cardinalities = 2 2\n0 0 : 0 0\n0 1 : 1 0\n1 0 : 0 1\n1 1 : 1 1\n")
    assert table.tolist() == [0, 2, 1, 3]
    with pytest.raises(ParseError):
        parse_table("cardinalities = 2\n0 : 1\n")
