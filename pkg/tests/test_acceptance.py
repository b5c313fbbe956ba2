"""Acceptance criteria 1-10. Each test records one PASS/FAIL line, printed
at the end of the session by the hook in conftest.py."""
import math
import time
from contextlib import contextmanager

import numpy as np
import pydot

import psn
from conftest import certificate, fixture_text
from generators import decomposition_instances, morphic_pairs
from oracles import (EX41, EX41_P, closed_classes, dense_from_dict, naive_matmul, stationary_linear, states,
                     transition_dict)
from psn.cli import emit_dot
from psn.fileformat import canonicalize, emit_document, emit_maps, parse_maps, parse_psn_spec
from psn.morphism import (check_psn_morphism, classify_morphism, compose_morphisms, epsilon_bound,
                          equilibrium_distance, identity_morphism)
from psn.reveng import TimeSeriesFamily, composition_matches, decompose_sequential, run_pipeline
from psn.statespace import build_state_space, steady_state_of, transition_matrix

RESULTS = []

SPECS = ["example_4_1.psn", "example_4_2.psn", "example_6_2_F.psn", "example_6_2_G.psn", "identity_1.psn"]
MAPS = [("example_6_2_F.psn", "example_6_2_G.psn", "maps_6_2.txt"),
        ("example_6_2_G.psn", "example_6_2_F.psn", "maps_6_3.txt"),
        ("example_4_2.psn", "example_4_1.psn", "maps_4_2.txt")]


@contextmanager
def criterion(number, title, budget=None):
    """Run the body, then record and assert ``PASS``/``FAIL`` with timing."""
    state = {"detail": ""}
    start = time.perf_counter()
    ok, error = False, None
    try:
        yield state
        ok = True
    except AssertionError as e:
        error = e
    elapsed = time.perf_counter() - start
    if ok and budget is not None and elapsed >= budget:
        ok, error = False, AssertionError(f"runtime {elapsed:.3f}s exceeds {budget}s")
    detail = state["detail"] or (str(error).splitlines()[0] if error else "")
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'} ({elapsed:.3f}s) {title}"
    if detail:
        line += f": {detail}"
    RESULTS.append(line)
    print(line)
    if error is not None:
        raise error


def _table(domain, fn):
    return np.array([domain.encode(fn(*s)) for s in states(domain.n)])


def test_criterion_01_example_41_reproduction():
    with criterion(1, "Example 4.1 tables and probabilities", budget=1.0):
        D = psn.load_fixture("example_4_1.psn")
        ups = psn.enumerate_updates(D, [u.probability for u in D.updates])
        assert len(ups) == 8
        for u, name in zip(ups, EX41):
            assert np.array_equal(u.table, _table(D.domain, EX41[name])), name
        assert dict(zip(D.update_names, D.probabilities)) == EX41_P
        assert math.fsum(D.probabilities) == 1.0


def test_criterion_02_state_space():
    with criterion(2, "Example 4.1 state space", budget=1.0):
        D = psn.load_fixture("example_4_1.psn")
        T = transition_matrix(build_state_space(D), "dense").dense()
        assert np.max(np.abs(T.sum(axis=1) - 1.0)) <= 1e-9
        oracle = dense_from_dict(transition_dict(EX41, EX41_P, 3), 3)
        u = D.domain.encode((1, 1, 0))
        assert np.max(np.abs(T[u] - oracle[u])) <= 1e-12
        expected = {(1, 1, 1): .60, (0, 0, 0): .24, (0, 1, 1): .16}
        for v, p in expected.items():
            assert abs(T[u, D.domain.encode(v)] - p) <= 1e-12
        assert abs(T[u].sum() - sum(expected.values())) <= 1e-12


def test_criterion_03_morphism_verification():
    with criterion(3, "Examples 6.2 and 6.3 certificates") as st:
        t = time.perf_counter()
        c62 = certificate("example_6_2_F.psn", "example_6_2_G.psn", "maps_6_2.txt")
        t62 = time.perf_counter() - t
        assert c62.valid and c62.mu == {"f1": "g7", "f2": "g8"}
        steps = {s.vertex: s for s in c62.diagrams["f1"].steps}
        f1 = c62.source.update("f1")
        assert (f1.local(3).name, steps[3].block) == ("f31", ("g41",)) and steps[3].passed
        assert (f1.local(2).name, steps[2].block) == ("f21", ("g22", "g32")) and steps[2].passed
        assert (f1.local(1).name, steps[1].block) == ("f11", ("g12",)) and steps[1].passed
        assert all(d.passed for d in c62.diagrams.values())
        assert classify_morphism(c62).monomorphism
        t = time.perf_counter()
        c63 = certificate("example_6_2_G.psn", "example_6_2_F.psn", "maps_6_3.txt")
        t63 = time.perf_counter() - t
        assert c63.valid and c63.mu == {"g5": "f1", "g6": "f2", "g7": "f1", "g8": "f2"}
        assert classify_morphism(c63).epimorphism
        assert t62 < 1.0 and t63 < 1.0, f"{t62:.3f}s / {t63:.3f}s"
        st["detail"] = f"6.2 in {t62:.3f}s, 6.3 in {t63:.3f}s"


def test_criterion_04_epsilon_below_one():
    with criterion(4, "epsilon < 1 on every valid certificate", budget=30.0) as st:
        certs = [("fixture " + m, certificate(a, b, m)) for a, b, m in MAPS]
        certs += [("identity " + s, identity_morphism(psn.load_fixture(s))) for s in SPECS]
        for k, (kind, D1, D2, gm, vm) in enumerate(morphic_pairs()):
            certs.append((f"random #{k} ({kind})", check_psn_morphism(D1, D2, gm, vm)))
        valid = [(label, c) for label, c in certs if c.valid]
        assert len(valid) == len(certs)
        offenders = [(label, epsilon_bound(c)) for label, c in valid if not epsilon_bound(c) < 1.0]
        st["detail"] = (f"{len(valid)} certificates, {len(offenders)} with epsilon >= 1"
                        + (f", first {offenders[0][0]}" if offenders else ""))
        assert not offenders, st["detail"]


def test_criterion_05_equilibrium_measurement():
    with criterion(5, "equilibrium distance against naive powers") as st:
        cert = certificate("example_6_2_F.psn", "example_6_2_G.psn", "maps_6_2.txt")
        rep = equilibrium_distance(cert, m_max=200)
        T1 = transition_matrix(build_state_space(cert.source), "dense").dense().tolist()
        T2 = transition_matrix(build_state_space(cert.target), "dense").dense().tolist()
        H = cert.adjoint.table
        P1, P2 = T1, T2
        for m in range(1, 201):
            if m in rep.checkpoints:
                A, B = np.array(P1), np.array(P2)
                got_a, got_b = rep.checkpoint_powers[m]
                assert np.max(np.abs(got_a - A)) <= 1e-12, m
                assert np.max(np.abs(got_b - B)) <= 1e-12, m
                naive = max(abs(A[u, v] - B[H[u], H[v]]) for u in range(len(H)) for v in range(len(H)))
                assert abs(rep.checkpoints[m] - naive) <= 1e-12, m
            P1, P2 = naive_matmul(P1, T1), naive_matmul(P2, T2)
        assert sorted(rep.checkpoints) == [1, 2, 5, 10, 50, 100, 200]
        st["detail"] = f"D_200 = {rep.trajectory[-1]:.6g}, verdict {rep.verdict}"


def test_criterion_06_reverse_engineering():
    from psn.fileformat import parse_probabilities, parse_relations, parse_series
    with criterion(6, "reverse-engineering example", budget=1.0):
        rel, cards = parse_relations(fixture_text("reveng_3_1_relations.txt"))
        fams = [TimeSeriesFamily(n, s) for n, s in parse_series(fixture_text("reveng_3_1_series.txt"))]
        res = run_pipeline(rel, cards, fams, parse_probabilities(fixture_text("reveng_3_1_probs.txt")))
        d = res.domain
        one, x1, x2, x3 = np.ones(d.size, dtype=np.int64), d.digit(1), d.digit(2), d.digit(3)
        rules = [sorted(f.rule.tolist() for f in fam) for fam in res.families]
        assert rules[0] == sorted([one.tolist(), x1.tolist()])
        assert rules[1] == [x2.tolist()]
        assert rules[2] == [(x2 * (1 - x3)).tolist()]
        f1 = _table(d, lambda a, b, c: (a, b, b * (1 - c)))
        f2 = _table(d, lambda a, b, c: (1, b, b * (1 - c)))
        ups = res.psn.updates
        assert [u.table.tolist() for u in ups] == [f1.tolist(), f2.tolist()]
        assert [round(u.probability, 5) for u in ups] == [.66667, .33333]
        assert all(r["ok"] for r in res.replay.values()) and len(res.replay) == 2


def test_criterion_07_decomposition_equivalence():
    with criterion(7, "dependency criterion vs composition", budget=30.0) as st:
        instances = decomposition_instances()
        disagreements = [k for k, (d, t, a) in enumerate(instances)
                         if decompose_sequential(t, d, a).accepted != composition_matches(t, d, a)]
        accepted = sum(decompose_sequential(t, d, a).accepted for d, t, a in instances)
        st["detail"] = f"{len(instances)} instances, {accepted} accepted, {len(disagreements)} disagreements"
        assert not disagreements, st["detail"]


def test_criterion_08_category_laws():
    with criterion(8, "associativity, identities and F->G->F"):
        c62 = certificate("example_6_2_F.psn", "example_6_2_G.psn", "maps_6_2.txt")
        c63 = certificate("example_6_2_G.psn", "example_6_2_F.psn", "maps_6_3.txt")
        c42 = certificate("example_4_2.psn", "example_4_1.psn", "maps_4_2.txt")
        for c in (c62, c63, c42):
            assert compose_morphisms(identity_morphism(c.source), c).same_morphism(c)
            assert compose_morphisms(c, identity_morphism(c.target)).same_morphism(c)
        assert compose_morphisms(compose_morphisms(c62, c63), c62).same_morphism(
            compose_morphisms(c62, compose_morphisms(c63, c62)))
        assert compose_morphisms(compose_morphisms(c63, c62), c63).same_morphism(
            compose_morphisms(c63, compose_morphisms(c62, c63)))
        fgf = compose_morphisms(c62, c63)
        assert fgf.valid and fgf.mu == {"f1": "f1", "f2": "f2"}
        assert np.array_equal(fgf.adjoint.table, np.arange(8))


def test_criterion_09_steady_state():
    with criterion(9, "steady state vs linear solve") as st:
        worst_pi, worst_res = 0.0, 0.0
        for name in SPECS:
            net = psn.load_fixture(name)
            T = transition_matrix(build_state_space(net), "dense").dense()
            rep = steady_state_of(net)
            assert sorted(tuple(c.states.tolist()) for c in rep.classes) == \
                sorted(tuple(c) for c in closed_classes(T)), name
            for k, c in enumerate(rep.classes):
                P = T[np.ix_(c.states, c.states)]
                worst_pi = max(worst_pi, float(np.max(np.abs(c.pi - stationary_linear(P)))))
                full = rep.distribution(k)
                worst_res = max(worst_res, float(np.max(np.abs(full @ T - full))))
        st["detail"] = f"max |pi - oracle| = {worst_pi:.2e}, max |pi T - pi| = {worst_res:.2e}"
        assert worst_pi <= 1e-8 and worst_res <= 1e-10, st["detail"]


def test_criterion_10_format_round_trip():
    with criterion(10, "format round-trip and DOT grammar"):
        for name in SPECS:
            doc = parse_psn_spec(fixture_text(name))
            text = emit_document(doc)
            assert parse_psn_spec(text) == canonicalize(doc), name
            assert emit_document(parse_psn_spec(text)) == text, name
            dot = emit_dot(build_state_space(psn.validate_psn(doc)))
            graphs = pydot.graph_from_dot_data(dot)
            assert graphs and graphs[0].get_type() == "digraph", name
        for _, _, maps in MAPS:
            doc = parse_maps(fixture_text(maps))
            assert parse_maps(emit_maps(doc)) == doc, maps
