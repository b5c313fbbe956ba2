import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

import psn  # noqa: E402
from psn.fileformat import parse_maps  # noqa: E402
from psn.morphism import check_psn_morphism, maps_from_document  # noqa: E402


def fixture_text(name):
    with open(psn.fixture_path(name)) as fh:
        return fh.read()


def certificate(src, dst, maps, **kw):
    D1, D2 = psn.load_fixture(src), psn.load_fixture(dst)
    gm, vm, mu = maps_from_document(parse_maps(fixture_text(maps)), D1, D2)
    return check_psn_morphism(D1, D2, gm, vm, mu, **kw)


@pytest.fixture(scope="session")
def D41():
    return psn.load_fixture("example_4_1.psn")


@pytest.fixture(scope="session")
def B42():
    return psn.load_fixture("example_4_2.psn")


@pytest.fixture(scope="session")
def F62():
    return psn.load_fixture("example_6_2_F.psn")


@pytest.fixture(scope="session")
def G62():
    return psn.load_fixture("example_6_2_G.psn")


@pytest.fixture(scope="session")
def cert62():
    return certificate("example_6_2_F.psn", "example_6_2_G.psn", "maps_6_2.txt")


@pytest.fixture(scope="session")
def cert63():
    return certificate("example_6_2_G.psn", "example_6_2_F.psn", "maps_6_3.txt")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
