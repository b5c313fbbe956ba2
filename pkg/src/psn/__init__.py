"""Probabilistic sequential networks (PSN).

Build networks from spec files or time series, compute their weighted state
spaces and Markov-chain behaviour, and verify morphisms between them.
"""
from importlib import resources

from .core import (
    PSN,
    GraphSpec,
    LocalFamily,
    LocalFunction,
    Schedule,
    StateDomain,
    UpdateFunction,
    ValidationError,
    compose_update,
    enumerate_updates,
    full_psn,
    identity_psn,
    validate_psn,
)
from .expr import ParseError, parse_expression
from .fileformat import emit_psn_spec, load_psn, parse_psn_spec
from .kernels import BACKEND

__version__ = "0.1.0"


def fixture_path(name: str) -> str:
    """Path of a shipped example file (e.g. ``"example_4_1.psn"``)."""
    return str(resources.files(__name__).joinpath("fixtures", name))


def load_fixture(name: str):
    return load_psn(fixture_path(name))
