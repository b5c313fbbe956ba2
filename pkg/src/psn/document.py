"""Syntax-level records for PSN spec files (before validation)."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class RuleDecl:
    """A named local rule for one vertex.

    ``kind`` is ``"expr"`` (new value of the vertex), ``"tuple"`` (the whole
    image vector, one expression per vertex) or ``"table"`` (rows over the
    vertex neighbourhood in ascending vertex order).
    """

    name: str
    kind: str
    exprs: tuple = ()
    rows: tuple = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class UpdateDecl:
    """A selected update function: a schedule plus one rule name per vertex,
    or a raw table (``schedule is None``) given as ``(state, image)`` rows."""

    name: str
    probability: float
    schedule: str | None = None
    selection: tuple | None = None
    rows: tuple = ()
    line: int = field(default=0, compare=False)

    @property
    def is_raw(self) -> bool:
        return self.selection is None


@dataclass(frozen=True)
class SpecDocument:
    vertices: int
    cardinalities: tuple
    edges: tuple = ()
    families: tuple = ()  # ((vertex, (RuleDecl, ...)), ...)
    schedules: tuple = ()  # ((name, order), ...)
    updates: tuple = ()
    line: int = field(default=0, compare=False)

    def family(self, vertex: int) -> tuple:
        for v, rules in self.families:
            if v == vertex:
                return rules
        return ()
