"""Core graph data types: statements, typed edges and the code context graph."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Iterable

from .errors import UnsupportedLanguage


class StatementKind(str, Enum):
    SIMPLE = "simple"
    PREDICATE = "predicate"
    DUMMY = "dummy"


class EdgeType(str, Enum):
    CF = "CF"
    CD = "CD"
    DD = "DD"


class Language(str, Enum):
    PYTHON = "python"
    JAVA = "java"

    @classmethod
    def parse(cls, value: "str | Language") -> "Language":
        if isinstance(value, Language):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise UnsupportedLanguage(f"unsupported language: {value!r}") from None


EXTENSIONS = {Language.PYTHON: (".py",), Language.JAVA: (".java",)}

_EDGE_ORDER = {EdgeType.CF: 0, EdgeType.CD: 1, EdgeType.DD: 2}

Edge = tuple[int, EdgeType, int]


def sort_edges(edges: Iterable[Edge]) -> list[Edge]:
    return sorted(set(edges), key=lambda e: (e[0], _EDGE_ORDER[e[1]], e[2]))


@dataclass(frozen=True)
class Statement:
    """One executable statement or predicate (a graph vertex)."""

    id: int
    file_path: str
    line_start: int
    line_end: int
    text: str
    kind: StatementKind
    tokens: tuple[str, ...] = ()
    defs: frozenset[str] = frozenset()
    uses: frozenset[str] = frozenset()

    @cached_property
    def token_set(self) -> frozenset[str]:
        return frozenset(self.tokens)

    @property
    def is_dummy(self) -> bool:
        return self.kind is StatementKind.DUMMY

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "file_path": self.file_path,
            "line_start": self.line_start,
            "line_end": self.line_end,
            "text": self.text,
            "kind": self.kind.value,
            "tokens": list(self.tokens),
            "defs": sorted(self.defs),
            "uses": sorted(self.uses),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Statement":
        return cls(
            id=int(d["id"]),
            file_path=d["file_path"],
            line_start=int(d["line_start"]),
            line_end=int(d["line_end"]),
            text=d["text"],
            kind=StatementKind(d["kind"]),
            tokens=tuple(d.get("tokens", ())),
            defs=frozenset(d.get("defs", ())),
            uses=frozenset(d.get("uses", ())),
        )


def dummy_statement(id: int, file_path: str, line: int) -> Statement:
    return Statement(id=id, file_path=file_path, line_start=line, line_end=line, text="", kind=StatementKind.DUMMY)


@dataclass(frozen=True)
class CodeContextGraph:
    """Directed multigraph over statements with CF/CD/DD edges.

    Edges are unique ``(src, type, dst)`` triples kept in a canonical order,
    so two graphs built from the same file compare equal.
    """

    vertices: tuple[Statement, ...]
    edges: tuple[Edge, ...]
    language: Language
    file_path: str = ""
    _by_id: dict[int, Statement] = field(default=None, init=False, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(sort_edges(self.edges)))
        object.__setattr__(self, "language", Language.parse(self.language))
        object.__setattr__(self, "_by_id", {v.id: v for v in self.vertices})
        for src, t, dst in self.edges:
            if src not in self._by_id or dst not in self._by_id:
                raise ValueError(f"edge ({src}, {t.value}, {dst}) references a missing vertex")

    def vertex(self, vid: int) -> Statement:
        return self._by_id[vid]

    def has_vertex(self, vid: int) -> bool:
        return vid in self._by_id

    @cached_property
    def _in_adj(self) -> dict[tuple[int, EdgeType], list[int]]:
        adj: dict[tuple[int, EdgeType], list[int]] = defaultdict(list)
        for src, t, dst in self.edges:
            adj[(dst, t)].append(src)
        return adj

    @cached_property
    def _out_adj(self) -> dict[tuple[int, EdgeType], list[int]]:
        adj: dict[tuple[int, EdgeType], list[int]] = defaultdict(list)
        for src, t, dst in self.edges:
            adj[(src, t)].append(dst)
        return adj

    def in_neighbors(self, vid: int, etype: EdgeType) -> list[int]:
        return self._in_adj.get((vid, etype), [])

    def out_neighbors(self, vid: int, etype: EdgeType) -> list[int]:
        return self._out_adj.get((vid, etype), [])

    def edges_of(self, etype: EdgeType) -> list[Edge]:
        return [e for e in self.edges if e[1] is etype]

    def with_extra(self, vertices: Iterable[Statement] = (), edges: Iterable[Edge] = ()) -> "CodeContextGraph":
        return CodeContextGraph(
            vertices=self.vertices + tuple(vertices),
            edges=self.edges + tuple(edges),
            language=self.language,
            file_path=self.file_path,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "file_path": self.file_path,
            "language": self.language.value,
            "vertices": [v.to_dict() for v in self.vertices],
            "edges": [[s, t.value, d] for s, t, d in self.edges],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CodeContextGraph":
        return cls(
            vertices=tuple(Statement.from_dict(v) for v in d["vertices"]),
            edges=tuple((int(s), EdgeType(t), int(dst)) for s, t, dst in d["edges"]),
            language=Language.parse(d["language"]),
            file_path=d.get("file_path", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CodeContextGraph":
        return cls.from_dict(json.loads(text))
