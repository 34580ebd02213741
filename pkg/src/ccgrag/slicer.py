"""Hop-bounded backward slicing of a code context graph.

A slice starts at an anchor statement, walks control flow backwards
breadth-first up to ``h`` hops, and pulls in the data and control
dependence parents of every statement it visits, stopping once ``l``
statements have been collected. The same slice shape serves as a database
key and, built around a placeholder for the line being completed, as the
query.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

from .ccg import build_ccg
from .errors import AnchorNotFound, EmptyContext, ParseFailure
from .graph import CodeContextGraph, Edge, EdgeType, Language, Statement, dummy_statement, sort_edges

DEFAULT_HOPS = 5
DEFAULT_MAX_STATEMENTS = 20


@dataclass(frozen=True)
class SliceVertex:
    statement: Statement
    hop: int
    # which of the three collections (CF walk, DD parents, CD parents) added it
    via_cf: bool = False
    via_dd: bool = False
    via_cd: bool = False

    @property
    def id(self) -> int:
        return self.statement.id


@dataclass(frozen=True)
class SequenceSlice:
    statements: tuple[Statement, ...]
    token_bag: frozenset[str]

    @property
    def text(self) -> str:
        return "\n".join(s.text for s in self.statements if not s.is_dummy)


@dataclass(frozen=True)
class CCGSlice:
    anchor_id: int
    vertices: tuple[SliceVertex, ...]
    edges: tuple[Edge, ...]
    h: int
    l: int
    file_path: str = ""
    _index: dict[int, SliceVertex] = field(default=None, init=False, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices, key=lambda v: v.id)))
        object.__setattr__(self, "edges", tuple(sort_edges(self.edges)))
        object.__setattr__(self, "_index", {v.id: v for v in self.vertices})

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, vid: object) -> bool:
        return vid in self._index

    @property
    def ids(self) -> list[int]:
        return [v.id for v in self.vertices]

    def vertex(self, vid: int) -> SliceVertex:
        return self._index[vid]

    def hop(self, vid: int) -> int:
        return self._index[vid].hop

    @property
    def anchor(self) -> SliceVertex:
        return self._index[self.anchor_id]

    @cached_property
    def edge_types(self) -> dict[tuple[int, int], frozenset[EdgeType]]:
        """Edge types present between each ordered vertex pair."""
        acc: dict[tuple[int, int], set[EdgeType]] = {}
        for s, t, d in self.edges:
            acc.setdefault((s, d), set()).add(t)
        return {k: frozenset(v) for k, v in acc.items()}

    @cached_property
    def nearest_first(self) -> tuple[SliceVertex, ...]:
        """Vertices by hop, then line, then id."""
        return tuple(sorted(self.vertices, key=lambda v: (v.hop, v.statement.line_start, v.id)))

    @cached_property
    def sequence(self) -> SequenceSlice:
        return sequence_slice(self)

    def to_dict(self) -> dict[str, Any]:
        return {
            "anchor_id": self.anchor_id,
            "h": self.h,
            "l": self.l,
            "vertices": [
                {
                    "id": v.id,
                    "line_start": v.statement.line_start,
                    "line_end": v.statement.line_end,
                    "text": v.statement.text,
                    "kind": v.statement.kind.value,
                    "defs": sorted(v.statement.defs),
                    "uses": sorted(v.statement.uses),
                    "hop": v.hop,
                    "via": "".join(c for c, f in zip("FDC", (v.via_cf, v.via_dd, v.via_cd)) if f),
                }
                for v in self.vertices
            ],
            "edges": [[s, t.value, d] for s, t, d in self.edges],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any], file_path: str = "", cache: dict | None = None) -> "CCGSlice":
        from .lexer import tokenize

        verts = []
        for v in d["vertices"]:
            key = (file_path, v["id"])
            stmt = cache.get(key) if cache is not None else None
            if stmt is None:
                stmt = Statement.from_dict({**v, "file_path": file_path, "tokens": tokenize(v["text"])})
                if cache is not None:
                    cache[key] = stmt
            via = v.get("via", "")
            verts.append(SliceVertex(stmt, int(v["hop"]), "F" in via, "D" in via, "C" in via))
        return cls(
            anchor_id=int(d["anchor_id"]),
            vertices=tuple(verts),
            edges=tuple((int(s), EdgeType(t), int(e)) for s, t, e in d["edges"]),
            h=int(d["h"]),
            l=int(d["l"]),
            file_path=file_path,
        )


def slice(
    graph: CodeContextGraph,
    anchor_id: int,
    h: int = DEFAULT_HOPS,
    l: int = DEFAULT_MAX_STATEMENTS,
    dependence_hop_offset: int = 0,
) -> CCGSlice:
    """Breadth-first backward slice around ``anchor_id``.

    Dependence parents take the hop of the statement that pulled them in,
    plus ``dependence_hop_offset``. A statement reached several ways keeps
    its smallest hop.
    """
    if not graph.has_vertex(anchor_id):
        raise AnchorNotFound(f"statement {anchor_id} not in graph {graph.file_path!r}")
    if h < 0 or l < 1:
        raise ValueError("need h >= 0 and l >= 1")
    hops: dict[int, int] = {}
    flags: dict[int, list[bool]] = {}

    def add(vid: int, hop: int, slot: int) -> None:
        if vid not in hops or hop < hops[vid]:
            hops[vid] = hop
        flags.setdefault(vid, [False, False, False])[slot] = True

    in_cf: set[int] = set()
    queue: deque[tuple[int, int]] = deque([(anchor_id, 0)])
    visited = {anchor_id}
    while queue:
        x, hop = queue.popleft()
        if hop > h:
            break
        in_cf.add(x)
        add(x, hop, 0)
        for z in graph.in_neighbors(x, EdgeType.DD):
            add(z, hop + dependence_hop_offset, 1)
        for z in graph.in_neighbors(x, EdgeType.CD):
            add(z, hop + dependence_hop_offset, 2)
        if len(hops) >= l:
            break
        for z in sorted(graph.in_neighbors(x, EdgeType.CF)):
            if z not in in_cf and z not in visited:
                visited.add(z)
                queue.append((z, hop + 1))
    keep = set(hops)
    edges = [e for e in graph.edges if e[0] in keep and e[2] in keep]
    verts = [SliceVertex(graph.vertex(v), hops[v], *flags[v]) for v in keep]
    return CCGSlice(anchor_id=anchor_id, vertices=tuple(verts), edges=tuple(edges), h=h, l=l, file_path=graph.file_path)


def sequence_slice(s: CCGSlice) -> SequenceSlice:
    stmts = tuple(sorted((v.statement for v in s.vertices), key=lambda st: (st.line_start, st.id)))
    bag: frozenset[str] = frozenset().union(*(st.token_set for st in stmts)) if stmts else frozenset()
    return SequenceSlice(statements=stmts, token_bag=bag)


def add_query_vertex(graph: CodeContextGraph) -> tuple[CodeContextGraph, int]:
    """Append the placeholder for the next statement after the last one."""
    if not graph.vertices:
        raise EmptyContext("no statement could be extracted from the context")
    last = max(graph.vertices, key=lambda v: v.id)
    line = max(v.line_end for v in graph.vertices) + 1
    dummy = dummy_statement(len(graph.vertices), graph.file_path, line)
    return graph.with_extra([dummy], [(last.id, EdgeType.CF, dummy.id)]), dummy.id


def query_ccg(
    context_text: str,
    language: str | Language,
    h: int = DEFAULT_HOPS,
    l: int = DEFAULT_MAX_STATEMENTS,
    file_path: str = "",
) -> CCGSlice:
    """Slice of the context's graph around a placeholder for the next line."""
    try:
        graph = build_ccg(file_path, context_text, language)
    except ParseFailure as exc:
        raise EmptyContext(str(exc)) from exc
    graph, anchor = add_query_vertex(graph)
    return slice(graph, anchor, h, l)
