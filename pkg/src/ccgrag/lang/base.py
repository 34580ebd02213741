"""Language-neutral statement skeleton produced by the per-language adapters.

An adapter turns source text into a tree of the node classes below. Each
node that owns a vertex carries a :class:`StmtInfo`; structural wrappers such
as ``else`` or ``try`` carry none. The control-flow builder only ever sees
this skeleton, so supporting another language means writing one more
adapter that emits it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Union

from ..graph import StatementKind


@dataclass
class StmtInfo:
    line_start: int
    line_end: int
    col: int
    text: str
    kind: StatementKind = StatementKind.SIMPLE
    defs: set[str] = field(default_factory=set)
    uses: set[str] = field(default_factory=set)
    # names defined for the nested body only (function parameters); they do
    # not flow to the statement's successors in the enclosing scope
    inner_defs: set[str] = field(default_factory=set)
    vid: int = -1

    @property
    def sort_key(self) -> tuple[int, int]:
        return (self.line_start, self.col)


@dataclass
class Simple:
    info: StmtInfo
    jump: str | None = None  # "break" | "continue" | "return" | "raise"
    target: str | None = None  # label for labeled break/continue


@dataclass
class If:
    header: StmtInfo
    then: list["Node"]
    orelse: list["Node"] | None = None


@dataclass
class Loop:
    header: StmtInfo
    body: list["Node"]
    orelse: list["Node"] | None = None
    post_test: bool = False  # do-while: header is evaluated after the body
    label: str | None = None


@dataclass
class Handler:
    head: StmtInfo
    body: list["Node"]


@dataclass
class Try:
    body: list["Node"]
    handlers: list[Handler] = field(default_factory=list)
    orelse: list["Node"] | None = None
    finalbody: list["Node"] | None = None
    header: StmtInfo | None = None  # Java try-with-resources
    label: str | None = None


@dataclass
class Case:
    body: list["Node"]
    head: StmtInfo | None = None  # Python match-case patterns own a vertex
    is_default: bool = False
    fallthrough: bool = True  # classic Java switch groups fall through


@dataclass
class Switch:
    header: StmtInfo
    cases: list[Case]
    chained: bool = False  # Python match: cases are tested one after another
    label: str | None = None


@dataclass
class Def:
    """Function/method: header sits in the enclosing flow, body is its own CFG."""

    header: StmtInfo
    body: list["Node"]


@dataclass
class Block:
    """Inline block with optional header (class, with, synchronized, ``{}``)."""

    body: list["Node"]
    header: StmtInfo | None = None
    label: str | None = None


Node = Union[Simple, If, Loop, Try, Switch, Def, Block]


@dataclass
class ParsedSource:
    tree: list[Node]
    infos: list[StmtInfo]
    masked_lines: set[int] = field(default_factory=set)


class LanguageAdapter(Protocol):
    name: str

    def parse(self, source: str) -> ParsedSource: ...

    def defined_callables(self, source: str) -> set[str]: ...

    def comment_prefix(self) -> str: ...


def iter_infos(nodes: list[Node]) -> list[StmtInfo]:
    """All vertex infos in a subtree (pre-order)."""
    out: list[StmtInfo] = []

    def visit(ns: list[Node] | None) -> None:
        for n in ns or ():
            if isinstance(n, Simple):
                out.append(n.info)
            elif isinstance(n, If):
                out.append(n.header)
                visit(n.then)
                visit(n.orelse)
            elif isinstance(n, Loop):
                out.append(n.header)
                visit(n.body)
                visit(n.orelse)
            elif isinstance(n, Try):
                if n.header:
                    out.append(n.header)
                visit(n.body)
                for h in n.handlers:
                    out.append(h.head)
                    visit(h.body)
                visit(n.orelse)
                visit(n.finalbody)
            elif isinstance(n, Switch):
                out.append(n.header)
                for c in n.cases:
                    if c.head:
                        out.append(c.head)
                    visit(c.body)
            elif isinstance(n, Def):
                out.append(n.header)
                visit(n.body)
            elif isinstance(n, Block):
                if n.header:
                    out.append(n.header)
                visit(n.body)

    visit(nodes)
    return out
