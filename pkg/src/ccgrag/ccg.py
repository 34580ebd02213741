"""Build code context graphs: statements plus CF, CD and DD edge layers.

Control flow is derived from the language-neutral skeleton produced by the
adapters in :mod:`ccgrag.lang`. Control dependence comes from post-dominance
on that flow graph, and data dependence from a reaching-definitions fixpoint.
Graphs are per file; each function body is its own flow region entered from
the function's header statement.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx

from .errors import ParseFailure
from .graph import CodeContextGraph, Edge, EdgeType, Language, Statement, StatementKind
from .lang import get_adapter
from .lang.base import Block, Def, If, Loop, Node, Simple, Switch, Try
from .lexer import tokenize

_EXIT = -1


def read_source(path: str | Path) -> str:
    """Read a file as UTF-8, replacing undecodable bytes."""
    return Path(path).read_bytes().decode("utf-8", errors="replace")


def parse_statements(
    source_text: str, language: str | Language, file_path: str = ""
) -> tuple[list[Statement], list[Node]]:
    """Statements in source order plus the skeleton tree they were read from."""
    lang = Language.parse(language)
    parsed = get_adapter(lang).parse(source_text)
    if not parsed.infos and parsed.masked_lines:
        raise ParseFailure(f"{file_path or '<source>'}: no statements could be recovered")
    infos = sorted(parsed.infos, key=lambda i: i.sort_key)
    stmts = []
    for vid, info in enumerate(infos):
        info.vid = vid
        stmts.append(
            Statement(
                id=vid,
                file_path=file_path,
                line_start=info.line_start,
                line_end=info.line_end,
                text=info.text,
                kind=info.kind,
                tokens=tuple(tokenize(info.text)),
                defs=frozenset(info.defs),
                uses=frozenset(info.uses),
            )
        )
    return stmts, parsed.tree


def extract_statements(source_text: str, language: str | Language, file_path: str = "") -> list[Statement]:
    return parse_statements(source_text, language, file_path)[0]


@dataclass
class ControlFlow:
    """CF edges plus the bookkeeping the CD and DD layers need.

    ``def_entries`` are header-to-body edges of functions; ``exceptional``
    are try-body-to-handler edges; ``handler_entries`` are the pseudo edges
    (try entry predecessor to handler head) used instead of exceptional edges
    when computing control dependence.
    """

    n: int
    pairs: set[tuple[int, int]] = field(default_factory=set)
    def_entries: set[tuple[int, int]] = field(default_factory=set)
    exceptional: set[tuple[int, int]] = field(default_factory=set)
    handler_entries: set[tuple[int, int]] = field(default_factory=set)
    inner_defs: dict[int, frozenset[str]] = field(default_factory=dict)
    # statements that fall off the end of the file or of a function body
    region_exits: set[int] = field(default_factory=set)

    @property
    def edges(self) -> list[Edge]:
        return [(s, EdgeType.CF, d) for s, d in sorted(self.pairs)]


@dataclass
class _Frame:
    kind: str  # "loop" | "switch" | "block"
    label: str | None
    breaks: list[int] = field(default_factory=list)
    continues: list[int] = field(default_factory=list)


def _flow_vids(nodes: list[Node] | None) -> list[int]:
    """Vertex ids in a subtree, not descending into function bodies."""
    out: list[int] = []
    for n in nodes or ():
        if isinstance(n, Simple):
            out.append(n.info.vid)
        elif isinstance(n, Def):
            out.append(n.header.vid)
        elif isinstance(n, If):
            out += [n.header.vid] + _flow_vids(n.then) + _flow_vids(n.orelse)
        elif isinstance(n, Loop):
            out += [n.header.vid] + _flow_vids(n.body) + _flow_vids(n.orelse)
        elif isinstance(n, Try):
            if n.header:
                out.append(n.header.vid)
            out += _flow_vids(n.body)
            for h in n.handlers:
                out += [h.head.vid] + _flow_vids(h.body)
            out += _flow_vids(n.orelse) + _flow_vids(n.finalbody)
        elif isinstance(n, Switch):
            out.append(n.header.vid)
            for c in n.cases:
                if c.head:
                    out.append(c.head.vid)
                out += _flow_vids(c.body)
        elif isinstance(n, Block):
            if n.header:
                out.append(n.header.vid)
            out += _flow_vids(n.body)
    return out


class _FlowBuilder:
    def __init__(self, n: int) -> None:
        self.flow = ControlFlow(n=n)
        self.frames: list[_Frame] = []

    def link(self, preds: list[int], v: int) -> None:
        for p in preds:
            if p != v:
                self.flow.pairs.add((p, v))

    def seq(self, nodes: list[Node] | None, preds: list[int]) -> list[int]:
        for node in nodes or ():
            preds = self.node(node, preds)
        return preds

    def _find(self, jump: str, target: str | None) -> _Frame | None:
        for f in reversed(self.frames):
            if target is not None:
                if f.label == target:
                    return f
            elif jump == "continue" and f.kind == "loop":
                return f
            elif jump == "break" and f.kind in ("loop", "switch"):
                return f
        return None

    def node(self, n: Node, preds: list[int]) -> list[int]:
        if isinstance(n, Simple):
            v = n.info.vid
            self.link(preds, v)
            if n.jump in ("break", "continue"):
                frame = self._find(n.jump, n.target)
                if frame is None:
                    return [v]
                (frame.breaks if n.jump == "break" else frame.continues).append(v)
                return []
            if n.jump in ("return", "raise"):
                return []
            return [v]
        if isinstance(n, If):
            h = n.header.vid
            self.link(preds, h)
            then_exits = self.seq(n.then, [h])
            else_exits = self.seq(n.orelse, [h]) if n.orelse else [h]
            return then_exits + else_exits
        if isinstance(n, Loop):
            return self._loop(n, preds)
        if isinstance(n, Try):
            return self._try(n, preds)
        if isinstance(n, Switch):
            return self._chained(n, preds) if n.chained else self._switch(n, preds)
        if isinstance(n, Def):
            h = n.header.vid
            self.link(preds, h)
            self.flow.inner_defs[h] = frozenset(n.header.inner_defs)
            saved, self.frames = self.frames, []
            before = set(self.flow.pairs)
            body_exits = self.seq(n.body, [h])
            self.frames = saved
            if n.body:
                self.flow.region_exits.update(body_exits)
            self.flow.def_entries |= {(s, d) for s, d in self.flow.pairs - before if s == h}
            return [h]
        if isinstance(n, Block):
            if n.header is not None:
                self.link(preds, n.header.vid)
                preds = [n.header.vid]
            if n.label is None:
                return self.seq(n.body, preds)
            frame = _Frame("block", n.label)
            self.frames.append(frame)
            exits = self.seq(n.body, preds)
            self.frames.pop()
            return exits + frame.breaks
        raise TypeError(f"unknown skeleton node {type(n).__name__}")

    def _loop(self, n: Loop, preds: list[int]) -> list[int]:
        h = n.header.vid
        frame = _Frame("loop", n.label)
        self.frames.append(frame)
        if n.post_test:
            body_exits = self.seq(n.body, preds + [h])
            if not n.body:
                self.link(preds, h)
        else:
            self.link(preds, h)
            body_exits = self.seq(n.body, [h])
        self.frames.pop()
        self.link(body_exits + frame.continues, h)
        exits = self.seq(n.orelse, [h]) if n.orelse else [h]
        return exits + frame.breaks

    def _try(self, n: Try, preds: list[int]) -> list[int]:
        entry_preds = list(preds)
        frame = None
        if n.label is not None:
            frame = _Frame("block", n.label)
            self.frames.append(frame)
        if n.header is not None:
            self.link(preds, n.header.vid)
            preds = [n.header.vid]
        body_exits = self.seq(n.body, preds)
        guarded = ([n.header.vid] if n.header is not None else []) + _flow_vids(n.body)
        exits = self.seq(n.orelse, body_exits) if n.orelse else body_exits
        for handler in n.handlers:
            head = handler.head.vid
            for v in guarded:
                if v != head:
                    self.flow.pairs.add((v, head))
                    self.flow.exceptional.add((v, head))
            for p in entry_preds:
                if p != head:
                    self.flow.handler_entries.add((p, head))
            exits = exits + self.seq(handler.body, [head])
        if n.finalbody:
            exits = self.seq(n.finalbody, exits)
        if frame is not None:
            self.frames.pop()
            exits = exits + frame.breaks
        return exits

    def _switch(self, n: Switch, preds: list[int]) -> list[int]:
        h = n.header.vid
        self.link(preds, h)
        frame = _Frame("switch", n.label)
        self.frames.append(frame)
        exits: list[int] = []
        fall: list[int] = []
        has_default = False
        for case in n.cases:
            has_default = has_default or case.is_default
            case_exits = self.seq(case.body, [h] + fall)
            if case.fallthrough:
                fall = case_exits
            else:
                exits += case_exits
                fall = []
        self.frames.pop()
        exits += fall + frame.breaks
        if not has_default:
            exits.append(h)
        return list(dict.fromkeys(exits))

    def _chained(self, n: Switch, preds: list[int]) -> list[int]:
        h = n.header.vid
        self.link(preds, h)
        test = [h]
        exits: list[int] = []
        for case in n.cases:
            if case.head is None:
                exits += self.seq(case.body, test)
                test = []
                continue
            self.link(test, case.head.vid)
            exits += self.seq(case.body, [case.head.vid])
            test = [] if case.is_default else [case.head.vid]
        return exits + test


def build_cfg(statements: list[Statement], tree: list[Node]) -> ControlFlow:
    """Control flow over ``statements``; ``tree`` is the skeleton they came from."""
    builder = _FlowBuilder(len(statements))
    builder.flow.region_exits.update(builder.seq(tree, []))
    return builder.flow


def _post_dominators(succ: dict[int, set[int]], nodes: list[int]) -> dict[int, int]:
    g = nx.DiGraph()
    g.add_node(_EXIT)
    for v in nodes:
        g.add_node(v)
        targets = succ.get(v) or {_EXIT}
        for w in targets:
            g.add_edge(w, v)  # reversed
    idom = nx.immediate_dominators(g, _EXIT)
    return {v: d for v, d in idom.items() if v != _EXIT}


def build_cdg(flow: ControlFlow, statements: list[Statement]) -> list[Edge]:
    """Control dependence edges via post-dominance with a virtual exit.

    Exceptional edges are replaced by entry pseudo edges and function entry
    edges are cut, so neither an implicit exception nor a nested function
    body makes ordinary statements look conditionally executed.
    """
    pairs = (flow.pairs - flow.exceptional - flow.def_entries) | flow.handler_entries
    pairs |= {(v, _EXIT) for v in flow.region_exits}
    succ: dict[int, set[int]] = defaultdict(set)
    for s, d in pairs:
        succ[s].add(d)
    ipdom = _post_dominators(succ, [s.id for s in statements])
    edges: set[Edge] = set()
    for a, b in pairs:
        if statements[a].kind is not StatementKind.PREDICATE:
            continue
        stop = ipdom.get(a, _EXIT)
        runner = b
        while runner != stop and runner != _EXIT and runner in ipdom:
            if runner != a:
                edges.add((a, EdgeType.CD, runner))
            runner = ipdom[runner]
    return sorted(edges)


def build_ddg(statements: list[Statement], flow: ControlFlow) -> list[Edge]:
    """Data dependence edges from a reaching-definitions fixpoint over CF."""
    n = len(statements)
    preds: dict[int, list[int]] = defaultdict(list)
    succs: dict[int, list[int]] = defaultdict(list)
    for s, d in flow.pairs:
        preds[d].append(s)
        succs[s].append(d)
    gen = [frozenset((s.id, v) for v in s.defs) for s in statements]
    killed = [s.defs for s in statements]
    # a function header's parameters only reach its own body
    outer_gen = {
        h: frozenset((h, v) for v in statements[h].defs - inner) for h, inner in flow.inner_defs.items()
    }
    outer_killed = {h: statements[h].defs - inner for h, inner in flow.inner_defs.items()}
    out: list[frozenset[tuple[int, str]]] = [frozenset()] * n
    out_outer: dict[int, frozenset[tuple[int, str]]] = {h: frozenset() for h in flow.inner_defs}

    def reaching(u: int) -> set[tuple[int, str]]:
        acc: set[tuple[int, str]] = set()
        for p in preds[u]:
            if p in out_outer and (p, u) not in flow.def_entries:
                acc |= out_outer[p]
            else:
                acc |= out[p]
        return acc

    work = deque(range(n))
    queued = [True] * n
    while work:
        u = work.popleft()
        queued[u] = False
        inn = reaching(u)
        new = gen[u] | {d for d in inn if d[1] not in killed[u]}
        changed = new != out[u]
        out[u] = frozenset(new)
        if u in out_outer:
            new_outer = outer_gen[u] | {d for d in inn if d[1] not in outer_killed[u]}
            if new_outer != out_outer[u]:
                out_outer[u] = frozenset(new_outer)
                changed = True
        if changed:
            for w in succs[u]:
                if not queued[w]:
                    queued[w] = True
                    work.append(w)
    edges: set[Edge] = set()
    for s in statements:
        if not s.uses:
            continue
        for d, var in reaching(s.id):
            if var in s.uses and d != s.id:
                edges.add((d, EdgeType.DD, s.id))
    return sorted(edges)


def build_ccg(file_path: str, source_text: str, language: str | Language) -> CodeContextGraph:
    statements, tree = parse_statements(source_text, language, file_path)
    flow = build_cfg(statements, tree)
    edges = flow.edges + build_cdg(flow, statements) + build_ddg(statements, flow)
    return CodeContextGraph(vertices=tuple(statements), edges=tuple(edges), language=language, file_path=file_path)


def build_ccg_from_file(path: str | Path, root: str | Path | None = None, language: str | Language | None = None) -> CodeContextGraph:
    """Read and build one file; ``file_path`` is made relative to ``root``."""
    p = Path(path)
    rel = p.relative_to(root).as_posix() if root is not None else p.as_posix()
    if language is None:
        language = Language.JAVA if p.suffix == ".java" else Language.PYTHON
    return build_ccg(rel, read_source(p), language)
