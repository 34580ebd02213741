"""Python adapter built on the standard library ``ast`` module."""

from __future__ import annotations

import ast
import bisect
import io
import re
import tokenize
from dataclasses import dataclass, field

from ..graph import StatementKind
from .base import (
    Block,
    Case,
    Def,
    Handler,
    If,
    Loop,
    Node,
    ParsedSource,
    Simple,
    StmtInfo,
    Switch,
    Try,
)

_MAX_REPAIRS = 400
_BLOCK_AFTER_RE = re.compile(r"expected an indented block after .* on line (\d+)")

def _indent_of(line: str) -> str:
    return line[: len(line) - len(line.lstrip())]


def _open_try(lines: list[str], before: int) -> int | None:
    """Line number of the nearest ``try:`` header at or above ``before``."""
    for i in range(before, 0, -1):
        if lines[i - 1].strip().startswith("try:"):
            return i
    return None


@dataclass
class Recovered:
    tree: ast.Module | None
    lines: list[str]
    masked: set[int]
    n_orig: int
    # line -> original length, for header lines that had " pass" glued on
    patched: dict[int, int] = field(default_factory=dict)


def parse_with_recovery(source: str) -> Recovered:
    """Parse ``source``, patching syntax errors until the rest parses.

    Lines that cannot be salvaged are blanked so line numbers survive;
    headers left without a body get a ``pass`` glued onto the header line or
    appended after the end of the text. Anything the patches introduce is
    reported so callers can drop it.
    """
    lines = source.splitlines()
    rec = Recovered(tree=None, lines=lines, masked=set(), n_orig=len(lines))
    for _ in range(_MAX_REPAIRS):
        try:
            rec.tree = ast.parse("\n".join(lines) + "\n")
            return rec
        except SyntaxError as exc:
            msg = exc.msg or ""
            lineno = exc.lineno or len(lines)
            m = _BLOCK_AFTER_RE.search(msg)
            target = lineno
            if m:
                header = int(m.group(1))
                last_code = max((i + 1 for i, ln in enumerate(lines) if ln.strip()), default=0)
                if lineno <= header or lineno > last_code:
                    lines.append(_indent_of(lines[header - 1]) + "    pass")
                    continue
                prev = lines[lineno - 2]
                if prev.rstrip().endswith(":") and (lineno - 1) not in rec.patched:
                    rec.patched[lineno - 1] = len(prev.rstrip())
                    lines[lineno - 2] = prev.rstrip() + " pass"
                    continue
                target = header
            elif msg.startswith("expected 'except' or 'finally' block"):
                head = _open_try(lines, min(lineno, len(lines)))
                if head is not None:
                    indent = _indent_of(lines[head - 1])
                    tail = [ln for ln in lines[head:] if ln.strip()]
                    if all(len(_indent_of(ln)) > len(indent) for ln in tail):
                        # truncated inside a try body: close it after the end
                        lines += [indent + "finally:", indent + "    pass"]
                        continue
                    target = head
            if not lines:
                return rec
            target = min(max(target, 1), len(lines))
            if not lines[target - 1].strip():
                code = [i + 1 for i, ln in enumerate(lines) if ln.strip()]
                if not code:
                    return rec
                target = code[-1]
            lines[target - 1] = ""
            rec.masked.add(target)
            rec.patched.pop(target, None)
    return rec


class _DefUse(ast.NodeVisitor):
    """Collect names written (defs) and read (uses) by one statement fragment."""

    def __init__(self) -> None:
        self.defs: set[str] = set()
        self.uses: set[str] = set()
        self._bound: list[set[str]] = []

    def _is_bound(self, name: str) -> bool:
        return any(name in b for b in self._bound)

    def use(self, name: str) -> None:
        if not self._is_bound(name):
            self.uses.add(name)

    def visit_Name(self, node: ast.Name) -> None:
        if isinstance(node.ctx, ast.Store):
            if not self._is_bound(node.id):
                self.defs.add(node.id)
        else:
            self.use(node.id)

    def store_target(self, node: ast.AST, also_use: bool = False) -> None:
        """Record an assignment target; attribute/subscript writes define the base name."""
        if isinstance(node, ast.Name):
            self.defs.add(node.id)
            if also_use:
                self.use(node.id)
        elif isinstance(node, (ast.Tuple, ast.List)):
            for elt in node.elts:
                self.store_target(elt, also_use)
        elif isinstance(node, ast.Starred):
            self.store_target(node.value, also_use)
        elif isinstance(node, ast.Attribute):
            self.store_target(node.value, also_use)
        elif isinstance(node, ast.Subscript):
            self.visit(node.slice)
            self.store_target(node.value, also_use)
        else:
            self.visit(node)

    def visit_Attribute(self, node: ast.Attribute) -> None:
        if isinstance(node.ctx, ast.Store):
            self.store_target(node)
        else:
            self.visit(node.value)

    def visit_Subscript(self, node: ast.Subscript) -> None:
        if isinstance(node.ctx, ast.Store):
            self.store_target(node)
        else:
            self.visit(node.value)
            self.visit(node.slice)

    def visit_NamedExpr(self, node: ast.NamedExpr) -> None:
        self.visit(node.value)
        self.store_target(node.target)

    def visit_Lambda(self, node: ast.Lambda) -> None:
        for d in node.args.defaults + [d for d in node.args.kw_defaults if d is not None]:
            self.visit(d)
        self._bound.append(_arg_names(node.args))
        self.visit(node.body)
        self._bound.pop()

    def _comprehension(self, node: ast.AST, elts: list[ast.AST]) -> None:
        gens: list[ast.comprehension] = node.generators  # type: ignore[attr-defined]
        self.visit(gens[0].iter)
        bound: set[str] = set()
        for g in gens:
            bound |= _target_names(g.target)
        self._bound.append(bound)
        for i, g in enumerate(gens):
            if i:
                self.visit(g.iter)
            for cond in g.ifs:
                self.visit(cond)
        for e in elts:
            self.visit(e)
        self._bound.pop()

    def visit_ListComp(self, node: ast.ListComp) -> None:
        self._comprehension(node, [node.elt])

    visit_SetComp = visit_ListComp  # type: ignore[assignment]
    visit_GeneratorExp = visit_ListComp  # type: ignore[assignment]

    def visit_DictComp(self, node: ast.DictComp) -> None:
        self._comprehension(node, [node.key, node.value])

    # patterns (match statements)
    def visit_MatchAs(self, node: ast.MatchAs) -> None:
        if node.pattern is not None:
            self.visit(node.pattern)
        if node.name:
            self.defs.add(node.name)

    def visit_MatchStar(self, node: ast.MatchStar) -> None:
        if node.name:
            self.defs.add(node.name)

    def visit_MatchMapping(self, node: ast.MatchMapping) -> None:
        self.generic_visit(node)
        if node.rest:
            self.defs.add(node.rest)


def _target_names(node: ast.AST) -> set[str]:
    return {n.id for n in ast.walk(node) if isinstance(n, ast.Name)}


def _arg_names(args: ast.arguments) -> set[str]:
    names = {a.arg for a in args.posonlyargs + args.args + args.kwonlyargs}
    if args.vararg:
        names.add(args.vararg.arg)
    if args.kwarg:
        names.add(args.kwarg.arg)
    return names


def _is_string_expr(node: ast.stmt) -> bool:
    return isinstance(node, ast.Expr) and isinstance(node.value, ast.Constant) and isinstance(node.value.value, str)


class _Converter:
    def __init__(self, rec: Recovered, colons: list[tuple[int, int]]) -> None:
        self.lines = rec.lines
        self.n_orig = rec.n_orig
        self.patched = rec.patched
        self.colons = colons
        self.infos: list[StmtInfo] = []

    # -- positions -----------------------------------------------------
    def _char_col(self, line: int, byte_col: int) -> int:
        text = self.lines[line - 1] if 0 < line <= len(self.lines) else ""
        if text.isascii():
            return byte_col
        return len(text.encode("utf-8")[:byte_col].decode("utf-8", errors="replace"))

    def _text(self, l1: int, c1: int, l2: int, c2: int) -> str:
        """Source between two character positions (end exclusive)."""
        if l1 == l2:
            return self.lines[l1 - 1][c1:c2]
        return "\n".join([self.lines[l1 - 1][c1:]] + self.lines[l1 : l2 - 1] + [self.lines[l2 - 1][:c2]])

    def _synthetic(self, s: ast.stmt) -> bool:
        if s.lineno > self.n_orig:
            return True
        orig_len = self.patched.get(s.lineno)
        return orig_len is not None and self._char_col(s.lineno, s.col_offset) >= orig_len

    def _header_end(self, line: int, col: int) -> tuple[int, int]:
        i = bisect.bisect_left(self.colons, (line, col))
        if i < len(self.colons):
            return self.colons[i]
        return (line, len(self.lines[line - 1]) - 1)

    def _make(self, l1: int, c1: int, l2: int, c2: int, kind: StatementKind, du: _DefUse) -> StmtInfo:
        info = StmtInfo(
            line_start=l1,
            line_end=l2,
            col=c1,
            text=self._text(l1, c1, l2, c2),
            kind=kind,
            defs=set(du.defs),
            uses=set(du.uses),
        )
        self.infos.append(info)
        return info

    def _info(self, node: ast.AST, kind: StatementKind, header: bool, du: _DefUse) -> StmtInfo:
        l1 = node.lineno  # type: ignore[attr-defined]
        c1 = self._char_col(l1, node.col_offset)  # type: ignore[attr-defined]
        if header:
            l2, colon = self._header_end(l1, c1)
            return self._make(l1, c1, l2, colon + 1, kind, du)
        l2 = node.end_lineno or l1  # type: ignore[attr-defined]
        c2 = self._char_col(l2, node.end_col_offset)  # type: ignore[attr-defined]
        return self._make(l1, c1, l2, c2, kind, du)

    # -- statements ----------------------------------------------------
    def block(self, stmts: list[ast.stmt]) -> list[Node]:
        out: list[Node] = []
        for s in stmts:
            if _is_string_expr(s):
                continue
            if self._synthetic(s):
                continue
            node = self.stmt(s)
            if node is not None:
                out.append(node)
        return out

    def stmt(self, s: ast.stmt) -> Node | None:
        P, S = StatementKind.PREDICATE, StatementKind.SIMPLE
        if isinstance(s, (ast.FunctionDef, ast.AsyncFunctionDef)):
            du = _DefUse()
            for d in s.decorator_list:
                du.visit(d)
            a = s.args
            for d in a.defaults + [d for d in a.kw_defaults if d is not None]:
                du.visit(d)
            for arg in a.posonlyargs + a.args + a.kwonlyargs + [x for x in (a.vararg, a.kwarg) if x]:
                if arg.annotation is not None:
                    du.visit(arg.annotation)
            if s.returns is not None:
                du.visit(s.returns)
            params = _arg_names(a)
            du.defs |= params | {s.name}
            info = self._info(s, S, True, du)
            info.inner_defs = params
            return Def(header=info, body=self.block(s.body))
        if isinstance(s, ast.ClassDef):
            du = _DefUse()
            for e in s.decorator_list + s.bases + [k.value for k in s.keywords]:
                du.visit(e)
            du.defs.add(s.name)
            return Block(header=self._info(s, S, True, du), body=self.block(s.body))
        if isinstance(s, ast.If):
            du = _DefUse()
            du.visit(s.test)
            return If(header=self._info(s, P, True, du), then=self.block(s.body), orelse=self.block(s.orelse) if s.orelse else None)
        if isinstance(s, (ast.For, ast.AsyncFor)):
            du = _DefUse()
            du.visit(s.iter)
            du.store_target(s.target)
            return Loop(header=self._info(s, P, True, du), body=self.block(s.body), orelse=self.block(s.orelse) if s.orelse else None)
        if isinstance(s, ast.While):
            du = _DefUse()
            du.visit(s.test)
            return Loop(header=self._info(s, P, True, du), body=self.block(s.body), orelse=self.block(s.orelse) if s.orelse else None)
        if isinstance(s, (ast.With, ast.AsyncWith)):
            du = _DefUse()
            for item in s.items:
                du.visit(item.context_expr)
                if item.optional_vars is not None:
                    du.store_target(item.optional_vars)
            return Block(header=self._info(s, S, True, du), body=self.block(s.body))
        if isinstance(s, ast.Try) or type(s).__name__ == "TryStar":
            handlers = []
            for h in s.handlers:  # type: ignore[attr-defined]
                du = _DefUse()
                if h.type is not None:
                    du.visit(h.type)
                if h.name:
                    du.defs.add(h.name)
                handlers.append(Handler(head=self._info(h, S, True, du), body=self.block(h.body)))
            return Try(
                body=self.block(s.body),  # type: ignore[attr-defined]
                handlers=handlers,
                orelse=self.block(s.orelse) if s.orelse else None,  # type: ignore[attr-defined]
                finalbody=self.block(s.finalbody) if s.finalbody else None,  # type: ignore[attr-defined]
            )
        if isinstance(s, ast.Match):
            du = _DefUse()
            du.visit(s.subject)
            header = self._info(s, P, True, du)
            cases = []
            for c in s.cases:
                du = _DefUse()
                du.visit(c.pattern)
                if c.guard is not None:
                    du.visit(c.guard)
                head = self._case_info(c, du)
                irrefutable = isinstance(c.pattern, ast.MatchAs) and c.pattern.pattern is None and c.guard is None
                cases.append(Case(body=self.block(c.body), head=head, is_default=irrefutable, fallthrough=False))
            return Switch(header=header, cases=cases, chained=True)

        du = _DefUse()
        jump = None
        if isinstance(s, ast.Assign):
            du.visit(s.value)
            for t in s.targets:
                du.store_target(t)
        elif isinstance(s, ast.AugAssign):
            du.visit(s.value)
            du.store_target(s.target, also_use=True)
        elif isinstance(s, ast.AnnAssign):
            if s.value is not None:
                du.visit(s.value)
            du.visit(s.annotation)
            du.store_target(s.target)
        elif isinstance(s, (ast.Import, ast.ImportFrom)):
            for alias in s.names:
                if alias.name == "*":
                    continue
                du.defs.add(alias.asname or alias.name.split(".")[0])
        elif isinstance(s, (ast.Global, ast.Nonlocal)):
            pass
        elif isinstance(s, ast.Delete):
            for t in s.targets:
                for n in ast.walk(t):
                    if isinstance(n, ast.Name):
                        du.use(n.id)
        else:
            du.visit(s)
            if isinstance(s, ast.Return):
                jump = "return"
            elif isinstance(s, ast.Raise):
                jump = "raise"
            elif isinstance(s, ast.Break):
                jump = "break"
            elif isinstance(s, ast.Continue):
                jump = "continue"
        return Simple(info=self._info(s, S, False, du), jump=jump)

    def _case_info(self, c: ast.match_case, du: _DefUse) -> StmtInfo:
        pl = c.pattern.lineno
        pcol = self._char_col(pl, c.pattern.col_offset)
        start = self.lines[pl - 1].rfind("case", 0, pcol)
        start = start if start >= 0 else pcol
        l2, colon = self._header_end(pl, pcol)
        return self._make(pl, start, l2, colon + 1, StatementKind.PREDICATE, du)


def _depth0_colons(text: str) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    depth = 0
    try:
        for tok in tokenize.generate_tokens(io.StringIO(text).readline):
            if tok.type != tokenize.OP:
                continue
            if tok.string in "([{":
                depth += 1
            elif tok.string in ")]}":
                depth = max(depth - 1, 0)
            elif tok.string == ":" and depth == 0:
                out.append(tok.start)
    except (tokenize.TokenError, IndentationError, SyntaxError):
        pass
    return out


class PythonAdapter:
    name = "python"

    def comment_prefix(self) -> str:
        return "#"

    def parse(self, source: str) -> ParsedSource:
        rec = parse_with_recovery(source)
        if rec.tree is None:
            return ParsedSource(tree=[], infos=[], masked_lines=rec.masked)
        conv = _Converter(rec, _depth0_colons("\n".join(rec.lines) + "\n"))
        nodes = conv.block(rec.tree.body)
        return ParsedSource(tree=nodes, infos=conv.infos, masked_lines=rec.masked)

    def defined_callables(self, source: str) -> set[str]:
        tree = parse_with_recovery(source).tree
        if tree is None:
            return set()
        return {n.name for n in ast.walk(tree) if isinstance(n, (ast.FunctionDef, ast.AsyncFunctionDef))}
