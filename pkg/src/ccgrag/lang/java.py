"""Java adapter: a statement-skeleton parser over ``javalang`` tokens.

``javalang`` supplies the lexer and the expression grammar, but its tree has
no end positions and no error recovery. Statement boundaries are therefore
found here, on the token stream, and ``javalang`` is only asked to parse the
tokens of one statement at a time to work out def/use sets. Running out of
tokens simply closes every open construct, so truncated prefixes (a
completion context cut inside a method) still yield statements.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from javalang import parser as jparser
from javalang import tokenizer as jtokenizer
from javalang import tree as jtree

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

_TEXT_BLOCK_RE = re.compile(r'"""[\s\S]*?"""')
_LEXER_LINE_RE = re.compile(r"line (\d+)")
_ASSIGN_OPS = frozenset("= += -= *= /= %= &= |= ^= <<= >>= >>>=".split())
_OPEN, _CLOSE = "([{", ")]}"
_TYPE_KEYWORDS = ("class", "interface", "enum")


@dataclass(frozen=True)
class Tok:
    kind: str
    value: str
    line: int
    col: int  # 0-based character column
    end_line: int
    end_col: int  # exclusive


def _blank_text_blocks(source: str) -> str:
    """Replace text blocks (unsupported by the lexer) with same-shaped filler."""

    def repl(m: re.Match[str]) -> str:
        parts = m.group(0).split("\n")
        out = ['""' + " " * (len(parts[0]) - 2)] + [" " * len(p) for p in parts[1:]]
        return "\n".join(out)

    return _TEXT_BLOCK_RE.sub(repl, source)


def lex(source: str, max_repairs: int = 50) -> tuple[list[Tok], set[int]]:
    """Tokenize, blanking lines the lexer rejects. Returns tokens and blanked lines."""
    text = _blank_text_blocks(source)
    masked: set[int] = set()
    for _ in range(max_repairs):
        try:
            raw = list(jtokenizer.tokenize(text))
            break
        except jtokenizer.LexerError as exc:
            m = _LEXER_LINE_RE.search(str(exc))
            lines = text.split("\n")
            if not m or not lines:
                return [], masked
            ln = min(max(int(m.group(1)), 1), len(lines))
            if not lines[ln - 1].strip():
                return [], masked
            lines[ln - 1] = " " * len(lines[ln - 1])
            masked.add(ln)
            text = "\n".join(lines)
    else:
        return [], masked
    toks = []
    for t in raw:
        line, col = t.position.line, t.position.column - 1
        toks.append(Tok(type(t).__name__, t.value, line, col, line, col + len(t.value)))
    return toks, masked


# -- def/use -------------------------------------------------------------


class _DU:
    def __init__(self) -> None:
        self.defs: set[str] = set()
        self.uses: set[str] = set()
        self.bound: list[set[str]] = []

    def use(self, name: str) -> None:
        if name and name != "this" and not any(name in b for b in self.bound):
            self.uses.add(name)


def _qual_base(qualifier: str | None) -> str | None:
    if not qualifier:
        return None
    return qualifier.split(".")[0]


def _target_base(node: jtree.Node) -> str | None:
    if isinstance(node, jtree.MemberReference):
        return _qual_base(node.qualifier) or node.member
    if isinstance(node, jtree.This):
        for sel in node.selectors or ():
            if isinstance(sel, jtree.MemberReference):
                return sel.member
    return None


def _walk(node: object, du: _DU) -> None:
    if node is None or isinstance(node, (str, bool, int, float)):
        return
    if isinstance(node, (list, tuple, set)):
        for x in node:
            _walk(x, du)
        return
    if not isinstance(node, jtree.Node):
        return
    if isinstance(node, (jtree.LocalVariableDeclaration, jtree.VariableDeclaration, jtree.FieldDeclaration)):
        for d in node.declarators:
            du.defs.add(d.name)
            _walk(d.initializer, du)
        return
    if isinstance(node, jtree.TryResource):
        if node.name:
            du.defs.add(node.name)
        _walk(node.value, du)
        return
    if isinstance(node, jtree.FormalParameter):
        du.defs.add(node.name)
        return
    if isinstance(node, jtree.Assignment):
        target = node.expressionl
        base = _target_base(target)
        if base:
            du.defs.add(base)
            if node.type != "=":
                du.use(base)
        for sel in getattr(target, "selectors", None) or ():
            if isinstance(sel, jtree.ArraySelector):
                _walk(sel.index, du)
        if base is None:
            _walk(target, du)
        _walk(node.value, du)
        return
    if isinstance(node, jtree.MemberReference):
        base = _qual_base(node.qualifier) or node.member
        ops = list(node.prefix_operators or ()) + list(node.postfix_operators or ())
        if "++" in ops or "--" in ops:
            du.defs.add(base)
        du.use(base)
        _walk(node.selectors, du)
        return
    if isinstance(node, jtree.MethodInvocation):
        q = _qual_base(node.qualifier)
        if q:
            du.use(q)
        _walk(node.arguments, du)
        _walk(node.selectors, du)
        return
    if isinstance(node, jtree.This):
        sels = list(node.selectors or ())
        if sels and isinstance(sels[0], jtree.MemberReference):
            du.use(sels[0].member)
            ops = list(node.prefix_operators or ()) + list(node.postfix_operators or ())
            if "++" in ops or "--" in ops:
                du.defs.add(sels[0].member)
            sels = sels[1:]
        _walk(sels, du)
        return
    if isinstance(node, jtree.LambdaExpression):
        names = set()
        for p in node.parameters or ():
            name = getattr(p, "name", None) or getattr(p, "member", None)
            if name:
                names.add(name)
        du.bound.append(names)
        _walk(node.body, du)
        du.bound.pop()
        return
    if isinstance(node, jtree.ClassCreator):
        _walk(node.arguments, du)
        _walk(node.selectors, du)
        return
    if isinstance(node, (jtree.ReferenceType, jtree.BasicType, jtree.TypeArgument, jtree.Annotation)):
        return
    for child in node.children:
        _walk(child, du)


def _heuristic_du(toks: list[Tok]) -> _DU:
    """Token-pattern fallback for statements ``javalang`` cannot parse."""
    du = _DU()
    for k, t in enumerate(toks):
        if t.kind != "Identifier":
            continue
        prev = toks[k - 1].value if k else ""
        nxt = toks[k + 1].value if k + 1 < len(toks) else ""
        if prev == "." and not (k >= 2 and toks[k - 2].value == "this"):
            continue
        if prev == "@" or nxt == "(":
            continue
        if nxt in _ASSIGN_OPS:
            du.defs.add(t.value)
            if nxt != "=":
                du.use(t.value)
            continue
        if nxt in ("++", "--") or prev in ("++", "--"):
            du.defs.add(t.value)
            du.use(t.value)
            continue
        if k + 1 < len(toks) and toks[k + 1].kind == "Identifier":
            continue  # type position in a declaration
        if nxt in (";", ",", ":") and k and toks[k - 1].kind in ("Identifier", "BasicType") or (
            nxt in (";", ",") and prev == ">"
        ):
            du.defs.add(t.value)
            continue
        du.use(t.value)
    return du


def _strip_modifiers(toks: list[Tok]) -> list[Tok]:
    out: list[Tok] = []
    k = 0
    while k < len(toks):
        t = toks[k]
        if t.kind == "Annotation":
            k += 2
            while k + 1 < len(toks) and toks[k].value == "." and toks[k + 1].kind == "Identifier":
                k += 2
            if k < len(toks) and toks[k].value == "(":
                k = _match_close(toks, k) + 1
            continue
        if t.kind == "Modifier" and t.value != "final":
            k += 1
            continue
        out.append(t)
        k += 1
    return out


def _to_javalang(toks: list[Tok]) -> list[jtokenizer.JavaToken]:
    out = []
    for t in toks:
        cls = getattr(jtokenizer, t.kind, jtokenizer.JavaToken)
        out.append(cls(t.value, jtokenizer.Position(t.line, t.col + 1)))
    return out


def _parsed_du(toks: list[Tok], mode: str) -> _DU:
    jt = _to_javalang(_strip_modifiers(toks) if mode == "stmt" else toks)
    try:
        p = jparser.Parser(jt)
        if mode == "stmt":
            node = p.parse_block_statement()
        elif mode == "par":
            node = p.parse_par_expression()
        elif mode == "for":
            node = p.parse_for_control()
        elif mode == "resources":
            node = p.parse_resource_specification()
        else:  # pragma: no cover - internal misuse
            raise ValueError(mode)
        rest = p.tokens.look()
        if rest is not None and not isinstance(rest, jtokenizer.EndOfInput):
            raise jparser.JavaSyntaxError("trailing tokens")
    except (jparser.JavaSyntaxError, StopIteration, IndexError, AttributeError, TypeError):
        return _heuristic_du(toks)
    du = _DU()
    _walk(node, du)
    return du


def _match_close(toks: list[Tok], i: int) -> int:
    """Index of the bracket closing ``toks[i]``; last index if unbalanced."""
    if i >= len(toks) or toks[i].value not in _OPEN:
        return i
    depth = 0
    for j in range(i, len(toks)):
        v = toks[j].value
        if v in _OPEN and toks[j].kind == "Separator":
            depth += 1
        elif v in _CLOSE and toks[j].kind == "Separator":
            depth -= 1
            if depth == 0:
                return j
    return len(toks) - 1


def _split_params(toks: list[Tok]) -> list[str]:
    """Parameter names from the tokens between a declaration's parentheses."""
    names: list[str] = []
    depth = 0
    last: str | None = None
    for t in toks:
        v = t.value
        if v in ("(", "[", "{", "<"):
            depth += 1
        elif v in (")", "]", "}", ">"):
            depth -= 1
        elif v == ">>":
            depth -= 2
        elif v == ">>>":
            depth -= 3
        elif v == "," and depth == 0:
            if last:
                names.append(last)
            last = None
        elif t.kind == "Identifier" and depth == 0:
            last = v
    if last:
        names.append(last)
    return names


# -- skeleton parser -----------------------------------------------------


class _Skeleton:
    def __init__(self, toks: list[Tok], lines: list[str]) -> None:
        self.t = toks
        self.n = len(toks)
        self.i = 0
        self.lines = lines
        self.infos: list[StmtInfo] = []
        self.callables: set[str] = set()

    # helpers
    def v(self, k: int = 0) -> str | None:
        j = self.i + k
        return self.t[j].value if 0 <= j < self.n else None

    def kind(self, k: int = 0) -> str | None:
        j = self.i + k
        return self.t[j].kind if 0 <= j < self.n else None

    def _text(self, a: int, b: int) -> str:
        s, e = self.t[a], self.t[b]
        if s.line == e.end_line:
            return self.lines[s.line - 1][s.col : e.end_col]
        parts = [self.lines[s.line - 1][s.col :]] + self.lines[s.line : e.end_line - 1]
        parts.append(self.lines[e.end_line - 1][: e.end_col])
        return "\n".join(parts)

    def mk(self, a: int, b: int, kind: StatementKind, du: _DU, inner: set[str] | None = None) -> StmtInfo:
        b = max(a, min(b, self.n - 1))
        info = StmtInfo(
            line_start=self.t[a].line,
            line_end=self.t[b].end_line,
            col=self.t[a].col,
            text=self._text(a, b),
            kind=kind,
            defs=set(du.defs),
            uses=set(du.uses),
            inner_defs=set(inner or ()),
        )
        self.infos.append(info)
        return info

    def stmt_end(self, i: int) -> int:
        """Index of the ``;`` ending the statement at ``i``.

        Stops before an unmatched closer (missing semicolon) and at the end of
        input, so it never runs past the enclosing block.
        """
        depth = 0
        for j in range(i, self.n):
            t = self.t[j]
            if t.kind == "Separator":
                if t.value in _OPEN:
                    depth += 1
                elif t.value in _CLOSE:
                    if depth == 0:
                        return max(j - 1, i)
                    depth -= 1
                elif t.value == ";" and depth == 0:
                    return j
        return self.n - 1

    def skip_annotations(self) -> None:
        while self.v() == "@" and self.v(1) != "interface":
            self.i += 2
            while self.v() == "." and self.kind(1) == "Identifier":
                self.i += 2
            if self.v() == "(":
                self.i = _match_close(self.t, self.i) + 1

    def skip_modifiers(self) -> None:
        while self.i < self.n:
            if self.kind() == "Modifier" or (self.v() == "default" and self.v(1) not in (":", "->")):
                self.i += 1
            elif self.v() == "@" and self.v(1) != "interface":
                self.skip_annotations()
            elif self.v() in ("sealed", "non") and self.kind(1) in ("Keyword", "Identifier", "Modifier"):
                self.i += 1
            else:
                break

    def at_type_decl(self) -> bool:
        v = self.v()
        if v in _TYPE_KEYWORDS:
            return True
        if v == "@" and self.v(1) == "interface":
            return True
        return v == "record" and self.kind(1) == "Identifier" and self.v(2) in ("(", "<")

    # compilation unit / class bodies
    def unit(self) -> list[Node]:
        out: list[Node] = []
        while self.i < self.n:
            start = self.i
            if self.v() == "}":
                self.i += 1
                continue
            node = self.member()
            if node is not None:
                out.append(node)
            if self.i == start:
                self.i += 1
        return out

    def members(self) -> list[Node]:
        out: list[Node] = []
        while self.i < self.n and self.v() != "}":
            start = self.i
            node = self.member()
            if node is not None:
                out.append(node)
            if self.i == start:
                self.i += 1
        if self.v() == "}":
            self.i += 1
        return out

    def member(self) -> Node | None:
        v = self.v()
        if v == ";":
            self.i += 1
            return None
        if v == "package":
            self.i = self.stmt_end(self.i) + 1
            return None
        if v == "import":
            a = self.i
            b = self.stmt_end(a)
            idents = [t for t in self.t[a:b] if t.kind == "Identifier"]
            du = _DU()
            if idents and self.t[b - 1].value != "*":
                du.defs.add(idents[-1].value)
            self.i = b + 1
            return Simple(info=self.mk(a, b, StatementKind.SIMPLE, du))
        self.skip_annotations()
        start = self.i
        self.skip_modifiers()
        if self.i >= self.n:
            return None
        if self.v() == "{":
            return Block(body=self.block_body())
        if self.at_type_decl():
            return self.type_decl(start)
        j = self.i
        while j < self.n and self.t[j].value not in ("(", "=", ";", "{", "}"):
            j += 1
        if j < self.n and self.t[j].value == "(":
            return self.method(start, j)
        if j < self.n and self.t[j].value == "{" and j > start:
            # compact record constructor: `Name {`
            du = _DU()
            header = self.mk(start, j - 1, StatementKind.SIMPLE, du)
            self.i = j
            return Def(header=header, body=self.block_body())
        end = self.stmt_end(start)
        self.i = end + 1
        return Simple(info=self.mk(start, end, StatementKind.SIMPLE, _parsed_du(self.t[start : end + 1], "stmt")))

    def method(self, start: int, paren: int) -> Node:
        close = _match_close(self.t, paren)
        name = self.t[paren - 1].value if paren > start else ""
        params = set(_split_params(self.t[paren + 1 : close]))
        k = close + 1
        while k < self.n and self.t[k].value not in ("{", ";", "default", "}"):
            k += 1
        du = _DU()
        if name:
            du.defs.add(name)
            self.callables.add(name)
        du.defs |= params
        header = self.mk(start, max(k - 1, close), StatementKind.SIMPLE, du, inner=params)
        self.i = k
        if self.v() == "{":
            return Def(header=header, body=self.block_body())
        self.i = self.stmt_end(k) + 1 if k < self.n else self.n
        return Def(header=header, body=[])

    def type_decl(self, start: int) -> Node:
        is_enum = self.v() == "enum"
        if self.v() == "@":
            self.i += 1
        name_idx = self.i + 1
        j = self.i
        while j < self.n and self.t[j].value not in ("{", ";"):
            if self.t[j].value == "(":
                j = _match_close(self.t, j)
            j += 1
        du = _DU()
        if name_idx < self.n and self.t[name_idx].kind == "Identifier":
            du.defs.add(self.t[name_idx].value)
        header = self.mk(start, j - 1, StatementKind.SIMPLE, du)
        self.i = j + 1
        if j >= self.n or self.t[j].value == ";":
            return Block(header=header, body=[])
        body: list[Node] = []
        if is_enum:
            consts = self.enum_constants()
            if consts is not None:
                body.append(consts)
        body.extend(self.members())
        return Block(header=header, body=body)

    def enum_constants(self) -> Node | None:
        a = self.i
        if self.v() in (";", "}"):
            if self.v() == ";":
                self.i += 1
            return None
        depth = 0
        j = a
        du = _DU()
        expect_name = True
        while j < self.n:
            t = self.t[j]
            if t.kind == "Separator" and t.value in _OPEN:
                depth += 1
            elif t.kind == "Separator" and t.value in _CLOSE:
                if depth == 0:
                    break
                depth -= 1
            elif depth == 0 and t.value == ";":
                break
            elif depth == 0 and t.value == ",":
                expect_name = True
            elif depth == 0 and expect_name and t.kind == "Identifier" and (j == 0 or self.t[j - 1].value != "@"):
                du.defs.add(t.value)
                expect_name = False
            j += 1
        end = j if j < self.n and self.t[j].value == ";" else j - 1
        info = self.mk(a, end, StatementKind.SIMPLE, du)
        self.i = j + 1 if j < self.n and self.t[j].value == ";" else j
        return Simple(info=info)

    # statements
    def block_body(self) -> list[Node]:
        """Parse ``{ ... }`` starting at the opening brace."""
        if self.v() != "{":
            return []
        self.i += 1
        out = self.statements()
        if self.v() == "}":
            self.i += 1
        return out

    def _at_case_label(self) -> bool:
        return self.v() == "case" or (self.v() == "default" and self.v(1) in (":", "->"))

    def statements(self, in_switch: bool = False) -> list[Node]:
        out: list[Node] = []
        while self.i < self.n and self.v() != "}":
            if in_switch and self._at_case_label():
                break
            start = self.i
            node = self.statement()
            if node is not None:
                out.append(node)
            if self.i == start:
                self.i += 1
        return out

    def sub(self) -> list[Node]:
        if self.i >= self.n:
            return []
        node = self.statement()
        return [node] if node is not None else []

    def statement(self) -> Node | None:
        v, k = self.v(), self.kind()
        P, S = StatementKind.PREDICATE, StatementKind.SIMPLE
        a = self.i
        if v is None:
            return None
        if v == "{":
            return Block(body=self.block_body())
        if v in (";", "else", "catch", "finally"):
            self.i += 1
            return None
        if k == "Identifier" and self.v(1) == ":":
            label = v
            self.i += 2
            node = self.statement()
            if isinstance(node, (Loop, Switch, Block, Try)) and node.label is None:
                node.label = label
                return node
            return Block(body=[node] if node is not None else [], label=label)
        if v in ("if", "while") and self.v(1) == "(":
            close = _match_close(self.t, a + 1)
            header = self.mk(a, close, P, _parsed_du(self.t[a + 1 : close + 1], "par"))
            self.i = close + 1
            body = self.sub()
            if v == "while":
                return Loop(header=header, body=body)
            orelse = None
            if self.v() == "else":
                self.i += 1
                orelse = self.sub()
            return If(header=header, then=body, orelse=orelse)
        if v == "for" and self.v(1) == "(":
            close = _match_close(self.t, a + 1)
            header = self.mk(a, close, P, _parsed_du(self.t[a + 2 : close], "for"))
            self.i = close + 1
            return Loop(header=header, body=self.sub())
        if v == "do":
            self.i += 1
            body = self.sub()
            if self.v() == "while":
                w = self.i
                end = self.stmt_end(w)
                close = _match_close(self.t, w + 1) if self.v(1) == "(" else end
                header = self.mk(w, end, P, _parsed_du(self.t[w + 1 : close + 1], "par"))
                self.i = end + 1
                return Loop(header=header, body=body, post_test=True)
            return Block(body=body)
        if v == "try":
            self.i += 1
            header = None
            if self.v() == "(":
                close = _match_close(self.t, self.i)
                header = self.mk(a, close, S, _parsed_du(self.t[self.i : close + 1], "resources"))
                self.i = close + 1
            body = self.block_body()
            handlers = []
            while self.v() == "catch":
                c = self.i
                close = _match_close(self.t, c + 1) if self.v(1) == "(" else c
                du = _DU()
                du.defs |= set(_split_params(self.t[c + 2 : close])[-1:])
                head = self.mk(c, close, S, du)
                self.i = close + 1
                handlers.append(Handler(head=head, body=self.block_body()))
            finalbody = None
            if self.v() == "finally":
                self.i += 1
                finalbody = self.block_body()
            return Try(body=body, handlers=handlers, finalbody=finalbody, header=header)
        if v == "switch" and self.v(1) == "(":
            close = _match_close(self.t, a + 1)
            header = self.mk(a, close, P, _parsed_du(self.t[a + 1 : close + 1], "par"))
            self.i = close + 1
            return Switch(header=header, cases=self.switch_body())
        if v in ("return", "throw", "break", "continue"):
            end = self.stmt_end(a)
            if v in ("break", "continue"):
                du = _DU()
                target = self.t[a + 1].value if a + 1 <= end and self.t[a + 1].kind == "Identifier" else None
            else:
                du = _parsed_du(self.t[a : end + 1], "stmt")
                target = None
            self.i = end + 1
            jump = {"return": "return", "throw": "raise"}.get(v, v)
            return Simple(info=self.mk(a, end, S, du), jump=jump, target=target)
        if v == "synchronized" and self.v(1) == "(":
            close = _match_close(self.t, a + 1)
            header = self.mk(a, close, S, _parsed_du(self.t[a + 1 : close + 1], "par"))
            self.i = close + 1
            return Block(header=header, body=self.block_body())
        if k in ("Modifier", "Annotation") or self.at_type_decl():
            save = self.i
            self.skip_annotations()
            start = self.i
            self.skip_modifiers()
            if self.at_type_decl():
                return self.type_decl(start)
            self.i = save
        end = self.stmt_end(a)
        self.i = end + 1
        return Simple(info=self.mk(a, end, S, _parsed_du(self.t[a : end + 1], "stmt")))

    def switch_body(self) -> list[Case]:
        if self.v() != "{":
            return []
        self.i += 1
        cases: list[Case] = []
        while self.i < self.n and self.v() != "}":
            if not self._at_case_label():
                start = self.i
                self.statement()
                if self.i == start:
                    self.i += 1
                continue
            is_default = False
            arrow = False
            while self._at_case_label():
                if self.v() == "default":
                    is_default = True
                j = self.i + 1
                depth = 0
                while j < self.n:
                    t = self.t[j]
                    if t.kind == "Separator" and t.value in _OPEN:
                        depth += 1
                    elif t.kind == "Separator" and t.value in _CLOSE:
                        depth -= 1
                    elif depth == 0 and t.value in (":", "->"):
                        break
                    j += 1
                arrow = j < self.n and self.t[j].value == "->"
                self.i = j + 1
                if arrow:
                    break
            if arrow:
                cases.append(Case(body=self.sub(), is_default=is_default, fallthrough=False))
            else:
                cases.append(Case(body=self.statements(in_switch=True), is_default=is_default, fallthrough=True))
        if self.v() == "}":
            self.i += 1
        return cases


class JavaAdapter:
    name = "java"

    def comment_prefix(self) -> str:
        return "//"

    def _skeleton(self, source: str) -> tuple[_Skeleton, set[int]]:
        toks, masked = lex(source)
        sk = _Skeleton(toks, source.split("\n"))
        return sk, masked

    def parse(self, source: str) -> ParsedSource:
        sk, masked = self._skeleton(source)
        tree = sk.unit()
        return ParsedSource(tree=tree, infos=sk.infos, masked_lines=masked)

    def defined_callables(self, source: str) -> set[str]:
        sk, _ = self._skeleton(source)
        sk.unit()
        return sk.callables
