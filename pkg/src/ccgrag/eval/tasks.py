"""Completion tasks: a removed line plus the file content above it."""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from ..ccg import extract_statements, read_source
from ..errors import InsufficientEligibleLines, ParseFailure
from ..graph import Language
from ..index_store import iter_source_files
from ..lang import get_adapter
from ..lexer import identifiers, keywords_for, tokenize

MIN_TOKENS = 5

# tokens that, right before ``name(``, mark a declaration rather than a call
_DECL_PREV = frozenset({"def", "class", "new", "void"}) | frozenset(
    "boolean byte char double float int long short".split()
)


class TaskLevel(str, Enum):
    LINE = "line"
    API = "api"


@dataclass(frozen=True)
class CompletionTask:
    repo_root: str
    file_path: str
    target_line_no: int
    context_text: str
    ground_truth: str
    level: TaskLevel
    language: Language

    @property
    def task_id(self) -> str:
        return f"{self.file_path}:{self.target_line_no}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["level"] = self.level.value
        d["language"] = self.language.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CompletionTask":
        return cls(
            repo_root=d["repo_root"],
            file_path=d["file_path"],
            target_line_no=int(d["target_line_no"]),
            context_text=d["context_text"],
            ground_truth=d["ground_truth"],
            level=TaskLevel(d["level"]),
            language=Language.parse(d["language"]),
        )


def save_tasks(tasks: Iterable[CompletionTask], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for t in tasks:
            f.write(json.dumps(t.to_dict(), sort_keys=True) + "\n")


def load_tasks(path: str | Path) -> list[CompletionTask]:
    with open(path, encoding="utf-8") as f:
        return [CompletionTask.from_dict(json.loads(line)) for line in f if line.strip()]


def is_comment_line(line: str, language: Language) -> bool:
    s = line.strip()
    if language is Language.PYTHON:
        return s.startswith("#")
    return s.startswith(("//", "/*", "*"))


def calls_repo_api(line: str, callables: set[str], language: Language) -> bool:
    """True if ``line`` calls a function whose name is defined in the repository."""
    toks = tokenize(line)
    for i, tok in enumerate(toks):
        if tok not in callables or i + 1 >= len(toks) or toks[i + 1] != "(":
            continue
        prev = toks[i - 1] if i else ""
        if prev in _DECL_PREV:
            continue
        if language is Language.JAVA and i and (
            prev in (">", "]") or (prev.isidentifier() and prev not in keywords_for("java"))
        ):
            continue  # method declaration: `Type name(`
        return True
    return False


def repo_callables(repo_root: str | Path, languages: Sequence[str | Language] = ("python", "java")) -> set[str]:
    names: set[str] = set()
    for path, _, lang in iter_source_files(repo_root, languages):
        names |= get_adapter(lang).defined_callables(read_source(path))
    return names


def eligible_lines(
    repo_root: str | Path,
    level: TaskLevel | str,
    languages: Sequence[str | Language] = ("python", "java"),
    exclude_globs: Sequence[str] = (),
    include_globs: Sequence[str] | None = None,
) -> list[tuple[str, int, Language]]:
    """Sorted ``(file, line, language)`` triples that qualify as targets."""
    level = TaskLevel(level)
    callables = repo_callables(repo_root, languages) if level is TaskLevel.API else set()
    out = []
    for path, rel, lang in iter_source_files(repo_root, languages, exclude_globs, include_globs):
        source = read_source(path)
        lines = source.splitlines()
        try:
            stmts = extract_statements(source, lang, rel)
        except ParseFailure:
            continue
        for ln in sorted({s.line_start for s in stmts}):
            line = lines[ln - 1]
            if is_comment_line(line, lang) or len(tokenize(line)) < MIN_TOKENS:
                continue
            if level is TaskLevel.API and not calls_repo_api(line, callables, lang):
                continue
            out.append((rel, ln, lang))
    return out


def generate_tasks(
    repo_root: str | Path,
    level: TaskLevel | str,
    n: int,
    seed: int = 0,
    languages: Sequence[str | Language] = ("python", "java"),
    exclude_globs: Sequence[str] = (),
    include_globs: Sequence[str] | None = None,
) -> list[CompletionTask]:
    """Sample ``n`` target lines uniformly (without replacement) under ``seed``."""
    if n <= 0:
        return []
    level = TaskLevel(level)
    pool = eligible_lines(repo_root, level, languages, exclude_globs, include_globs)
    if len(pool) < n:
        raise InsufficientEligibleLines(f"{len(pool)} eligible {level.value}-level lines, {n} requested")
    picked = sorted(random.Random(seed).sample(pool, n), key=lambda t: (t[0], t[1]))
    root = Path(repo_root)
    tasks = []
    for rel, ln, lang in picked:
        lines = read_source(root / rel).splitlines()
        context = "".join(line + "\n" for line in lines[: ln - 1])
        tasks.append(
            CompletionTask(
                repo_root=str(repo_root),
                file_path=rel,
                target_line_no=ln,
                context_text=context,
                ground_truth=lines[ln - 1],
                level=level,
                language=lang,
            )
        )
    return tasks


def duplication_ratio(
    repo_root: str | Path, languages: Sequence[str | Language] = ("python", "java")
) -> dict[str, float]:
    """Share of code lines repeated elsewhere in the repo, verbatim and by identifier sequence."""
    code: list[str] = []
    idents: list[tuple[str, ...]] = []
    for path, _, lang in iter_source_files(repo_root, languages):
        for line in read_source(path).splitlines():
            s = " ".join(line.split())
            if not s or is_comment_line(s, lang):
                continue
            code.append(s)
            idents.append(tuple(identifiers(s, lang.value)))
    if not code:
        return {"code": 0.0, "identifier": 0.0}
    code_counts = Counter(code)
    ident_counts = Counter(i for i in idents if i)
    return {
        "code": sum(code_counts[s] > 1 for s in code) / len(code),
        "identifier": sum(bool(i) and ident_counts[i] > 1 for i in idents) / len(code),
    }
