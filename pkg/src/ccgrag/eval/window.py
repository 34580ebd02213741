"""Sliding-window retrieval baseline over fixed-size line windows."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..ccg import read_source
from ..graph import Language
from ..index_store import iter_source_files
from ..lexer import token_set
from ..retriever import Candidate, jaccard

DEFAULT_WINDOW = 20
DEFAULT_STRIDE = 1


@dataclass(frozen=True)
class WindowEntry:
    file_path: str
    value_start: int
    value_end: int
    value: str
    token_bag: frozenset[str]

    @property
    def anchor_line(self) -> int:
        return self.value_start


def file_windows(rel: str, lines: list[str], window: int, stride: int) -> list[WindowEntry]:
    n = len(lines)
    out = []
    for start in range(1, max(1, n - window + 1) + 1, stride):
        end = min(n, start + window - 1)
        text = "\n".join(lines[start - 1 : end])
        out.append(WindowEntry(rel, start, max(start, end), text, token_set(text)))
    return out


def count_windows(n_lines: int, window: int = DEFAULT_WINDOW, stride: int = DEFAULT_STRIDE) -> int:
    return len(range(1, max(1, n_lines - window + 1) + 1, stride))


class WindowIndex:
    def __init__(self, entries: Sequence[WindowEntry], window: int = DEFAULT_WINDOW) -> None:
        self.entries = tuple(entries)
        self.window = window

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def build(
        cls,
        repo_root: str | Path,
        languages: Sequence[str | Language] = ("python", "java"),
        window: int = DEFAULT_WINDOW,
        stride: int = DEFAULT_STRIDE,
        exclude_globs: Sequence[str] = (),
    ) -> "WindowIndex":
        if window < 1 or stride < 1:
            raise ValueError("window and stride must be >= 1")
        entries: list[WindowEntry] = []
        for path, rel, _ in iter_source_files(repo_root, languages, exclude_globs):
            entries.extend(file_windows(rel, read_source(path).splitlines(), window, stride))
        return cls(entries, window)

    def retrieve(self, context_text: str, k: int = 10, exclude: tuple[str, int] | None = None) -> list[Candidate]:
        """Top-``k`` windows against the context's last ``window`` lines.

        ``exclude=(file, line)`` drops that file's windows containing the line.
        """
        tail = "\n".join(context_text.splitlines()[-self.window :])
        bag = token_set(tail)

        def allowed(e: WindowEntry) -> bool:
            return exclude is None or not (
                e.file_path == exclude[0] and e.value_start <= exclude[1] <= e.value_end
            )

        scored = ((jaccard(bag, e.token_bag), e) for e in self.entries if allowed(e))
        best = heapq.nsmallest(k, scored, key=lambda se: (-se[0], se[1].file_path, se[1].value_start))
        return [Candidate(entry=e, coarse_score=s, rank=i) for i, (s, e) in enumerate(best, 1)]


def sliding_window_retrieve(
    repo_root: str | Path,
    context_text: str,
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
    k: int = 10,
    languages: Sequence[str | Language] = ("python", "java"),
) -> list[Candidate]:
    return WindowIndex.build(repo_root, languages, window, stride).retrieve(context_text, k)
