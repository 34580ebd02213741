"""Repository-wide key-value database: one entry per statement.

Each entry's key is the statement's slice (with its token bag precomputed)
and its value is the block of source lines centred on the statement. The
on-disk form is a gzip-compressed JSON-lines file: a header line carrying the
schema version, build parameters and stats, then one entry per line.
"""

from __future__ import annotations

import fnmatch
import gzip
import io
import json
import logging
import os
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

from .ccg import build_ccg, read_source
from .errors import CCGError, NoSourceFiles, ParseFailure, VersionMismatch
from .graph import EXTENSIONS, Language
from .slicer import DEFAULT_HOPS, DEFAULT_MAX_STATEMENTS, CCGSlice, SequenceSlice, slice

log = logging.getLogger(__name__)

SCHEMA_NAME = "ccgrag-db"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class IndexEntry:
    key: CCGSlice
    value: str
    file_path: str
    anchor_line: int
    value_start: int
    value_end: int

    @property
    def key_sequence(self) -> SequenceSlice:
        return self.key.sequence

    @property
    def token_bag(self) -> frozenset[str]:
        return self.key.sequence.token_bag

    def to_dict(self) -> dict[str, Any]:
        return {
            "file_path": self.file_path,
            "anchor_line": self.anchor_line,
            "value_start": self.value_start,
            "value_end": self.value_end,
            "value": self.value,
            "key": self.key.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any], cache: dict | None = None) -> "IndexEntry":
        return cls(
            key=CCGSlice.from_dict(d["key"], file_path=d["file_path"], cache=cache),
            value=d["value"],
            file_path=d["file_path"],
            anchor_line=int(d["anchor_line"]),
            value_start=int(d["value_start"]),
            value_end=int(d["value_end"]),
        )


@dataclass(frozen=True)
class DatabaseParams:
    h: int = DEFAULT_HOPS
    l: int = DEFAULT_MAX_STATEMENTS
    languages: tuple[str, ...] = ("python", "java")
    built_at: str | None = None  # left unset by default so rebuilds are byte-identical


@dataclass(frozen=True)
class DatabaseStats:
    entries: int = 0
    files: int = 0
    skipped_files: int = 0
    source_lines: int = 0


@dataclass(frozen=True)
class Database:
    entries: tuple[IndexEntry, ...] = ()
    params: DatabaseParams = field(default_factory=DatabaseParams)
    stats: DatabaseStats = field(default_factory=DatabaseStats)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[IndexEntry]:
        return iter(self.entries)

    @cached_property
    def files(self) -> tuple[str, ...]:
        return tuple(sorted({e.file_path for e in self.entries}))


def window_bounds(line: int, l: int, n_lines: int) -> tuple[int, int]:
    """Inclusive 1-based line range of ``l // 2`` lines either side, clamped."""
    half = l // 2
    return max(1, line - half), max(1, min(n_lines, line + half))


def _skip_dir(name: str) -> bool:
    return name.startswith(".") or name in ("__pycache__", "node_modules")


def iter_source_files(
    repo_root: str | Path,
    languages: Iterable[str | Language] = ("python", "java"),
    exclude_globs: Sequence[str] = (),
    include_globs: Sequence[str] | None = None,
) -> list[tuple[Path, str, Language]]:
    """Matching files as ``(absolute path, repo-relative posix path, language)``, sorted."""
    root = Path(repo_root)
    if not root.is_dir():
        raise NoSourceFiles(f"not a directory: {root}")
    by_ext = {ext: lang for lang in map(Language.parse, languages) for ext in EXTENSIONS[lang]}
    out = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if not _skip_dir(d))
        for name in sorted(filenames):
            lang = by_ext.get(os.path.splitext(name)[1])
            if lang is None:
                continue
            path = Path(dirpath) / name
            rel = path.relative_to(root).as_posix()
            if any(fnmatch.fnmatch(rel, g) for g in exclude_globs):
                continue
            if include_globs is not None and not any(fnmatch.fnmatch(rel, g) for g in include_globs):
                continue
            out.append((path, rel, lang))
    out.sort(key=lambda t: t[1])
    return out


def entries_for_file(rel: str, source: str, language: Language, h: int, l: int) -> list[IndexEntry]:
    graph = build_ccg(rel, source, language)
    lines = source.splitlines()
    out = []
    for v in graph.vertices:
        lo, hi = window_bounds(v.line_start, l, len(lines))
        out.append(
            IndexEntry(
                key=slice(graph, v.id, h, l),
                value="\n".join(lines[lo - 1 : hi]),
                file_path=rel,
                anchor_line=v.line_start,
                value_start=lo,
                value_end=hi,
            )
        )
    return out


def build_database(
    repo_root: str | Path,
    languages: Iterable[str | Language] = ("python", "java"),
    h: int = DEFAULT_HOPS,
    l: int = DEFAULT_MAX_STATEMENTS,
    exclude_globs: Sequence[str] = (),
    built_at: str | None = None,
) -> Database:
    langs = tuple(Language.parse(x).value for x in languages)
    files = iter_source_files(repo_root, langs, exclude_globs)
    if not files:
        raise NoSourceFiles(f"no source files for {', '.join(langs)} under {repo_root}")
    entries: list[IndexEntry] = []
    skipped = n_lines = 0
    for path, rel, lang in files:
        source = read_source(path)
        try:
            entries.extend(entries_for_file(rel, source, lang, h, l))
        except (ParseFailure, RecursionError) as exc:
            log.warning("skipping %s: %s", rel, exc)
            skipped += 1
            continue
        n_lines += len(source.splitlines())
    entries.sort(key=lambda e: (e.file_path, e.anchor_line, e.key.anchor_id))
    stats = DatabaseStats(entries=len(entries), files=len(files) - skipped, skipped_files=skipped, source_lines=n_lines)
    return Database(entries=tuple(entries), params=DatabaseParams(h, l, langs, built_at), stats=stats)


def _header(db: Database) -> dict[str, Any]:
    p, s = db.params, db.stats
    return {
        "schema": SCHEMA_NAME,
        "version": SCHEMA_VERSION,
        "params": {"h": p.h, "l": p.l, "languages": list(p.languages), "built_at": p.built_at},
        "stats": {"entries": s.entries, "files": s.files, "skipped_files": s.skipped_files, "source_lines": s.source_lines},
    }


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def dumps(db: Database) -> bytes:
    """Serialized (compressed) bytes; identical databases give identical bytes."""
    buf = io.BytesIO()
    with gzip.GzipFile(filename="", mode="wb", fileobj=buf, mtime=0) as gz:
        gz.write((_dumps(_header(db)) + "\n").encode("utf-8"))
        for e in db.entries:
            gz.write((_dumps(e.to_dict()) + "\n").encode("utf-8"))
    return buf.getvalue()


def save(db: Database, path: str | Path) -> None:
    Path(path).write_bytes(dumps(db))


def loads(data: bytes) -> Database:
    try:
        lines = gzip.decompress(data).decode("utf-8").splitlines()
    except (OSError, EOFError, UnicodeDecodeError) as exc:
        raise CCGError(f"not a database file: {exc}") from exc
    if not lines:
        raise CCGError("database file is empty")
    header = json.loads(lines[0])
    if header.get("schema") != SCHEMA_NAME:
        raise CCGError("not a database file: missing schema header")
    if header.get("version") != SCHEMA_VERSION:
        raise VersionMismatch(f"database schema version {header.get('version')} != {SCHEMA_VERSION}")
    p, s = header["params"], header["stats"]
    cache: dict = {}
    entries = tuple(IndexEntry.from_dict(json.loads(line), cache) for line in lines[1:] if line)
    return Database(
        entries=entries,
        params=DatabaseParams(int(p["h"]), int(p["l"]), tuple(p["languages"]), p.get("built_at")),
        stats=DatabaseStats(**{k: int(v) for k, v in s.items()}),
    )


def load(path: str | Path) -> Database:
    return loads(Path(path).read_bytes())


def exclude_file(db: Database, file_path: str, line_range: tuple[int, int] | None = None) -> Database:
    """Drop a file's entries, or only those whose value window overlaps ``line_range``."""

    def dropped(e: IndexEntry) -> bool:
        if e.file_path != file_path:
            return False
        if line_range is None:
            return True
        lo, hi = line_range
        return e.value_start <= hi and lo <= e.value_end

    kept = tuple(e for e in db.entries if not dropped(e))
    if len(kept) == len(db.entries):
        return db
    return replace(db, entries=kept, stats=replace(db.stats, entries=len(kept)))
