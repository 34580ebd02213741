"""Run retrieval + prompting + completion over tasks and score the results."""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from ..errors import CCGError, EmptyContext
from ..index_store import Database, build_database, exclude_file
from ..lang import get_adapter
from ..llm import LlmConfig, complete
from ..prompt import compose_prompt, snippets_from_candidates
from ..retriever import DEFAULT_COARSE_K, DEFAULT_GAMMA, DEFAULT_TOP_M, retrieve
from ..slicer import DEFAULT_HOPS, DEFAULT_MAX_STATEMENTS, query_ccg
from .metrics import edit_similarity, exact_match, identifier_match
from .tasks import CompletionTask
from .window import DEFAULT_STRIDE, DEFAULT_WINDOW, WindowIndex

RETRIEVERS = ("graph", "window", "none")
METRICS = ("em", "es", "id_em", "id_f1")


@dataclass(frozen=True)
class PipelineConfig:
    retriever: str = "graph"
    h: int = DEFAULT_HOPS
    l: int = DEFAULT_MAX_STATEMENTS
    gamma: float = DEFAULT_GAMMA
    coarse_k: int = DEFAULT_COARSE_K
    top_m: int = DEFAULT_TOP_M
    window: int = DEFAULT_WINDOW
    stride: int = DEFAULT_STRIDE
    languages: tuple[str, ...] = ("python", "java")
    exclude_globs: tuple[str, ...] = ()
    llm: LlmConfig = field(default_factory=LlmConfig)
    ordered_identifier_em: bool = True

    def __post_init__(self) -> None:
        if self.retriever not in RETRIEVERS:
            raise ValueError(f"retriever must be one of {RETRIEVERS}")


@dataclass
class EvalReport:
    records: list[dict[str, Any]]
    aggregates: dict[str, Any]
    failures: int
    db_stats: dict[str, Any]
    latency: dict[str, float] | None = None

    def to_dict(self, include_latency: bool = False) -> dict[str, Any]:
        d = {
            "aggregates": self.aggregates,
            "failures": self.failures,
            "db_stats": self.db_stats,
            "records": self.records,
        }
        if include_latency and self.latency is not None:
            d["latency"] = self.latency
        return d

    def to_json(self, include_latency: bool = False) -> str:
        return json.dumps(self.to_dict(include_latency), sort_keys=True, indent=2) + "\n"

    def write(self, path: str | Path, include_latency: bool = False) -> None:
        Path(path).write_text(self.to_json(include_latency), encoding="utf-8")

    def table(self) -> str:
        rows = [("group", "n", *METRICS)]
        for name, agg in self.aggregates.items():
            rows.append((name, str(agg["count"]), *(f"{agg[m]:.4f}" for m in METRICS)))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows)


def _aggregate(records: list[dict[str, Any]]) -> dict[str, Any]:
    groups: dict[str, list[dict[str, Any]]] = {"all": records}
    for r in records:
        groups.setdefault(f"level={r['level']}", []).append(r)
        groups.setdefault(f"language={r['language']}", []).append(r)
    out = {}
    for name in sorted(groups, key=lambda g: (g != "all", g)):
        rs = groups[name]
        out[name] = {"count": len(rs), **{m: (sum(r[m] for r in rs) / len(rs) if rs else 0.0) for m in METRICS}}
    return out


def run_eval(
    tasks: Sequence[CompletionTask],
    config: PipelineConfig = PipelineConfig(),
    db: Database | None = None,
    windows: WindowIndex | None = None,
) -> EvalReport:
    """Score every task; a failing task is recorded with zero scores and its error."""
    records: list[dict[str, Any]] = []
    latencies: list[float] = []
    db_stats: dict[str, Any] = {}
    if tasks and config.retriever == "graph" and db is None:
        db = build_database(tasks[0].repo_root, config.languages, config.h, config.l, config.exclude_globs)
    if tasks and config.retriever == "window" and windows is None:
        windows = WindowIndex.build(tasks[0].repo_root, config.languages, config.window, config.stride, config.exclude_globs)
    if config.retriever == "graph" and db is not None:
        db_stats = {"entries": db.stats.entries, "files": db.stats.files, "skipped_files": db.stats.skipped_files}
    elif config.retriever == "window" and windows is not None:
        db_stats = {"entries": len(windows)}
    budget = config.llm.context_window_tokens - config.llm.max_output_tokens
    failures = 0
    for task in tasks:
        record: dict[str, Any] = {
            "task_id": task.task_id,
            "file_path": task.file_path,
            "target_line_no": task.target_line_no,
            "level": task.level.value,
            "language": task.language.value,
            "ground_truth": task.ground_truth,
        }
        try:
            t0 = time.perf_counter()
            candidates = []
            if config.retriever == "graph":
                assert db is not None
                try:
                    query = query_ccg(task.context_text, task.language, config.h, config.l, task.file_path)
                except EmptyContext:
                    query = None
                if query is not None:
                    view = exclude_file(db, task.file_path, (task.target_line_no, task.target_line_no))
                    if len(view):
                        candidates = retrieve(view, query, config.coarse_k, config.top_m, config.gamma)
            elif config.retriever == "window":
                assert windows is not None
                candidates = windows.retrieve(task.context_text, config.top_m, (task.file_path, task.target_line_no))
            latencies.append(time.perf_counter() - t0)
            bundle = compose_prompt(
                snippets_from_candidates(candidates),
                task.context_text,
                budget,
                get_adapter(task.language).comment_prefix(),
            )
            pred = complete(bundle, config.llm)
            id_em, id_f1 = identifier_match(pred, task.ground_truth, task.language.value, config.ordered_identifier_em)
            record.update(
                prediction=pred,
                snippets=[[c.entry.file_path, c.entry.value_start, c.entry.value_end] for c in candidates[: bundle.snippet_count]],
                em=exact_match(pred, task.ground_truth),
                es=edit_similarity(pred, task.ground_truth),
                id_em=id_em,
                id_f1=id_f1,
                error=None,
            )
        except CCGError as exc:
            failures += 1
            record.update(prediction="", snippets=[], em=0, es=0.0, id_em=0, id_f1=0.0, error=f"{type(exc).__name__}: {exc}")
        records.append(record)
    latency = None
    if latencies:
        latency = {
            "mean_seconds": statistics.fmean(latencies),
            "median_seconds": statistics.median(latencies),
            "max_seconds": max(latencies),
        }
    return EvalReport(records=records, aggregates=_aggregate(records), failures=failures, db_stats=db_stats, latency=latency)
