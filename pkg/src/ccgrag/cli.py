"""``ccgrag`` command line: index, query, complete, eval.

Exit codes: 0 success, 1 usage or data error, 2 model endpoint error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

from .ccg import read_source
from .config import Config, load_config
from .errors import CCGError, EmptyContext, EndpointError, Timeout
from .eval import TaskLevel, WindowIndex, duplication_ratio, generate_tasks, run_eval
from .eval.runner import RETRIEVERS
from .graph import Language
from .index_store import build_database, load, save
from .lang import get_adapter
from .llm import complete
from .prompt import compose_prompt, snippets_from_candidates
from .retriever import retrieve
from .slicer import query_ccg

EXIT_OK, EXIT_DATA, EXIT_SERVICE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_DATA, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--verbose", "-v", action="store_true", help="echo the effective config to stderr")
    p.add_argument("--hops", dest="h", type=int, help="maximum control-flow hops per slice")
    p.add_argument("--max-statements", dest="l", type=int, help="maximum statements per slice")
    p.add_argument("--language", action="append", dest="languages", choices=[x.value for x in Language])


def _add_retrieval(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, help="decay factor per hop")
    p.add_argument("--coarse-k", type=int, help="candidates kept by the coarse stage")
    p.add_argument("--top-m", type=int, help="snippets kept after re-ranking")


def _add_llm(p: argparse.ArgumentParser) -> None:
    p.add_argument("--endpoint", dest="llm_endpoint_url", help="completions base URL or mock:<model>")
    p.add_argument("--model", dest="llm_model_name")
    p.add_argument("--max-output-tokens", dest="llm_max_output_tokens", type=int)
    p.add_argument("--context-window", dest="llm_context_window_tokens", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ccgrag", description="Graph-based retrieval for repository code completion.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("index", help="build the statement database for a repository")
    p.add_argument("repo_root")
    p.add_argument("--db", required=True)
    p.add_argument("--exclude", action="append", dest="exclude_globs", help="glob of repo paths to skip")
    _add_common(p)

    for name, help_text in (("query", "retrieve snippets for a context"), ("complete", "predict the next line")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("context", nargs="?", default="-", help="context file (default: stdin)")
        p.add_argument("--db", required=True)
        p.add_argument("--context-language", choices=[x.value for x in Language], help="defaults to the file extension")
        _add_common(p)
        _add_retrieval(p)
        if name == "query":
            p.add_argument("--json", action="store_true", help="print JSON")
        else:
            _add_llm(p)
            p.add_argument("--retriever", choices=RETRIEVERS[::2], default="graph")
            p.add_argument("--dry-run", action="store_true", help="print the prompt instead of calling the model")

    p = sub.add_parser("eval", help="generate tasks and score a retrieval pipeline")
    p.add_argument("repo_root")
    p.add_argument("--level", choices=[x.value for x in TaskLevel], default="line")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--retriever", choices=RETRIEVERS, default="graph")
    p.add_argument("--compare", action="store_true", help="run graph and window retrieval side by side")
    p.add_argument("--db", help="prebuilt database (graph retriever)")
    p.add_argument("--include", action="append", dest="include_globs", help="only sample targets from these paths")
    p.add_argument("--exclude", action="append", dest="exclude_globs")
    p.add_argument("--report", default="eval_report.json")
    p.add_argument("--tasks-out", help="also write the sampled tasks as JSON lines")
    p.add_argument("--include-latency", action="store_true", help="store latency stats in the report file")
    p.add_argument("--window", type=int)
    p.add_argument("--stride", type=int)
    _add_common(p)
    _add_retrieval(p)
    _add_llm(p)
    return parser


def _effective_config(args: argparse.Namespace) -> Config:
    keys = (
        "languages h l gamma coarse_k top_m window stride exclude_globs "
        "llm_endpoint_url llm_model_name llm_max_output_tokens llm_context_window_tokens"
    ).split()
    cfg = load_config(args.config).with_overrides(**{k: getattr(args, k, None) for k in keys})
    if args.verbose:
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True), file=sys.stderr)
    return cfg


def _read_context(args: argparse.Namespace) -> tuple[str, Language]:
    if args.context == "-":
        text, lang = sys.stdin.read(), None
    else:
        path = Path(args.context)
        text = read_source(path)
        lang = Language.JAVA if path.suffix == ".java" else Language.PYTHON
    if args.context_language:
        lang = Language.parse(args.context_language)
    return text, lang or Language.PYTHON


def cmd_index(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    start = time.perf_counter()
    db = build_database(args.repo_root, cfg.languages, cfg.h, cfg.l, cfg.exclude_globs)
    save(db, args.db)
    s = db.stats
    print(
        f"indexed {s.entries} entries from {s.files} files "
        f"({s.skipped_files} skipped, {s.source_lines} lines) in {time.perf_counter() - start:.2f}s -> {args.db}"
    )
    return EXIT_OK


def _retrieve_for(args: argparse.Namespace, cfg: Config, text: str, lang: Language):
    db = load(args.db)
    query = query_ccg(text, lang, cfg.h, cfg.l)
    return retrieve(db, query, cfg.coarse_k, cfg.top_m, cfg.gamma)


def cmd_query(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    text, lang = _read_context(args)
    ranked = _retrieve_for(args, cfg, text, lang)
    if args.json:
        print(json.dumps([c.to_dict() for c in ranked], indent=2, sort_keys=True))
        return EXIT_OK
    for c in ranked:
        print(f"#{c.rank} {c.entry.file_path}:{c.entry.anchor_line} coarse={c.coarse_score:.4f} fine={c.fine_cost:.4f}")
        print(c.entry.value)
        print()
    return EXIT_OK


def cmd_complete(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    text, lang = _read_context(args)
    ranked = []
    if args.retriever == "graph":
        try:
            ranked = _retrieve_for(args, cfg, text, lang)
        except EmptyContext:
            ranked = []
    bundle = compose_prompt(
        snippets_from_candidates(ranked),
        text,
        cfg.llm.context_window_tokens - cfg.llm.max_output_tokens,
        get_adapter(lang).comment_prefix(),
    )
    if args.dry_run:
        sys.stdout.write(bundle.prompt_text)
        return EXIT_OK
    print(complete(bundle, cfg.llm))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    tasks = generate_tasks(
        args.repo_root, args.level, args.n, args.seed, cfg.languages, cfg.exclude_globs, args.include_globs
    )
    if args.tasks_out:
        from .eval import save_tasks

        save_tasks(tasks, args.tasks_out)
    retrievers = ["graph", "window"] if args.compare else [args.retriever]
    db = load(args.db) if args.db and "graph" in retrievers else None
    results = {}
    for name in retrievers:
        windows = None
        if name == "window" and tasks:
            windows = WindowIndex.build(args.repo_root, cfg.languages, cfg.window, cfg.stride, cfg.exclude_globs)
        report = run_eval(tasks, cfg.pipeline(name), db=db, windows=windows)
        results[name] = report
    payload = {
        "level": args.level,
        "n": len(tasks),
        "seed": args.seed,
        "config": cfg.to_dict(),
        "duplication_ratio": duplication_ratio(args.repo_root, cfg.languages) if tasks else {"code": 0.0, "identifier": 0.0},
        "results": {name: r.to_dict(args.include_latency) for name, r in results.items()},
    }
    Path(args.report).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for name, r in results.items():
        print(f"[{name}] tasks={len(tasks)} failures={r.failures}")
        print(r.table())
        if r.latency:
            print(f"retrieval latency: mean {r.latency['mean_seconds'] * 1000:.1f} ms, max {r.latency['max_seconds'] * 1000:.1f} ms")
    print(f"report written to {args.report}")
    return EXIT_OK


COMMANDS = {"index": cmd_index, "query": cmd_query, "complete": cmd_complete, "eval": cmd_eval}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (EndpointError, Timeout) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SERVICE
    except CCGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
