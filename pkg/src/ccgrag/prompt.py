"""Prompt assembly: retrieved snippets as comments, then the raw context.

Snippets are placed worst first so the best one sits right above the
context. Half of the (slack-adjusted) token budget goes to snippets and
half to the context; snippets are kept as a best-first prefix that fits,
and the context loses whole lines from its start when it is too long.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .lexer import estimate_tokens

SNIPPET_HEADER = "the below code fragment can be found in:"
BUDGET_SLACK = 0.9
MAX_SNIPPETS = 10


@dataclass(frozen=True)
class Snippet:
    file_path: str
    text: str


@dataclass(frozen=True)
class PromptBundle:
    prompt_text: str
    snippet_count: int
    token_estimate: int
    truncated: bool
    # kept for the deterministic mock models, best snippet first
    snippets: tuple[Snippet, ...] = ()
    context: str = ""


def snippets_from_candidates(candidates: Iterable) -> list[Snippet]:
    """Ranked retriever candidates (rank 1 first) to snippets."""
    return [Snippet(c.entry.file_path, c.entry.value) for c in candidates]


def render_snippet(snippet: Snippet, comment_prefix: str = "#") -> str:
    lines = [f"{comment_prefix} {SNIPPET_HEADER}", f"{comment_prefix} {snippet.file_path}"]
    for line in snippet.text.split("\n"):
        lines.append(f"{comment_prefix} {line}" if line.strip() else comment_prefix)
    return "\n".join(lines) + "\n\n"


def truncate_head(text: str, budget: int) -> str:
    """Drop whole lines from the start until ``text`` fits in ``budget`` tokens."""
    if estimate_tokens(text) <= budget:
        return text
    lines = text.split("\n")
    costs = [estimate_tokens(line) + 1 for line in lines]
    total = sum(costs) - 1
    start = 0
    while start < len(lines) and total > budget:
        total -= costs[start]
        start += 1
    return "\n".join(lines[start:])


def compose_prompt(
    snippets: Iterable[Snippet],
    context_text: str,
    window_budget_tokens: int | None = None,
    comment_prefix: str = "#",
    max_snippets: int = MAX_SNIPPETS,
) -> PromptBundle:
    ranked = list(snippets)[:max_snippets]
    if window_budget_tokens is None:
        half = None
    else:
        half = int(window_budget_tokens * BUDGET_SLACK) // 2
    kept: list[Snippet] = []
    blocks: list[str] = []
    used = 0
    for s in ranked:
        block = render_snippet(s, comment_prefix)
        cost = estimate_tokens(block)
        if half is not None and used + cost > half:
            break
        kept.append(s)
        blocks.append(block)
        used += cost
    context = context_text if half is None else truncate_head(context_text, half)
    prompt = "".join(reversed(blocks)) + context
    return PromptBundle(
        prompt_text=prompt,
        snippet_count=len(kept),
        token_estimate=estimate_tokens(prompt),
        truncated=len(kept) < len(ranked) or context != context_text,
        snippets=tuple(kept),
        context=context,
    )
