"""Coarse-to-fine retrieval over the statement database.

The coarse stage ranks every entry by Jaccard similarity between token bags
of the query's and the entry's sequence slices. The fine stage re-ranks only
the coarse top-k by a structural edit cost: the query slice is greedily
aligned to the candidate slice, and each vertex and edge edit is weighted by
``gamma ** hop`` so context far from the completion point matters less.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

from .errors import EmptyDatabase, InvalidGamma
from .graph import Statement
from .index_store import Database, IndexEntry
from .slicer import CCGSlice

DEFAULT_COARSE_K = 50
DEFAULT_TOP_M = 10
DEFAULT_GAMMA = 0.1


def jaccard(a: frozenset[str] | set[str], b: frozenset[str] | set[str]) -> float:
    """|a & b| / |a | b|; two empty bags score 0."""
    if not a and not b:
        return 0.0
    inter = len(a & b)
    return inter / (len(a) + len(b) - inter)


def substitution_cost(q: Statement, c: Statement) -> float:
    """Cost of aligning query vertex ``q`` with candidate vertex ``c``."""
    if q.is_dummy:
        return 0.0
    if c.is_dummy:
        return 1.0
    return 1.0 - jaccard(q.token_set, c.token_set)


@dataclass
class Candidate:
    entry: IndexEntry
    coarse_score: float
    fine_cost: float | None = None
    rank: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "file_path": self.entry.file_path,
            "anchor_line": self.entry.anchor_line,
            "snippet": self.entry.value,
            "coarse_score": self.coarse_score,
            "fine_cost": self.fine_cost,
            "rank": self.rank,
        }


@dataclass(frozen=True)
class Alignment:
    pairs: tuple[tuple[int, int], ...]
    unmatched_query: tuple[int, ...]

    @property
    def mapping(self) -> dict[int, int]:
        return dict(self.pairs)


@dataclass
class RetrievalStats:
    """Counters filled in by :func:`retrieve`; used to check stage locality."""

    coarse_scored: int = 0
    fine_scored: int = 0
    coarse_seconds: float = 0.0
    fine_seconds: float = 0.0
    aligned_entries: list[tuple[str, int, int]] = field(default_factory=list)

    @property
    def fine_share(self) -> float:
        total = self.coarse_seconds + self.fine_seconds
        return self.fine_seconds / total if total else 0.0


def _entry_key(e: IndexEntry) -> tuple[str, int, int]:
    return (e.file_path, e.anchor_line, e.key.anchor_id)


def coarse_retrieve(db: Database | Sequence[IndexEntry], query: CCGSlice, k: int = DEFAULT_COARSE_K) -> list[Candidate]:
    entries = db.entries if isinstance(db, Database) else tuple(db)
    if not entries:
        raise EmptyDatabase("database has no entries")
    if k < 1:
        raise ValueError("k must be >= 1")
    bag = query.sequence.token_bag
    scored = ((jaccard(bag, e.token_bag), e) for e in entries)
    best = heapq.nsmallest(k, scored, key=lambda se: (-se[0], _entry_key(se[1])))
    return [Candidate(entry=e, coarse_score=s, rank=i) for i, (s, e) in enumerate(best, 1)]


def greedy_align(query: CCGSlice, cand: CCGSlice) -> Alignment:
    """Greedy injective alignment of query vertices onto candidate vertices.

    The placeholder anchor is paired with the candidate's anchor first.
    Other query vertices, nearest first, each take the cheapest unused
    candidate vertex; a best cost of 1 or more leaves the vertex unmatched.
    """
    # token sets inlined from substitution_cost; None marks a placeholder
    free = [(v.id, None if v.statement.is_dummy else v.statement.token_set) for v in cand.nearest_first]
    pairs: list[tuple[int, int]] = []
    unmatched: list[int] = []
    todo = list(query.nearest_first)
    anchor = query.anchor
    if anchor.statement.is_dummy and cand.anchor_id in cand:
        pairs.append((anchor.id, cand.anchor_id))
        free = [f for f in free if f[0] != cand.anchor_id]
        todo.remove(anchor)
    for v in todo:
        if v.statement.is_dummy:
            best_idx = 0 if free else -1
        else:
            qt = v.statement.token_set
            best_cost, best_idx = 1.0, -1
            for idx, (_, ct) in enumerate(free):
                if ct is None or not (qt or ct):
                    continue
                inter = len(qt & ct)
                cost = 1.0 - inter / (len(qt) + len(ct) - inter)
                if cost < best_cost:
                    best_cost, best_idx = cost, idx
                    if cost == 0.0:
                        break
        if best_idx < 0:
            unmatched.append(v.id)
        else:
            pairs.append((v.id, free.pop(best_idx)[0]))
    return Alignment(pairs=tuple(pairs), unmatched_query=tuple(unmatched))


def decay_sed(query: CCGSlice, cand: CCGSlice, alignment: Alignment, gamma: float = DEFAULT_GAMMA) -> float:
    """Hop-decayed edit cost of turning ``query`` into a subgraph of ``cand``."""
    if not (0.0 < gamma <= 1.0):
        raise InvalidGamma(f"gamma must be in (0, 1], got {gamma}")
    amap = alignment.mapping
    weight = {v.id: gamma**v.hop for v in query.vertices}
    total = 0.0
    for v in query.vertices:
        if v.id in amap:
            total += weight[v.id] * substitution_cost(v.statement, cand.vertex(amap[v.id]).statement)
        else:
            total += weight[v.id]
    cand_types = cand.edge_types
    for src, etype, dst in query.edges:
        image = (amap.get(src), amap.get(dst))
        types = cand_types.get(image) if None not in image else None
        if types is None:
            total += weight[src]
        elif etype not in types:
            total += weight[src]
    return total


def rerank(
    candidates: Sequence[Candidate],
    query: CCGSlice,
    gamma: float = DEFAULT_GAMMA,
    top_m: int = DEFAULT_TOP_M,
    stats: RetrievalStats | None = None,
) -> list[Candidate]:
    if not (0.0 < gamma <= 1.0):
        raise InvalidGamma(f"gamma must be in (0, 1], got {gamma}")
    scored = []
    for c in candidates:
        cost = decay_sed(query, c.entry.key, greedy_align(query, c.entry.key), gamma)
        if stats is not None:
            stats.fine_scored += 1
            stats.aligned_entries.append(_entry_key(c.entry))
        scored.append(replace(c, fine_cost=cost))
    scored.sort(key=lambda c: (c.fine_cost, -c.coarse_score, _entry_key(c.entry)))
    for i, c in enumerate(scored, 1):
        c.rank = i
    return scored[:top_m]


def retrieve(
    db: Database,
    query: CCGSlice,
    k: int = DEFAULT_COARSE_K,
    top_m: int = DEFAULT_TOP_M,
    gamma: float = DEFAULT_GAMMA,
    stats: RetrievalStats | None = None,
) -> list[Candidate]:
    """Coarse top-``k`` followed by the fine re-rank, keeping ``top_m``."""
    t0 = time.perf_counter()
    coarse = coarse_retrieve(db, query, k)
    t1 = time.perf_counter()
    ranked = rerank(coarse, query, gamma, top_m, stats)
    t2 = time.perf_counter()
    if stats is not None:
        stats.coarse_scored += len(db)
        stats.coarse_seconds += t1 - t0
        stats.fine_seconds += t2 - t1
    return ranked
