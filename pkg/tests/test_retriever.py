import math
import random

import pytest

from ccgrag.errors import EmptyDatabase, InvalidGamma
from ccgrag.graph import CodeContextGraph, EdgeType, Statement, StatementKind, dummy_statement
from ccgrag.index_store import IndexEntry, build_database
from ccgrag.lexer import tokenize
from ccgrag.retriever import (
    Alignment,
    RetrievalStats,
    coarse_retrieve,
    decay_sed,
    greedy_align,
    jaccard,
    rerank,
    retrieve,
)
from ccgrag.slicer import CCGSlice, SliceVertex, query_ccg, slice
from helpers import all_injective_maps, random_slice, reference_jaccard, reference_sed, write_duplication_repo


def stmt(vid: int, text: str, kind=StatementKind.SIMPLE, line: int | None = None) -> Statement:
    line = vid + 1 if line is None else line
    return Statement(vid, "f.py", line, line, text, kind, tuple(tokenize(text)))


def make_slice(stmts, hops, edges, anchor=0) -> CCGSlice:
    verts = [SliceVertex(s, h, via_cf=True) for s, h in zip(stmts, hops)]
    return CCGSlice(anchor, tuple(verts), tuple(edges), 5, 20, "f.py")


def entry_for(s: CCGSlice, path: str = "f.py", line: int = 1) -> IndexEntry:
    return IndexEntry(s, f"value {path}:{line}", path, line, line, line)


@pytest.mark.parametrize(
    "a,b,expected",
    [({"a", "b"}, {"a", "b"}, 1.0), ({"a"}, {"b"}, 0.0), ({"a", "b", "c"}, {"b", "c", "d"}, 0.5), (set(), set(), 0.0)],
)
def test_jaccard(a, b, expected):
    assert jaccard(frozenset(a), frozenset(b)) == expected


def test_jaccard_random_against_reference():
    rng = random.Random(1)
    for _ in range(200):
        a = frozenset(rng.sample("abcdefgh", rng.randint(0, 8)))
        b = frozenset(rng.sample("abcdefgh", rng.randint(0, 8)))
        assert jaccard(a, b) == reference_jaccard(a, b)


def test_identity_entry_ranks_first():
    rng = random.Random(4)
    slices = [random_slice(rng, dummy_anchor=False) for _ in range(30)]
    entries = [entry_for(s, f"f{i}.py") for i, s in enumerate(slices)]
    query = slices[7]
    top = coarse_retrieve(entries, query, 5)[0]
    assert top.coarse_score == 1.0
    assert query.sequence.token_bag == top.entry.token_bag


def test_k_larger_than_db_returns_all_sorted():
    rng = random.Random(2)
    entries = [entry_for(random_slice(rng), f"f{i}.py") for i in range(8)]
    out = coarse_retrieve(entries, random_slice(rng), 100)
    assert len(out) == 8
    scores = [c.coarse_score for c in out]
    assert scores == sorted(scores, reverse=True)
    assert [c.rank for c in out] == list(range(1, 9))


def test_coarse_errors():
    with pytest.raises(EmptyDatabase):
        coarse_retrieve([], random_slice(random.Random(0)), 3)


def query_with_neighbor(text: str) -> CCGSlice:
    q = [dummy_statement(1, "f.py", 2), stmt(0, text)]
    return make_slice(q, [0, 1], [(0, EdgeType.CF, 1)], anchor=1)


def test_identity_alignment_costs_nothing():
    rng = random.Random(5)
    for _ in range(20):
        s = random_slice(rng)
        al = greedy_align(s, s)
        assert al.mapping == {v: v for v in s.ids}
        for gamma in (0.1, 0.5, 1.0):
            assert decay_sed(s, s, al, gamma) == 0.0


def test_anchor_only_candidate():
    q = query_with_neighbor("x = compute(y)")
    cand = make_slice([stmt(0, "", StatementKind.DUMMY)], [0], [])
    al = greedy_align(q, cand)
    assert al.pairs == ((1, 0),) and al.unmatched_query == (0,)
    # the hop-1 vertex and its CF edge are both deleted: 0.1 + 0.1
    assert decay_sed(q, cand, al, 0.1) == pytest.approx(0.2, abs=1e-12)


def test_greedy_prefers_nearest_vertex_first():
    # query: anchor(0), a at hop 1 ("x y"), b at hop 2 ("x")
    q = make_slice([stmt(0, "", StatementKind.DUMMY), stmt(1, "x y"), stmt(2, "x")], [0, 1, 2], [])
    # candidate: anchor(0), c ("x") and d ("y z")
    c = make_slice([stmt(0, "", StatementKind.DUMMY), stmt(1, "x"), stmt(2, "y z")], [0, 1, 1], [])
    al = greedy_align(q, c)
    # a is placed first and takes c (cost 1/2) even though b would match c exactly;
    # b is then left with d (cost 1) and stays unmatched
    assert al.mapping == {0: 0, 1: 1}
    assert al.unmatched_query == (2,)
    exhaustive = min(decay_sed(q, c, Alignment(tuple(m.items()), ()), 0.5) for m in all_injective_maps(q.ids, c.ids))
    assert decay_sed(q, c, al, 0.5) >= exhaustive


def test_greedy_matches_exhaustive_when_costs_are_separable():
    q = make_slice([stmt(0, "", StatementKind.DUMMY), stmt(1, "a b"), stmt(2, "c d")], [0, 1, 2], [])
    c = make_slice([stmt(0, "", StatementKind.DUMMY), stmt(1, "c d"), stmt(2, "a b")], [0, 1, 1], [])
    al = greedy_align(q, c)
    assert al.mapping == {0: 0, 1: 2, 2: 1}
    best = min(decay_sed(q, c, Alignment(tuple(m.items()), ()), 0.5) for m in all_injective_maps(q.ids, c.ids))
    assert decay_sed(q, c, al, 0.5) == best == 0.0


def test_four_vertex_pair_term_by_term():
    q = make_slice(
        [stmt(0, "", StatementKind.DUMMY), stmt(1, "a = f ( x )"), stmt(2, "if a :", StatementKind.PREDICATE), stmt(3, "x = 1")],
        [0, 1, 2, 2],
        [(1, EdgeType.CF, 0), (2, EdgeType.CF, 1), (2, EdgeType.CD, 1), (3, EdgeType.DD, 1)],
    )
    c = make_slice(
        [stmt(0, "", StatementKind.DUMMY), stmt(1, "a = g ( x )"), stmt(2, "if a :", StatementKind.PREDICATE)],
        [0, 1, 2],
        [(1, EdgeType.CF, 0), (2, EdgeType.CF, 1)],
    )
    al = greedy_align(q, c)
    assert al.mapping == {0: 0, 1: 1, 2: 2}
    gamma = 0.5
    # vertex terms: a = f(x) vs a = g(x) shares 5 of 7 tokens; x = 1 unmatched
    expected = gamma**1 * (1 - 5 / 7) + gamma**2 * 1
    # edge terms: CD 2->1 has no CD image, DD 3->1 has an unmatched source
    expected += gamma**2 + gamma**2
    assert decay_sed(q, c, al, gamma) == pytest.approx(expected, abs=1e-12)
    assert decay_sed(q, c, al, gamma) == pytest.approx(reference_sed(q, c, al.mapping, gamma), abs=1e-12)


@pytest.mark.parametrize("gamma", [0.0, -0.1, 1.5])
def test_invalid_gamma(gamma):
    s = random_slice(random.Random(0))
    with pytest.raises(InvalidGamma):
        decay_sed(s, s, greedy_align(s, s), gamma)


def test_rerank_single_candidate():
    rng = random.Random(3)
    q = random_slice(rng)
    (c,) = coarse_retrieve([entry_for(random_slice(rng))], q, 5)
    (out,) = rerank([c], q)
    assert out.fine_cost is not None and out.entry is c.entry


def test_rerank_identity_first():
    rng = random.Random(8)
    q = random_slice(rng, dummy_anchor=True)
    entries = [entry_for(random_slice(rng), f"f{i}.py") for i in range(20)] + [entry_for(q, "same.py")]
    ranked = rerank(coarse_retrieve(entries, q, 50), q, top_m=5)
    assert ranked[0].entry.file_path == "same.py"
    assert ranked[0].fine_cost == 0.0 and ranked[0].rank == 1


def test_rerank_matches_full_recompute(tmp_path):
    repo = write_duplication_repo(tmp_path, pairs=8)
    db = build_database(repo, ["python"])
    lines = (repo / "copies/helper_02.py").read_text().splitlines()
    q = query_ccg("\n".join(lines[:14]) + "\n", "python")
    stats = RetrievalStats()
    ranked = retrieve(db, q, k=50, top_m=50, stats=stats)
    oracle = sorted(
        ((decay_sed(q, e.key, greedy_align(q, e.key), 0.1), -c.coarse_score, e.file_path, e.anchor_line, e.key.anchor_id), e)
        for c in coarse_retrieve(db, q, 50)
        for e in [c.entry]
    )
    assert [c.entry for c in ranked] == [e for _, e in oracle]
    assert stats.fine_scored == 50 and stats.coarse_scored == len(db)
    assert all(math.isfinite(c.fine_cost) for c in ranked)


def test_retrieve_on_duplicate_returns_donor(tmp_path):
    repo = write_duplication_repo(tmp_path, pairs=8)
    db = build_database(repo, ["python"])
    lines = (repo / "copies/helper_05.py").read_text().splitlines()
    q = query_ccg("\n".join(lines[:15]) + "\n", "python")
    from ccgrag.index_store import exclude_file

    ranked = retrieve(exclude_file(db, "copies/helper_05.py"), q)
    assert ranked[0].entry.file_path == "original/helper_05.py"


def test_slice_built_from_graph_scores_zero_against_itself():
    verts = [stmt(0, "a = 1"), stmt(1, "b = a"), stmt(2, "c = b")]
    g = CodeContextGraph(tuple(verts), ((0, EdgeType.CF, 1), (1, EdgeType.CF, 2), (0, EdgeType.DD, 1)), "python")
    s = slice(g, 2)
    assert decay_sed(s, s, greedy_align(s, s)) == 0.0
