"""Fixture builders and independent reference implementations used by the tests.

The reference implementations here are written straight from the algorithm
descriptions, deliberately naive, and share no code with the package.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from pathlib import Path

from ccgrag.graph import CodeContextGraph, EdgeType, Statement, StatementKind
from ccgrag.lexer import tokenize
from ccgrag.slicer import CCGSlice, SliceVertex

# -- duplication fixture -------------------------------------------------

_NOUNS = "order invoice ledger parcel sensor packet ticket record sample batch quota route shard token frame cursor bucket voucher signal lease".split()
_VERBS = "collect merge score filter group index rank split verify decode".split()


def _function(i: int, rng: random.Random) -> list[str]:
    noun = _NOUNS[i % len(_NOUNS)]
    verb = _VERBS[i % len(_VERBS)]
    limit = rng.randint(3, 97)
    scale = rng.randint(2, 9)
    name = f"{verb}_{noun}s_{i}"
    shape = i % 4
    body = [f"def {name}({noun}_items, threshold_{i}={limit}):"]
    body.append(f"    kept_{i} = []")
    body.append(f"    total_{i} = 0")
    if shape == 0:
        body += [
            f"    for {noun} in {noun}_items:",
            f"        weight_{i} = {noun}.weight * {scale}",
            f"        if weight_{i} > threshold_{i}:",
            f"            kept_{i}.append({noun}.key_{i})",
            f"        total_{i} += weight_{i}",
        ]
    elif shape == 1:
        body += [
            f"    index_{i} = 0",
            f"    while index_{i} < len({noun}_items):",
            f"        current_{i} = {noun}_items[index_{i}]",
            f"        if current_{i}.flag_{i} is None:",
            "            break",
            f"        total_{i} = total_{i} + current_{i}.size * {scale}",
            f"        index_{i} += {scale % 3 + 1}",
        ]
    elif shape == 2:
        body += [
            f"    lookup_{i} = {{item.name: item for item in {noun}_items}}",
            f"    for key_{i}, value_{i} in sorted(lookup_{i}.items()):",
            "        try:",
            f"            parsed_{i} = int(value_{i}.raw_{i}, {scale + 7})",
            "        except ValueError:",
            "            continue",
            f"        kept_{i}.append((key_{i}, parsed_{i}))",
            f"        total_{i} += parsed_{i}",
        ]
    else:
        body += [
            f"    groups_{i} = dict()",
            f"    for {noun} in {noun}_items:",
            f"        bucket_{i} = {noun}.region_{i} % {scale}",
            f"        groups_{i}.setdefault(bucket_{i}, []).append({noun})",
            f"    for bucket_{i}, members_{i} in groups_{i}.items():",
            f"        kept_{i}.extend(members_{i}[:threshold_{i}])",
            f"        total_{i} += len(members_{i})",
        ]
    body.append(f"    return kept_{i}, total_{i} / max(1, len({noun}_items))")
    return body


def write_duplication_repo(root: Path, pairs: int = 20, seed: int = 7) -> Path:
    """Repo with ``pairs`` functions under ``original/`` and near copies under ``copies/``.

    A copy keeps every code line of its original; only the blank-line layout
    and a closing comment differ, so line numbers shift between copies.
    """
    rng = random.Random(seed)
    (root / "original").mkdir(parents=True, exist_ok=True)
    (root / "copies").mkdir(parents=True, exist_ok=True)
    for i in range(pairs):
        fn = _function(i, rng)
        noun = _NOUNS[i % len(_NOUNS)].capitalize()
        head = [f"from records import {noun}", f"LIMIT_{i} = {rng.randint(100, 999)}"]
        doc = f'    """Helper number {i}."""'
        orig = [*head, "", "", fn[0], doc, *fn[1:], ""]
        copy = ["", head[0], "", head[1], "", "", "", fn[0], doc, ""]
        for j, line in enumerate(fn[1:]):
            copy.append(line)
            if j == 1:
                copy.append("")
        copy += ["", f"# kept in sync with original/helper_{i:02d}.py"]
        (root / "original" / f"helper_{i:02d}.py").write_text("\n".join(orig) + "\n")
        (root / "copies" / f"helper_{i:02d}.py").write_text("\n".join(copy) + "\n")
    return root


# -- random graphs and slices ------------------------------------------------

_WORDS = "a b c d e f g h i j x y z n m k".split()


def random_statement(vid: int, rng: random.Random, file_path: str = "r.py", kind: StatementKind | None = None) -> Statement:
    text = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(1, 4)))
    return Statement(
        id=vid,
        file_path=file_path,
        line_start=vid + 1,
        line_end=vid + 1,
        text=text,
        kind=kind or rng.choice([StatementKind.SIMPLE, StatementKind.PREDICATE]),
        tokens=tuple(tokenize(text)),
    )


def random_ccg(rng: random.Random, max_vertices: int = 40) -> CodeContextGraph:
    n = rng.randint(1, max_vertices)
    verts = [random_statement(i, rng) for i in range(n)]
    edges = set()
    for _ in range(rng.randint(0, 3 * n)):
        s, d = rng.randrange(n), rng.randrange(n)
        if s != d:
            edges.add((s, rng.choice(list(EdgeType)), d))
    for i in range(1, n):  # mostly forward flow, like real code
        if rng.random() < 0.7:
            edges.add((i - 1, EdgeType.CF, i))
    return CodeContextGraph(vertices=tuple(verts), edges=tuple(edges), language="python", file_path="r.py")


def random_slice(rng: random.Random, max_vertices: int = 12, dummy_anchor: bool | None = None) -> CCGSlice:
    n = rng.randint(1, max_vertices)
    if dummy_anchor is None:
        dummy_anchor = rng.random() < 0.5
    verts = []
    for i in range(n):
        if i == 0 and dummy_anchor:
            st = Statement(id=0, file_path="q.py", line_start=99, line_end=99, text="", kind=StatementKind.DUMMY)
        else:
            st = random_statement(i, rng, "q.py")
        verts.append(SliceVertex(st, 0 if i == 0 else rng.randint(0, 5), via_cf=True))
    edges = set()
    for _ in range(rng.randint(0, 3 * n)):
        s, d = rng.randrange(n), rng.randrange(n)
        if s != d:
            edges.add((s, rng.choice(list(EdgeType)), d))
    return CCGSlice(anchor_id=0, vertices=tuple(verts), edges=tuple(edges), h=5, l=20, file_path="q.py")


# -- hand-computed metric values ---------------------------------------------

# (prediction, truth, em, es, id_em, id_f1), all worked out by hand
METRIC_CASES = [
    ("x = 1", "x = 1", 1, 1.0, 1, 1.0),
    ("  x = 1", "x = 1", 1, 1.0, 1, 1.0),
    ("x = 1", "x = 2", 0, 1 - 1 / 5, 1, 1.0),
    ("abc", "", 0, 0.0, 0, 0.0),
    ("abc", "abd", 0, 1 - 1 / 3, 0, 0.0),
    ("foo(bar)", "foo(bar)", 1, 1.0, 1, 1.0),
    ("foo(bar)", "foo(baz)", 0, 1 - 1 / 8, 0, 0.5),
    # identifiers [a, b, b] vs [a, b]: common 2, precision 2/3, recall 1
    ("a = b + b", "a = b", 0, 1 - 4 / 9, 0, 0.8),
    ("", "", 1, 1.0, 1, 1.0),
    ("return x", "return  x", 1, 1.0, 1, 1.0),
    # same identifiers in a different order
    ("f(a, b)", "f(b, a)", 0, 1 - 2 / 7, 0, 1.0),
    ("self.total += n", "self.total += m", 0, 1 - 1 / 15, 0, 2 / 3),
    ("if ready:", "if done:", 0, 1 - 5 / 9, 0, 0.0),
    ("kitten", "sitting", 0, 1 - 3 / 7, 0, 0.0),
    ("print(x)", "", 0, 0.0, 0, 0.0),
    ("a.b.c", "a.b", 0, 1 - 2 / 5, 0, 0.8),
]


# -- reference implementations ---------------------------------------------


def reference_slice(graph: CodeContextGraph, anchor: int, h: int, l: int) -> tuple[set[int], dict[int, int]]:
    """Line-by-line transcription of the slicing pseudocode.

    Returns the slice vertex set and, for the CF-visited vertices, their hop.
    """
    cf_in: dict[int, list[int]] = {}
    dd_in: dict[int, list[int]] = {}
    cd_in: dict[int, list[int]] = {}
    for s, t, d in graph.edges:
        {EdgeType.CF: cf_in, EdgeType.DD: dd_in, EdgeType.CD: cd_in}[t].setdefault(d, []).append(s)
    X_CD: set[int] = set()
    X_CF: set[int] = set()
    X_DD: set[int] = set()
    q: deque[int] = deque([anchor])
    hops = {anchor: 0}
    visited = {anchor}
    while q:
        x = q.popleft()
        if hops[x] > h:
            break
        X_CF = X_CF | {x}
        X_DD = X_DD | set(dd_in.get(x, []))
        X_CD = X_CD | set(cd_in.get(x, []))
        if len(X_CF | X_CD | X_DD) >= l:
            break
        for z in sorted(set(cf_in.get(x, [])) - X_CF):
            if z not in visited:
                visited.add(z)
                hops[z] = hops[x] + 1
                q.append(z)
    return X_CF | X_DD | X_CD, {v: hops[v] for v in X_CF}


def reference_jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    union = a | b
    return len(a & b) / len(union) if union else 0.0


def reference_vertex_cost(v: Statement, u: Statement) -> float:
    if v.kind is StatementKind.DUMMY:
        return 0.0
    if u.kind is StatementKind.DUMMY:
        return 1.0
    return 1.0 - reference_jaccard(frozenset(v.tokens), frozenset(u.tokens))


def reference_sed(query: CCGSlice, cand: CCGSlice, pairs: dict[int, int], gamma: float) -> float:
    """Literal four-loop summation of the decay-with-distance edit cost."""
    hop = {v.statement.id: v.hop for v in query.vertices}
    qs = {v.statement.id: v.statement for v in query.vertices}
    cs = {v.statement.id: v.statement for v in cand.vertices}
    X_A = [v for v in qs if v in pairs]
    E_A = []
    for e in query.edges:
        v, t, u = e
        if v in pairs and u in pairs:
            if any(s == pairs[v] and d == pairs[u] for s, _, d in cand.edges):
                E_A.append(e)
    sed = 0.0
    for v in X_A:
        sed += gamma ** hop[v] * reference_vertex_cost(qs[v], cs[pairs[v]])
    for v in qs:
        if v not in X_A:
            sed += gamma ** hop[v] * 1
    for e in E_A:
        v, t, u = e
        images = [t2 for s, t2, d in cand.edges if s == pairs[v] and d == pairs[u]]
        sed += gamma ** hop[v] * min(0 if t2 == t else 1 for t2 in images)
    for e in query.edges:
        if e not in E_A:
            sed += gamma ** hop[e[0]] * 1
    return sed


def all_injective_maps(query_ids: list[int], cand_ids: list[int]):
    """Every partial injective map from query ids to candidate ids."""
    for k in range(len(query_ids) + 1):
        for qsub in itertools.combinations(query_ids, k):
            for csub in itertools.permutations(cand_ids, k):
                yield dict(zip(qsub, csub))


def reference_levenshtein(a: str, b: str) -> int:
    """Full-matrix edit distance."""
    m, n = len(a), len(b)
    dist = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        dist[i][0] = i
    for j in range(n + 1):
        dist[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            sub = 0 if a[i - 1] == b[j - 1] else 1
            dist[i][j] = min(dist[i - 1][j] + 1, dist[i][j - 1] + 1, dist[i - 1][j - 1] + sub)
    return dist[m][n]
