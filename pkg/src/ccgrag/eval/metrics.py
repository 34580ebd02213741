"""Line-level completion metrics."""

from __future__ import annotations

from collections import Counter

from ..lexer import identifiers


def normalize(text: str) -> str:
    """Strip outer whitespace and collapse inner runs to one space."""
    return " ".join(text.split())


def exact_match(pred: str, truth: str) -> int:
    return int(normalize(pred) == normalize(truth))


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def edit_similarity(pred: str, truth: str) -> float:
    """1 - Levenshtein / longer length, on normalized strings; two empties score 1."""
    a, b = normalize(pred), normalize(truth)
    if not a and not b:
        return 1.0
    return 1.0 - levenshtein(a, b) / max(len(a), len(b))


def identifier_match(pred: str, truth: str, language: str = "python", ordered: bool = True) -> tuple[int, float]:
    """(identifier exact match, identifier F1) between two lines.

    Exact match compares the ordered identifier lists, or the sets when
    ``ordered`` is false; F1 is over the identifier multisets.
    """
    p, t = identifiers(pred, language), identifiers(truth, language)
    if not p and not t:
        return 1, 1.0
    em = int(p == t) if ordered else int(set(p) == set(t))
    common = sum((Counter(p) & Counter(t)).values())
    if common == 0:
        return em, 0.0
    precision, recall = common / len(p), common / len(t)
    return em, 2 * precision * recall / (precision + recall)
