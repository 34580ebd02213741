"""Language-light lexer shared by indexing, prompting and scoring.

The same tokenization feeds the bag-of-words similarity, the prompt token
estimate and identifier extraction, so all three agree on what a token is.
"""

from __future__ import annotations

import keyword
import re
from functools import lru_cache

_TOKEN_RE = re.compile(
    r"""
    [A-Za-z_$][A-Za-z0-9_$]*                # identifiers and keywords
    | \d[A-Za-z0-9_.]*                      # numeric literals (loose)
    | "(?:\\.|[^"\\\n])*"                   # double-quoted string
    | '(?:\\.|[^'\\\n])*'                   # single-quoted string
    | \*\*=|//=|>>=|<<=|>>>|\.\.\.
    | ==|!=|<=|>=|->|::|:=|\*\*|//|\+=|-=|\*=|/=|%=|&=|\|=|\^=|&&|\|\||<<|>>|\+\+|--
    | \S
    """,
    re.VERBOSE,
)

_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*\Z")

PYTHON_KEYWORDS = frozenset(keyword.kwlist) | frozenset(getattr(keyword, "softkwlist", ()))

JAVA_KEYWORDS = frozenset(
    """
    abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while var record yield
    sealed permits non-sealed true false null
    """.split()
)

_KEYWORDS = {"python": PYTHON_KEYWORDS, "java": JAVA_KEYWORDS}


def tokenize(text: str) -> list[str]:
    """Split ``text`` into lexical tokens, dropping whitespace."""
    return _TOKEN_RE.findall(text)


@lru_cache(maxsize=65536)
def token_set(text: str) -> frozenset[str]:
    return frozenset(_TOKEN_RE.findall(text))


def estimate_tokens(text: str) -> int:
    """Approximate model token count; counts lexer tokens plus line breaks."""
    if not text:
        return 0
    return len(_TOKEN_RE.findall(text)) + text.count("\n")


def is_identifier(tok: str) -> bool:
    return bool(_IDENT_RE.match(tok))


def identifiers(text: str, language: str = "python") -> list[str]:
    """Ordered identifiers in ``text`` with the language's keywords removed."""
    kws = _KEYWORDS.get(language, PYTHON_KEYWORDS)
    return [t for t in _TOKEN_RE.findall(text) if _IDENT_RE.match(t) and t not in kws]


def keywords_for(language: str) -> frozenset[str]:
    return _KEYWORDS.get(language, PYTHON_KEYWORDS)
