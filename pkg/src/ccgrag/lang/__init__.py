"""Per-language adapters that turn source text into a statement skeleton."""

from __future__ import annotations

from ..graph import Language
from .base import LanguageAdapter
from .java import JavaAdapter
from .python import PythonAdapter

_ADAPTERS: dict[Language, LanguageAdapter] = {
    Language.PYTHON: PythonAdapter(),
    Language.JAVA: JavaAdapter(),
}


def get_adapter(language: str | Language) -> LanguageAdapter:
    """Adapter for ``language``; raises ``UnsupportedLanguage`` for unknown names."""
    return _ADAPTERS[Language.parse(language)]


__all__ = ["LanguageAdapter", "get_adapter"]
