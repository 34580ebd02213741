"""Exception types raised across the package."""

from __future__ import annotations


class CCGError(Exception):
    """Base class for all package errors."""


class UnsupportedLanguage(CCGError):
    pass


class ParseFailure(CCGError):
    pass


class AnchorNotFound(CCGError):
    pass


class EmptyContext(CCGError):
    pass


class NoSourceFiles(CCGError):
    pass


class VersionMismatch(CCGError):
    pass


class EmptyDatabase(CCGError):
    pass


class InvalidGamma(CCGError):
    pass


class InsufficientEligibleLines(CCGError):
    pass


class EndpointError(CCGError):
    def __init__(self, status: int | None, message: str = "") -> None:
        self.status = status
        super().__init__(f"endpoint error (status={status}): {message}" if message else f"endpoint error (status={status})")


class Timeout(CCGError):
    pass


class BudgetExceeded(CCGError):
    pass
