"""Shared exception types."""

from __future__ import annotations


class NumericalError(RuntimeError):
    """A linear-algebra step failed even after jitter escalation.

    ``jitter_levels`` records every jitter value that was attempted.
    """

    def __init__(self, message: str, jitter_levels: tuple[float, ...] = ()):
        super().__init__(message)
        self.jitter_levels = tuple(jitter_levels)


class UnsupportedStrategyError(RuntimeError):
    """Requested a selection strategy the objective cannot support."""
