"""Exception types shared across the engine."""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine-level failures."""


class UnknownVariableError(EngineError):
    """A referenced variable name is not part of the relevant space/graph."""


class ZeroProbabilityError(EngineError):
    """Conditioning on (or observing) an event of probability zero."""


class CycleError(EngineError):
    """A directed cycle where acyclicity is required.

    The offending cycle is kept on ``self.cycle`` as a tuple of node names
    ``(v0, v1, ..., v0)`` so callers can show a witness.
    """

    def __init__(self, message: str, cycle: tuple = ()):
        super().__init__(message)
        self.cycle = tuple(cycle)


class ParseError(EngineError):
    """Syntax or semantic error in a model file or query string.

    Carries a 1-based ``line`` and ``col`` so front ends can point at the
    offending token.
    """

    def __init__(self, message: str, line: int, col: int, expected: tuple = ()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = tuple(expected)
        detail = message
        if self.expected:
            detail += " (expected: %s)" % ", ".join(self.expected)
        super().__init__("line %d, col %d: %s" % (line, col, detail))
