from __future__ import annotations


class CoengageError(Exception):
    """Base class for every error raised by this package."""


class InputError(CoengageError, ValueError):
    """Invalid parameters, malformed input rows or inconsistent scenario specs."""


class NodeNotFoundError(CoengageError, LookupError):
    def __init__(self, handle: object) -> None:
        super().__init__(f"node not found: {handle!r}")
        self.handle = handle


class CapacityError(CoengageError):
    """Raised when a phase would exceed its configured memory or work budget."""

    def __init__(self, phase: str, message: str) -> None:
        super().__init__(f"[{phase}] {message}")
        self.phase = phase
