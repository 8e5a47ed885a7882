"""Exception hierarchy for guarded-lab."""

from typing import Any


class LabError(Exception):
    """Base class for every error raised by guarded-lab."""


class InvalidStructureError(LabError, ValueError):
    """A value violates one of its construction invariants."""

    def __init__(self, message: str, witness: Any = None) -> None:
        super().__init__(message)
        self.witness = witness


class NaturalityError(InvalidStructureError):
    """A staged map fails naturality at a demanded stage."""

    def __init__(self, message: str, stage: int, element: Any) -> None:
        super().__init__(message, witness=(stage, element))
        self.stage = stage
        self.element = element


class ClockError(InvalidStructureError):
    """A clock-indexed construction was demanded where its clock is not available."""


class ExplosionError(LabError):
    """A combinatorial guard refused to enumerate a structure that is too large."""

    def __init__(self, what: str, estimate: int, cap: int) -> None:
        super().__init__(f"Refusing to enumerate {what}: {estimate} exceeds the cap of {cap}")
        self.estimate = estimate
        self.cap = cap


class FormatError(LabError):
    """Malformed input document; `path` points at the offending JSON location."""

    def __init__(self, message: str, path: str = "$") -> None:
        super().__init__(f"{path}: {message}")
        self.path = path
        self.reason = message
