"""
errors.py
────────────────────────────────────────────────────────────────────────────────
Reason-coded exceptions shared by every module.

Each error carries a stable ``reason`` string; the CLI prints
``error: <reason>: <message>`` and exits with status 2.
"""

from typing import List, Optional, Sequence


class SAdicError(ValueError):
    reason = "precondition"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def one_line(self) -> str:
        return f"error: {self.reason}: {self.message}".replace("\n", " ")


class PreconditionError(SAdicError):
    reason = "precondition"


class ShortStreamError(SAdicError):
    reason = "short-stream"

    def __init__(self, requested: int, available: int):
        super().__init__(f"stream is finite with {available} letters, {requested} requested")
        self.requested = requested
        self.available = available


class AlphabetMismatchError(SAdicError):
    reason = "alphabet-mismatch"


class InsufficientOccurrencesError(SAdicError):
    reason = "insufficient-occurrences"

    def __init__(self, word: str, occurrences: int):
        super().__init__(f"'{word}' occurs {occurrences} time(s) in the window, at least 2 needed")
        self.occurrences = occurrences


class NonRecurrentWindowError(SAdicError):
    reason = "non-recurrent-window"


class SeedIncompatibilityError(SAdicError):
    reason = "seed-incompatible"

    def __init__(self, index: int, detail: str = ""):
        msg = f"seed compatibility fails at index {index}"
        super().__init__(f"{msg} ({detail})" if detail else msg)
        self.index = index


class StalledGrowthError(SAdicError):
    reason = "not-everywhere-growing"

    def __init__(self, index: int, steps: int):
        super().__init__(f"approximant length did not grow during {steps} steps up to depth {index}")
        self.index = index


class NotPrimitiveError(SAdicError):
    reason = "not-primitive"


class NotConvergedError(SAdicError):
    reason = "not-converged"


class ConeError(SAdicError):
    reason = "outside-cone"

    def __init__(self, inequality: str):
        super().__init__(f"input violates {inequality}")
        self.inequality = inequality


class PathError(SAdicError):
    reason = "inconsistent-path"

    def __init__(self, index: int, detail: str = ""):
        msg = f"edge path breaks adjacency at index {index}"
        super().__init__(f"{msg} ({detail})" if detail else msg)
        self.index = index


class MeasureError(SAdicError):
    reason = "invalid-measure"


class NonInvertibleError(SAdicError):
    reason = "non-invertible"


class UnknownNameError(SAdicError):
    reason = "unknown-name"

    def __init__(self, kind: str, name: str, available: Sequence[str]):
        self.available: List[str] = list(available)
        super().__init__(f"unknown {kind} '{name}'; available: {', '.join(self.available)}")
