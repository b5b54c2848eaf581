"""Exception types shared across the package."""
from __future__ import annotations


class BbmhError(Exception):
    """Base class for all package-specific errors."""


class EmptySetError(BbmhError, ValueError):
    """A minimum over an empty set was requested."""


class IncompatibleSignatureError(BbmhError, ValueError):
    """Signatures disagree on k, bit width, or provenance."""


class IncompatibleSketchError(BbmhError, ValueError):
    """Sketches disagree on kind, width, seed, or sign parameter."""


class OracleCapacityError(BbmhError, ValueError):
    """Exact computation was requested beyond the configured universe bound."""


class UndefinedRatioError(BbmhError, ZeroDivisionError):
    """A variance ratio was requested at a point where the denominator is zero."""


class DatasetFormatError(BbmhError, ValueError):
    """A data file violates the sparse text format.

    Carries the offending path and 1-based line number when known.
    """

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where = f"{where}{line}: "
        elif path is not None:
            where = f"{where} "
        super().__init__(f"{where}{message}")


class ModelFormatError(BbmhError, ValueError):
    """A model file is malformed or inconsistent."""
