"""Exception types shared across the package.

Every error raised by pgmhd derives from :class:`PGMHDError`, so callers
can catch the whole family with one handler. The CLI maps each subclass
to a distinct exit code (see ``pgmhd.cli``).
"""

from __future__ import annotations


class PGMHDError(Exception):
    """Base class for all pgmhd errors."""


class InvalidSchemaError(PGMHDError):
    """Schema is empty, has duplicate level names, or an empty level name."""


class ObservationError(PGMHDError):
    """Observation does not conform to the schema (arity, empty label)."""


class SchemaMismatchError(PGMHDError):
    """Two models with different schemas cannot be merged."""


class UnknownNodeError(PGMHDError):
    """Queried node does not exist in the model."""


class ZeroEvidenceError(PGMHDError):
    """Node has no incoming frequency mass, so no score can be normalized."""


class LevelMismatchError(PGMHDError):
    """Similarity queries require two nodes on the same level >= 1."""


class NoSharedParentError(PGMHDError):
    """The pair shares no parent, so it is outside the candidate set.

    This is a gate condition, not a numeric failure: relatedness is only
    defined for same-level nodes that co-occur under at least one parent.
    """


class ParseError(PGMHDError):
    """Malformed input line; carries the 1-based line number when known."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class EmptyTermsError(ParseError):
    """User-log record with no search terms after trimming."""


class AggregatedParseError(ParseError):
    """All parse failures of a non-fail-fast run, reported together."""

    def __init__(self, errors: list[ParseError]):
        self.errors = list(errors)
        lines = "; ".join(str(e) for e in self.errors[:20])
        more = f" (+{len(self.errors) - 20} more)" if len(self.errors) > 20 else ""
        super().__init__(f"{len(self.errors)} parse error(s): {lines}{more}")


class InvalidModelError(PGMHDError):
    """Model fails its own invariants and was refused (e.g. by save)."""


class ModelFormatError(PGMHDError):
    """Model file is corrupt: bad magic/version, count mismatch, or
    integrity failure detected while loading."""
