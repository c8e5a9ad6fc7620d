"""Exception hierarchy for the harness.

Every error raised by fidlkit derives from FidlkitError so callers can
catch harness failures without swallowing unrelated bugs.
"""
from __future__ import annotations


class FidlkitError(Exception):
    """Base class for all fidlkit errors."""


class InvalidLogitsError(FidlkitError):
    """A logit vector has the wrong length or a non-finite entry."""

    def __init__(self, message: str, *, index: int | None = None,
                 batch_index: int | None = None) -> None:
        super().__init__(message)
        self.index = index
        self.batch_index = batch_index


class UnknownTemplateError(FidlkitError):
    """Template id outside the 0-9 table."""


class TemplateTableError(FidlkitError):
    """The template table file is missing, malformed, or fails validation."""


class DegenerateClassesError(FidlkitError):
    """ROC-AUC requested on a single-class sample set."""


class EmptySetError(FidlkitError):
    """A metric was asked to aggregate zero samples."""


class ShapeMismatchError(FidlkitError):
    """Mask pair dimensions disagree."""

    def __init__(self, message: str, *, predicted_shape=None, truth_shape=None) -> None:
        super().__init__(message)
        self.predicted_shape = predicted_shape
        self.truth_shape = truth_shape


class DomainError(FidlkitError):
    """A value lies outside a function's mathematical domain (e.g. negative loss)."""


class ParameterError(FidlkitError):
    """Perturbation parameter outside its legal range."""

    def __init__(self, message: str, *, kind: str | None = None,
                 legal_range: str | None = None) -> None:
        super().__init__(message)
        self.kind = kind
        self.legal_range = legal_range


class CodecError(FidlkitError):
    """Image encode/decode failure."""


class ImageReadError(FidlkitError):
    """An image file could not be read."""


class ManifestParseError(FidlkitError):
    """A manifest line failed schema validation."""

    def __init__(self, message: str, *, line_number: int | None = None) -> None:
        super().__init__(message)
        self.line_number = line_number


class ManifestIntegrityError(FidlkitError):
    """Manifest-level invariant violated (duplicate id, authentic with mask, ...)."""


class UnsatisfiableMixtureError(FidlkitError):
    """A weighted domain has no records to sample from."""


class RecomposeDegenerateError(FidlkitError):
    """Recomposition has no mass to work with."""


class LedgerConsistencyError(FidlkitError):
    """Stored relative gains disagree with recomputation."""


class DuplicateRunError(FidlkitError):
    """A scaling run id already exists in the ledger."""


class InsufficientDetailError(FidlkitError):
    """A report lacks the per-sample rows an operation needs."""


class ProtocolError(FidlkitError):
    """Malformed or contract-violating wire message."""

    def __init__(self, message: str, *, raw_line: str | None = None) -> None:
        super().__init__(message)
        self.raw_line = raw_line


class HandshakeError(FidlkitError):
    """Backend failed the protocol version exchange."""


class BackendTimeoutError(FidlkitError):
    """No response within the per-request timeout."""

    def __init__(self, message: str, *, request_id: str | None = None) -> None:
        super().__init__(message)
        self.request_id = request_id


class BackendConfigError(FidlkitError):
    """Invalid built-in backend configuration."""


class PartialSweepError(FidlkitError):
    """A robustness sweep died mid-grid; completed cells are preserved."""

    def __init__(self, message: str, *, completed_cells=None) -> None:
        super().__init__(message)
        self.completed_cells = list(completed_cells or [])


class BenchmarkAlignmentError(FidlkitError):
    """Two reports cover different benchmark sets."""

    def __init__(self, message: str, *, only_left=(), only_right=()) -> None:
        super().__init__(message)
        self.only_left = sorted(only_left)
        self.only_right = sorted(only_right)
