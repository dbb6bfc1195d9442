"""Exception types shared across the annotation engine.

Every error carries a stable ``code`` (the class name) that surfaces in the
CLI and in the HTTP error envelope, plus optional structured ``details``.
"""

from __future__ import annotations

from typing import Any


class InkLabelError(Exception):
    """Base class for all domain errors.

    Extra keyword arguments become the structured ``details`` payload; a
    single keyword collapses to its bare value (so ``units=[7]`` surfaces
    as ``details: [7]`` in the HTTP envelope).
    """

    def __init__(self, message: str, details: Any = None, **extra: Any):
        super().__init__(message)
        if details is None and extra:
            details = next(iter(extra.values())) if len(extra) == 1 else dict(extra)
        self.details = details

    @property
    def code(self) -> str:
        return type(self).__name__


# raster
class UnsupportedFormat(InkLabelError):
    pass


class CorruptImage(InkLabelError):
    pass


class MissingPaletteEntry(InkLabelError):
    pass


class NotIndexedPng(InkLabelError):
    pass


# binarize
class BadWindow(InkLabelError):
    pass


# morphology
class EmptyRecipe(InkLabelError):
    pass


# session
class NoForeground(InkLabelError):
    pass


class DuplicateName(InkLabelError):
    pass


class DuplicateColor(InkLabelError):
    pass


class LabelCapacityExceeded(InkLabelError):
    pass


class LabelInUse(InkLabelError):
    pass


class UnknownLabel(InkLabelError):
    pass


class UnknownUnit(InkLabelError):
    pass


class SessionFinalized(InkLabelError):
    pass


class UnlabeledUnitsRemain(InkLabelError):
    pass


class EmptyRoi(InkLabelError):
    """Signal: the ROI contains no complete unit. Not a failure."""


class ConfirmationRequired(InkLabelError):
    """Raised when an operation would silently discard label assignments."""


class PhaseError(InkLabelError):
    """Operation not allowed in the session's current phase."""


# service
class UnknownSession(InkLabelError):
    pass


# export
class NotFinalized(InkLabelError):
    pass


class SchemaViolation(InkLabelError):
    pass


class MissingPng(InkLabelError):
    pass


class IndexMismatch(InkLabelError):
    pass


# config / CLI
class ConfigError(InkLabelError):
    """Bad or unknown configuration keys; maps to exit code 2."""
