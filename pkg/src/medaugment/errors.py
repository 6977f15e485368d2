"""Exception hierarchy.

Layout/validation problems and I/O problems are kept apart so the CLI can map
them onto distinct exit codes.
"""

from __future__ import annotations


class MedAugmentError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(MedAugmentError, ValueError):
    """Bad argument values or an inconsistent dataset layout."""


class ImageIOError(MedAugmentError, OSError):
    """A file could not be read or written."""

    def __init__(self, message: str, path=None):
        super().__init__(f"{path}: {message}" if path is not None else message)
        self.path = path


class UnsupportedFormat(ImageIOError):
    pass


class CorruptStream(ImageIOError):
    pass


class ZeroDimension(ValidationError):
    pass


class UnknownOperation(ValidationError):
    pass


class MagnitudeOutOfBound(ValidationError):
    pass


class MissingMagnitude(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class EmptyDataset(ValidationError):
    pass


class UnpairedMask(ValidationError):
    pass


class MixedLayout(ValidationError):
    pass


class NonTrainSplit(ValidationError):
    """Refusing to augment a validation or test split without an override."""
