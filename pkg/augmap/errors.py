"""
Errors

This module defines the exception hierarchy of the augmap library. Every error
raised on purpose by the library derives from AugmapError, split into
configuration problems (ConfigError) and problems with the data being
processed (DataError).
"""

from typing import Optional


class AugmapError(Exception):
    """Base class for all augmap errors."""


class ConfigError(AugmapError):
    """Invalid configuration, scenario or trajectory description."""


class DataError(AugmapError):
    """Invalid or unusable input data encountered at runtime."""


class FormatError(DataError):
    """A file does not follow its documented format or record schema."""


class GridFormatError(FormatError):
    """Malformed occupancy grid file (header, size or cell bytes)."""


class AnnotationParseError(FormatError):
    """A ground truth annotation line could not be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class MapFormatError(FormatError):
    """An augmented map file violates its record schema."""


class LogFormatError(FormatError):
    """A frame log or event file violates its record schema."""


class EmptyBufferError(DataError):
    """A pose lookup was attempted on an empty pose buffer."""


class UnknownAnchorError(DataError):
    """A tracked instance references a pose graph node that is not known."""


class CovarianceError(DataError):
    """A covariance matrix is not symmetric positive-definite."""


class FittingError(DataError):
    """Base class for shape fitting failures; the detection is dropped."""


class EmptyCloudError(FittingError):
    """No valid depth pixel inside a detection box."""


class InsufficientPointsError(FittingError):
    """Too few (or only collinear) points to hypothesize a plane."""


class NoConsensusError(FittingError):
    """The best plane hypothesis has fewer inliers than required."""


class DegeneratePlaneError(FittingError):
    """A plane refinement was attempted on a rank-deficient inlier set."""


class NoClusterError(FittingError):
    """No Euclidean cluster reached the minimum size."""
