"""Exception hierarchy shared by all realitygen modules."""


class RealityGenError(Exception):
    """Base class for every error raised by this package."""


# --- sweep parsing / serialization ---------------------------------------


class TruncatedFileError(RealityGenError):
    """File byte length is not a multiple of the point record size."""


class NonFiniteValueError(RealityGenError):
    """A parsed coordinate or intensity is NaN or infinite."""


class ZeroRangeError(RealityGenError):
    """A parsed point sits exactly at the sensor origin (range 0)."""


class EmptySweepError(RealityGenError):
    """The sweep file contains no points."""


class LabelMismatchError(RealityGenError):
    """Label file point count differs from the sweep point count."""


# --- dataset traversal -----------------------------------------------------


class MissingSequenceError(RealityGenError):
    """Expected dataset sequence directory is absent."""


class EmptyDatasetError(RealityGenError):
    """Dataset root contains no sweep files."""


# --- projection / weather --------------------------------------------------


class IndexMismatchError(RealityGenError):
    """Range-image point indices do not address the given cloud."""


class MissingChannelsError(RealityGenError):
    """An operation needs range-image channels that were never populated."""


# --- physics ----------------------------------------------------------------


class NonPositiveRangeError(RealityGenError):
    """Physics intensity is undefined at range <= 0."""


class NonPositiveRateError(RealityGenError):
    """Precipitation rate must be strictly positive."""


# --- metrics ----------------------------------------------------------------


class ShapeMismatchError(RealityGenError):
    """Compared images or grids have incompatible shapes."""


class MaskMismatchError(RealityGenError):
    """Compared images must share an identical occupancy mask."""


class EmptyMaskError(RealityGenError):
    """Metric over masked pixels received an image with no masked pixels."""


# --- pipeline ----------------------------------------------------------------


class ConfigError(RealityGenError):
    """Job configuration file is missing, malformed, or inconsistent."""
