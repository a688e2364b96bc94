"""Exception types raised across the package."""


class SphereSegError(Exception):
    """Base class for all errors raised by this package."""


class CloudFormatError(SphereSegError):
    """Point cloud file is missing, malformed, or violates cloud invariants."""


class MappingFormatError(SphereSegError):
    """Pixel mapping file has a bad magic, wrong version, or is truncated."""


class ImageFormatError(SphereSegError):
    """PPM/PGM file is malformed or has unsupported parameters."""


class BoxFormatError(SphereSegError):
    """Bounding box JSON is malformed or inconsistent with the image."""


class DimensionMismatchError(SphereSegError):
    """Two rasters/mappings that must share dimensions do not."""


class DegenerateOriginError(SphereSegError):
    """A point coincides with the reference point (r = 0); it has no direction."""


class PredictionError(SphereSegError):
    """Prediction set is inconsistent with the cloud it refers to."""
