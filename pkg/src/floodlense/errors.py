"""Exception types raised across the pipeline.

Everything derives from FloodLenseError so callers (the HTTP service in
particular) can map failures to status codes without bare excepts.
"""


class FloodLenseError(Exception):
    pass


class InvalidInput(FloodLenseError):
    """A precondition on caller-supplied data was violated."""


class AntimeridianCrossing(InvalidInput):
    """A bounding box would leave the [-180, 180] longitude range."""


class AlreadyNormalized(InvalidInput):
    """normalize() called on a raster that is already in [0, 1]."""


class ShapeMismatch(InvalidInput):
    """Two grids that must share dimensions do not."""


class BadChannel(InvalidInput):
    """A channel index outside the raster's channel count."""


class BadDimensions(InvalidInput):
    """Input dimensions incompatible with the network topology."""


class EmptyHistogram(InvalidInput):
    """Otsu threshold requested for a histogram with zero total count."""


class NoLocationFound(FloodLenseError):
    """No place name could be extracted from the query text."""


class NotFound(FloodLenseError):
    """The geocoder has no match for the given place name."""


class BackendUnavailable(FloodLenseError):
    """A pluggable backend (LLM client) failed to respond."""


class ServiceError(FloodLenseError):
    """Transport-level failure talking to an external service."""


class NoSceneAvailable(FloodLenseError):
    """No satellite scene covers the requested bounding box."""


class WeightMismatch(FloodLenseError):
    """Weight archive entries do not match the network configuration."""


class UnknownLayer(FloodLenseError):
    """Ablation requested for a layer name the engine does not have."""


class FormatError(FloodLenseError):
    """A weight archive file is malformed or corrupted."""


class MissingMask(FloodLenseError):
    """A dataset image has no mask with the same stem."""


class DecodeError(FloodLenseError):
    """An image file could not be decoded."""
