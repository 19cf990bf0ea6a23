"""Exception hierarchy shared across the pipeline."""


class CephaloError(Exception):
    """Base class for all pipeline errors."""


class UnsupportedFormat(CephaloError):
    """File extension or magic bytes are not JPEG/PNG/TIFF."""


class CorruptImage(CephaloError):
    """The raster payload could not be decoded."""


class TooSmall(CephaloError):
    """Image below the 64x64 minimum for a radiograph."""


class ModelLoadError(CephaloError):
    """Model file unreadable or incompatible with this build."""


class ShapeMismatch(CephaloError):
    """Backend output channels disagree with the declared landmark count."""


class EmptyHeatmap(CephaloError):
    """A heatmap channel is all zeros; the landmark is reported missing."""


class DegenerateAngle(CephaloError):
    """An angle endpoint coincides with the vertex."""


class DegenerateLine(CephaloError):
    """A line was given coincident endpoints."""


class Uncalibrated(CephaloError):
    """Pixel spacing is absent; millimetre distances are unavailable."""


class CaseNotFound(CephaloError):
    """Unknown case id or landmark id."""


class CaseStateError(CephaloError):
    """Operation not valid for the case's current status."""
