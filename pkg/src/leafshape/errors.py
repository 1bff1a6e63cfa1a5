"""Exception and warning types shared across the toolkit."""


class LeafShapeError(Exception):
    """Base class for all toolkit errors."""


class EmptySegmentation(LeafShapeError):
    """Thresholding produced a mask with no foreground pixels."""


class NoContour(LeafShapeError):
    """No closed boundary could be extracted from the mask."""


class DegenerateContour(LeafShapeError):
    """Contour has (near-)zero perimeter or area."""


class RadiusTooSmall(LeafShapeError):
    """Requested LAII mask radius is below the usable minimum."""


class LengthMismatch(LeafShapeError):
    """Signal or feature-vector length does not match the configured layout."""


class DegenerateSpectrum(LeafShapeError):
    """Spectrum has zero total magnitude; centroid undefined."""


class TooFewSamples(LeafShapeError):
    """Not enough samples to fit the requested statistic or decomposition."""


class DimensionMismatch(LeafShapeError):
    """Input dimension does not match the fitted model."""


class EmptyClass(LeafShapeError):
    """A dataset class contains no usable items."""


class EmptyDataset(LeafShapeError):
    """Dataset root contains no class directories."""


class VersionMismatch(LeafShapeError):
    """Model file was written by an unsupported format version."""


class CorruptModel(LeafShapeError):
    """Model file is truncated, fails its checksum, or cannot be parsed."""


class ClassTooSmallWarning(UserWarning):
    """A class had fewer items than the requested test count."""


class NonconvergenceWarning(UserWarning):
    """SMO hit its iteration budget before meeting the KKT tolerance."""
