"""Exception types raised across the package.

Every error here derives from WakeguardError so CLI entry points can catch
one base class and map it to a nonzero exit code.
"""


class WakeguardError(Exception):
    pass


class FaceNotPresent(WakeguardError):
    """Landmark extraction was asked for a frame with no detected face."""


class MalformedFrame(WakeguardError):
    """Frame record violates the wire schema (point count, types, NaN)."""


class DegenerateGeometry(WakeguardError):
    """A ratio denominator collapsed below the numeric floor."""


class InsufficientBaseline(WakeguardError):
    """Too few feature-valid frames to fit a calibration baseline."""


class AlreadyNormalized(WakeguardError):
    """Normalization applied twice to the same feature vector."""


class MixedNormalization(WakeguardError):
    """Raw and normalized feature vectors mixed in one operation."""


class InsufficientTraining(WakeguardError):
    """Training set smaller than k."""


class DimensionMismatch(WakeguardError):
    """Query vector dimensionality disagrees with the trained model."""


class EmptyTestSet(WakeguardError):
    pass


class CalibrationFailed(WakeguardError):
    """Calibration window ended without enough feature-valid frames."""


class NonMonotonicTimestamps(WakeguardError):
    """Input stream timestamps went backwards."""


class EmptyWindow(WakeguardError):
    """Smoothing requested over zero frames."""


class MissingAlertBaseline(WakeguardError):
    """A subject has no alert recording to calibrate against."""


class MissingClass(WakeguardError):
    """Training requires at least one alert and one drowsy session."""


class EmptySession(WakeguardError):
    pass


class ManifestError(WakeguardError):
    """Corpus manifest is malformed or points at missing files."""


class ModelFormatError(WakeguardError):
    """Model file has an unknown version or a broken schema."""


class InvalidProfile(WakeguardError):
    """Synthetic session profile has out-of-range parameters."""
