"""Exception types shared across the package."""


class DirectorsCutError(Exception):
    """Base class for all domain errors."""


class SchemaError(DirectorsCutError):
    """A document does not match its expected structure."""


class RangeError(DirectorsCutError):
    """A numeric field is outside its allowed range."""


class EmptyProfileError(DirectorsCutError):
    """A director profile contains no clips."""


class DegenerateDataError(DirectorsCutError):
    """A training class is empty or otherwise unusable."""


class DuplicateIdError(SchemaError):
    """Two scene entities share an id."""


class UnsortedKeyframesError(SchemaError):
    """Keyframe times are not strictly increasing."""


class MarkerOutOfRangeError(SchemaError):
    """A shot marker lies outside the timeline."""


class DanglingTargetError(SchemaError):
    """A marker references an object id that does not exist."""


class FormatError(DirectorsCutError):
    """A binary payload has a bad magic, version, or length."""


class VersionError(DirectorsCutError):
    """A serialized document carries an unsupported schema version."""


class OrderViolationError(DirectorsCutError):
    """Category filters were invoked out of their required order."""


class NoBandError(DirectorsCutError):
    """A technique has no placement band (not a positioning technique)."""


class BehindCameraError(DirectorsCutError):
    """A projected point lies behind the camera plane."""


class LockedTargetError(DirectorsCutError):
    """A re-simulation request names a locked marker."""
