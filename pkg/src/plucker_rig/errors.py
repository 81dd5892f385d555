"""Exception hierarchy shared by all plucker_rig modules."""


class PluckerRigError(Exception):
    """Base class for all errors raised by this package."""


class BadRotation(PluckerRigError):
    """Rotation matrix is not orthonormal with determinant +1."""


class DegenerateRays(PluckerRigError):
    """Camera center is unobservable: all ray directions are parallel."""


class ParallelRays(PluckerRigError):
    """Two rays have (anti)parallel directions; no unique closest point."""


class RectOutOfBounds(PluckerRigError):
    """Crop rectangle does not fit inside the source image."""


class ShapeMismatch(PluckerRigError):
    """Arrays that must share spatial dimensions do not."""


class CropLargerThanSource(PluckerRigError):
    """Requested crop size exceeds the source size."""


class InvalidStairParams(PluckerRigError):
    """Stair schedule parameters violate 0 <= m <= n."""


class DegenerateUp(PluckerRigError):
    """Look-at optical axis is (anti)parallel to the up hint."""


class EmptyTrajectory(PluckerRigError):
    """Trajectory operation requires at least one step."""


class MissingReference(PluckerRigError):
    """Delta trajectory lacks the initial reference needed to accumulate."""


class DofMismatch(PluckerRigError):
    """Joint vectors in one trajectory have inconsistent lengths."""


class IoFailure(PluckerRigError):
    """Underlying file system operation failed."""


class CorruptFile(PluckerRigError):
    """File fails magic, header-consistency, or CRC checks."""


class UnsupportedVersion(PluckerRigError):
    """File declares a format version this reader does not understand."""


class SchemaError(PluckerRigError):
    """Structured document does not match the expected schema."""


class RejectionOverflow(PluckerRigError):
    """Rejection sampling exceeded its retry budget; config is inconsistent."""


class NonFiniteLoss(PluckerRigError):
    """Training loss became NaN or infinite."""
