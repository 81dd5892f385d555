"""Camera-geometry tooling for extrinsics-conditioned imitation learning.

Turns calibrated camera parameters into per-pixel Plucker ray-maps, with
correspondence-preserving crops, stair-pattern camera schedules, randomized
look-at pose sampling, action-space conversion, bit-exact serialization, and
a desk-scale stereo-localization experiment.
"""

from .errors import (
    BadRotation,
    CorruptFile,
    CropLargerThanSource,
    DegenerateRays,
    DegenerateUp,
    DofMismatch,
    EmptyTrajectory,
    InvalidStairParams,
    IoFailure,
    MissingReference,
    NonFiniteLoss,
    ParallelRays,
    PluckerRigError,
    RectOutOfBounds,
    RejectionOverflow,
    SchemaError,
    ShapeMismatch,
    UnsupportedVersion,
)
from .geometry import (
    CameraPose,
    Intrinsics,
    PluckerRay,
    RayMap,
    camera_center,
    intrinsics_inverse,
    pixel_ray,
    project,
    ray_map,
    recover_camera_center,
    triangulate,
)
from .schedule import (
    CameraSchedule,
    PoseSamplerConfig,
    lookat_pose,
    sample_lookat_pose,
    stair_schedule,
)
from .transforms import (
    CropRect,
    crop_intrinsics,
    joint_crop,
    resize_intrinsics,
    sample_crop,
)

__all__ = [
    "BadRotation", "CorruptFile", "CropLargerThanSource", "DegenerateRays",
    "DegenerateUp", "DofMismatch", "EmptyTrajectory", "InvalidStairParams",
    "IoFailure", "MissingReference", "NonFiniteLoss", "ParallelRays",
    "PluckerRigError", "RectOutOfBounds", "RejectionOverflow", "SchemaError",
    "ShapeMismatch", "UnsupportedVersion",
    "CameraPose", "Intrinsics", "PluckerRay", "RayMap", "camera_center",
    "intrinsics_inverse", "pixel_ray", "project", "ray_map",
    "recover_camera_center", "triangulate",
    "CameraSchedule", "PoseSamplerConfig", "lookat_pose", "sample_lookat_pose",
    "stair_schedule",
    "CropRect", "crop_intrinsics", "joint_crop", "resize_intrinsics",
    "sample_crop",
]

__version__ = "0.1.0"
