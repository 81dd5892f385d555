"""Thin in-process bindings over the plucker-rig package.

Training pipelines need two hot-path operations in process — per-pixel ray-map
generation and the correspondence-preserving joint crop — plus file I/O for
ray-map tensors and camera documents. Everything else (schedules, pose
sampling, action conversion) stays behind the CLI and document files.

The bindings never reimplement math: every call delegates to plucker-rig, so
bound results match the primary implementation bit-for-bit at the 32-bit
boundary. Inputs and outputs are plain dense numpy arrays (row-major); no
framework-specific tensor types. Calls are reentrant, and the heavy lifting
happens inside numpy kernels that release the interpreter lock, so data-loader
workers can run them in parallel.

Errors propagate unchanged from plucker-rig (e.g. an invalid rotation raises
``plucker_rig.errors.BadRotation``); nothing is wrapped or renamed.
"""

from __future__ import annotations

import numpy as np

from plucker_rig import CameraPose, Intrinsics, RayMap, joint_crop, ray_map
from plucker_rig.transforms import CropRect
from plucker_rig.tensorio import (
    CameraEntry,
    CamerasDoc,
    read_cameras,
    read_raymap,
    write_cameras,
    write_raymap,
)

__all__ = [
    "bound_ray_map",
    "bound_joint_crop",
    "CameraEntry",
    "CamerasDoc",
    "read_cameras",
    "read_raymap",
    "write_cameras",
    "write_raymap",
]


def bound_ray_map(
    fx: float,
    fy: float,
    cx: float,
    cy: float,
    rotation,
    translation,
    height: int,
    width: int,
    skew: float = 0.0,
) -> np.ndarray:
    """Generate the per-pixel ray map as a dense (height, width, 6) float32 array.

    `rotation` is nine floats (row-major 3x3 world-to-camera rotation) and
    `translation` three floats, so callers can pass flat buffers without
    constructing package types. Channels are [dx, dy, dz, mx, my, mz] in the
    world frame. Raises BadRotation if `rotation` is not a proper rotation.
    """
    intr = Intrinsics(
        fx=float(fx), fy=float(fy), cx=float(cx), cy=float(cy),
        width=int(width), height=int(height), skew=float(skew),
    )
    rot = np.asarray(rotation, dtype=np.float64).reshape(3, 3)
    trans = np.asarray(translation, dtype=np.float64).reshape(3)
    pose = CameraPose(rotation=rot, translation=trans)
    rm = ray_map(intr, pose)
    return np.ascontiguousarray(rm.data, dtype=np.float32)


def bound_joint_crop(image, raymap, rect) -> tuple:
    """Crop an image and its ray map to the same window.

    `raymap` is a dense (H, W, 6) array, `rect` an (x0, y0, w, h) tuple of
    pixel ints, and `image` an (H, W, C) array (C may be 0). Returns
    (cropped_image, cropped_raymap) with the ray map in the input's dtype.
    Pre/post-conditions and errors are those of the underlying joint crop.
    """
    raymap = np.asarray(raymap)
    image = np.asarray(image)
    x0, y0, w, h = (int(v) for v in rect)
    rm = RayMap(data=np.ascontiguousarray(raymap, dtype=np.float64))
    cropped_img, cropped_rm = joint_crop(image, rm, CropRect(x0=x0, y0=y0, w=w, h=h))
    return cropped_img, np.ascontiguousarray(cropped_rm.data, dtype=raymap.dtype)
