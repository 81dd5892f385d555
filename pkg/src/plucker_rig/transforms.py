"""Correspondence-preserving image-space augmentations.

Crops are axis-aligned integer-pixel windows, applied identically to the
image and the ray-map so the one-to-one pixel/ray correspondence survives.
Horizontal flips are deliberately excluded: a flip inverts the handedness of
the pixel-to-ray mapping and cannot be expressed as a virtual pinhole camera.

Resizing is metadata-level: intrinsics are rescaled and ray-maps regenerated
from them, never interpolated (interpolated Plucker vectors lose ||d|| = 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CropLargerThanSource, RectOutOfBounds, ShapeMismatch
from .geometry import Intrinsics, RayMap


@dataclass(frozen=True)
class CropRect:
    """Axis-aligned crop window: top-left (x0, y0), size (w, h) in pixels."""

    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError(f"crop origin must be non-negative, got ({self.x0}, {self.y0})")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"crop size must be positive, got {self.w}x{self.h}")

    def check_within(self, width: int, height: int) -> None:
        if self.x0 + self.w > width or self.y0 + self.h > height:
            raise RectOutOfBounds(
                f"crop {self} does not fit inside a {width}x{height} source"
            )


def crop_intrinsics(intr: Intrinsics, rect: CropRect) -> Intrinsics:
    """Intrinsics of the virtual camera seen through a crop window.

    Cropping shifts the principal point by the window origin and leaves focal
    lengths and skew untouched.
    """
    rect.check_within(intr.width, intr.height)
    return Intrinsics(
        fx=intr.fx,
        fy=intr.fy,
        cx=intr.cx - rect.x0,
        cy=intr.cy - rect.y0,
        width=rect.w,
        height=rect.h,
        skew=intr.skew,
    )


def joint_crop(
    image: np.ndarray, rm: RayMap, rect: CropRect
) -> tuple[np.ndarray, RayMap]:
    """Crop an image and its ray-map to the same window.

    Pure windowing: output values are copies of input values (bit equality),
    never resampled.
    """
    image = np.asarray(image)
    if image.ndim != 3:
        raise ShapeMismatch(f"image must be HxWxC, got shape {image.shape}")
    if image.shape[:2] != (rm.height, rm.width):
        raise ShapeMismatch(
            f"image is {image.shape[0]}x{image.shape[1]} but ray-map is "
            f"{rm.height}x{rm.width}"
        )
    rect.check_within(rm.width, rm.height)
    rows = slice(rect.y0, rect.y0 + rect.h)
    cols = slice(rect.x0, rect.x0 + rect.w)
    return image[rows, cols].copy(), RayMap(data=rm.data[rows, cols].copy())


def sample_crop(
    rng: np.random.Generator, source: tuple[int, int], crop: tuple[int, int]
) -> CropRect:
    """Uniform random crop window; deterministic for a fixed generator state.

    ``source`` and ``crop`` are (height, width) pairs. The top-left corner is
    uniform on [0, W-w] x [0, H-h].
    """
    H, W = source
    h, w = crop
    if h > H or w > W:
        raise CropLargerThanSource(f"crop {h}x{w} exceeds source {H}x{W}")
    x0 = int(rng.integers(0, W - w + 1))
    y0 = int(rng.integers(0, H - h + 1))
    return CropRect(x0=x0, y0=y0, w=w, h=h)


def resize_intrinsics(intr: Intrinsics, new_w: int, new_h: int) -> Intrinsics:
    """Intrinsics after resampling the image to new_w x new_h.

    fx, cx, and skew scale by new_w/width; fy and cy by new_h/height (skew
    multiplies a camera-frame y to produce pixels along u, so it scales with
    the horizontal ratio). Ray directions at corresponding pixels are
    preserved.
    """
    if new_w < 1 or new_h < 1:
        raise ValueError(f"resize target must be >= 1, got {new_w}x{new_h}")
    sx = new_w / intr.width
    sy = new_h / intr.height
    return Intrinsics(
        fx=intr.fx * sx,
        fy=intr.fy * sy,
        cx=intr.cx * sx,
        cy=intr.cy * sy,
        width=new_w,
        height=new_h,
        skew=intr.skew * sx,
    )
