"""Pinhole camera geometry and per-pixel Plucker ray-maps.

Conventions (read this before wiring in external calibration):

- Extrinsics ``(R, t)`` map **world to camera**: ``x_cam = R @ x_world + t``.
  The camera center in world coordinates is ``C = -R.T @ t``. Many toolchains
  store the inverse (camera-to-world) transform; invert before loading.
- Camera frame: +z optical axis, +x right, +y down.
- Pixel coordinates enter the back-projection as ``[u, v, 1]`` with an
  optional ``pixel_center_offset`` added to both coordinates (0.0 by default,
  0.5 for center-of-pixel sampling).
- All computation is float64. Moments are in meters (``t`` in meters) and are
  never normalized; directions are unit vectors in the world frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadRotation, DegenerateRays, ParallelRays

_ROTATION_TOL = 1e-9


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole calibration: focal lengths, principal point, skew, image size."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    skew: float = 0.0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (self.width >= 1 and self.height >= 1):
            raise ValueError(f"image size must be >= 1, got {self.width}x{self.height}")

    @property
    def matrix(self) -> np.ndarray:
        """The 3x3 calibration matrix K."""
        return np.array(
            [
                [self.fx, self.skew, self.cx],
                [0.0, self.fy, self.cy],
                [0.0, 0.0, 1.0],
            ]
        )


def intrinsics_inverse(intr: Intrinsics) -> np.ndarray:
    """Closed-form inverse of the upper-triangular calibration matrix."""
    fx, fy, skew = intr.fx, intr.fy, intr.skew
    return np.array(
        [
            [1.0 / fx, -skew / (fx * fy), (skew * intr.cy - intr.cx * fy) / (fx * fy)],
            [0.0, 1.0 / fy, -intr.cy / fy],
            [0.0, 0.0, 1.0],
        ]
    )


def _check_rotation(R: np.ndarray, tol: float) -> None:
    if R.shape != (3, 3):
        raise BadRotation(f"rotation must be 3x3, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise BadRotation("rotation contains non-finite entries")
    err = np.abs(R.T @ R - np.eye(3)).max()
    if err > tol:
        raise BadRotation(f"rotation is not orthonormal: max |R.T R - I| = {err:.3e} > {tol:g}")
    det = np.linalg.det(R)
    if abs(det - 1.0) > tol:
        raise BadRotation(f"rotation determinant is {det:.12f}, expected +1")


def orthonormalize_rotation(R: np.ndarray, max_iters: int = 50) -> np.ndarray:
    """Project a near-rotation onto SO(3) by iterated averaging of R and R^-T.

    Converges to the polar factor for matrices close to orthonormal. Rejects
    reflections (det < 0), which no amount of averaging can repair.
    """
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise BadRotation("rotation must be a finite 3x3 matrix")
    if np.linalg.det(R) <= 0:
        raise BadRotation("matrix has non-positive determinant; cannot repair a reflection")
    X = R.copy()
    for _ in range(max_iters):
        X_next = 0.5 * (X + np.linalg.inv(X).T)
        if np.abs(X_next - X).max() < 1e-15:
            X = X_next
            break
        X = X_next
    return X


@dataclass(frozen=True, eq=False)
class CameraPose:
    """World-to-camera rigid transform (R, t); camera center is C = -R.T t."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        _check_rotation(R, _ROTATION_TOL)
        if not np.all(np.isfinite(t)):
            raise ValueError("translation contains non-finite entries")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def from_matrix(cls, rotation, translation, repair: bool = False) -> "CameraPose":
        """Construct a pose, optionally repairing a slightly non-orthonormal R.

        Default is to reject: silent repair hides calibration errors.
        """
        if repair:
            rotation = orthonormalize_rotation(np.asarray(rotation, dtype=np.float64))
        return cls(rotation=np.asarray(rotation, dtype=np.float64), translation=translation)

    @property
    def center(self) -> np.ndarray:
        return camera_center(self)


def camera_center(pose: CameraPose) -> np.ndarray:
    """World-frame camera center C = -R.T t."""
    return -pose.rotation.T @ pose.translation


@dataclass(frozen=True, eq=False)
class PluckerRay:
    """Directed 3D line as (unit direction, moment) with d.m = 0."""

    direction: np.ndarray
    moment: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        m = np.asarray(self.moment, dtype=np.float64).reshape(3)
        norm_err = abs(np.linalg.norm(d) - 1.0)
        if norm_err > 1e-9:
            raise ValueError(f"direction is not unit length: | ||d|| - 1 | = {norm_err:.3e}")
        bilinear = abs(float(d @ m))
        if bilinear > 1e-9:
            raise ValueError(f"bilinear constraint violated: |d.m| = {bilinear:.3e}")
        d.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "moment", m)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.direction, self.moment])


@dataclass(frozen=True, eq=False)
class RayMap:
    """H x W grid of Plucker rays, 6 channels (dx,dy,dz,mx,my,mz), row-major."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[2] != 6:
            raise ValueError(f"ray-map data must be HxWx6, got shape {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def ray_at(self, u: int, v: int) -> PluckerRay:
        """Ray at pixel column u, row v."""
        entry = self.data[v, u]
        return PluckerRay(direction=entry[:3], moment=entry[3:])

    def validate(self, tol: float = 1e-9, center_residual_tol: float = 1e-6) -> None:
        """Check ray invariants and, when observable, single-center consistency."""
        d = self.data[..., :3]
        m = self.data[..., 3:]
        norm_err = np.abs(np.linalg.norm(d, axis=-1) - 1.0).max()
        if norm_err > tol:
            raise ValueError(f"direction norm error {norm_err:.3e} exceeds {tol:g}")
        bilinear = np.abs(np.einsum("hwc,hwc->hw", d, m)).max()
        if bilinear > tol:
            raise ValueError(f"bilinear constraint error {bilinear:.3e} exceeds {tol:g}")
        try:
            _, residual = recover_camera_center(self)
        except DegenerateRays:
            return  # center unobservable (e.g. 1x1 map); ray invariants already hold
        if residual > center_residual_tol:
            raise ValueError(
                f"moments inconsistent with a single camera center: residual {residual:.3e}"
            )


def _pixel_rays(
    intr: Intrinsics,
    pose: CameraPose,
    us: np.ndarray,
    vs: np.ndarray,
    pixel_center_offset: float,
) -> np.ndarray:
    """Shared kernel for pixel_ray and ray_map; elementwise so scalar and
    full-grid calls produce bit-identical values."""
    kinv = intrinsics_inverse(intr)
    u = us + pixel_center_offset
    v = vs + pixel_center_offset

    # d_cam = K^-1 [u, v, 1]
    x = kinv[0, 0] * u + kinv[0, 1] * v + kinv[0, 2]
    y = kinv[1, 1] * v + kinv[1, 2]
    z = np.ones_like(x)

    # d_world = R.T d_cam, then normalize
    R = pose.rotation
    dx = R[0, 0] * x + R[1, 0] * y + R[2, 0] * z
    dy = R[0, 1] * x + R[1, 1] * y + R[2, 1] * z
    dz = R[0, 2] * x + R[1, 2] * y + R[2, 2] * z
    norm = np.sqrt(dx * dx + dy * dy + dz * dz)
    dx = dx / norm
    dy = dy / norm
    dz = dz / norm

    C = camera_center(pose)
    mx = C[1] * dz - C[2] * dy
    my = C[2] * dx - C[0] * dz
    mz = C[0] * dy - C[1] * dx
    return np.stack([dx, dy, dz, mx, my, mz], axis=-1)


def pixel_ray(
    intr: Intrinsics,
    pose: CameraPose,
    u: float,
    v: float,
    pixel_center_offset: float = 0.0,
) -> PluckerRay:
    """World-frame Plucker ray that projects to pixel (u, v).

    Direction is R.T K^-1 [u,v,1] normalized; moment is C x d with
    C = -R.T t.
    """
    if not (np.isfinite(u) and np.isfinite(v)):
        raise ValueError(f"pixel coordinates must be finite, got ({u}, {v})")
    out = _pixel_rays(intr, pose, np.float64(u), np.float64(v), pixel_center_offset)
    return PluckerRay(direction=out[:3], moment=out[3:])


def ray_map(
    intr: Intrinsics,
    pose: CameraPose,
    pixel_center_offset: float = 0.0,
) -> RayMap:
    """Full per-pixel ray-map of size height x width.

    Depends only on (intr, pose) — independent of scene content — and is
    deterministic: repeated calls return byte-identical data. Entry (u, v)
    equals pixel_ray(intr, pose, u, v) bit-exactly.
    """
    us, vs = np.meshgrid(
        np.arange(intr.width, dtype=np.float64),
        np.arange(intr.height, dtype=np.float64),
    )
    return RayMap(data=_pixel_rays(intr, pose, us, vs, pixel_center_offset))


def project(
    intr: Intrinsics,
    pose: CameraPose,
    point: np.ndarray,
    pixel_center_offset: float = 0.0,
) -> np.ndarray:
    """Project a world point through K [R | t] to pixel coordinates.

    Inverse of pixel_ray along the ray; used by tests and the toy lab.
    Raises ValueError for points at or behind the camera plane.
    """
    p = np.asarray(point, dtype=np.float64).reshape(3)
    x_cam = pose.rotation @ p + pose.translation
    if x_cam[2] <= 0:
        raise ValueError(f"point is not in front of the camera (z_cam = {x_cam[2]:.6g})")
    u = (intr.fx * x_cam[0] + intr.skew * x_cam[1]) / x_cam[2] + intr.cx
    v = intr.fy * x_cam[1] / x_cam[2] + intr.cy
    return np.array([u - pixel_center_offset, v - pixel_center_offset])


def recover_camera_center(rm: RayMap) -> tuple[np.ndarray, float]:
    """Least-squares camera center from a ray-map's moments.

    Minimizes sum ||C x d - m||^2 over pixels via the 3x3 normal equations
    sum(I - d d^T) C = sum(d x m). Returns (C, RMS residual).

    Raises DegenerateRays when all directions are parallel (the normal matrix
    is rank-deficient and the center is unobservable along the shared
    direction), including the 1-pixel case.
    """
    d = rm.data[..., :3].reshape(-1, 3)
    m = rm.data[..., 3:].reshape(-1, 3)
    n = d.shape[0]

    A = n * np.eye(3) - d.T @ d
    b = np.cross(d, m).sum(axis=0)

    eigvals = np.linalg.eigvalsh(A)
    if eigvals[0] < 1e-12 * max(1.0, n):
        raise DegenerateRays(
            f"ray directions are parallel (smallest normal-matrix eigenvalue "
            f"{eigvals[0]:.3e}); camera center unobservable"
        )
    C = np.linalg.solve(A, b)
    residual = float(np.sqrt(np.mean(np.sum((np.cross(np.broadcast_to(C, d.shape), d) - m) ** 2, axis=1))))
    return C, residual


def triangulate(r1: PluckerRay, r2: PluckerRay) -> tuple[np.ndarray, float]:
    """Midpoint of the shortest segment between two rays, and its length.

    Raises ParallelRays when the directions are (anti)parallel.
    """
    d1, d2 = r1.direction, r2.direction
    cross = np.cross(d1, d2)
    n2 = float(cross @ cross)
    if np.sqrt(n2) < 1e-12:
        raise ParallelRays("ray directions are parallel; no unique closest point")

    # Point on each line closest to the origin (valid for unit directions).
    p1 = np.cross(d1, r1.moment)
    p2 = np.cross(d2, r2.moment)

    w = p2 - p1
    s = float(np.cross(w, d2) @ cross) / n2
    t = float(np.cross(w, d1) @ cross) / n2
    q1 = p1 + s * d1
    q2 = p2 + t * d2
    gap = float(np.linalg.norm(q1 - q2))
    return 0.5 * (q1 + q2), gap
