"""Stair-pattern camera schedules and randomized look-at pose sampling.

The stair schedule assigns n camera indices to each episode so that
consecutive episodes share exactly n - m of them; m new cameras enter per
episode. m = 0 reduces to a fixed camera set shared by every episode.

The pose sampler places cameras on a spherical shell around a target point
drawn uniformly from a 3D box: azimuth and elevation are measured about the
world +z zenith, and the up hint only fixes the camera roll. The camera frame
is +z optical axis, +x right, +y down.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateUp, InvalidStairParams
from .geometry import CameraPose


@dataclass(frozen=True)
class CameraSchedule:
    """Per-episode camera-index assignments for stair-pattern collection."""

    episodes: tuple[tuple[int, ...], ...]
    n: int
    m: int
    pool_size: int

    def __post_init__(self):
        episodes = tuple(tuple(int(i) for i in ep) for ep in self.episodes)
        object.__setattr__(self, "episodes", episodes)
        for i, ep in enumerate(episodes):
            if len(ep) != self.n or len(set(ep)) != self.n:
                raise ValueError(f"episode {i} must list exactly n={self.n} distinct indices")
            if any(idx < 0 or idx >= self.pool_size for idx in ep):
                raise ValueError(f"episode {i} has indices outside [0, {self.pool_size})")
        for i in range(len(episodes) - 1):
            shared = set(episodes[i]) & set(episodes[i + 1])
            if len(shared) != self.n - self.m:
                raise ValueError(
                    f"episodes {i} and {i + 1} share {len(shared)} cameras, "
                    f"expected n - m = {self.n - self.m}"
                )


def stair_schedule(
    num_episodes: int, n: int, m: int, start_index: int = 0
) -> CameraSchedule:
    """Build the stair pattern: episode i uses indices start + i*m .. + n - 1."""
    if m > n or m < 0 or n <= 0:
        raise InvalidStairParams(f"need 0 <= m <= n with n > 0, got n={n}, m={m}")
    if num_episodes < 1:
        raise InvalidStairParams(f"need at least one episode, got {num_episodes}")
    if start_index < 0:
        raise InvalidStairParams(f"start_index must be non-negative, got {start_index}")
    episodes = tuple(
        tuple(range(start_index + i * m, start_index + i * m + n))
        for i in range(num_episodes)
    )
    pool_size = start_index + (num_episodes - 1) * m + n
    return CameraSchedule(episodes=episodes, n=n, m=m, pool_size=pool_size)


@dataclass(frozen=True)
class PoseSamplerConfig:
    """Ranges for randomized look-at camera placement.

    Angles in degrees; azimuth defaults to a 180-degree span centered on the
    +x heading, elevation to [30, 60] above the horizontal. Radius in meters.
    The target box is ((xmin, ymin, zmin), (xmax, ymax, zmax)).
    """

    azimuth_deg: tuple[float, float] = (-90.0, 90.0)
    elevation_deg: tuple[float, float] = (30.0, 60.0)
    radius_m: tuple[float, float] = (0.8, 1.2)
    target_box: tuple[tuple[float, float, float], tuple[float, float, float]] = (
        (-0.1, -0.1, -0.1),
        (0.1, 0.1, 0.1),
    )
    up: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        for name in ("azimuth_deg", "elevation_deg", "radius_m"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} range is empty: ({lo}, {hi})")
        if self.radius_m[0] <= 0:
            raise ValueError(f"radius must be positive, got {self.radius_m}")
        lo, hi = self.target_box
        if any(h < l for l, h in zip(lo, hi)):
            raise ValueError(f"target box min exceeds max: {self.target_box}")
        if np.linalg.norm(self.up) < 1e-12:
            raise ValueError("up hint must be non-zero")


def lookat_pose(
    center: np.ndarray, target: np.ndarray, up: np.ndarray
) -> CameraPose:
    """World-to-camera pose with the optical axis through ``target``.

    Raises DegenerateUp when the view direction is within ~1e-6 rad of the
    up hint, where the roll is undefined.
    """
    center = np.asarray(center, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    forward = target - center
    dist = np.linalg.norm(forward)
    if dist < 1e-12:
        raise DegenerateUp("camera center coincides with the look-at target")
    forward = forward / dist
    up = up / np.linalg.norm(up)
    if np.linalg.norm(np.cross(forward, up)) < 1e-6:
        raise DegenerateUp("optical axis is (anti)parallel to the up hint")
    right = np.cross(forward, up)
    right = right / np.linalg.norm(right)
    down = np.cross(forward, right)
    R = np.stack([right, down, forward])  # rows: camera axes in world coords
    t = -R @ center
    return CameraPose(rotation=R, translation=t)


def sample_lookat_pose(
    rng: np.random.Generator,
    cfg: PoseSamplerConfig,
    on_degenerate: str = "resample",
    max_attempts: int = 1000,
) -> CameraPose:
    """Sample one randomized camera pose.

    The camera center sits at spherical offset (azimuth, elevation, radius)
    from a target drawn uniformly in cfg.target_box; the optical axis points
    at the target. ``on_degenerate`` is "resample" (draw again when the view
    direction aligns with the up hint) or "raise".
    """
    if on_degenerate not in ("resample", "raise"):
        raise ValueError(f"on_degenerate must be 'resample' or 'raise', got {on_degenerate!r}")
    box_lo = np.array(cfg.target_box[0], dtype=np.float64)
    box_hi = np.array(cfg.target_box[1], dtype=np.float64)
    for _ in range(max_attempts):
        azimuth = np.deg2rad(rng.uniform(*cfg.azimuth_deg))
        elevation = np.deg2rad(rng.uniform(*cfg.elevation_deg))
        radius = rng.uniform(*cfg.radius_m)
        target = rng.uniform(box_lo, box_hi)
        offset = radius * np.array(
            [
                np.cos(elevation) * np.cos(azimuth),
                np.cos(elevation) * np.sin(azimuth),
                np.sin(elevation),
            ]
        )
        try:
            return lookat_pose(center=target + offset, target=target, up=cfg.up)
        except DegenerateUp:
            if on_degenerate == "raise":
                raise
    raise DegenerateUp(
        f"no non-degenerate pose found in {max_attempts} attempts; "
        "sampler ranges keep the optical axis aligned with the up hint"
    )
