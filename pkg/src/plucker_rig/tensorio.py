"""Bit-exact serialization for ray-maps, cameras, schedules, trajectories.

Ray-map binary format (all multi-byte fields little-endian):

    offset  size  field
    0       4     magic "PLKR"
    4       2     version, u16, currently 1
    6       2     flags, u16; bit 0 set = payload carries 3 trailing image
                  channels (9 channels total); all other bits must be zero
    8       4     height, u32
    12      4     width, u32
    16      4     channels, u32, 6 or 9, must agree with flags bit 0
    20      1     dtype, u8, 0 = 32-bit float little-endian
    21      7     reserved, must be zero
    28      H*W*C*4   payload, row-major H x W x C float32
    ...     4     CRC32 (polynomial 0xEDB88320, reflected) of the payload only

Channel order is (dx, dy, dz, mx, my, mz[, r, g, b]); image channels come
last so a 6-channel reader can ignore them via the channels field. Geometry
is computed in float64 and stored in float32, so values read back agree with
the originals to 32-bit precision (invariant tolerances loosen to 1e-6).

Worked hex dump of the 1x1 identity-camera file (ray (0,0,1,0,0,0)):

    504c4b52 0100 0000 01000000 01000000 06000000 00 00000000000000
    00000000 00000000 0000803f 00000000 00000000 00000000
    d81dbb00

Cameras, schedules, and trajectories are JSON documents; floats round-trip
exactly through repr-based encoding.
"""

from __future__ import annotations

import json
import logging
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .actions import (
    ABS_EE,
    ABS_JOINT,
    DELTA_EE,
    DELTA_JOINT,
    JointVector,
    Se3Pose,
    Trajectory,
)
from .errors import (
    BadRotation,
    CorruptFile,
    IoFailure,
    SchemaError,
    ShapeMismatch,
    UnsupportedVersion,
)
from .geometry import CameraPose, Intrinsics, RayMap, orthonormalize_rotation
from .schedule import CameraSchedule

logger = logging.getLogger(__name__)

MAGIC = b"PLKR"
VERSION = 1
FLAG_HAS_IMAGE = 0x0001
_HEADER = struct.Struct("<4sHHIIIB7s")
DTYPE_F32 = 0


def write_raymap(rm: RayMap, path, image: np.ndarray | None = None) -> None:
    """Write a ray-map (optionally with a 3-channel image) to ``path``.

    The image must be H x W x 3 and is stored as float32 alongside the six
    ray channels.
    """
    if image is not None:
        image = np.asarray(image, dtype=np.float64)
        if image.shape != (rm.height, rm.width, 3):
            raise ShapeMismatch(
                f"image shape {image.shape} does not match ray-map "
                f"{rm.height}x{rm.width}x3"
            )
        grid = np.concatenate([rm.data, image], axis=2)
        flags = FLAG_HAS_IMAGE
        channels = 9
    else:
        grid = rm.data
        flags = 0
        channels = 6

    payload = np.ascontiguousarray(grid, dtype="<f4").tobytes()
    header = _HEADER.pack(
        MAGIC, VERSION, flags, rm.height, rm.width, channels, DTYPE_F32, b"\x00" * 7
    )
    crc = struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(payload)
            f.write(crc)
    except OSError as exc:
        raise IoFailure(f"failed to write {path}: {exc}") from exc


def read_raymap(path, validate: bool = False) -> tuple[RayMap, np.ndarray | None]:
    """Read a ray-map file; returns (RayMap, image or None).

    Verifies magic, version, header self-consistency, and the payload CRC.
    With ``validate=True`` the ray invariants are re-checked at the 1e-6
    tolerance appropriate for 32-bit storage.
    """
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as exc:
        raise IoFailure(f"failed to read {path}: {exc}") from exc

    if len(blob) < _HEADER.size + 4:
        raise CorruptFile(f"{path}: file too short ({len(blob)} bytes)")
    magic, version, flags, height, width, channels, dtype, reserved = _HEADER.unpack(
        blob[: _HEADER.size]
    )
    if magic != MAGIC:
        raise CorruptFile(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"{path}: version {version}, reader supports {VERSION}")
    if flags & ~FLAG_HAS_IMAGE:
        raise CorruptFile(f"{path}: unknown flag bits 0x{flags:04x}")
    if dtype != DTYPE_F32:
        raise CorruptFile(f"{path}: unknown dtype code {dtype}")
    if reserved != b"\x00" * 7:
        raise CorruptFile(f"{path}: reserved bytes are not zero")
    expected_channels = 9 if flags & FLAG_HAS_IMAGE else 6
    if channels != expected_channels:
        raise CorruptFile(
            f"{path}: channels field {channels} disagrees with flags (expected "
            f"{expected_channels})"
        )
    payload_len = height * width * channels * 4
    if len(blob) != _HEADER.size + payload_len + 4:
        raise CorruptFile(
            f"{path}: size {len(blob)} does not match header "
            f"({height}x{width}x{channels})"
        )
    payload = blob[_HEADER.size : _HEADER.size + payload_len]
    (stored_crc,) = struct.unpack("<I", blob[-4:])
    actual_crc = zlib.crc32(payload) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise CorruptFile(
            f"{path}: CRC mismatch (stored {stored_crc:#010x}, computed {actual_crc:#010x})"
        )

    grid = (
        np.frombuffer(payload, dtype="<f4")
        .reshape(height, width, channels)
        .astype(np.float64)
    )
    rm = RayMap(data=grid[..., :6])
    image = grid[..., 6:9] if channels == 9 else None
    if validate:
        # float32 absolute error grows with magnitude; scale the center
        # residual tolerance by the largest stored value
        scale = 1.0 + float(np.abs(rm.data).max())
        try:
            rm.validate(tol=1e-6, center_residual_tol=1e-6 * scale)
        except ValueError as exc:
            raise CorruptFile(f"{path}: {exc}") from exc
    return rm, image


# ---------------------------------------------------------------------------
# cameras document
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CameraEntry:
    """One named camera: intrinsics plus world-to-camera extrinsics."""

    id: str
    intrinsics: Intrinsics
    pose: CameraPose


@dataclass(frozen=True)
class CamerasDoc:
    """Ordered collection of cameras with unique ids."""

    cameras: tuple[CameraEntry, ...]

    def __post_init__(self):
        cameras = tuple(self.cameras)
        ids = [c.id for c in cameras]
        if len(set(ids)) != len(ids):
            raise SchemaError("camera ids must be unique")
        object.__setattr__(self, "cameras", cameras)

    def get(self, camera_id: str) -> CameraEntry:
        for cam in self.cameras:
            if cam.id == camera_id:
                return cam
        raise SchemaError(f"no camera with id {camera_id!r}")


def _require(mapping: dict, key: str, context: str):
    if not isinstance(mapping, dict) or key not in mapping:
        raise SchemaError(f"{context}: missing field {key!r}")
    return mapping[key]


def read_cameras(path, repair_rotations: bool = False) -> CamerasDoc:
    """Parse a cameras JSON document.

    Rotations must be orthonormal with det +1 within 1e-6 (calibration-file
    tolerance); with ``repair_rotations=True`` a slightly off matrix is
    projected back onto SO(3) and the repair is logged. Reflections are
    always rejected.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as exc:
        raise IoFailure(f"failed to read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc

    entries = []
    for i, cam in enumerate(_require(raw, "cameras", path)):
        ctx = f"{path}: camera[{i}]"
        cam_id = _require(cam, "id", ctx)
        if not isinstance(cam_id, str):
            raise SchemaError(f"{ctx}: id must be a string")
        intr_raw = _require(cam, "intrinsics", ctx)
        extr_raw = _require(cam, "extrinsics", ctx)
        try:
            intr = Intrinsics(
                fx=float(_require(intr_raw, "fx", ctx)),
                fy=float(_require(intr_raw, "fy", ctx)),
                cx=float(_require(intr_raw, "cx", ctx)),
                cy=float(_require(intr_raw, "cy", ctx)),
                width=int(_require(cam, "width", ctx)),
                height=int(_require(cam, "height", ctx)),
                skew=float(intr_raw.get("skew", 0.0)),
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{ctx}: bad intrinsics: {exc}") from exc
        rotation = np.asarray(_require(extr_raw, "rotation", ctx), dtype=np.float64)
        translation = np.asarray(_require(extr_raw, "translation", ctx), dtype=np.float64)
        if rotation.shape != (9,):
            raise SchemaError(f"{ctx}: rotation must be 9 floats row-major")
        if translation.shape != (3,):
            raise SchemaError(f"{ctx}: translation must be 3 floats")
        R = rotation.reshape(3, 3)
        det = np.linalg.det(R)
        if det <= 0:
            raise BadRotation(f"{ctx}: rotation determinant {det:.6f} <= 0")
        err = np.abs(R.T @ R - np.eye(3)).max()
        if err > 1e-6:
            raise BadRotation(
                f"{ctx}: rotation not orthonormal (max |R.T R - I| = {err:.3e})"
            )
        if err > 1e-9:
            if not repair_rotations:
                raise BadRotation(
                    f"{ctx}: rotation off SO(3) by {err:.3e}; pass "
                    "repair_rotations=True to project it back"
                )
            logger.warning("%s: repairing rotation (orthonormality error %.3e)", ctx, err)
            R = orthonormalize_rotation(R)
        entries.append(
            CameraEntry(
                id=cam_id,
                intrinsics=intr,
                pose=CameraPose(rotation=R, translation=translation),
            )
        )
    return CamerasDoc(cameras=tuple(entries))


def write_cameras(doc: CamerasDoc, path) -> None:
    """Write a cameras document; floats survive a read round trip exactly."""
    payload = {
        "cameras": [
            {
                "id": cam.id,
                "width": cam.intrinsics.width,
                "height": cam.intrinsics.height,
                "intrinsics": {
                    "fx": cam.intrinsics.fx,
                    "fy": cam.intrinsics.fy,
                    "cx": cam.intrinsics.cx,
                    "cy": cam.intrinsics.cy,
                    "skew": cam.intrinsics.skew,
                },
                "extrinsics": {
                    "rotation": [float(x) for x in cam.pose.rotation.reshape(-1)],
                    "translation": [float(x) for x in cam.pose.translation],
                },
            }
            for cam in doc.cameras
        ]
    }
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    except OSError as exc:
        raise IoFailure(f"failed to write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# schedule document
# ---------------------------------------------------------------------------

def schedule_to_json(sched: CameraSchedule) -> dict:
    return {
        "n": sched.n,
        "m": sched.m,
        "pool_size": sched.pool_size,
        "episodes": [list(ep) for ep in sched.episodes],
    }


def schedule_from_json(raw: dict) -> CameraSchedule:
    try:
        return CameraSchedule(
            episodes=tuple(tuple(ep) for ep in raw["episodes"]),
            n=int(raw["n"]),
            m=int(raw["m"]),
            pool_size=int(raw["pool_size"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad schedule document: {exc}") from exc


# ---------------------------------------------------------------------------
# trajectory document
# ---------------------------------------------------------------------------

def _pose_to_json(pose: Se3Pose) -> dict:
    return {
        "position": [float(x) for x in pose.position],
        "quaternion": [float(x) for x in pose.quaternion],
    }


def _pose_from_json(raw: dict, ctx: str) -> Se3Pose:
    try:
        return Se3Pose(position=raw["position"], quaternion=raw["quaternion"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{ctx}: bad pose: {exc}") from exc


def write_trajectory(traj: Trajectory, path) -> None:
    """Write a trajectory JSON document."""
    is_ee = traj.space in (ABS_EE, DELTA_EE)
    steps = []
    for step, grip in zip(traj.steps, traj.grippers):
        entry = _pose_to_json(step) if is_ee else {"joints": [float(x) for x in step.values]}
        entry["gripper"] = grip
        steps.append(entry)
    payload: dict = {"space": traj.space, "steps": steps}
    if traj.space == DELTA_EE:
        payload["rot_frame"] = traj.rot_frame
    if traj.reference is not None:
        payload["reference"] = (
            _pose_to_json(traj.reference)
            if is_ee
            else {"joints": [float(x) for x in traj.reference.values]}
        )
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    except OSError as exc:
        raise IoFailure(f"failed to write {path}: {exc}") from exc


def read_trajectory(path) -> Trajectory:
    """Read a trajectory JSON document."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as exc:
        raise IoFailure(f"failed to read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc

    space = _require(raw, "space", path)
    if space not in (ABS_EE, DELTA_EE, ABS_JOINT, DELTA_JOINT):
        raise SchemaError(f"{path}: unknown action space {space!r}")
    is_ee = space in (ABS_EE, DELTA_EE)
    steps = []
    grippers = []
    for i, entry in enumerate(_require(raw, "steps", path)):
        ctx = f"{path}: step[{i}]"
        if is_ee:
            steps.append(_pose_from_json(entry, ctx))
        else:
            try:
                steps.append(JointVector(values=_require(entry, "joints", ctx)))
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{ctx}: bad joints: {exc}") from exc
        grippers.append(float(_require(entry, "gripper", ctx)))
    reference = None
    if "reference" in raw:
        if is_ee:
            reference = _pose_from_json(raw["reference"], f"{path}: reference")
        else:
            try:
                reference = JointVector(values=_require(raw["reference"], "joints", path))
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}: bad reference: {exc}") from exc
    return Trajectory(
        space=space,
        steps=tuple(steps),
        grippers=tuple(grippers),
        reference=reference,
        rot_frame=raw.get("rot_frame", "world"),
    )
