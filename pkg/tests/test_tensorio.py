import json

import numpy as np
import pytest

from plucker_rig import (
    BadRotation,
    CameraPose,
    CorruptFile,
    Intrinsics,
    RayMap,
    SchemaError,
    ShapeMismatch,
    UnsupportedVersion,
    ray_map,
)
from plucker_rig.actions import ABS_EE, ABS_JOINT, JointVector, Se3Pose, Trajectory
from plucker_rig.schedule import stair_schedule
from plucker_rig.tensorio import (
    CameraEntry,
    CamerasDoc,
    read_cameras,
    read_raymap,
    read_trajectory,
    schedule_from_json,
    schedule_to_json,
    write_cameras,
    write_raymap,
    write_trajectory,
)

from conftest import random_camera


def crc32_reference(data: bytes) -> int:
    """Bitwise CRC32 (polynomial 0xEDB88320, reflected), independent of zlib."""
    crc = 0xFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ (0xEDB88320 if crc & 1 else 0)
    return crc ^ 0xFFFFFFFF


def identity_1x1_raymap() -> RayMap:
    return RayMap(data=np.array([[[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]]]))


class TestRayMapFile:
    def test_golden_bytes_1x1(self, tmp_path):
        path = tmp_path / "unit.plkr"
        write_raymap(identity_1x1_raymap(), path)
        blob = path.read_bytes()
        payload = np.array([0, 0, 1, 0, 0, 0], dtype="<f4").tobytes()
        expected = (
            bytes.fromhex("504c4b52" "0100" "0000" "01000000" "01000000" "06000000" "00")
            + b"\x00" * 7
            + payload
            + crc32_reference(payload).to_bytes(4, "little")
        )
        assert blob == expected
        assert len(payload) == 24

    def test_crc_matches_independent_implementation(self, tmp_path, rng):
        intr, pose = random_camera(rng)
        small = Intrinsics(fx=intr.fx, fy=intr.fy, cx=3, cy=3, width=6, height=5)
        path = tmp_path / "cam.plkr"
        write_raymap(ray_map(small, pose), path)
        blob = path.read_bytes()
        payload = blob[28:-4]
        assert int.from_bytes(blob[-4:], "little") == crc32_reference(payload)

    def test_round_trip_32bit(self, tmp_path, rng):
        intr, pose = random_camera(rng)
        small = Intrinsics(fx=intr.fx, fy=intr.fy, cx=4, cy=4, width=8, height=8)
        rm = ray_map(small, pose)
        path = tmp_path / "rt.plkr"
        write_raymap(rm, path)
        back, image = read_raymap(path, validate=True)
        assert image is None
        assert np.array_equal(back.data, rm.data.astype(np.float32).astype(np.float64))

    def test_round_trip_with_image(self, tmp_path, rng):
        intr, pose = random_camera(rng)
        small = Intrinsics(fx=intr.fx, fy=intr.fy, cx=2, cy=2, width=4, height=4)
        rm = ray_map(small, pose)
        img = rng.uniform(size=(4, 4, 3))
        path = tmp_path / "img.plkr"
        write_raymap(rm, path, image=img)
        back, back_img = read_raymap(path)
        assert back_img is not None
        assert np.array_equal(back_img, img.astype(np.float32).astype(np.float64))
        assert np.array_equal(back.data, rm.data.astype(np.float32).astype(np.float64))

    def test_image_shape_mismatch(self, tmp_path):
        rm = identity_1x1_raymap()
        with pytest.raises(ShapeMismatch):
            write_raymap(rm, tmp_path / "x.plkr", image=np.zeros((2, 2, 3)))

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "trunc.plkr"
        write_raymap(identity_1x1_raymap(), path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-5])
        with pytest.raises(CorruptFile):
            read_raymap(path)

    def test_every_header_bit_flip_detected(self, tmp_path):
        path = tmp_path / "hdr.plkr"
        write_raymap(identity_1x1_raymap(), path)
        blob = bytearray(path.read_bytes())
        for byte_idx in range(28):
            for bit in range(8):
                corrupted = bytearray(blob)
                corrupted[byte_idx] ^= 1 << bit
                path.write_bytes(bytes(corrupted))
                with pytest.raises((CorruptFile, UnsupportedVersion)):
                    read_raymap(path)

    def test_payload_bit_flips_detected(self, tmp_path, rng):
        intr, pose = random_camera(rng)
        small = Intrinsics(fx=intr.fx, fy=intr.fy, cx=4, cy=4, width=8, height=8)
        path = tmp_path / "pl.plkr"
        write_raymap(ray_map(small, pose), path)
        blob = bytearray(path.read_bytes())
        payload_len = len(blob) - 32
        for _ in range(64):
            byte_idx = 28 + int(rng.integers(payload_len))
            bit = int(rng.integers(8))
            corrupted = bytearray(blob)
            corrupted[byte_idx] ^= 1 << bit
            path.write_bytes(bytes(corrupted))
            with pytest.raises(CorruptFile):
                read_raymap(path)

    def test_crc_field_bit_flips_detected(self, tmp_path):
        path = tmp_path / "crc.plkr"
        write_raymap(identity_1x1_raymap(), path)
        blob = bytearray(path.read_bytes())
        for bit in range(32):
            corrupted = bytearray(blob)
            corrupted[len(blob) - 4 + bit // 8] ^= 1 << (bit % 8)
            path.write_bytes(bytes(corrupted))
            with pytest.raises(CorruptFile):
                read_raymap(path)


def identity_cameras_doc() -> CamerasDoc:
    return CamerasDoc(
        cameras=(
            CameraEntry(
                id="cam0",
                intrinsics=Intrinsics(fx=600, fy=600, cx=320, cy=240, width=640, height=480),
                pose=CameraPose(rotation=np.eye(3), translation=np.zeros(3)),
            ),
        )
    )


class TestCamerasDoc:
    def test_identity_round_trip(self, tmp_path):
        path = tmp_path / "cams.json"
        write_cameras(identity_cameras_doc(), path)
        doc = read_cameras(path)
        cam = doc.get("cam0")
        assert np.array_equal(cam.pose.rotation, np.eye(3))
        assert np.array_equal(cam.pose.translation, np.zeros(3))

    def test_float_exact_round_trip(self, tmp_path, rng):
        intr, pose = random_camera(rng, with_skew=True)
        doc = CamerasDoc(cameras=(CameraEntry(id="a", intrinsics=intr, pose=pose),))
        path = tmp_path / "cams.json"
        write_cameras(doc, path)
        back = read_cameras(path).get("a")
        assert back.intrinsics == intr
        assert np.array_equal(back.pose.rotation, pose.rotation)
        assert np.array_equal(back.pose.translation, pose.translation)

    def test_reflection_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        payload = {
            "cameras": [
                {
                    "id": "c",
                    "width": 4,
                    "height": 4,
                    "intrinsics": {"fx": 1, "fy": 1, "cx": 0, "cy": 0},
                    "extrinsics": {
                        "rotation": [1, 0, 0, 0, 1, 0, 0, 0, -1],
                        "translation": [0, 0, 0],
                    },
                }
            ]
        }
        path.write_text(json.dumps(payload))
        with pytest.raises(BadRotation):
            read_cameras(path)

    def test_slightly_off_rotation_needs_repair_flag(self, tmp_path):
        R = np.eye(3)
        R[0, 0] += 5e-8
        payload = {
            "cameras": [
                {
                    "id": "c",
                    "width": 4,
                    "height": 4,
                    "intrinsics": {"fx": 1, "fy": 1, "cx": 0, "cy": 0},
                    "extrinsics": {
                        "rotation": list(R.reshape(-1)),
                        "translation": [0, 0, 0],
                    },
                }
            ]
        }
        path = tmp_path / "drift.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(BadRotation):
            read_cameras(path)
        doc = read_cameras(path, repair_rotations=True)
        R_fixed = doc.get("c").pose.rotation
        assert np.abs(R_fixed.T @ R_fixed - np.eye(3)).max() <= 1e-12

    def test_duplicate_ids_rejected(self):
        cam = identity_cameras_doc().cameras[0]
        with pytest.raises(SchemaError):
            CamerasDoc(cameras=(cam, cam))

    def test_missing_field(self, tmp_path):
        path = tmp_path / "missing.json"
        path.write_text(json.dumps({"cameras": [{"id": "x"}]}))
        with pytest.raises(SchemaError):
            read_cameras(path)


class TestScheduleDoc:
    def test_round_trip(self):
        sched = stair_schedule(4, 3, 1)
        assert schedule_from_json(schedule_to_json(sched)) == sched

    def test_bad_document(self):
        with pytest.raises(SchemaError):
            schedule_from_json({"episodes": [[0]]})


class TestTrajectoryDoc:
    def test_ee_round_trip(self, tmp_path, rng):
        steps = tuple(
            Se3Pose(
                position=rng.normal(size=3),
                quaternion=_rand_quat(rng),
            )
            for _ in range(10)
        )
        traj = Trajectory(space=ABS_EE, steps=steps, grippers=tuple(rng.uniform(size=10)))
        path = tmp_path / "traj.json"
        write_trajectory(traj, path)
        back = read_trajectory(path)
        assert back.space == ABS_EE
        assert back.grippers == traj.grippers
        for a, b in zip(traj.steps, back.steps):
            assert np.array_equal(a.position, b.position)
            assert np.array_equal(a.quaternion, b.quaternion)

    def test_joint_round_trip(self, tmp_path, rng):
        steps = tuple(JointVector(values=rng.normal(size=6)) for _ in range(5))
        traj = Trajectory(space=ABS_JOINT, steps=steps, grippers=(0.0,) * 5)
        path = tmp_path / "jt.json"
        write_trajectory(traj, path)
        back = read_trajectory(path)
        for a, b in zip(traj.steps, back.steps):
            assert np.array_equal(a.values, b.values)

    def test_unknown_space(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"space": "teleport", "steps": []}))
        with pytest.raises(SchemaError):
            read_trajectory(path)


def _rand_quat(rng):
    q = rng.normal(size=4)
    q = q / np.linalg.norm(q)
    return -q if q[0] < 0 else q
