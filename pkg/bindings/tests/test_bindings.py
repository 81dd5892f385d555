import subprocess

import numpy as np
import pytest

from plucker_rig import Intrinsics, joint_crop, ray_map
from plucker_rig.errors import BadRotation, RectOutOfBounds
from plucker_rig.schedule import sample_lookat_pose, PoseSamplerConfig
from plucker_rig.tensorio import CameraEntry, CamerasDoc, write_cameras
from plucker_rig.transforms import CropRect

from plucker_rig_bindings import bound_joint_crop, bound_ray_map, read_raymap

IDENTITY_ROT = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)


def random_camera(rng):
    intr = Intrinsics(
        fx=float(rng.uniform(50, 400)), fy=float(rng.uniform(50, 400)),
        cx=float(rng.uniform(4, 12)), cy=float(rng.uniform(4, 12)),
        width=16, height=12, skew=float(rng.uniform(-2, 2)),
    )
    pose = sample_lookat_pose(rng, PoseSamplerConfig())
    return intr, pose


class TestBoundRayMap:
    def test_identity_1x1(self):
        out = bound_ray_map(1, 1, 0, 0, IDENTITY_ROT, (0, 0, 0), height=1, width=1)
        assert out.dtype == np.float32
        assert out.shape == (1, 1, 6)
        assert np.array_equal(out[0, 0], [0, 0, 1, 0, 0, 0])

    def test_matches_library_bitwise(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            intr, pose = random_camera(rng)
            out = bound_ray_map(
                intr.fx, intr.fy, intr.cx, intr.cy,
                pose.rotation.ravel(), pose.translation,
                height=intr.height, width=intr.width, skew=intr.skew,
            )
            expected = ray_map(intr, pose).data.astype(np.float32)
            assert out.tobytes() == expected.tobytes()

    def test_matches_cli_gen_raymap_bytewise(self, tmp_path):
        # cross-interface oracle: 20 random cameras through the CLI binary
        rng = np.random.default_rng(1)
        cameras = []
        for i in range(20):
            intr, pose = random_camera(rng)
            cameras.append(CameraEntry(id=f"cam{i:03d}", intrinsics=intr, pose=pose))
        cams_path = tmp_path / "cameras.json"
        write_cameras(CamerasDoc(cameras=tuple(cameras)), cams_path)

        for cam in cameras:
            out_path = tmp_path / f"{cam.id}.plkr"
            subprocess.run(
                ["plucker-rig", "gen-raymap", "--cameras", str(cams_path),
                 "--camera-id", cam.id, "--out", str(out_path)],
                check=True, capture_output=True,
            )
            intr = cam.intrinsics
            bound = bound_ray_map(
                intr.fx, intr.fy, intr.cx, intr.cy,
                cam.pose.rotation.ravel(), cam.pose.translation,
                height=intr.height, width=intr.width, skew=intr.skew,
            )
            blob = out_path.read_bytes()
            payload = blob[28:-4]  # strip header and trailing checksum
            assert bound.tobytes() == payload

    def test_invalid_rotation_raises(self):
        with pytest.raises(BadRotation):
            bound_ray_map(1, 1, 0, 0, (2, 0, 0, 0, 1, 0, 0, 0, 1), (0, 0, 0),
                          height=1, width=1)


class TestBoundJointCrop:
    def test_delegation_equality(self):
        rng = np.random.default_rng(2)
        intr, pose = random_camera(rng)
        rm = ray_map(intr, pose)
        image = rng.uniform(size=(intr.height, intr.width, 3))
        rect = CropRect(x0=3, y0=2, w=7, h=5)

        img_a, rm_a = joint_crop(image, rm, rect)
        img_b, rm_b = bound_joint_crop(image, rm.data, (3, 2, 7, 5))
        assert np.array_equal(img_a, img_b)
        assert np.array_equal(rm_a.data, rm_b)

    def test_float32_round_trip_preserves_dtype(self):
        rng = np.random.default_rng(3)
        intr, pose = random_camera(rng)
        data32 = ray_map(intr, pose).data.astype(np.float32)
        image = np.zeros((intr.height, intr.width, 0))
        _, cropped = bound_joint_crop(image, data32, (1, 1, 4, 4))
        assert cropped.dtype == np.float32
        assert cropped.tobytes() == data32[1:5, 1:5].tobytes()

    def test_out_of_bounds_rect_raises(self):
        data = bound_ray_map(1, 1, 0, 0, IDENTITY_ROT, (0, 0, 0), height=4, width=4)
        with pytest.raises(RectOutOfBounds):
            bound_joint_crop(np.zeros((4, 4, 3)), data, (2, 2, 8, 8))


class TestFileIoReexports:
    def test_round_trip_through_reexported_io(self, tmp_path):
        from plucker_rig_bindings import write_raymap
        from plucker_rig.geometry import RayMap

        data = bound_ray_map(100, 100, 8, 6, IDENTITY_ROT, (0, 0, 0),
                             height=12, width=16)
        path = tmp_path / "rm.plkr"
        write_raymap(RayMap(data=data.astype(np.float64)), path)
        loaded, image = read_raymap(path)
        assert image is None
        assert loaded.data.astype(np.float32).tobytes() == data.tobytes()
