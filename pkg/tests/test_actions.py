import numpy as np
import pytest

from plucker_rig.actions import (
    ABS_EE,
    ABS_JOINT,
    DELTA_EE,
    DELTA_JOINT,
    JointVector,
    Se3Pose,
    Trajectory,
    convert,
    ee_abs_to_delta,
    ee_delta_to_abs,
    joint_abs_to_delta,
    joint_delta_to_abs,
    quat_canonical,
    quat_conjugate,
    quat_from_axis_angle,
    quat_from_matrix,
    quat_multiply,
    quat_rotation_angle,
    quat_to_axis_angle,
    quat_to_matrix,
)
from plucker_rig.errors import DofMismatch, EmptyTrajectory, MissingReference

IDENTITY_Q = np.array([1.0, 0.0, 0.0, 0.0])


def rand_quat(rng):
    q = rng.normal(size=4)
    return quat_canonical(q / np.linalg.norm(q))


def rand_ee_traj(rng, steps=50):
    poses = tuple(
        Se3Pose(position=rng.normal(size=3), quaternion=rand_quat(rng)) for _ in range(steps)
    )
    return Trajectory(space=ABS_EE, steps=poses, grippers=tuple(rng.uniform(size=steps)))


def rot_distance(qa, qb):
    return quat_rotation_angle(quat_multiply(qa, quat_conjugate(qb)))


class TestQuaternions:
    def test_matrix_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            q = rand_quat(rng)
            assert np.abs(quat_from_matrix(quat_to_matrix(q)) - q).max() <= 1e-12

    def test_axis_angle_round_trip(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            q = rand_quat(rng)
            assert rot_distance(quat_from_axis_angle(quat_to_axis_angle(q)), q) <= 1e-7

    def test_identity(self):
        assert np.array_equal(quat_from_axis_angle([0, 0, 0]), IDENTITY_Q)
        assert np.array_equal(quat_to_axis_angle(IDENTITY_Q), [0, 0, 0])

    def test_canonicalization(self):
        q = np.array([-0.5, 0.5, 0.5, 0.5])
        assert quat_canonical(q)[0] > 0


class TestSe3Pose:
    def test_rejects_non_unit_quaternion(self):
        with pytest.raises(ValueError):
            Se3Pose(position=[0, 0, 0], quaternion=[1, 1, 0, 0])

    def test_canonicalizes_double_cover(self):
        pose = Se3Pose(position=[0, 0, 0], quaternion=-IDENTITY_Q)
        assert pose.quaternion[0] == 1.0


class TestEeConversions:
    def test_constant_pose_gives_identity_deltas(self):
        pose = Se3Pose(position=[1, 2, 3], quaternion=IDENTITY_Q)
        traj = Trajectory(space=ABS_EE, steps=(pose,) * 5, grippers=(0.0,) * 5)
        delta = ee_abs_to_delta(traj)
        assert len(delta) == 5
        for step in delta.steps:
            assert np.array_equal(step.position, [0, 0, 0])
            assert np.array_equal(step.quaternion, IDENTITY_Q)

    def test_pure_translation_deltas(self):
        positions = [(0, 0, 0), (1, 0, 0), (1, 1, 0)]
        traj = Trajectory(
            space=ABS_EE,
            steps=tuple(Se3Pose(position=p, quaternion=IDENTITY_Q) for p in positions),
            grippers=(0.0, 0.0, 0.0),
        )
        delta = ee_abs_to_delta(traj)
        assert np.array_equal(delta.steps[1].position, [1, 0, 0])
        assert np.array_equal(delta.steps[2].position, [0, 1, 0])

    @pytest.mark.parametrize("rot_frame", ["world", "ee"])
    def test_round_trip(self, rot_frame):
        rng = np.random.default_rng(2)
        for _ in range(20):
            traj = rand_ee_traj(rng)
            back = ee_delta_to_abs(ee_abs_to_delta(traj, rot_frame=rot_frame))
            for a, b in zip(traj.steps, back.steps):
                assert np.abs(a.position - b.position).max() <= 1e-9
                assert rot_distance(a.quaternion, b.quaternion) <= 1e-7
            assert back.grippers == traj.grippers

    def test_all_zero_deltas_stay_at_reference(self):
        ref = Se3Pose(position=[1, 2, 3], quaternion=IDENTITY_Q)
        zero = Se3Pose(position=[0, 0, 0], quaternion=IDENTITY_Q)
        delta = Trajectory(
            space=DELTA_EE, steps=(zero,) * 4, grippers=(0.0,) * 4, reference=ref
        )
        out = ee_delta_to_abs(delta)
        for pose in out.steps:
            assert np.array_equal(pose.position, ref.position)

    def test_single_delta_from_origin(self):
        ref = Se3Pose(position=[0, 0, 0], quaternion=IDENTITY_Q)
        delta = Trajectory(
            space=DELTA_EE,
            steps=(Se3Pose(position=[1, 2, 3], quaternion=IDENTITY_Q),),
            grippers=(0.5,),
            reference=ref,
        )
        out = ee_delta_to_abs(delta)
        assert np.array_equal(out.steps[0].position, [1, 2, 3])

    def test_long_accumulation_keeps_unit_norm(self):
        rng = np.random.default_rng(3)
        deltas = tuple(
            Se3Pose(position=rng.normal(size=3) * 0.01, quaternion=rand_quat(rng))
            for _ in range(1000)
        )
        traj = Trajectory(
            space=DELTA_EE,
            steps=deltas,
            grippers=(0.0,) * 1000,
            reference=Se3Pose(position=[0, 0, 0], quaternion=IDENTITY_Q),
        )
        out = ee_delta_to_abs(traj)
        for pose in out.steps:
            assert abs(np.linalg.norm(pose.quaternion) - 1.0) <= 1e-9

    def test_empty_trajectory(self):
        traj = Trajectory(space=ABS_EE, steps=(), grippers=())
        with pytest.raises(EmptyTrajectory):
            ee_abs_to_delta(traj)

    def test_missing_reference(self):
        with pytest.raises(MissingReference):
            Trajectory(
                space=DELTA_EE,
                steps=(Se3Pose(position=[0, 0, 0], quaternion=IDENTITY_Q),),
                grippers=(0.0,),
            )


class TestJointConversions:
    def test_constant_joints_zero_deltas(self):
        jv = JointVector(values=[0.1, 0.2, 0.3])
        traj = Trajectory(space=ABS_JOINT, steps=(jv,) * 4, grippers=(0.0,) * 4)
        delta = joint_abs_to_delta(traj)
        for step in delta.steps:
            assert np.array_equal(step.values, [0, 0, 0])

    def test_arithmetic_series(self):
        ref = JointVector(values=np.zeros(6))
        deltas = tuple(JointVector(values=np.full(6, 0.1)) for _ in range(10))
        traj = Trajectory(
            space=DELTA_JOINT, steps=deltas, grippers=(0.0,) * 10, reference=ref
        )
        out = joint_delta_to_abs(traj)
        assert np.abs(out.steps[-1].values - 1.0).max() <= 1e-12

    def test_round_trip_exact(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            steps = tuple(JointVector(values=rng.normal(size=7)) for _ in range(50))
            traj = Trajectory(space=ABS_JOINT, steps=steps, grippers=tuple(rng.uniform(size=50)))
            back = joint_delta_to_abs(joint_abs_to_delta(traj))
            for a, b in zip(traj.steps, back.steps):
                assert np.abs(a.values - b.values).max() <= 1e-12
            assert back.grippers == traj.grippers

    def test_dof_mismatch(self):
        with pytest.raises(DofMismatch):
            Trajectory(
                space=ABS_JOINT,
                steps=(JointVector(values=[1, 2]), JointVector(values=[1, 2, 3])),
                grippers=(0.0, 0.0),
            )


class TestConvert:
    def test_identity_conversion(self):
        rng = np.random.default_rng(5)
        traj = rand_ee_traj(rng, steps=3)
        assert convert(traj, ABS_EE) is traj

    def test_cross_family_rejected(self):
        rng = np.random.default_rng(6)
        traj = rand_ee_traj(rng, steps=3)
        with pytest.raises(ValueError):
            convert(traj, ABS_JOINT)

    def test_gripper_bit_identical_through_chain(self):
        rng = np.random.default_rng(7)
        traj = rand_ee_traj(rng)
        chained = convert(convert(traj, DELTA_EE), ABS_EE)
        assert chained.grippers == traj.grippers
