"""Conversions among the four demonstration action spaces.

Spaces: absolute / delta end-effector pose (position + unit quaternion) and
absolute / delta joint position. Delta trajectories keep the same length as
their absolute source: the step-0 delta is taken against a stored reference
(the initial absolute pose), which makes every conversion losslessly
invertible.

Rotation deltas default to the left-multiplicative world-frame convention
dq_k = q_k * conj(q_{k-1}); pass rot_frame="ee" for the end-effector-frame
convention dq_k = conj(q_{k-1}) * q_k. Position deltas are always in the
world frame. Quaternions are stored (w, x, y, z) and canonicalized to w >= 0.
The gripper channel passes through every conversion bit-identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DofMismatch, EmptyTrajectory, MissingReference

ABS_EE = "abs_ee"
DELTA_EE = "delta_ee"
ABS_JOINT = "abs_joint"
DELTA_JOINT = "delta_joint"
SPACES = (ABS_EE, DELTA_EE, ABS_JOINT, DELTA_JOINT)


# ---------------------------------------------------------------------------
# quaternion helpers, (w, x, y, z) convention
# ---------------------------------------------------------------------------

def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    return np.asarray(q, dtype=np.float64) / np.linalg.norm(q)


def quat_canonical(q: np.ndarray) -> np.ndarray:
    """Resolve the double cover: flip sign so w >= 0."""
    return -q if q[0] < 0 else q


def quat_rotation_angle(q: np.ndarray) -> float:
    """Rotation angle in [0, pi] encoded by a unit quaternion."""
    return 2.0 * np.arccos(np.clip(abs(q[0]), -1.0, 1.0))


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = quat_normalize(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(R: np.ndarray) -> np.ndarray:
    """Unit quaternion (w >= 0) from a rotation matrix (Shepperd's method)."""
    R = np.asarray(R, dtype=np.float64)
    trace = R[0, 0] + R[1, 1] + R[2, 2]
    if trace > 0:
        s = np.sqrt(trace + 1.0) * 2
        q = np.array(
            [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
        )
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2
        q = np.array(
            [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
        )
    elif R[1, 1] >= R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2
        q = np.array(
            [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2
        q = np.array(
            [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
        )
    return quat_canonical(quat_normalize(q))


def quat_from_axis_angle(axis_angle: np.ndarray) -> np.ndarray:
    """Unit quaternion from an axis-angle (Rodrigues) vector."""
    v = np.asarray(axis_angle, dtype=np.float64).reshape(3)
    angle = np.linalg.norm(v)
    if angle < 1e-12:
        return np.array([1.0, 0.0, 0.0, 0.0])
    axis = v / angle
    half = 0.5 * angle
    return quat_canonical(np.concatenate([[np.cos(half)], np.sin(half) * axis]))


def quat_to_axis_angle(q: np.ndarray) -> np.ndarray:
    w, x, y, z = quat_canonical(quat_normalize(q))
    sin_half = np.linalg.norm([x, y, z])
    if sin_half < 1e-12:
        return np.zeros(3)
    angle = 2.0 * np.arctan2(sin_half, w)
    return angle * np.array([x, y, z]) / sin_half


# ---------------------------------------------------------------------------
# trajectory types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Se3Pose:
    """End-effector pose: position (meters) and unit quaternion (w,x,y,z)."""

    position: np.ndarray
    quaternion: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64).reshape(3)
        q = np.asarray(self.quaternion, dtype=np.float64).reshape(4)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise ValueError("pose contains non-finite entries")
        norm_err = abs(np.linalg.norm(q) - 1.0)
        if norm_err > 1e-9:
            raise ValueError(f"quaternion is not unit: | ||q|| - 1 | = {norm_err:.3e}")
        q = quat_canonical(q)
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "quaternion", q)


@dataclass(frozen=True, eq=False)
class JointVector:
    """Joint angles in radians; dof is fixed across a trajectory."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.size == 0:
            raise ValueError("joint vector must have at least one value")
        if not np.all(np.isfinite(v)):
            raise ValueError("joint vector contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dof(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Ordered action sequence in one of the four spaces.

    ``grippers`` is one scalar per step, passed through conversions
    untouched. Delta trajectories carry the initial absolute ``reference``
    and, for delta_ee, the rotation-delta frame ("world" or "ee").
    """

    space: str
    steps: tuple
    grippers: tuple
    reference: object = None
    rot_frame: str = "world"

    def __post_init__(self):
        if self.space not in SPACES:
            raise ValueError(f"unknown action space {self.space!r}")
        if self.rot_frame not in ("world", "ee"):
            raise ValueError(f"rot_frame must be 'world' or 'ee', got {self.rot_frame!r}")
        steps = tuple(self.steps)
        grippers = tuple(float(g) for g in self.grippers)
        if len(grippers) != len(steps):
            raise ValueError("need exactly one gripper value per step")
        want = Se3Pose if self.space in (ABS_EE, DELTA_EE) else JointVector
        if any(not isinstance(s, want) for s in steps):
            raise ValueError(f"space {self.space} requires {want.__name__} steps")
        if self.space in (ABS_JOINT, DELTA_JOINT) and steps:
            dof = steps[0].dof
            if any(s.dof != dof for s in steps):
                raise DofMismatch("joint trajectories must have constant dof")
            if isinstance(self.reference, JointVector) and self.reference.dof != dof:
                raise DofMismatch("reference dof differs from trajectory dof")
        if self.space in (DELTA_EE, DELTA_JOINT) and self.reference is None:
            raise MissingReference(f"{self.space} trajectory requires an initial reference")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "grippers", grippers)

    def __len__(self) -> int:
        return len(self.steps)


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------

def ee_abs_to_delta(traj: Trajectory, rot_frame: str = "world") -> Trajectory:
    """Difference adjacent absolute EE poses; delta_0 is against pose_0 itself.

    dp_k is a world-frame position difference; dq_k is q_k * conj(q_{k-1})
    ("world") or conj(q_{k-1}) * q_k ("ee").
    """
    if traj.space != ABS_EE:
        raise ValueError(f"expected an {ABS_EE} trajectory, got {traj.space}")
    if len(traj) == 0:
        raise EmptyTrajectory("cannot difference an empty trajectory")
    reference = traj.steps[0]
    deltas = []
    prev = reference
    for pose in traj.steps:
        dp = pose.position - prev.position
        if rot_frame == "world":
            dq = quat_multiply(pose.quaternion, quat_conjugate(prev.quaternion))
        else:
            dq = quat_multiply(quat_conjugate(prev.quaternion), pose.quaternion)
        dq = quat_canonical(quat_normalize(dq))
        deltas.append(Se3Pose(position=dp, quaternion=dq))
        prev = pose
    return Trajectory(
        space=DELTA_EE,
        steps=tuple(deltas),
        grippers=traj.grippers,
        reference=reference,
        rot_frame=rot_frame,
    )


def ee_delta_to_abs(traj: Trajectory) -> Trajectory:
    """Accumulate EE deltas from the stored reference; exact inverse of
    ee_abs_to_delta. Quaternions are renormalized at every step."""
    if traj.space != DELTA_EE:
        raise ValueError(f"expected a {DELTA_EE} trajectory, got {traj.space}")
    if traj.reference is None:
        raise MissingReference("delta trajectory has no reference to accumulate from")
    if len(traj) == 0:
        raise EmptyTrajectory("cannot accumulate an empty trajectory")
    poses = []
    prev = traj.reference
    for delta in traj.steps:
        p = prev.position + delta.position
        if traj.rot_frame == "world":
            q = quat_multiply(delta.quaternion, prev.quaternion)
        else:
            q = quat_multiply(prev.quaternion, delta.quaternion)
        q = quat_canonical(quat_normalize(q))
        pose = Se3Pose(position=p, quaternion=q)
        poses.append(pose)
        prev = pose
    return Trajectory(space=ABS_EE, steps=tuple(poses), grippers=traj.grippers)


def joint_abs_to_delta(traj: Trajectory) -> Trajectory:
    """Elementwise differences of adjacent joint vectors; delta_0 is zero."""
    if traj.space != ABS_JOINT:
        raise ValueError(f"expected an {ABS_JOINT} trajectory, got {traj.space}")
    if len(traj) == 0:
        raise EmptyTrajectory("cannot difference an empty trajectory")
    reference = traj.steps[0]
    deltas = []
    prev = reference
    for jv in traj.steps:
        deltas.append(JointVector(values=jv.values - prev.values))
        prev = jv
    return Trajectory(
        space=DELTA_JOINT, steps=tuple(deltas), grippers=traj.grippers, reference=reference
    )


def joint_delta_to_abs(traj: Trajectory) -> Trajectory:
    """Prefix-sum accumulation of joint deltas from the stored reference."""
    if traj.space != DELTA_JOINT:
        raise ValueError(f"expected a {DELTA_JOINT} trajectory, got {traj.space}")
    if traj.reference is None:
        raise MissingReference("delta trajectory has no reference to accumulate from")
    if len(traj) == 0:
        raise EmptyTrajectory("cannot accumulate an empty trajectory")
    joints = []
    prev = traj.reference
    for delta in traj.steps:
        jv = JointVector(values=prev.values + delta.values)
        joints.append(jv)
        prev = jv
    return Trajectory(space=ABS_JOINT, steps=tuple(joints), grippers=traj.grippers)


def convert(traj: Trajectory, to_space: str, rot_frame: str = "world") -> Trajectory:
    """Convert between the absolute and delta variants of one action family."""
    if to_space not in SPACES:
        raise ValueError(f"unknown action space {to_space!r}")
    if traj.space == to_space:
        return traj
    pair = {
        (ABS_EE, DELTA_EE): lambda t: ee_abs_to_delta(t, rot_frame=rot_frame),
        (DELTA_EE, ABS_EE): ee_delta_to_abs,
        (ABS_JOINT, DELTA_JOINT): joint_abs_to_delta,
        (DELTA_JOINT, ABS_JOINT): joint_delta_to_abs,
    }.get((traj.space, to_space))
    if pair is None:
        raise ValueError(
            f"no conversion from {traj.space} to {to_space}: EE and joint "
            "families are not interconvertible without kinematics"
        )
    return pair(traj)
