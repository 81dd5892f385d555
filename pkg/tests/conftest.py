import numpy as np
import pytest

from plucker_rig import CameraPose, Intrinsics, PoseSamplerConfig, sample_lookat_pose


def random_intrinsics(rng: np.random.Generator, with_skew: bool = False) -> Intrinsics:
    width = int(rng.integers(16, 129))
    height = int(rng.integers(16, 129))
    return Intrinsics(
        fx=float(rng.uniform(50, 800)),
        fy=float(rng.uniform(50, 800)),
        cx=float(rng.uniform(0.25, 0.75) * width),
        cy=float(rng.uniform(0.25, 0.75) * height),
        width=width,
        height=height,
        skew=float(rng.uniform(-2, 2)) if with_skew else 0.0,
    )


def random_pose(rng: np.random.Generator) -> CameraPose:
    return sample_lookat_pose(rng, PoseSamplerConfig())


def random_camera(rng: np.random.Generator, with_skew: bool = False):
    return random_intrinsics(rng, with_skew=with_skew), random_pose(rng)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
