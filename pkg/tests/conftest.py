"""Shared fixtures and synthetic-scene helpers."""

import math

import numpy as np
import pytest

from camtok.camera import (
    CameraPose,
    Intrinsics,
    Quaternion,
    Trajectory,
    TrajectoryEntry,
    quat_to_rotmat,
)
from camtok.geometry import ColorImage, DepthMap


def random_unit_quat(rng) -> Quaternion:
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    return Quaternion(*v)


def random_pose(rng, t_scale: float = 1.0) -> CameraPose:
    return CameraPose(quat_to_rotmat(random_unit_quat(rng)), rng.standard_normal(3) * t_scale)


def axis_angle_pose(axis, angle_deg: float, translation) -> CameraPose:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    half = math.radians(angle_deg) / 2.0
    q = Quaternion(math.cos(half), *(math.sin(half) * axis))
    return CameraPose(quat_to_rotmat(q), translation)


def square_intrinsics(side: int, focal: float | None = None) -> Intrinsics:
    f = float(side) if focal is None else focal
    return Intrinsics(fx=f, fy=f, cx=side / 2.0, cy=side / 2.0, width=side, height=side)


def make_trajectory(poses, K: Intrinsics | None = None) -> Trajectory:
    K = K or square_intrinsics(64)
    return Trajectory(tuple(TrajectoryEntry(i, p, K) for i, p in enumerate(poses)))


def textured_scene(rng, side: int, smooth: bool = False):
    """Random depth/color pair sized for ``square_intrinsics(side)``."""
    if smooth:
        us, vs = np.meshgrid(np.arange(side, dtype=float), np.arange(side, dtype=float))
        depth_vals = 3.0 + 0.5 * np.sin(us / 17.0) * np.cos(vs / 13.0)
    else:
        depth_vals = rng.uniform(1.0, 5.0, (side, side))
    depth = DepthMap(side, side, depth_vals)
    image = ColorImage(side, side, rng.random((side, side, 3)))
    return depth, image


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
