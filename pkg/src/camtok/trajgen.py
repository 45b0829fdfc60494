"""Parametric camera trajectory synthesis for the eight standard presets.

Every generated trajectory starts at the identity pose (camera at the origin
looking down +z, up +y) and interpolates its motion parameter uniformly across
frames.  Orbits ride a circle around the pivot while aiming at it, dollies
translate along the viewing axis, pans and tilts rotate in place about the
camera's up and right axes.  "Left" moves or turns toward -x at the start
pose; tilt up turns toward +y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import CameraPose, Intrinsics, Trajectory, TrajectoryEntry
from .errors import InvalidInputError

__all__ = ["PRESET_NAMES", "TrajectorySpec", "preset_names", "generate", "look_at_pose"]

PRESET_NAMES = (
    "orbit_left",
    "orbit_right",
    "dolly_in",
    "dolly_out",
    "pan_left",
    "pan_right",
    "tilt_up",
    "orbit_360",
)

_DEFAULT_ANGLES = {
    "orbit_left": 60.0,
    "orbit_right": 60.0,
    "pan_left": 30.0,
    "pan_right": 30.0,
    "tilt_up": 30.0,
    "orbit_360": 360.0,
}

DEFAULT_INTRINSICS = Intrinsics(fx=256.0, fy=256.0, cx=128.0, cy=128.0, width=256, height=256)


def preset_names() -> list[str]:
    return list(PRESET_NAMES)


@dataclass(frozen=True)
class TrajectorySpec:
    """Preset plus the knobs that shape it.

    ``angle_deg`` defaults per preset (60 for orbits, 30 for pan/tilt, 360 for
    the full orbit); ``pivot`` defaults to the point straight ahead at
    ``radius``.  The same intrinsics are stamped on every frame.
    """

    preset: str
    n_frames: int = 81
    radius: float = 2.0
    distance: float = 1.0
    angle_deg: float | None = None
    pivot: tuple | None = None
    intrinsics: Intrinsics = DEFAULT_INTRINSICS

    def __post_init__(self):
        if self.preset not in PRESET_NAMES:
            raise InvalidInputError(
                f"unknown preset {self.preset!r}; choose from {', '.join(PRESET_NAMES)}"
            )
        if self.n_frames < 2:
            raise InvalidInputError("trajectories need at least 2 frames")
        for name in ("radius", "distance"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise InvalidInputError(f"{name} must be positive and finite")
        if self.angle_deg is not None and not math.isfinite(self.angle_deg):
            raise InvalidInputError("angle must be finite")

    def resolved_angle(self) -> float:
        if self.angle_deg is not None:
            return self.angle_deg
        return _DEFAULT_ANGLES.get(self.preset, 30.0)

    def resolved_pivot(self) -> np.ndarray:
        if self.pivot is not None:
            p = np.asarray(self.pivot, dtype=np.float64)
            if p.shape != (3,):
                raise InvalidInputError("pivot must be a 3-vector")
            return p
        return np.array([0.0, 0.0, self.radius])


def look_at_pose(center, target, up=(0.0, 1.0, 0.0)) -> CameraPose:
    """World-to-camera pose for a camera at ``center`` aimed at ``target``."""
    center = np.asarray(center, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    forward = target - center
    n = np.linalg.norm(forward)
    if n < 1e-12:
        raise InvalidInputError("look-at target coincides with the camera center")
    z_axis = forward / n
    x_axis = np.cross(np.asarray(up, dtype=np.float64), z_axis)
    nx = np.linalg.norm(x_axis)
    if nx < 1e-12:
        raise InvalidInputError("viewing direction is parallel to the up vector")
    x_axis = x_axis / nx
    y_axis = np.cross(z_axis, x_axis)
    R = np.stack([x_axis, y_axis, z_axis])
    return CameraPose(R, -(R @ center))


def _rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _in_place_pose(orientation: np.ndarray) -> CameraPose:
    # camera axes as world columns; world-to-camera is the transpose
    return CameraPose(orientation.T, np.zeros(3))


def generate(spec: TrajectorySpec) -> Trajectory:
    """Build the preset trajectory; frame 0 is always the exact identity."""
    n = spec.n_frames
    params = np.linspace(0.0, 1.0, n)
    sweep = math.radians(spec.resolved_angle())
    pivot = spec.resolved_pivot()
    poses: list[CameraPose] = []

    if spec.preset in ("orbit_left", "orbit_right", "orbit_360"):
        sign = 1.0 if spec.preset != "orbit_right" else -1.0
        arm = -pivot  # from pivot back to the starting camera position
        if np.linalg.norm(arm) < 1e-12:
            raise InvalidInputError("orbit pivot coincides with the camera start")
        for t in params:
            center = pivot + _rot_y(sign * sweep * t) @ arm
            poses.append(look_at_pose(center, pivot))
    elif spec.preset in ("dolly_in", "dolly_out"):
        direction = pivot / np.linalg.norm(pivot)
        sign = 1.0 if spec.preset == "dolly_in" else -1.0
        for t in params:
            center = sign * spec.distance * t * direction
            poses.append(CameraPose(np.eye(3), -center))
    elif spec.preset in ("pan_left", "pan_right"):
        sign = -1.0 if spec.preset == "pan_left" else 1.0
        for t in params:
            poses.append(_in_place_pose(_rot_y(sign * sweep * t)))
    else:  # tilt_up
        for t in params:
            poses.append(_in_place_pose(_rot_x(-sweep * t)))

    entries = [
        TrajectoryEntry(i, pose, spec.intrinsics) for i, pose in enumerate(poses)
    ]
    return Trajectory(tuple(entries))
