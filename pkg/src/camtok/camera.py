"""Camera pose algebra, quaternion conversions, and compact camera parameters.

Convention used everywhere in this package: a pose is the world-to-camera
rigid transform ``x_cam = R @ x_world + T``.  Quaternions are stored as
``(w, x, y, z)`` and canonicalized to the ``w >= 0`` hemisphere (ties on
``w == 0`` broken by the first nonzero vector component being >= 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "Quaternion",
    "Intrinsics",
    "CameraPose",
    "TrajectoryEntry",
    "Trajectory",
    "quat_to_rotmat",
    "rotmat_to_quat",
    "validate_rotation",
    "is_rotation",
    "compose",
    "relative_pose",
    "normalize_to_first_frame",
    "delta_translation",
    "delta_rotation",
    "CompactCamera",
    "compact_camera",
]

ROTATION_TOL = 1e-7
QUAT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class Quaternion:
    """Unit-norm rotation quaternion in ``(w, x, y, z)`` component order."""

    w: float
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> "Quaternion":
        n = self.norm()
        # NaN-safe: non-finite components fail this comparison too
        if not (n > 1e-12 and math.isfinite(n)):
            raise InvalidInputError("cannot normalize a near-zero or non-finite quaternion")
        return Quaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def canonical(self) -> "Quaternion":
        """Flip sign so w >= 0; on w == 0 the first nonzero of (x, y, z) is >= 0."""
        comps = (self.w, self.x, self.y, self.z)
        for c in comps:
            if c > 0.0:
                return self
            if c < 0.0:
                return Quaternion(-self.w, -self.x, -self.y, -self.z)
        return self

    def dot(self, other: "Quaternion") -> float:
        return self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole parameters in pixels: focal lengths, principal point, image size."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidInputError(f"image size must be positive, got {self.width}x{self.height}")
        if not (self.fx > 0.0 and self.fy > 0.0):
            raise InvalidInputError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0.0 <= self.cx <= self.width and 0.0 <= self.cy <= self.height):
            raise InvalidInputError(
                f"principal point ({self.cx}, {self.cy}) outside image {self.width}x{self.height}"
            )


def validate_rotation(R: np.ndarray, tol: float = ROTATION_TOL) -> np.ndarray:
    """Check orthonormality and det(+1); returns the matrix as float64."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise InvalidInputError(f"rotation must be 3x3, got shape {R.shape}")
    if not np.isfinite(R).all():
        raise InvalidInputError("rotation contains non-finite values")
    err = np.abs(R.T @ R - np.eye(3)).max()
    if err > tol:
        raise InvalidInputError(f"matrix is not orthonormal (max deviation {err:.3g})")
    det = np.linalg.det(R)
    if abs(det - 1.0) > tol:
        raise InvalidInputError(f"matrix determinant {det:.9f} is not +1")
    return R


def is_rotation(R: np.ndarray, tol: float = 1e-3) -> bool:
    """Non-raising orthonormality test, tolerant enough for parsed inputs."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3) or not np.isfinite(R).all():
        return False
    if np.abs(R.T @ R - np.eye(3)).max() > tol:
        return False
    return abs(np.linalg.det(R) - 1.0) <= tol


def quat_to_rotmat(q: Quaternion) -> np.ndarray:
    """Rotation matrix R such that R @ v rotates v by q."""
    if not (abs(q.norm() - 1.0) <= QUAT_NORM_TOL):
        raise InvalidInputError(f"quaternion norm {q.norm():.9f} deviates from 1 by more than {QUAT_NORM_TOL}")
    w, x, y, z = q.w, q.x, q.y, q.z
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    return np.array(
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ]
    )


def rotmat_to_quat(R: np.ndarray, tol: float = ROTATION_TOL) -> Quaternion:
    """Canonical-hemisphere unit quaternion for an orthonormal matrix.

    Uses the Shepperd branch selection on the largest diagonal term, which is
    numerically stable near 180-degree rotations.  ``tol`` bounds the accepted
    orthonormality drift; callers screening noisy pose tracks may loosen it.
    """
    R = validate_rotation(R, tol=tol)
    trace = R[0, 0] + R[1, 1] + R[2, 2]
    if trace > 0.0:
        s = math.sqrt(trace + 1.0) * 2.0
        w = 0.25 * s
        x = (R[2, 1] - R[1, 2]) / s
        y = (R[0, 2] - R[2, 0]) / s
        z = (R[1, 0] - R[0, 1]) / s
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        w = (R[2, 1] - R[1, 2]) / s
        x = 0.25 * s
        y = (R[0, 1] + R[1, 0]) / s
        z = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] > R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        w = (R[0, 2] - R[2, 0]) / s
        x = (R[0, 1] + R[1, 0]) / s
        y = 0.25 * s
        z = (R[1, 2] + R[2, 1]) / s
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        w = (R[1, 0] - R[0, 1]) / s
        x = (R[0, 2] + R[2, 0]) / s
        y = (R[1, 2] + R[2, 1]) / s
        z = 0.25 * s
    return Quaternion(w, x, y, z).normalized().canonical()


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera rigid transform: ``x_cam = rotation @ x_world + translation``.

    Construction checks shape and dtype only, so dirty poses (NaNs, drifted
    rotations) can be represented and later rejected by validity checks.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64)
        if R.shape != (3, 3):
            raise InvalidInputError(f"rotation must be 3x3, got shape {R.shape}")
        if t.shape != (3,):
            raise InvalidInputError(f"translation must be a 3-vector, got shape {t.shape}")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "CameraPose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_quat(cls, q: Quaternion, translation) -> "CameraPose":
        return cls(quat_to_rotmat(q), translation)

    def inverse(self) -> "CameraPose":
        Rt = self.rotation.T
        return CameraPose(Rt, -(Rt @ self.translation))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform world points (3,) or (N, 3) into camera coordinates."""
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation.T + self.translation

    def camera_center(self) -> np.ndarray:
        """Camera position in world coordinates, ``-R^T @ T``."""
        return -(self.rotation.T @ self.translation)


def compose(outer: CameraPose, inner: CameraPose) -> CameraPose:
    """Pose applying ``inner`` first, then ``outer``."""
    return CameraPose(
        outer.rotation @ inner.rotation,
        outer.rotation @ inner.translation + outer.translation,
    )


def relative_pose(a: CameraPose, b: CameraPose) -> CameraPose:
    """Transform mapping frame-a camera coordinates to frame-b camera coordinates."""
    return compose(b, a.inverse())


@dataclass(frozen=True)
class TrajectoryEntry:
    frame_index: int
    pose: CameraPose
    intrinsics: Intrinsics


@dataclass(frozen=True)
class Trajectory:
    """Ordered, frame-indexed camera poses with per-frame intrinsics."""

    entries: tuple = field(default_factory=tuple)

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise InvalidInputError("trajectory must contain at least one frame")
        indices = [e.frame_index for e in entries]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise InvalidInputError("frame indices must be strictly increasing")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i) -> TrajectoryEntry:
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def poses(self) -> list[CameraPose]:
        return [e.pose for e in self.entries]


def normalize_to_first_frame(traj: Trajectory) -> Trajectory:
    """Re-express all poses so the first frame becomes the identity.

    Relative poses between any two frames are preserved; frame indices and
    intrinsics are untouched.  Idempotent.
    """
    first_inv = traj[0].pose.inverse()
    entries = [
        TrajectoryEntry(e.frame_index, compose(e.pose, first_inv), e.intrinsics) for e in traj
    ]
    return Trajectory(tuple(entries))


def _check_step(traj: Trajectory, t: int) -> None:
    if not (0 <= t < len(traj) - 1):
        raise InvalidInputError(f"step index {t} out of range for {len(traj)} frames")


def delta_translation(traj: Trajectory, t: int) -> float:
    """Frame-to-frame extrinsic translation magnitude ``||T_{t+1} - T_t||``."""
    _check_step(traj, t)
    d = traj[t + 1].pose.translation - traj[t].pose.translation
    return math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])


def delta_rotation(traj: Trajectory, t: int) -> float:
    """Frame-to-frame rotation angle in degrees, ``2 * arccos(|<q_{t+1}, q_t>|)``.

    Invariant under sign flips of either quaternion; always in [0, 180].
    """
    _check_step(traj, t)
    qa = rotmat_to_quat(traj[t].pose.rotation)
    qb = rotmat_to_quat(traj[t + 1].pose.rotation)
    d = min(abs(qa.dot(qb)), 1.0)
    return math.degrees(2.0 * math.acos(d))


@dataclass(frozen=True)
class CompactCamera:
    """Quaternion + translation + field-of-view summary of one camera.

    ``fov`` holds (horizontal, vertical) angles in radians, derived from the
    pinhole intrinsics as ``2 * atan(side / (2 * focal))``.
    """

    q: Quaternion
    t: np.ndarray
    fov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, dtype=np.float64))
        object.__setattr__(self, "fov", np.asarray(self.fov, dtype=np.float64))

    def as_vector(self) -> np.ndarray:
        """Flatten to the 9-vector (qw, qx, qy, qz, tx, ty, tz, fov_x, fov_y)."""
        return np.concatenate([self.q.as_array(), self.t, self.fov])


def compact_camera(pose: CameraPose, K: Intrinsics) -> CompactCamera:
    q = rotmat_to_quat(pose.rotation)
    fov = np.array(
        [
            2.0 * math.atan(K.width / (2.0 * K.fx)),
            2.0 * math.atan(K.height / (2.0 * K.fy)),
        ]
    )
    return CompactCamera(q, pose.translation.copy(), fov)
