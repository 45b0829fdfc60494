"""Trajectory accuracy metrics with closed-form alignment.

ATE aligns estimated camera centers onto ground truth with a least-squares
similarity (or rigid) fit before measuring center RMSE; monocular pipelines
produce arbitrary world frames and scales, so similarity is the default and
rigid is available via ``mode``.  RPE and RRE compare per-step relative poses
and need no alignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .camera import CameraPose, Trajectory, relative_pose, rotmat_to_quat
from .errors import AlignmentError, InvalidInputError

__all__ = [
    "AlignmentResult",
    "PoseErrorReport",
    "camera_centers",
    "align_trajectories",
    "ate",
    "rpe",
    "rre",
    "pose_error_report",
]


def camera_centers(traj: Trajectory) -> np.ndarray:
    return np.stack([e.pose.camera_center() for e in traj])


@dataclass(frozen=True)
class AlignmentResult:
    """Least-squares fit gt ~ scale * rotation @ est + translation."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray
    rmse: float

    def apply(self, points: np.ndarray) -> np.ndarray:
        return self.scale * (points @ self.rotation.T) + self.translation


def _fit_umeyama(est: np.ndarray, gt: np.ndarray, with_scale: bool) -> AlignmentResult:
    n = est.shape[0]
    mu_e = est.mean(axis=0)
    mu_g = gt.mean(axis=0)
    e0 = est - mu_e
    g0 = gt - mu_g
    cov = g0.T @ e0 / n
    U, D, Vt = np.linalg.svd(cov)
    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0.0:
        S[2, 2] = -1.0
    R = U @ S @ Vt
    if with_scale:
        var_e = (e0 * e0).sum() / n
        if var_e < 1e-24:
            raise AlignmentError("estimated centers are coincident; similarity fit is degenerate")
        s = float((D * S.diagonal()).sum() / var_e)
        if not (s > 0.0):
            raise AlignmentError(f"similarity fit collapsed to non-positive scale {s:.3g}")
    else:
        s = 1.0
    t = mu_g - s * (R @ mu_e)
    residual = gt - (s * (est @ R.T) + t)
    rmse = float(np.sqrt((residual * residual).sum(axis=1).mean()))
    return AlignmentResult(s, R, t, rmse)


def align_trajectories(est: Trajectory, gt: Trajectory, mode: str = "similarity") -> AlignmentResult:
    """Closed-form alignment of camera centers; rigid mode pins scale to 1."""
    if mode not in ("similarity", "rigid"):
        raise InvalidInputError(f"unknown alignment mode {mode!r}")
    if len(est) != len(gt):
        raise AlignmentError(f"frame counts differ: {len(est)} vs {len(gt)}")
    ce = camera_centers(est)
    cg = camera_centers(gt)
    if mode == "similarity":
        if len(est) < 3:
            raise AlignmentError("similarity alignment needs at least 3 frames")
        return _fit_umeyama(ce, cg, with_scale=True)
    if len(est) < 2:
        raise AlignmentError("rigid alignment needs at least 2 frames")
    spread = np.abs(ce - ce[0]).max()
    if spread < 1e-12:
        raise AlignmentError("estimated centers are coincident; rigid fit is degenerate")
    return _fit_umeyama(ce, cg, with_scale=False)


def _center_errors(est: Trajectory, gt: Trajectory, mode: str) -> np.ndarray:
    fit = align_trajectories(est, gt, mode)
    aligned = fit.apply(camera_centers(est))
    return np.linalg.norm(aligned - camera_centers(gt), axis=1)


def ate(est: Trajectory, gt: Trajectory, mode: str = "similarity") -> float:
    """RMSE of camera-center distances after alignment."""
    e = _center_errors(est, gt, mode)
    return float(np.sqrt(np.mean(e * e)))


def _relative_errors(est: Trajectory, gt: Trajectory, delta: int) -> list[CameraPose]:
    if delta < 1:
        raise InvalidInputError("delta must be at least 1")
    if len(est) != len(gt):
        raise InvalidInputError(f"frame counts differ: {len(est)} vs {len(gt)}")
    if len(est) <= delta:
        raise InvalidInputError(f"trajectory of {len(est)} frames too short for delta {delta}")
    errors = []
    for i in range(len(est) - delta):
        rel_gt = relative_pose(gt[i].pose, gt[i + delta].pose)
        rel_est = relative_pose(est[i].pose, est[i + delta].pose)
        errors.append(
            CameraPose(
                rel_gt.rotation.T @ rel_est.rotation,
                rel_gt.rotation.T @ (rel_est.translation - rel_gt.translation),
            )
        )
    return errors


def rpe(est: Trajectory, gt: Trajectory, delta: int = 1) -> float:
    """RMSE of relative-pose translation error magnitudes at the given step."""
    norms = [float(np.linalg.norm(e.translation)) for e in _relative_errors(est, gt, delta)]
    return float(np.sqrt(np.mean(np.square(norms))))


def _rotation_angle_deg(R: np.ndarray) -> float:
    # atan2 on the quaternion stays well conditioned at both 0 and 180 deg,
    # where the trace/arccos form loses half the significant digits
    q = rotmat_to_quat(R)
    vec = math.sqrt(q.x * q.x + q.y * q.y + q.z * q.z)
    return math.degrees(2.0 * math.atan2(vec, abs(q.w)))


def rre(est: Trajectory, gt: Trajectory, delta: int = 1) -> float:
    """Mean geodesic angle (degrees) of the relative-pose rotation errors."""
    angles = [_rotation_angle_deg(e.rotation) for e in _relative_errors(est, gt, delta)]
    return float(np.mean(angles))


@dataclass(frozen=True)
class PoseErrorReport:
    ate: float
    rpe: float
    rre: float
    n_frames: int
    mode: str
    delta: int
    per_frame_ate: list = field(default_factory=list)
    per_frame_rpe: list = field(default_factory=list)
    per_frame_rre: list = field(default_factory=list)


def pose_error_report(
    est: Trajectory, gt: Trajectory, mode: str = "similarity", delta: int = 1
) -> PoseErrorReport:
    """All three metrics plus per-frame error lists, for reporting."""
    center_err = _center_errors(est, gt, mode)
    rel = _relative_errors(est, gt, delta)
    trans = [float(np.linalg.norm(e.translation)) for e in rel]
    angles = [_rotation_angle_deg(e.rotation) for e in rel]
    return PoseErrorReport(
        ate=float(np.sqrt(np.mean(center_err * center_err))),
        rpe=float(np.sqrt(np.mean(np.square(trans)))),
        rre=float(np.mean(angles)),
        n_frames=len(est),
        mode=mode,
        delta=delta,
        per_frame_ate=[float(x) for x in center_err],
        per_frame_rpe=trans,
        per_frame_rre=angles,
    )
