"""Clip curation pipeline: motion screening, validity checks, shot splitting
and quality gates, with a three-stage funnel report.

Per-clip decision order mirrors the funnel: pose validity first, then the
static-camera rejection, then the quality gates (resolution, frame count,
aesthetic score, in that fixed priority).  The motion stage owns the first two
reasons; the quality stage owns the rest.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .camera import Trajectory, delta_rotation, delta_translation, is_rotation, rotmat_to_quat
from .errors import InvalidInputError, MissingScoreWarning
from .geometry import ColorImage

__all__ = [
    "FilterThresholds",
    "MotionStats",
    "ClipDecision",
    "FilterReport",
    "motion_stats",
    "static_camera_reject",
    "pose_validity_check",
    "hsv_histogram",
    "histogram_distance",
    "shot_boundaries",
    "quality_gates",
    "evaluate_clip",
    "pipeline_report",
]

REJECT_REASONS = ("static_motion", "invalid_pose", "resolution", "frame_count", "aesthetic")

H_BINS, S_BINS, V_BINS = 16, 8, 8


@dataclass(frozen=True)
class FilterThresholds:
    """Gate values; motion and quality numbers follow the curation protocol."""

    t_trans: float = 0.002
    t_rot: float = 0.5
    min_longer_side: int = 360
    min_frames: int = 81
    min_aesthetic: float = 0.20
    shot_distance: float = 0.4
    max_step_rotation: float = 30.0

    def __post_init__(self):
        for name in ("t_trans", "t_rot", "min_longer_side", "min_frames",
                     "min_aesthetic", "shot_distance", "max_step_rotation"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise InvalidInputError(f"threshold {name} must be positive and finite")


@dataclass(frozen=True)
class MotionStats:
    """Mean frame-to-frame translation (scene units) and rotation (degrees)."""

    mu_t: float
    mu_r: float


def motion_stats(traj: Trajectory) -> MotionStats:
    if len(traj) < 2:
        raise InvalidInputError("motion statistics need at least two frames")
    steps = range(len(traj) - 1)
    mu_t = float(np.mean([delta_translation(traj, t) for t in steps]))
    mu_r = float(np.mean([delta_rotation(traj, t) for t in steps]))
    return MotionStats(mu_t, mu_r)


def static_camera_reject(stats: MotionStats, thr: FilterThresholds) -> bool:
    """True when the clip should be dropped as static.

    Both means must fall strictly below their thresholds; a clip moving in
    only one of translation or rotation is kept.
    """
    return stats.mu_t < thr.t_trans and stats.mu_r < thr.t_rot


def pose_validity_check(traj: Trajectory, max_step_rotation: float = 30.0) -> bool:
    """Reject non-finite poses, drifted rotations, and per-step jumps.

    Rotations whose orthonormality error exceeds 1e-3 fail (the matrix
    equivalent of an off-unit quaternion); any single-step rotation above
    ``max_step_rotation`` degrees counts as a discontinuity.
    """
    for e in traj:
        if not np.isfinite(e.pose.translation).all():
            return False
        if not is_rotation(e.pose.rotation, tol=1e-3):
            return False
    # quaternion extraction at the same loose tolerance the gate above allows
    quats = [rotmat_to_quat(e.pose.rotation, tol=1e-3) for e in traj]
    for qa, qb in zip(quats, quats[1:]):
        step = math.degrees(2.0 * math.acos(min(abs(qa.dot(qb)), 1.0)))
        if step > max_step_rotation:
            return False
    return True


def _rgb_to_hsv(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r, g, b = values[..., 0], values[..., 1], values[..., 2]
    maxc = np.maximum(np.maximum(r, g), b)
    minc = np.minimum(np.minimum(r, g), b)
    v = maxc
    spread = maxc - minc
    s = np.where(maxc > 0.0, spread / np.where(maxc > 0.0, maxc, 1.0), 0.0)
    safe = np.where(spread > 0.0, spread, 1.0)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    h = np.where(
        r == maxc, bc - gc, np.where(g == maxc, 2.0 + rc - bc, 4.0 + gc - rc)
    )
    h = np.where(spread > 0.0, (h / 6.0) % 1.0, 0.0)
    return h, s, v


def _channel_hist(x: np.ndarray, bins: int) -> np.ndarray:
    idx = np.minimum((x * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx.ravel(), minlength=bins).astype(np.float64)
    return counts / x.size


def hsv_histogram(image: ColorImage) -> np.ndarray:
    """Concatenated HSV histogram (16 + 8 + 8 bins), each channel summing to 1."""
    h, s, v = _rgb_to_hsv(image.values)
    return np.concatenate(
        [_channel_hist(h, H_BINS), _channel_hist(s, S_BINS), _channel_hist(v, V_BINS)]
    )


def histogram_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the L1 distance between concatenated histograms; range [0, 3]."""
    return 0.5 * float(np.abs(a - b).sum())


def shot_boundaries(frames, shot_distance: float = 0.4) -> list[tuple[int, int]]:
    """Split a frame list into maximal segments free of histogram jumps.

    Returns half-open (start, end) ranges that partition [0, len(frames)).
    A boundary is declared between consecutive frames whose HSV histogram
    distance exceeds ``shot_distance``.
    """
    frames = list(frames)
    if not frames:
        raise InvalidInputError("shot segmentation needs at least one frame")
    hists = [hsv_histogram(f) for f in frames]
    segments = []
    start = 0
    for i in range(len(frames) - 1):
        if histogram_distance(hists[i], hists[i + 1]) > shot_distance:
            segments.append((start, i + 1))
            start = i + 1
    segments.append((start, len(frames)))
    return segments


@dataclass(frozen=True)
class ClipDecision:
    clip_id: str
    verdict: str
    reject_reason: str | None = None

    def __post_init__(self):
        if self.verdict not in ("keep", "reject"):
            raise InvalidInputError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "reject" and self.reject_reason not in REJECT_REASONS:
            raise InvalidInputError(f"rejection requires a reason, got {self.reject_reason!r}")
        if self.verdict == "keep" and self.reject_reason is not None:
            raise InvalidInputError("kept clips cannot carry a reject reason")


def quality_gates(
    width: int,
    height: int,
    n_frames: int,
    aesthetic_score: float | None,
    thr: FilterThresholds,
    clip_id: str = "",
) -> ClipDecision:
    """Resolution, frame-count and aesthetic gates, first failure wins.

    A missing aesthetic score skips that gate with a warning; the score is
    always an externally supplied number, never computed here.
    """
    if width <= 0 or height <= 0:
        raise InvalidInputError(f"dimensions must be positive, got {width}x{height}")
    if n_frames < 0:
        raise InvalidInputError("frame count cannot be negative")
    if max(width, height) < thr.min_longer_side:
        return ClipDecision(clip_id, "reject", "resolution")
    if n_frames < thr.min_frames:
        return ClipDecision(clip_id, "reject", "frame_count")
    if aesthetic_score is None:
        warnings.warn(
            f"clip {clip_id or '<unnamed>'}: no aesthetic score, gate skipped",
            MissingScoreWarning,
        )
    elif aesthetic_score < thr.min_aesthetic:
        return ClipDecision(clip_id, "reject", "aesthetic")
    return ClipDecision(clip_id, "keep")


def evaluate_clip(
    clip_id: str,
    traj: Trajectory,
    width: int,
    height: int,
    n_frames: int,
    aesthetic_score: float | None,
    thr: FilterThresholds,
) -> ClipDecision:
    """Full per-clip decision in funnel order: validity, motion, quality."""
    if not pose_validity_check(traj, thr.max_step_rotation):
        return ClipDecision(clip_id, "reject", "invalid_pose")
    if len(traj) >= 2 and static_camera_reject(motion_stats(traj), thr):
        return ClipDecision(clip_id, "reject", "static_motion")
    return quality_gates(width, height, n_frames, aesthetic_score, thr, clip_id=clip_id)


@dataclass(frozen=True)
class FilterReport:
    """Funnel counts and per-reason tallies; counts never increase stage to stage."""

    n_input: int
    n_after_motion: int
    n_after_quality: int
    reasons: dict = field(default_factory=dict)

    def reduction_motion_pct(self) -> float:
        if self.n_input == 0:
            return 0.0
        return 100.0 * (self.n_input - self.n_after_motion) / self.n_input

    def reduction_quality_pct(self) -> float:
        if self.n_after_motion == 0:
            return 0.0
        return 100.0 * (self.n_after_motion - self.n_after_quality) / self.n_after_motion


def pipeline_report(decisions) -> FilterReport:
    decisions = list(decisions)
    reasons = {r: 0 for r in REJECT_REASONS}
    for d in decisions:
        if d.verdict == "reject":
            reasons[d.reject_reason] += 1
    n_input = len(decisions)
    n_after_motion = n_input - reasons["static_motion"] - reasons["invalid_pose"]
    n_after_quality = (
        n_after_motion - reasons["resolution"] - reasons["frame_count"] - reasons["aesthetic"]
    )
    return FilterReport(n_input, n_after_motion, n_after_quality, reasons)
