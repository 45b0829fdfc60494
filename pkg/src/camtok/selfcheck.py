"""Built-in invariant suite over synthetic data, used by ``camtok selfcheck``."""

from __future__ import annotations

import sys

import numpy as np

from .camera import (
    CameraPose,
    Intrinsics,
    Quaternion,
    Trajectory,
    TrajectoryEntry,
    normalize_to_first_frame,
    quat_to_rotmat,
    relative_pose,
    rotmat_to_quat,
)
from .conditioning import FlowSample, ZeroProjection, flow_interpolate, zero_project_add
from .filtering import FilterThresholds, MotionStats, pose_validity_check, static_camera_reject
from .geometry import ColorImage, DepthMap, PointCloud, backproject, render_view
from .metrics import ate, rpe, rre
from .tokenizer import PatchEmbedderWeights, assemble_tokens, embed_rendering_mask
from .trajgen import PRESET_NAMES, TrajectorySpec, generate

__all__ = ["run"]


def _random_quat(rng) -> Quaternion:
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    return Quaternion(*v)


def _random_pose(rng) -> CameraPose:
    return CameraPose(quat_to_rotmat(_random_quat(rng)), rng.standard_normal(3))


def _check_quat_round_trip(rng):
    for _ in range(200):
        q = _random_quat(rng)
        R = quat_to_rotmat(q)
        R2 = quat_to_rotmat(rotmat_to_quat(R))
        assert np.abs(R - R2).max() < 1e-9


def _check_relative_pose(rng):
    for _ in range(50):
        a, b = _random_pose(rng), _random_pose(rng)
        rel = relative_pose(a, b)
        x = rng.standard_normal(3)
        assert np.abs(rel.apply(a.apply(x)) - b.apply(x)).max() < 1e-9


def _check_normalization(rng):
    entries = [
        TrajectoryEntry(i, _random_pose(rng), Intrinsics(50.0, 50.0, 25.0, 25.0, 50, 50))
        for i in range(6)
    ]
    traj = Trajectory(tuple(entries))
    norm = normalize_to_first_frame(traj)
    again = normalize_to_first_frame(norm)
    assert np.abs(norm[0].pose.rotation - np.eye(3)).max() < 1e-12
    for e1, e2 in zip(norm, again):
        assert np.abs(e1.pose.rotation - e2.pose.rotation).max() < 1e-12


def _check_presets(rng):
    for name in PRESET_NAMES:
        traj = generate(TrajectorySpec(name, n_frames=17))
        assert pose_validity_check(traj)
    orbit = generate(TrajectorySpec("orbit_360", n_frames=17))
    first = orbit[0].pose.camera_center()
    last = orbit[-1].pose.camera_center()
    assert np.linalg.norm(first - last) < 1e-9


def _check_identity_render(rng):
    K = Intrinsics(32.0, 32.0, 16.0, 16.0, 32, 32)
    depth = DepthMap(32, 32, rng.uniform(1.0, 5.0, (32, 32)))
    image = ColorImage(32, 32, rng.random((32, 32, 3)))
    cloud = backproject(depth, K, image)
    r = render_view(cloud, CameraPose.identity(), K)
    assert (r.mask.values == 1).all()
    assert np.array_equal(r.color.values, image.values)


def _check_occlusion(rng):
    K = Intrinsics(1.0, 1.0, 2.0, 2.0, 5, 5)
    cloud = PointCloud(
        positions=[[0.0, 0.0, 1.0], [0.0, 0.0, 2.0]],
        colors=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        source_pixels=[[0, 0], [1, 0]],
    )
    r = render_view(cloud, CameraPose.identity(), K)
    assert np.array_equal(r.color.values[2, 2], [1.0, 0.0, 0.0])


def _check_zero_projection(rng):
    vis = [rng.standard_normal((6, 8)) for _ in range(2)]
    cam = [rng.standard_normal(8) for _ in range(2)]
    seq = assemble_tokens(vis, cam, mode="per_frame")
    base = rng.standard_normal((12, 16))
    out = zero_project_add(base, seq, ZeroProjection.zeros(8, 16))
    assert np.array_equal(out, base)


def _check_token_shapes(rng):
    w = PatchEmbedderWeights.default(patch_size=4, token_dim=16)
    img = ColorImage(8, 8, rng.random((8, 8, 3)))
    m1 = np.zeros((8, 8), dtype=np.uint8)
    m2 = np.ones((8, 8), dtype=np.uint8)
    from .geometry import VisibilityMask

    t1 = embed_rendering_mask(img, VisibilityMask(8, 8, m1), w)
    t2 = embed_rendering_mask(img, VisibilityMask(8, 8, m2), w)
    assert t1.shape == (4, 16)
    assert np.array_equal(t1, t2)


def _check_flow(rng):
    x0, x1 = rng.standard_normal((3, 4)), rng.standard_normal((3, 4))
    xt0, v0 = flow_interpolate(FlowSample(x0, x1, 0.0))
    xt1, v1 = flow_interpolate(FlowSample(x0, x1, 1.0))
    assert np.array_equal(xt0, x0) and np.array_equal(xt1, x1)
    assert np.array_equal(v0, v1)


def _check_metrics(rng):
    entries = [
        TrajectoryEntry(i, _random_pose(rng), Intrinsics(50.0, 50.0, 25.0, 25.0, 50, 50))
        for i in range(8)
    ]
    traj = Trajectory(tuple(entries))
    assert ate(traj, traj) < 1e-12
    assert rpe(traj, traj) < 1e-12
    assert rre(traj, traj) < 1e-9


def _check_static_reject(rng):
    thr = FilterThresholds()
    assert static_camera_reject(MotionStats(0.001, 0.3), thr)
    assert not static_camera_reject(MotionStats(0.01, 0.3), thr)
    assert not static_camera_reject(MotionStats(0.001, 1.0), thr)
    assert not static_camera_reject(MotionStats(0.002, 0.5), thr)


CHECKS = [
    ("quaternion round trip", _check_quat_round_trip),
    ("relative pose transport", _check_relative_pose),
    ("first-frame normalization", _check_normalization),
    ("trajectory presets", _check_presets),
    ("identity render round trip", _check_identity_render),
    ("two-point occlusion", _check_occlusion),
    ("zero-init projection identity", _check_zero_projection),
    ("token shape and mask insensitivity", _check_token_shapes),
    ("flow interpolation endpoints", _check_flow),
    ("metric self-identities", _check_metrics),
    ("static-camera rejection table", _check_static_reject),
]


def run(seed: int = 0, out=sys.stdout) -> int:
    """Run all checks; returns the number of failures."""
    failures = 0
    for name, check in CHECKS:
        rng = np.random.default_rng(seed)
        try:
            check(rng)
        except Exception as exc:  # noqa: BLE001 - report and continue
            failures += 1
            print(f"FAIL {name}: {exc}", file=out)
        else:
            print(f"ok {name}", file=out)
    total = len(CHECKS)
    print(f"selfcheck: {total - failures}/{total} checks passed", file=out)
    return failures
