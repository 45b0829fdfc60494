"""Trajectory metrics against independent closed-form and matrix oracles."""

import math

import numpy as np
import pytest

from camtok.camera import CameraPose, compose
from camtok.errors import AlignmentError, InvalidInputError
from camtok.metrics import align_trajectories, ate, camera_centers, pose_error_report, rpe, rre

from conftest import axis_angle_pose, make_trajectory, random_pose


def umeyama_oracle(src, dst, with_scale):
    """Textbook similarity fit, kept independent of the library implementation."""
    n = src.shape[0]
    mu_s, mu_d = src.mean(0), dst.mean(0)
    s0, d0 = src - mu_s, dst - mu_d
    cov = d0.T @ s0 / n
    U, D, Vt = np.linalg.svd(cov)
    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        S[2, 2] = -1
    R = U @ S @ Vt
    c = float((D * S.diagonal()).sum() / (s0 ** 2).sum() * n) if with_scale else 1.0
    t = mu_d - c * R @ mu_s
    res = dst - (c * (src @ R.T) + t)
    return c, R, t, float(np.sqrt((res ** 2).sum(1).mean()))


def poses_from_centers(centers):
    """Identity-rotation poses whose camera centers are the given points."""
    return [CameraPose(np.eye(3), -np.asarray(c, float)) for c in centers]


def to_mat(pose):
    M = np.eye(4)
    M[:3, :3] = pose.rotation
    M[:3, 3] = pose.translation
    return M


UNIT_SQUARE = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (1.0, 1.0, 0.0), (0.0, 1.0, 0.0)]


class TestAlignment:
    def test_identical_trajectories(self, rng):
        traj = make_trajectory([random_pose(rng) for _ in range(5)])
        fit = align_trajectories(traj, traj)
        assert fit.scale == pytest.approx(1.0, abs=1e-9)
        assert fit.rmse == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(fit.rotation, np.eye(3), atol=1e-9)

    def test_constant_center_shift(self):
        gt = make_trajectory(poses_from_centers(UNIT_SQUARE))
        shifted = make_trajectory(poses_from_centers(np.asarray(UNIT_SQUARE) - [1.0, 2.0, 3.0]))
        fit = align_trajectories(shifted, gt, mode="rigid")
        np.testing.assert_allclose(fit.translation, [1.0, 2.0, 3.0], atol=1e-12)
        assert fit.rmse == pytest.approx(0.0, abs=1e-12)

    def test_scaled_by_two_recovers_half(self):
        gt = make_trajectory(poses_from_centers(UNIT_SQUARE))
        est = make_trajectory(poses_from_centers(2.0 * np.asarray(UNIT_SQUARE)))
        fit = align_trajectories(est, gt, mode="similarity")
        assert fit.scale == pytest.approx(0.5, abs=1e-12)
        assert fit.rmse == pytest.approx(0.0, abs=1e-12)

    def test_count_mismatch(self, rng):
        a = make_trajectory([random_pose(rng) for _ in range(4)])
        b = make_trajectory([random_pose(rng) for _ in range(5)])
        with pytest.raises(AlignmentError, match="counts"):
            align_trajectories(a, b)

    def test_degenerate_coincident_centers(self, rng):
        p = random_pose(rng)
        traj = make_trajectory([p, p, p])
        with pytest.raises(AlignmentError, match="coincident"):
            align_trajectories(traj, traj, mode="similarity")
        with pytest.raises(AlignmentError, match="coincident"):
            align_trajectories(traj, traj, mode="rigid")

    def test_matches_umeyama_oracle(self, rng):
        for _ in range(10):
            est = make_trajectory([random_pose(rng) for _ in range(6)])
            gt = make_trajectory([random_pose(rng) for _ in range(6)])
            fit = align_trajectories(est, gt)
            c, R, t, rmse = umeyama_oracle(camera_centers(est), camera_centers(gt), True)
            assert fit.scale == pytest.approx(c, rel=1e-9)
            np.testing.assert_allclose(fit.rotation, R, atol=1e-9)
            np.testing.assert_allclose(fit.translation, t, atol=1e-9)
            assert fit.rmse == pytest.approx(rmse, abs=1e-12)


class TestAte:
    def test_self_is_zero(self, rng):
        traj = make_trajectory([random_pose(rng) for _ in range(6)])
        assert ate(traj, traj) == pytest.approx(0.0, abs=1e-12)

    def test_rigid_offset_is_zero(self, rng):
        gt = make_trajectory([random_pose(rng) for _ in range(6)])
        g = random_pose(rng)
        est = make_trajectory([compose(p, g) for p in gt.poses()])
        assert ate(est, gt, mode="rigid") == pytest.approx(0.0, abs=1e-9)

    def test_unit_square_displaced_center_frozen_value(self):
        # gt: unit square; est: third center moved 0.4 in x.  Expected values
        # frozen from the independent closed-form oracle above.
        gt = make_trajectory(poses_from_centers(UNIT_SQUARE))
        est_centers = np.asarray(UNIT_SQUARE).copy()
        est_centers[2, 0] += 0.4
        est = make_trajectory(poses_from_centers(est_centers))
        assert ate(est, gt, mode="similarity") == pytest.approx(0.1259881576697424, abs=1e-12)
        assert ate(est, gt, mode="rigid") == pytest.approx(0.15957411532348822, abs=1e-12)
        c, R, t, rmse = umeyama_oracle(camera_centers(est), camera_centers(gt), True)
        assert ate(est, gt, mode="similarity") == pytest.approx(rmse, abs=1e-12)

    def test_invariance_under_random_rigid_transform(self, rng):
        gt = make_trajectory([random_pose(rng) for _ in range(8)])
        est = make_trajectory([random_pose(rng, t_scale=0.5) for _ in range(8)])
        base = ate(est, gt, mode="rigid")
        for _ in range(5):
            g = random_pose(rng)
            moved = make_trajectory([compose(p, g) for p in est.poses()])
            assert ate(moved, gt, mode="rigid") == pytest.approx(base, abs=1e-9)

    def test_invariance_under_similarity(self, rng):
        gt = make_trajectory([random_pose(rng) for _ in range(8)])
        est = make_trajectory([random_pose(rng) for _ in range(8)])
        base = ate(est, gt, mode="similarity")
        g = random_pose(rng)
        scale = 3.7
        moved = make_trajectory(
            [CameraPose(p.rotation @ g.rotation, p.rotation @ (scale * g.translation) + scale * p.translation)
             for p in est.poses()]
        )
        # scaling all centers and applying a rigid motion is a similarity
        assert ate(moved, gt, mode="similarity") == pytest.approx(base, abs=1e-9)


class TestRpeRre:
    def test_self_is_zero(self, rng):
        traj = make_trajectory([random_pose(rng) for _ in range(6)])
        assert rpe(traj, traj) == pytest.approx(0.0, abs=1e-12)
        assert rre(traj, traj) == pytest.approx(0.0, abs=1e-9)

    def test_global_transform_invariance(self, rng):
        gt = make_trajectory([random_pose(rng) for _ in range(6)])
        g = random_pose(rng)
        est = make_trajectory([compose(p, g) for p in gt.poses()])
        assert rpe(est, gt) == pytest.approx(0.0, abs=1e-9)
        assert rre(est, gt) == pytest.approx(0.0, abs=1e-6)

    def test_invariance_under_transform_of_either_side(self, rng):
        gt = make_trajectory([random_pose(rng) for _ in range(6)])
        est = make_trajectory([random_pose(rng) for _ in range(6)])
        base_rpe, base_rre = rpe(est, gt), rre(est, gt)
        g = random_pose(rng)
        est_moved = make_trajectory([compose(p, g) for p in est.poses()])
        gt_moved = make_trajectory([compose(p, g) for p in gt.poses()])
        assert rpe(est_moved, gt) == pytest.approx(base_rpe, abs=1e-9)
        assert rre(est_moved, gt) == pytest.approx(base_rre, abs=1e-6)
        assert rpe(est, gt_moved) == pytest.approx(base_rpe, abs=1e-9)
        assert rre(est, gt_moved) == pytest.approx(base_rre, abs=1e-6)

    def test_single_10deg_step_among_five_pairs(self):
        ident = CameraPose.identity()
        bumped = axis_angle_pose([0.0, 1.0, 0.0], 10.0, np.zeros(3))
        gt = make_trajectory([ident] * 6)
        est = make_trajectory([ident] * 3 + [bumped] * 3)
        assert rre(est, gt) == pytest.approx(2.0, abs=1e-6)
        assert rre(est, gt) <= 180.0

    def test_translation_glitch_matches_matrix_oracle(self, rng):
        gt_poses = [random_pose(rng) for _ in range(7)]
        est_poses = list(gt_poses)
        glitched = CameraPose(gt_poses[3].rotation, gt_poses[3].translation + [0.0, 0.25, 0.0])
        est_poses[3] = glitched
        gt = make_trajectory(gt_poses)
        est = make_trajectory(est_poses)
        # independent oracle through homogeneous matrices
        sq_norms = []
        for i in range(6):
            rel_gt = to_mat(gt_poses[i + 1]) @ np.linalg.inv(to_mat(gt_poses[i]))
            rel_est = to_mat(est_poses[i + 1]) @ np.linalg.inv(to_mat(est_poses[i]))
            err = np.linalg.inv(rel_gt) @ rel_est
            sq_norms.append(np.sum(err[:3, 3] ** 2))
        expected = math.sqrt(np.mean(sq_norms))
        assert rpe(est, gt) == pytest.approx(expected, abs=1e-9)

    def test_rotation_glitch_matches_quaternion_oracle(self, rng):
        from scipy.spatial.transform import Rotation as ScipyRotation

        gt_poses = [random_pose(rng) for _ in range(5)]
        est_poses = list(gt_poses)
        est_poses[2] = CameraPose(
            axis_angle_pose([1, 2, 3], 17.0, np.zeros(3)).rotation @ gt_poses[2].rotation,
            gt_poses[2].translation,
        )
        gt = make_trajectory(gt_poses)
        est = make_trajectory(est_poses)
        angles = []
        for i in range(4):
            rel_gt = to_mat(gt_poses[i + 1]) @ np.linalg.inv(to_mat(gt_poses[i]))
            rel_est = to_mat(est_poses[i + 1]) @ np.linalg.inv(to_mat(est_poses[i]))
            err = np.linalg.inv(rel_gt) @ rel_est
            angles.append(np.degrees(np.linalg.norm(ScipyRotation.from_matrix(err[:3, :3]).as_rotvec())))
        assert rre(est, gt) == pytest.approx(float(np.mean(angles)), abs=1e-6)

    def test_output_range(self, rng):
        for _ in range(20):
            gt = make_trajectory([random_pose(rng) for _ in range(4)])
            est = make_trajectory([random_pose(rng) for _ in range(4)])
            assert 0.0 <= rre(est, gt) <= 180.0

    def test_too_short_trajectory(self, rng):
        a = make_trajectory([random_pose(rng)])
        with pytest.raises(InvalidInputError, match="too short"):
            rpe(a, a, delta=1)

    def test_delta_two(self, rng):
        gt = make_trajectory([random_pose(rng) for _ in range(6)])
        est = make_trajectory([random_pose(rng) for _ in range(6)])
        sq = []
        for i in range(4):
            rel_gt = to_mat(gt[i + 2].pose) @ np.linalg.inv(to_mat(gt[i].pose))
            rel_est = to_mat(est[i + 2].pose) @ np.linalg.inv(to_mat(est[i].pose))
            err = np.linalg.inv(rel_gt) @ rel_est
            sq.append(np.sum(err[:3, 3] ** 2))
        assert rpe(est, gt, delta=2) == pytest.approx(math.sqrt(np.mean(sq)), abs=1e-9)


class TestReTiming:
    def test_metrics_ignore_frame_index_labels(self, rng):
        # dropping the same frames from both trajectories relabels indices;
        # the metrics must depend on the pose sequence alone
        from camtok.camera import Trajectory, TrajectoryEntry
        from conftest import square_intrinsics

        gt_poses = [random_pose(rng) for _ in range(8)]
        est_poses = [random_pose(rng) for _ in range(8)]
        keep = [0, 1, 3, 4, 6, 7]
        K = square_intrinsics(64)

        def with_indices(poses, indices):
            return Trajectory(tuple(TrajectoryEntry(i, p, K) for i, p in zip(indices, poses)))

        gt_orig = with_indices([gt_poses[i] for i in keep], keep)
        est_orig = with_indices([est_poses[i] for i in keep], keep)
        gt_relab = with_indices([gt_poses[i] for i in keep], range(len(keep)))
        est_relab = with_indices([est_poses[i] for i in keep], range(len(keep)))
        assert ate(est_orig, gt_orig) == pytest.approx(ate(est_relab, gt_relab), abs=1e-12)
        assert rpe(est_orig, gt_orig) == pytest.approx(rpe(est_relab, gt_relab), abs=1e-12)
        assert rre(est_orig, gt_orig) == pytest.approx(rre(est_relab, gt_relab), abs=1e-12)


class TestReport:
    def test_report_fields(self, rng):
        gt = make_trajectory([random_pose(rng) for _ in range(5)])
        est = make_trajectory([random_pose(rng) for _ in range(5)])
        rep = pose_error_report(est, gt, mode="similarity", delta=1)
        assert rep.n_frames == 5
        assert len(rep.per_frame_ate) == 5
        assert len(rep.per_frame_rpe) == 4
        assert len(rep.per_frame_rre) == 4
        assert rep.ate == pytest.approx(ate(est, gt), abs=1e-12)
        assert rep.rpe == pytest.approx(rpe(est, gt), abs=1e-12)
        assert rep.rre == pytest.approx(rre(est, gt), abs=1e-12)
        assert all(v >= 0 for v in rep.per_frame_ate + rep.per_frame_rpe + rep.per_frame_rre)
