"""Rectangular-image coverage: W != H flushes out any width/height mixups."""

import math

import numpy as np

from camtok import formats
from camtok.camera import CameraPose, Intrinsics
from camtok.geometry import ColorImage, DepthMap, VisibilityMask, backproject, render_view
from camtok.tokenizer import PatchEmbedderWeights, embed_rendering_mask

from conftest import axis_angle_pose
from test_geometry import forward_warp_oracle


def rect_intrinsics(width, height):
    return Intrinsics(
        fx=0.8 * width, fy=0.8 * height, cx=width / 2.0, cy=height / 2.0,
        width=width, height=height,
    )


def rect_scene(rng, width, height):
    depth = DepthMap(width, height, rng.uniform(1.0, 4.0, (height, width)))
    image = ColorImage(width, height, rng.random((height, width, 3)))
    return depth, image


class TestRectangularGeometry:
    def test_identity_round_trip(self, rng):
        K = rect_intrinsics(40, 24)
        depth, image = rect_scene(rng, 40, 24)
        r = render_view(backproject(depth, K, image), CameraPose.identity(), K)
        assert r.color.values.shape == (24, 40, 3)
        assert np.array_equal(r.color.values, image.values)
        assert (r.mask.values == 1).all()

    def test_matches_oracle(self, rng):
        K = rect_intrinsics(30, 18)
        depth, image = rect_scene(rng, 30, 18)
        cloud = backproject(depth, K, image)
        pose = axis_angle_pose(rng.standard_normal(3), 12.0, [0.2, -0.1, 0.15])
        r = render_view(cloud, pose, K)
        img, mask, zbuf = forward_warp_oracle(depth.values, image.values, K, pose, K)
        assert np.array_equal(r.color.values, img)
        assert np.array_equal(r.mask.values, mask)
        assert np.array_equal(r.zbuffer, zbuf)

    def test_different_target_intrinsics(self, rng):
        # render into a camera with another size and focal than the source
        K_src = rect_intrinsics(32, 20)
        K_tgt = Intrinsics(fx=22.0, fy=30.0, cx=10.0, cy=14.0, width=24, height=28)
        depth, image = rect_scene(rng, 32, 20)
        cloud = backproject(depth, K_src, image)
        pose = axis_angle_pose([0, 1, 0], -9.0, [0.1, 0.05, -0.1])
        r = render_view(cloud, pose, K_tgt)
        img, mask, zbuf = forward_warp_oracle(depth.values, image.values, K_src, pose, K_tgt)
        assert r.color.values.shape == (28, 24, 3)
        assert np.array_equal(r.color.values, img)
        assert np.array_equal(r.mask.values, mask)
        assert np.array_equal(r.zbuffer, zbuf)

    def test_project_point_agrees_with_renderer(self, rng):
        # a single splatted point must land on round(project_point(...))
        from camtok.geometry import PointCloud, project_point

        K = rect_intrinsics(50, 30)
        pose = axis_angle_pose([1, 0, 1], 7.0, [0.3, -0.2, 0.1])
        for _ in range(50):
            X = np.array([rng.uniform(-1, 1), rng.uniform(-0.6, 0.6), rng.uniform(1.5, 4.0)])
            u, v, z = project_point(X, pose, K)
            ur = int(math.copysign(math.floor(abs(u) + 0.5), u))
            vr = int(math.copysign(math.floor(abs(v) + 0.5), v))
            cloud = PointCloud(X[None], [[1.0, 0.0, 0.0]], [[0, 0]])
            r = render_view(cloud, pose, K)
            inside = 0 <= ur < K.width and 0 <= vr < K.height
            assert r.mask.values.sum() == (1 if inside else 0)
            if inside:
                assert r.mask.values[vr, ur] == 1
                assert r.zbuffer[vr, ur] == z


class TestRectangularFormats:
    def test_depth_round_trip(self, tmp_path, rng):
        vals = rng.uniform(1.0, 2.0, (5, 9)).astype(np.float32).astype(np.float64)
        formats.write_depth(tmp_path / "d.cdepth", DepthMap(9, 5, vals))
        back = formats.read_depth(tmp_path / "d.cdepth")
        assert (back.width, back.height) == (9, 5)
        assert np.array_equal(back.values, vals)

    def test_image_round_trip(self, tmp_path, rng):
        u8 = rng.integers(0, 256, (6, 10, 3), dtype=np.uint8)
        formats.write_image_png(tmp_path / "i.png", ColorImage(10, 6, u8 / 255.0))
        back = formats.read_image_png(tmp_path / "i.png")
        assert (back.width, back.height) == (10, 6)
        np.testing.assert_array_equal(np.floor(back.values * 255.0 + 0.5).astype(np.uint8), u8)


class TestRectangularTokenizer:
    def test_patch_grid_order(self, rng):
        # 16x8 image with 4-px patches: 2 rows x 4 cols of patches, row-major
        p = 4
        w = PatchEmbedderWeights(p, 1, np.ones((1, 4 * p * p)), np.zeros(1))
        vals = np.zeros((8, 16, 3))
        vals[0:4, 4:8, :] = 1.0  # fills patch (row 0, col 1) only
        img = ColorImage(16, 8, vals)
        mask = VisibilityMask(16, 8, np.zeros((8, 16), dtype=np.uint8))
        tokens = embed_rendering_mask(img, mask, w)
        assert tokens.shape == (8, 1)
        expected = np.zeros(8)
        expected[1] = 3.0 * p * p  # three color channels, every pixel = 1
        np.testing.assert_allclose(tokens[:, 0], expected, atol=1e-12)
