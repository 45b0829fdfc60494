"""Depth back-projection, point reprojection, and z-buffered view rendering.

The renderer is a forward point splatter: each 3D point lands on exactly one
pixel (nearest-pixel rounding, round-half-away-from-zero), a per-pixel z-buffer
keeps the smallest camera depth, and ties on exactly equal depth go to the
point with the smaller source-pixel row-major index.  Output is therefore
deterministic regardless of point order or internal chunking.

Invalid depth pixels are marked with non-finite values; they never produce
points.  Holes in the rendered view are the expected result and are what the
visibility mask encodes.
"""

from __future__ import annotations

import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .camera import CameraPose, Intrinsics, Trajectory, normalize_to_first_frame, validate_rotation
from .errors import BehindCameraError, EmptySourceWarning, InvalidInputError

__all__ = [
    "DepthMap",
    "ColorImage",
    "PointCloud",
    "VisibilityMask",
    "Rendering",
    "backproject",
    "project_point",
    "render_view",
    "render_sequence",
]

Z_EPS = 1e-9

# Source pixel coordinates are packed into v * 2**26 + u for tie-breaking, so
# image sides are capped at 2**26 pixels (the packed key must stay exact in
# the float64 used by the splat kernel).
_MAX_SIDE = 1 << 26


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel scene depth; non-finite entries mark invalid pixels."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.height, self.width):
            raise InvalidInputError(
                f"depth shape {v.shape} does not match {self.height}x{self.width}"
            )
        finite = np.isfinite(v)
        if bool((v[finite] <= 0.0).any()):
            raise InvalidInputError("finite depth values must be positive; use non-finite for holes")
        object.__setattr__(self, "values", v)

    def valid_mask(self) -> np.ndarray:
        return np.isfinite(self.values)


@dataclass(frozen=True)
class ColorImage:
    """Row-major RGB image with channels in [0, 1]."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.height, self.width, 3):
            raise InvalidInputError(
                f"image shape {v.shape} does not match {self.height}x{self.width}x3"
            )
        if not np.isfinite(v).all():
            raise InvalidInputError("image contains non-finite values")
        if v.min() < 0.0 or v.max() > 1.0:
            raise InvalidInputError("image channels must lie in [0, 1]")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class VisibilityMask:
    """Binary per-pixel visibility, 1 where a projected point survived."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.height, self.width):
            raise InvalidInputError(
                f"mask shape {v.shape} does not match {self.height}x{self.width}"
            )
        v = v.astype(np.uint8)
        if bool((v > 1).any()):
            raise InvalidInputError("mask values must be 0 or 1")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class PointCloud:
    """Colored points in reference-camera coordinates with source pixels."""

    positions: np.ndarray
    colors: np.ndarray
    source_pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=np.float64)
        c = np.asarray(self.colors, dtype=np.float64)
        sp = np.asarray(self.source_pixels, dtype=np.int64)
        n = p.shape[0]
        if p.shape != (n, 3) or c.shape != (n, 3) or sp.shape != (n, 2):
            raise InvalidInputError("point cloud arrays must be (N,3), (N,3) and (N,2)")
        if n and bool((p[:, 2] <= 0.0).any()):
            raise InvalidInputError("all points must lie in front of the reference camera (z > 0)")
        if n and (bool((sp < 0).any()) or bool((sp >= _MAX_SIDE).any())):
            raise InvalidInputError("source pixel coordinates out of supported range")
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "colors", c)
        object.__setattr__(self, "source_pixels", sp)

    def __len__(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class Rendering:
    """Synthesized view: colors, visibility mask, and winning-point depths.

    Pixels with mask 0 carry color (0, 0, 0) and a non-finite z-buffer entry.
    """

    color: ColorImage
    mask: VisibilityMask
    zbuffer: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.zbuffer, dtype=np.float64)
        if z.shape != (self.color.height, self.color.width):
            raise InvalidInputError("z-buffer shape does not match image")
        if (self.mask.height, self.mask.width) != (self.color.height, self.color.width):
            raise InvalidInputError("mask shape does not match image")
        object.__setattr__(self, "zbuffer", z)


def backproject(depth: DepthMap, K: Intrinsics, colors: ColorImage) -> PointCloud:
    """Lift every valid depth pixel into a 3D point in camera coordinates.

    With integer pixel centers (u, v), each point is
    ``(d * ((u - cx) / fx), d * ((v - cy) / fy), d)``.  Points are emitted in
    row-major pixel order.  An all-invalid depth map yields an empty cloud and
    an :class:`EmptySourceWarning`.
    """
    if (depth.width, depth.height) != (K.width, K.height):
        raise InvalidInputError("depth dimensions do not match intrinsics")
    if (colors.width, colors.height) != (K.width, K.height):
        raise InvalidInputError("color dimensions do not match intrinsics")
    valid = depth.valid_mask()
    us, vs = np.meshgrid(
        np.arange(K.width, dtype=np.float64), np.arange(K.height, dtype=np.float64)
    )
    d = depth.values[valid]
    uv, vv = us[valid], vs[valid]
    x = d * ((uv - K.cx) / K.fx)
    y = d * ((vv - K.cy) / K.fy)
    positions = np.stack([x, y, d], axis=1)
    cols = colors.values[valid]
    src = np.stack([uv.astype(np.int64), vv.astype(np.int64)], axis=1)
    if positions.shape[0] == 0:
        warnings.warn("no valid depth pixels; point cloud is empty", EmptySourceWarning)
    return PointCloud(positions, cols, src)


def project_point(X, pose: CameraPose, K: Intrinsics) -> tuple[float, float, float]:
    """Project one 3D point; returns continuous (u, v) and camera-frame depth z.

    Raises :class:`BehindCameraError` when z <= 1e-9; callers cull such points.
    """
    R = validate_rotation(pose.rotation)
    T = pose.translation
    x, y, z = float(X[0]), float(X[1]), float(X[2])
    xc = R[0, 0] * x + R[0, 1] * y + R[0, 2] * z + T[0]
    yc = R[1, 0] * x + R[1, 1] * y + R[1, 2] * z + T[1]
    zc = R[2, 0] * x + R[2, 1] * y + R[2, 2] * z + T[2]
    if zc <= Z_EPS:
        raise BehindCameraError(f"point depth {zc:.3g} is at or behind the camera")
    return (K.fx * xc / zc + K.cx, K.fy * yc / zc + K.cy, zc)


# Splat kernel scratch, one set per thread.  Chunked processing keeps the
# per-point working set cache-resident independent of image size.
_CHUNK = 1 << 16
_tls = threading.local()


def _scratch():
    s = getattr(_tls, "splat_scratch", None)
    if s is None:
        s = {
            "f": [np.empty(_CHUNK) for _ in range(6)],
            "b": np.empty(_CHUNK, dtype=bool),
            "c": np.empty(_CHUNK, dtype=np.complex128),
        }
        _tls.splat_scratch = s
    return s


def _splat(positions, colors, tie_index, R, T, K: Intrinsics):
    """Project, cull, round and z-buffer a point set onto the target grid.

    The z-buffer stores complex keys (depth, tie_index): numpy's complex
    minimum is lexicographic, so one scatter pass resolves both the depth test
    and the deterministic tie-break.
    """
    H, W = K.height, K.width
    n_out = H * W
    n_pts = positions.shape[0]
    fx, fy, cx, cy = K.fx, K.fy, K.cx, K.cy
    s = _scratch()
    xc_b, yc_b, zc_b, uf_b, vf_b, tmp_b = s["f"]
    vm_b, key_b = s["b"], s["c"]
    zkey = np.full(n_out, complex(np.inf, np.inf), dtype=np.complex128)
    X, Y, Z = positions[:, 0], positions[:, 1], positions[:, 2]
    for lo in range(0, n_pts, _CHUNK):
        hi = min(lo + _CHUNK, n_pts)
        k = hi - lo
        Xc, Yc, Zc = X[lo:hi], Y[lo:hi], Z[lo:hi]
        a, b, c = xc_b[:k], yc_b[:k], zc_b[:k]
        u, v, t, vm = uf_b[:k], vf_b[:k], tmp_b[:k], vm_b[:k]
        np.multiply(Xc, R[0, 0], out=a)
        np.multiply(Yc, R[0, 1], out=t)
        a += t
        np.multiply(Zc, R[0, 2], out=t)
        a += t
        a += T[0]
        np.multiply(Xc, R[1, 0], out=b)
        np.multiply(Yc, R[1, 1], out=t)
        b += t
        np.multiply(Zc, R[1, 2], out=t)
        b += t
        b += T[1]
        np.multiply(Xc, R[2, 0], out=c)
        np.multiply(Yc, R[2, 1], out=t)
        c += t
        np.multiply(Zc, R[2, 2], out=t)
        c += t
        c += T[2]
        np.greater(c, Z_EPS, out=vm)
        # guard the division for culled points; their results are discarded
        np.copyto(t, c)
        t[~vm] = 1.0
        np.multiply(a, fx, out=u)
        u /= t
        u += cx
        np.multiply(b, fy, out=v)
        v /= t
        v += cy
        # round half away from zero: copysign(floor(|x| + 0.5), x)
        np.abs(u, out=t)
        t += 0.5
        np.floor(t, out=t)
        np.copysign(t, u, out=u)
        np.abs(v, out=t)
        t += 0.5
        np.floor(t, out=t)
        np.copysign(t, v, out=v)
        vm &= u >= 0.0
        vm &= u <= W - 1.0
        vm &= v >= 0.0
        vm &= v <= H - 1.0
        px = (v[vm] * W + u[vm]).astype(np.int64)
        key = key_b[: px.shape[0]]
        key.real = c[vm]
        key.imag = tie_index[lo:hi][vm]
        np.minimum.at(zkey, px, key)
    occupied = np.isfinite(zkey.real)
    winners = zkey.imag[occupied].astype(np.int64)
    flat = np.zeros((n_out, 3))
    flat[occupied] = colors[winners]
    mask = occupied.astype(np.uint8)
    zbuf = zkey.real.copy()
    return flat.reshape(H, W, 3), mask.reshape(H, W), zbuf.reshape(H, W)


def render_view(cloud: PointCloud, pose: CameraPose, K: Intrinsics) -> Rendering:
    """Render a point cloud into the view defined by (pose, K).

    An empty cloud produces an all-zero mask and an :class:`EmptySourceWarning`.
    """
    R = validate_rotation(pose.rotation)
    T = pose.translation
    if not np.isfinite(T).all():
        raise InvalidInputError("pose translation contains non-finite values")
    if len(cloud) == 0:
        warnings.warn("rendering an empty point cloud", EmptySourceWarning)
        H, W = K.height, K.width
        return Rendering(
            ColorImage(W, H, np.zeros((H, W, 3))),
            VisibilityMask(W, H, np.zeros((H, W), dtype=np.uint8)),
            np.full((H, W), np.inf),
        )
    positions, colors = cloud.positions, cloud.colors
    # Tie-breaking operates on source-pixel row-major order, so the splat
    # kernel wants rows sorted by (v, u); backprojected clouds already are.
    packed = cloud.source_pixels[:, 1] * _MAX_SIDE + cloud.source_pixels[:, 0]
    if packed.shape[0] > 1 and bool((packed[1:] < packed[:-1]).any()):
        order = np.argsort(packed, kind="stable")
        positions = positions[order]
        colors = colors[order]
    tie_index = np.arange(positions.shape[0], dtype=np.float64)
    img, mask, zbuf = _splat(positions, colors, tie_index, R, T, K)
    return Rendering(
        ColorImage(K.width, K.height, img),
        VisibilityMask(K.width, K.height, mask),
        zbuf,
    )


def render_sequence(
    ref_image: ColorImage,
    ref_depth: DepthMap,
    traj: Trajectory,
    threads: int = 1,
) -> list[Rendering]:
    """Back-project the reference frame once and render every trajectory pose.

    The trajectory is normalized so its first frame is the identity (the cloud
    lives in frame-1 camera coordinates).  Frames may be rendered concurrently;
    results are returned in trajectory order and are byte-identical for any
    thread count.
    """
    traj = normalize_to_first_frame(traj)
    cloud = backproject(ref_depth, traj[0].intrinsics, ref_image)

    def one(entry):
        return render_view(cloud, entry.pose, entry.intrinsics)

    if threads <= 1:
        return [one(e) for e in traj]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, traj.entries))
