"""File formats: trajectory text, depth/weight/token binaries, PNG helpers.

All writers go through a write-to-temp-then-rename step so a failure never
leaves a partial file behind.  Numeric text output uses the shortest exact
decimal representation, which round-trips float64 losslessly and keeps files
diffable.

Binary layouts (all little-endian float32 payloads after an ASCII header):

    depth   ``CETD <width> <height>\\n`` then width*height floats, row-major;
            non-finite values mark invalid pixels
    weights ``CETW <patch> <dim> <in_dim>\\n`` then the (dim, in_dim) matrix
            row-major, then the bias; patch is 0 for non-patch weights
    tokens  ``CETT <length> <dim> <mode>\\n`` then the token matrix row-major
"""

from __future__ import annotations

import io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .camera import (
    CameraPose,
    Intrinsics,
    Quaternion,
    Trajectory,
    TrajectoryEntry,
    rotmat_to_quat,
)
from .errors import ParseError, ValidationError
from .geometry import ColorImage, DepthMap, VisibilityMask
from .tokenizer import CameraEmbedWeights, PatchEmbedderWeights, TokenSequence

__all__ = [
    "format_float",
    "atomic_write_bytes",
    "atomic_write_text",
    "serialize_trajectory",
    "parse_trajectory",
    "write_trajectory",
    "read_trajectory",
    "write_depth",
    "read_depth",
    "write_image_png",
    "read_image_png",
    "write_mask_png",
    "read_mask_png",
    "save_patch_weights",
    "load_patch_weights",
    "save_camera_weights",
    "load_camera_weights",
    "save_tokens",
    "load_tokens",
    "ManifestEntry",
    "parse_manifest",
    "read_manifest",
]

PARSE_QUAT_TOL = 1e-3

TRAJECTORY_FIELDS = "frame_index qw qx qy qz tx ty tz fx fy cx cy width height"


def format_float(x: float) -> str:
    """Shortest decimal string that parses back to exactly the same float.

    Negative zero is written as plain 0.0; the sign of zero carries no
    information in any of the formats here.
    """
    x = float(x)
    if x == 0.0:
        x = 0.0
    return repr(x)


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# -- trajectory text ---------------------------------------------------------


def serialize_trajectory(traj: Trajectory) -> str:
    lines = [f"# {TRAJECTORY_FIELDS}"]
    for e in traj:
        q = rotmat_to_quat(e.pose.rotation)
        t = e.pose.translation
        K = e.intrinsics
        fields = (
            [str(e.frame_index)]
            + [format_float(v) for v in (q.w, q.x, q.y, q.z, t[0], t[1], t[2])]
            + [format_float(v) for v in (K.fx, K.fy, K.cx, K.cy)]
            + [str(K.width), str(K.height)]
        )
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def parse_trajectory(text: str) -> Trajectory:
    """Parse the shared trajectory format.

    Comment (``#``) and blank lines are skipped.  Quaternions whose norm
    deviates from 1 by more than 1e-3 are rejected; smaller deviations are
    normalized away.
    """
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 14:
            raise ParseError(f"expected 14 fields, got {len(parts)}", line=lineno)
        try:
            frame_index = int(parts[0])
            vals = [float(p) for p in parts[1:12]]
            width = int(parts[12])
            height = int(parts[13])
        except ValueError as exc:
            raise ParseError(f"non-numeric field: {exc}", line=lineno) from None
        q = Quaternion(*vals[0:4])
        if not (abs(q.norm() - 1.0) <= PARSE_QUAT_TOL):
            raise ValidationError(
                f"line {lineno}: quaternion norm {q.norm():.6f} deviates from 1 "
                f"by more than {PARSE_QUAT_TOL}"
            )
        try:
            pose = CameraPose.from_quat(q.normalized(), vals[4:7])
            K = Intrinsics(fx=vals[7], fy=vals[8], cx=vals[9], cy=vals[10], width=width, height=height)
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        entries.append(TrajectoryEntry(frame_index, pose, K))
    if not entries:
        raise ParseError("no trajectory entries found")
    return Trajectory(tuple(entries))


def write_trajectory(path, traj: Trajectory) -> None:
    atomic_write_text(path, serialize_trajectory(traj))


def read_trajectory(path) -> Trajectory:
    return parse_trajectory(Path(path).read_text(encoding="utf-8"))


# -- binary headers ----------------------------------------------------------


def _read_header(data: bytes, magic: str, path) -> tuple[list[str], bytes]:
    nl = data.find(b"\n")
    if nl < 0:
        raise ParseError(f"{path}: missing header line")
    try:
        header = data[:nl].decode("ascii")
    except UnicodeDecodeError:
        raise ParseError(f"{path}: header is not ASCII") from None
    fields = header.split()
    if not fields or fields[0] != magic:
        raise ParseError(f"{path}: bad magic, expected {magic}")
    return fields[1:], data[nl + 1 :]


def _payload_floats(payload: bytes, count: int, path) -> np.ndarray:
    expected = count * 4
    if len(payload) != expected:
        raise ParseError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype="<f4").astype(np.float64)


# -- depth -------------------------------------------------------------------


def write_depth(path, depth: DepthMap) -> None:
    header = f"CETD {depth.width} {depth.height}\n".encode("ascii")
    payload = depth.values.astype("<f4").tobytes()
    atomic_write_bytes(path, header + payload)


def read_depth(path) -> DepthMap:
    data = Path(path).read_bytes()
    fields, payload = _read_header(data, "CETD", path)
    if len(fields) != 2:
        raise ParseError(f"{path}: depth header needs width and height")
    try:
        width, height = int(fields[0]), int(fields[1])
    except ValueError:
        raise ParseError(f"{path}: non-integer depth dimensions") from None
    if width <= 0 or height <= 0:
        raise ParseError(f"{path}: non-positive depth dimensions {width}x{height}")
    values = _payload_floats(payload, width * height, path).reshape(height, width)
    return DepthMap(width, height, values)


# -- PNG ---------------------------------------------------------------------


def _png_bytes(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def write_image_png(path, image: ColorImage) -> None:
    u8 = np.clip(np.floor(image.values * 255.0 + 0.5), 0, 255).astype(np.uint8)
    atomic_write_bytes(path, _png_bytes(Image.fromarray(u8, mode="RGB")))


def read_image_png(path) -> ColorImage:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    h, w = arr.shape[:2]
    return ColorImage(w, h, arr / 255.0)


def write_mask_png(path, mask: VisibilityMask) -> None:
    u8 = (mask.values * 255).astype(np.uint8)
    atomic_write_bytes(path, _png_bytes(Image.fromarray(u8, mode="L")))


def read_mask_png(path) -> VisibilityMask:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"), dtype=np.uint8)
    bad = ~np.isin(arr, (0, 255))
    if bool(bad.any()):
        raise ValidationError(f"{path}: mask pixels must be 0 or 255")
    h, w = arr.shape
    return VisibilityMask(w, h, (arr == 255).astype(np.uint8))


# -- linear weights ----------------------------------------------------------


def _save_linear(path, patch: int, weight: np.ndarray, bias: np.ndarray) -> None:
    d, in_dim = weight.shape
    header = f"CETW {patch} {d} {in_dim}\n".encode("ascii")
    payload = weight.astype("<f4").tobytes() + bias.astype("<f4").tobytes()
    atomic_write_bytes(path, header + payload)


def _load_linear(path) -> tuple[int, np.ndarray, np.ndarray]:
    data = Path(path).read_bytes()
    fields, payload = _read_header(data, "CETW", path)
    if len(fields) != 3:
        raise ParseError(f"{path}: weights header needs patch, dim and in_dim")
    try:
        patch, d, in_dim = (int(f) for f in fields)
    except ValueError:
        raise ParseError(f"{path}: non-integer weights header fields") from None
    if d <= 0 or in_dim <= 0 or patch < 0:
        raise ParseError(f"{path}: bad weights header values")
    flat = _payload_floats(payload, d * in_dim + d, path)
    weight = flat[: d * in_dim].reshape(d, in_dim)
    return patch, weight, flat[d * in_dim :]


def save_patch_weights(path, weights: PatchEmbedderWeights) -> None:
    _save_linear(path, weights.patch_size, weights.weight, weights.bias)


def load_patch_weights(path) -> PatchEmbedderWeights:
    patch, weight, bias = _load_linear(path)
    if patch <= 0:
        raise ValidationError(f"{path}: patch size {patch} is not a patch embedder")
    return PatchEmbedderWeights(patch, weight.shape[0], weight, bias)


def save_camera_weights(path, weights: CameraEmbedWeights) -> None:
    _save_linear(path, 0, weights.weight, weights.bias)


def load_camera_weights(path) -> CameraEmbedWeights:
    patch, weight, bias = _load_linear(path)
    if patch != 0:
        raise ValidationError(f"{path}: expected camera weights (patch 0), got patch {patch}")
    return CameraEmbedWeights(weight, bias)


# -- token dump --------------------------------------------------------------


def save_tokens(path, seq: TokenSequence) -> None:
    header = f"CETT {len(seq)} {seq.dim} {seq.layout.mode}\n".encode("ascii")
    atomic_write_bytes(path, header + seq.tokens.astype("<f4").tobytes())


def load_tokens(path) -> tuple[np.ndarray, str]:
    """Token matrix and camera-token mode; layout geometry is not stored."""
    data = Path(path).read_bytes()
    fields, payload = _read_header(data, "CETT", path)
    if len(fields) != 3:
        raise ParseError(f"{path}: token header needs length, dim and mode")
    try:
        length, d = int(fields[0]), int(fields[1])
    except ValueError:
        raise ParseError(f"{path}: non-integer token header fields") from None
    mode = fields[2]
    if mode not in ("per_frame", "pooled"):
        raise ParseError(f"{path}: unknown token mode {mode!r}")
    return _payload_floats(payload, length * d, path).reshape(length, d), mode


# -- corpus manifest ---------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    clip_id: str
    traj_path: str
    width: int
    height: int
    n_frames: int
    aesthetic_score: float | None = None


def parse_manifest(text: str) -> list[ManifestEntry]:
    """One clip per line: ``clip_id traj_path width height n_frames [score]``."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (5, 6):
            raise ParseError(f"expected 5 or 6 fields, got {len(parts)}", line=lineno)
        try:
            width, height, n_frames = int(parts[2]), int(parts[3]), int(parts[4])
            score = float(parts[5]) if len(parts) == 6 else None
        except ValueError as exc:
            raise ParseError(f"non-numeric field: {exc}", line=lineno) from None
        entries.append(ManifestEntry(parts[0], parts[1], width, height, n_frames, score))
    return entries


def read_manifest(path) -> list[ManifestEntry]:
    return parse_manifest(Path(path).read_text(encoding="utf-8"))
