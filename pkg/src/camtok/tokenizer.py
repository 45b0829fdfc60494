"""Token assembly: patch-embedded rendering+mask grids plus camera vectors.

The visual embedder is a deterministic patchify-linear with loadable weights.
Two contracts are load-bearing and tested: the rendering and its mask are
concatenated along the channel dimension before embedding, and the weight
block that touches the mask channel is zero under default initialization, so
freshly initialized tokens depend on color content only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CompactCamera
from .errors import InvalidInputError
from .geometry import ColorImage, VisibilityMask

__all__ = [
    "PatchEmbedderWeights",
    "CameraEmbedWeights",
    "TokenLayout",
    "TokenSequence",
    "embed_rendering_mask",
    "embed_camera",
    "assemble_tokens",
]

DEFAULT_PATCH = 8
DEFAULT_DIM = 64
DEFAULT_SEED = 0

# A patch flattens channel-major (R block, G block, B block, mask block),
# each block row-major within the patch.
N_CHANNELS = 4


def _f32_exact(a: np.ndarray) -> np.ndarray:
    # keep values exactly representable in the float32 weight file format
    return a.astype(np.float32).astype(np.float64)


@dataclass(frozen=True)
class PatchEmbedderWeights:
    """Linear map from flattened (color + mask) patches to tokens."""

    patch_size: int
    token_dim: int
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        p, d = self.patch_size, self.token_dim
        if p <= 0 or d <= 0:
            raise InvalidInputError("patch size and token dim must be positive")
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.shape != (d, N_CHANNELS * p * p):
            raise InvalidInputError(
                f"weight shape {w.shape} does not match ({d}, {N_CHANNELS * p * p})"
            )
        if b.shape != (d,):
            raise InvalidInputError(f"bias shape {b.shape} does not match ({d},)")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return N_CHANNELS * self.patch_size * self.patch_size

    def mask_block(self) -> np.ndarray:
        """Columns of the weight matrix that read the mask channel."""
        return self.weight[:, 3 * self.patch_size * self.patch_size :]

    @classmethod
    def default(
        cls, patch_size: int = DEFAULT_PATCH, token_dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED
    ) -> "PatchEmbedderWeights":
        """Seeded random color block, zero mask block, zero bias."""
        p, d = patch_size, token_dim
        rng = np.random.default_rng([seed, 0])
        color = rng.standard_normal((d, 3 * p * p)) / np.sqrt(N_CHANNELS * p * p)
        w = np.zeros((d, N_CHANNELS * p * p))
        w[:, : 3 * p * p] = _f32_exact(color)
        return cls(p, d, w, np.zeros(d))


@dataclass(frozen=True)
class CameraEmbedWeights:
    """Affine map from the 9-vector (q, T, fov) to a token."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or w.shape[1] != 9:
            raise InvalidInputError(f"camera weight shape {w.shape} does not match (d, 9)")
        if b.shape != (w.shape[0],):
            raise InvalidInputError("camera bias length does not match token dim")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def token_dim(self) -> int:
        return self.weight.shape[0]

    @classmethod
    def default(cls, token_dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED) -> "CameraEmbedWeights":
        rng = np.random.default_rng([seed, 1])
        w = _f32_exact(rng.standard_normal((token_dim, 9)) / 3.0)
        return cls(w, np.zeros(token_dim))


def embed_rendering_mask(
    image: ColorImage, mask: VisibilityMask, weights: PatchEmbedderWeights
) -> np.ndarray:
    """Embed one rendering+mask pair into a (h*w, d) token grid.

    The image is cut into non-overlapping p x p patches in row-major order;
    each patch's four channels are flattened channel-major and mapped through
    the linear weights.  Requires p to divide both image sides.
    """
    p = weights.patch_size
    H, W = image.height, image.width
    if (mask.height, mask.width) != (H, W):
        raise InvalidInputError("mask dimensions do not match image")
    if H % p or W % p:
        raise InvalidInputError(f"patch size {p} does not divide image {W}x{H}")
    h, w = H // p, W // p
    chans = np.concatenate(
        [np.moveaxis(image.values, 2, 0), mask.values[None].astype(np.float64)], axis=0
    )
    # (4, h, p, w, p) -> (h, w, 4, p, p): channel-major, then row, then column
    patches = chans.reshape(N_CHANNELS, h, p, w, p).transpose(1, 3, 0, 2, 4)
    flat = patches.reshape(h * w, N_CHANNELS * p * p)
    return flat @ weights.weight.T + weights.bias


def embed_camera(cam: CompactCamera, weights: CameraEmbedWeights) -> np.ndarray:
    """Affine embedding of the concatenated (q, T, fov) camera vector."""
    v = cam.as_vector()
    return weights.weight @ v + weights.bias


@dataclass(frozen=True)
class TokenLayout:
    """Shape metadata locating the camera tokens inside a sequence."""

    n_frames: int
    grid_h: int
    grid_w: int
    mode: str
    camera_positions: tuple

    def visual_indices(self) -> np.ndarray:
        all_idx = np.arange(self.total_length())
        return np.delete(all_idx, list(self.camera_positions))

    def total_length(self) -> int:
        per_frame = self.grid_h * self.grid_w
        if self.mode == "per_frame":
            return self.n_frames * (per_frame + 1)
        return self.n_frames * per_frame + 1


@dataclass(frozen=True)
class TokenSequence:
    """Token matrix plus the layout needed to tell camera tokens apart."""

    tokens: np.ndarray
    layout: TokenLayout

    def __post_init__(self):
        t = np.asarray(self.tokens, dtype=np.float64)
        if t.ndim != 2:
            raise InvalidInputError("tokens must be a (length, dim) matrix")
        if t.shape[0] != self.layout.total_length():
            raise InvalidInputError(
                f"token count {t.shape[0]} does not match layout length {self.layout.total_length()}"
            )
        object.__setattr__(self, "tokens", t)

    def __len__(self) -> int:
        return self.tokens.shape[0]

    @property
    def dim(self) -> int:
        return self.tokens.shape[1]

    def camera_indices(self) -> np.ndarray:
        return np.array(self.layout.camera_positions, dtype=np.int64)

    def visual_indices(self) -> np.ndarray:
        return self.layout.visual_indices()

    def visual_tokens(self) -> np.ndarray:
        """Visual tokens only, in frame-major grid order."""
        return self.tokens[self.visual_indices()]


def assemble_tokens(visual, camera, mode: str = "per_frame", grid_shape=None) -> TokenSequence:
    """Concatenate per-frame visual token grids with camera tokens.

    ``per_frame`` interleaves one camera token after each frame's grid, giving
    length T*(h*w + 1).  ``pooled`` appends a single camera token equal to the
    mean of the per-frame camera vectors, giving length T*h*w + 1.  When
    ``grid_shape`` (h, w) is omitted the layout records a 1 x hw grid.
    """
    if mode not in ("per_frame", "pooled"):
        raise InvalidInputError(f"unknown camera token mode {mode!r}")
    visual = [np.asarray(v, dtype=np.float64) for v in visual]
    camera = [np.asarray(c, dtype=np.float64) for c in camera]
    if not visual:
        raise InvalidInputError("at least one frame of visual tokens is required")
    if len(visual) != len(camera):
        raise InvalidInputError(
            f"{len(visual)} visual frames but {len(camera)} camera vectors"
        )
    per_frame = visual[0].shape[0]
    d = visual[0].shape[1]
    for v in visual:
        if v.shape != (per_frame, d):
            raise InvalidInputError("visual token grids must share one shape")
    for c in camera:
        if c.shape != (d,):
            raise InvalidInputError("camera vectors must match the token dim")
    n = len(visual)
    if grid_shape is None:
        grid_h, grid_w = 1, per_frame
    else:
        grid_h, grid_w = int(grid_shape[0]), int(grid_shape[1])
        if grid_h * grid_w != per_frame:
            raise InvalidInputError(
                f"grid {grid_h}x{grid_w} does not hold {per_frame} tokens per frame"
            )
    if mode == "per_frame":
        parts = []
        cam_pos = []
        for i, (v, c) in enumerate(zip(visual, camera)):
            parts.append(v)
            parts.append(c[None])
            cam_pos.append(i * (per_frame + 1) + per_frame)
        tokens = np.concatenate(parts, axis=0)
    else:
        pooled = np.mean(np.stack(camera, axis=0), axis=0)
        tokens = np.concatenate(visual + [pooled[None]], axis=0)
        cam_pos = [n * per_frame]
    layout = TokenLayout(n, grid_h, grid_w, mode, tuple(cam_pos))
    return TokenSequence(tokens, layout)
