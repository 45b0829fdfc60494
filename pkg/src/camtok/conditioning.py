"""Additive token fusion contract and flow-matching training math.

The fusion rule is deliberately tiny: context tokens pass through an optional
affine block, go through a projection that is zero at initialization, and are
added onto the base feature grid.  Camera tokens are excluded before the
addition, so they steer nothing directly.  With default (zero) projection the
whole operation is an exact identity on the base features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .tokenizer import TokenSequence

__all__ = [
    "ZeroProjection",
    "ContextBlock",
    "zero_project_add",
    "FlowSample",
    "flow_interpolate",
    "flow_matching_loss",
]


@dataclass(frozen=True)
class ZeroProjection:
    """Affine map from context token dim to base feature dim; zero by default."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2:
            raise InvalidInputError("projection weight must be 2-D (base_dim, token_dim)")
        if b.shape != (w.shape[0],):
            raise InvalidInputError("projection bias length does not match output dim")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @classmethod
    def zeros(cls, token_dim: int, base_dim: int) -> "ZeroProjection":
        return cls(np.zeros((base_dim, token_dim)), np.zeros(base_dim))

    def apply(self, tokens: np.ndarray) -> np.ndarray:
        return tokens @ self.weight.T + self.bias


@dataclass(frozen=True)
class ContextBlock:
    """Stand-in context transform: identity by default, seeded affine for tests."""

    weight: np.ndarray
    bias: np.ndarray

    @classmethod
    def identity(cls, dim: int) -> "ContextBlock":
        return cls(np.eye(dim), np.zeros(dim))

    @classmethod
    def seeded(cls, dim: int, seed: int = 0) -> "ContextBlock":
        rng = np.random.default_rng([seed, 2])
        return cls(rng.standard_normal((dim, dim)) / np.sqrt(dim), rng.standard_normal(dim) * 0.1)

    def apply(self, tokens: np.ndarray) -> np.ndarray:
        return tokens @ np.asarray(self.weight).T + np.asarray(self.bias)


def zero_project_add(
    base: np.ndarray,
    ctx: TokenSequence,
    proj: ZeroProjection,
    block: ContextBlock | None = None,
) -> np.ndarray:
    """Add projected context tokens onto the base grid, skipping camera tokens.

    ``base`` is the (T*h*w, base_dim) feature grid.  The context sequence must
    carry exactly T*h*w visual tokens; its camera tokens never contribute, so
    the output is invariant under any change to them.
    """
    base = np.asarray(base, dtype=np.float64)
    if base.ndim != 2:
        raise InvalidInputError("base feature grid must be (tokens, dim)")
    if not np.isfinite(base).all():
        raise InvalidInputError("base feature grid contains non-finite values")
    vis = ctx.visual_tokens()
    if vis.shape[0] != base.shape[0]:
        raise InvalidInputError(
            f"context holds {vis.shape[0]} visual tokens but base holds {base.shape[0]}"
        )
    if proj.weight.shape != (base.shape[1], ctx.dim):
        raise InvalidInputError(
            f"projection shape {proj.weight.shape} does not map dim {ctx.dim} "
            f"to base dim {base.shape[1]}"
        )
    if block is not None:
        vis = block.apply(vis)
    return base + proj.apply(vis)


@dataclass(frozen=True)
class FlowSample:
    """Noise/data pair with an interpolation time in [0, 1]."""

    x0: np.ndarray
    x1: np.ndarray
    t: float

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=np.float64)
        x1 = np.asarray(self.x1, dtype=np.float64)
        if x0.shape != x1.shape:
            raise InvalidInputError(f"shape mismatch: x0 {x0.shape} vs x1 {x1.shape}")
        if not (0.0 <= self.t <= 1.0):
            raise InvalidInputError(f"timestep {self.t} outside [0, 1]")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "x1", x1)


def flow_interpolate(sample: FlowSample) -> tuple[np.ndarray, np.ndarray]:
    """Linear interpolant and its regression target.

    Returns ``x_t = (1 - t) * x0 + t * x1`` and the constant velocity target
    ``x1 - x0``, which does not depend on t.
    """
    t = sample.t
    x_t = (1.0 - t) * sample.x0 + t * sample.x1
    return x_t, sample.x1 - sample.x0


def flow_matching_loss(pred: np.ndarray, sample: FlowSample) -> float:
    """Mean squared error between a predicted velocity and x1 - x0."""
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape != sample.x0.shape:
        raise InvalidInputError(f"prediction shape {pred.shape} does not match {sample.x0.shape}")
    diff = pred - (sample.x1 - sample.x0)
    return float(np.mean(diff * diff))
