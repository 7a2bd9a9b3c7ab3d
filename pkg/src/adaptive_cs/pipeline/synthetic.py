"""Synthetic test sequences: a textured square sliding over a static background."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["SyntheticSequence", "SyntheticSpec", "generate_synthetic"]


@dataclass(frozen=True)
class SyntheticSpec:
    height: int = 64
    width: int = 64
    frames: int = 60
    object_size: int = 8
    # (rows, cols) per frame
    velocity: tuple[int, int] = (0, 1)
    start: tuple[int, int] | None = None
    seed: int = 0
    background_range: tuple[float, float] = (0.1, 0.6)
    object_range: tuple[float, float] = (0.8, 1.0)


@dataclass
class SyntheticSequence:
    frames: list[np.ndarray]
    background: np.ndarray
    foregrounds: list[np.ndarray] = field(default_factory=list)
    masks: list[np.ndarray] = field(default_factory=list)


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec()) -> SyntheticSequence:
    """Build a deterministic sequence with exact ground-truth foregrounds.

    The object moves ``velocity`` pixels per frame and wraps around the
    borders. Object and background intensity ranges do not overlap, so every
    object pixel is a nonzero foreground pixel.
    """
    H, W, g = spec.height, spec.width, spec.object_size
    if g < 1 or g > H or g > W:
        raise ValueError(f"object of size {g} does not fit a {H}x{W} frame")
    if spec.frames < 1:
        raise ValueError("need at least one frame")
    rng = np.random.default_rng(spec.seed)
    background = rng.uniform(*spec.background_range, size=(H, W))
    patch = rng.uniform(*spec.object_range, size=(g, g))
    y0, x0 = spec.start if spec.start is not None else ((H - g) // 2, 0)

    seq = SyntheticSequence(frames=[], background=background)
    rows = np.arange(g)
    for i in range(spec.frames):
        ry = (y0 + i * spec.velocity[0] + rows) % H
        rx = (x0 + i * spec.velocity[1] + rows) % W
        frame = background.copy()
        frame[np.ix_(ry, rx)] = patch
        mask = np.zeros((H, W), dtype=bool)
        mask[np.ix_(ry, rx)] = True
        seq.frames.append(frame)
        seq.foregrounds.append(frame - background)
        seq.masks.append(mask)
    return seq
