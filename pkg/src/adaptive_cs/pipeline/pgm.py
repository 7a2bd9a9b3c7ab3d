"""Binary 8-bit PGM (P5) reading and writing."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

__all__ = ["PGMError", "load_sequence", "read_pgm", "write_pgm"]

BACKGROUND_NAME = "background.pgm"


class PGMError(ValueError):
    """Malformed or unusable PGM input; the message names the file."""


def _header_tokens(data, path):
    tokens = []
    i = 0
    while len(tokens) < 4:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if i >= len(data):
            raise PGMError(f"{path}: truncated header")
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
            j += 1
        tokens.append(data[i:j])
        i = j
    # exactly one whitespace byte separates the header from the raster
    return tokens, i + 1


def read_pgm(path) -> np.ndarray:
    """Read a P5 file into a float array scaled to [0, 1]."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise PGMError(f"{path}: {exc.strerror}") from exc
    tokens, offset = _header_tokens(data, path)
    if tokens[0] != b"P5":
        raise PGMError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise PGMError(f"{path}: bad header field") from exc
    if width < 1 or height < 1 or not 0 < maxval < 256:
        raise PGMError(f"{path}: unsupported dimensions or maxval {maxval}")
    raster = data[offset:offset + width * height]
    if len(raster) != width * height:
        raise PGMError(f"{path}: expected {width * height} pixel bytes, got {len(raster)}")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return pixels.astype(float) / maxval


def write_pgm(path, frame):
    """Write a [0, 1] float frame as 8-bit P5, rounding and clipping."""
    f = np.asarray(frame, dtype=float)
    if f.ndim != 2:
        raise ValueError("frame must be 2-D")
    raw = np.clip(np.rint(f * 255.0), 0, 255).astype(np.uint8)
    height, width = raw.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(raw.tobytes())


def load_sequence(directory, background=None):
    """Load ``background.pgm`` and every other ``*.pgm`` in lexical order.

    Parameters
    ----------
    directory : path
        Folder holding the frames.
    background : path, optional
        Background image; defaults to ``directory/background.pgm``.

    Returns
    -------
    frames : list of ndarray
    background : ndarray
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise PGMError(f"{directory}: not a directory")
    bg_path = Path(background) if background is not None else directory / BACKGROUND_NAME
    if not bg_path.is_file():
        raise PGMError(f"{bg_path}: background image missing")
    names = sorted(p for p in os.listdir(directory)
                   if p.lower().endswith(".pgm") and (directory / p).resolve() != bg_path.resolve())
    if not names:
        raise PGMError(f"{directory}: no frames found")
    bg = read_pgm(bg_path)
    frames = []
    for name in names:
        f = read_pgm(directory / name)
        if f.shape != bg.shape:
            raise PGMError(f"{directory / name}: size {f.shape} differs from background {bg.shape}")
        frames.append(f)
    return frames, bg
