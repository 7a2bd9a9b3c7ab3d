"""Motion-compensated extrapolation of the next frame from two past frames.

Frames are 2-D float arrays of shape ``(height, width)`` with intensities in
[0, 1]. Signals handed to the solvers are their column-major vectorizations
(:func:`vectorize` / :func:`devectorize`).

Motion vectors are stored in half-pel units as ``(dy, dx)`` and point along
the motion: a block at pixel position ``p`` in the current frame came from
``p - v/2`` in the previous frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import median_filter

__all__ = [
    "HALF_PEL_TAPS",
    "MotionField",
    "block_match",
    "devectorize",
    "extrapolate",
    "half_pel_upsample",
    "median_prefilter",
    "side_info",
    "smooth_field",
    "vectorize",
]

HALF_PEL_TAPS = np.array([1.0, -5.0, 20.0, 20.0, -5.0, 1.0]) / 32.0


def vectorize(frame) -> np.ndarray:
    return np.asarray(frame, dtype=float).ravel(order="F")


def devectorize(vec, shape) -> np.ndarray:
    return np.asarray(vec, dtype=float).reshape(shape, order="F")


@dataclass
class MotionField:
    """Per-block half-pel motion vectors and their SAD costs.

    ``vectors`` has shape ``(rows, cols, 2)``; ``costs`` has shape
    ``(rows, cols)``.
    """

    vectors: np.ndarray
    costs: np.ndarray
    block_size: int

    @property
    def grid_shape(self):
        return self.costs.shape


def _half_pel_axis(a, axis):
    """Half-sample positions between ``a[i]`` and ``a[i+1]`` along ``axis``."""
    a = np.moveaxis(a, axis, -1)
    p = np.pad(a, [(0, 0)] * (a.ndim - 1) + [(2, 3)], mode="edge")
    L = a.shape[-1]
    out = sum(tap * p[..., k:k + L] for k, tap in enumerate(HALF_PEL_TAPS))
    return np.moveaxis(out, -1, axis)


def half_pel_upsample(frame, clip=True) -> np.ndarray:
    """Interpolate a frame onto a grid twice as fine in each dimension.

    Integer positions are copied; half positions use the six-tap filter
    ``(1, -5, 20, 20, -5, 1)/32`` horizontally and vertically, and the
    diagonal positions filter the unclipped horizontal half-samples
    vertically. Borders are edge-replicated. Set ``clip=False`` to skip the
    final clamp to [0, 1].
    """
    f = np.asarray(frame, dtype=float)
    if f.size == 0:
        raise ValueError("empty frame")
    H, W = f.shape
    h = _half_pel_axis(f, 1)
    out = np.empty((2 * H, 2 * W))
    out[0::2, 0::2] = f
    out[0::2, 1::2] = h
    out[1::2, 0::2] = _half_pel_axis(f, 0)
    out[1::2, 1::2] = _half_pel_axis(h, 0)
    if clip:
        np.clip(out, 0.0, 1.0, out=out)
    return out


def _pad_to_blocks(frame, gamma):
    H, W = frame.shape
    ph = (-H) % gamma
    pw = (-W) % gamma
    if ph or pw:
        frame = np.pad(frame, ((0, ph), (0, pw)), mode="edge")
    return frame


def _candidates(rho):
    r = 2 * int(rho)
    vs = [(dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1)]
    # preferred order for ties: small l1 length, then row-major
    vs.sort(key=lambda v: (abs(v[0]) + abs(v[1]), v[0], v[1]))
    return vs


def block_match(prev, cur, gamma=8, rho=6) -> MotionField:
    """Half-pel full-search block matching with the SAD criterion.

    Frames whose sides are not multiples of ``gamma`` are edge-padded; the
    returned grid covers the padded frame. Candidates whose reference block
    would leave the interpolated frame are skipped.
    """
    prev = np.asarray(prev, dtype=float)
    cur = np.asarray(cur, dtype=float)
    if prev.shape != cur.shape:
        raise ValueError(f"frame shapes differ: {prev.shape} vs {cur.shape}")
    if gamma < 1 or rho < 0:
        raise ValueError("need gamma >= 1 and rho >= 0")
    prev = _pad_to_blocks(prev, gamma)
    cur = _pad_to_blocks(cur, gamma)
    H, W = cur.shape
    gy, gx = H // gamma, W // gamma
    up = half_pel_upsample(prev)

    # block origins in half-pel coordinates
    oy = 2 * gamma * np.arange(gy)
    ox = 2 * gamma * np.arange(gx)
    span = 2 * (gamma - 1)
    rows = 2 * np.arange(H)
    cols = 2 * np.arange(W)

    best = np.full((gy, gx), np.inf)
    vec = np.zeros((gy, gx, 2), dtype=int)
    for dy, dx in _candidates(rho):
        vy = (oy - dy >= 0) & (oy - dy + span <= 2 * (H - 1))
        vx = (ox - dx >= 0) & (ox - dx + span <= 2 * (W - 1))
        if not vy.any() or not vx.any():
            continue
        r = np.clip(rows - dy, 0, 2 * H - 1)
        c = np.clip(cols - dx, 0, 2 * W - 1)
        ref = up[np.ix_(r, c)]
        sad = np.abs(cur - ref).reshape(gy, gamma, gx, gamma).sum(axis=(1, 3))
        sad[~(vy[:, None] & vx[None, :])] = np.inf
        better = sad < best
        best[better] = sad[better]
        vec[better] = (dy, dx)
    return MotionField(vectors=vec, costs=best, block_size=gamma)


def smooth_field(field: MotionField) -> MotionField:
    """Weighted vector-median filter over 3x3 block neighbourhoods.

    Each vector is replaced by the neighbourhood member minimizing the sum of
    l1 distances to all members, each distance weighted by ``1/(1 + SAD)`` of
    the member it is measured to. The centre wins ties; otherwise the first
    minimizer in row-major order does.
    """
    vec = field.vectors
    cost = field.costs
    gy, gx = cost.shape
    weight = 1.0 / (1.0 + np.where(np.isfinite(cost), cost, np.finfo(float).max))
    out = vec.copy()
    out_cost = cost.copy()
    for i in range(gy):
        for j in range(gx):
            i0, i1 = max(i - 1, 0), min(i + 2, gy)
            j0, j1 = max(j - 1, 0), min(j + 2, gx)
            nb = vec[i0:i1, j0:j1].reshape(-1, 2)
            wt = weight[i0:i1, j0:j1].ravel()
            dist = np.abs(nb[:, None, :] - nb[None, :, :]).sum(axis=2)
            score = dist @ wt
            centre = (i - i0) * (j1 - j0) + (j - j0)
            # exact ties can differ by round-off depending on summation order
            lim = score.min() + 1e-12 * max(1.0, float(score.max()))
            k = centre if score[centre] <= lim else int(np.flatnonzero(score <= lim)[0])
            out[i, j] = nb[k]
            out_cost[i, j] = cost[i0:i1, j0:j1].ravel()[k]
    return MotionField(vectors=out, costs=out_cost, block_size=field.block_size)


def _to_pixels(v):
    """Round half-pel units to whole pixels, ties toward zero."""
    return np.sign(v) * (np.abs(v) // 2)


def extrapolate(z_km2, z_km1, gamma=8, rho=6, return_coverage=False):
    """Predict the next frame by projecting the motion from ``z_km2`` to ``z_km1``.

    Every block of ``z_km1`` is painted one motion step further along its
    (smoothed) vector. Pixels reached by several blocks get the average;
    pixels reached by none are filled in raster order with the mean of the
    up, left and up-left prediction pixels that exist and the co-located
    pixel of ``z_km1``.

    With ``return_coverage=True`` also returns the per-pixel count of
    painting blocks (zero marks an uncovered pixel).
    """
    z_km2 = np.asarray(z_km2, dtype=float)
    z_km1 = np.asarray(z_km1, dtype=float)
    if z_km2.shape != z_km1.shape:
        raise ValueError(f"frame shapes differ: {z_km2.shape} vs {z_km1.shape}")
    H0, W0 = z_km1.shape
    field = smooth_field(block_match(z_km2, z_km1, gamma, rho))
    src = _pad_to_blocks(z_km1, gamma)
    H, W = src.shape

    acc = np.zeros((H, W))
    cnt = np.zeros((H, W), dtype=int)
    gy, gx = field.grid_shape
    for i in range(gy):
        for j in range(gx):
            py, px = _to_pixels(field.vectors[i, j])
            y0, x0 = i * gamma, j * gamma
            ty0, tx0 = y0 + py, x0 + px
            # clip the destination window to the frame
            cy0, cx0 = max(ty0, 0), max(tx0, 0)
            cy1, cx1 = min(ty0 + gamma, H), min(tx0 + gamma, W)
            if cy0 >= cy1 or cx0 >= cx1:
                continue
            acc[cy0:cy1, cx0:cx1] += src[cy0 - py:cy1 - py, cx0 - px:cx1 - px]
            cnt[cy0:cy1, cx0:cx1] += 1

    acc = acc[:H0, :W0]
    cnt = cnt[:H0, :W0]
    e = np.zeros((H0, W0))
    covered = cnt > 0
    e[covered] = acc[covered] / cnt[covered]
    for y, x in zip(*np.nonzero(~covered)):
        refs = [z_km1[y, x]]
        if y > 0:
            refs.append(e[y - 1, x])
        if x > 0:
            refs.append(e[y, x - 1])
        if y > 0 and x > 0:
            refs.append(e[y - 1, x - 1])
        e[y, x] = sum(refs) / len(refs)
    if return_coverage:
        return e, cnt
    return e


def side_info(e, b, amplification=0.3) -> np.ndarray:
    """Foreground prediction ``(1 + amplification) * vec(e - b)``."""
    e = np.asarray(e, dtype=float)
    b = np.asarray(b, dtype=float)
    if e.shape != b.shape:
        raise ValueError(f"frame shapes differ: {e.shape} vs {b.shape}")
    if amplification < 0:
        raise ValueError("amplification must be nonnegative")
    return (1.0 + amplification) * vectorize(e - b)


def median_prefilter(frame) -> np.ndarray:
    """3x3 median filter removing isolated noisy pixels."""
    return median_filter(np.asarray(frame, dtype=float), size=3, mode="nearest")
