"""Pure-NumPy implementations of the hot kernels.

Serves as the import-time fallback when the compiled extension is not
built, and as the reference the extension is tested against.
"""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "python"


def minmax_normalize(pixels: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Rescale a 2-D intensity matrix to [0, 1] by its min/max.

    Returns the float64 matrix plus the source min and max. A constant
    input maps to all zeros (the caller flags it as degenerate).
    """
    arr = np.asarray(pixels)
    vmin = float(arr.min())
    vmax = float(arr.max())
    if vmax == vmin:
        return np.zeros(arr.shape, dtype=np.float64), vmin, vmax
    values = (arr.astype(np.float64) - vmin) / (vmax - vmin)
    return values, vmin, vmax


def resize_bilinear(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample with half-pixel-center alignment and edge clamp."""
    src = np.asarray(src, dtype=np.float64)
    in_h, in_w = src.shape
    if (in_h, in_w) == (out_h, out_w):
        return src.copy()

    ys = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    y0 = np.clip(np.floor(ys).astype(np.intp), 0, in_h - 1)
    x0 = np.clip(np.floor(xs).astype(np.intp), 0, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :]

    top = src[y0[:, None], x0[None, :]] * (1 - wx) + src[y0[:, None], x1[None, :]] * wx
    bot = src[y1[:, None], x0[None, :]] * (1 - wx) + src[y1[:, None], x1[None, :]] * wx
    return top * (1 - wy[:, :]) + bot * wy[:, :]


def gaussian_stack(params: np.ndarray, height: int, width: int) -> np.ndarray:
    """Render one unnormalized Gaussian per (x, y, sigma) row, sampled at
    integer pixel centers."""
    params = np.asarray(params, dtype=np.float64).reshape(-1, 3)
    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)
    out = np.empty((params.shape[0], height, width), dtype=np.float64)
    for i, (cx, cy, sigma) in enumerate(params):
        dx2 = (xs - cx) ** 2
        dy2 = (ys - cy) ** 2
        out[i] = np.exp(-(dy2[:, None] + dx2[None, :]) / (2.0 * sigma * sigma))
    return out


def _axis_offset(h_minus: float, h0: float, h_plus: float) -> float:
    # Log-space parabola is exact for Gaussian peaks; fall back to the
    # value-space parabola when a sample is non-positive.
    if h_minus > 0.0 and h0 > 0.0 and h_plus > 0.0:
        a, b, c = np.log(h_minus), np.log(h0), np.log(h_plus)
    else:
        a, b, c = h_minus, h0, h_plus
    denom = a - 2.0 * b + c
    if denom >= 0.0:  # non-concave triple: keep the integer argmax
        return 0.0
    off = 0.5 * (a - c) / denom
    return float(min(0.5, max(-0.5, off)))


def decode_peaks(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Locate the subpixel peak of every channel.

    Returns (coords, confidences, empty) where coords is (N, 2) in
    model-input (x, y) pixels, confidences are the peak mass fractions
    rescaled to [0, 1], and empty marks all-zero channels.
    """
    stack = np.asarray(stack, dtype=np.float64)
    n, h, w = stack.shape
    coords = np.zeros((n, 2), dtype=np.float64)
    confs = np.zeros(n, dtype=np.float64)
    empty = np.zeros(n, dtype=bool)
    for i in range(n):
        chan = stack[i]
        flat = int(np.argmax(chan))  # row-major first occurrence on ties
        peak = float(chan.flat[flat])
        if peak <= 0.0:
            empty[i] = True
            continue
        y, x = divmod(flat, w)
        dx = dy = 0.0
        if 0 < x < w - 1:
            dx = _axis_offset(chan[y, x - 1], peak, chan[y, x + 1])
        if 0 < y < h - 1:
            dy = _axis_offset(chan[y - 1, x], peak, chan[y + 1, x])
        coords[i, 0] = x + dx
        coords[i, 1] = y + dy
        total = float(chan.sum())
        confs[i] = min(1.0, peak * (h * w) / total) if total > 0 else 0.0
    return coords, confs, empty
