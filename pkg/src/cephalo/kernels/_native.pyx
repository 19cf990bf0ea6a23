# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the hot kernels (min-max rescale, bilinear
letterbox resize, Gaussian rendering, subpixel peak decode)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

IMPLEMENTATION = "native"


def minmax_normalize(pixels):
    cdef cnp.ndarray arr = np.ascontiguousarray(pixels, dtype=np.float64)
    cdef const double[:, ::1] src = arr
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    cdef Py_ssize_t i, j
    cdef double vmin = src[0, 0], vmax = src[0, 0], v

    for i in range(h):
        for j in range(w):
            v = src[i, j]
            if v < vmin:
                vmin = v
            if v > vmax:
                vmax = v

    out_arr = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double span = vmax - vmin
    if span > 0.0:
        for i in range(h):
            for j in range(w):
                out[i, j] = (src[i, j] - vmin) / span
    return out_arr, vmin, vmax


def resize_bilinear(src_in, Py_ssize_t out_h, Py_ssize_t out_w):
    cdef cnp.ndarray arr = np.ascontiguousarray(src_in, dtype=np.float64)
    cdef const double[:, ::1] src = arr
    cdef Py_ssize_t in_h = src.shape[0], in_w = src.shape[1]
    if in_h == out_h and in_w == out_w:
        return arr.copy()

    out_arr = np.empty((out_h, out_w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double sy = (<double>in_h) / out_h
    cdef double sx = (<double>in_w) / out_w
    cdef Py_ssize_t i, j, y0, y1, x0, x1
    cdef double yf, xf, wy, wx, top, bot

    for i in range(out_h):
        yf = (i + 0.5) * sy - 0.5
        y0 = <Py_ssize_t>yf if yf >= 0.0 else -1
        if y0 < 0:
            y0 = 0
            wy = 0.0
        elif y0 >= in_h - 1:
            y0 = in_h - 1
            wy = 0.0
        else:
            wy = yf - y0
        y1 = y0 + 1 if y0 + 1 < in_h else in_h - 1
        for j in range(out_w):
            xf = (j + 0.5) * sx - 0.5
            x0 = <Py_ssize_t>xf if xf >= 0.0 else -1
            if x0 < 0:
                x0 = 0
                wx = 0.0
            elif x0 >= in_w - 1:
                x0 = in_w - 1
                wx = 0.0
            else:
                wx = xf - x0
            x1 = x0 + 1 if x0 + 1 < in_w else in_w - 1
            top = src[y0, x0] * (1.0 - wx) + src[y0, x1] * wx
            bot = src[y1, x0] * (1.0 - wx) + src[y1, x1] * wx
            out[i, j] = top * (1.0 - wy) + bot * wy
    return out_arr


def gaussian_stack(params_in, Py_ssize_t height, Py_ssize_t width):
    cdef cnp.ndarray parr = np.ascontiguousarray(
        np.asarray(params_in, dtype=np.float64).reshape(-1, 3))
    cdef const double[:, ::1] params = parr
    cdef Py_ssize_t n = params.shape[0]
    out_arr = np.empty((n, height, width), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t k, i, j
    cdef double cx, cy, inv2s2, dy2

    for k in range(n):
        cx = params[k, 0]
        cy = params[k, 1]
        inv2s2 = 1.0 / (2.0 * params[k, 2] * params[k, 2])
        for i in range(height):
            dy2 = (i - cy) * (i - cy)
            for j in range(width):
                out[k, i, j] = exp(-((j - cx) * (j - cx) + dy2) * inv2s2)
    return out_arr


cdef inline double _axis_offset(double hm, double h0, double hp) nogil:
    cdef double a, b, c, denom, off
    if hm > 0.0 and h0 > 0.0 and hp > 0.0:
        a = log(hm); b = log(h0); c = log(hp)
    else:
        a = hm; b = h0; c = hp
    denom = a - 2.0 * b + c
    if denom >= 0.0:
        return 0.0
    off = 0.5 * (a - c) / denom
    if off > 0.5:
        return 0.5
    if off < -0.5:
        return -0.5
    return off


def decode_peaks(stack_in):
    cdef cnp.ndarray arr = np.ascontiguousarray(stack_in, dtype=np.float64)
    cdef const double[:, :, ::1] stack = arr
    cdef Py_ssize_t n = stack.shape[0], h = stack.shape[1], w = stack.shape[2]

    coords_arr = np.zeros((n, 2), dtype=np.float64)
    confs_arr = np.zeros(n, dtype=np.float64)
    empty_arr = np.zeros(n, dtype=bool)
    cdef double[:, ::1] coords = coords_arr
    cdef double[::1] confs = confs_arr
    cdef Py_ssize_t k, i, j, px, py
    cdef double peak, v, total, dx, dy

    for k in range(n):
        peak = stack[k, 0, 0]
        px = 0
        py = 0
        total = 0.0
        for i in range(h):
            for j in range(w):
                v = stack[k, i, j]
                total += v
                if v > peak:  # strict: row-major first occurrence wins ties
                    peak = v
                    py = i
                    px = j
        if peak <= 0.0:
            empty_arr[k] = True
            continue
        dx = 0.0
        dy = 0.0
        if 0 < px < w - 1:
            dx = _axis_offset(stack[k, py, px - 1], peak, stack[k, py, px + 1])
        if 0 < py < h - 1:
            dy = _axis_offset(stack[k, py - 1, px], peak, stack[k, py + 1, px])
        coords[k, 0] = px + dx
        coords[k, 1] = py + dy
        if total > 0.0:
            v = peak * (h * w) / total
            confs[k] = v if v < 1.0 else 1.0
    return coords_arr, confs_arr, empty_arr
