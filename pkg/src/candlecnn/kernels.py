"""Hot inner loops, each with a numba and a pure-numpy implementation.

The public names at the bottom of the module are bound to one path or
the other at import time according to :mod:`candlecnn._accel`. Both paths
are always importable so tests and the benchmark can compare them.

Layout conventions:

* images / feature maps are ``(N, C, H, W)``
* im2col columns are ``(N*H*W, C*k*k)`` with the inner index ordered
  ``(c, i, j)`` so a ``(F, C, k, k)`` weight reshapes to ``(F, C*k*k)``
* pooling argmax codes are ``dy * 2 + dx`` within each 2x2 window, stored
  as ``int8``
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from candlecnn._accel import USE_NUMBA, njit

# --------------------------------------------------------------------------
# EMA recursion
# --------------------------------------------------------------------------


def ema_recursion_numpy(values, out, start, alpha):
    beta = 1.0 - alpha
    prev = out[start]
    for i in range(start + 1, values.shape[0]):
        prev = alpha * values[i] + beta * prev
        out[i] = prev
    return out


@njit
def ema_recursion_numba(values, out, start, alpha):
    beta = 1.0 - alpha
    prev = out[start]
    for i in range(start + 1, values.shape[0]):
        prev = alpha * values[i] + beta * prev
        out[i] = prev
    return out


# --------------------------------------------------------------------------
# im2col / col2im for same-padded, stride-1 convolution
# --------------------------------------------------------------------------


def im2col_numpy(x, k):
    n, c, h, w = x.shape
    p = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    win = sliding_window_view(xp, (k, k), axis=(2, 3))  # (N, C, H, W, k, k)
    return np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(n * h * w, c * k * k)


def col2im_numpy(cols, shape, k):
    n, c, h, w = shape
    p = k // 2
    cols6 = cols.reshape(n, h, w, c, k, k)
    dxp = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, :, i:i + h, j:j + w] += cols6[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return dxp[:, :, p:p + h, p:p + w].copy()


@njit
def im2col_numba(x, k):
    n, c, h, w = x.shape
    p = k // 2
    xp = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=x.dtype)
    xp[:, :, p:p + h, p:p + w] = x
    cols = np.empty((n * h * w, c * k * k), dtype=x.dtype)
    row = 0
    for b in range(n):
        for y in range(h):
            for xx in range(w):
                col = 0
                for ch in range(c):
                    for i in range(k):
                        for j in range(k):
                            cols[row, col] = xp[b, ch, y + i, xx + j]
                            col += 1
                row += 1
    return cols


@njit
def _col2im_numba(cols, n, c, h, w, k):
    p = k // 2
    dx = np.zeros((n, c, h, w), dtype=cols.dtype)
    row = 0
    for b in range(n):
        for y in range(h):
            for xx in range(w):
                col = 0
                for ch in range(c):
                    for i in range(k):
                        yy = y + i - p
                        for j in range(k):
                            xs = xx + j - p
                            if 0 <= yy < h and 0 <= xs < w:
                                dx[b, ch, yy, xs] += cols[row, col]
                            col += 1
                row += 1
    return dx


def col2im_numba(cols, shape, k):
    n, c, h, w = shape
    return _col2im_numba(np.ascontiguousarray(cols), n, c, h, w, k)


# --------------------------------------------------------------------------
# 2x2 / stride-2 max pooling
# --------------------------------------------------------------------------


def maxpool_forward_numpy(x):
    n, c, h, w = x.shape
    blocks = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    blocks = blocks.reshape(n, c, h // 2, w // 2, 4)
    # np.argmax returns the first maximum, i.e. row-major tie-break
    arg = np.argmax(blocks, axis=-1).astype(np.int8)
    out = np.take_along_axis(blocks, arg[..., None].astype(np.intp), axis=-1)[..., 0]
    return np.ascontiguousarray(out), arg


def maxpool_backward_numpy(dout, arg):
    n, c, ho, wo = dout.shape
    d4 = np.zeros((n, c, ho, wo, 4), dtype=dout.dtype)
    np.put_along_axis(d4, arg[..., None].astype(np.intp), dout[..., None], axis=-1)
    d4 = d4.reshape(n, c, ho, wo, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return d4.reshape(n, c, ho * 2, wo * 2)


@njit
def maxpool_forward_numba(x):
    n, c, h, w = x.shape
    ho = h // 2
    wo = w // 2
    out = np.empty((n, c, ho, wo), dtype=x.dtype)
    arg = np.empty((n, c, ho, wo), dtype=np.int8)
    for b in range(n):
        for ch in range(c):
            for y in range(ho):
                for xx in range(wo):
                    best = x[b, ch, 2 * y, 2 * xx]
                    code = 0
                    for dy in range(2):
                        for dx in range(2):
                            v = x[b, ch, 2 * y + dy, 2 * xx + dx]
                            if v > best:
                                best = v
                                code = dy * 2 + dx
                    out[b, ch, y, xx] = best
                    arg[b, ch, y, xx] = code
    return out, arg


@njit
def maxpool_backward_numba(dout, arg):
    n, c, ho, wo = dout.shape
    dx = np.zeros((n, c, ho * 2, wo * 2), dtype=dout.dtype)
    for b in range(n):
        for ch in range(c):
            for y in range(ho):
                for xx in range(wo):
                    code = arg[b, ch, y, xx]
                    dx[b, ch, 2 * y + code // 2, 2 * xx + code % 2] = dout[b, ch, y, xx]
    return dx


if USE_NUMBA:
    ema_recursion = ema_recursion_numba
    im2col = im2col_numba
    col2im = col2im_numba
    maxpool_forward = maxpool_forward_numba
    maxpool_backward = maxpool_backward_numba
else:
    ema_recursion = ema_recursion_numpy
    im2col = im2col_numpy
    col2im = col2im_numpy
    maxpool_forward = maxpool_forward_numpy
    maxpool_backward = maxpool_backward_numpy
