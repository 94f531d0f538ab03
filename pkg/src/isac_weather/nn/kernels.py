"""Hot loops of the CNN: same-padded 2D convolution and 2x2 max pooling.

Every kernel exists as a numba loop (``*_nb``) and a numpy version
(``*_np``). The unsuffixed names dispatch on :data:`isac_weather._accel.USE_NUMBA`.
Arrays are channels-first: ``x[batch, channel, row, col]``.

Max-pool ties go to the first maximum in row-major window order in both
backends, so routing of gradients is backend independent.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .._accel import USE_NUMBA, njit


# ----------------------------------------------------------------------------
# numba
# ----------------------------------------------------------------------------
@njit
def conv2d_forward_nb(x, w, b):
    B, C, H, W = x.shape
    O, _, K, _ = w.shape
    p = K // 2
    y = np.empty((B, O, H, W), dtype=x.dtype)
    for n in range(B):
        for o in range(O):
            y[n, o, :, :] = b[o]
            for c in range(C):
                for di in range(K):
                    i0 = max(0, p - di)
                    i1 = min(H, H + p - di)
                    for dj in range(K):
                        j0 = max(0, p - dj)
                        j1 = min(W, W + p - dj)
                        wv = w[o, c, di, dj]
                        for i in range(i0, i1):
                            ii = i + di - p
                            for j in range(j0, j1):
                                y[n, o, i, j] += wv * x[n, c, ii, j + dj - p]
    return y


@njit
def conv2d_backward_nb(x, w, dy):
    B, C, H, W = x.shape
    O, _, K, _ = w.shape
    p = K // 2
    dx = np.zeros_like(x)
    dw = np.zeros_like(w)
    db = np.zeros(O, dtype=x.dtype)
    for n in range(B):
        for o in range(O):
            for i in range(H):
                for j in range(W):
                    db[o] += dy[n, o, i, j]
            for c in range(C):
                for di in range(K):
                    i0 = max(0, p - di)
                    i1 = min(H, H + p - di)
                    for dj in range(K):
                        j0 = max(0, p - dj)
                        j1 = min(W, W + p - dj)
                        wv = w[o, c, di, dj]
                        acc = 0.0
                        for i in range(i0, i1):
                            ii = i + di - p
                            for j in range(j0, j1):
                                g = dy[n, o, i, j]
                                acc += g * x[n, c, ii, j + dj - p]
                                dx[n, c, ii, j + dj - p] += g * wv
                        dw[o, c, di, dj] += acc
    return dx, dw, db


@njit
def maxpool2_forward_nb(x):
    B, C, H, W = x.shape
    H2 = H // 2
    W2 = W // 2
    y = np.empty((B, C, H2, W2), dtype=x.dtype)
    arg = np.empty((B, C, H2, W2), dtype=np.int8)
    for n in range(B):
        for c in range(C):
            for i in range(H2):
                for j in range(W2):
                    best = x[n, c, 2 * i, 2 * j]
                    k = 0
                    v = x[n, c, 2 * i, 2 * j + 1]
                    if v > best:
                        best = v
                        k = 1
                    v = x[n, c, 2 * i + 1, 2 * j]
                    if v > best:
                        best = v
                        k = 2
                    v = x[n, c, 2 * i + 1, 2 * j + 1]
                    if v > best:
                        best = v
                        k = 3
                    y[n, c, i, j] = best
                    arg[n, c, i, j] = k
    return y, arg


@njit
def maxpool2_backward_nb(dy, arg, H, W):
    B, C, H2, W2 = dy.shape
    dx = np.zeros((B, C, H, W), dtype=dy.dtype)
    for n in range(B):
        for c in range(C):
            for i in range(H2):
                for j in range(W2):
                    k = arg[n, c, i, j]
                    dx[n, c, 2 * i + k // 2, 2 * j + k % 2] = dy[n, c, i, j]
    return dx


# ----------------------------------------------------------------------------
# numpy
# ----------------------------------------------------------------------------
def _windows(x, K):
    p = K // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    # (B, C, H, W, K, K)
    return sliding_window_view(xp, (K, K), axis=(2, 3))


def conv2d_forward_np(x, w, b):
    K = w.shape[2]
    win = _windows(x, K)
    y = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3]))  # (B, H, W, O)
    y = y.transpose(0, 3, 1, 2) + b[None, :, None, None]
    return np.ascontiguousarray(y)


def conv2d_backward_np(x, w, dy):
    K = w.shape[2]
    win = _windows(x, K)
    dw = np.tensordot(dy, win, axes=([0, 2, 3], [0, 2, 3]))  # (O, C, K, K)
    db = dy.sum(axis=(0, 2, 3))
    wflip = w[:, :, ::-1, ::-1]
    dwin = _windows(dy, K)  # (B, O, H, W, K, K)
    dx = np.tensordot(dwin, wflip, axes=([1, 4, 5], [0, 2, 3]))  # (B, H, W, C)
    dx = np.ascontiguousarray(dx.transpose(0, 3, 1, 2))
    return dx, np.ascontiguousarray(dw), db


def maxpool2_forward_np(x):
    B, C, H, W = x.shape
    H2, W2 = H // 2, W // 2
    blocks = x[:, :, : 2 * H2, : 2 * W2].reshape(B, C, H2, 2, W2, 2)
    blocks = blocks.transpose(0, 1, 2, 4, 3, 5).reshape(B, C, H2, W2, 4)
    arg = np.argmax(blocks, axis=-1).astype(np.int8)
    y = np.take_along_axis(blocks, arg[..., None].astype(np.intp), axis=-1)[..., 0]
    return np.ascontiguousarray(y), arg


def maxpool2_backward_np(dy, arg, H, W):
    B, C, H2, W2 = dy.shape
    onehot = arg[..., None] == np.arange(4, dtype=np.int8)
    blocks = np.where(onehot, dy[..., None], 0.0).astype(dy.dtype)
    blocks = blocks.reshape(B, C, H2, W2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    dx = np.zeros((B, C, H, W), dtype=dy.dtype)
    dx[:, :, : 2 * H2, : 2 * W2] = blocks.reshape(B, C, 2 * H2, 2 * W2)
    return dx


if USE_NUMBA:
    conv2d_forward = conv2d_forward_nb
    conv2d_backward = conv2d_backward_nb
    maxpool2_forward = maxpool2_forward_nb
    maxpool2_backward = maxpool2_backward_nb
else:
    conv2d_forward = conv2d_forward_np
    conv2d_backward = conv2d_backward_np
    maxpool2_forward = maxpool2_forward_np
    maxpool2_backward = maxpool2_backward_np
