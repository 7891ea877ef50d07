"""Vectorised numpy kernels for batched convolution and max-pooling.

All arrays are float64, layout (N, C, H, W).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _windows(x, kh, kw, stride):
    return sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]


def conv2d_forward(x, w, b, stride, padding):
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    win = _windows(x, w.shape[2], w.shape[3], stride)  # N,C,Ho,Wo,kh,kw
    y = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3]))  # N,Ho,Wo,K
    y = y.transpose(0, 3, 1, 2) + b[None, :, None, None]
    return np.ascontiguousarray(y)


def conv2d_backward(x, w, dy, stride, padding):
    n, c, h, wd = x.shape
    kh, kw = w.shape[2], w.shape[3]
    if padding:
        xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    else:
        xp = x
    ho, wo = dy.shape[2], dy.shape[3]
    win = _windows(xp, kh, kw, stride)
    dw = np.tensordot(dy, win, axes=([0, 2, 3], [0, 2, 3]))  # K,C,kh,kw
    db = dy.sum(axis=(0, 2, 3))
    dxp = np.zeros(xp.shape)
    for i in range(kh):
        for j in range(kw):
            contrib = np.tensordot(dy, w[:, :, i, j], axes=([1], [0]))  # N,Ho,Wo,C
            dxp[:, :, i:i + stride * (ho - 1) + 1:stride,
                j:j + stride * (wo - 1) + 1:stride] += contrib.transpose(0, 3, 1, 2)
    dx = dxp[:, :, padding:padding + h, padding:padding + wd]
    return np.ascontiguousarray(dx), dw, db


def maxpool2d_forward(x, pool, stride):
    n, c, h, w = x.shape
    win = _windows(x, pool, pool, stride)
    ho, wo = win.shape[2], win.shape[3]
    flat = win.reshape(n, c, ho, wo, pool * pool)
    # argmax returns the first maximum -> row-major tie breaking
    arg = flat.argmax(axis=-1)
    y = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    rows = np.arange(ho)[:, None] * stride + arg // pool
    cols = np.arange(wo)[None, :] * stride + arg % pool
    return np.ascontiguousarray(y), (rows * w + cols).astype(np.int64)


def maxpool2d_backward(dy, argmax, input_shape):
    n, c, h, w = input_shape
    plane = h * w
    offsets = (np.arange(n * c, dtype=np.int64) * plane).reshape(n, c, 1, 1)
    idx = (argmax + offsets).ravel()
    dx = np.bincount(idx, weights=dy.ravel(), minlength=n * c * plane)
    return dx.reshape(input_shape)
