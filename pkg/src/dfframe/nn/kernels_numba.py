"""Loop kernels compiled with numba; same contracts as ``kernels_numpy``."""

import numpy as np
from numba import njit


@njit(cache=True)
def _pad(x, padding):
    n, c, h, w = x.shape
    out = np.zeros((n, c, h + 2 * padding, w + 2 * padding))
    out[:, :, padding:padding + h, padding:padding + w] = x
    return out


@njit(cache=True)
def conv2d_forward(x, w, b, stride, padding):
    xp = _pad(x, padding) if padding > 0 else x
    n, c, hp, wp = xp.shape
    k, _, kh, kw = w.shape
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    y = np.empty((n, k, ho, wo))
    for s in range(n):
        for f in range(k):
            for oi in range(ho):
                for oj in range(wo):
                    acc = b[f]
                    r0 = oi * stride
                    c0 = oj * stride
                    for ch in range(c):
                        for i in range(kh):
                            for j in range(kw):
                                acc += w[f, ch, i, j] * xp[s, ch, r0 + i, c0 + j]
                    y[s, f, oi, oj] = acc
    return y


@njit(cache=True)
def conv2d_backward(x, w, dy, stride, padding):
    xp = _pad(x, padding) if padding > 0 else x
    n, c, hp, wp = xp.shape
    k, _, kh, kw = w.shape
    ho, wo = dy.shape[2], dy.shape[3]
    dw = np.zeros(w.shape)
    db = np.zeros(k)
    dxp = np.zeros(xp.shape)
    for s in range(n):
        for f in range(k):
            for oi in range(ho):
                for oj in range(wo):
                    g = dy[s, f, oi, oj]
                    if g == 0.0:
                        continue
                    db[f] += g
                    r0 = oi * stride
                    c0 = oj * stride
                    for ch in range(c):
                        for i in range(kh):
                            for j in range(kw):
                                dw[f, ch, i, j] += g * xp[s, ch, r0 + i, c0 + j]
                                dxp[s, ch, r0 + i, c0 + j] += g * w[f, ch, i, j]
    h = hp - 2 * padding
    wd = wp - 2 * padding
    dx = np.ascontiguousarray(dxp[:, :, padding:padding + h, padding:padding + wd])
    return dx, dw, db


@njit(cache=True)
def maxpool2d_forward(x, pool, stride):
    n, c, h, w = x.shape
    ho = (h - pool) // stride + 1
    wo = (w - pool) // stride + 1
    y = np.empty((n, c, ho, wo))
    arg = np.empty((n, c, ho, wo), dtype=np.int64)
    for s in range(n):
        for ch in range(c):
            for oi in range(ho):
                for oj in range(wo):
                    r0 = oi * stride
                    c0 = oj * stride
                    best = x[s, ch, r0, c0]
                    bi = r0 * w + c0
                    for i in range(pool):
                        for j in range(pool):
                            v = x[s, ch, r0 + i, c0 + j]
                            if v > best:
                                best = v
                                bi = (r0 + i) * w + c0 + j
                    y[s, ch, oi, oj] = best
                    arg[s, ch, oi, oj] = bi
    return y, arg


@njit(cache=True)
def _maxpool2d_backward(dy, argmax, n, c, h, w):
    dx = np.zeros((n, c, h * w))
    ho, wo = dy.shape[2], dy.shape[3]
    for s in range(n):
        for ch in range(c):
            for oi in range(ho):
                for oj in range(wo):
                    dx[s, ch, argmax[s, ch, oi, oj]] += dy[s, ch, oi, oj]
    return dx.reshape((n, c, h, w))


def maxpool2d_backward(dy, argmax, input_shape):
    n, c, h, w = input_shape
    return _maxpool2d_backward(dy, argmax, n, c, h, w)
