"""Small image helpers: bilinear resampling and filters."""

from __future__ import annotations

import numpy as np


def bilinear_resample(frame, x0, y0, x1, y1, out_h, out_w):
    """Resample the continuous region [x0, x1] x [y0, y1] of a (C, H, W) frame.

    Coordinates are in pixel-edge units (pixel k spans [k, k+1)). Output
    pixel centres are mapped into the region; source samples outside the
    frame are clamped to the border.
    """
    c, h, w = frame.shape
    xs = x0 + (np.arange(out_w) + 0.5) * (x1 - x0) / out_w - 0.5
    ys = y0 + (np.arange(out_h) + 0.5) * (y1 - y0) / out_h - 0.5
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    xa = np.minimum(np.floor(xs).astype(np.int64), w - 2) if w > 1 else np.zeros(out_w, np.int64)
    ya = np.minimum(np.floor(ys).astype(np.int64), h - 2) if h > 1 else np.zeros(out_h, np.int64)
    fx = xs - xa if w > 1 else np.zeros(out_w)
    fy = ys - ya if h > 1 else np.zeros(out_h)
    xb = np.minimum(xa + 1, w - 1)
    yb = np.minimum(ya + 1, h - 1)
    top = frame[:, ya][:, :, xa] * (1 - fx) + frame[:, ya][:, :, xb] * fx
    bot = frame[:, yb][:, :, xa] * (1 - fx) + frame[:, yb][:, :, xb] * fx
    return top * (1 - fy)[:, None] + bot * fy[:, None]


def box_blur3(img):
    """3x3 mean filter with edge replication on the last two axes."""
    p = np.pad(img, [(0, 0)] * (img.ndim - 2) + [(1, 1), (1, 1)], mode="edge")
    out = np.zeros_like(img)
    h, w = img.shape[-2:]
    for i in range(3):
        for j in range(3):
            out += p[..., i:i + h, j:j + w]
    return out / 9.0


def laplacian(img):
    p = np.pad(img, [(0, 0)] * (img.ndim - 2) + [(1, 1), (1, 1)], mode="edge")
    h, w = img.shape[-2:]
    return (p[..., 1:h + 1, 0:w] + p[..., 1:h + 1, 2:w + 2] + p[..., 0:h, 1:w + 1]
            + p[..., 2:h + 2, 1:w + 1] - 4.0 * img)


def high_frequency_energy(img):
    """Mean squared Laplacian response, a cheap high-pass energy measure."""
    return float(np.mean(laplacian(img) ** 2))
