"""Single-sample functional forms of the layer operations.

These take un-batched tensors (``(C, H, W)`` frames, ``(m,)`` vectors,
``(m, n)`` feature matrices) and dispatch to the batched kernels.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError, ShapeError
from . import backend
from .layers import ACTIVATIONS, LSTM, Param, conv_output_size, sigmoid


def _as3d(x, what):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"{what} must be (C, H, W), got shape {x.shape}")
    return x


def conv2d_forward(x, kernels, bias, stride=1, padding=0):
    x = _as3d(x, "conv input")
    kernels = np.asarray(kernels, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if kernels.ndim != 4:
        raise ShapeError(f"kernels must be (K, C, kh, kw), got {kernels.shape}")
    if kernels.shape[1] != x.shape[0]:
        raise ShapeError(f"input channels {x.shape[0]} != kernel channels {kernels.shape[1]}")
    if bias.shape != (kernels.shape[0],):
        raise ShapeError(f"bias shape {bias.shape} != ({kernels.shape[0]},)")
    if stride < 1 or padding < 0:
        raise ParameterError("stride must be positive and padding non-negative")
    conv_output_size(x.shape[1], kernels.shape[2], stride, padding, "height")
    conv_output_size(x.shape[2], kernels.shape[3], stride, padding, "width")
    return backend.kernels().conv2d_forward(x[None], np.ascontiguousarray(kernels), bias, stride, padding)[0]


def maxpool2d_forward(x, pool, stride=None):
    """Returns (pooled, argmax) where argmax holds flat row-major indices
    into each input channel plane."""
    x = _as3d(x, "pool input")
    stride = pool if stride is None else stride
    if pool < 1 or stride < 1:
        raise ParameterError("pool and stride must be positive")
    conv_output_size(x.shape[1], pool, stride, 0, "pool height")
    conv_output_size(x.shape[2], pool, stride, 0, "pool width")
    y, arg = backend.kernels().maxpool2d_forward(x[None], pool, stride)
    return y[0], arg[0]


def dense_forward(x, weights, bias, activation="linear"):
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if activation not in ACTIVATIONS:
        raise ParameterError(f"unknown activation {activation!r}")
    if x.ndim != 1 or weights.ndim != 2 or weights.shape[1] != x.shape[0]:
        raise ShapeError(f"dense: weights {weights.shape} incompatible with input {x.shape}")
    if bias.shape != (weights.shape[0],):
        raise ShapeError(f"dense: bias {bias.shape} != ({weights.shape[0]},)")
    z = weights @ x + bias
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "sigmoid":
        return sigmoid(z)
    return z


def lstm_forward(sequence, params, hidden_size):
    """Run an LSTM over a feature matrix of shape (m, n), columns are timesteps.

    ``params`` maps ``W`` (4H x m), ``U`` (4H x H), ``b`` (4H) to arrays or
    :class:`Param`. Returns the final hidden state (H,).
    """
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 2:
        raise ShapeError(f"sequence must be (m, n), got {seq.shape}")
    m, n = seq.shape
    if n < 1:
        raise ShapeError("sequence needs at least one timestep")
    layer = LSTM(m, hidden_size, rng=0)
    for key in ("W", "U", "b"):
        value = params[key].value if isinstance(params[key], Param) else np.asarray(params[key], dtype=np.float64)
        if value.shape != layer.params[key].shape:
            raise ShapeError(f"lstm param {key}: expected {layer.params[key].shape}, got {value.shape}")
        layer.params[key].value[...] = value
    out = layer.forward(seq.T[None])
    return out[0]


def dropout(x, rate, mode="train", seed=None):
    x = np.asarray(x, dtype=np.float64)
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "eval"):
        raise ParameterError(f"mode must be 'train' or 'eval', got {mode!r}")
    if mode == "eval" or rate == 0.0:
        return x.copy()
    rng = np.random.default_rng(seed)
    keep = rng.random(x.shape) >= rate
    return x * keep / (1.0 - rate)
