"""Differentiable layers operating on batched float64 arrays.

Every layer caches what it needs during ``forward`` and consumes the cache
in ``backward``. Calling ``backward`` without a preceding ``forward``
raises :class:`StateError`. Parameter gradients are written to
``layer.grads`` keyed like ``layer.params``.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError, ShapeError, StateError
from . import backend


class Param:
    """A named-by-container parameter array with a frozen flag."""

    __slots__ = ("value", "frozen")

    def __init__(self, value, frozen: bool = False):
        self.value = np.ascontiguousarray(value, dtype=np.float64)
        self.frozen = bool(frozen)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Param(shape={self.value.shape}, frozen={self.frozen})"


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def conv_output_size(size: int, kernel: int, stride: int, padding: int, what: str = "dim") -> int:
    span = size + 2 * padding - kernel
    if span < 0:
        raise ShapeError(f"{what}: kernel {kernel} larger than padded size {size + 2 * padding}")
    if span % stride:
        raise ShapeError(
            f"{what}: (size {size} + 2*padding {padding} - kernel {kernel}) "
            f"not divisible by stride {stride}"
        )
    return span // stride + 1


class Layer:
    name = "layer"

    def __init__(self):
        self.params: dict[str, Param] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def forward(self, x, train: bool = False):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def _take_cache(self):
        if self._cache is None:
            raise StateError(f"{type(self).__name__}.backward called before forward")
        cache, self._cache = self._cache, None
        return cache

    @property
    def trainable(self) -> bool:
        return any(not p.frozen for p in self.params.values())

    def output_shape(self, input_shape: tuple) -> tuple:
        """Per-sample output shape for a per-sample input shape."""
        return input_shape


class Conv2D(Layer):
    name = "conv"

    def __init__(self, in_channels, out_channels, kernel, stride=1, padding=None, rng=None):
        super().__init__()
        if padding is None:
            padding = kernel // 2
        self.stride = int(stride)
        self.padding = int(padding)
        rng = np.random.default_rng(rng)
        fan_in = in_channels * kernel * kernel
        limit = np.sqrt(6.0 / fan_in)
        self.params["weight"] = Param(rng.uniform(-limit, limit, (out_channels, in_channels, kernel, kernel)))
        self.params["bias"] = Param(np.zeros(out_channels))

    def output_shape(self, input_shape):
        c, h, w = input_shape
        k, kc, kh, kw = self.params["weight"].shape
        if c != kc:
            raise ShapeError(f"conv expects {kc} input channels, got {c}")
        return (k,
                conv_output_size(h, kh, self.stride, self.padding, "height"),
                conv_output_size(w, kw, self.stride, self.padding, "width"))

    def forward(self, x, train=False):
        self.output_shape(x.shape[1:])
        w = self.params["weight"].value
        b = self.params["bias"].value
        self._cache = x
        return backend.kernels().conv2d_forward(x, w, b, self.stride, self.padding)

    def backward(self, grad):
        x = self._take_cache()
        w = self.params["weight"]
        dx, dw, db = backend.kernels().conv2d_backward(x, w.value, grad, self.stride, self.padding)
        self.grads = {"weight": dw, "bias": db}
        return dx


class MaxPool2D(Layer):
    name = "pool"

    def __init__(self, pool, stride=None):
        super().__init__()
        self.pool = int(pool)
        self.stride = int(stride if stride is not None else pool)
        if self.pool < 1 or self.stride < 1:
            raise ParameterError("pool and stride must be positive")

    def output_shape(self, input_shape):
        c, h, w = input_shape
        return (c,
                conv_output_size(h, self.pool, self.stride, 0, "pool height"),
                conv_output_size(w, self.pool, self.stride, 0, "pool width"))

    def forward(self, x, train=False):
        self.output_shape(x.shape[1:])
        y, arg = backend.kernels().maxpool2d_forward(x, self.pool, self.stride)
        self._cache = (x.shape, arg)
        return y

    def backward(self, grad):
        shape, arg = self._take_cache()
        return backend.kernels().maxpool2d_backward(np.ascontiguousarray(grad), arg, shape)


class ReLU(Layer):
    name = "relu"

    def forward(self, x, train=False):
        mask = x > 0
        self._cache = mask
        return x * mask

    def backward(self, grad):
        return grad * self._take_cache()


class Flatten(Layer):
    name = "flatten"

    def output_shape(self, input_shape):
        return (int(np.prod(input_shape)),)

    def forward(self, x, train=False):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._take_cache())


ACTIVATIONS = ("linear", "relu", "sigmoid")


class Dense(Layer):
    name = "dense"

    def __init__(self, in_features, out_features, activation="linear", rng=None):
        super().__init__()
        if activation not in ACTIVATIONS:
            raise ParameterError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
        self.activation = activation
        rng = np.random.default_rng(rng)
        if activation == "relu":
            limit = np.sqrt(6.0 / in_features)
        else:
            limit = np.sqrt(6.0 / (in_features + out_features))
        self.params["weight"] = Param(rng.uniform(-limit, limit, (out_features, in_features)))
        self.params["bias"] = Param(np.zeros(out_features))

    def output_shape(self, input_shape):
        p, m = self.params["weight"].shape
        if tuple(input_shape) != (m,):
            raise ShapeError(f"dense expects input ({m},), got {tuple(input_shape)}")
        return (p,)

    def forward(self, x, train=False):
        self.output_shape(x.shape[1:])
        z = x @ self.params["weight"].value.T + self.params["bias"].value
        if self.activation == "relu":
            out = np.maximum(z, 0.0)
        elif self.activation == "sigmoid":
            out = sigmoid(z)
        else:
            out = z
        self._cache = (x, z, out)
        return out

    def backward(self, grad):
        x, z, out = self._take_cache()
        if self.activation == "relu":
            dz = grad * (z > 0)
        elif self.activation == "sigmoid":
            dz = grad * out * (1.0 - out)
        else:
            dz = grad
        self.grads = {"weight": dz.T @ x, "bias": dz.sum(axis=0)}
        return dz @ self.params["weight"].value


class Dropout(Layer):
    """Inverted dropout; identity in eval mode."""

    name = "dropout"

    def __init__(self, rate, rng=None):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = float(rate)
        self.rng = np.random.default_rng(rng)

    def forward(self, x, train=False):
        if not train or self.rate == 0.0:
            self._cache = 1.0
            return x
        keep = self.rng.random(x.shape) >= self.rate
        mask = keep / (1.0 - self.rate)
        self._cache = mask
        return x * mask

    def backward(self, grad):
        return grad * self._take_cache()


class LSTM(Layer):
    """Single-layer LSTM returning the final hidden state.

    Input is (N, T, m); gate blocks are stacked in the order input, forget,
    candidate, output along the first axis of ``W`` (4H x m), ``U`` (4H x H)
    and ``b`` (4H). Initial hidden and cell states are zero.
    """

    name = "lstm"

    def __init__(self, input_size, hidden_size, rng=None, forget_bias=1.0):
        super().__init__()
        if hidden_size <= 0:
            raise ParameterError(f"hidden size must be positive, got {hidden_size}")
        self.input_size = int(input_size)
        self.hidden_size = int(hidden_size)
        rng = np.random.default_rng(rng)
        lim = 1.0 / np.sqrt(hidden_size)
        h4 = 4 * hidden_size
        self.params["W"] = Param(rng.uniform(-lim, lim, (h4, input_size)))
        self.params["U"] = Param(rng.uniform(-lim, lim, (h4, hidden_size)))
        b = np.zeros(h4)
        b[hidden_size:2 * hidden_size] = forget_bias
        self.params["b"] = Param(b)

    def output_shape(self, input_shape):
        if len(input_shape) != 2 or input_shape[1] != self.input_size:
            raise ShapeError(
                f"lstm expects (T, {self.input_size}) per sample, got {tuple(input_shape)}"
            )
        if input_shape[0] < 1:
            raise ShapeError("lstm needs at least one timestep")
        return (self.hidden_size,)

    def forward(self, x, train=False):
        self.output_shape(x.shape[1:])
        W = self.params["W"].value
        U = self.params["U"].value
        b = self.params["b"].value
        n, steps, _ = x.shape
        H = self.hidden_size
        # input projections for all steps at once
        xz = x @ W.T + b  # N,T,4H
        hs = np.zeros((steps + 1, n, H))
        cs = np.zeros((steps + 1, n, H))
        gates = np.empty((steps, n, 4 * H))
        for t in range(steps):
            z = xz[:, t] + hs[t] @ U.T
            g = np.empty_like(z)
            g[:, :2 * H] = sigmoid(z[:, :2 * H])
            g[:, 2 * H:3 * H] = np.tanh(z[:, 2 * H:3 * H])
            g[:, 3 * H:] = sigmoid(z[:, 3 * H:])
            i, f, cand, o = g[:, :H], g[:, H:2 * H], g[:, 2 * H:3 * H], g[:, 3 * H:]
            cs[t + 1] = f * cs[t] + i * cand
            hs[t + 1] = o * np.tanh(cs[t + 1])
            gates[t] = g
        self._cache = (x, hs, cs, gates)
        return hs[-1].copy()

    def backward(self, grad):
        x, hs, cs, gates = self._take_cache()
        W = self.params["W"].value
        U = self.params["U"].value
        H = self.hidden_size
        n, steps, _ = x.shape
        dz_all = np.empty((steps, n, 4 * H))
        dh = grad
        dc = np.zeros((n, H))
        for t in range(steps - 1, -1, -1):
            g = gates[t]
            i, f, cand, o = g[:, :H], g[:, H:2 * H], g[:, 2 * H:3 * H], g[:, 3 * H:]
            tc = np.tanh(cs[t + 1])
            dc = dc + dh * o * (1.0 - tc * tc)
            dz = dz_all[t]
            dz[:, :H] = dc * cand * i * (1.0 - i)
            dz[:, H:2 * H] = dc * cs[t] * f * (1.0 - f)
            dz[:, 2 * H:3 * H] = dc * i * (1.0 - cand * cand)
            dz[:, 3 * H:] = dh * tc * o * (1.0 - o)
            dh = dz @ U
            dc = dc * f
        # dz_all: T,N,4H
        dW = np.tensordot(dz_all, x.transpose(1, 0, 2), axes=([0, 1], [0, 1]))
        dU = np.tensordot(dz_all, hs[:-1], axes=([0, 1], [0, 1]))
        db = dz_all.sum(axis=(0, 1))
        self.grads = {"W": dW, "U": dU, "b": db}
        return (dz_all @ W).transpose(1, 0, 2)


class Standardize(Layer):
    """Fixed per-feature affine map (x - mean) / scale on the last axis.

    Both parameters are frozen; :meth:`fit` sets them from data.
    """

    name = "standardize"

    def __init__(self, features):
        super().__init__()
        self.params["mean"] = Param(np.zeros(features), frozen=True)
        self.params["scale"] = Param(np.ones(features), frozen=True)

    def fit(self, x, eps=1e-8):
        x = np.asarray(x, dtype=np.float64)
        flat = x.reshape(-1, x.shape[-1])
        self.params["mean"].value[...] = flat.mean(axis=0)
        self.params["scale"].value[...] = flat.std(axis=0) + eps
        return self

    def forward(self, x, train=False):
        if x.shape[-1] != self.params["mean"].shape[0]:
            raise ShapeError(f"standardize expects {self.params['mean'].shape[0]} features, got {x.shape[-1]}")
        out = (x - self.params["mean"].value) / self.params["scale"].value
        self._cache = out
        return out

    def backward(self, grad):
        out = self._take_cache()
        scale = self.params["scale"].value
        g2 = grad.reshape(-1, grad.shape[-1])
        self.grads = {"mean": -g2.sum(axis=0) / scale,
                      "scale": -(g2 * out.reshape(g2.shape)).sum(axis=0) / scale}
        return grad / scale
