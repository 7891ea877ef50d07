"""Sequential container: forward/backward through a layer stack."""

from __future__ import annotations

import copy

import numpy as np

from ..errors import StateError
from .layers import Layer, Param


class Sequential:
    def __init__(self, layers: list[Layer], names: list[str] | None = None):
        self.layers = list(layers)
        if names is None:
            names = [f"{i}.{layer.name}" for i, layer in enumerate(self.layers)]
        self.names = list(names)
        self._forwarded = False

    def __len__(self):
        return len(self.layers)

    def parameters(self) -> dict[str, Param]:
        out = {}
        for lname, layer in zip(self.names, self.layers):
            for pname, p in layer.params.items():
                out[f"{lname}.{pname}"] = p
        return out

    def freeze(self, frozen: bool = True):
        for p in self.parameters().values():
            p.frozen = frozen
        return self

    def output_shape(self, input_shape):
        shape = tuple(input_shape)
        for layer in self.layers:
            shape = layer.output_shape(shape)
        return shape

    def forward(self, x, train: bool = False):
        out = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            out = layer.forward(out, train=train)
        self._forwarded = True
        return out

    __call__ = forward

    def predict(self, x, batch_size: int = 256):
        """Eval-mode forward in chunks; does not leave caches behind."""
        x = np.asarray(x, dtype=np.float64)
        outs = [self.forward(x[i:i + batch_size]) for i in range(0, len(x), batch_size)]
        self._clear()
        return np.concatenate(outs) if outs else np.empty((0,))

    def _clear(self):
        for layer in self.layers:
            layer._cache = None
        self._forwarded = False

    def backward(self, grad) -> dict[str, np.ndarray]:
        """Backpropagate ``grad`` (d loss / d output).

        Returns gradients for unfrozen parameters only. Propagation stops
        early once no earlier layer holds a trainable parameter.
        """
        if not self._forwarded:
            raise StateError("backward called before forward")
        grads = {}
        trainable_below = [False] * (len(self.layers) + 1)
        for i, layer in enumerate(self.layers):
            trainable_below[i + 1] = trainable_below[i] or layer.trainable
        g = np.asarray(grad, dtype=np.float64)
        for i in range(len(self.layers) - 1, -1, -1):
            if not trainable_below[i + 1]:
                break
            layer = self.layers[i]
            g = layer.backward(g)
            for pname, p in layer.params.items():
                if not p.frozen:
                    grads[f"{self.names[i]}.{pname}"] = layer.grads[pname]
        self._clear()
        return grads

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.value.copy() for k, p in self.parameters().items()}

    def load_state_dict(self, state):
        params = self.parameters()
        missing = set(params) - set(state)
        if missing:
            raise KeyError(f"missing parameters: {sorted(missing)}")
        for k, p in params.items():
            if state[k].shape != p.value.shape:
                raise ValueError(f"shape mismatch for {k}: {state[k].shape} vs {p.value.shape}")
            p.value[...] = state[k]

    def clone(self):
        return copy.deepcopy(self)
