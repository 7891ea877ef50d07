"""Class-weighted binary cross-entropy on sigmoid outputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError

PROB_EPS = 1e-12


@dataclass(frozen=True)
class ClassWeights:
    real: float = 1.0
    fake: float = 1.0

    def __post_init__(self):
        if not (self.real > 0 and self.fake > 0):
            raise ParameterError(f"class weights must be positive, got real={self.real}, fake={self.fake}")

    def for_labels(self, labels):
        labels = np.asarray(labels)
        return np.where(labels == 1, self.fake, self.real)


def weighted_bce_loss(prob, label, weights: ClassWeights = ClassWeights()):
    """Loss and d loss / d prob for one prediction (label 0 = real, 1 = fake)."""
    p = min(max(float(prob), PROB_EPS), 1.0 - PROB_EPS)
    y = float(label)
    w = weights.fake if label == 1 else weights.real
    loss = w * (-y * np.log(p) - (1.0 - y) * np.log(1.0 - p))
    grad = w * (-y / p + (1.0 - y) / (1.0 - p))
    return float(loss), float(grad)


def weighted_bce_batch(probs, labels, weights: ClassWeights = ClassWeights()):
    """Mean loss over a batch and its gradient w.r.t. ``probs`` (same shape)."""
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).reshape(probs.shape)
    p = np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
    w = weights.for_labels(y)
    n = probs.shape[0]
    losses = w * (-y * np.log(p) - (1.0 - y) * np.log(1.0 - p))
    grad = w * (-y / p + (1.0 - y) / (1.0 - p)) / n
    return float(losses.sum() / n), grad
