from .layers import LSTM, Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2D, Param, ReLU, Standardize, sigmoid
from .loss import ClassWeights, weighted_bce_batch, weighted_bce_loss
from .network import Sequential
from .optim import Adam, AdamState, adam_step
from . import checkpoint

__all__ = [
    "LSTM", "Conv2D", "Dense", "Dropout", "Flatten", "Layer", "MaxPool2D", "Param", "ReLU", "Standardize",
    "Sequential", "sigmoid", "ClassWeights", "weighted_bce_loss", "weighted_bce_batch",
    "Adam", "AdamState", "adam_step",
]
