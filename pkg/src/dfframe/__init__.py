"""Desk-scale deepfake detection framework: automatic vs manual features,
temporally independent vs dependent models, built on a from-scratch numpy
network library."""

__version__ = "0.1.0"
