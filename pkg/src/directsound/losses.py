"""Training losses on magnitude spectrograms: MSE, cosine-similarity, and
their weighted combination.

The cosine term only penalises the direction of the spectrogram (seen as a
flat vector under the Frobenius inner product), so adding it to the MSE
gives a loss that tolerates an overall gain error in the target.  All
functions accept MagnitudeSpectrogram instances or plain T x F arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LossConfig:
    """alpha weights the cosine term added to the per-element mean MSE."""

    alpha: float = 0.2

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")


def _values(x) -> np.ndarray:
    arr = np.asarray(getattr(x, "values", x), dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a T x F matrix")
    return arr


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    va, vb = _values(a), _values(b)
    if va.shape != vb.shape:
        raise ValueError(f"shape mismatch: {va.shape} vs {vb.shape}")
    return va, vb


def mse_loss(a, b) -> float:
    """Mean over all T*F elements of the squared difference."""
    va, vb = _pair(a, b)
    return float(np.mean((va - vb) ** 2))


def cossim_loss(a, b) -> float:
    """1 - <a, b>_F / (||a||_F ||b||_F); zero iff a and b are collinear."""
    va, vb = _pair(a, b)
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for an all-zero spectrogram")
    return float(1.0 - np.sum(va * vb) / (na * nb))


def mca_loss(a, b, config: LossConfig = LossConfig()) -> float:
    """MSE plus alpha times the cosine-similarity loss."""
    return mse_loss(a, b) + config.alpha * cossim_loss(a, b)


def mca_loss_grad(a, b, config: LossConfig = LossConfig()) -> np.ndarray:
    """Gradient of mca_loss with respect to its second argument.

    d/dB mean((A-B)^2) = 2 (B - A) / (T*F)
    d/dB [1 - <A,B>/(||A|| ||B||)] = -A/(||A|| ||B||) + cos(A,B) B/||B||^2
    """
    va, vb = _pair(a, b)
    grad = 2.0 * (vb - va) / va.size
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for an all-zero spectrogram")
    cos = np.sum(va * vb) / (na * nb)
    grad += config.alpha * (-va / (na * nb) + cos * vb / nb**2)
    return grad
