"""
Simplex helpers: softmax projection, margin and model dissimilarity.
"""

import math
from typing import Union

import numpy as np

from .exceptions import ValidationError
from .models import ProbitPanel, ProbitVector

INFINITE_MARGIN = math.inf
DEFAULT_TIE_QUANTUM = 1e-12

ArrayLike = Union[np.ndarray, list, tuple]


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Max-subtracted softmax along ``axis``; works on any batch shape."""
    logits = np.asarray(logits, dtype=float)
    shifted = logits - logits.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=axis, keepdims=True)


def softmax_backward(probs: np.ndarray, dprobs: np.ndarray) -> np.ndarray:
    """Pull a gradient on softmax outputs back to the logits (last axis)."""
    inner = np.sum(dprobs * probs, axis=-1, keepdims=True)
    return probs * (dprobs - inner)


def project_softmax(logits: ArrayLike) -> ProbitVector:
    """Map a finite logit vector onto the simplex."""
    logits = np.asarray(logits, dtype=float)
    if logits.ndim != 1 or logits.size == 0:
        raise ValidationError("logits must be a non-empty 1-D vector")
    if not np.all(np.isfinite(logits)):
        raise ValidationError("logits must be finite")
    return ProbitVector(softmax(logits))


def argmax_lowest(scores: np.ndarray) -> np.ndarray:
    """Argmax over the last axis; ties go to the lowest class index."""
    return np.argmax(np.asarray(scores), axis=-1)


def margin(values: ArrayLike, tie_quantum: float = DEFAULT_TIE_QUANTUM) -> float:
    """Gap between the largest and second-largest coordinates.

    Returns ``INFINITE_MARGIN`` when every coordinate is equal after quantizing
    to ``tie_quantum``.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 2:
        raise ValidationError("margin needs at least two coordinates")
    quantized = np.round(values / tie_quantum)
    if np.all(quantized == quantized[0]):
        return INFINITE_MARGIN
    top_two = np.sort(values)[-2:]
    return float(top_two[1] - top_two[0])


def batch_margin(values: np.ndarray, tie_quantum: float = DEFAULT_TIE_QUANTUM) -> np.ndarray:
    """Vectorized ``margin`` over the last axis."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] < 2:
        raise ValidationError("margin needs at least two coordinates")
    quantized = np.round(values / tie_quantum)
    all_equal = np.all(quantized == quantized[..., :1], axis=-1)
    top_two = np.sort(values, axis=-1)[..., -2:]
    gaps = top_two[..., 1] - top_two[..., 0]
    return np.where(all_equal, INFINITE_MARGIN, gaps)


def model_dissimilarity(panel: Union[ProbitPanel, np.ndarray]) -> float:
    """Worst-coordinate standard deviation of client probits (sigma_x)."""
    probits = panel.probits if isinstance(panel, ProbitPanel) else np.asarray(panel, dtype=float)
    return float(batch_dissimilarity(probits))


def batch_dissimilarity(probits: np.ndarray) -> np.ndarray:
    """sigma_x for stacked panels of shape (..., n, K)."""
    probits = np.asarray(probits, dtype=float)
    if probits.ndim < 2 or probits.shape[-2] < 1:
        raise ValidationError("dissimilarity needs an (n, K) panel with n >= 1")
    centered = probits - probits.mean(axis=-2, keepdims=True)
    variance = np.mean(centered ** 2, axis=-2)
    return np.sqrt(variance.max(axis=-1))
