"""
Losses used for training (cross-entropy on probabilities) and attacks
(Carlini-Wagner margin on scores). Both return the loss and its gradient.
"""

from typing import Tuple, Union

import numpy as np

from ..exceptions import ValidationError
from ..models import ProbitVector

PROBABILITY_FLOOR = 1e-12


def _check_labels(labels: np.ndarray, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if np.any(labels < 0) or np.any(labels >= num_classes):
        raise ValidationError(f"labels must lie in [0, {num_classes})")
    return labels


def cross_entropy(probs: Union[ProbitVector, np.ndarray],
                  label) -> Tuple[np.ndarray, np.ndarray]:
    """-log(probs[label]) with probabilities clamped at 1e-12, and d loss / d probs."""
    if isinstance(probs, ProbitVector):
        probs = probs.values
    probs = np.asarray(probs, dtype=float)
    labels = _check_labels(label, probs.shape[-1])
    picked = np.take_along_axis(probs, labels[..., None], axis=-1)[..., 0]
    clamped = np.maximum(picked, PROBABILITY_FLOOR)
    loss = -np.log(clamped)
    dpicked = np.where(picked >= PROBABILITY_FLOOR, -1.0 / clamped, 0.0)
    dprobs = np.zeros_like(probs)
    np.put_along_axis(dprobs, labels[..., None], dpicked[..., None], axis=-1)
    return loss, dprobs


def cw_loss(scores: np.ndarray, label) -> Tuple[np.ndarray, np.ndarray]:
    """max_{k != label} scores[k] - scores[label], and d loss / d scores.

    Positive exactly when the label is no longer the argmax.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.shape[-1] < 2:
        raise ValidationError("the CW loss needs at least two classes")
    labels = _check_labels(label, scores.shape[-1])
    others = scores.copy()
    np.put_along_axis(others, labels[..., None], -np.inf, axis=-1)
    runner_up = np.argmax(others, axis=-1)
    true_score = np.take_along_axis(scores, labels[..., None], axis=-1)[..., 0]
    best_other = np.take_along_axis(scores, runner_up[..., None], axis=-1)[..., 0]
    dscores = np.zeros_like(scores)
    np.put_along_axis(dscores, runner_up[..., None], 1.0, axis=-1)
    np.put_along_axis(dscores, labels[..., None], -1.0, axis=-1)
    return best_other - true_score, dscores
