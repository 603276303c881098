"""
Concrete aggregation rules and the robust-argmax classifier.
"""

from typing import Tuple

import numpy as np

from ..exceptions import ValidationError
from ..models import AggregatorKind, AggregatorName, DEFAULT_MODEL_NAME
from ..nn.deepset import DeepSetModel, deepset_backward, deepset_forward
from ..nn.losses import cross_entropy, cw_loss
from ..simplex import argmax_lowest, softmax_backward
from .base import BaseAggregator
from .static import (
    GM_FLOOR,
    GM_MAX_ITER,
    GM_TOL,
    cwmed,
    cwmed_gradient,
    cwtm,
    cwtm_gradient,
    geometric_median,
    geometric_median_gradient,
    mean,
    mean_gradient,
)


class MeanAggregator(BaseAggregator):
    label = "mean"

    def aggregate(self, probits: np.ndarray) -> np.ndarray:
        return mean(probits)

    def score_gradient(self, probits: np.ndarray, dscores: np.ndarray) -> np.ndarray:
        return mean_gradient(np.asarray(probits, dtype=float), dscores)


class TrimmedMeanAggregator(BaseAggregator):
    """Coordinate-wise trimmed mean dropping ``f`` values on each side."""

    label = "cwtm"

    def __init__(self, f: int):
        if f < 0:
            raise ValidationError("trim count must be non-negative")
        self.f = f

    def aggregate(self, probits: np.ndarray) -> np.ndarray:
        return cwtm(probits, self.f)

    def score_gradient(self, probits: np.ndarray, dscores: np.ndarray) -> np.ndarray:
        return cwtm_gradient(np.asarray(probits, dtype=float), self.f, dscores)


class MedianAggregator(BaseAggregator):
    label = "cwmed"

    def aggregate(self, probits: np.ndarray) -> np.ndarray:
        return cwmed(probits)

    def score_gradient(self, probits: np.ndarray, dscores: np.ndarray) -> np.ndarray:
        return cwmed_gradient(np.asarray(probits, dtype=float), dscores)


class GeometricMedianAggregator(BaseAggregator):
    label = "gm"

    def __init__(self, tol: float = GM_TOL, max_iter: int = GM_MAX_ITER,
                 floor: float = GM_FLOOR):
        self.tol = tol
        self.max_iter = max_iter
        self.floor = floor

    def aggregate(self, probits: np.ndarray) -> np.ndarray:
        return geometric_median(probits, self.tol, self.max_iter, self.floor).point

    def score_gradient(self, probits: np.ndarray, dscores: np.ndarray) -> np.ndarray:
        return geometric_median_gradient(np.asarray(probits, dtype=float), dscores,
                                         self.tol, self.max_iter, self.floor)


class DeepSetAggregator(BaseAggregator):
    """DeepSet head; ``trim > 0`` swaps mean pooling for a trimmed mean (DeepSet-TM)."""

    def __init__(self, model: DeepSetModel, trim: int = 0,
                 model_name: str = DEFAULT_MODEL_NAME):
        self.model = model
        self.trim = trim
        base = "deepset-tm" if trim > 0 else "deepset"
        self.label = base if model_name == DEFAULT_MODEL_NAME else f"{base}@{model_name}"

    def aggregate(self, probits: np.ndarray) -> np.ndarray:
        return deepset_forward(self.model, probits, self.trim)[0]

    def scores(self, probits: np.ndarray) -> np.ndarray:
        return deepset_forward(self.model, probits, self.trim)[1].scores

    def score_gradient(self, probits: np.ndarray, dscores: np.ndarray) -> np.ndarray:
        _, tape = deepset_forward(self.model, probits, self.trim)
        return deepset_backward(self.model, tape, dscores)[1]

    def loss_gradient(self, probits: np.ndarray, labels: np.ndarray,
                      loss: str = "cw") -> Tuple[np.ndarray, np.ndarray]:
        probs, tape = deepset_forward(self.model, probits, self.trim)
        if loss == "cw":
            values, dscores = cw_loss(tape.scores, labels)
        elif loss == "ce":
            values, dprobs = cross_entropy(probs, labels)
            dscores = softmax_backward(probs, dprobs)
        else:
            raise ValidationError(f"unknown attack loss '{loss}'")
        return values, deepset_backward(self.model, tape, dscores)[1]


def static_rule(kind: AggregatorKind, f: int, gm_tol: float = GM_TOL,
                gm_max_iter: int = GM_MAX_ITER, gm_floor: float = GM_FLOOR) -> BaseAggregator:
    """Instantiate one of Mean, CWTM, CWMed or GM."""
    if kind.variant is AggregatorName.MEAN:
        return MeanAggregator()
    if kind.variant is AggregatorName.CWTM:
        return TrimmedMeanAggregator(f)
    if kind.variant is AggregatorName.CWMED:
        return MedianAggregator()
    if kind.variant is AggregatorName.GM:
        return GeometricMedianAggregator(gm_tol, gm_max_iter, gm_floor)
    raise ValidationError(f"'{kind.label}' is not a static aggregation rule")


def robust_argmax_classify(probits, rule: AggregatorKind, f: int) -> int:
    """Argmax of a static robust average over one panel (lowest index on ties)."""
    probits = np.asarray(probits, dtype=float)
    return int(argmax_lowest(static_rule(rule, f).aggregate(probits)))
