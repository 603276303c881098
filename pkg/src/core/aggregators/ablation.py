"""
Randomized ablation: drop f random clients, classify the rest, majority-vote.
"""

import logging
from typing import Optional, Union

import numpy as np

from ..exceptions import ValidationError
from ..models import AggregatorKind
from ..simplex import argmax_lowest
from .base import BaseAggregator
from .rules import static_rule

logger = logging.getLogger(__name__)


def clamp_inner_trim(sub_panel: int, trim: int) -> int:
    """Largest per-side trim up to ``trim`` that a ``sub_panel``-client ablation admits."""
    admissible = (sub_panel - 1) // 2
    if trim > admissible:
        logger.warning(
            f"⚠️ Ablated panels keep {sub_panel} clients; inner trim lowered from {trim} to {admissible}"
        )
        return admissible
    return trim


def check_inner_trim(sub_panel: int, trim: int) -> int:
    if trim < 0 or 2 * trim >= sub_panel:
        raise ValidationError(
            f"inner trim {trim} is too large for ablated panels of {sub_panel} clients; "
            f"use at most {(sub_panel - 1) // 2}"
        )
    return trim


def ablation_votes(probits: np.ndarray, inner: BaseAggregator, f: int, rounds: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Vote counts of shape (..., K) over ``rounds`` random (n - f)-subsets."""
    probits = np.asarray(probits, dtype=float)
    n, num_classes = probits.shape[-2], probits.shape[-1]
    if rounds < 1:
        raise ValidationError("randomized ablation needs at least one round")
    if f < 0 or 2 * f >= n:
        raise ValidationError(f"randomized ablation needs 0 <= f and 2f < n, got n={n}, f={f}")
    batch_shape = probits.shape[:-2]
    votes = np.zeros(batch_shape + (num_classes,), dtype=np.int64)
    for _ in range(rounds):
        keys = rng.random(batch_shape + (n,))
        keep = np.sort(np.argsort(keys, axis=-1)[..., : n - f], axis=-1)
        subset = np.take_along_axis(probits, keep[..., None], axis=-2)
        decision = np.asarray(inner.classify(subset))
        np.put_along_axis(
            votes,
            decision[..., None],
            np.take_along_axis(votes, decision[..., None], axis=-1) + 1,
            axis=-1,
        )
    return votes


class RandomizedAblationAggregator(BaseAggregator):
    """Majority vote of ``inner`` over random client ablations.

    The white-box oracle and attack gradients come from ``inner`` applied to the
    full panel; only the decision is randomized.
    """

    deterministic = False

    def __init__(self, inner: BaseAggregator, f: int, rounds: int):
        if rounds < 1:
            raise ValidationError("randomized ablation needs at least one round")
        self.inner = inner
        self.f = f
        self.rounds = rounds
        self.label = f"ra-{inner.label}"

    def aggregate(self, probits: np.ndarray) -> np.ndarray:
        return self.inner.aggregate(probits)

    def scores(self, probits: np.ndarray) -> np.ndarray:
        return self.inner.scores(probits)

    def score_gradient(self, probits: np.ndarray, dscores: np.ndarray) -> np.ndarray:
        return self.inner.score_gradient(probits, dscores)

    def loss_gradient(self, probits, labels, loss: str = "cw"):
        return self.inner.loss_gradient(probits, labels, loss)

    def classify(self, probits: np.ndarray,
                 rng: Optional[np.random.Generator] = None) -> np.ndarray:
        if rng is None:
            raise ValidationError("randomized ablation needs an explicit random stream")
        return argmax_lowest(ablation_votes(probits, self.inner, self.f, self.rounds, rng))


def randomized_ablation_classify(probits, inner: Union[AggregatorKind, BaseAggregator], f: int,
                                 rounds: int, rng: np.random.Generator,
                                 inner_trim: Optional[int] = None) -> int:
    """Single-panel randomized ablation decision; vote ties go to the lowest class.

    A static ``inner`` kind trims ``inner_trim`` clients per side. The default is
    f, lowered to what the n - f kept clients admit.
    """
    probits = np.asarray(probits, dtype=float)
    n = probits.shape[-2]
    if f < 0 or 2 * f >= n:
        raise ValidationError(f"randomized ablation needs 0 <= f and 2f < n, got n={n}, f={f}")
    if isinstance(inner, AggregatorKind):
        if inner_trim is None:
            trim = clamp_inner_trim(n - f, f)
        else:
            trim = check_inner_trim(n - f, inner_trim)
        inner = static_rule(inner, trim)
    return int(RandomizedAblationAggregator(inner, f, rounds).classify(probits, rng))
