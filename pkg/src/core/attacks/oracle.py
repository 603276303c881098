"""
Closed-form attacks: logit flipping, strongest inverted attack (black-box and
white-box), least-likely-class and class-prior attacks.

White-box attacks read the clean aggregation output of the attacked rule
(the oracle); black-box attacks read only their own row and the true label.
"""

from typing import Optional, Sequence

import numpy as np

from ..aggregators.base import BaseAggregator
from ..exceptions import ValidationError
from ..models import AttackKind, CorruptedPanel, ProbitPanel
from ..simplex import softmax
from .base import BaseAttack, one_hot

BLACK_BOX = "black-box"
WHITE_BOX = "white-box"


def _exclude_label(scores: np.ndarray, labels: np.ndarray) -> np.ndarray:
    num_classes = scores.shape[-1]
    label_axis = np.arange(num_classes) == np.asarray(labels)[..., None]
    while label_axis.ndim < scores.ndim:
        label_axis = label_axis[..., None, :]
    return np.where(label_axis, -np.inf, scores)


def flipped_rows(probits: np.ndarray, amplification: float) -> np.ndarray:
    """softmax(-amplification * h) per row."""
    return softmax(-amplification * np.asarray(probits, dtype=float))


def strongest_wrong_class(scores: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """argmax over k != label, lowest index on ties."""
    return np.argmax(_exclude_label(np.asarray(scores, dtype=float), labels), axis=-1)


def least_likely_class(oracle: np.ndarray) -> np.ndarray:
    return np.argmin(np.asarray(oracle, dtype=float), axis=-1)


def least_similar_class(oracle: np.ndarray, similarity: np.ndarray) -> np.ndarray:
    """argmin_{j != k*} similarity[k*, j] with k* the oracle's argmax."""
    predicted = np.argmax(np.asarray(oracle, dtype=float), axis=-1)
    rows = np.asarray(similarity, dtype=float)[predicted]
    excluded = np.where(np.arange(rows.shape[-1]) == predicted[..., None], np.inf, rows)
    return np.argmin(excluded, axis=-1)


def _spread(targets: np.ndarray, probits: np.ndarray) -> np.ndarray:
    """One-hot rows for a per-panel target class, repeated over the client axis."""
    rows = one_hot(targets, probits.shape[-1])[..., None, :]
    return np.broadcast_to(rows, probits.shape)


def _require_oracle(target: Optional[BaseAggregator], kind: AttackKind) -> BaseAggregator:
    if target is None:
        raise ValidationError(f"{kind.value} is a white-box attack and needs the attacked aggregator")
    return target


class LogitFlippingAttack(BaseAttack):
    kind = AttackKind.LOGIT_FLIPPING

    def __init__(self, amplification: float = 2.0):
        if not amplification > 0:
            raise ValidationError("amplification must be positive")
        self.amplification = amplification

    def adversary_rows(self, probits, labels, mask, rng=None):
        return flipped_rows(probits, self.amplification)


class StrongestInvertedAttack(BaseAttack):
    """One-hot on the strongest wrong class of the own row (black-box) or the oracle."""

    def __init__(self, white_box: bool = False, target: Optional[BaseAggregator] = None):
        self.white_box = white_box
        self.kind = AttackKind.SIA_WHITE_BOX if white_box else AttackKind.SIA_BLACK_BOX
        self.target = _require_oracle(target, self.kind) if white_box else None

    def adversary_rows(self, probits, labels, mask, rng=None):
        if self.white_box:
            return _spread(strongest_wrong_class(self.target.aggregate(probits), labels), probits)
        return one_hot(strongest_wrong_class(probits, labels), probits.shape[-1])


class LeastLikelyAttack(BaseAttack):
    kind = AttackKind.LMA

    def __init__(self, target: Optional[BaseAggregator]):
        self.target = _require_oracle(target, self.kind)

    def adversary_rows(self, probits, labels, mask, rng=None):
        return _spread(least_likely_class(self.target.aggregate(probits)), probits)


class ClassPriorAttack(BaseAttack):
    kind = AttackKind.CPA

    def __init__(self, target: Optional[BaseAggregator], similarity: Optional[np.ndarray]):
        self.target = _require_oracle(target, self.kind)
        if similarity is None:
            raise ValidationError(
                "cpa needs a class similarity matrix; generate a synthetic dataset "
                "or pass --similarity <file>"
            )
        self.similarity = np.asarray(similarity, dtype=float)

    def adversary_rows(self, probits, labels, mask, rng=None):
        if self.similarity.shape != (probits.shape[-1],) * 2:
            raise ValidationError(
                f"similarity matrix is {self.similarity.shape}, panels have K={probits.shape[-1]}"
            )
        oracle = self.target.aggregate(probits)
        return _spread(least_similar_class(oracle, self.similarity), probits)


class _FixedOracle(BaseAggregator):
    """Stands in for an aggregator whose clean output is already known."""

    label = "oracle"

    def __init__(self, output):
        self.output = np.asarray(output, dtype=float)

    def aggregate(self, probits):
        return self.output

    def score_gradient(self, probits, dscores):
        raise ValidationError("a fixed oracle vector has no gradient")


def _oracle_vector(oracle, panel: ProbitPanel) -> Optional[_FixedOracle]:
    if oracle is None:
        return None
    oracle = np.asarray(oracle, dtype=float)
    if oracle.shape != (panel.num_classes,):
        raise ValidationError(f"oracle must be a {panel.num_classes}-vector, got shape {oracle.shape}")
    return _FixedOracle(oracle)


def attack_logit_flipping(panel: ProbitPanel, adversary_set: Sequence[int],
                          amplification: float = 2.0) -> CorruptedPanel:
    return LogitFlippingAttack(amplification).corrupt_panel(panel, adversary_set)


def attack_sia(panel: ProbitPanel, adversary_set: Sequence[int], mode: str = BLACK_BOX,
               oracle=None) -> CorruptedPanel:
    """``oracle`` is the clean aggregation output, required in white-box mode."""
    if mode not in (BLACK_BOX, WHITE_BOX):
        raise ValidationError(f"mode must be '{BLACK_BOX}' or '{WHITE_BOX}', got '{mode}'")
    attack = StrongestInvertedAttack(mode == WHITE_BOX, _oracle_vector(oracle, panel))
    return attack.corrupt_panel(panel, adversary_set)


def attack_lma(panel: ProbitPanel, adversary_set: Sequence[int], oracle) -> CorruptedPanel:
    return LeastLikelyAttack(_oracle_vector(oracle, panel)).corrupt_panel(panel, adversary_set)


def attack_cpa(panel: ProbitPanel, adversary_set: Sequence[int], oracle,
               similarity: Optional[np.ndarray]) -> CorruptedPanel:
    attack = ClassPriorAttack(_oracle_vector(oracle, panel), similarity)
    return attack.corrupt_panel(panel, adversary_set)
