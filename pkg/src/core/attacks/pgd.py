"""
Projected sign-gradient attack in logit space against any differentiable aggregator.

Adversary rows are parameterized as softmax(v). Each step evaluates the attack
loss of the target at the true labels and moves v by step_size * sign(grad).
"""

import logging
from typing import Optional, Sequence, Union

import numpy as np

from ..aggregators.base import BaseAggregator
from ..aggregators.rules import DeepSetAggregator
from ..exceptions import AttackError, ValidationError
from ..models import AttackKind, CorruptedPanel, ProbitPanel
from ..nn.deepset import DeepSetModel
from ..simplex import softmax, softmax_backward
from .base import BaseAttack, adversary_mask, replace_rows

logger = logging.getLogger(__name__)


def sign_ascent(target: BaseAggregator, probits: np.ndarray, labels: np.ndarray,
                mask: np.ndarray, logits: np.ndarray, steps: int, step_size: float,
                loss: str = "cw") -> np.ndarray:
    """Run ``steps`` sign-ascent updates on the masked logits; returns the final logits.

    A panel whose gradient turns non-finite keeps its current logits for the
    remaining steps; the other panels continue.
    """
    mask = np.broadcast_to(mask, probits.shape[:-1])
    active = np.ones(probits.shape[:-2], dtype=bool)
    for step in range(steps):
        rows = softmax(logits)
        panel = replace_rows(probits, mask, rows)
        _, dpanel = target.loss_gradient(panel, labels, loss)
        dlogits = softmax_backward(rows, dpanel)
        finite = np.all(np.isfinite(dlogits), axis=(-2, -1))
        frozen = active & ~finite
        if np.any(frozen):
            bad = np.flatnonzero(frozen)
            logger.warning(
                f"⚠️ Non-finite attack gradient at step {step + 1}/{steps} against {target.label}; "
                f"freezing panel(s) {bad[:10].tolist()}"
            )
            active = active & finite
            if not np.any(active):
                break
        direction = np.where(np.isfinite(dlogits), np.sign(dlogits), 0.0)
        moving = mask & active[..., None]
        logits = logits + step_size * direction * moving[..., None]
    return logits


class PgdAttack(BaseAttack):
    """Sign-gradient ascent on the CW (default) or cross-entropy loss of ``target``."""

    kind = AttackKind.PGD_CW

    def __init__(self, target: Optional[BaseAggregator], steps: int = 50,
                 step_size: float = 0.05, loss: str = "cw"):
        if target is None:
            raise ValidationError("pgd-cw is a white-box attack and needs the attacked aggregator")
        if steps < 0:
            raise ValidationError("pgd steps must be non-negative")
        if loss not in ("cw", "ce"):
            raise ValidationError(f"unknown attack loss '{loss}'")
        self.target = target
        self.steps = steps
        self.step_size = step_size
        self.loss = loss

    def adversary_rows(self, probits, labels, mask, rng=None):
        if rng is None:
            raise ValidationError("pgd needs an explicit random stream for its initialization")
        logits = rng.standard_normal(probits.shape)
        logits = sign_ascent(self.target, probits, labels, mask, logits,
                             self.steps, self.step_size, self.loss)
        rows = softmax(logits)
        if not np.all(np.isfinite(rows)):
            raise AttackError(f"non-finite adversary rows against {self.target.label}")
        return rows


def attack_pgd_cw(panel: ProbitPanel, adversary_set: Sequence[int],
                  model: Union[DeepSetModel, BaseAggregator], steps: int, step_size: float,
                  rng: np.random.Generator, trim: int = 0, loss: str = "cw") -> CorruptedPanel:
    """PGD on one panel; a bare DeepSet model is attacked with pooling trim ``trim``."""
    target = DeepSetAggregator(model, trim) if isinstance(model, DeepSetModel) else model
    attack = PgdAttack(target, steps, step_size, loss)
    mask = adversary_mask(adversary_set, panel.n)
    if mask.any():
        logger.debug(f"🎯 PGD on panel {panel.input_id or '?'}: {int(mask.sum())} adversaries, S={steps}")
    return attack.corrupt_panel(panel, adversary_set, rng)
