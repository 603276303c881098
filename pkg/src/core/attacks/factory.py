"""
Attack construction from an AttackConfig.
"""

from typing import Optional

from ..aggregators.base import BaseAggregator
from ..exceptions import ValidationError
from ..models import AttackConfig, AttackKind
from .base import BaseAttack
from .oracle import ClassPriorAttack, LeastLikelyAttack, LogitFlippingAttack, StrongestInvertedAttack
from .pgd import PgdAttack

ATTACK_SUITE = tuple(AttackKind)


def parse_attacks(text: str):
    """``all`` or a comma-separated list of attack names, in suite order."""
    text = text.strip().lower()
    if text in ("", "all"):
        return ATTACK_SUITE
    names = [part.strip() for part in text.split(",") if part.strip()]
    kinds = []
    for name in names:
        try:
            kinds.append(AttackKind(name))
        except ValueError:
            known = ", ".join(k.value for k in ATTACK_SUITE)
            raise ValidationError(f"unknown attack '{name}' (known: {known}, all)")
    return tuple(k for k in ATTACK_SUITE if k in kinds)


def create_attack(config: AttackConfig, target: Optional[BaseAggregator] = None) -> BaseAttack:
    """Build the attack; white-box kinds need ``target``."""
    if config.kind is AttackKind.LOGIT_FLIPPING:
        return LogitFlippingAttack(config.amplification)
    if config.kind is AttackKind.SIA_BLACK_BOX:
        return StrongestInvertedAttack(white_box=False)
    if config.kind is AttackKind.SIA_WHITE_BOX:
        return StrongestInvertedAttack(white_box=True, target=target)
    if config.kind is AttackKind.LMA:
        return LeastLikelyAttack(target)
    if config.kind is AttackKind.CPA:
        return ClassPriorAttack(target, config.similarity)
    return PgdAttack(target, config.pgd_steps, config.pgd_step_size, config.pgd_loss)
