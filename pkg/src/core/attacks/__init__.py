"""
The attack suite: closed-form attacks plus the PGD engine.
"""

from .base import BaseAttack, adversary_mask, check_corruption, one_hot, replace_rows
from .factory import ATTACK_SUITE, create_attack, parse_attacks
from .oracle import (
    BLACK_BOX,
    WHITE_BOX,
    ClassPriorAttack,
    LeastLikelyAttack,
    LogitFlippingAttack,
    StrongestInvertedAttack,
    attack_cpa,
    attack_lma,
    attack_logit_flipping,
    attack_sia,
)
from .pgd import PgdAttack, attack_pgd_cw, sign_ascent

__all__ = [
    "ATTACK_SUITE",
    "BLACK_BOX",
    "WHITE_BOX",
    "BaseAttack",
    "ClassPriorAttack",
    "LeastLikelyAttack",
    "LogitFlippingAttack",
    "PgdAttack",
    "StrongestInvertedAttack",
    "adversary_mask",
    "attack_cpa",
    "attack_lma",
    "attack_logit_flipping",
    "attack_pgd_cw",
    "attack_sia",
    "check_corruption",
    "create_attack",
    "one_hot",
    "parse_attacks",
    "replace_rows",
    "sign_ascent",
]
