"""
Minimal numpy neural-network engine for the DeepSet aggregator.
"""

from .deepset import DeepSetModel, Tape, deepset_backward, deepset_forward
from .layers import Mlp2, Mlp2Tape, mlp2_backward, mlp2_forward
from .losses import cross_entropy, cw_loss
from .optim import AdamState, adam_step

__all__ = [
    "AdamState",
    "DeepSetModel",
    "Mlp2",
    "Mlp2Tape",
    "Tape",
    "adam_step",
    "cross_entropy",
    "cw_loss",
    "deepset_backward",
    "deepset_forward",
    "mlp2_backward",
    "mlp2_forward",
]
