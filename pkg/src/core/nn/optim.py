"""
Adam optimizer over a flat name -> array parameter dictionary.
"""

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from ..exceptions import ValidationError

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    """First/second moment estimates and the step counter."""
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)
    t: int = 0


def adam_step(params: Params, grads: Params, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> Tuple[Params, AdamState]:
    """One bias-corrected Adam update; returns new parameters and state."""
    if params.keys() != grads.keys():
        raise ValidationError("parameter and gradient names differ")
    t = state.t + 1
    new_params: Params = {}
    new_m: Params = {}
    new_v: Params = {}
    for name, value in params.items():
        grad = grads[name]
        if grad.shape != value.shape:
            raise ValidationError(f"gradient shape {grad.shape} != parameter shape {value.shape} for {name}")
        m = beta1 * state.m.get(name, np.zeros_like(value)) + (1.0 - beta1) * grad
        v = beta2 * state.v.get(name, np.zeros_like(value)) + (1.0 - beta2) * grad * grad
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        new_params[name] = value - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[name] = m
        new_v[name] = v
    return new_params, AdamState(m=new_m, v=new_v, t=t)
