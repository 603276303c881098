"""
Two-layer ReLU perceptron with explicit forward tape and backward pass.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from ..exceptions import ValidationError


@dataclass
class Mlp2:
    """W2 . relu(W1 . x + b1) + b2, applied along the last axis."""
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        self.W1 = np.asarray(self.W1, dtype=float)
        self.b1 = np.asarray(self.b1, dtype=float)
        self.W2 = np.asarray(self.W2, dtype=float)
        self.b2 = np.asarray(self.b2, dtype=float)
        hidden, _ = self.W1.shape
        out, hidden2 = self.W2.shape
        if self.b1.shape != (hidden,) or hidden2 != hidden or self.b2.shape != (out,):
            raise ValidationError(
                f"inconsistent MLP shapes: W1 {self.W1.shape}, b1 {self.b1.shape}, "
                f"W2 {self.W2.shape}, b2 {self.b2.shape}"
            )
        for name, block in self.parameters().items():
            if not np.all(np.isfinite(block)):
                raise ValidationError(f"non-finite entries in {name}")

    @property
    def in_features(self) -> int:
        return int(self.W1.shape[1])

    @property
    def hidden(self) -> int:
        return int(self.W1.shape[0])

    @property
    def out_features(self) -> int:
        return int(self.W2.shape[0])

    @classmethod
    def init(cls, in_features: int, hidden: int, out_features: int,
             rng: np.random.Generator) -> "Mlp2":
        """Uniform He-style fan-in initialization, zero biases."""
        bound1 = np.sqrt(6.0 / in_features)
        bound2 = np.sqrt(6.0 / hidden)
        return cls(
            W1=rng.uniform(-bound1, bound1, size=(hidden, in_features)),
            b1=np.zeros(hidden),
            W2=rng.uniform(-bound2, bound2, size=(out_features, hidden)),
            b2=np.zeros(out_features),
        )

    def parameters(self, prefix: str = "") -> Dict[str, np.ndarray]:
        return {
            f"{prefix}W1": self.W1,
            f"{prefix}b1": self.b1,
            f"{prefix}W2": self.W2,
            f"{prefix}b2": self.b2,
        }

    @classmethod
    def from_parameters(cls, params: Dict[str, np.ndarray], prefix: str = "") -> "Mlp2":
        return cls(
            W1=params[f"{prefix}W1"],
            b1=params[f"{prefix}b1"],
            W2=params[f"{prefix}W2"],
            b2=params[f"{prefix}b2"],
        )


@dataclass
class Mlp2Tape:
    """Forward values needed by ``mlp2_backward``."""
    inputs: np.ndarray
    pre_activation: np.ndarray
    activation: np.ndarray


def mlp2_forward(m: Mlp2, x: np.ndarray) -> Tuple[np.ndarray, Mlp2Tape]:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m.in_features:
        raise ValidationError(f"expected {m.in_features} input features, got {x.shape[-1]}")
    pre = x @ m.W1.T + m.b1
    act = np.maximum(pre, 0.0)
    out = act @ m.W2.T + m.b2
    return out, Mlp2Tape(inputs=x, pre_activation=pre, activation=act)


def mlp2_backward(m: Mlp2, tape: Mlp2Tape,
                  dout: np.ndarray) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
    """Gradients w.r.t. parameters (summed over batch axes) and inputs."""
    dout = np.asarray(dout, dtype=float)
    d_out_flat = dout.reshape(-1, m.out_features)
    act_flat = tape.activation.reshape(-1, m.hidden)
    dact = dout @ m.W2
    dpre = dact * (tape.pre_activation > 0.0)
    dpre_flat = dpre.reshape(-1, m.hidden)
    x_flat = tape.inputs.reshape(-1, m.in_features)
    grads = {
        "W1": dpre_flat.T @ x_flat,
        "b1": dpre_flat.sum(axis=0),
        "W2": d_out_flat.T @ act_flat,
        "b2": d_out_flat.sum(axis=0),
    }
    dx = dpre @ m.W1
    return grads, dx
