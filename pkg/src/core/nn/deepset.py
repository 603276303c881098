"""
DeepSet aggregator: mu(pool_i rho(z_i)) followed by a softmax head.

Pooling is the plain mean during training and may be replaced by a
coordinate-wise trimmed mean at inference (DeepSet-TM).
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ..exceptions import ValidationError
from ..simplex import softmax
from .layers import Mlp2, Mlp2Tape, mlp2_backward, mlp2_forward


@dataclass
class DeepSetModel:
    """rho: K -> p embedding, mu: p -> K scores."""
    rho: Mlp2
    mu: Mlp2

    def __post_init__(self):
        if self.rho.out_features != self.mu.in_features:
            raise ValidationError("rho output width must equal mu input width")
        if self.rho.in_features != self.mu.out_features:
            raise ValidationError("rho input width must equal mu output width (K)")

    @property
    def p(self) -> int:
        return self.rho.out_features

    @property
    def num_classes(self) -> int:
        return self.rho.in_features

    @property
    def hidden(self) -> int:
        return self.rho.hidden

    @classmethod
    def init(cls, num_classes: int, rng: np.random.Generator, p: int = 64,
             hidden: int = 128) -> "DeepSetModel":
        return cls(
            rho=Mlp2.init(num_classes, hidden, p, rng),
            mu=Mlp2.init(p, hidden, num_classes, rng),
        )

    def parameters(self) -> Dict[str, np.ndarray]:
        params = self.rho.parameters("rho.")
        params.update(self.mu.parameters("mu."))
        return params

    def with_parameters(self, params: Dict[str, np.ndarray]) -> "DeepSetModel":
        return DeepSetModel(
            rho=Mlp2.from_parameters(params, "rho."),
            mu=Mlp2.from_parameters(params, "mu."),
        )

    def copy(self) -> "DeepSetModel":
        return self.with_parameters({k: v.copy() for k, v in self.parameters().items()})


@dataclass
class Tape:
    """Forward record of one DeepSet pass; one tape serves one backward call."""
    rho_tape: Mlp2Tape
    mu_tape: Mlp2Tape
    keep_mask: Optional[np.ndarray]
    n: int
    trim: int
    scores: np.ndarray
    probs: np.ndarray


def _trimmed_pool(embeddings: np.ndarray, trim: int) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    n = embeddings.shape[-2]
    pooled = np.sort(embeddings, axis=-2)[..., trim:n - trim, :].mean(axis=-2)
    if trim == 0:
        return pooled, None
    order = np.argsort(embeddings, axis=-2, kind="stable")
    ranks = np.argsort(order, axis=-2, kind="stable")
    keep = (ranks >= trim) & (ranks < n - trim)
    return pooled, keep


def deepset_forward(model: DeepSetModel, probits: np.ndarray,
                    trim: int = 0) -> Tuple[np.ndarray, Tape]:
    """Class probabilities for panels of shape (..., n, K)."""
    probits = np.asarray(probits, dtype=float)
    if probits.ndim < 2 or probits.shape[-1] != model.num_classes:
        raise ValidationError(
            f"expected panels of shape (..., n, {model.num_classes}), got {probits.shape}"
        )
    n = probits.shape[-2]
    if trim < 0 or 2 * trim >= n:
        raise ValidationError(f"pooling trim must satisfy 0 <= 2*trim < n, got trim={trim}, n={n}")
    embeddings, rho_tape = mlp2_forward(model.rho, probits)
    pooled, keep = _trimmed_pool(embeddings, trim)
    scores, mu_tape = mlp2_forward(model.mu, pooled)
    probs = softmax(scores)
    tape = Tape(rho_tape=rho_tape, mu_tape=mu_tape, keep_mask=keep, n=n, trim=trim,
                scores=scores, probs=probs)
    return probs, tape


def deepset_backward(model: DeepSetModel, tape: Tape,
                     dscores: np.ndarray) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
    """Gradients of a loss w.r.t. parameters and input probits, given d loss / d scores."""
    mu_grads, dpooled = mlp2_backward(model.mu, tape.mu_tape, dscores)
    kept = tape.n - 2 * tape.trim
    dembeddings = np.broadcast_to(
        dpooled[..., None, :] / kept, tape.rho_tape.pre_activation.shape[:-1] + (model.p,)
    )
    if tape.keep_mask is not None:
        dembeddings = dembeddings * tape.keep_mask
    rho_grads, dprobits = mlp2_backward(model.rho, tape.rho_tape, dembeddings)
    grads = {f"rho.{k}": v for k, v in rho_grads.items()}
    grads.update({f"mu.{k}": v for k, v in mu_grads.items()})
    return grads, dprobits
