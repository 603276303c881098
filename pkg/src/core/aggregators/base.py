"""
Base aggregator interface.
"""

from abc import ABC, abstractmethod
from typing import Optional, Tuple

import numpy as np

from ..exceptions import ValidationError
from ..nn.losses import cross_entropy, cw_loss
from ..simplex import argmax_lowest


class BaseAggregator(ABC):
    """Maps client probits of shape (..., n, K) to a class decision."""

    label: str = "aggregator"
    deterministic: bool = True

    @abstractmethod
    def aggregate(self, probits: np.ndarray) -> np.ndarray:
        """Aggregated K-vector(s); the white-box oracle seen by adaptive attacks."""
        pass

    def scores(self, probits: np.ndarray) -> np.ndarray:
        """Scores fed to the CW loss; static rules score with their output vector."""
        return self.aggregate(probits)

    @abstractmethod
    def score_gradient(self, probits: np.ndarray, dscores: np.ndarray) -> np.ndarray:
        """Pull a gradient on ``scores`` back to the client rows."""
        pass

    def loss_gradient(self, probits: np.ndarray, labels: np.ndarray,
                      loss: str = "cw") -> Tuple[np.ndarray, np.ndarray]:
        """Attack loss at the true labels and its gradient w.r.t. the client rows."""
        if loss == "cw":
            values, dscores = cw_loss(self.scores(probits), labels)
        elif loss == "ce":
            values, dscores = cross_entropy(self.aggregate(probits), labels)
        else:
            raise ValidationError(f"unknown attack loss '{loss}'")
        return values, self.score_gradient(probits, dscores)

    def classify(self, probits: np.ndarray,
                 rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """Argmax decision with ties broken toward the lowest class index."""
        return argmax_lowest(self.aggregate(probits))

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.label})"
