"""
Build aggregator instances from parsed aggregator labels.
"""

import logging
from typing import Dict, Optional

from ..exceptions import MissingModelError, ValidationError
from ..models import AggregatorKind, AggregatorName
from ..nn.deepset import DeepSetModel
from .ablation import RandomizedAblationAggregator, check_inner_trim, clamp_inner_trim
from .base import BaseAggregator
from .rules import DeepSetAggregator, static_rule
from .static import GM_FLOOR, GM_MAX_ITER, GM_TOL

logger = logging.getLogger(__name__)


class AggregatorFactory:
    """Creates aggregators for a fixed adversary bound and set of named models.

    With the client count ``n`` known, randomized-ablation inner trims are
    checked against the n - f clients each ablation keeps.
    """

    def __init__(self, f: int, models: Optional[Dict[str, DeepSetModel]] = None,
                 gm_tol: float = GM_TOL, gm_max_iter: int = GM_MAX_ITER,
                 gm_floor: float = GM_FLOOR, n: Optional[int] = None):
        if f < 0:
            raise ValidationError("f must be non-negative")
        if n is not None and 2 * f >= n:
            raise ValidationError(f"need 2f < n, got n={n}, f={f}")
        self.f = f
        self.n = n
        self.models = dict(models or {})
        self.gm_tol = gm_tol
        self.gm_max_iter = gm_max_iter
        self.gm_floor = gm_floor

    @classmethod
    def from_settings(cls, settings, f: int, models: Optional[Dict[str, DeepSetModel]] = None,
                      n: Optional[int] = None) -> "AggregatorFactory":
        return cls(f, models, settings.gm_tol, settings.gm_max_iter, settings.gm_floor, n)

    def _model(self, name: str) -> DeepSetModel:
        try:
            return self.models[name]
        except KeyError:
            known = ", ".join(sorted(self.models)) or "none loaded"
            raise MissingModelError(
                f"no DeepSet model named '{name}' (available: {known}); "
                f"pass --model {name}=<checkpoint>"
            )

    def _inner_trim(self, requested: Optional[int], trim: int) -> int:
        if self.n is None:
            return trim if requested is None else requested
        if requested is None:
            return clamp_inner_trim(self.n - self.f, trim)
        return check_inner_trim(self.n - self.f, requested)

    def create(self, kind: AggregatorKind, f: Optional[int] = None) -> BaseAggregator:
        """Instantiate ``kind``; ``f`` overrides the factory's trim for inner rules."""
        trim = self.f if f is None else f
        if kind.variant is AggregatorName.RANDOMIZED_ABLATION:
            inner_trim = self._inner_trim(kind.inner_trim, trim)
            inner = self.create(kind.inner, inner_trim)
            return RandomizedAblationAggregator(inner, self.f, kind.rounds)
        if kind.variant is AggregatorName.DEEPSET:
            return DeepSetAggregator(self._model(kind.model_name), 0, kind.model_name)
        if kind.variant is AggregatorName.DEEPSET_TM:
            return DeepSetAggregator(self._model(kind.model_name), trim, kind.model_name)
        return static_rule(kind, trim, self.gm_tol, self.gm_max_iter, self.gm_floor)

    def create_all(self, labels, rounds: int = 100,
                   inner_trim: Optional[int] = None) -> Dict[str, BaseAggregator]:
        """Parse and build every label, keyed by canonical label."""
        built: Dict[str, BaseAggregator] = {}
        for text in labels:
            kind = AggregatorKind.parse(text, rounds=rounds, inner_trim=inner_trim)
            built[kind.label] = self.create(kind)
        logger.debug(f"📋 Built aggregators: {', '.join(built)}")
        return built
