"""
Aggregation rules, robustness checks and the margin certificate.
"""

from .ablation import RandomizedAblationAggregator, ablation_votes, randomized_ablation_classify
from .base import BaseAggregator
from .factory import AggregatorFactory
from .robustness import (
    certificate_bound,
    certify,
    certify_batch,
    check_fk_robustness,
    kappa_cwtm,
    subset_variance_slack,
)
from .rules import (
    DeepSetAggregator,
    GeometricMedianAggregator,
    MeanAggregator,
    MedianAggregator,
    TrimmedMeanAggregator,
    robust_argmax_classify,
    static_rule,
)
from .static import cwmed, cwtm, geometric_median, geometric_median_objective, mean, trimmed_mean_scalar

__all__ = [
    "AggregatorFactory",
    "BaseAggregator",
    "DeepSetAggregator",
    "GeometricMedianAggregator",
    "MeanAggregator",
    "MedianAggregator",
    "RandomizedAblationAggregator",
    "TrimmedMeanAggregator",
    "ablation_votes",
    "certificate_bound",
    "certify",
    "certify_batch",
    "check_fk_robustness",
    "cwmed",
    "cwtm",
    "geometric_median",
    "geometric_median_objective",
    "kappa_cwtm",
    "mean",
    "randomized_ablation_classify",
    "robust_argmax_classify",
    "static_rule",
    "subset_variance_slack",
    "trimmed_mean_scalar",
]
