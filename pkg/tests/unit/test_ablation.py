"""
Unit tests for randomized ablation.
"""

import numpy as np
import pytest

from src.core.aggregators import (
    AggregatorFactory,
    MeanAggregator,
    RandomizedAblationAggregator,
    TrimmedMeanAggregator,
    ablation_votes,
    randomized_ablation_classify,
    robust_argmax_classify,
)
from src.core.exceptions import ValidationError
from src.core.models import STATIC_AGGREGATORS, AggregatorKind
from src.core.simplex import softmax


@pytest.mark.unit
class TestRandomizedAblation:
    """Test drop-f majority voting."""

    def setup_method(self):
        """Setup test fixtures."""
        self.panel = softmax(2.0 * np.random.default_rng(0).standard_normal((9, 5)))

    @pytest.mark.parametrize("variant", STATIC_AGGREGATORS)
    def test_single_round_without_drops(self, variant):
        """rounds=1 and f=0 reproduce the inner decision."""
        kind = AggregatorKind(variant)
        decision = randomized_ablation_classify(self.panel, kind, 0, 1, np.random.default_rng(1))
        assert decision == robust_argmax_classify(self.panel, kind, 0)

    @pytest.mark.parametrize("rounds,f", [(1, 1), (7, 2), (30, 4)])
    def test_identical_clients(self, rounds, f):
        """Identical clients make every ablation agree with the inner rule."""
        panel = np.tile([0.1, 0.2, 0.5, 0.1, 0.1], (9, 1))
        kind = AggregatorKind.parse("cwmed")
        assert randomized_ablation_classify(panel, kind, f, rounds, np.random.default_rng(2)) == 2

    def test_votes_count_rounds(self):
        panels = softmax(np.random.default_rng(3).standard_normal((4, 9, 5)))
        votes = ablation_votes(panels, MeanAggregator(), 2, 11, np.random.default_rng(4))
        assert votes.shape == (4, 5)
        assert np.all(votes.sum(axis=-1) == 11)

    def test_same_stream_same_decision(self):
        rule = RandomizedAblationAggregator(TrimmedMeanAggregator(1), 2, 15)
        first = rule.classify(self.panel, np.random.default_rng(5))
        second = rule.classify(self.panel, np.random.default_rng(5))
        assert first == second

    def test_needs_random_stream(self):
        rule = RandomizedAblationAggregator(MeanAggregator(), 2, 5)
        assert not rule.deterministic
        with pytest.raises(ValidationError):
            rule.classify(self.panel)

    def test_oracle_is_inner_on_full_panel(self):
        """White-box attacks see the inner rule applied to all clients."""
        rule = RandomizedAblationAggregator(TrimmedMeanAggregator(2), 2, 5)
        assert np.array_equal(rule.aggregate(self.panel), TrimmedMeanAggregator(2).aggregate(self.panel))
        assert rule.label == "ra-cwtm"

    def test_invalid_rounds(self):
        with pytest.raises(ValidationError):
            RandomizedAblationAggregator(MeanAggregator(), 1, 0)

    def test_too_many_drops(self):
        with pytest.raises(ValidationError):
            ablation_votes(self.panel, MeanAggregator(), 5, 3, np.random.default_rng(6))


@pytest.mark.unit
class TestAblationInnerTrim:
    """Test the inner trim against the n - f clients each ablation keeps."""

    def setup_method(self):
        """Setup test fixtures."""
        self.panel = softmax(np.random.default_rng(8).standard_normal((5, 3)))

    def test_default_trim_is_lowered(self):
        """n=5, f=2 keeps 3 clients, so CWTM trims 1 per side instead of 2."""
        kind = AggregatorKind.parse("cwtm")
        decision = randomized_ablation_classify(self.panel, kind, 2, 3, np.random.default_rng(9))
        expected = randomized_ablation_classify(self.panel, kind, 2, 3, np.random.default_rng(9),
                                                inner_trim=1)
        assert decision == expected
        assert 0 <= decision < 3

    def test_explicit_trim_too_large(self):
        with pytest.raises(ValidationError, match="too large"):
            randomized_ablation_classify(self.panel, AggregatorKind.parse("cwtm"), 2, 3,
                                         np.random.default_rng(9), inner_trim=2)

    def test_factory_lowers_default_trim(self):
        rule = AggregatorFactory(4, n=9).create(AggregatorKind.parse("ra-cwtm"))
        assert rule.inner.f == 2
        assert AggregatorFactory(1, n=9).create(AggregatorKind.parse("ra-cwtm")).inner.f == 1

    def test_factory_rejects_explicit_trim(self):
        kind = AggregatorKind.parse("ra-cwtm", inner_trim=3)
        with pytest.raises(ValidationError, match="at most 2"):
            AggregatorFactory(4, n=9).create(kind)

    def test_factory_without_client_count(self):
        """Without n the requested trim is used as given."""
        assert AggregatorFactory(4).create(AggregatorKind.parse("ra-cwtm")).inner.f == 4
