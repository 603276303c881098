"""
Unit tests for the static averaging rules and robust-argmax classification.
"""

import math

import numpy as np
import pytest

from src.core.aggregators import (
    GeometricMedianAggregator,
    MeanAggregator,
    MedianAggregator,
    TrimmedMeanAggregator,
    cwmed,
    cwtm,
    geometric_median,
    geometric_median_objective,
    mean,
    robust_argmax_classify,
    static_rule,
    trimmed_mean_scalar,
)
from src.core.exceptions import ValidationError
from src.core.models import STATIC_AGGREGATORS, AggregatorKind
from src.core.simplex import softmax

EPSILON = 0.01
COUNTER_EXAMPLE = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, 0.5 - EPSILON, EPSILON]])


@pytest.mark.unit
class TestMean:
    """Test the coordinate-wise mean."""

    def test_two_one_hots(self):
        assert np.allclose(mean([[1.0, 0.0], [0.0, 1.0]]), [0.5, 0.5])

    def test_single_vector(self):
        """The mean of one row is that row."""
        row = np.array([[0.2, 0.3, 0.5]])
        assert np.array_equal(mean(row), row[0])

    def test_counter_example_panel(self):
        """Direct averaging of the three listed vectors."""
        assert np.allclose(mean(COUNTER_EXAMPLE), [0.5, (1.5 - EPSILON) / 3, EPSILON / 3])

    def test_translation_equivariance(self):
        panel = np.random.default_rng(12).standard_normal((6, 4))
        shift = np.array([3.0, -1.0, 0.5, 0.0])
        assert np.allclose(mean(panel + shift), mean(panel) + shift, atol=1e-12)


@pytest.mark.unit
class TestTrimmedMean:
    """Test scalar and coordinate-wise trimmed means."""

    def test_scalar_example(self):
        """(0,1,2,3,100) with f=1 keeps 1, 2, 3."""
        assert trimmed_mean_scalar([0, 1, 2, 3, 100], 1) == pytest.approx(2.0)

    def test_scalar_no_trim(self):
        values = [0.5, 2.0, 7.0, -1.0]
        assert trimmed_mean_scalar(values, 0) == pytest.approx(np.mean(values))

    @pytest.mark.parametrize("f", [0, 1, 2])
    def test_scalar_constant(self, f):
        assert trimmed_mean_scalar([3.25] * 5, f) == 3.25

    def test_scalar_bound(self):
        with pytest.raises(ValidationError):
            trimmed_mean_scalar([1, 2, 3, 4], 2)

    def test_cwtm_without_trim_is_mean(self):
        panel = softmax(np.random.default_rng(0).standard_normal((6, 4)))
        assert np.allclose(cwtm(panel, 0), mean(panel))

    def test_cwtm_median_survives(self):
        """n=3, f=1 on 0, 1, 10 leaves the middle value."""
        assert np.allclose(cwtm([0.0, 1.0, 10.0], 1), [1.0])

    def test_cwtm_matches_sort_and_slice(self):
        """A random 7 x 4 panel against a per-coordinate oracle."""
        panel = np.random.default_rng(1).standard_normal((7, 4))
        expected = [np.mean(sorted(panel[:, k])[2:5]) for k in range(4)]
        assert np.allclose(cwtm(panel, 2), expected, atol=1e-15)

    def test_cwtm_translation_equivariance(self):
        panel = np.random.default_rng(2).standard_normal((7, 3))
        shift = np.array([1.5, -2.0, 0.25])
        assert np.allclose(cwtm(panel + shift, 2), cwtm(panel, 2) + shift, atol=1e-12)

    def test_cwtm_gradient_matches_finite_differences(self):
        """The trimmed-mean gradient routes 1/(n-2f) to the kept ranks."""
        panel = np.random.default_rng(3).standard_normal((7, 3))
        upstream = np.array([1.0, -0.5, 2.0])
        rule = TrimmedMeanAggregator(2)
        analytic = rule.score_gradient(panel, upstream)
        numeric = np.zeros_like(panel)
        for index in np.ndindex(panel.shape):
            bumped = panel.copy()
            bumped[index] += 1e-7
            dropped = panel.copy()
            dropped[index] -= 1e-7
            numeric[index] = upstream @ (cwtm(bumped, 2) - cwtm(dropped, 2)) / 2e-7
        assert np.allclose(analytic, numeric, atol=1e-6)


@pytest.mark.unit
class TestMedian:
    """Test the coordinate-wise median."""

    def test_odd(self):
        assert np.allclose(cwmed([0.0, 1.0, 10.0]), [1.0])

    def test_even_midpoint(self):
        """Even n averages the central pair."""
        assert np.allclose(cwmed([0.0, 1.0, 2.0, 3.0]), [1.5])

    def test_matches_numpy(self):
        panel = np.random.default_rng(4).standard_normal((8, 5))
        assert np.allclose(cwmed(panel), np.median(panel, axis=0))

    def test_translation_equivariance(self):
        panel = np.random.default_rng(13).standard_normal((8, 3))
        shift = np.array([-4.0, 2.5, 0.1])
        assert np.allclose(cwmed(panel + shift), cwmed(panel) + shift, atol=1e-12)

    @pytest.mark.parametrize("n", [3, 5, 9, 17])
    def test_odd_median_is_maximal_trim(self, n):
        """For odd n the median is the trimmed mean with f = (n - 1) / 2."""
        panel = np.random.default_rng(n).standard_normal((n, 4))
        assert np.allclose(cwmed(panel), cwtm(panel, (n - 1) // 2), atol=1e-15)


@pytest.mark.unit
class TestGeometricMedian:
    """Test the Weiszfeld geometric median."""

    def test_identical_points(self):
        panel = np.tile([0.2, 0.3, 0.5], (5, 1))
        result = geometric_median(panel)
        assert np.allclose(result.point, [0.2, 0.3, 0.5])
        assert result.converged

    def test_one_dimensional_median(self):
        """Points 0, 0, 10 have their geometric median at 0."""
        result = geometric_median([0.0, 0.0, 10.0])
        assert abs(float(result.point[0])) < 1e-6

    def test_minimizes_objective(self):
        panel = softmax(np.random.default_rng(5).standard_normal((9, 4)))
        point = geometric_median(panel).point
        best = float(geometric_median_objective(point, panel))
        generator = np.random.default_rng(6)
        for _ in range(20):
            nearby = point + 1e-3 * generator.standard_normal(4)
            assert best <= float(geometric_median_objective(nearby, panel)) + 1e-12

    def test_translation_equivariance(self):
        panel = softmax(np.random.default_rng(14).standard_normal((9, 4)))
        shift = np.array([0.7, -0.3, 1.2, -2.0])
        moved = geometric_median(panel + shift).point
        assert np.allclose(moved, geometric_median(panel).point + shift, atol=1e-6)

    def test_non_converged_flag(self):
        """Exhausting max_iter returns the iterate flagged as not converged."""
        panel = np.random.default_rng(7).standard_normal((6, 3))
        result = geometric_median(panel, max_iter=1)
        assert not result.converged
        assert result.iterations == 1

    def test_batched_matches_single(self):
        panels = softmax(np.random.default_rng(8).standard_normal((3, 7, 4)))
        batched = GeometricMedianAggregator().aggregate(panels)
        for index in range(3):
            assert np.allclose(batched[index], geometric_median(panels[index]).point, atol=1e-9)


@pytest.mark.unit
class TestRobustArgmax:
    """Test argmax classification over static rules."""

    def test_mean_on_counter_example(self):
        """Coordinate 0 of the averaged counter-example panel is maximal."""
        assert robust_argmax_classify(COUNTER_EXAMPLE, AggregatorKind.parse("mean"), 0) == 0

    @pytest.mark.parametrize("variant", STATIC_AGGREGATORS)
    def test_identical_one_hots(self, variant):
        panel = np.tile([0.0, 0.0, 1.0, 0.0], (5, 1))
        assert robust_argmax_classify(panel, AggregatorKind(variant), 2) == 2

    @pytest.mark.parametrize("eps", [0.2, 0.1, 0.01, 1e-4])
    def test_close_vectors_with_different_argmax(self, eps):
        """Two vectors sqrt(2)*eps apart in l2 can disagree on the argmax."""
        u = np.array([0.5, 0.5 - eps, eps])
        v = np.array([0.5 - eps, 0.5, eps])
        assert abs(np.linalg.norm(u - v) - math.sqrt(2.0) * eps) <= 1e-12
        assert np.argmax(u) == 0 and np.argmax(v) == 1

    def test_deepset_kinds_are_not_static(self):
        with pytest.raises(ValidationError):
            static_rule(AggregatorKind.parse("deepset"), 1)

    def test_permutation_invariance_is_exact(self):
        """Every static rule returns bit-identical output under client permutations."""
        generator = np.random.default_rng(9)
        panel = softmax(2.0 * generator.standard_normal((9, 4)))
        rules = [MeanAggregator(), TrimmedMeanAggregator(2), MedianAggregator(),
                 GeometricMedianAggregator()]
        references = [rule.aggregate(panel) for rule in rules]
        for _ in range(25):
            shuffled = panel[generator.permutation(9)]
            for rule, reference in zip(rules, references):
                assert np.array_equal(rule.aggregate(shuffled), reference)
