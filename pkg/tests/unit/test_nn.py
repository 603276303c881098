"""
Unit tests for the numpy network engine: MLP, DeepSet, losses and Adam.
"""

import math

import numpy as np
import pytest

from src.core.exceptions import ValidationError
from src.core.models import ProbitVector
from src.core.nn import (
    AdamState,
    DeepSetModel,
    Mlp2,
    adam_step,
    cross_entropy,
    cw_loss,
    deepset_forward,
    mlp2_forward,
)
from src.core.simplex import softmax
from src.services.selftest_service import GRADIENT_TOLERANCE, gradient_check


@pytest.mark.unit
class TestMlp2:
    """Test the two-layer perceptron."""

    def test_zero_weights(self):
        m = Mlp2(W1=np.zeros((4, 3)), b1=np.zeros(4), W2=np.zeros((2, 4)), b2=np.zeros(2))
        out, _ = mlp2_forward(m, np.array([1.0, -2.0, 3.0]))
        assert np.array_equal(out, np.zeros(2))

    def test_relu_kills_negatives(self):
        """A 1 x 1 identity-like net maps -3 to 0."""
        m = Mlp2(W1=[[1.0]], b1=[0.0], W2=[[1.0]], b2=[0.0])
        out, _ = mlp2_forward(m, np.array([-3.0]))
        assert out[0] == 0.0
        assert mlp2_forward(m, np.array([2.5]))[0][0] == 2.5

    def test_dimension_mismatch(self):
        m = Mlp2.init(3, 4, 2, np.random.default_rng(0))
        with pytest.raises(ValidationError):
            mlp2_forward(m, np.ones(5))

    def test_inconsistent_shapes(self):
        with pytest.raises(ValidationError):
            Mlp2(W1=np.zeros((4, 3)), b1=np.zeros(3), W2=np.zeros((2, 4)), b2=np.zeros(2))


@pytest.mark.unit
class TestDeepSet:
    """Test DeepSet forward invariances and gradients."""

    def setup_method(self):
        """Setup test fixtures."""
        self.generator = np.random.default_rng(1)
        self.model = DeepSetModel.init(4, self.generator, p=8, hidden=16)
        self.panel = softmax(2.0 * self.generator.standard_normal((7, 4)))

    def test_outputs_probabilities(self):
        probs, tape = deepset_forward(self.model, self.panel)
        assert probs.shape == (4,)
        assert probs.sum() == pytest.approx(1.0)
        assert np.allclose(softmax(tape.scores), probs)

    def test_permutation_invariance(self):
        reference, _ = deepset_forward(self.model, self.panel)
        for _ in range(100):
            shuffled = self.panel[self.generator.permutation(7)]
            assert np.max(np.abs(deepset_forward(self.model, shuffled)[0] - reference)) <= 1e-12

    def test_duplication_invariance(self):
        """Doubling every client leaves mean pooling unchanged."""
        reference, _ = deepset_forward(self.model, self.panel)
        doubled, _ = deepset_forward(self.model, np.concatenate([self.panel, self.panel]))
        assert np.max(np.abs(doubled - reference)) <= 1e-12

    def test_trim_bound(self):
        with pytest.raises(ValidationError):
            deepset_forward(self.model, self.panel, trim=4)

    def test_wrong_class_count(self):
        with pytest.raises(ValidationError):
            deepset_forward(self.model, np.full((3, 5), 0.2))

    @pytest.mark.parametrize("trim", [0, 1, 2])
    def test_gradients_match_finite_differences(self, trim):
        """Parameter and input gradients agree with central differences."""
        for _ in range(3):
            model = DeepSetModel.init(4, self.generator, p=6, hidden=10)
            probits = softmax(2.0 * self.generator.standard_normal((2, 7, 4)))
            labels = self.generator.integers(0, 4, size=2)
            worst = gradient_check(model, probits, labels, self.generator, trim=trim)
            assert worst < GRADIENT_TOLERANCE

    def test_copy_is_independent(self):
        clone = self.model.copy()
        clone.rho.W1[0, 0] += 1.0
        assert self.model.rho.W1[0, 0] != clone.rho.W1[0, 0]

    def test_mismatched_blocks(self):
        generator = np.random.default_rng(2)
        with pytest.raises(ValidationError):
            DeepSetModel(rho=Mlp2.init(4, 8, 6, generator), mu=Mlp2.init(5, 8, 4, generator))


@pytest.mark.unit
class TestLosses:
    """Test cross-entropy and the CW margin loss."""

    def test_cross_entropy_one_hot(self):
        loss, _ = cross_entropy(ProbitVector(np.array([0.0, 1.0, 0.0])), 1)
        assert float(loss) == 0.0

    def test_cross_entropy_uniform(self):
        loss, grad = cross_entropy(np.full(4, 0.25), 3)
        assert float(loss) == pytest.approx(math.log(4.0))
        assert np.allclose(grad, [0.0, 0.0, 0.0, -4.0])

    def test_cross_entropy_clamps_zero(self):
        loss, _ = cross_entropy(np.array([1.0, 0.0]), 1)
        assert float(loss) == pytest.approx(-math.log(1e-12))

    def test_cross_entropy_label_range(self):
        with pytest.raises(ValidationError):
            cross_entropy(np.full(3, 1 / 3), 3)

    def test_cw_one_hot_on_label(self):
        loss, grad = cw_loss(np.array([0.0, 1.0, 0.0]), 1)
        assert float(loss) == -1.0
        assert np.array_equal(grad, [1.0, -1.0, 0.0])

    def test_cw_uniform(self):
        loss, _ = cw_loss(np.full(5, 0.2), 2)
        assert float(loss) == 0.0

    def test_cw_batched(self):
        scores = np.array([[0.1, 0.7, 0.2], [0.5, 0.3, 0.2]])
        loss, _ = cw_loss(scores, np.array([0, 0]))
        assert np.allclose(loss, [0.6, -0.2])


@pytest.mark.unit
class TestAdam:
    """Test the Adam optimizer."""

    def test_zero_gradient(self):
        params = {"w": np.array([1.0, -2.0])}
        updated, state = adam_step(params, {"w": np.zeros(2)}, AdamState(), lr=0.1)
        assert np.array_equal(updated["w"], params["w"])
        assert state.t == 1

    def test_first_step_magnitude(self):
        """The bias-corrected first step moves by lr against the gradient sign."""
        params = {"w": np.zeros(3)}
        updated, _ = adam_step(params, {"w": np.array([3.0, -0.5, 100.0])}, AdamState(), lr=0.01)
        assert np.allclose(updated["w"], [-0.01, 0.01, -0.01], rtol=1e-6)

    def test_quadratic_bowl(self):
        """Adam drives a quadratic to its minimum."""
        target = np.array([1.0, -2.0, 3.0])
        params = {"x": np.zeros(3)}
        state = AdamState()
        for _ in range(5000):
            params, state = adam_step(params, {"x": 2.0 * (params["x"] - target)}, state, lr=0.01)
        assert np.allclose(params["x"], target, atol=0.05)

    def test_name_mismatch(self):
        with pytest.raises(ValidationError):
            adam_step({"a": np.zeros(1)}, {"b": np.zeros(1)}, AdamState(), lr=0.1)
