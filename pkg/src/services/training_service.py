"""
Adversarial training of the DeepSet aggregator and DeepSet-TM inference.

Each outer step samples a mini-batch. For each of N inner samples an adversary
count m and slot placement are drawn, the adversary logits are pushed up the
cross-entropy by S sign-gradient steps with the parameters frozen, and the
parameters then take one Adam step on the corrupted batch. With f=0 the N
Adam steps use the clean batch.
"""

import logging
import math
from typing import Tuple

import numpy as np

from ..core.aggregators.rules import DeepSetAggregator
from ..core.attacks.base import replace_rows
from ..core.attacks.pgd import sign_ascent
from ..core.exceptions import TrainingDivergedError, ValidationError
from ..core.models import ProbitDataset, TrainConfig, TrainingTrace
from ..core.nn.deepset import DeepSetModel, deepset_backward, deepset_forward
from ..core.nn.losses import cross_entropy
from ..core.nn.optim import AdamState, adam_step
from ..core.rng import RngStreams
from ..core.simplex import argmax_lowest, softmax, softmax_backward

logger = logging.getLogger(__name__)


def adversary_count_probabilities(f: int, n: int) -> np.ndarray:
    """P(m) proportional to C(n, m) for m = 1..f."""
    if f < 1 or 2 * f >= n:
        raise ValidationError(f"adversary count needs 1 <= f and 2f < n, got n={n}, f={f}")
    weights = np.array([math.comb(n, m) for m in range(1, f + 1)], dtype=float)
    return weights / weights.sum()


def sample_adversary_count(f: int, n: int, rng: np.random.Generator, size=None):
    """Draw m in {1..f} with probability C(n, m) / sum_j C(n, j)."""
    counts = rng.choice(np.arange(1, f + 1), size=size, p=adversary_count_probabilities(f, n))
    return int(counts) if size is None else counts


def batch_loss(model: DeepSetModel, probits: np.ndarray,
               labels: np.ndarray) -> Tuple[float, dict]:
    """Mean cross-entropy over the batch and its parameter gradients."""
    probs, tape = deepset_forward(model, probits)
    losses, dprobs = cross_entropy(probs, labels)
    dscores = softmax_backward(probs, dprobs) / losses.size
    grads, _ = deepset_backward(model, tape, dscores)
    return float(losses.mean()), grads


class AdversarialTrainer:
    """Owns the single mutable model and optimizer state for one training run."""

    def __init__(self, model: DeepSetModel, config: TrainConfig):
        self.model = model.copy()
        self.config = config
        self.state = AdamState()
        self.rng = RngStreams(config.seed).stream("train")
        self.trace = TrainingTrace()

    def _adversary_mask(self, batch: int, n: int) -> np.ndarray:
        f = self.config.f
        rng = self.rng
        if self.config.shared_draws:
            m = sample_adversary_count(f, n, rng)
            slots = rng.permutation(n)[n - m:]
            mask = np.zeros(n, dtype=bool)
            mask[slots] = True
            return np.broadcast_to(mask, (batch, n))
        counts = sample_adversary_count(f, n, rng, size=batch)
        order = np.argsort(rng.random((batch, n)), axis=-1)
        ranks = np.argsort(order, axis=-1)
        return ranks >= (n - counts)[:, None]

    def corrupt_batch(self, probits: np.ndarray, labels: np.ndarray) -> np.ndarray:
        """One adversarial draw for the batch against the current parameters."""
        batch, n, num_classes = probits.shape
        mask = self._adversary_mask(batch, n)
        if self.config.shared_draws:
            logits = np.broadcast_to(self.rng.standard_normal((n, num_classes)), probits.shape)
        else:
            logits = self.rng.standard_normal(probits.shape)
        target = DeepSetAggregator(self.model)
        logits = sign_ascent(target, probits, labels, mask, np.array(logits),
                             self.config.adv_steps, self.config.fgsm_step, loss="ce")
        return replace_rows(probits, mask, softmax(logits))

    def _update(self, probits: np.ndarray, labels: np.ndarray) -> float:
        loss, grads = batch_loss(self.model, probits, labels)
        if not math.isfinite(loss):
            return loss
        params, self.state = adam_step(self.model.parameters(), grads, self.state,
                                       self.config.learning_rate)
        self.model = self.model.with_parameters(params)
        return loss

    def step(self, probits: np.ndarray, labels: np.ndarray) -> Tuple[float, float]:
        """One outer step: returns (clean loss, mean adversarial loss)."""
        clean_loss, _ = batch_loss(self.model, probits, labels)
        adversarial = []
        for _ in range(self.config.samples_per_batch):
            inputs = probits if self.config.f == 0 else self.corrupt_batch(probits, labels)
            loss = self._update(inputs, labels)
            adversarial.append(loss)
            if not math.isfinite(loss):
                break
        return clean_loss, float(np.mean(adversarial))

    def train(self, dataset: ProbitDataset) -> Tuple[DeepSetModel, TrainingTrace]:
        cfg = self.config
        if len(dataset) == 0:
            raise ValidationError("cannot train on an empty dataset")
        if dataset.num_classes != self.model.num_classes:
            raise ValidationError(
                f"model has K={self.model.num_classes}, dataset has K={dataset.num_classes}"
            )
        if cfg.f and 2 * cfg.f >= dataset.n:
            raise ValidationError(f"need 2f < n, got n={dataset.n}, f={cfg.f}")
        total = cfg.total_steps(len(dataset))
        batch = min(cfg.batch_size, len(dataset))
        logger.info(
            f"🚀 Adversarial training: {total} steps, batch {batch}, f={cfg.f}, "
            f"N={cfg.samples_per_batch}, S={cfg.adv_steps}"
        )
        for step in range(1, total + 1):
            indices = np.sort(self.rng.choice(len(dataset), size=batch, replace=False))
            probits, labels = dataset.probits[indices], dataset.labels[indices]
            clean_loss, adversarial_loss = self.step(probits, labels)
            self.trace.append(step, clean_loss, adversarial_loss)
            if not (math.isfinite(clean_loss) and math.isfinite(adversarial_loss)):
                logger.error(f"❌ Training diverged at step {step}/{total}")
                raise TrainingDivergedError(f"non-finite loss at step {step}", self.trace)
            if step % cfg.log_every == 0 or step == total:
                logger.info(
                    f"📈 step {step}/{total}: clean {clean_loss:.4f}, "
                    f"adversarial {adversarial_loss:.4f}"
                )
        logger.info("✅ Training finished")
        return self.model, self.trace


def adversarial_train(model: DeepSetModel, dataset: ProbitDataset,
                      config: TrainConfig) -> Tuple[DeepSetModel, TrainingTrace]:
    """Train a copy of ``model``; f=0 is plain clean training."""
    return AdversarialTrainer(model, config).train(dataset)


def deepset_tm_classify(model: DeepSetModel, probits, f: int) -> int:
    """DeepSet prediction with trimmed-mean pooling (trim f) over the client embeddings."""
    probs, _ = deepset_forward(model, np.asarray(probits, dtype=float), trim=f)
    return int(argmax_lowest(probs))
