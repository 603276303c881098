"""
Synthetic client-probit generator with Dirichlet class-exposure heterogeneity.

Classes get random centroids in an embedding space; class affinity is the
centroid cosine similarity (also emitted as the class similarity matrix).
Each client draws a Dirichlet(alpha) exposure over classes that scales its
skill on that class, plus a per-client softmax temperature.

A fraction ``ambiguity`` of inputs look like a similar decoy class to every
client at once. Client noise is independent and averages out over the panel;
ambiguous inputs are what keep the ensemble below 100%.
"""

import logging
from typing import Tuple

import numpy as np

from ..core.models import ProbitDataset, SyntheticSpec
from ..core.rng import RngStreams
from ..core.simplex import softmax

logger = logging.getLogger(__name__)

# Decoy classes are drawn with weight exp(DECOY_SHARPNESS * similarity).
DECOY_SHARPNESS = 2.0


def class_similarity(centroids: np.ndarray) -> np.ndarray:
    """Cosine similarity of class centroids, exactly symmetric with a unit diagonal."""
    unit = centroids / np.linalg.norm(centroids, axis=1, keepdims=True)
    similarity = unit @ unit.T
    similarity = 0.5 * (similarity + similarity.T)
    np.fill_diagonal(similarity, 1.0)
    return similarity


def balanced_labels(samples: int, num_classes: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(np.arange(samples) % num_classes)


def draw_decoys(labels: np.ndarray, similarity: np.ndarray,
                rng: np.random.Generator) -> np.ndarray:
    """One decoy class per label, never the label itself, favouring similar classes."""
    weights = np.exp(DECOY_SHARPNESS * similarity)
    np.fill_diagonal(weights, 0.0)
    cdf = np.cumsum(weights[labels], axis=1)
    cdf /= cdf[:, -1:]
    draws = rng.random(len(labels))
    decoys = (draws[:, None] > cdf).sum(axis=1)
    return np.minimum(decoys, similarity.shape[0] - 1)


def synthetic_accuracy(dataset: ProbitDataset) -> Tuple[float, float]:
    """Clean ensemble (mean-probit) accuracy and mean per-client accuracy, as fractions."""
    ensemble = np.argmax(dataset.probits.mean(axis=1), axis=-1) == dataset.labels
    per_client = np.argmax(dataset.probits, axis=-1) == dataset.labels[:, None]
    return float(ensemble.mean()), float(per_client.mean())


def generate_synthetic(spec: SyntheticSpec) -> ProbitDataset:
    """Draw ``spec.samples`` panels of n client probits over K classes."""
    rng = RngStreams(spec.seed).stream("data")
    n, num_classes = spec.n, spec.K

    centroids = rng.standard_normal((num_classes, spec.embedding_dim))
    similarity = class_similarity(centroids)

    exposure = rng.dirichlet(np.full(num_classes, spec.alpha), size=n)
    strength = spec.exposure_floor + num_classes * exposure
    temperature = np.exp(spec.temperature_spread * rng.standard_normal(n))

    labels = balanced_labels(spec.samples, num_classes, rng)
    noise = rng.standard_normal((spec.samples, n, num_classes))
    ambiguous = rng.random(spec.samples) < spec.ambiguity
    seen = np.where(ambiguous, draw_decoys(labels, similarity, rng), labels)

    # (samples, n, K): skill * strength[i, seen] * affinity[seen, :]
    signal = spec.skill * strength[:, seen].T[..., None] * similarity[seen][:, None, :]
    logits = (signal + spec.noise * noise) / temperature[None, :, None]
    probits = softmax(logits)

    dataset = ProbitDataset(
        probits=probits,
        labels=labels,
        input_ids=tuple(f"syn-{i:06d}" for i in range(spec.samples)),
        similarity=similarity,
        seed=spec.seed,
    )
    ensemble, per_client = synthetic_accuracy(dataset)
    logger.info(
        f"✅ Generated {spec.samples} panels (n={n}, K={num_classes}, alpha={spec.alpha}): "
        f"ensemble accuracy {100 * ensemble:.1f}%, mean client accuracy {100 * per_client:.1f}%"
    )
    return dataset
