"""
Dataset-level attack application: adversary-set policies and corruption of
every panel in a dataset.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from ..core.aggregators.base import BaseAggregator
from ..core.attacks import check_corruption, create_attack
from ..core.exceptions import ValidationError
from ..core.models import AdversaryPolicy, AttackConfig, ProbitDataset

logger = logging.getLogger(__name__)


def draw_adversary_masks(count: int, n: int, f: int, policy: AdversaryPolicy,
                         rng: np.random.Generator) -> np.ndarray:
    """Boolean masks of shape (count, n) with exactly f adversaries per panel.

    FIXED draws one set shared by every panel; PER_QUERY draws a fresh set per panel.
    """
    if f < 0 or 2 * f >= n:
        raise ValidationError(f"need 0 <= f and 2f < n, got n={n}, f={f}")
    masks = np.zeros((count, n), dtype=bool)
    if f == 0:
        return masks
    if policy is AdversaryPolicy.FIXED:
        chosen = rng.choice(n, size=f, replace=False)
        masks[:, chosen] = True
        return masks
    chosen = np.argsort(rng.random((count, n)), axis=-1)[:, :f]
    np.put_along_axis(masks, chosen, True, axis=-1)
    return masks


def corrupt_probits(probits: np.ndarray, labels: np.ndarray, config: AttackConfig, f: int,
                    policy: AdversaryPolicy, adversary_rng: np.random.Generator,
                    attack_rng: Optional[np.random.Generator] = None,
                    target: Optional[BaseAggregator] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Corrupted copy of stacked panels (N, n, K) plus the adversary masks used."""
    probits = np.asarray(probits, dtype=float)
    count, n, _ = probits.shape
    masks = draw_adversary_masks(count, n, f, policy, adversary_rng)
    if f == 0:
        return probits.copy(), masks
    attack = create_attack(config, target)
    corrupted = attack.corrupt(probits, labels, masks, attack_rng)
    check_corruption(probits, corrupted, masks, f)
    return corrupted, masks


def attacked_dataset(dataset: ProbitDataset, config: AttackConfig, f: int,
                     policy: AdversaryPolicy, rng: np.random.Generator,
                     target: Optional[BaseAggregator] = None) -> ProbitDataset:
    """Apply one attack to every panel; white-box attacks read ``target``.

    Adversary sets are drawn from ``rng`` first, then the attack's own
    randomness (PGD initialization) continues on the same stream.
    """
    logger.info(
        f"🎯 Attacking {len(dataset)} panels with {config.kind.value} "
        f"(f={f}, policy={policy.value})"
    )
    corrupted, _ = corrupt_probits(dataset.probits, dataset.labels, config, f, policy,
                                   rng, rng, target)
    return dataset.with_probits(corrupted)
