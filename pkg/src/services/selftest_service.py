"""
In-process oracle and property suite behind ``rfi selftest``.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from ..core.aggregators import (
    TrimmedMeanAggregator,
    certify_batch,
    check_fk_robustness,
    cwmed,
    cwtm,
    geometric_median,
    kappa_cwtm,
    mean,
    subset_variance_slack,
)
from ..core.attacks import ATTACK_SUITE
from ..core.models import AdversaryPolicy, AttackConfig, SyntheticSpec
from ..core.nn.deepset import DeepSetModel, deepset_backward, deepset_forward
from ..core.nn.losses import cross_entropy
from ..core.rng import RngStreams
from ..core.simplex import argmax_lowest, batch_margin, softmax, softmax_backward
from .attack_service import corrupt_probits
from .synthetic_service import generate_synthetic

logger = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-4
FD_STEP = 1e-5


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_simplex(rng: np.random.Generator, shape) -> np.ndarray:
    return softmax(2.0 * rng.standard_normal(shape))


def check_kappa_oracle(rng: np.random.Generator, instances: int = 200) -> CheckResult:
    worst = 0.0
    for _ in range(instances):
        n = int(rng.choice([5, 7, 9]))
        f = int(rng.choice([1, 2]))
        d = int(rng.integers(1, 5))
        vectors = rng.standard_normal((n, d)) * rng.exponential(1.0, size=(n, 1))
        report = check_fk_robustness(lambda v: cwtm(v, f), vectors, f, kappa_cwtm(n, f))
        if not report.holds:
            return CheckResult("kappa-oracle", False,
                               f"violation n={n} f={f} d={d} witness={report.witness}")
        worst = max(worst, report.max_ratio)
    return CheckResult("kappa-oracle", True, f"{instances} instances, worst ratio {worst:.4f}")


def check_subset_variance(rng: np.random.Generator, instances: int = 1000) -> CheckResult:
    worst = math.inf
    for _ in range(instances):
        n = int(rng.integers(3, 12))
        f = int(rng.integers(0, (n - 1) // 2 + 1))
        vectors = rng.standard_normal((n, int(rng.integers(1, 6))))
        subset = np.sort(rng.choice(n, size=n - f, replace=False))
        worst = min(worst, subset_variance_slack(vectors, subset))
    return CheckResult("subset-variance", worst >= -1e-9, f"min slack {worst:.3e}")


def check_margin_sufficiency(rng: np.random.Generator, panels: int = 500,
                             corruptions: int = 50) -> CheckResult:
    n, f, num_classes = 9, 2, 5
    checked = 0
    for _ in range(panels):
        honest = random_simplex(rng, (n, num_classes))
        averaged = honest.mean(axis=0)
        half_margin = float(batch_margin(averaged)) / 2.0
        for _ in range(corruptions):
            corrupted = honest.copy()
            slots = rng.choice(n, size=f, replace=False)
            corrupted[slots] = random_simplex(rng, (f, num_classes))
            robust = cwtm(corrupted, f)
            if np.max(np.abs(robust - averaged)) < half_margin:
                checked += 1
                if argmax_lowest(robust) != argmax_lowest(averaged):
                    return CheckResult("margin-sufficiency", False, "argmax changed inside half margin")
    return CheckResult("margin-sufficiency", True, f"{checked} corruptions inside the half margin")


def check_counter_example() -> CheckResult:
    for eps in (0.2, 0.1, 0.01, 1e-4):
        u = np.array([0.5, 0.5 - eps, eps])
        v = np.array([0.5 - eps, 0.5, eps])
        if abs(np.linalg.norm(u - v) - math.sqrt(2.0) * eps) > 1e-12:
            return CheckResult("counter-example", False, f"distance mismatch at eps={eps}")
        if argmax_lowest(u) == argmax_lowest(v):
            return CheckResult("counter-example", False, f"argmax agrees at eps={eps}")
    return CheckResult("counter-example", True, "close in l2, different argmax")


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(1e-6, abs(analytic) + abs(numeric))


def gradient_check(model: DeepSetModel, probits: np.ndarray, labels: np.ndarray,
                   rng: np.random.Generator, trim: int = 0, samples: int = 10) -> float:
    """Worst relative error of parameter and input-logit gradients vs central differences."""
    logits = np.log(probits)

    def loss_at(current: DeepSetModel, current_logits: np.ndarray) -> float:
        probs, _ = deepset_forward(current, softmax(current_logits), trim)
        return float(cross_entropy(probs, labels)[0].sum())

    probs, tape = deepset_forward(model, softmax(logits), trim)
    _, dprobs = cross_entropy(probs, labels)
    grads, dprobits = deepset_backward(model, tape, softmax_backward(probs, dprobs))
    dlogits = softmax_backward(softmax(logits), dprobits)

    worst = 0.0
    params = model.parameters()
    for name, block in params.items():
        for flat in rng.choice(block.size, size=min(samples, block.size), replace=False):
            index = np.unravel_index(flat, block.shape)
            shifted = []
            for sign in (1.0, -1.0):
                trial = {k: v.copy() for k, v in params.items()}
                trial[name][index] += sign * FD_STEP
                shifted.append(loss_at(model.with_parameters(trial), logits))
            numeric = (shifted[0] - shifted[1]) / (2 * FD_STEP)
            worst = max(worst, relative_error(float(grads[name][index]), numeric))
    for flat in rng.choice(logits.size, size=min(samples, logits.size), replace=False):
        index = np.unravel_index(flat, logits.shape)
        shifted = []
        for sign in (1.0, -1.0):
            trial = logits.copy()
            trial[index] += sign * FD_STEP
            shifted.append(loss_at(model, trial))
        numeric = (shifted[0] - shifted[1]) / (2 * FD_STEP)
        worst = max(worst, relative_error(float(dlogits[index]), numeric))
    return worst


def check_gradients(rng: np.random.Generator, instances: int = 10) -> CheckResult:
    worst = 0.0
    for _ in range(instances):
        num_classes, n = int(rng.integers(2, 6)), int(rng.integers(3, 8))
        model = DeepSetModel.init(num_classes, rng, p=8, hidden=16)
        probits = random_simplex(rng, (2, n, num_classes))
        labels = rng.integers(0, num_classes, size=2)
        worst = max(worst, gradient_check(model, probits, labels, rng, trim=int(rng.integers(0, (n - 1) // 2 + 1))))
    return CheckResult("gradients", worst < GRADIENT_TOLERANCE, f"worst relative error {worst:.2e}")


def check_permutation_invariance(rng: np.random.Generator, instances: int = 20,
                                 permutations: int = 100) -> CheckResult:
    rules: List[Callable[[np.ndarray], np.ndarray]] = [
        mean, lambda v: cwtm(v, 2), cwmed, lambda v: geometric_median(v).point,
    ]
    for _ in range(instances):
        panel = random_simplex(rng, (9, 4))
        model = DeepSetModel.init(4, rng, p=8, hidden=16)
        references = [rule(panel) for rule in rules]
        deepset_reference = deepset_forward(model, panel)[0]
        for _ in range(permutations):
            shuffled = panel[rng.permutation(9)]
            for rule, reference in zip(rules, references):
                if not np.array_equal(rule(shuffled), reference):
                    return CheckResult("permutation-invariance", False, "static rule changed")
            if np.max(np.abs(deepset_forward(model, shuffled)[0] - deepset_reference)) > 1e-12:
                return CheckResult("permutation-invariance", False, "deepset output changed")
    return CheckResult("permutation-invariance", True, f"{instances * permutations} permutations")


def check_certificate_soundness(seed: int, samples: int = 300) -> CheckResult:
    spec = SyntheticSpec(n=9, K=5, alpha=5.0, samples=samples, seed=seed)
    dataset = generate_synthetic(spec)
    f = 2
    columns = certify_batch(dataset.probits, f)
    trusted = columns["certified"] & ~columns["degenerate"]
    reference = argmax_lowest(dataset.probits.mean(axis=1))
    target = TrimmedMeanAggregator(f)
    streams = RngStreams(seed)
    violations = 0
    for index, kind in enumerate(ATTACK_SUITE):
        config = AttackConfig(kind, pgd_steps=10, similarity=dataset.similarity)
        corrupted, _ = corrupt_probits(dataset.probits, dataset.labels, config, f,
                                       AdversaryPolicy.PER_QUERY,
                                       streams.stream("selftest", 1, index),
                                       streams.stream("selftest", 2, index), target)
        violations += int(np.sum((target.classify(corrupted) != reference) & trusted))
    return CheckResult("certificate-soundness", violations == 0,
                       f"{int(trusted.sum())} certified panels, {violations} violations")


def run_selftest(seed: int = 0) -> List[CheckResult]:
    """Run every check; the suite passes when every result passed."""
    streams = RngStreams(seed)
    checks = [
        lambda: check_kappa_oracle(streams.stream("selftest", 0, 1)),
        lambda: check_subset_variance(streams.stream("selftest", 0, 2)),
        lambda: check_margin_sufficiency(streams.stream("selftest", 0, 3)),
        check_counter_example,
        lambda: check_gradients(streams.stream("selftest", 0, 4)),
        lambda: check_permutation_invariance(streams.stream("selftest", 0, 5)),
        lambda: check_certificate_soundness(seed),
    ]
    results = []
    for check in checks:
        result = check()
        marker = "✅" if result.passed else "❌"
        logger.info(f"{marker} {result.name}: {result.detail}")
        results.append(result)
    return results
