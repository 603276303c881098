"""
(f, kappa)-robustness checking, the CWTM kappa constant and the margin
certificate for robust-argmax classification.
"""

import itertools
import math
from typing import Callable, Optional, Tuple

import numpy as np

from ..exceptions import EnumerationLimitError, ValidationError
from ..models import Certificate, FkRobustnessReport, ProbitPanel, SystemParams
from ..simplex import DEFAULT_TIE_QUANTUM, INFINITE_MARGIN, batch_dissimilarity, batch_margin

ENUMERATION_CAP = 12
ABSOLUTE_SLACK = 1e-12

Rule = Callable[[np.ndarray], np.ndarray]


def kappa_cwtm(n: int, f: int) -> float:
    """kappa for which CWTM with trim f is (f, kappa)-robust: 6f/(n-2f) * (1 + f/(n-2f))."""
    if f < 0 or 2 * f >= n:
        raise ValidationError(f"kappa needs 0 <= f and 2f < n, got n={n}, f={f}")
    ratio = f / (n - 2 * f)
    return 6.0 * ratio * (1.0 + ratio)


def _subset_ratio(output: np.ndarray, subset_vectors: np.ndarray,
                  kappa: float) -> Tuple[float, bool]:
    centre = subset_vectors.mean(axis=0)
    lhs = float(np.sum((output - centre) ** 2))
    spread = float(np.sum((subset_vectors - centre) ** 2))
    rhs = kappa / subset_vectors.shape[0] * spread
    holds = lhs <= rhs + ABSOLUTE_SLACK
    if rhs > 0:
        return lhs / rhs, holds
    return (0.0 if lhs <= ABSOLUTE_SLACK else math.inf), holds


def check_fk_robustness(rule: Rule, vectors, f: int, kappa: float,
                        cap: int = ENUMERATION_CAP, samples: Optional[int] = None,
                        rng: Optional[np.random.Generator] = None) -> FkRobustnessReport:
    """Check ||rule(v) - mean_S||^2 <= kappa/|S| sum_S ||v_i - mean_S||^2 for |S| = n - f.

    Enumerates every subset when n <= cap. Past the cap, pass ``samples`` and
    ``rng`` to check that many random subsets instead.
    """
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    n = vectors.shape[0]
    if f < 0 or 2 * f >= n:
        raise ValidationError(f"need 0 <= f and 2f < n, got n={n}, f={f}")
    output = np.asarray(rule(vectors), dtype=float).ravel()

    if n <= cap:
        subsets = itertools.combinations(range(n), n - f)
        sampled = False
    elif samples is not None and rng is not None:
        subsets = (tuple(sorted(rng.choice(n, size=n - f, replace=False))) for _ in range(samples))
        sampled = True
    else:
        raise EnumerationLimitError(
            f"n={n} exceeds the exhaustive enumeration cap {cap}; "
            "pass samples= and rng= to check random subsets instead"
        )

    holds = True
    worst_ratio = -math.inf
    witness: Tuple[int, ...] = ()
    checked = 0
    for subset in subsets:
        ratio, ok = _subset_ratio(output, vectors[list(subset)], kappa)
        holds = holds and ok
        checked += 1
        if ratio > worst_ratio:
            worst_ratio, witness = ratio, tuple(int(i) for i in subset)
    return FkRobustnessReport(holds=holds, max_ratio=float(worst_ratio), witness=witness,
                              subsets_checked=checked, sampled=sampled)


def certificate_bound(n: int, f: int, sigma_x: np.ndarray) -> Tuple[float, np.ndarray]:
    """kappa and the margin threshold 2(sqrt(kappa n/(n-f)) + sqrt(f/(n-f))) sigma_x."""
    kappa = kappa_cwtm(n, f)
    factor = 2.0 * (math.sqrt(kappa * n / (n - f)) + math.sqrt(f / (n - f)))
    return kappa, factor * np.asarray(sigma_x, dtype=float)


def certify_batch(probits: np.ndarray, f: int,
                  tie_quantum: float = DEFAULT_TIE_QUANTUM) -> dict:
    """Vectorized certificates for panels of shape (N, n, K); returns column arrays."""
    probits = np.asarray(probits, dtype=float)
    n = probits.shape[-2]
    averaged = probits.mean(axis=-2)
    margins = batch_margin(averaged, tie_quantum)
    sigma = batch_dissimilarity(probits)
    kappa, bound = certificate_bound(n, f, sigma)
    top = np.sort(averaged, axis=-1)
    tied_top = np.round(top[..., -1] / tie_quantum) == np.round(top[..., -2] / tie_quantum)
    degenerate = np.isinf(margins) | tied_top
    certified = margins > bound
    return {
        "margin": margins,
        "sigma_x": sigma,
        "kappa": np.full(margins.shape, kappa),
        "bound": bound,
        "certified": certified,
        "degenerate": degenerate,
    }


def certify(panel: ProbitPanel, params: SystemParams,
            tie_quantum: float = DEFAULT_TIE_QUANTUM) -> Certificate:
    """Certificate that CWTM robust-argmax is invariant to any f-corruption of the panel.

    All-equal mean probits give an infinite margin: certified, but flagged
    degenerate because the argmax is undefined.
    """
    if panel.n != params.n or panel.num_classes != params.K:
        raise ValidationError(
            f"panel shape ({panel.n}, {panel.num_classes}) does not match n={params.n}, K={params.K}"
        )
    columns = certify_batch(panel.probits[None], params.f, tie_quantum)
    margin_value = float(columns["margin"][0])
    return Certificate(
        margin_value=INFINITE_MARGIN if math.isinf(margin_value) else margin_value,
        sigma_x=float(columns["sigma_x"][0]),
        kappa=float(columns["kappa"][0]),
        bound=float(columns["bound"][0]),
        certified=bool(columns["certified"][0]),
        degenerate=bool(columns["degenerate"][0]),
    )


def subset_variance_slack(vectors, subset) -> float:
    """rhs - lhs of the subset-variance bound (non-negative when it holds).

    (1/|S|) sum_S ||v_i - mean_S||^2 <= (n/|S|) (1/n) sum_[n] ||v_i - mean||^2
    """
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    n = vectors.shape[0]
    chosen = vectors[list(subset)]
    size = chosen.shape[0]
    lhs = float(np.sum((chosen - chosen.mean(axis=0)) ** 2)) / size
    rhs = (n / size) * float(np.sum((vectors - vectors.mean(axis=0)) ** 2)) / n
    return rhs - lhs
