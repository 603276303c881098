"""
Static averaging rules over client rows: mean, coordinate-wise trimmed mean,
coordinate-wise median and geometric median, plus their input gradients.

Every rule reduces the client axis (-2) of arrays shaped (..., n, d). Sums run
over client values sorted per coordinate (or rows in canonical order for the
geometric median), so outputs are bit-identical under client permutations.
"""

from typing import Tuple

import numpy as np

from ..exceptions import ValidationError
from ..models import GeometricMedianResult

GM_TOL = 1e-9
GM_MAX_ITER = 1000
GM_FLOOR = 1e-12


def _as_rows(vectors) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    if vectors.ndim < 2 or vectors.shape[-2] < 1:
        raise ValidationError("need at least one client row")
    return vectors


def _check_trim(n: int, f: int) -> None:
    if f < 0 or 2 * f >= n:
        raise ValidationError(f"trimming needs 0 <= f and 2f < n, got n={n}, f={f}")


def mean(vectors) -> np.ndarray:
    """Coordinate-wise arithmetic mean."""
    vectors = _as_rows(vectors)
    return np.sort(vectors, axis=-2).mean(axis=-2)


def trimmed_mean_scalar(values, f: int) -> float:
    """Mean of the values left after dropping the f smallest and f largest."""
    values = np.asarray(values, dtype=float).ravel()
    _check_trim(values.size, f)
    ordered = np.sort(values, kind="stable")
    return float(ordered[f:values.size - f].mean())


def cwtm(vectors, f: int) -> np.ndarray:
    """Coordinate-wise trimmed mean; the output need not lie on the simplex."""
    vectors = _as_rows(vectors)
    n = vectors.shape[-2]
    _check_trim(n, f)
    return np.sort(vectors, axis=-2)[..., f:n - f, :].mean(axis=-2)


def cwmed(vectors) -> np.ndarray:
    """Coordinate-wise median; even n takes the midpoint of the central pair."""
    vectors = _as_rows(vectors)
    n = vectors.shape[-2]
    ordered = np.sort(vectors, axis=-2)
    if n % 2 == 1:
        return ordered[..., n // 2, :]
    return 0.5 * (ordered[..., n // 2 - 1, :] + ordered[..., n // 2, :])


def _canonical_rows(vectors: np.ndarray) -> np.ndarray:
    keys = np.moveaxis(vectors, -1, 0)[::-1]
    order = np.lexsort(keys, axis=-1)
    return np.take_along_axis(vectors, order[..., None], axis=-2)


def _weiszfeld(vectors: np.ndarray, tol: float, max_iter: int,
               floor: float) -> Tuple[np.ndarray, np.ndarray, int, np.ndarray]:
    """Batched Weiszfeld iteration; returns points, converged mask, iterations, weights."""
    rows = _canonical_rows(vectors)
    point = rows.mean(axis=-2)
    converged = np.zeros(point.shape[:-1], dtype=bool)
    weights = np.ones(rows.shape[:-1])
    iterations = 0
    for iterations in range(1, max_iter + 1):
        distances = np.linalg.norm(rows - point[..., None, :], axis=-1)
        weights = 1.0 / np.maximum(distances, floor)
        candidate = (weights[..., None] * rows).sum(axis=-2) / weights.sum(axis=-1)[..., None]
        displacement = np.linalg.norm(candidate - point, axis=-1)
        point = np.where(converged[..., None], point, candidate)
        converged = converged | (displacement < tol)
        if np.all(converged):
            break
    return point, converged, iterations, weights


def geometric_median(vectors, tol: float = GM_TOL, max_iter: int = GM_MAX_ITER,
                     floor: float = GM_FLOOR) -> GeometricMedianResult:
    """Minimizer of sum_i ||v - v_i||_2 by Weiszfeld's algorithm.

    Distances are floored at ``floor`` so iterates landing on a client row stay
    finite. A result that exhausts ``max_iter`` is returned with converged=False.
    """
    vectors = _as_rows(vectors)
    point, converged, iterations, _ = _weiszfeld(vectors, tol, max_iter, floor)
    return GeometricMedianResult(point=point, converged=bool(np.all(converged)),
                                 iterations=iterations)


def geometric_median_objective(point, vectors) -> np.ndarray:
    vectors = _as_rows(vectors)
    return np.linalg.norm(vectors - np.asarray(point)[..., None, :], axis=-1).sum(axis=-1)


# Gradients w.r.t. client rows, given an upstream gradient on the output vector.

def mean_gradient(vectors: np.ndarray, dout: np.ndarray) -> np.ndarray:
    n = vectors.shape[-2]
    return np.broadcast_to(dout[..., None, :] / n, vectors.shape).copy()


def _rank_mask(vectors: np.ndarray, low: int, high: int) -> np.ndarray:
    order = np.argsort(vectors, axis=-2, kind="stable")
    ranks = np.argsort(order, axis=-2, kind="stable")
    return (ranks >= low) & (ranks < high)


def cwtm_gradient(vectors: np.ndarray, f: int, dout: np.ndarray) -> np.ndarray:
    n = vectors.shape[-2]
    mask = _rank_mask(vectors, f, n - f)
    return mask * (dout[..., None, :] / (n - 2 * f))


def cwmed_gradient(vectors: np.ndarray, dout: np.ndarray) -> np.ndarray:
    n = vectors.shape[-2]
    if n % 2 == 1:
        return _rank_mask(vectors, n // 2, n // 2 + 1) * dout[..., None, :]
    return _rank_mask(vectors, n // 2 - 1, n // 2 + 1) * (0.5 * dout[..., None, :])


def geometric_median_gradient(vectors: np.ndarray, dout: np.ndarray, tol: float = GM_TOL,
                              max_iter: int = GM_MAX_ITER, floor: float = GM_FLOOR) -> np.ndarray:
    """Gradient with the Weiszfeld weights at the solution held fixed."""
    point = _weiszfeld(vectors, tol, max_iter, floor)[0]
    distances = np.linalg.norm(vectors - point[..., None, :], axis=-1)
    weights = 1.0 / np.maximum(distances, floor)
    share = weights / weights.sum(axis=-1, keepdims=True)
    return share[..., None] * dout[..., None, :]
