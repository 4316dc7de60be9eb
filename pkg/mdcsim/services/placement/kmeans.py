from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus

from mdcsim.core.exceptions import InfeasibleKError
from mdcsim.core.exceptions import InvalidParameterError
from mdcsim.core.exceptions import PlacementInvariantError
from mdcsim.schemas.placement import KMeansResult
from mdcsim.services.geometry.map_data import PointsLike
from mdcsim.services.geometry.map_data import as_xy
from mdcsim.services.logger import log_kmeans_iteration

DEFAULT_MAX_ITER = 300
DEFAULT_TOL_FRACTION = 1e-6
# relative slack for float round-off when checking monotone inertia
_INERTIA_RTOL = 1e-9


def _assign(X: np.ndarray, w: np.ndarray, centers: np.ndarray):
    d = cdist(X, centers, "sqeuclidean")
    labels = d.argmin(axis=1)
    closest = d[np.arange(len(X)), labels]
    return labels, closest, float(np.sum(w * closest))


def _weighted_means(X: np.ndarray, w: np.ndarray, labels: np.ndarray, k: int):
    mass = np.bincount(labels, weights=w, minlength=k)
    sx = np.bincount(labels, weights=w * X[:, 0], minlength=k)
    sy = np.bincount(labels, weights=w * X[:, 1], minlength=k)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.column_stack((sx / mass, sy / mass))
    return means, mass


def _repair_empty(centers: np.ndarray, mass: np.ndarray, X: np.ndarray, w: np.ndarray,
                  closest: np.ndarray) -> np.ndarray:
    """Re-seed each empty cluster at the point with the largest weighted distance to its centroid."""
    score = w * closest
    for j in np.flatnonzero(mass == 0):
        idx = int(np.argmax(score))
        centers[j] = X[idx]
        score[idx] = -1.0
    return centers


def weighted_kmeans(points: PointsLike, weights, k: int, seed: int, tol: Optional[float] = None,
                    max_iter: int = DEFAULT_MAX_ITER) -> KMeansResult:
    """Lloyd iterations from weighted k-means++ seeds; zero-weight points are ignored."""
    if int(k) != k or k < 1:
        raise InvalidParameterError(f"k must be an integer >= 1 (got {k})")
    if max_iter < 1:
        raise InvalidParameterError(f"max_iter must be >= 1 (got {max_iter})")
    k = int(k)

    X_all = as_xy(points)
    w_all = np.asarray(weights, dtype=float).reshape(-1)
    if len(w_all) != len(X_all):
        raise InvalidParameterError("points and weights differ in length")
    if np.any(w_all < 0) or not np.all(np.isfinite(w_all)):
        raise InvalidParameterError("weights must be finite and non-negative")

    positive = w_all > 0
    if int(positive.sum()) < k:
        raise InfeasibleKError(f"k={k} needs at least {k} positively weighted points, got {int(positive.sum())}")
    X = X_all[positive]
    w = w_all[positive]

    if tol is None:
        span = X.max(axis=0) - X.min(axis=0)
        tol = DEFAULT_TOL_FRACTION * max(float(np.hypot(*span)), 1.0)

    centers, _ = kmeans_plusplus(X, n_clusters=k, sample_weight=w, random_state=int(seed))
    centers = np.asarray(centers, dtype=float)

    history = []
    n_iter = 0
    for n_iter in range(1, int(max_iter) + 1):
        labels, closest, inertia = _assign(X, w, centers)
        if history and inertia > history[-1] * (1.0 + _INERTIA_RTOL) + 1e-12:
            raise PlacementInvariantError(
                f"k-means inertia increased at iteration {n_iter}: {history[-1]:.9g} -> {inertia:.9g}"
            )
        history.append(inertia)

        means, mass = _weighted_means(X, w, labels, k)
        means = _repair_empty(means, mass, X, w, closest)
        shift = float(np.max(np.hypot(*(means - centers).T)))
        log_kmeans_iteration(k, n_iter, inertia, shift)
        centers = means
        if shift < tol:
            break

    labels, _, inertia = _assign(X, w, centers)
    if inertia > history[-1] * (1.0 + _INERTIA_RTOL) + 1e-12:
        raise PlacementInvariantError(f"k-means inertia increased after the final update: {inertia:.9g}")
    history.append(inertia)

    full_labels = np.full(len(X_all), -1, dtype=np.int64)
    full_labels[positive] = labels
    return KMeansResult(centroids=centers, labels=full_labels, inertia_history=history, n_iter=n_iter)
