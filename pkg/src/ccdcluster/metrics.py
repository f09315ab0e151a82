"""Clustering quality measures: average silhouette and the Rand index."""

from __future__ import annotations

from typing import Optional

import numpy as np

NOISE_LABEL = -1


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Full Euclidean distance matrix."""
    X = np.asarray(points, dtype=float)
    diffs = X[:, None, :] - X[None, :, :]
    return np.sqrt((diffs**2).sum(axis=-1))


def silhouette_avg(points: np.ndarray, labels, *, dists: Optional[np.ndarray] = None) -> float:
    """Average silhouette of a labeling under Euclidean distance.

    Per point, a is the mean distance to the rest of its own cluster and b
    the smallest mean distance to any other cluster; the silhouette is
    (b - a) / max(a, b).  Members of singleton clusters contribute 0, and a
    labeling with a single cluster scores 0 by convention.
    """
    X = np.asarray(points, dtype=float)
    y = np.asarray(labels)
    if y.shape != (X.shape[0],):
        raise ValueError("labels length must match the number of points")
    clusters = np.unique(y)
    if clusters.size < 2:
        return 0.0
    D = pairwise_distances(X) if dists is None else dists
    n = X.shape[0]
    sums = np.empty((n, clusters.size))
    sizes = np.empty(clusters.size, dtype=np.intp)
    own = np.empty(n, dtype=np.intp)
    for c_idx, c in enumerate(clusters):
        members = np.flatnonzero(y == c)
        sizes[c_idx] = members.size
        # C-order gather keeps the row reduction pairwise, matching a plain
        # 1-d sum over the same member order
        sums[:, c_idx] = np.ascontiguousarray(D[:, members]).sum(axis=1)
        own[members] = c_idx

    idx = np.arange(n)
    own_size = sizes[own]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = sums[idx, own] / (own_size - 1)
    other = sums / sizes
    other[idx, own] = np.inf
    b = other.min(axis=1)
    with np.errstate(invalid="ignore"):
        sil = (b - a) / np.maximum(a, b)
    sil[own_size == 1] = 0.0
    sil[np.maximum(a, b) == 0] = 0.0
    return float(np.mean(sil))


def rand_index(labels_a, labels_b, *, exclude_noise: bool = False, noise_label: int = NOISE_LABEL) -> float:
    """Fraction of point pairs on which two labelings agree.

    A pair agrees when it is co-clustered in both labelings or separated in
    both.  Noise labels are ordinary cluster ids unless ``exclude_noise`` is
    set, in which case points carrying ``noise_label`` in either labeling are
    dropped first.
    """
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("labelings must be 1-d and of equal length")
    if exclude_noise:
        keep = (a != noise_label) & (b != noise_label)
        a = a[keep]
        b = b[keep]
    n = a.size
    if n < 2:
        raise ValueError("the Rand index needs at least two points")
    same_a = a[:, None] == a[None, :]
    same_b = b[:, None] == b[None, :]
    agreements = (int(np.sum(same_a == same_b)) - n) // 2
    return agreements / (n * (n - 1) // 2)
