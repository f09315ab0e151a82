"""Seeded synthetic benchmark generators.

Three families of labeled datasets: clusters around a fixed catalogue of
centers, clusters around random hard-core centers in the unit box, and the
latter with uniform background noise mixed in.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .metrics import NOISE_LABEL

SETTINGS = ("fixed_centers", "strauss", "strauss_noise")
DISTRIBUTIONS = ("uniform", "normal")

DEFAULT_THETA = 0.3
DEFAULT_SCALE = 0.15
NOISE_FRACTION = 0.2

# Box half-width (uniform) or the scale whose fifth is the per-axis variance
# (normal) used by the fixed-centers setting: unit boxes, identity covariance.
FIXED_UNIFORM_SCALE = 1.0
FIXED_NORMAL_SCALE = 5.0

_FIXED_CENTERS = {
    ("uniform", 2, 2): [(0, 0), (3, 0)],
    ("uniform", 2, 3): [(0, 0, 0), (3, 0, 0)],
    ("uniform", 2, 5): [(0, 0, 0, 0, 0), (3, 0, 0, 0, 0)],
    ("uniform", 3, 2): [(0, 0), (3, 0), (1.5, 2)],
    ("uniform", 3, 3): [(0, 0, 0), (3, 0, 0), (1.5, 2, 2)],
    ("uniform", 3, 5): [(0, 0, 0, 0, 0), (3, 0, 0, 0, 0), (1.5, 2, 2, 0, 0)],
    ("uniform", 5, 2): [(0, 0), (3, 0), (0, 3), (3, 3), (1.5, 6)],
    ("uniform", 5, 3): [(0, 0, 0), (3, 0, 0), (0, 3, 0), (3, 3, 0), (1.5, 1.5, 3)],
    ("uniform", 5, 5): [
        (0, 0, 0, 0, 0),
        (3, 0, 0, 0, 0),
        (0, 3, 0, 0, 0),
        (3, 3, 0, 0, 0),
        (1.5, 1.5, 3, 0, 0),
    ],
    ("normal", 2, 2): [(0, 0), (5, 0)],
    ("normal", 2, 3): [(0, 0, 0), (5, 0, 0)],
    ("normal", 2, 5): [(0, 0, 0, 0, 0), (5, 0, 0, 0, 0)],
    ("normal", 3, 2): [(0, 0), (5, 0), (2, 4)],
    ("normal", 3, 3): [(0, 0, 0), (5, 0, 0), (2, 3, 3)],
    ("normal", 3, 5): [(0, 0, 0, 0, 0), (5, 0, 0, 0, 0), (2, 3, 3, 0, 0)],
    ("normal", 5, 2): [(0, 0), (5, 0), (0, 5), (5, 5), (2.5, 10)],
    ("normal", 5, 3): [(0, 0, 0), (5, 0, 0), (0, 5, 0), (5, 5, 0), (2.5, 2.5, 5)],
    ("normal", 5, 5): [
        (0, 0, 0, 0, 0),
        (5, 0, 0, 0, 0),
        (0, 5, 0, 0, 0),
        (5, 5, 0, 0, 0),
        (2.5, 2.5, 5, 0, 0),
    ],
}


@dataclass(frozen=True)
class SimSpec:
    """Configuration of one synthetic dataset."""

    setting: str
    clusters: int
    points_per_cluster: int
    dimension: int
    dist: str = "uniform"
    theta: float = DEFAULT_THETA
    cluster_scale: float = DEFAULT_SCALE
    seed: int = 0

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ValueError(f"setting must be one of {SETTINGS}")
        if self.dist not in DISTRIBUTIONS:
            raise ValueError(f"dist must be one of {DISTRIBUTIONS}")
        if self.clusters < 1 or self.points_per_cluster < 1 or self.dimension < 1:
            raise ValueError("clusters, points_per_cluster and dimension must be >= 1")
        if not (self.theta > 0 and self.cluster_scale > 0):
            raise ValueError("theta and cluster_scale must be positive")


@dataclass(frozen=True)
class LabeledDataset:
    """Points with ground-truth labels; noise points carry the noise label."""

    points: np.ndarray
    true_labels: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        labels = np.asarray(self.true_labels, dtype=np.intp)
        if pts.shape[0] != labels.shape[0]:
            raise ValueError("points and labels must have the same length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "true_labels", labels)


def fixed_centers(clusters: int, dimension: int, dist: str) -> np.ndarray:
    """Catalogue cluster centers for the fixed-centers setting."""
    try:
        centers = _FIXED_CENTERS[(dist, clusters, dimension)]
    except KeyError:
        raise ValueError(
            f"no fixed centers for dist={dist!r}, clusters={clusters}, "
            f"dimension={dimension}; supported clusters 2/3/5 and dimension 2/3/5"
        ) from None
    return np.asarray(centers, dtype=float)


class InfeasibleSamplingError(RuntimeError):
    """Hard-core rejection sampling exhausted its proposal budget."""


def strauss_centers(
    clusters: int,
    dimension: int,
    min_dist: float,
    rng: np.random.Generator,
    max_proposals: int = 1_000_000,
) -> np.ndarray:
    """Uniform points in the unit box, conditioned on pairwise separation.

    Dart-throwing rejection: proposals that land within ``min_dist`` of an
    accepted point are discarded.  Raises ``InfeasibleSamplingError`` when
    the proposal budget runs out, which signals an impossible packing.
    """
    accepted: list = []
    proposals = 0
    while len(accepted) < clusters:
        if proposals >= max_proposals:
            raise InfeasibleSamplingError(
                f"could not place {clusters} centers at separation {min_dist} "
                f"within {max_proposals} proposals"
            )
        candidate = rng.random(dimension)
        proposals += 1
        if all(np.linalg.norm(candidate - p) >= min_dist for p in accepted):
            accepted.append(candidate)
    return np.asarray(accepted)


def gen_cluster(center, dist: str, scale: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """One cluster around ``center``.

    Uniform clusters fill the box center +- scale; normal clusters are
    spherical Gaussians with per-axis variance scale / 5.
    """
    c = np.asarray(center, dtype=float)
    if size < 1:
        raise ValueError("cluster size must be >= 1")
    if dist == "uniform":
        return rng.random((size, c.size)) * (2.0 * scale) + (c - scale)
    if dist == "normal":
        return rng.normal(loc=c, scale=np.sqrt(scale / 5.0), size=(size, c.size))
    raise ValueError(f"dist must be one of {DISTRIBUTIONS}")


def add_noise(
    dataset: LabeledDataset,
    dimension: int,
    scale: float,
    count: int,
    rng: np.random.Generator,
) -> LabeledDataset:
    """Append ``count`` uniform noise points in the box [-scale, 1 + scale]^d."""
    if count < 0:
        raise ValueError("noise count must be non-negative")
    if count == 0:
        return dataset
    noise = rng.random((count, dimension)) * (1.0 + 2.0 * scale) - scale
    return LabeledDataset(
        points=np.vstack([dataset.points, noise]),
        true_labels=np.concatenate(
            [dataset.true_labels, np.full(count, NOISE_LABEL, dtype=np.intp)]
        ),
    )


def generate(spec: SimSpec) -> LabeledDataset:
    """Generate the labeled dataset described by ``spec``.

    The noisy setting always uses normal clusters around hard-core centers
    and appends floor(0.2 * clusters * points_per_cluster) noise points.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.setting == "fixed_centers":
        centers = fixed_centers(spec.clusters, spec.dimension, spec.dist)
        scale = FIXED_UNIFORM_SCALE if spec.dist == "uniform" else FIXED_NORMAL_SCALE
        dist = spec.dist
    else:
        min_dist = (2.0 + spec.theta) * spec.cluster_scale
        centers = strauss_centers(spec.clusters, spec.dimension, min_dist, rng)
        scale = spec.cluster_scale
        dist = "normal" if spec.setting == "strauss_noise" else spec.dist

    blocks = [gen_cluster(c, dist, scale, spec.points_per_cluster, rng) for c in centers]
    dataset = LabeledDataset(
        points=np.vstack(blocks),
        true_labels=np.repeat(np.arange(spec.clusters, dtype=np.intp), spec.points_per_cluster),
    )
    if spec.setting == "strauss_noise":
        count = int(NOISE_FRACTION * spec.clusters * spec.points_per_cluster)
        dataset = add_noise(dataset, spec.dimension, spec.cluster_scale, count, rng)
    return dataset


def write_csv(dataset: LabeledDataset, path: str) -> None:
    """Write coordinates plus a trailing integer label column."""
    d = dataset.points.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(d)] + ["label"])
        for row, label in zip(dataset.points, dataset.true_labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
