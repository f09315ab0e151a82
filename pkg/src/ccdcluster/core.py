"""Covering-ball radius selection and the full clustering pipelines.

Two radius rules feed the same downstream machinery.  The intensity-penalised
rule maximizes (fraction of points caught) - delta * r^d over the candidate
radii of each point.  The spatial-randomness rule grows each ball through the
sorted candidate radii and keeps the largest radius whose contents still look
completely spatially random under the upper-envelope K test.

Downstream: catch digraph, greedy dominating set scored by original
out-degrees, intersection graph, then either silhouette-maximizing prefix
selection of cluster centers (convex mode) or connected components of the
intersection graph (arbitrary-shape mode), and finally convex-distance
assignment of every point.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .digraph import (
    CatchDigraph,
    IntersectionGraph,
    build_ccd,
    greedy_mds_scored,
    intersection_graph,
    weak_components,
)
from .metrics import NOISE_LABEL, pairwise_distances, silhouette_avg
from .spatial import (
    DEFAULT_GRID_SIZE,
    DEFAULT_MIN_POINTS,
    DEFAULT_REPLICATES,
    EnvelopeTable,
    _pair_curve,
    unit_ball_grid,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RadiusAssignment:
    """Chosen covering-ball radius per point plus selection diagnostics."""

    radii: np.ndarray
    method: str
    params: dict
    candidates_examined: np.ndarray


@dataclass(frozen=True)
class ClusteringModel:
    """Selected centers, their radii, and the clustering mode.

    In convex mode each center is one cluster.  In arbitrary mode
    ``components`` groups positions into ``centers`` by connected component
    of the intersection graph, and each component is one cluster.
    """

    centers: np.ndarray
    center_radii: np.ndarray
    mode: str
    components: Optional[tuple]
    k_hat_clusters: int


@dataclass(frozen=True)
class Partition:
    """Per-point cluster labels and ball-coverage flags."""

    labels: np.ndarray
    covered: np.ndarray


def _as_points(points) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise ValueError("points must be an n x d array")
    if X.shape[0] < 2:
        raise ValueError("clustering needs at least two points")
    return X


# ---------------------------------------------------------------------------
# radius selection


def ks_radii(points, delta: float, *, dists: Optional[np.ndarray] = None) -> RadiusAssignment:
    """Radii maximizing (caught fraction) - delta * r^d over candidate radii.

    Candidates for a point are its distances to all other points; the caught
    fraction counts points within the closed candidate ball, the point itself
    included.  Ties go to the smallest maximizing radius.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    X = _as_points(points)
    n, d = X.shape
    D = pairwise_distances(X) if dists is None else dists
    cand = np.sort(D, axis=1)[:, 1:]
    radii = np.empty(n)
    for i in range(n):
        row = cand[i]
        caught = (np.searchsorted(row, row, side="right") + 1) / n
        objective = caught - delta * row**d
        radii[i] = row[int(np.argmax(objective))]
    return RadiusAssignment(
        radii=radii,
        method="ks",
        params={"delta": float(delta)},
        candidates_examined=np.full(n, n - 1, dtype=np.intp),
    )


def _grown_ball_rejects(pair_dists, prefix_counts, t_grid, table, cand, k):
    """CSR test for the ball at candidate index ``k`` of one growth sequence.

    ``pair_dists`` lists the pairwise distances of the growing member set in
    join order, so the first ``prefix_counts[m]`` entries are exactly the
    pairs among the ``m`` closest members.  Matches ``csr_test`` on the same
    constellation.
    """
    r = cand[k]
    if r == 0.0:
        return False
    m = int(np.searchsorted(cand, r, side="right")) + 1
    if m < table.min_points:
        return False
    rho = pair_dists[: prefix_counts[m]] / r
    values = _pair_curve(rho, t_grid, table.dimension, m)
    return bool((values > table.upper_for(m)).any())


def rk_radii(
    points,
    table: EnvelopeTable,
    *,
    search: str = "binary",
    dists: Optional[np.ndarray] = None,
) -> RadiusAssignment:
    """Largest radius per point whose ball contents still pass the CSR test.

    Candidate radii are the sorted distances to the other points.  The first
    candidate whose closed ball rejects the spatial-randomness test caps the
    growth and the preceding candidate is kept; if nothing rejects the ball
    spans all candidates.

    ``search="linear"`` (the default) scans candidates in growth order, which
    implements the first-rejection rule exactly.  ``search="binary"`` bisects
    the candidate sequence, which is faster but assumes the rejection
    decision is monotone in the radius; on adjacent clusters the sequence is
    routinely non-monotone and bisection then lands on an inflated radius.
    ``search="compare"`` runs both, logs divergences, and returns the linear
    result.
    """
    if search not in ("binary", "linear", "compare"):
        raise ValueError("search must be 'binary', 'linear', or 'compare'")
    X = _as_points(points)
    n, d = X.shape
    if table.dimension != d:
        raise ValueError("envelope table dimension does not match the points")
    D = pairwise_distances(X) if dists is None else dists
    radii = np.empty(n)
    examined = np.zeros(n, dtype=np.intp)
    counts = np.concatenate([[0], np.cumsum(np.arange(n))])
    pair_buf = np.empty(n * (n - 1) // 2)

    for i in range(n):
        order = np.argsort(D[i], kind="stable")
        cand = D[i][order[1:]]
        filled = 1
        tested = 0

        def ensure_pairs(m: int):
            nonlocal filled
            while filled < m:
                pair_buf[counts[filled] : counts[filled + 1]] = D[
                    order[filled], order[:filled]
                ]
                filled += 1

        def rejects(k: int) -> bool:
            nonlocal tested
            tested += 1
            m = int(np.searchsorted(cand, cand[k], side="right")) + 1
            ensure_pairs(m)
            return _grown_ball_rejects(
                pair_buf, counts, table.t_grid, table, cand, k
            )

        first = None
        if search in ("linear", "compare"):
            for k in range(cand.size):
                if k > 0 and cand[k] == cand[k - 1]:
                    continue
                if rejects(k):
                    first = k
                    break
        if search in ("binary", "compare"):
            lo, hi = 0, cand.size
            while lo < hi:
                mid = (lo + hi) // 2
                if rejects(mid):
                    hi = mid
                else:
                    lo = mid + 1
            binary_first = lo if lo < cand.size else None
            if search == "binary":
                first = binary_first
            elif binary_first != first:
                logger.debug(
                    "non-monotone rejection sequence at point %d: "
                    "linear scan stops at %s, binary search at %s",
                    i,
                    first,
                    binary_first,
                )

        if first is None:
            radii[i] = cand[-1]
        elif first == 0:
            radii[i] = 0.0
        else:
            radii[i] = cand[first - 1]
        examined[i] = tested

    return RadiusAssignment(
        radii=radii,
        method="rk",
        params={"replicates": table.replicates, "alpha": table.alpha},
        candidates_examined=examined,
    )


# ---------------------------------------------------------------------------
# convex distance and point assignment


def convex_distance(z, center, radius: float) -> float:
    """Distance from ``z`` to a ball center in boundary units.

    d(z, center) / radius: below 1 inside the ball, 1 on the boundary, above
    1 outside.  A zero radius gives 0 at the center and infinity elsewhere.
    """
    dist = float(np.linalg.norm(np.asarray(z, dtype=float) - np.asarray(center, dtype=float)))
    if radius == 0.0:
        return 0.0 if dist == 0.0 else math.inf
    return dist / radius


def _convex_distance_matrix(points: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    diffs = points[:, None, :] - centers[None, :, :]
    dist = np.sqrt((diffs**2).sum(axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = dist / radii[None, :]
    zero = radii[None, :] == 0.0
    if zero.any():
        ratio = np.where(zero & (dist == 0.0), 0.0, ratio)
        ratio = np.where(zero & (dist > 0.0), np.inf, ratio)
    return ratio


def assign_points(points, model: ClusteringModel, mark_noise: bool = False) -> Partition:
    """Label every point by its nearest covering ball in convex distance.

    Convex mode labels by the selected center itself; arbitrary mode labels
    by the component containing the nearest ball.  A point is covered when
    its smallest convex distance is at most 1; with ``mark_noise`` uncovered
    points receive the noise label instead.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise ValueError("points must be an n x d array")
    if model.centers.size == 0:
        raise ValueError("the model has no centers")
    ratio = _convex_distance_matrix(X, X[model.centers], model.center_radii)
    nearest = np.argmin(ratio, axis=1)
    best = ratio[np.arange(X.shape[0]), nearest]
    covered = best <= 1.0
    if model.mode == "convex":
        labels = nearest.astype(np.intp)
    else:
        component_of = np.empty(model.centers.size, dtype=np.intp)
        for c_idx, group in enumerate(model.components):
            for pos in group:
                component_of[pos] = c_idx
        labels = component_of[nearest]
    if mark_noise:
        labels = labels.copy()
        labels[~covered] = NOISE_LABEL
    return Partition(labels=labels, covered=covered)


# ---------------------------------------------------------------------------
# center selection


def _prototype_order(digraph: CatchDigraph, candidates: np.ndarray) -> list:
    """Order prototype balls by residual point coverage.

    Greedy set cover over the covered point sets: each pick is the ball
    covering the most not-yet-covered observations, so redundant balls sink
    to the end while every cluster region gets a representative early.  Ties
    break to the larger ball cardinality, then the lower vertex index.  Stops
    once every observation is covered.
    """
    closed = digraph.closed_neighborhoods[candidates]
    card = closed.sum(axis=1)
    uncovered = np.ones(digraph.n, dtype=bool)
    left = list(range(candidates.size))
    order: list = []
    while left and uncovered.any():
        gains = np.array([closed[j][uncovered].sum() for j in left])
        pick = max(
            range(len(left)),
            key=lambda i: (gains[i], card[left[i]], -candidates[left[i]]),
        )
        if gains[pick] == 0:
            break
        j = left.pop(pick)
        order.append(int(candidates[j]))
        uncovered &= ~closed[j]
    return order


def select_centers_silhouette(
    points,
    digraph: CatchDigraph,
    g: IntersectionGraph,
    *,
    dists: Optional[np.ndarray] = None,
    prefix_rule: str = "global",
) -> ClusteringModel:
    """Convex-mode model from the silhouette-best prefix of prototype balls.

    The prototype balls are ordered by residual point coverage (densest
    coverage first, redundant balls last).  Every prefix of length 2 and up
    induces a partition through convex distances; the prefix with the best
    average silhouette wins (ties go to the shorter prefix).
    ``prefix_rule="first-local-max"`` stops at the first silhouette drop
    instead of scanning all prefixes.
    """
    if prefix_rule not in ("global", "first-local-max"):
        raise ValueError("prefix_rule must be 'global' or 'first-local-max'")
    X = np.asarray(points, dtype=float)
    if g.vertices.size == 0:
        raise ValueError("the intersection graph has no vertices")
    prototypes = _prototype_order(digraph, g.vertices)
    proto = np.asarray(prototypes, dtype=np.intp)
    if proto.size == 1:
        return ClusteringModel(
            centers=proto,
            center_radii=digraph.radii[proto],
            mode="convex",
            components=None,
            k_hat_clusters=1,
        )

    D = pairwise_distances(X) if dists is None else dists
    ratio = _convex_distance_matrix(X, X[proto], digraph.radii[proto])
    running = ratio[:, 0].copy()
    labels = np.zeros(X.shape[0], dtype=np.intp)
    best_k = 2
    best_sil = -np.inf
    prev_sil = -np.inf
    for k in range(2, proto.size + 1):
        closer = ratio[:, k - 1] < running
        running = np.where(closer, ratio[:, k - 1], running)
        labels = np.where(closer, k - 1, labels)
        sil = silhouette_avg(X, labels, dists=D)
        if sil > best_sil:
            best_sil = sil
            best_k = k
        if prefix_rule == "first-local-max" and sil < prev_sil:
            best_k = k - 1
            break
        prev_sil = sil

    chosen = proto[:best_k]
    return ClusteringModel(
        centers=chosen,
        center_radii=digraph.radii[chosen],
        mode="convex",
        components=None,
        k_hat_clusters=best_k,
    )


def components_model(digraph: CatchDigraph, g: IntersectionGraph) -> ClusteringModel:
    """Arbitrary-shape model: one cluster per connected piece of the support.

    The dominating-set balls are grouped by the weakly connected components
    of the full catch digraph, i.e. by the connected pieces of the union of
    all covering balls.  Grouping through the full digraph keeps a thin
    cluster together even where the dominating-set balls themselves tile it
    without sharing covered points.
    """
    comp_labels = weak_components(digraph)
    groups_by_comp: dict = {}
    for v in g.vertices:
        groups_by_comp.setdefault(int(comp_labels[v]), []).append(int(v))
    comps = sorted((sorted(c) for c in groups_by_comp.values()), key=lambda c: c[0])
    centers = np.array([v for comp in comps for v in comp], dtype=np.intp)
    groups = []
    offset = 0
    for comp in comps:
        groups.append(tuple(range(offset, offset + len(comp))))
        offset += len(comp)
    return ClusteringModel(
        centers=centers,
        center_radii=digraph.radii[centers],
        mode="arbitrary",
        components=tuple(groups),
        k_hat_clusters=len(comps),
    )


# ---------------------------------------------------------------------------
# end-to-end pipelines


def _run_pipeline(X, radii_assignment, shape, mark_noise, dists, prefix_rule):
    dg = build_ccd(X, radii_assignment.radii, dists=dists)
    mds = greedy_mds_scored(dg, scores=dg.out_degrees.astype(float))
    g = intersection_graph(dg, mds)
    if shape == "convex":
        model = select_centers_silhouette(X, dg, g, dists=dists, prefix_rule=prefix_rule)
    elif shape == "arbitrary":
        model = components_model(dg, g)
    else:
        raise ValueError("shape must be 'convex' or 'arbitrary'")
    partition = assign_points(X, model, mark_noise=mark_noise)
    return model, partition


def cluster_ks(
    points,
    delta: float,
    *,
    shape: str = "convex",
    mark_noise: bool = False,
    prefix_rule: str = "global",
):
    """Full clustering pipeline with the intensity-penalised radius rule."""
    X = _as_points(points)
    D = pairwise_distances(X)
    ra = ks_radii(X, delta, dists=D)
    return _run_pipeline(X, ra, shape, mark_noise, D, prefix_rule)


def cluster_rk(
    points,
    *,
    shape: str = "convex",
    envelope: Optional[EnvelopeTable] = None,
    envelope_reps: int = DEFAULT_REPLICATES,
    grid_size: int = DEFAULT_GRID_SIZE,
    min_points: int = DEFAULT_MIN_POINTS,
    seed: int = 0,
    search: str = "binary",
    mark_noise: bool = False,
    prefix_rule: str = "global",
):
    """Full parameter-free clustering pipeline with CSR-tested radii.

    An existing envelope table can be passed to reuse cached upper envelopes;
    otherwise a lazy table is created from the configuration.  When the table
    carries a cache path any envelopes built during the run are persisted.
    """
    X = _as_points(points)
    if envelope is None:
        envelope = EnvelopeTable(
            dimension=X.shape[1],
            replicates=envelope_reps,
            seed=seed,
            t_grid=unit_ball_grid(grid_size),
            min_points=min_points,
        )
    D = pairwise_distances(X)
    ra = rk_radii(X, envelope, search=search, dists=D)
    result = _run_pipeline(X, ra, shape, mark_noise, D, prefix_rule)
    if envelope.cache_path and envelope.dirty:
        envelope.save()
    return result
