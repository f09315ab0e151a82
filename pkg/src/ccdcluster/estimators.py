"""Scikit-learn style estimators wrapping the clustering pipelines."""

from __future__ import annotations

import os
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from . import core
from .spatial import (
    DEFAULT_GRID_SIZE,
    DEFAULT_MIN_POINTS,
    DEFAULT_REPLICATES,
    EnvelopeTable,
    envelope_cache_name,
    unit_ball_grid,
)


def _validated(X) -> np.ndarray:
    return check_array(X, dtype=np.float64, ensure_min_samples=2)


class _BaseCCD(ClusterMixin, BaseEstimator):
    """Shared fit bookkeeping for catch-digraph clusterers."""

    def _store(self, model, partition, radii_assignment):
        self.model_ = model
        self.labels_ = partition.labels
        self.covered_ = partition.covered
        self.n_clusters_ = model.k_hat_clusters
        self.center_indices_ = model.centers
        self.center_radii_ = model.center_radii
        self.radii_ = radii_assignment.radii
        return self


class KSCCD(_BaseCCD):
    """Cluster catch digraph clustering with the intensity-penalised radius rule.

    Parameters
    ----------
    delta : float
        Assumed spatial intensity; the penalty in the radius objective is
        delta * r^d.  Higher values shrink the covering balls.
    shape : {"convex", "arbitrary"}
        Convex mode selects cluster centers by silhouette; arbitrary mode
        takes connected components of the prototype intersection graph.
    mark_noise : bool
        Label points outside every selected ball as noise (-1).

    Attributes
    ----------
    labels_ : ndarray of shape (n,)
        Cluster id per observation.
    n_clusters_ : int
        Estimated number of clusters.
    center_indices_, center_radii_ : ndarray
        Selected prototype observations and their covering-ball radii.
    radii_ : ndarray of shape (n,)
        Covering-ball radius chosen for every observation.
    covered_ : ndarray of bool
        Whether each observation lies inside some selected ball.
    """

    def __init__(self, delta: float = 0.1, shape: str = "convex", mark_noise: bool = False):
        self.delta = delta
        self.shape = shape
        self.mark_noise = mark_noise

    def fit(self, X, y=None):
        X = _validated(X)
        D = core.pairwise_distances(X)
        ra = core.ks_radii(X, self.delta, dists=D)
        model, partition = core._run_pipeline(
            X, ra, self.shape, self.mark_noise, D, "global"
        )
        return self._store(model, partition, ra)


class RKCCD(_BaseCCD):
    """Parameter-free cluster catch digraph clustering.

    Covering-ball radii are chosen by growing each ball until its contents
    fail a Monte Carlo spatial-randomness test, so no intensity parameter is
    needed.

    Parameters
    ----------
    shape : {"convex", "arbitrary"}
        Convex mode selects cluster centers by silhouette; arbitrary mode
        takes connected components of the prototype intersection graph.
    envelope_reps : int
        Monte Carlo replicates behind the test envelopes (99 gives a 1%
        pointwise level, 19 gives 5%).
    grid_size : int
        Number of evaluation distances in (0, 0.5] for the unit-ball test.
    min_points : int
        Balls holding fewer points than this always pass the test.
    search : {"binary", "linear", "compare"}
        Candidate-radius search strategy.
    mark_noise : bool
        Label points outside every selected ball as noise (-1).
    cache_dir : str or None
        Directory for persisted envelope tables; reused across fits.
    random_state : int
        Seed for the envelope simulations (the pipeline itself is
        deterministic in the data).
    """

    def __init__(
        self,
        shape: str = "convex",
        envelope_reps: int = DEFAULT_REPLICATES,
        grid_size: int = DEFAULT_GRID_SIZE,
        min_points: int = DEFAULT_MIN_POINTS,
        search: str = "binary",
        mark_noise: bool = False,
        cache_dir: Optional[str] = None,
        random_state: int = 0,
    ):
        self.shape = shape
        self.envelope_reps = envelope_reps
        self.grid_size = grid_size
        self.min_points = min_points
        self.search = search
        self.mark_noise = mark_noise
        self.cache_dir = cache_dir
        self.random_state = random_state

    def _envelope_for(self, dimension: int) -> EnvelopeTable:
        t_grid = unit_ball_grid(self.grid_size)
        if self.cache_dir is None:
            return EnvelopeTable(
                dimension=dimension,
                replicates=self.envelope_reps,
                seed=self.random_state,
                t_grid=t_grid,
                min_points=self.min_points,
            )
        os.makedirs(self.cache_dir, exist_ok=True)
        path = os.path.join(
            self.cache_dir,
            envelope_cache_name(dimension, self.envelope_reps, self.random_state, t_grid),
        )
        if os.path.exists(path):
            return EnvelopeTable.load(path)
        table = EnvelopeTable(
            dimension=dimension,
            replicates=self.envelope_reps,
            seed=self.random_state,
            t_grid=t_grid,
            min_points=self.min_points,
            cache_path=path,
        )
        return table

    def fit(self, X, y=None):
        X = _validated(X)
        table = self._envelope_for(X.shape[1])
        D = core.pairwise_distances(X)
        ra = core.rk_radii(X, table, search=self.search, dists=D)
        model, partition = core._run_pipeline(
            X, ra, self.shape, self.mark_noise, D, "global"
        )
        if table.cache_path and table.dirty:
            table.save()
        return self._store(model, partition, ra)
