"""Cluster catch digraph clustering.

Density- and graph-based clustering where every observation carries a
covering ball whose radius is chosen statistically: either by an
intensity-penalised count objective (KS variant) or, parameter-free, by
growing the ball until its contents fail a Monte Carlo spatial-randomness
test built on Ripley's K function (RK variant).  Greedy minimum dominating
sets of the induced catch digraph yield prototype balls; silhouette-driven
prefix selection or connected components of the prototype intersection
graph produce the final clusters.
"""

__version__ = "0.1.0"

from .core import (
    ClusteringModel,
    Partition,
    RadiusAssignment,
    assign_points,
    cluster_ks,
    cluster_rk,
    components_model,
    convex_distance,
    ks_radii,
    rk_radii,
    select_centers_silhouette,
)
from .datagen import LabeledDataset, SimSpec, generate
from .digraph import (
    CatchDigraph,
    IntersectionGraph,
    brute_force_mds,
    build_ccd,
    connected_components,
    greedy_mds,
    greedy_mds_scored,
    intersection_graph,
)
from .estimators import KSCCD, RKCCD
from .metrics import NOISE_LABEL, rand_index, silhouette_avg
from .spatial import (
    BallWindow,
    BoxWindow,
    CsrTestResult,
    EnvelopeTable,
    KCurve,
    build_envelope,
    csr_test,
    k_hat,
    l_hat_minus_t,
    simulate_csr,
    translation_correction_ball,
    translation_correction_box,
)

__all__ = [
    "BallWindow",
    "BoxWindow",
    "CatchDigraph",
    "ClusteringModel",
    "CsrTestResult",
    "EnvelopeTable",
    "IntersectionGraph",
    "KCurve",
    "KSCCD",
    "LabeledDataset",
    "NOISE_LABEL",
    "Partition",
    "RKCCD",
    "RadiusAssignment",
    "SimSpec",
    "assign_points",
    "brute_force_mds",
    "build_ccd",
    "build_envelope",
    "cluster_ks",
    "cluster_rk",
    "components_model",
    "connected_components",
    "convex_distance",
    "csr_test",
    "generate",
    "greedy_mds",
    "greedy_mds_scored",
    "intersection_graph",
    "k_hat",
    "ks_radii",
    "l_hat_minus_t",
    "rand_index",
    "rk_radii",
    "select_centers_silhouette",
    "silhouette_avg",
    "simulate_csr",
    "translation_correction_ball",
    "translation_correction_box",
]
