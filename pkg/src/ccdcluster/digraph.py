"""Catch digraphs and dominating-set machinery.

A catch digraph places an arc u -> v whenever v falls inside the closed
covering ball of u.  Greedy approximations of the minimum dominating set
select prototype vertices; the intersection graph over those prototypes
(edges where covered point sets overlap) is what the clustering algorithms
decompose.  A brute-force minimum dominating set is provided as a test
oracle for small instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np


@dataclass(frozen=True)
class CatchDigraph:
    """Digraph over observation indices induced by covering balls.

    No self-arcs are stored; self-domination is implicit through the closed
    neighborhood.  Out-neighbor lists are sorted and duplicate-free.
    """

    n: int
    radii: np.ndarray
    out_neighbors: tuple

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        if radii.shape != (self.n,):
            raise ValueError("radii length must equal the vertex count")
        if np.any(radii < 0):
            raise ValueError("radii must be non-negative")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(
            self,
            "out_neighbors",
            tuple(np.asarray(nb, dtype=np.intp) for nb in self.out_neighbors),
        )

    @cached_property
    def out_degrees(self) -> np.ndarray:
        return np.array([nb.size for nb in self.out_neighbors], dtype=np.intp)

    @cached_property
    def ball_cardinalities(self) -> np.ndarray:
        """Closed-neighborhood sizes, i.e. points covered including the center."""
        return self.out_degrees + 1

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Boolean out-adjacency matrix (no self loops)."""
        mat = np.zeros((self.n, self.n), dtype=bool)
        for v, nb in enumerate(self.out_neighbors):
            mat[v, nb] = True
        return mat

    @cached_property
    def closed_neighborhoods(self) -> np.ndarray:
        mat = self.adjacency.copy()
        np.fill_diagonal(mat, True)
        return mat


def build_ccd(points: np.ndarray, radii, *, dists: Optional[np.ndarray] = None) -> CatchDigraph:
    """Build the catch digraph of closed covering balls.

    Arc (u, v) is present iff d(u, v) <= radius(u) and v != u.  A
    precomputed distance matrix can be passed to skip the pair scan.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise ValueError("points must be an n x d array")
    n = X.shape[0]
    r = np.asarray(radii, dtype=float)
    if r.shape != (n,):
        raise ValueError("radii length must match the number of points")
    if dists is None:
        diffs = X[:, None, :] - X[None, :, :]
        dists = np.sqrt((diffs**2).sum(axis=-1))
    mask = dists <= r[:, None]
    np.fill_diagonal(mask, False)
    out = tuple(np.flatnonzero(row) for row in mask)
    return CatchDigraph(n=n, radii=r, out_neighbors=out)


@dataclass(frozen=True)
class IntersectionGraph:
    """Undirected graph on dominating-set members with ball-overlap edges.

    ``vertices`` are indices into the parent digraph, in selection order.
    ``edges`` holds unordered vertex-id pairs; ``ball_cardinality`` is the
    closed-neighborhood size of each vertex in the parent digraph.
    """

    vertices: np.ndarray
    edges: tuple
    ball_cardinality: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=np.intp))
        object.__setattr__(
            self, "ball_cardinality", np.asarray(self.ball_cardinality, dtype=np.intp)
        )
        if self.vertices.size != self.ball_cardinality.size:
            raise ValueError("ball_cardinality must align with vertices")

    @cached_property
    def _neighbor_sets(self) -> dict:
        adj = {int(v): set() for v in self.vertices}
        for u, v in self.edges:
            adj[int(u)].add(int(v))
            adj[int(v)].add(int(u))
        return adj

    def neighbors(self, v: int) -> set:
        return self._neighbor_sets[int(v)]


Dominatable = Union[CatchDigraph, IntersectionGraph]


def _closed_rows(graph: Dominatable):
    """Vertex ids, closed-neighborhood index lists (local), and ball sizes."""
    if isinstance(graph, CatchDigraph):
        ids = np.arange(graph.n, dtype=np.intp)
        rows = [
            np.append(nb, v).astype(np.intp) for v, nb in enumerate(graph.out_neighbors)
        ]
        return ids, rows, graph.ball_cardinalities
    ids = graph.vertices
    pos = {int(v): i for i, v in enumerate(ids)}
    rows = [{i} for i in range(ids.size)]
    for u, v in graph.edges:
        rows[pos[int(u)]].add(pos[int(v)])
        rows[pos[int(v)]].add(pos[int(u)])
    rows = [np.fromiter(s, dtype=np.intp) for s in rows]
    return ids, rows, graph.ball_cardinality


def greedy_mds(digraph: CatchDigraph) -> list:
    """Greedy dominating set driven by residual out-degrees.

    Repeatedly picks the vertex with the most uncovered out-neighbors among
    the uncovered vertices, then removes its closed neighborhood.  Ties break
    to the larger ball cardinality, then the lower index.
    """
    n = digraph.n
    adj = digraph.adjacency
    card = digraph.ball_cardinalities
    alive = np.ones(n, dtype=bool)
    selected = []
    while alive.any():
        scores = adj[:, alive].sum(axis=1)
        scores[~alive] = -1
        best = scores[alive].max()
        cand = np.flatnonzero(alive & (scores == best))
        cand = cand[card[cand] == card[cand].max()]
        v = int(cand[0])
        selected.append(v)
        alive[v] = False
        alive[digraph.out_neighbors[v]] = False
    return selected


def greedy_mds_scored(
    graph: Dominatable,
    scores,
    stop: Optional[Callable[[list], bool]] = None,
) -> list:
    """Greedy dominating set driven by a fixed per-vertex score.

    At each step the highest-scoring vertex still uncovered is appended and
    its closed neighborhood removed from the uncovered set, so selection
    order is preserved and scores never change.  Ties break to the larger
    ball cardinality, then the lower vertex index.  When ``stop`` is given it
    is called with the running selection (vertex ids) after every pick and a
    truthy result halts the loop early; otherwise the result dominates the
    whole graph.
    """
    ids, rows, card = _closed_rows(graph)
    sc = np.asarray(scores, dtype=float)
    if sc.shape != (ids.size,):
        raise ValueError("scores length must equal the vertex count")
    priority = np.lexsort((np.arange(ids.size), -card, -sc))
    alive = np.ones(ids.size, dtype=bool)
    selected: list = []
    ptr = 0
    while ptr < priority.size:
        v = priority[ptr]
        if not alive[v]:
            ptr += 1
            continue
        selected.append(int(ids[v]))
        alive[rows[v]] = False
        if stop is not None and stop(selected):
            break
    return selected


def intersection_graph(digraph: CatchDigraph, mds: Sequence[int]) -> IntersectionGraph:
    """Intersection graph over ``mds`` with closed-neighborhood overlap edges."""
    members = np.asarray(list(mds), dtype=np.intp)
    if members.size and (members.min() < 0 or members.max() >= digraph.n):
        raise ValueError("mds contains out-of-range vertex ids")
    closed = digraph.closed_neighborhoods[members]
    overlap = closed @ closed.T
    edges = [
        (int(members[i]), int(members[j]))
        for i in range(members.size)
        for j in range(i + 1, members.size)
        if overlap[i, j]
    ]
    return IntersectionGraph(
        vertices=members,
        edges=tuple(edges),
        ball_cardinality=closed.sum(axis=1),
    )


def weak_components(digraph: CatchDigraph) -> np.ndarray:
    """Weakly connected component id per vertex of the catch digraph.

    Two vertices are weakly connected when their covering balls chain through
    arcs in either direction, i.e. they belong to the same connected piece of
    the union of covering balls.  Component ids are assigned in order of the
    smallest contained vertex.
    """
    parent = np.arange(digraph.n, dtype=np.intp)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, nbrs in enumerate(digraph.out_neighbors):
        ru = find(u)
        for v in nbrs:
            rv = find(int(v))
            if ru != rv:
                parent[rv] = ru
                ru = find(u)
    roots = np.array([find(v) for v in range(digraph.n)], dtype=np.intp)
    ids = {}
    labels = np.empty(digraph.n, dtype=np.intp)
    for v in range(digraph.n):
        labels[v] = ids.setdefault(roots[v], len(ids))
    return labels


def connected_components(graph: IntersectionGraph) -> list:
    """Maximal connected vertex sets, ordered by smallest contained index."""
    remaining = set(int(v) for v in graph.vertices)
    components = []
    while remaining:
        seed = min(remaining)
        comp = {seed}
        frontier = [seed]
        while frontier:
            u = frontier.pop()
            for w in graph.neighbors(u):
                if w in remaining and w not in comp:
                    comp.add(w)
                    frontier.append(w)
        remaining -= comp
        components.append(sorted(comp))
    components.sort(key=lambda c: c[0])
    return components


def brute_force_mds(digraph: CatchDigraph) -> list:
    """Exact minimum dominating set by exhaustive search, n <= 20 only.

    Returns the first minimum-cardinality dominating set in lexicographic
    order.  Test oracle; refuses larger instances.
    """
    n = digraph.n
    if n > 20:
        raise ValueError("brute-force search is limited to n <= 20")
    if n == 0:
        return []
    masks = []
    for v, nb in enumerate(digraph.out_neighbors):
        m = 1 << v
        for u in nb:
            m |= 1 << int(u)
        masks.append(m)
    full = (1 << n) - 1
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            covered = 0
            for v in combo:
                covered |= masks[v]
            if covered == full:
                return list(combo)
    raise AssertionError("unreachable: the full vertex set always dominates")
