import math

import numpy as np
import pytest

from ccdcluster.digraph import (
    CatchDigraph,
    IntersectionGraph,
    brute_force_mds,
    build_ccd,
    connected_components,
    greedy_mds,
    greedy_mds_scored,
    intersection_graph,
    weak_components,
)


def star_digraph(n=6):
    out = [np.arange(1, n)] + [np.array([], dtype=int)] * (n - 1)
    return CatchDigraph(n=n, radii=np.ones(n), out_neighbors=tuple(out))


def arcless_digraph(n=4):
    return CatchDigraph(n=n, radii=np.zeros(n), out_neighbors=tuple(np.array([], dtype=int) for _ in range(n)))


def random_digraph(rng, n):
    out = []
    for v in range(n):
        mask = rng.random(n) < 0.3
        mask[v] = False
        out.append(np.flatnonzero(mask))
    return CatchDigraph(n=n, radii=rng.random(n), out_neighbors=tuple(out))


def dominates(digraph, subset):
    covered = set(subset)
    for v in subset:
        covered.update(int(u) for u in digraph.out_neighbors[v])
    return len(covered) == digraph.n


class TestBuildCcd:
    def test_zero_radii_gives_arcless(self):
        X = np.random.default_rng(0).random((10, 3))
        dg = build_ccd(X, np.zeros(10))
        assert all(nb.size == 0 for nb in dg.out_neighbors)

    def test_line_example(self):
        X = np.array([[0.0], [1.0], [2.0]])
        dg = build_ccd(X, [2.5, 0.0, 0.0])
        assert dg.out_neighbors[0].tolist() == [1, 2]
        assert dg.out_neighbors[1].tolist() == []
        assert dg.out_neighbors[2].tolist() == []

    def test_coincident_points_complete(self):
        X = np.zeros((4, 2))
        dg = build_ccd(X, np.full(4, 0.5))
        for v in range(4):
            assert dg.out_neighbors[v].tolist() == [u for u in range(4) if u != v]

    def test_closed_ball_membership(self):
        X = np.array([[0.0], [1.0]])
        dg = build_ccd(X, [1.0, 0.5])
        assert dg.out_neighbors[0].tolist() == [1]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            build_ccd(np.zeros((3, 2)), [1.0, 1.0])

    def test_monotone_radii_keep_arcs(self):
        rng = np.random.default_rng(1)
        X = rng.random((12, 2))
        radii = rng.random(12)
        dg = build_ccd(X, radii)
        for bump in range(12):
            grown = radii.copy()
            grown[bump] += 0.3
            dg2 = build_ccd(X, grown)
            for v in range(12):
                assert set(dg.out_neighbors[v]) <= set(dg2.out_neighbors[v])


class TestGreedyMds:
    def test_star(self):
        assert greedy_mds(star_digraph()) == [0]

    def test_arcless(self):
        assert greedy_mds(arcless_digraph(5)) == [0, 1, 2, 3, 4]

    def test_dominates_and_brute_force_not_larger(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            dg = random_digraph(rng, int(rng.integers(1, 13)))
            out = greedy_mds(dg)
            assert dominates(dg, out)
            assert len(brute_force_mds(dg)) <= len(out)

    def test_log_approximation_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(2, 13))
            dg = random_digraph(rng, n)
            greedy_size = len(greedy_mds(dg))
            optimum = len(brute_force_mds(dg))
            assert greedy_size <= (math.log(n) + 1) * optimum


class TestGreedyMdsScored:
    def test_outdegree_scores_pick_star_center_first(self):
        dg = star_digraph()
        out = greedy_mds_scored(dg, scores=dg.out_degrees.astype(float))
        assert out == [0]

    def test_path_with_uniform_scores(self):
        out = [np.array([1]), np.array([2]), np.array([], dtype=int)]
        dg = CatchDigraph(n=3, radii=np.ones(3), out_neighbors=tuple(out))
        assert greedy_mds_scored(dg, scores=np.ones(3)) == [0, 2]

    def test_dominates_without_stop(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            dg = random_digraph(rng, int(rng.integers(1, 15)))
            out = greedy_mds_scored(dg, scores=rng.random(dg.n))
            assert dominates(dg, out)

    def test_stop_predicate_halts(self):
        dg = arcless_digraph(6)
        out = greedy_mds_scored(dg, scores=np.ones(6), stop=lambda sel: len(sel) == 2)
        assert len(out) == 2

    def test_score_length_checked(self):
        with pytest.raises(ValueError):
            greedy_mds_scored(arcless_digraph(3), scores=np.ones(2))


class TestBruteForceMds:
    def test_star(self):
        assert brute_force_mds(star_digraph()) == [0]

    def test_arcless(self):
        assert brute_force_mds(arcless_digraph(4)) == [0, 1, 2, 3]

    def test_three_cycle(self):
        out = [np.array([1]), np.array([2]), np.array([0])]
        dg = CatchDigraph(n=3, radii=np.ones(3), out_neighbors=tuple(out))
        assert len(brute_force_mds(dg)) == 2

    def test_refuses_large_instances(self):
        with pytest.raises(ValueError):
            brute_force_mds(arcless_digraph(21))


class TestIntersectionGraph:
    def test_disjoint_balls_no_edge(self):
        X = np.array([[0.0], [0.1], [5.0], [5.1]])
        dg = build_ccd(X, [0.2, 0.0, 0.2, 0.0])
        g = intersection_graph(dg, [0, 2])
        assert g.edges == ()
        assert g.ball_cardinality.tolist() == [2, 2]

    def test_single_vertex(self):
        X = np.array([[0.0], [1.0]])
        dg = build_ccd(X, [2.0, 0.0])
        g = intersection_graph(dg, [0])
        assert g.vertices.tolist() == [0]
        assert g.edges == ()

    def test_edges_match_overlap_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(4, 20))
            X = rng.random((n, 2)) * 2
            radii = rng.random(n) * 0.6
            dg = build_ccd(X, radii)
            mds = greedy_mds_scored(dg, scores=dg.out_degrees.astype(float))
            g = intersection_graph(dg, mds)
            edges = set(tuple(sorted(e)) for e in g.edges)
            covered = {
                v: set(np.flatnonzero(np.linalg.norm(X - X[v], axis=1) <= radii[v]))
                for v in mds
            }
            for i, u in enumerate(mds):
                for v in mds[i + 1 :]:
                    expected = bool(covered[u] & covered[v])
                    assert (tuple(sorted((u, v))) in edges) == expected

    def test_out_of_range_mds(self):
        dg = arcless_digraph(3)
        with pytest.raises(ValueError):
            intersection_graph(dg, [0, 5])


def reachability_components_oracle(graph: IntersectionGraph):
    ids = [int(v) for v in graph.vertices]
    index = {v: i for i, v in enumerate(ids)}
    n = len(ids)
    adj = np.eye(n, dtype=bool)
    for u, v in graph.edges:
        adj[index[int(u)], index[int(v)]] = True
        adj[index[int(v)], index[int(u)]] = True
    reach = adj.copy()
    for _ in range(n):
        reach = reach | (reach @ adj)
    comps = []
    seen = set()
    for i in range(n):
        if i in seen:
            continue
        comp = sorted(ids[j] for j in np.flatnonzero(reach[i]))
        seen.update(index[v] for v in comp)
        comps.append(comp)
    comps.sort(key=lambda c: c[0])
    return comps


class TestConnectedComponents:
    def test_edgeless_singletons(self):
        g = IntersectionGraph(vertices=[3, 1, 7], edges=(), ball_cardinality=[1, 1, 1])
        assert connected_components(g) == [[1], [3], [7]]

    def test_path_single_component(self):
        g = IntersectionGraph(
            vertices=[0, 1, 2], edges=((0, 1), (1, 2)), ball_cardinality=[1, 1, 1]
        )
        assert connected_components(g) == [[0, 1, 2]]

    def test_matches_reachability_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            n = int(rng.integers(1, 11))
            ids = sorted(rng.choice(50, size=n, replace=False).tolist())
            edges = []
            for i in range(n):
                for j in range(i + 1, n):
                    if rng.random() < 0.25:
                        edges.append((ids[i], ids[j]))
            g = IntersectionGraph(
                vertices=ids, edges=tuple(edges), ball_cardinality=np.ones(n, dtype=int)
            )
            assert connected_components(g) == reachability_components_oracle(g)


class TestWeakComponents:
    def test_chain_is_one_component(self):
        X = np.array([[0.0], [1.0], [2.0], [10.0]])
        dg = build_ccd(X, [1.0, 1.0, 1.0, 0.5])
        labels = weak_components(dg)
        assert labels[0] == labels[1] == labels[2]
        assert labels[3] != labels[0]

    def test_direction_ignored(self):
        out = [np.array([], dtype=int), np.array([0]), np.array([], dtype=int)]
        dg = CatchDigraph(n=3, radii=np.ones(3), out_neighbors=tuple(out))
        labels = weak_components(dg)
        assert labels[0] == labels[1]
        assert labels[2] != labels[0]
