"""Network metric tests, with brute-force oracles for small graphs."""

import itertools

import numpy as np
import pytest

from src.core.exceptions import DegenerateGraph, DegenerateLabels, InsufficientSnapshots, UnlabeledNode
from src.core.metrics import (
    assortativity,
    average_path_length,
    betweenness_centrality,
    bipartite_as_digraph,
    bipartite_centrality,
    bipartite_summary,
    centrality_report,
    closeness_all,
    degree_centrality,
    degree_histogram,
    eigenvector_centrality,
    eigenvector_matrix,
    histogram_frame,
    jaccard,
    jaccard_stability,
    mixing_matrix,
    network_summary,
    series_growth,
)
from src.core.ingest import GeneratorConfig, generate_market
from src.core.netcore import build_bipartite, build_digraph


def random_digraph(rng, n, p):
    edges = [
        (i, j, 1.0) for i, j in itertools.permutations(range(n), 2) if rng.random() < p
    ]
    return build_digraph(edges, n=n)


def labelled_digraph(rng, n, p, names=None):
    """Random digraph on n ids drawn from ``names`` (default n0..n11)."""
    names = names or [f"n{k}" for k in range(12)]
    ids = [str(x) for x in rng.choice(names, size=n, replace=False)]
    edges = [
        (i, j, 1.0) for i, j in itertools.permutations(range(n), 2) if rng.random() < p
    ]
    return build_digraph(edges, n=n, node_ids=ids)


def relabelled(rng, g, renamed):
    """Same graph with ids mapped through ``renamed`` and indices shuffled."""
    perm = rng.permutation(g.n)
    ids = [""] * g.n
    for old, new in enumerate(perm):
        ids[new] = renamed[g.node_ids[old]]
    edges = [(int(perm[t]), int(perm[h]), w) for t, h, w in g.edges()]
    return build_digraph(edges, n=g.n, node_ids=ids)


def hop_distances(g):
    """All-pairs unweighted distances by repeated relaxation (inf if unreachable)."""
    n = g.n
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for t, h, _ in g.edges():
        dist[t, h] = 1.0
    for k in range(n):
        dist = np.minimum(dist, dist[:, [k]] + dist[[k], :])
    return dist


def path_counts(g, dist):
    """sigma[s, t]: number of shortest s -> t paths."""
    n = g.n
    sigma = np.zeros((n, n))
    np.fill_diagonal(sigma, 1.0)
    succ = {u: [] for u in range(n)}
    for t, h, _ in g.edges():
        succ[t].append(h)
    for s in range(n):
        order = sorted((d, v) for v, d in enumerate(dist[s]) if np.isfinite(d))
        for _, v in order:
            for w in succ[v]:
                if dist[s, w] == dist[s, v] + 1:
                    sigma[s, w] += sigma[s, v]
    return sigma


def brute_betweenness(g):
    dist = hop_distances(g)
    sigma = path_counts(g, dist)
    scores = np.zeros(g.n)
    for s, t in itertools.permutations(range(g.n), 2):
        if not np.isfinite(dist[s, t]):
            continue
        for v in range(g.n):
            if v in (s, t):
                continue
            if dist[s, v] + dist[v, t] == dist[s, t]:
                scores[v] += sigma[s, v] * sigma[v, t] / sigma[s, t]
    return scores


def brute_closeness(g):
    """Incoming closeness with reachable-set scaling."""
    dist = hop_distances(g)
    scores = np.zeros(g.n)
    for u in range(g.n):
        incoming = dist[:, u]
        reach = np.isfinite(incoming)
        total = incoming[reach].sum()
        r = int(reach.sum())
        if total > 0 and g.n > 1:
            scores[u] = (r - 1) / total * (r - 1) / (g.n - 1)
    return scores


class TestCentralityOracles:
    def test_betweenness_matches_path_enumeration(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            g = random_digraph(rng, int(rng.integers(2, 9)), float(rng.uniform(0.1, 0.6)))
            np.testing.assert_allclose(betweenness_centrality(g), brute_betweenness(g), atol=1e-9)

    def test_closeness_matches_path_enumeration(self):
        rng = np.random.default_rng(12)
        for _ in range(300):
            g = random_digraph(rng, int(rng.integers(2, 9)), float(rng.uniform(0.1, 0.6)))
            np.testing.assert_allclose(closeness_all(g), brute_closeness(g), atol=1e-12)

    def test_eigenvector_residual(self):
        rng = np.random.default_rng(13)
        checked = 0
        while checked < 100:
            g = random_digraph(rng, int(rng.integers(3, 9)), 0.4)
            if g.m == 0:
                continue
            result = eigenvector_centrality(g, undirected=True, tol=1e-13, max_iter=200000)
            matrix = eigenvector_matrix(g, undirected=True)
            assert result.residual(matrix) < 1e-8
            assert np.all(result.vector >= 0)
            checked += 1


def test_path_betweenness():
    g = build_digraph([(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], n=4)
    assert betweenness_centrality(g).tolist() == [0.0, 2.0, 2.0, 0.0]


def test_closeness_of_sink():
    # 0 -> 2 and 1 -> 2: everyone reaches node 2 in one hop
    g = build_digraph([(0, 2, 1.0), (1, 2, 1.0)], n=3)
    scores = closeness_all(g)
    assert scores[2] == pytest.approx(1.0)
    assert scores[0] == 0.0


def test_undirected_star_eigenvector():
    g = build_digraph([(0, k, 1.0) for k in range(1, 5)], n=5)
    result = eigenvector_centrality(g, undirected=True)
    assert result.eigenvalue == pytest.approx(2.0, abs=1e-8)
    assert result.vector[0] == pytest.approx(1 / np.sqrt(2), abs=1e-8)
    np.testing.assert_allclose(result.vector[1:], 1 / np.sqrt(8), atol=1e-8)


def test_eigenvector_on_disconnected_pairs_picks_one_component():
    g = build_digraph([(0, 1, 1.0), (2, 3, 1.0)], n=4)
    result = eigenvector_centrality(g, undirected=True)
    assert result.degenerate
    np.testing.assert_allclose(result.vector, [1 / np.sqrt(2), 1 / np.sqrt(2), 0.0, 0.0], atol=1e-12)
    assert result.eigenvalue == pytest.approx(1.0)


def test_eigenvector_keeps_the_dominant_component():
    g = build_digraph([(0, 1, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 2, 1.0)], n=5)
    result = eigenvector_centrality(g, undirected=True)
    assert result.degenerate
    np.testing.assert_allclose(result.vector[:2], 0.0)
    np.testing.assert_allclose(result.vector[2:], 1 / np.sqrt(3), atol=1e-8)
    assert result.eigenvalue == pytest.approx(2.0, abs=1e-8)


def test_eigenvector_needs_edges():
    with pytest.raises(DegenerateGraph):
        eigenvector_centrality(build_digraph([], n=3))


def test_degree_centrality_views():
    g = build_digraph([(0, 1, 1.0), (1, 0, 1.0), (0, 2, 1.0)], n=3)
    degree_in, degree_out = degree_centrality(g)
    assert degree_in.tolist() == [1, 1, 1]
    assert degree_out.tolist() == [2, 1, 0]
    undirected, _ = degree_centrality(g, undirected=True)
    assert undirected.tolist() == [2, 1, 1]


def test_report_falls_back_when_directed_iteration_fails():
    # a directed star has a nilpotent incoming matrix
    g = build_digraph([(k, 0, 1.0) for k in range(1, 5)], n=5)
    report = centrality_report(g)
    assert report.eigenvector_view == "undirected"
    assert "eigenvector" in report.notes
    assert report.maxima()["degree_in"] == pytest.approx(1.0)
    assert list(report.to_frame().columns) == [
        "node_id", "degree_in", "degree_out", "closeness", "betweenness", "eigenvector",
    ]


def test_sampled_betweenness_is_seeded():
    rng = np.random.default_rng(5)
    g = random_digraph(rng, 30, 0.1)
    first = betweenness_centrality(g, samples=10, seed=3)
    second = betweenness_centrality(g, samples=10, seed=3)
    np.testing.assert_array_equal(first, second)


class TestAssortativity:
    @pytest.fixture
    def two_communities(self):
        within = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4)]
        across = [(0, 4), (5, 1)]
        g = build_digraph([(t, h, 1.0) for t, h in within + across], n=8)
        return g, ["A"] * 4 + ["B"] * 4

    def test_mixing_matrix(self, two_communities):
        g, labels = two_communities
        mixing = mixing_matrix(g, labels)
        assert mixing.labels == ["A", "B"]
        np.testing.assert_allclose(mixing.matrix, [[0.4, 0.1], [0.1, 0.4]])

    def test_coefficient(self, two_communities):
        g, labels = two_communities
        assert assortativity(g, labels) == pytest.approx(0.6)

    def test_perfectly_disassortative(self):
        g = build_digraph([(0, 1, 1.0), (1, 0, 1.0)], n=2)
        assert assortativity(g, ["A", "B"]) == pytest.approx(-1.0)

    def test_single_label_is_degenerate(self):
        g = build_digraph([(0, 1, 1.0)], n=2)
        with pytest.raises(DegenerateLabels):
            assortativity(g, ["A", "A"])

    def test_missing_label(self):
        g = build_digraph([(0, 1, 1.0)], n=2)
        with pytest.raises(UnlabeledNode):
            assortativity(g, ["A", ""])


class TestStability:
    def test_jaccard(self):
        assert jaccard({1, 2}, {2, 3}) == pytest.approx(1 / 3)
        assert jaccard(set(), set()) == 1.0

    def test_pairs_by_external_id(self):
        first = build_digraph([(0, 1, 0.1), (1, 2, 0.1)], n=3, node_ids=["a", "b", "c"])
        # another index order; one edge kept, one moved to a new node
        second = build_digraph(
            [(1, 0, 0.2), (0, 3, 0.2)], n=4, node_ids=["b", "a", "c", "d"]
        )
        report = jaccard_stability([first, second], periods=["2019-01", "2019-02"])
        row = report.rows[0]
        assert (row.period_a, row.period_b) == ("2019-01", "2019-02")
        assert row.node_jaccard == pytest.approx(3 / 4)
        assert row.edge_jaccard == pytest.approx(1 / 3)
        assert report.mean_edge_jaccard == pytest.approx(1 / 3)

    def test_symmetric_in_snapshot_order(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            first = labelled_digraph(rng, 8, 0.3)
            second = labelled_digraph(rng, 8, 0.3)
            forward = jaccard_stability([first, second]).rows[0]
            backward = jaccard_stability([second, first]).rows[0]
            assert forward.node_jaccard == backward.node_jaccard
            assert forward.edge_jaccard == backward.edge_jaccard

    def test_invariant_under_consistent_relabelling(self):
        rng = np.random.default_rng(7)
        names = [f"n{k}" for k in range(12)]
        renamed = {name: f"fund-{k}" for k, name in enumerate(rng.permutation(names))}
        for _ in range(50):
            first = labelled_digraph(rng, 8, 0.3, names)
            second = labelled_digraph(rng, 8, 0.3, names)
            base = jaccard_stability([first, second]).rows[0]
            moved = jaccard_stability(
                [relabelled(rng, first, renamed), relabelled(rng, second, renamed)]
            ).rows[0]
            assert moved.node_jaccard == pytest.approx(base.node_jaccard)
            assert moved.edge_jaccard == pytest.approx(base.edge_jaccard)

    def test_needs_two_snapshots(self):
        with pytest.raises(InsufficientSnapshots):
            jaccard_stability([build_digraph([], n=1)])


def test_degree_histogram():
    g = build_digraph([(0, 2, 1.0), (1, 2, 1.0), (2, 0, 1.0)], n=3)
    assert degree_histogram(g, "in") == {0: 1, 1: 1, 2: 1}
    assert degree_histogram(g, "out") == {1: 3}
    frame = histogram_frame(degree_histogram(g, "in"))
    assert frame["count"].sum() == 3


def test_generated_cross_degrees_are_heavy_tailed():
    snapshot = generate_market(GeneratorConfig(n_funds=2000, n_assets=500, seed=2019))
    histogram = degree_histogram(snapshot.cross_holdings.to_graph(), "in")
    degrees = np.repeat(list(histogram), list(histogram.values()))
    assert degrees.size == 2000
    assert degrees.max() > 10 * max(np.median(degrees), 1.0)
    # no single fund is held by a large share of the market
    assert degrees.max() / 1999 < 0.2


def test_bipartite_histogram_and_summary():
    g = build_bipartite(
        [(0, 0, 1.0), (1, 0, 1.0), (1, 1, 1.0), (2, 0, 1.0), (2, 2, 1.0)],
        fund_count=3,
        asset_count=3,
        asset_ids=["CASH", "A1", "A2"],
    )
    assert degree_histogram(g, "bipartite-asset") == {1: 2, 3: 1}
    summary = bipartite_summary(g, exclude_assets=["CASH"])
    assert summary.edges == 5
    assert summary.max_in_degree == 1
    assert summary.extra["most_held_asset"] == "A1"
    assert summary.extra["mean_fund_degree"] == pytest.approx(5 / 3)

    report = bipartite_centrality(g)
    assert report.n == 6
    assert report.node_ids[3] == "asset:CASH"
    # A1 -> F1 -> CASH -> F0, F2 -> A2
    assert average_path_length(bipartite_as_digraph(g), 4) == pytest.approx(13 / 5)


def test_network_summary_and_growth():
    g = build_digraph([(0, 1, 0.1), (1, 2, 0.1)], n=4)
    summary = network_summary(g)
    assert summary.average_degree == pytest.approx(0.5)
    assert summary.density == pytest.approx(2 / 12)
    assert summary.to_dict()["network"] == "cross_holdings"

    growth = series_growth([g, build_digraph([(0, 1, 0.1)], n=2)], periods=["a", "b"])
    assert growth.to_dict(orient="list") == {"period": ["a", "b"], "nodes": [4, 2], "edges": [2, 1]}
