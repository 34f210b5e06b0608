from __future__ import annotations

from itertools import combinations

import networkx as nx
import numpy as np
import pytest

from coengage.clustering.louvain import louvain, modularity, top_nodes
from coengage.errors import InputError
from coengage.model.graph import CoengagementGraph, NodeIndex


def _graph(edges: list[tuple[str, str, int]]) -> CoengagementGraph:
    idx = NodeIndex.from_handles([h for a, b, _ in edges for h in (a, b)])
    o = idx.ordinal
    return CoengagementGraph.from_edges(
        idx,
        np.array([o(a) for a, _, _ in edges]),
        np.array([o(b) for _, b, _ in edges]),
        np.array([w for _, _, w in edges]),
    )


def _set_partitions(n: int):
    # restricted growth strings
    def rec(prefix: list[int], k: int):
        if len(prefix) == n:
            yield list(prefix)
            return
        for c in range(k + 1):
            prefix.append(c)
            yield from rec(prefix, max(k, c + 1))
            prefix.pop()

    yield from rec([0], 1) if n else iter([[]])


def test_two_triangles():
    x = _graph([("a", "b", 1), ("b", "c", 1), ("a", "c", 1), ("d", "e", 1), ("e", "f", 1), ("d", "f", 1)])
    result = louvain(x, seed=42)
    m = result.membership()
    assert m["a"] == m["b"] == m["c"]
    assert m["d"] == m["e"] == m["f"]
    assert m["a"] != m["d"]
    assert result.modularity == pytest.approx(0.5, abs=1e-12)
    assert list(result.communities) == [0, 0, 0, 1, 1, 1]


def test_louvain_is_close_to_exhaustive_optimum():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 50:
        k = int(rng.integers(3, 9))
        handles = [f"n{i}" for i in range(k)]
        edges = [
            (a, b, int(rng.integers(1, 6)))
            for a, b in combinations(handles, 2)
            if rng.random() < 0.45
        ]
        if not edges:
            continue
        x = _graph(edges)
        best = max(modularity(x, np.asarray(p)) for p in _set_partitions(x.node_count))
        result = louvain(x, seed=int(rng.integers(0, 1000)))
        assert result.modularity >= 0.9 * best - 1e-9
        checked += 1


def test_path_like_graph_does_not_collapse_into_one_community():
    x = _graph([("n0", "n1", 4), ("n0", "n3", 1), ("n1", "n4", 5), ("n2", "n4", 3), ("n3", "n4", 2)])
    best = max(modularity(x, np.asarray(p)) for p in _set_partitions(x.node_count))
    assert best == pytest.approx(0.0978, abs=1e-4)
    for seed in (1, 262):
        result = louvain(x, seed=seed)
        assert len(result.community_ids) > 1
        assert result.modularity >= 0.9 * best


def test_single_run_is_kept_when_restarts_is_one():
    x = _graph([("a", "b", 1), ("b", "c", 1), ("a", "c", 1), ("d", "e", 1), ("e", "f", 1), ("d", "f", 1)])
    assert louvain(x, seed=3, restarts=1).modularity == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(InputError):
        louvain(x, restarts=0)


def test_reported_modularity_matches_networkx():
    rng = np.random.default_rng(8)
    for _ in range(20):
        handles = [f"v{i:02d}" for i in range(20)]
        edges = [(a, b, int(rng.integers(1, 4))) for a, b in combinations(handles, 2) if rng.random() < 0.2]
        x = _graph(edges)
        result = louvain(x, seed=1)
        gx = nx.Graph()
        gx.add_weighted_edges_from(edges)
        groups = [set(result.members(c)) for c in result.community_ids]
        assert abs(result.modularity - nx.community.modularity(gx, groups, weight="weight")) < 1e-9


def test_louvain_is_deterministic_per_seed():
    rng = np.random.default_rng(0)
    handles = [f"v{i:02d}" for i in range(30)]
    edges = [(a, b, int(rng.integers(1, 4))) for a, b in combinations(handles, 2) if rng.random() < 0.15]
    x = _graph(edges)
    one, two = louvain(x, seed=7), louvain(x, seed=7)
    assert np.array_equal(one.communities, two.communities)
    assert one.modularity == two.modularity


def test_empty_graph_gives_empty_assignment():
    result = louvain(CoengagementGraph.empty(NodeIndex(())))
    assert len(result) == 0
    assert result.modularity == 0.0


def test_resolution_must_be_positive():
    with pytest.raises(InputError):
        louvain(_graph([("a", "b", 1)]), resolution=0.0)


def test_top_nodes_orders_by_weighted_degree():
    x = _graph([("a", "b", 5), ("b", "c", 1), ("a", "c", 1), ("x", "y", 2)])
    result = louvain(x, seed=42)
    tops = top_nodes(x, result, k=2)
    assert tops[result.community_of("a")][0] == ("a", 6)
    assert tops[result.community_of("x")] == [("x", 2), ("y", 2)]
