from __future__ import annotations

from collections import Counter
from itertools import combinations

import numpy as np
import pytest

from coengage.errors import CapacityError, InputError
from coengage.model.graph import EngagementGraph, ProjectionParams
from coengage.projection.engine import ProjectionOptions, project, qualifying_targets


def _random_records(rng: np.random.Generator) -> list[tuple[str, str, int]]:
    n_engagers = int(rng.integers(1, 51))
    n_targets = int(rng.integers(2, 31))
    n_rows = int(rng.integers(1, 501))
    # shared pool so some accounts play both roles
    engagers = [f"a{k:02d}" for k in range(n_engagers)]
    targets = [f"a{k:02d}" for k in range(20, 20 + n_targets)]
    return [
        (engagers[int(rng.integers(0, n_engagers))], targets[int(rng.integers(0, n_targets))], int(rng.integers(1, 4)))
        for _ in range(n_rows)
    ]


def _oracle(records: list[tuple[str, str, int]], n: int, s: int) -> list[tuple[str, str, int]]:
    totals: Counter[tuple[str, str]] = Counter()
    for e, t, c in records:
        totals[(e, t)] += c
    qualifying: dict[str, set[str]] = {}
    for (e, t), c in totals.items():
        if c >= s:
            qualifying.setdefault(e, set()).add(t)
    pairs: Counter[tuple[str, str]] = Counter()
    for targets in qualifying.values():
        for a, b in combinations(sorted(targets), 2):
            pairs[(a, b)] += 1
    return sorted((a, b, w) for (a, b), w in pairs.items() if w >= n)


def test_projection_matches_brute_force_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        records = _random_records(rng)
        g = EngagementGraph.from_records(records)
        for n in (1, 2, 3):
            for s in (1, 2, 5):
                x, _ = project(g, ProjectionParams(n=n, s=s))
                assert x.edge_triples() == _oracle(records, n, s)


def test_projection_is_monotone_in_n_and_s():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        g = EngagementGraph.from_records(_random_records(rng))
        n1, n2 = sorted(int(v) for v in rng.integers(1, 5, size=2))
        s1, s2 = sorted(int(v) for v in rng.integers(1, 4, size=2))
        loose = {(a, b): w for a, b, w in project(g, ProjectionParams(n=n1, s=s1))[0].edge_triples()}
        tight = {(a, b): w for a, b, w in project(g, ProjectionParams(n=n2, s=s2))[0].edge_triples()}
        assert set(tight) <= set(loose)
        low_s = {(a, b): w for a, b, w in project(g, ProjectionParams(n=1, s=s1))[0].edge_triples()}
        high_s = {(a, b): w for a, b, w in project(g, ProjectionParams(n=1, s=s2))[0].edge_triples()}
        assert all(w <= low_s[pair] for pair, w in high_s.items())


def test_threads_do_not_change_the_result():
    rng = np.random.default_rng(5)
    g = EngagementGraph.from_records(_random_records(rng) + _random_records(rng))
    params = ProjectionParams(n=1, s=1)
    one, r1 = project(g, params, options=ProjectionOptions(threads=1))
    four, r4 = project(g, params, options=ProjectionOptions(threads=4))
    assert one.edge_triples() == four.edge_triples()
    assert r1.to_dict() == r4.to_dict()


def test_shared_engaging_node_schematic():
    # red engages blue and yellow; yellow engages blue and green
    g = EngagementGraph.from_records(
        [("red", "blue", 2), ("red", "yellow", 1), ("yellow", "blue", 1), ("yellow", "green", 1)]
    )
    x, _ = project(g, ProjectionParams(n=1, s=1))
    assert x.edge_triples() == [("blue", "green", 1), ("blue", "yellow", 1)]
    assert "red" not in x
    assert project(g, ProjectionParams(n=2, s=1))[0].edge_count == 0
    # raising s drops the link that relied on a single engagement of yellow by red
    assert project(g, ProjectionParams(n=1, s=2))[0].edge_count == 0


def test_three_engagers_two_targets():
    g = EngagementGraph.from_records([(f"u{k}", t, 2) for k in range(3) for t in ("a", "b")])
    assert project(g, ProjectionParams(n=3, s=2))[0].edge_triples() == [("a", "b", 3)]
    assert project(g, ProjectionParams(n=4, s=2))[0].edge_count == 0
    assert project(g, ProjectionParams(n=3, s=3))[0].edge_count == 0


def test_empty_graph_projects_to_empty():
    x, report = project(EngagementGraph.empty(), ProjectionParams(n=1, s=1))
    assert x.node_count == 0 and x.edge_count == 0
    assert report.pair_expansions == 0


def test_qualifying_targets():
    g = EngagementGraph.from_records([("u", "a", 3), ("u", "b", 1), ("u", "c", 5)])
    assert [t.handle for t in qualifying_targets(g, "u", 3)] == ["a", "c"]
    assert qualifying_targets(g, "nobody", 1) == ()
    with pytest.raises(InputError):
        qualifying_targets(g, "u", 0)


def _fan_graph() -> EngagementGraph:
    rows = [("heavy", f"t{k}", 1) for k in range(6)]
    rows += [("light", "t0", 1), ("light", "t1", 1)]
    return EngagementGraph.from_records(rows)


def test_fanout_cap_soft_warns_but_keeps_pairs():
    x, report = project(_fan_graph(), ProjectionParams(n=1, s=1), options=ProjectionOptions(max_fanout_cap=3))
    assert [(w.engager, w.fanout, w.skipped) for w in report.fanout_warnings] == [("heavy", 6, False)]
    assert x.edge_count == 15
    assert x.edge_weight("t0", "t1") == 2


def test_fanout_cap_hard_skips_engager():
    x, report = project(
        _fan_graph(), ProjectionParams(n=1, s=1), options=ProjectionOptions(max_fanout_cap=3, cap_hard=True)
    )
    assert report.skipped_engagers == 1
    assert x.edge_triples() == [("t0", "t1", 1)]


def test_pair_budget_raises_capacity_error():
    with pytest.raises(CapacityError) as info:
        project(_fan_graph(), ProjectionParams(n=1, s=1), options=ProjectionOptions(max_pairs=10))
    assert info.value.phase == "pair-expansion"
