from __future__ import annotations

import json

import networkx as nx
import numpy as np
import pandas as pd
import pytest

from coengage.errors import InputError
from coengage.io.interactions import read_interactions
from coengage.model.graph import EngagementGraph, ProjectionParams
from coengage.projection.engine import project
from coengage.synth.generator import (
    BridgeSpec,
    ClusterSpec,
    FollowbackSpec,
    SatelliteSpec,
    ScenarioSpec,
    expected_edges,
    generate,
    load_scenario,
    write_dataset,
)


def _graph(ds) -> EngagementGraph:
    df = ds.interactions
    return EngagementGraph.from_records(zip(df["engager"], df["target"], df["count"]))


def test_single_cluster_edge_weight():
    ds = generate(ScenarioSpec(seed=0, clusters=(ClusterSpec("A", 2, 100),)))
    x, _ = project(_graph(ds), ProjectionParams(n=100, s=1))
    assert x.edge_triples() == [("A_inf000", "A_inf001", 100)]
    assert expected_edges(ds.manifest, 100, 1) == [("A_inf000", "A_inf001", 100)]


def test_empty_spec_gives_empty_outputs(tmp_path):
    ds = generate(ScenarioSpec())
    assert ds.interactions.empty and ds.attributes.empty and ds.landmarks.empty
    paths = write_dataset(ds, tmp_path)
    assert open(paths["interactions"], encoding="utf-8").read() == "engager,target,count,timestamp\n"
    assert expected_edges(ds.manifest, 1, 1) == []


def test_generation_is_deterministic():
    spec = ScenarioSpec(seed=9, clusters=(ClusterSpec("A", 4, 50, engagement_rate=0.5, counts=(1, 3)),))
    one, two = generate(spec), generate(spec)
    pd.testing.assert_frame_equal(one.interactions, two.interactions)
    pd.testing.assert_frame_equal(one.attributes, two.attributes)
    assert one.manifest == two.manifest


def test_followback_group_threshold():
    ds = generate(ScenarioSpec(seed=3, followback_groups=(FollowbackSpec("F", size=30, internal_count=25),)))
    g = _graph(ds)
    x, _ = project(g, ProjectionParams(n=25, s=25))
    assert x.node_count == 30
    assert x.edge_count == 30 * 29 // 2
    assert set(x.weight.tolist()) == {28}
    gx = nx.Graph()
    gx.add_weighted_edges_from(x.edge_triples())
    assert nx.is_connected(gx)
    assert project(g, ProjectionParams(n=25, s=26))[0].edge_count == 0


def _rich_spec() -> ScenarioSpec:
    return ScenarioSpec(
        seed=5,
        clusters=(
            ClusterSpec("A", 4, 120, engagement_rate=0.5, counts=(1, 2, 5)),
            ClusterSpec("B", 3, 80, counts=(2,)),
        ),
        bridges=(BridgeSpec("bridge", {"A": 30, "B": 20}, count=2),),
        followback_groups=(FollowbackSpec("F", size=12, internal_count=6, attached_label="B"),),
        satellites=(SatelliteSpec("A_inf000", count=2, audience=7),),
    )


def test_manifest_predicts_projection_exactly(tmp_path):
    ds = generate(_rich_spec())
    paths = write_dataset(ds, tmp_path)
    g = read_interactions(paths["interactions"]).graph
    manifest = json.loads(open(paths["manifest"], encoding="utf-8").read())
    for n in (1, 5, 10, 30, 60):
        for s in (1, 2, 5, 6):
            x, _ = project(g, ProjectionParams(n=n, s=s))
            assert x.edge_triples() == expected_edges(manifest, n, s)


def test_satellites_attach_only_to_their_hub():
    ds = generate(_rich_spec())
    x, _ = project(_graph(ds), ProjectionParams(n=1, s=1))
    for sat in ("A_inf000_sat000", "A_inf000_sat001"):
        assert [(n.handle, w) for n, w in x.neighbors(sat)] == [("A_inf000", 7)]


def test_attributes_follow_the_planted_profiles():
    spec = ScenarioSpec(
        seed=2,
        clusters=(ClusterSpec("A", 10, 400, suspended_rate=0.1),),
        followback_groups=(FollowbackSpec("F", size=30, internal_count=25, suspended_rate=0.7),),
    )
    ds = generate(spec)
    attrs = ds.attributes.set_index("node")
    fb = attrs.loc[[f"F_fb{k:03d}" for k in range(30)]]
    ratio = fb["followers"] / fb["following"]
    assert ratio.between(0.94, 1.06).all()
    assert (fb["suspended"] == "true").sum() == 21
    mainstream = attrs.loc[[h for h in attrs.index if h.startswith("A_aud")]]
    spread = np.log10(mainstream["followers"] / mainstream["following"])
    assert spread.min() < -0.5 and spread.max() > 2.5
    assert (mainstream["suspended"] == "true").sum() == 40


def test_landmarks_cover_clusters_and_followback_groups():
    ds = generate(_rich_spec())
    by_label = ds.landmarks.groupby("label")["handle"].apply(list).to_dict()
    assert by_label["A"] == ["A_inf000", "A_inf001", "A_inf002", "A_inf003"]
    assert by_label["F"] == ["F_fb000", "F_fb001", "F_fb002"]


@pytest.mark.parametrize(
    "spec",
    [
        {"clusters": [{"label": "A", "n_influencers": 2, "n_audience": 5}], "bridges": [{"handle": "x", "overlaps": {"Z": 1}}]},
        {"followback_groups": [{"label": "F", "size": 3, "internal_count": 2, "attached_label": "nope"}]},
        {"clusters": [{"label": "A", "n_influencers": 2, "n_audience": 5, "counts": [0]}]},
        {"satellites": [{"hub": "ghost", "count": 1}]},
        {"clusters": [{"label": "A", "n_influencers": 1, "n_audience": 1, "colour": "red"}]},
    ],
)
def test_inconsistent_scenarios_are_rejected(spec):
    with pytest.raises(InputError):
        ScenarioSpec.from_dict(spec)


def test_load_scenario(tmp_path):
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps({"seed": 4, "clusters": [{"label": "A", "n_influencers": 2, "n_audience": 3}]}))
    spec = load_scenario(p)
    assert spec.seed == 4
    assert spec.clusters[0].counts == (1,)
    with pytest.raises(InputError):
        load_scenario(tmp_path / "missing.json")
