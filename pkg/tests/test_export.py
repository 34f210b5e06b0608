from __future__ import annotations

import json

import networkx as nx
import numpy as np
import pytest

from coengage.clustering.louvain import ClusterAssignment
from coengage.errors import InputError
from coengage.io.attributes import NodeAttributes
from coengage.io.export import (
    read_edge_csv,
    read_gexf_edges,
    write_assignment_csv,
    write_edge_csv,
    write_gexf,
    write_summary_json,
)
from coengage.model.graph import CoengagementGraph, NodeIndex


def _x() -> CoengagementGraph:
    idx = NodeIndex.from_handles(["a", "b", "c", "d"])
    return CoengagementGraph.from_edges(idx, np.array([0, 0, 2]), np.array([1, 2, 3]), np.array([3, 1, 2]))


def test_edge_csv_layout_and_round_trip(tmp_path):
    p = tmp_path / "edges.csv"
    write_edge_csv(_x(), p)
    assert p.read_text(encoding="utf-8") == "source,target,weight\na,b,3\na,c,1\nc,d,2\n"
    back = read_edge_csv(p)
    assert back.edge_triples() == _x().edge_triples()


def test_empty_edge_csv_is_header_only(tmp_path):
    p = tmp_path / "edges.csv"
    write_edge_csv(CoengagementGraph.empty(NodeIndex(())), p)
    assert p.read_text(encoding="utf-8") == "source,target,weight\n"


@pytest.mark.parametrize(
    "body",
    [
        "a,a,1\n",  # self-edge
        "a,b,1\nb,a,2\n",  # duplicate unordered pair
        "a,b,0\n",
        "a,b,1.5\n",
    ],
)
def test_read_edge_csv_rejects_invalid_rows(tmp_path, body):
    p = tmp_path / "edges.csv"
    p.write_text("source,target,weight\n" + body, encoding="utf-8")
    with pytest.raises(InputError):
        read_edge_csv(p)


def test_gexf_round_trip_with_attributes(tmp_path, gexf_checker):
    x = _x()
    clusters = ClusterAssignment(
        handles=x.node_handles,
        communities=np.array([0, 0, 1, 1]),
        modularity=0.0,
        labels={0: "left"},
    )
    attrs = {"a": NodeAttributes("a", display_label="Account A", suspended=True)}
    p = tmp_path / "x.gexf"
    write_gexf(x, p, clusters=clusters, attrs=attrs)
    gexf_checker(p)

    assert read_gexf_edges(p) == x.edge_triples()
    gx = nx.read_gexf(str(p))
    assert gx.nodes["a"]["label"] == "Account A"
    assert gx.nodes["a"]["weighted_degree"] == 4
    assert gx.nodes["a"]["cluster_label"] == "left"
    assert gx.nodes["a"]["suspended"] is True
    assert gx.nodes["d"]["cluster"] == "1"
    assert "cluster_label" not in gx.nodes["d"]
    text = p.read_text(encoding="utf-8")
    assert 'version="1.2"' in text
    assert "lastmodifieddate" not in text


def test_gexf_is_byte_deterministic(tmp_path):
    write_gexf(_x(), tmp_path / "one.gexf")
    write_gexf(_x(), tmp_path / "two.gexf")
    assert (tmp_path / "one.gexf").read_bytes() == (tmp_path / "two.gexf").read_bytes()


def test_gexf_rejects_empty_graph(tmp_path):
    with pytest.raises(InputError):
        write_gexf(CoengagementGraph.empty(NodeIndex(())), tmp_path / "x.gexf")


def test_assignment_csv(tmp_path):
    x = _x()
    clusters = ClusterAssignment(
        handles=x.node_handles, communities=np.array([0, 0, 1, 1]), modularity=0.0, labels={1: "right"}
    )
    p = tmp_path / "clusters.csv"
    write_assignment_csv(clusters, p)
    assert p.read_text(encoding="utf-8").splitlines() == [
        "node,community,label",
        "a,0,",
        "b,0,",
        "c,1,right",
        "d,1,right",
    ]


def test_summary_json_is_sorted_and_nan_free(tmp_path):
    p = tmp_path / "summary.json"
    write_summary_json({"b": np.int64(2), "a": float("nan"), "c": (1, 2)}, p)
    text = p.read_text(encoding="utf-8")
    assert text.endswith("}\n")
    assert list(json.loads(text)) == ["a", "b", "c"]
    assert json.loads(text) == {"a": None, "b": 2, "c": [1, 2]}
