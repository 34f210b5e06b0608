from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

GEXF_NS = "http://www.gexf.net/1.2draft"
_ATTR_TYPES = {"integer", "long", "double", "float", "boolean", "liststring", "string", "anyURI"}


def _q(tag: str) -> str:
    return f"{{{GEXF_NS}}}{tag}"


def _check_value(kind: str, value: str) -> None:
    if kind in ("integer", "long"):
        int(value)
    elif kind in ("double", "float"):
        float(value)
    elif kind == "boolean":
        assert value in ("true", "false"), value


def check_gexf_12(path: str | Path) -> ET.Element:
    """Structural rules of the GEXF 1.2 schema that Gephi relies on."""
    root = ET.parse(path).getroot()
    assert root.tag == _q("gexf")
    assert root.get("version") == "1.2"
    children = [c.tag for c in root]
    assert children[-1] == _q("graph") and children.count(_q("graph")) == 1
    assert set(children) <= {_q("meta"), _q("graph")}

    graph = root.find(_q("graph"))
    assert graph.get("defaultedgetype", "undirected") in {"directed", "undirected", "mutual"}
    assert graph.get("mode", "static") in {"static", "dynamic"}

    declared: dict[str, dict[str, str]] = {"node": {}, "edge": {}}
    for block in graph.findall(_q("attributes")):
        cls = block.get("class")
        assert cls in declared
        for attr in block.findall(_q("attribute")):
            assert attr.get("id") and attr.get("title")
            assert attr.get("type") in _ATTR_TYPES
            declared[cls][attr.get("id")] = attr.get("type")

    nodes = graph.find(_q("nodes"))
    edges = graph.find(_q("edges"))
    assert nodes is not None and edges is not None
    node_ids: set[str] = set()
    for node in nodes.findall(_q("node")):
        nid = node.get("id")
        assert nid and nid not in node_ids
        node_ids.add(nid)
        for av in node.iter(_q("attvalue")):
            assert av.get("for") in declared["node"]
            _check_value(declared["node"][av.get("for")], av.get("value"))

    edge_ids: set[str] = set()
    for edge in edges.findall(_q("edge")):
        eid = edge.get("id")
        assert eid is not None and eid not in edge_ids
        edge_ids.add(eid)
        assert edge.get("source") in node_ids and edge.get("target") in node_ids
        if edge.get("weight") is not None:
            float(edge.get("weight"))
        for av in edge.iter(_q("attvalue")):
            assert av.get("for") in declared["edge"]
            _check_value(declared["edge"][av.get("for")], av.get("value"))
    return root


@pytest.fixture
def gexf_checker():
    return check_gexf_12
