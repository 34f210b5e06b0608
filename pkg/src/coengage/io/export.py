from __future__ import annotations

import json
import os
from collections.abc import Mapping, Sequence
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any

import networkx as nx
import numpy as np
import pandas as pd
from networkx.readwrite.gexf import GEXFWriter

from coengage import __version__
from coengage.errors import InputError
from coengage.io.attributes import NodeAttributes
from coengage.model.graph import CoengagementGraph, NodeIndex, ProjectionParams

if TYPE_CHECKING:
    from coengage.clustering.louvain import ClusterAssignment

EDGE_COLUMNS = ["source", "target", "weight"]


def _mkdirp(path: str | Path) -> None:
    d = os.path.dirname(str(path))
    if d:
        os.makedirs(d, exist_ok=True)


def write_gexf(
    x: CoengagementGraph,
    path: str | Path,
    *,
    clusters: ClusterAssignment | None = None,
    attrs: Mapping[str, NodeAttributes] | None = None,
) -> None:
    """
    GEXF 1.2 (undirected) for Gephi. Nodes carry weighted_degree and, when
    available, cluster / cluster_label / suspended attvalues; edges carry weight.
    Nodes and edges are emitted in ordinal order and the file has no timestamp,
    so identical inputs give identical bytes.
    """
    if x.node_count == 0:
        raise InputError("cannot export an empty coengagement graph to GEXF")
    attrs = attrs or {}
    wdeg = x.weighted_degrees
    gx = nx.Graph()
    for ordinal, handle in zip(x.node_ordinals, x.node_handles):
        a = attrs.get(handle)
        data: dict[str, Any] = {"label": (a.display_label if a and a.display_label else handle)}
        data["weighted_degree"] = int(wdeg[ordinal])
        if clusters is not None:
            c = clusters.get_community(handle)
            if c is not None:
                data["cluster"] = str(c)
                label = clusters.label_of(c)
                if label is not None:
                    data["cluster_label"] = label
        if a is not None and a.suspended is not None:
            data["suspended"] = bool(a.suspended)
        gx.add_node(handle, **data)
    for a_handle, b_handle, w in x.edge_triples():
        gx.add_edge(a_handle, b_handle, weight=int(w))

    writer = GEXFWriter(encoding="utf-8", prettyprint=True, version="1.2draft")
    meta = writer.xml.find("meta")
    if meta is not None:
        meta.attrib.pop("lastmodifieddate", None)
        creator = meta.find("creator")
        if creator is not None:
            creator.text = f"coengage {__version__}"
    writer.add_graph(gx)
    _mkdirp(path)
    with open(path, "wb") as fh:
        writer.write(fh)


def read_gexf_edges(path: str | Path) -> list[tuple[str, str, int]]:
    gx = nx.read_gexf(str(path))
    out = []
    for a, b, d in gx.edges(data=True):
        lo, hi = sorted((str(a), str(b)))
        out.append((lo, hi, int(d.get("weight", 1))))
    return sorted(out)


def write_edge_csv(x: CoengagementGraph, path: str | Path) -> None:
    """Header source,target,weight; rows sorted by (source ordinal, target ordinal)."""
    h = np.asarray(x.index.handles, dtype=object)
    df = pd.DataFrame(
        {
            "source": h[x.source] if x.edge_count else np.array([], dtype=object),
            "target": h[x.target] if x.edge_count else np.array([], dtype=object),
            "weight": x.weight,
        },
        columns=EDGE_COLUMNS,
    )
    _mkdirp(path)
    df.to_csv(path, index=False, lineterminator="\n")


def read_edge_csv(path: str | Path, *, params: ProjectionParams | None = None) -> CoengagementGraph:
    path = Path(path)
    if not path.exists():
        raise InputError(f"edge file not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)
    except pd.errors.EmptyDataError as e:
        raise InputError(f"{path}: empty edge file") from e
    except pd.errors.ParserError as e:
        raise InputError(f"{path}: {e}") from e
    missing = set(EDGE_COLUMNS) - set(df.columns)
    if missing:
        raise InputError(f"{path}: missing required column(s) {sorted(missing)}")
    if ((df["source"] == "") | (df["target"] == "")).any():
        raise InputError(f"{path}: source and target must be non-empty")
    weight = pd.to_numeric(df["weight"], errors="coerce")
    if weight.isna().any() or (weight != np.floor(weight)).any() or (weight < 1).any():
        bad = int(np.flatnonzero((weight.isna() | (weight < 1) | (weight != np.floor(weight))).to_numpy())[0])
        raise InputError(f"{path}:{bad + 2}: weight must be an integer >= 1")
    index = NodeIndex.from_handles(pd.concat([df["source"], df["target"]]).unique())
    lookup = pd.Index(index.handles)
    return CoengagementGraph.from_edges(
        index,
        lookup.get_indexer(df["source"]),
        lookup.get_indexer(df["target"]),
        weight.to_numpy(dtype=np.int64),
        params=params,
    )


def write_assignment_csv(assignment: ClusterAssignment, path: str | Path) -> None:
    df = pd.DataFrame(
        {
            "node": list(assignment.handles),
            "community": assignment.communities.astype(np.int64),
            "label": [assignment.label_of(int(c)) or "" for c in assignment.communities],
        },
        columns=["node", "community", "label"],
    )
    _mkdirp(path)
    df.to_csv(path, index=False, lineterminator="\n")


def table_records(rows: Sequence[Any]) -> list[dict[str, Any]]:
    return [jsonable(asdict(r)) if is_dataclass(r) else jsonable(r) for r in rows]


def write_table_csv(rows: Sequence[Any], path: str | Path, *, columns: Sequence[str]) -> None:
    records = [asdict(r) if is_dataclass(r) else dict(r) for r in rows]
    df = pd.DataFrame.from_records(records, columns=list(columns))
    _mkdirp(path)
    df.to_csv(path, index=False, lineterminator="\n")


def jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [jsonable(v) for v in items]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        f = float(value)
        return None if np.isnan(f) else f
    if is_dataclass(value) and not isinstance(value, type):
        return jsonable(asdict(value))
    return value


def write_summary_json(payload: Mapping[str, Any], path: str | Path) -> None:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    text = json.dumps(jsonable(payload), indent=2, sort_keys=True, allow_nan=False)
    _mkdirp(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")
