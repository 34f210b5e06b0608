from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from coengage.clustering.louvain import ClusterAssignment
from coengage.errors import InputError
from coengage.model.graph import CoengagementGraph

BRIDGE_COLUMNS = [
    "label_a",
    "label_b",
    "node",
    "node_label",
    "cross_edge_count",
    "share",
    "cross_weight",
    "weight_share",
]
SATELLITE_COLUMNS = ["satellite", "hub", "edge_weight", "hub_weighted_degree"]


@dataclass(frozen=True)
class BridgeRow:
    label_a: str
    label_b: str
    node: str
    node_label: str
    cross_edge_count: int
    share: float  # cross_edge_count / edges between label_a and label_b
    cross_weight: int
    weight_share: float  # cross_weight / total weight of those edges


@dataclass(frozen=True)
class SatelliteRow:
    satellite: str
    hub: str
    edge_weight: int
    hub_weighted_degree: int


def _edge_frame(x: CoengagementGraph) -> pd.DataFrame:
    h = np.asarray(x.index.handles, dtype=object)
    return pd.DataFrame({"a": h[x.source], "b": h[x.target], "w": x.weight})


def _cross_edges(x: CoengagementGraph, labeled: ClusterAssignment) -> pd.DataFrame:
    """Edges whose endpoints sit in communities with different labels; pa < pb is the label pair."""
    node_label = {h: labeled.node_label(h) for h in labeled.handles}
    edges = _edge_frame(x)
    edges["la"] = edges["a"].map(node_label)
    edges["lb"] = edges["b"].map(node_label)
    cross = edges[edges["la"].notna() & edges["lb"].notna() & (edges["la"] != edges["lb"])].copy()
    swap = cross["la"] > cross["lb"]
    cross["pa"] = np.where(swap, cross["lb"], cross["la"])
    cross["pb"] = np.where(swap, cross["la"], cross["lb"])
    return cross


def bridge_table(x: CoengagementGraph, labeled: ClusterAssignment) -> list[BridgeRow]:
    """
    Per label pair (A, B), how cross-cluster edges are distributed over nodes.

    A cross edge joins a node in an A-labeled community with a node in a
    B-labeled community. Each cross edge is attributed to both endpoints, so
    per pair the node counts sum to twice the number of cross edges and the
    shares sum to 2.0.
    """
    if len(labeled.labels) < 2 or x.edge_count == 0:
        return []
    cross = _cross_edges(x, labeled)
    if cross.empty:
        return []

    totals = cross.groupby(["pa", "pb"]).agg(pair_edges=("w", "size"), pair_weight=("w", "sum"))
    ends = pd.concat(
        [
            cross[["pa", "pb", "a", "la", "w"]].rename(columns={"a": "node", "la": "node_label"}),
            cross[["pa", "pb", "b", "lb", "w"]].rename(columns={"b": "node", "lb": "node_label"}),
        ],
        ignore_index=True,
    )
    per_node = (
        ends.groupby(["pa", "pb", "node", "node_label"])
        .agg(n_edges=("w", "size"), n_weight=("w", "sum"))
        .reset_index()
        .join(totals, on=["pa", "pb"])
        .sort_values(["pa", "pb", "n_edges", "node"], ascending=[True, True, False, True])
    )
    return [
        BridgeRow(
            label_a=str(r.pa),
            label_b=str(r.pb),
            node=str(r.node),
            node_label=str(r.node_label),
            cross_edge_count=int(r.n_edges),
            share=int(r.n_edges) / int(r.pair_edges),
            cross_weight=int(r.n_weight),
            weight_share=int(r.n_weight) / int(r.pair_weight),
        )
        for r in per_node.itertuples(index=False)
    ]


def bridge_concentration(
    x: CoengagementGraph,
    labeled: ClusterAssignment,
    *,
    coverage: float = 0.98,
) -> dict[tuple[str, str], list[str]]:
    """
    Per label pair, the shortest prefix of the bridge ranking whose nodes touch
    at least `coverage` of that pair's cross-cluster edges.
    """
    if not 0.0 < coverage <= 1.0:
        raise InputError("coverage must be in (0, 1]")
    rows = bridge_table(x, labeled)
    if not rows:
        return {}
    cross = _cross_edges(x, labeled)
    out: dict[tuple[str, str], list[str]] = {}
    for (pa, pb), pair_edges in cross.groupby(["pa", "pb"]):
        ranked = [r.node for r in rows if (r.label_a, r.label_b) == (pa, pb)]
        total = len(pair_edges)
        covered = np.zeros(total, dtype=bool)
        a, b = pair_edges["a"].to_numpy(), pair_edges["b"].to_numpy()
        chosen: list[str] = []
        for node in ranked:
            chosen.append(node)
            covered |= (a == node) | (b == node)
            if covered.sum() >= coverage * total:
                break
        out[(str(pa), str(pb))] = chosen
    return out


def satellites(x: CoengagementGraph, *, hub_min_weighted_degree: int) -> list[SatelliteRow]:
    """
    One-degree nodes whose only neighbor is a hub (weighted degree >=
    hub_min_weighted_degree), sorted by hub then satellite.
    """
    if x.edge_count == 0:
        return []
    deg = x.degrees
    wdeg = x.weighted_degrees
    h = x.index.handles
    rows: list[SatelliteRow] = []
    for sat, hub in ((x.source, x.target), (x.target, x.source)):
        mask = (deg[sat] == 1) & (wdeg[hub] >= hub_min_weighted_degree)
        for s_o, h_o, w in zip(sat[mask], hub[mask], x.weight[mask]):
            rows.append(
                SatelliteRow(
                    satellite=h[int(s_o)],
                    hub=h[int(h_o)],
                    edge_weight=int(w),
                    hub_weighted_degree=int(wdeg[h_o]),
                )
            )
    return sorted(rows, key=lambda r: (r.hub, r.satellite))


def satellites_by_hub(rows: list[SatelliteRow]) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for r in rows:
        out.setdefault(r.hub, []).append(r.satellite)
    return out
