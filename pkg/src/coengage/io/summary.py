from __future__ import annotations

from collections.abc import Mapping
from typing import Any

from coengage import __version__
from coengage.io.export import jsonable
from coengage.io.interactions import IngestReport
from coengage.model.graph import CoengagementGraph, EngagementGraph, ProjectionParams
from coengage.projection.engine import ProjectionReport

SUMMARY_KEYS = ("params", "counts", "ingest", "projection", "clusters", "analysis", "provenance")


def graph_counts(g: EngagementGraph | None, x: CoengagementGraph | None) -> dict[str, Any]:
    out: dict[str, Any] = {
        "engagement_nodes": None,
        "engagement_edges": None,
        "engagement_weight": None,
        "coengagement_nodes": None,
        "coengagement_edges": None,
        "coengagement_weight": None,
    }
    if g is not None:
        out.update(engagement_nodes=g.node_count, engagement_edges=g.edge_count, engagement_weight=g.total_weight)
    if x is not None:
        out.update(coengagement_nodes=x.node_count, coengagement_edges=x.edge_count, coengagement_weight=x.total_weight)
    return out


def summary_payload(
    *,
    params: ProjectionParams | None = None,
    g: EngagementGraph | None = None,
    x: CoengagementGraph | None = None,
    ingest: IngestReport | None = None,
    projection: ProjectionReport | None = None,
    clusters: Mapping[str, Any] | None = None,
    analysis: Mapping[str, Any] | None = None,
    provenance: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    """
    Summary document shared by the project, cluster and analyze commands.
    Sections a command does not produce are null.
    """
    return jsonable(
        {
            "params": None if params is None else {"n": params.n, "s": params.s},
            "counts": graph_counts(g, x),
            "ingest": None if ingest is None else ingest.to_dict(),
            "projection": None if projection is None else projection.to_dict(),
            "clusters": None if clusters is None else dict(clusters),
            "analysis": None if analysis is None else dict(analysis),
            "provenance": {"version": __version__, **(provenance or {})},
        }
    )
