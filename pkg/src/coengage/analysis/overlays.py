from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from coengage.clustering.louvain import ClusterAssignment
from coengage.config import DEFAULT_FOLLOWBACK_EPSILON
from coengage.errors import InputError
from coengage.io.attributes import BOOLEAN_ATTRIBUTES, NodeAttributes
from coengage.model.graph import CoengagementGraph

logger = logging.getLogger(__name__)

FOLLOWBACK_COLUMNS = [
    "community",
    "label",
    "members",
    "attributed",
    "excluded",
    "median_ratio",
    "near_parity_fraction",
]
OVERLAY_COLUMNS = ["community", "label", "attribute", "members", "known", "true_count", "unknown", "rate"]


@dataclass(frozen=True)
class FollowbackRow:
    community: int
    label: str | None
    members: int
    attributed: int  # members with both follower and following counts
    excluded: int  # attributed members with following == 0
    median_ratio: float
    near_parity_fraction: float


@dataclass(frozen=True)
class OverlayRow:
    community: int
    label: str
    attribute: str
    members: int
    known: int
    true_count: int
    unknown: int
    rate: float | None


def _members_in_graph(x: CoengagementGraph, clusters: ClusterAssignment, community: int) -> tuple[str, ...]:
    return tuple(h for h in clusters.members(community) if h in x)


def followback_metrics(
    x: CoengagementGraph,
    attrs: Mapping[str, NodeAttributes],
    clusters: ClusterAssignment,
    *,
    epsilon: float = DEFAULT_FOLLOWBACK_EPSILON,
) -> list[FollowbackRow]:
    """
    Per community: median followers/following ratio and the fraction of members
    whose ratio lies in [1 - epsilon, 1 + epsilon]. Members following nobody
    are excluded from ratios and counted in `excluded`.
    """
    if epsilon < 0:
        raise InputError("epsilon must be >= 0")
    rows: list[FollowbackRow] = []
    for c in clusters.community_ids:
        members = _members_in_graph(x, clusters, c)
        ratios: list[float] = []
        attributed = excluded = 0
        for h in members:
            a = attrs.get(h)
            if a is None or a.followers is None or a.following is None:
                continue
            attributed += 1
            if a.following == 0:
                excluded += 1
                continue
            ratios.append(a.followers / a.following)
        if not ratios:
            logger.info("community %d has no members with usable follower/following counts; omitted", c)
            continue
        r = np.asarray(ratios, dtype=np.float64)
        near = (r >= 1.0 - epsilon) & (r <= 1.0 + epsilon)
        rows.append(
            FollowbackRow(
                community=c,
                label=clusters.label_of(c),
                members=len(members),
                attributed=attributed,
                excluded=excluded,
                median_ratio=float(np.median(r)),
                near_parity_fraction=float(near.mean()),
            )
        )
    return rows


def overlay_rates(
    x: CoengagementGraph,
    clusters: ClusterAssignment,
    attrs: Mapping[str, NodeAttributes],
    *,
    attribute: str = "suspended",
) -> list[OverlayRow]:
    """
    Per labeled community, the share of members with a known boolean attribute
    for which it is true. Rate is None when no member's value is known.
    """
    if attribute not in BOOLEAN_ATTRIBUTES:
        raise InputError(f"attribute must be one of {list(BOOLEAN_ATTRIBUTES)}, got {attribute!r}")
    rows: list[OverlayRow] = []
    for c, label in sorted(clusters.labels.items()):
        members = _members_in_graph(x, clusters, c)
        values = [getattr(attrs[h], attribute) if h in attrs else None for h in members]
        known = [v for v in values if v is not None]
        true_count = sum(1 for v in known if v)
        rows.append(
            OverlayRow(
                community=c,
                label=label,
                attribute=attribute,
                members=len(members),
                known=len(known),
                true_count=true_count,
                unknown=len(members) - len(known),
                rate=(true_count / len(known)) if known else None,
            )
        )
    return rows
