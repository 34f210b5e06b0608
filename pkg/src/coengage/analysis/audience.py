from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from coengage.clustering.louvain import ClusterAssignment
from coengage.config import DEFAULT_TOP_K
from coengage.errors import InputError, NodeNotFoundError
from coengage.io.interactions import InteractionRecord, records_frame
from coengage.model.graph import CoengagementGraph, EngagementGraph, ProjectionParams
from coengage.projection.engine import qualifying_matrix

logger = logging.getLogger(__name__)

SELF_AUDIENCE_COLUMNS = ["community", "label", "internal_edges", "co_engagers", "projected_co_engagers", "fraction"]
MIXED = "mixed"
UNAFFILIATED = "unaffiliated"
BUCKETS = ("day", "week")


@dataclass(frozen=True)
class SelfAudienceRow:
    community: int
    label: str
    internal_edges: int
    co_engagers: int
    projected_co_engagers: int
    fraction: float | None  # None when the community has no internal edges


@dataclass(frozen=True)
class CoverageStats:
    k: int
    requested_k: int
    top_k_fraction: float
    retweet_share: float
    node_fraction: float
    missing_top: tuple[tuple[str, int], ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class AudienceBucket:
    bucket: str
    counts: Mapping[str, int]  # engagements of the focal account per audience class
    engagers: Mapping[str, int]  # distinct engagers per audience class


@dataclass(frozen=True)
class AudienceSeries:
    focal: str
    bucket: str
    class_names: tuple[str, ...]
    classes: Mapping[str, str]  # engager -> audience class
    buckets: tuple[AudienceBucket, ...]


def _g_ordinals_of_x(g: EngagementGraph, x: CoengagementGraph) -> np.ndarray:
    if x.index is g.index:
        return x.node_ordinals
    found = [g.index.get(h) for h in x.node_handles]
    return np.asarray([o for o in found if o is not None], dtype=np.int64)


def self_audience_overlap(
    g: EngagementGraph,
    x: CoengagementGraph,
    clusters: ClusterAssignment,
    params: ProjectionParams,
) -> list[SelfAudienceRow]:
    """
    For each labeled community C: the co-engagers qualifying any internal edge
    of C, and the fraction of them that are themselves nodes of X.
    """
    q = qualifying_matrix(g, params.s).tocsc()
    in_x = np.zeros(g.node_count, dtype=bool)
    in_x[_g_ordinals_of_x(g, x)] = True
    community_of = clusters.membership()
    h = x.index.handles

    by_community: dict[int, list[tuple[str, str]]] = {}
    for a, b in zip(x.source, x.target):
        ha, hb = h[int(a)], h[int(b)]
        ca, cb = community_of.get(ha), community_of.get(hb)
        if ca is not None and ca == cb:
            by_community.setdefault(ca, []).append((ha, hb))

    rows: list[SelfAudienceRow] = []
    for c, label in sorted(clusters.labels.items()):
        internal = by_community.get(c, [])
        if not internal:
            rows.append(SelfAudienceRow(c, label, 0, 0, 0, None))
            continue
        found: list[np.ndarray] = []
        for ha, hb in internal:
            i, j = g.index.get(ha), g.index.get(hb)
            if i is None or j is None:
                continue
            col_i = q.indices[q.indptr[i] : q.indptr[i + 1]]
            col_j = q.indices[q.indptr[j] : q.indptr[j + 1]]
            found.append(np.intersect1d(col_i, col_j, assume_unique=True))
        union = np.unique(np.concatenate(found)) if found else np.zeros(0, dtype=np.int64)
        projected = int(in_x[union].sum())
        rows.append(
            SelfAudienceRow(
                community=c,
                label=label,
                internal_edges=len(internal),
                co_engagers=int(len(union)),
                projected_co_engagers=projected,
                fraction=(projected / len(union)) if len(union) else None,
            )
        )
    return rows


def coverage_stats(
    g: EngagementGraph,
    x: CoengagementGraph,
    *,
    k: int = DEFAULT_TOP_K,
    missing_limit: int = 10,
) -> CoverageStats:
    """
    How well X represents the most engaged accounts of G.

    top_k_fraction: share of the k most engaged accounts (weighted in-degree,
    ties by ordinal) present in X; k is clamped to the node count of G.
    retweet_share: share of all engagements that target accounts of X.
    """
    if k < 1:
        raise InputError("k must be >= 1")
    inw = g.in_weights if g.node_count else np.zeros(0, dtype=np.int64)
    in_x = np.zeros(g.node_count, dtype=bool)
    in_x[_g_ordinals_of_x(g, x)] = True

    eff_k = min(k, g.node_count)
    if eff_k < k:
        logger.warning("k=%d exceeds the %d accounts of the engagement graph; clamped", k, g.node_count)
    total = int(inw.sum())
    if eff_k == 0 or total == 0:
        return CoverageStats(k=eff_k, requested_k=k, top_k_fraction=0.0, retweet_share=0.0, node_fraction=0.0)

    order = np.lexsort((np.arange(g.node_count), -inw))
    top = order[:eff_k]
    missing = order[(inw[order] > 0) & ~in_x[order]]
    return CoverageStats(
        k=eff_k,
        requested_k=k,
        top_k_fraction=float(in_x[top].sum()) / eff_k,
        retweet_share=float(inw[in_x].sum()) / total,
        node_fraction=float(in_x.sum()) / g.node_count,
        missing_top=tuple((g.index.handles[int(o)], int(inw[o])) for o in missing[:missing_limit]),
    )


def _bucket_keys(ts: pd.Series, bucket: str) -> pd.Series:
    day = ts.dt.tz_convert("UTC").dt.floor("D")
    if bucket == "week":
        day = day - pd.to_timedelta(day.dt.weekday, unit="D")
    return day.dt.strftime("%Y-%m-%d")


def audience_timeseries(
    rows: pd.DataFrame | Iterable[InteractionRecord],
    *,
    focal: str,
    clusters: ClusterAssignment,
    bucket: str = "day",
) -> AudienceSeries:
    """
    Split the focal account's engagements over time by the audience class of
    each engager.

    An engager is `exclusive:<label>` when every labeled account they engaged
    (engagements of the focal account itself excluded) carries that label,
    `mixed` when they engaged several labels and `unaffiliated` otherwise.
    Rows without timestamps take part in classification but not in buckets.
    """
    if bucket not in BUCKETS:
        raise InputError(f"bucket must be one of {list(BUCKETS)}, got {bucket!r}")
    df = rows if isinstance(rows, pd.DataFrame) else records_frame(rows)
    if not ((df["target"] == focal).any() or (df["engager"] == focal).any()):
        raise NodeNotFoundError(focal)

    label_of = {h: clusters.node_label(h) for h in clusters.handles}
    label_of = {h: lab for h, lab in label_of.items() if lab is not None}
    labels = sorted(set(label_of.values()))
    class_names = tuple([f"exclusive:{lab}" for lab in labels] + [MIXED, UNAFFILIATED])

    focal_rows = df[df["target"] == focal]
    engagers = focal_rows["engager"].unique()
    others = df[(df["target"] != focal) & df["engager"].isin(engagers)]
    engaged_labels = others.assign(label=others["target"].map(label_of)).dropna(subset=["label"])
    label_sets = engaged_labels.groupby("engager")["label"].unique()

    classes: dict[str, str] = {}
    for e in sorted(str(v) for v in engagers):
        ls = sorted(label_sets.get(e, ()))
        if not ls:
            classes[e] = UNAFFILIATED
        elif len(ls) == 1:
            classes[e] = f"exclusive:{ls[0]}"
        else:
            classes[e] = MIXED

    timed = focal_rows[focal_rows["timestamp"].notna()] if "timestamp" in focal_rows else focal_rows.iloc[0:0]
    if timed.empty:
        logger.warning("no timestamped engagements of %r; empty time series", focal)
        return AudienceSeries(focal=focal, bucket=bucket, class_names=class_names, classes=classes, buckets=())

    timed = timed.assign(
        bucket=_bucket_keys(timed["timestamp"], bucket),
        audience=timed["engager"].map(classes),
    )
    counts = timed.groupby(["bucket", "audience"])["count"].sum()
    distinct = timed.groupby(["bucket", "audience"])["engager"].nunique()
    series = []
    for b in sorted(timed["bucket"].unique()):
        series.append(
            AudienceBucket(
                bucket=str(b),
                counts={c: int(counts.get((b, c), 0)) for c in class_names},
                engagers={c: int(distinct.get((b, c), 0)) for c in class_names},
            )
        )
    return AudienceSeries(
        focal=focal,
        bucket=bucket,
        class_names=class_names,
        classes=classes,
        buckets=tuple(series),
    )


def timeseries_frame(series: AudienceSeries) -> pd.DataFrame:
    """Wide table: one row per bucket, one engagement-count column per audience class."""
    columns = ["bucket", *series.class_names]
    records = [{"bucket": b.bucket, **b.counts} for b in series.buckets]
    return pd.DataFrame.from_records(records, columns=columns)
