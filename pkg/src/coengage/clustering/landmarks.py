from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, replace
from pathlib import Path

import pandas as pd

from coengage.clustering.louvain import ClusterAssignment
from coengage.errors import InputError


@dataclass(frozen=True)
class LandmarkSet:
    """Cluster label -> landmark handles. Handles missing from a projection simply do not label."""

    by_label: Mapping[str, frozenset[str]]

    def __post_init__(self) -> None:
        for label, handles in self.by_label.items():
            if not label:
                raise InputError("landmark labels must be non-empty")
            if not handles:
                raise InputError(f"landmark label {label!r} has no handles")

    @classmethod
    def from_pairs(cls, pairs: Mapping[str, object]) -> LandmarkSet:
        return cls({str(k): frozenset(v) for k, v in pairs.items()})  # type: ignore[arg-type]

    @property
    def labels(self) -> list[str]:
        return sorted(self.by_label)

    def handles_of(self, label: str) -> frozenset[str]:
        return self.by_label[label]

    def __len__(self) -> int:
        return len(self.by_label)


def read_landmarks(path: str | Path) -> LandmarkSet:
    """Landmark CSV: header label,handle with one landmark per row."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"landmark file not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)
    except pd.errors.EmptyDataError as e:
        raise InputError(f"{path}: empty landmark file") from e
    missing = {"label", "handle"} - set(df.columns)
    if missing:
        raise InputError(f"{path}: missing required column(s) {sorted(missing)}")
    bad = df[(df["label"] == "") | (df["handle"] == "")]
    if len(bad):
        raise InputError(f"{path}:{int(bad.index[0]) + 2}: label and handle must be non-empty")
    grouped = df.groupby("label", sort=True)["handle"].agg(frozenset)
    return LandmarkSet({str(k): v for k, v in grouped.items()})


def merged_label(labels: set[str] | frozenset[str]) -> str:
    ordered = sorted(labels)
    if len(ordered) == 1:
        return ordered[0]
    return f"merged({','.join(ordered)})"


def landmark_hits(assignment: ClusterAssignment, landmarks: LandmarkSet) -> dict[int, set[str]]:
    hits: dict[int, set[str]] = {}
    for label, handles in landmarks.by_label.items():
        for h in handles:
            c = assignment.get_community(h)
            if c is not None:
                hits.setdefault(c, set()).add(label)
    return hits


def label_clusters(assignment: ClusterAssignment, landmarks: LandmarkSet) -> ClusterAssignment:
    """
    A community gets label L iff it contains a landmark of L. Communities with
    landmarks of several labels get `merged(L1,L2,...)`; others stay unlabeled.
    """
    hits = landmark_hits(assignment, landmarks)
    labels = {c: merged_label(ls) for c, ls in sorted(hits.items())}
    return replace(assignment, labels=labels)
