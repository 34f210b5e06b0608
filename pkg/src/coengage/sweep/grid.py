from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from coengage.clustering.landmarks import LandmarkSet, label_clusters, landmark_hits
from coengage.clustering.louvain import ClusterAssignment, louvain
from coengage.config import DEFAULT_RESOLUTION, DEFAULT_SEED
from coengage.errors import InputError
from coengage.io.export import _mkdirp
from coengage.model.graph import CoengagementGraph, EngagementGraph, ProjectionParams
from coengage.projection.engine import project

logger = logging.getLogger(__name__)

EXISTENCE_COLUMNS = ["n", "s", "node_count", "edge_count", "salient_labels", "absent_labels", "subsumed_labels"]

SALIENT = "salient"
ABSENT = "absent"
SUBSUMED = "subsumed"


@dataclass(frozen=True)
class ExistenceCell:
    n: int
    s: int
    node_count: int
    edge_count: int
    salient_labels: tuple[str, ...] = ()
    absent_labels: tuple[str, ...] = ()
    subsumed_labels: tuple[str, ...] = ()
    communities: int = 0
    modularity: float = 0.0

    def status(self, label: str) -> str | None:
        if label in self.salient_labels:
            return SALIENT
        if label in self.absent_labels:
            return ABSENT
        if label in self.subsumed_labels:
            return SUBSUMED
        return None


@dataclass(frozen=True)
class ExistenceMap:
    n_values: tuple[int, ...]
    s_values: tuple[int, ...]
    cells: tuple[ExistenceCell, ...] = field(default_factory=tuple)

    def cell(self, n: int, s: int) -> ExistenceCell:
        for c in self.cells:
            if c.n == n and c.s == s:
                return c
        raise KeyError((n, s))

    def salient_region(self, label: str) -> list[tuple[int, int]]:
        return [(c.n, c.s) for c in self.cells if label in c.salient_labels]

    def frontier(self, label: str) -> dict[int, int]:
        """For each s, the largest n at which `label` is still salient."""
        out: dict[int, int] = {}
        for n, s in self.salient_region(label):
            out[s] = max(out.get(s, 0), n)
        return dict(sorted(out.items()))


def salience(assignment: ClusterAssignment, landmarks: LandmarkSet) -> dict[str, str]:
    """
    Per label: `absent` if none of its landmarks are in the projection,
    `subsumed` if a community holding one of its landmarks also holds a
    landmark of another label, `salient` otherwise.
    """
    hits = landmark_hits(assignment, landmarks)
    out: dict[str, str] = {}
    for label in landmarks.labels:
        comms = {assignment.get_community(h) for h in landmarks.handles_of(label)} - {None}
        if not comms:
            out[label] = ABSENT
        elif any(len(hits[c]) > 1 for c in comms):
            out[label] = SUBSUMED
        else:
            out[label] = SALIENT
    return out


def cell_from_assignment(
    x: CoengagementGraph,
    assignment: ClusterAssignment,
    landmarks: LandmarkSet,
    *,
    n: int,
    s: int,
) -> ExistenceCell:
    status = salience(assignment, landmarks)

    def pick(kind: str) -> tuple[str, ...]:
        return tuple(sorted(lab for lab, st in status.items() if st == kind))

    return ExistenceCell(
        n=n,
        s=s,
        node_count=x.node_count,
        edge_count=x.edge_count,
        salient_labels=pick(SALIENT),
        absent_labels=pick(ABSENT),
        subsumed_labels=pick(SUBSUMED),
        communities=len(assignment.community_ids),
        modularity=float(assignment.modularity),
    )


def evaluate_cell(
    g: EngagementGraph,
    landmarks: LandmarkSet,
    *,
    n: int,
    s: int,
    resolution: float = DEFAULT_RESOLUTION,
    seed: int = DEFAULT_SEED,
) -> ExistenceCell:
    x, _ = project(g, ProjectionParams(n=n, s=s))
    labeled = label_clusters(louvain(x, resolution=resolution, seed=seed), landmarks)
    return cell_from_assignment(x, labeled, landmarks, n=n, s=s)


def _check_values(values: Sequence[int], name: str) -> tuple[int, ...]:
    vals = tuple(int(v) for v in values)
    if not vals:
        raise InputError(f"{name} must not be empty")
    if any(v < 1 for v in vals):
        raise InputError(f"{name} values must be >= 1")
    if list(vals) != sorted(set(vals)):
        raise InputError(f"{name} values must be strictly ascending")
    return vals


def sweep(
    g: EngagementGraph,
    *,
    n_values: Sequence[int],
    s_values: Sequence[int],
    landmarks: LandmarkSet,
    resolution: float = DEFAULT_RESOLUTION,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
    progress: bool = False,
) -> ExistenceMap:
    """
    Existence map over the (n, s) grid. Cells are ordered by (n, s), computed
    independently, and cell i clusters with seed + i, so results do not depend
    on how many workers run them.
    """
    ns = _check_values(n_values, "n_values")
    ss = _check_values(s_values, "s_values")
    grid = list(product(ns, ss))
    jobs = (
        delayed(evaluate_cell)(g, landmarks, n=n, s=s, resolution=resolution, seed=seed + i)
        for i, (n, s) in enumerate(grid)
    )
    cells = list(
        tqdm(
            Parallel(n_jobs=threads, return_as="generator")(jobs),
            total=len(grid),
            disable=not progress,
            desc="sweeping",
        )
    )
    for c in cells:
        logger.info("cell (n=%d, s=%d): %d nodes, salient %s", c.n, c.s, c.node_count, list(c.salient_labels))
    return ExistenceMap(n_values=ns, s_values=ss, cells=tuple(cells))


def existence_frame(emap: ExistenceMap) -> pd.DataFrame:
    records = [
        {
            "n": c.n,
            "s": c.s,
            "node_count": c.node_count,
            "edge_count": c.edge_count,
            "salient_labels": ";".join(c.salient_labels),
            "absent_labels": ";".join(c.absent_labels),
            "subsumed_labels": ";".join(c.subsumed_labels),
        }
        for c in emap.cells
    ]
    return pd.DataFrame.from_records(records, columns=EXISTENCE_COLUMNS)


def write_existence_csv(emap: ExistenceMap, path: str | Path) -> None:
    _mkdirp(path)
    existence_frame(emap).to_csv(path, index=False, lineterminator="\n")
