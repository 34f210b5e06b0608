from __future__ import annotations

import json
import logging
import os
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from coengage.errors import InputError
from coengage.io.attributes import ATTRIBUTE_COLUMNS
from coengage.io.export import write_summary_json
from coengage.io.interactions import ROW_COLUMNS

logger = logging.getLogger(__name__)

LANDMARK_COLUMNS = ["label", "handle"]
FOLLOWBACK_LANDMARKS = 3


@dataclass(frozen=True)
class ClusterSpec:
    label: str
    n_influencers: int
    n_audience: int
    engagement_rate: float = 1.0  # share of the cluster's influencers each audience member engages
    counts: tuple[int, ...] = (1,)  # per-target engagement counts, cycled over audience and targets
    suspended_rate: float = 0.0


@dataclass(frozen=True)
class BridgeSpec:
    handle: str
    overlaps: Mapping[str, int]  # cluster label -> number of that cluster's audience engaging the bridge
    count: int = 1


@dataclass(frozen=True)
class FollowbackSpec:
    label: str
    size: int
    internal_count: int
    attached_label: str | None = None
    suspended_rate: float = 0.0


@dataclass(frozen=True)
class SatelliteSpec:
    hub: str
    count: int
    audience: int = 100  # dedicated engagers per satellite, each also engaging the hub once


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int = 0
    clusters: tuple[ClusterSpec, ...] = ()
    bridges: tuple[BridgeSpec, ...] = ()
    followback_groups: tuple[FollowbackSpec, ...] = ()
    satellites: tuple[SatelliteSpec, ...] = ()
    start: str = "2020-09-01T00:00:00Z"
    days: int = 108

    def __post_init__(self) -> None:
        labels = [c.label for c in self.clusters] + [f.label for f in self.followback_groups]
        if any(not lab for lab in labels):
            raise InputError("labels must be non-empty")
        dupes = sorted(lab for lab, k in Counter(labels).items() if k > 1)
        if dupes:
            raise InputError(f"duplicate labels: {dupes}")
        by_label = {c.label: c for c in self.clusters}

        for c in self.clusters:
            if c.n_influencers < 0 or c.n_audience < 0:
                raise InputError(f"cluster {c.label!r}: sizes must be >= 0")
            if not 0.0 < c.engagement_rate <= 1.0:
                raise InputError(f"cluster {c.label!r}: engagement_rate must be in (0, 1]")
            if not c.counts or any(int(v) != v or v < 1 for v in c.counts):
                raise InputError(f"cluster {c.label!r}: counts must be integers >= 1")
            if not 0.0 <= c.suspended_rate <= 1.0:
                raise InputError(f"cluster {c.label!r}: suspended_rate must be in [0, 1]")

        for b in self.bridges:
            if not b.handle:
                raise InputError("bridge handle must be non-empty")
            if b.count < 1:
                raise InputError(f"bridge {b.handle!r}: count must be >= 1")
            for label, k in b.overlaps.items():
                if label not in by_label:
                    raise InputError(f"bridge {b.handle!r} references unknown cluster label {label!r}")
                if not 0 <= k <= by_label[label].n_audience:
                    raise InputError(f"bridge {b.handle!r}: overlap with {label!r} must be in [0, n_audience]")

        for f in self.followback_groups:
            if f.size < 0:
                raise InputError(f"followback group {f.label!r}: size must be >= 0")
            if f.internal_count < 1:
                raise InputError(f"followback group {f.label!r}: internal_count must be >= 1")
            if f.attached_label is not None and f.attached_label not in by_label:
                raise InputError(f"followback group {f.label!r} references unknown cluster label {f.attached_label!r}")
            if not 0.0 <= f.suspended_rate <= 1.0:
                raise InputError(f"followback group {f.label!r}: suspended_rate must be in [0, 1]")

        hubs = set(self.receiving_handles())
        for s in self.satellites:
            if s.hub not in hubs:
                raise InputError(f"satellite hub {s.hub!r} is not a generated account")
            if s.count < 0 or s.audience < 1:
                raise InputError(f"satellites of {s.hub!r}: count must be >= 0 and audience >= 1")
        if self.days < 1:
            raise InputError("days must be >= 1")

    def receiving_handles(self) -> list[str]:
        out = [influencer_handle(c.label, k) for c in self.clusters for k in range(c.n_influencers)]
        out += [b.handle for b in self.bridges]
        out += [followback_handle(f.label, k) for f in self.followback_groups for k in range(f.size)]
        return out

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ScenarioSpec:
        try:
            return cls(
                seed=int(d.get("seed", 0)),
                clusters=tuple(
                    ClusterSpec(**{**c, "counts": tuple(c.get("counts", (1,)))}) for c in d.get("clusters", ())
                ),
                bridges=tuple(
                    BridgeSpec(handle=b["handle"], overlaps=dict(b.get("overlaps", {})), count=int(b.get("count", 1)))
                    for b in d.get("bridges", ())
                ),
                followback_groups=tuple(FollowbackSpec(**f) for f in d.get("followback_groups", ())),
                satellites=tuple(SatelliteSpec(**s) for s in d.get("satellites", ())),
                start=str(d.get("start", "2020-09-01T00:00:00Z")),
                days=int(d.get("days", 108)),
            )
        except (TypeError, KeyError) as e:
            raise InputError(f"invalid scenario: {e}") from e


def load_scenario(path: str | Path) -> ScenarioSpec:
    path = Path(path)
    if not path.exists():
        raise InputError(f"scenario file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON: {e.msg}") from e
    if not isinstance(data, dict):
        raise InputError(f"{path}: scenario must be a JSON object")
    return ScenarioSpec.from_dict(data)


def influencer_handle(label: str, k: int) -> str:
    return f"{label}_inf{k:03d}"


def followback_handle(label: str, k: int) -> str:
    return f"{label}_fb{k:03d}"


def satellite_handle(hub: str, k: int) -> str:
    return f"{hub}_sat{k:03d}"


@dataclass(frozen=True, eq=False)
class SyntheticDataset:
    interactions: pd.DataFrame
    attributes: pd.DataFrame
    landmarks: pd.DataFrame
    manifest: dict[str, Any] = field(default_factory=dict)


class _Builder:
    """Aggregated (engager, target) -> count store plus per-account attribute draws."""

    def __init__(self, rng: np.random.Generator) -> None:
        self.rng = rng
        self.counts: dict[tuple[str, str], int] = {}
        self.attrs: dict[str, dict[str, Any]] = {}

    def engage(self, engager: str, target: str, count: int) -> None:
        key = (engager, target)
        self.counts[key] = self.counts.get(key, 0) + int(count)

    def mainstream(self, handles: Sequence[str], suspended_rate: float) -> None:
        if not handles:
            return
        following = self.rng.integers(50, 2000, size=len(handles))
        ratio = 10.0 ** self.rng.uniform(-1.0, 3.0, size=len(handles))
        self._add(handles, following, np.rint(following * ratio).astype(np.int64), suspended_rate)

    def followback(self, handles: Sequence[str], suspended_rate: float) -> None:
        if not handles:
            return
        following = self.rng.integers(500, 5000, size=len(handles))
        jitter = self.rng.uniform(0.95, 1.05, size=len(handles))
        self._add(handles, following, np.rint(following * jitter).astype(np.int64), suspended_rate)

    def _add(self, handles: Sequence[str], following: np.ndarray, followers: np.ndarray, suspended_rate: float) -> None:
        suspended = np.zeros(len(handles), dtype=bool)
        k = int(round(suspended_rate * len(handles)))
        if k:
            suspended[self.rng.choice(len(handles), size=k, replace=False)] = True
        for h, fo, fr, su in zip(handles, following, followers, suspended):
            self.attrs[h] = {
                "node": h,
                "label": "",
                "followers": int(fr),
                "following": int(fo),
                "suspended": "true" if su else "false",
            }


def _signatures(counts: Mapping[tuple[str, str], int]) -> list[dict[str, Any]]:
    per_engager: dict[str, list[tuple[str, int]]] = {}
    for (e, t), c in counts.items():
        per_engager.setdefault(e, []).append((t, c))
    grouped = Counter(tuple(sorted(v)) for v in per_engager.values())
    return [
        {"engagers": int(k), "targets": {t: int(c) for t, c in sig}}
        for sig, k in sorted(grouped.items())
    ]


def expected_edges(manifest: Mapping[str, Any], n: int, s: int) -> list[tuple[str, str, int]]:
    """
    Coengagement edges implied by a generator manifest at (n, s), as
    (lower handle, higher handle, weight) triples sorted by handle. Computed from
    the engagement signatures alone, without the projection engine.
    """
    if n < 1 or s < 1:
        raise InputError("n and s must be >= 1")
    pairs: Counter[tuple[str, str]] = Counter()
    for sig in manifest.get("signatures", ()):
        qualifying = sorted(t for t, c in sig["targets"].items() if c >= s)
        for a, b in combinations(qualifying, 2):
            pairs[(a, b)] += int(sig["engagers"])
    return sorted((a, b, w) for (a, b), w in pairs.items() if w >= n)


def generate(spec: ScenarioSpec) -> SyntheticDataset:
    """
    Plant mainstream clusters, bridges, followback groups and satellites.

    Engagement counts are exact; randomness only enters handle tokens,
    timestamps and attribute values, so the projection at any (n, s) is fixed
    by the scenario and recorded in the manifest.
    """
    rng = np.random.default_rng(spec.seed)
    b = _Builder(rng)
    landmarks: list[tuple[str, str]] = []
    structures: dict[str, list[dict[str, Any]]] = {
        "clusters": [],
        "bridges": [],
        "followback_groups": [],
        "satellites": [],
    }
    audiences: dict[str, list[str]] = {}

    for c in spec.clusters:
        influencers = [influencer_handle(c.label, k) for k in range(c.n_influencers)]
        tokens = rng.integers(0, 16**4, size=c.n_audience)
        audience = [f"{c.label}_aud{k:06d}_{int(t):04x}" for k, t in enumerate(tokens)]
        audiences[c.label] = audience
        m = min(c.n_influencers, max(1, round(c.engagement_rate * c.n_influencers))) if influencers else 0
        for i, a in enumerate(audience):
            for j in range(m):
                b.engage(a, influencers[(i + j) % len(influencers)], c.counts[(i + j) % len(c.counts)])
        b.mainstream(influencers, c.suspended_rate)
        b.mainstream(audience, c.suspended_rate)
        landmarks.extend((c.label, h) for h in influencers)
        structures["clusters"].append(
            {
                "label": c.label,
                "influencers": influencers,
                "audience_size": c.n_audience,
                "targets_per_engager": m,
                "counts": list(c.counts),
            }
        )

    for br in spec.bridges:
        for label, k in sorted(br.overlaps.items()):
            for a in audiences[label][:k]:
                b.engage(a, br.handle, br.count)
        b.mainstream([br.handle], 0.0)
        structures["bridges"].append({"handle": br.handle, "overlaps": dict(sorted(br.overlaps.items())), "count": br.count})

    for f in spec.followback_groups:
        members = [followback_handle(f.label, k) for k in range(f.size)]
        attached = _cluster_influencers(structures, f.attached_label)
        for u in members:
            for v in members:
                if u != v:
                    b.engage(u, v, f.internal_count)
            for t in attached:
                b.engage(u, t, 1)
        b.followback(members, f.suspended_rate)
        landmarks.extend((f.label, h) for h in members[:FOLLOWBACK_LANDMARKS])
        structures["followback_groups"].append(
            {
                "label": f.label,
                "members": members,
                "internal_count": f.internal_count,
                "attached_label": f.attached_label,
                # every internal pair is co-engaged by the other size - 2 members
                "internal_pair_weight": max(0, f.size - 2),
            }
        )

    for sat in spec.satellites:
        handles = [satellite_handle(sat.hub, k) for k in range(sat.count)]
        for h in handles:
            for j in range(sat.audience):
                e = f"{h}_aud{j:04d}"
                b.engage(e, h, 1)
                b.engage(e, sat.hub, 1)
        b.mainstream(handles, 0.0)
        structures["satellites"].append({"hub": sat.hub, "satellites": handles, "edge_weight": sat.audience})

    interactions = _interaction_frame(b.counts, spec, rng)
    attributes = pd.DataFrame.from_records(
        [b.attrs[h] for h in sorted(b.attrs)], columns=ATTRIBUTE_COLUMNS
    )
    manifest = {
        "seed": spec.seed,
        "rows": int(len(interactions)),
        "total_weight": int(sum(b.counts.values())),
        **structures,
        "signatures": _signatures(b.counts),
    }
    logger.info(
        "generated %d interaction rows, %d accounts with attributes, %d landmarks",
        len(interactions),
        len(attributes),
        len(landmarks),
    )
    return SyntheticDataset(
        interactions=interactions,
        attributes=attributes,
        landmarks=pd.DataFrame(landmarks, columns=LANDMARK_COLUMNS),
        manifest=manifest,
    )


def _cluster_influencers(structures: Mapping[str, list[dict[str, Any]]], label: str | None) -> list[str]:
    if label is None:
        return []
    for c in structures["clusters"]:
        if c["label"] == label:
            return list(c["influencers"])
    return []


def _interaction_frame(counts: Mapping[tuple[str, str], int], spec: ScenarioSpec, rng: np.random.Generator) -> pd.DataFrame:
    if not counts:
        return pd.DataFrame(columns=ROW_COLUMNS)
    keys = list(counts)
    start = pd.Timestamp(spec.start)
    if start.tzinfo is None:
        start = start.tz_localize("UTC")
    offsets = rng.integers(0, spec.days * 86_400, size=len(keys))
    ts = start + pd.to_timedelta(offsets, unit="s")
    return pd.DataFrame(
        {
            "engager": [k[0] for k in keys],
            "target": [k[1] for k in keys],
            "count": np.fromiter(counts.values(), dtype=np.int64, count=len(keys)),
            "timestamp": ts.strftime("%Y-%m-%dT%H:%M:%SZ"),
        },
        columns=ROW_COLUMNS,
    )


def write_dataset(ds: SyntheticDataset, out_dir: str | Path) -> dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "interactions": os.path.join(out_dir, "interactions.csv"),
        "attributes": os.path.join(out_dir, "attributes.csv"),
        "landmarks": os.path.join(out_dir, "landmarks.csv"),
        "manifest": os.path.join(out_dir, "manifest.json"),
    }
    ds.interactions.to_csv(paths["interactions"], index=False, lineterminator="\n")
    ds.attributes.to_csv(paths["attributes"], index=False, lineterminator="\n")
    ds.landmarks.to_csv(paths["landmarks"], index=False, lineterminator="\n")
    write_summary_json(ds.manifest, paths["manifest"])
    return paths
