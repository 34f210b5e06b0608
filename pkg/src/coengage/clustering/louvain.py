from __future__ import annotations

import heapq
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from coengage.config import DEFAULT_LOUVAIN_RESTARTS, DEFAULT_RESOLUTION, DEFAULT_SEED
from coengage.errors import InputError, NodeNotFoundError
from coengage.model.graph import CoengagementGraph

logger = logging.getLogger(__name__)

MIN_PASS_IMPROVEMENT = 1e-9
_MOVE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    """
    Community per node of a coengagement graph.

    `handles` lists the nodes of X in ordinal order and `communities` is aligned
    with it. Community indices are canonical: numbered by first appearance in
    ordinal order. `labels` maps community index -> cluster label for the
    communities that received one.
    """

    handles: tuple[str, ...]
    communities: np.ndarray
    modularity: float
    labels: Mapping[int, str] = field(default_factory=dict)
    resolution: float = DEFAULT_RESOLUTION
    seed: int | None = None

    @cached_property
    def _position(self) -> dict[str, int]:
        return {h: i for i, h in enumerate(self.handles)}

    def __len__(self) -> int:
        return len(self.handles)

    def get_community(self, handle: str) -> int | None:
        pos = self._position.get(handle)
        return None if pos is None else int(self.communities[pos])

    def community_of(self, handle: str) -> int:
        c = self.get_community(handle)
        if c is None:
            raise NodeNotFoundError(handle)
        return c

    @property
    def community_ids(self) -> list[int]:
        return sorted({int(c) for c in self.communities})

    @cached_property
    def _members(self) -> dict[int, tuple[str, ...]]:
        out: dict[int, list[str]] = {}
        for h, c in zip(self.handles, self.communities):
            out.setdefault(int(c), []).append(h)
        return {c: tuple(v) for c, v in out.items()}

    def members(self, community: int) -> tuple[str, ...]:
        return self._members.get(int(community), ())

    def sizes(self) -> dict[int, int]:
        return {c: len(m) for c, m in sorted(self._members.items())}

    def label_of(self, community: int) -> str | None:
        return self.labels.get(int(community))

    def node_label(self, handle: str) -> str | None:
        c = self.get_community(handle)
        return None if c is None else self.labels.get(c)

    def membership(self) -> dict[str, int]:
        return {h: int(c) for h, c in zip(self.handles, self.communities)}


def _aligned_communities(x: CoengagementGraph, membership: Mapping[str, int] | np.ndarray) -> np.ndarray:
    if isinstance(membership, Mapping):
        try:
            return np.asarray([membership[h] for h in x.node_handles], dtype=np.int64)
        except KeyError as e:
            raise InputError(f"membership is missing node {e.args[0]!r}") from None
    comm = np.asarray(membership, dtype=np.int64)
    if len(comm) != x.node_count:
        raise InputError("membership must have one entry per node of the graph")
    return comm


def modularity(
    x: CoengagementGraph,
    membership: Mapping[str, int] | np.ndarray,
    *,
    resolution: float = DEFAULT_RESOLUTION,
) -> float:
    """
    Weighted modularity Q = sum_c [ L_c / m - resolution * (d_c / 2m)^2 ].

    L_c is the total weight of edges inside community c, d_c the summed weighted
    degree of its members and m the total edge weight. `membership` is either a
    handle -> community mapping or an array aligned with `x.node_handles`.
    """
    if x.edge_count == 0:
        return 0.0
    comm = _aligned_communities(x, membership)
    pos = np.searchsorted(x.node_ordinals, np.concatenate([x.source, x.target]))
    ca, cb = comm[pos[: x.edge_count]], comm[pos[x.edge_count :]]
    _, dense = np.unique(comm, return_inverse=True)
    k = int(dense.max()) + 1
    w = x.weight.astype(np.float64)
    m = float(w.sum())
    internal = np.bincount(dense[pos[: x.edge_count]][ca == cb], weights=w[ca == cb], minlength=k)
    deg = x.weighted_degrees[x.node_ordinals].astype(np.float64)
    tot = np.bincount(dense, weights=deg, minlength=k)
    return float(internal.sum() / m - resolution * np.sum((tot / (2.0 * m)) ** 2))


def _local_moves(
    adj: list[dict[int, int]],
    loops: list[int],
    resolution: float,
    rng: np.random.Generator,
    start: list[int] | None = None,
) -> tuple[list[int], bool]:
    n = len(adj)
    k = [sum(a.values()) + 2 * loops[i] for i, a in enumerate(adj)]
    m2 = float(sum(k))
    comm = list(range(n)) if start is None else list(start)
    tot = [0.0] * n
    size = [0] * n
    for i, c in enumerate(comm):
        tot[c] += k[i]
        size[c] += 1
    empty = [c for c in range(n) if size[c] == 0]
    heapq.heapify(empty)
    order = rng.permutation(n).tolist()
    moved_any = False
    improved = True
    while improved:
        improved = False
        for i in order:
            ci, ki = comm[i], k[i]
            links: dict[int, int] = {}
            for j, w in adj[i].items():
                c = comm[j]
                links[c] = links.get(c, 0) + w
            tot[ci] -= ki
            size[ci] -= 1
            best_c = ci
            best_gain = links.get(ci, 0) - resolution * tot[ci] * ki / m2
            # First community with the strictly largest gain wins; staying put wins ties.
            for c in sorted(links):
                if c == ci:
                    continue
                gain = links[c] - resolution * tot[c] * ki / m2
                if gain > best_gain + _MOVE_TOL:
                    best_c, best_gain = c, gain
            if size[ci] > 0 and best_gain < -_MOVE_TOL:
                # leaving for an empty community has gain 0
                best_c = heapq.heappop(empty)
            elif size[ci] == 0 and best_c != ci:
                heapq.heappush(empty, ci)
            tot[best_c] += ki
            size[best_c] += 1
            if best_c != ci:
                comm[i] = best_c
                improved = True
                moved_any = True

    # renumber by first appearance
    remap: dict[int, int] = {}
    out = [remap.setdefault(c, len(remap)) for c in comm]
    return out, moved_any


def _aggregate(
    adj: list[dict[int, int]],
    loops: list[int],
    comm: list[int],
) -> tuple[list[dict[int, int]], list[int]]:
    k = max(comm) + 1
    new_adj: list[dict[int, int]] = [{} for _ in range(k)]
    new_loops = [0] * k
    for i, nbrs in enumerate(adj):
        ci = comm[i]
        new_loops[ci] += loops[i]
        for j, w in nbrs.items():
            if j < i:
                continue
            cj = comm[j]
            if ci == cj:
                new_loops[ci] += w
            else:
                new_adj[ci][cj] = new_adj[ci].get(cj, 0) + w
                new_adj[cj][ci] = new_adj[cj].get(ci, 0) + w
    return new_adj, new_loops


def _canonical(comm: np.ndarray) -> np.ndarray:
    remap: dict[int, int] = {}
    return np.asarray([remap.setdefault(int(c), len(remap)) for c in comm], dtype=np.int64)


def _multilevel(
    x: CoengagementGraph,
    adj: list[dict[int, int]],
    resolution: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    n = len(adj)
    loops = [0] * n
    membership = np.arange(n, dtype=np.int64)
    best_q = modularity(x, membership, resolution=resolution)
    level = 0
    level_adj, level_loops = adj, loops
    while True:
        level_comm, moved = _local_moves(level_adj, level_loops, resolution, rng)
        if not moved:
            break
        candidate = np.asarray(level_comm, dtype=np.int64)[membership]
        q = modularity(x, candidate, resolution=resolution)
        logger.debug("louvain level %d: %d communities, modularity %.6f", level, max(level_comm) + 1, q)
        if q - best_q <= MIN_PASS_IMPROVEMENT:
            break
        membership, best_q = candidate, q
        level_adj, level_loops = _aggregate(level_adj, level_loops, level_comm)
        level += 1

    # single-node moves on the original graph, starting from the aggregated result
    refined, moved = _local_moves(adj, loops, resolution, rng, start=_canonical(membership).tolist())
    if moved:
        candidate = np.asarray(refined, dtype=np.int64)
        q = modularity(x, candidate, resolution=resolution)
        if q - best_q > MIN_PASS_IMPROVEMENT:
            membership, best_q = candidate, q
    return membership, best_q


def louvain(
    x: CoengagementGraph,
    *,
    resolution: float = DEFAULT_RESOLUTION,
    seed: int = DEFAULT_SEED,
    restarts: int = DEFAULT_LOUVAIN_RESTARTS,
) -> ClusterAssignment:
    """
    Two-phase Louvain on the undirected weighted coengagement graph.

    Local moves use a seeded shuffled visit order; levels are aggregated until a
    level fails to raise modularity by more than 1e-9, then single nodes are
    moved once more on the original graph. Run r uses seed + r and the first
    run with the highest modularity is kept, so identical (graph, resolution,
    seed, restarts) always yield the identical assignment.
    """
    if resolution <= 0:
        raise InputError("resolution must be > 0")
    if restarts < 1:
        raise InputError("restarts must be >= 1")
    if x.edge_count == 0:
        return ClusterAssignment(
            handles=(),
            communities=np.zeros(0, dtype=np.int64),
            modularity=0.0,
            resolution=resolution,
            seed=seed,
        )

    ords = x.node_ordinals
    src = np.searchsorted(ords, x.source).tolist()
    dst = np.searchsorted(ords, x.target).tolist()
    adj: list[dict[int, int]] = [{} for _ in range(len(ords))]
    for a, b, w in zip(src, dst, x.weight.tolist()):
        adj[a][b] = w
        adj[b][a] = w

    best: tuple[np.ndarray, float] | None = None
    for r in range(restarts):
        membership, q = _multilevel(x, adj, resolution, np.random.default_rng(seed + r))
        logger.debug("louvain run %d (seed %d): modularity %.6f", r, seed + r, q)
        if best is None or q - best[1] > MIN_PASS_IMPROVEMENT:
            best = (membership, q)

    communities = _canonical(best[0])
    return ClusterAssignment(
        handles=x.node_handles,
        communities=communities,
        modularity=modularity(x, communities, resolution=resolution),
        resolution=resolution,
        seed=seed,
    )


def top_nodes(x: CoengagementGraph, assignment: ClusterAssignment, *, k: int = 5) -> dict[int, list[tuple[str, int]]]:
    """Per community, the k members with the highest weighted degree (ties by ordinal)."""
    if k < 1:
        raise InputError("k must be >= 1")
    out: dict[int, list[tuple[str, int]]] = {}
    for c in assignment.community_ids:
        ranked = sorted(
            (
                (-int(x.weighted_degrees[x.index.ordinal(h)]), x.index.ordinal(h), h)
                for h in assignment.members(c)
            )
        )
        out[c] = [(h, -neg) for neg, _, h in ranked[:k]]
    return out
