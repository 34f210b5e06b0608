from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd
import scipy.sparse as sp

from coengage.errors import InputError, NodeNotFoundError


@dataclass(frozen=True, order=True)
class NodeId:
    ordinal: int
    handle: str


NodeRef = NodeId | str


class NodeIndex:
    """
    Bijective handle <-> ordinal interning.

    Ordinals are dense (0..len-1) and follow lexicographic handle order, so the
    same set of handles always yields the same ordinals regardless of row order.
    """

    __slots__ = ("_handles", "_ordinals")

    def __init__(self, sorted_unique_handles: Sequence[str]) -> None:
        self._handles = tuple(sorted_unique_handles)
        self._ordinals = {h: i for i, h in enumerate(self._handles)}
        if len(self._ordinals) != len(self._handles):
            raise InputError("handles must be unique")

    @classmethod
    def from_handles(cls, handles: Iterable[str]) -> NodeIndex:
        unique = set()
        for h in handles:
            if not isinstance(h, str) or h == "":
                raise InputError(f"handle must be a non-empty string, got {h!r}")
            unique.add(h)
        return cls(sorted(unique))

    def __len__(self) -> int:
        return len(self._handles)

    def __contains__(self, handle: object) -> bool:
        return handle in self._ordinals

    @property
    def handles(self) -> tuple[str, ...]:
        return self._handles

    def get(self, handle: str) -> int | None:
        return self._ordinals.get(handle)

    def ordinal(self, handle: str) -> int:
        try:
            return self._ordinals[handle]
        except KeyError:
            raise NodeNotFoundError(handle) from None

    def node(self, ordinal: int) -> NodeId:
        return NodeId(int(ordinal), self._handles[ordinal])

    def resolve(self, node: NodeRef) -> int:
        if isinstance(node, NodeId):
            if node.ordinal >= len(self._handles) or self._handles[node.ordinal] != node.handle:
                raise NodeNotFoundError(node.handle)
            return node.ordinal
        return self.ordinal(node)

    def ordinals_of(self, handles: Iterable[str]) -> np.ndarray:
        return np.asarray([self.ordinal(h) for h in handles], dtype=np.int64)


def intern_nodes(handles: Sequence[str]) -> dict[str, NodeId]:
    index = NodeIndex.from_handles(handles)
    return {h: NodeId(i, h) for i, h in enumerate(index.handles)}


@dataclass(frozen=True)
class ProjectionParams:
    n: int  # minimum number of qualifying co-engagers
    s: int  # minimum engagement count per co-engager per target

    def __post_init__(self) -> None:
        for name in ("n", "s"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise InputError(f"{name} must be an integer, got {v!r}")
            if v < 1:
                raise InputError(f"{name} must be >= 1")


@dataclass(frozen=True, eq=False)
class EngagementGraph:
    """
    Directed weighted engagement graph G = (V, E, w).

    `matrix` is an engager x target CSR matrix of exact int64 engagement counts
    with sorted column indices and no duplicate entries. Rows play the engager
    role and columns the receiving role of the same interned accounts.
    """

    index: NodeIndex
    matrix: sp.csr_matrix

    @classmethod
    def from_arrays(
        cls,
        index: NodeIndex,
        engagers: np.ndarray,
        targets: np.ndarray,
        counts: np.ndarray,
    ) -> EngagementGraph:
        n = len(index)
        counts = np.asarray(counts, dtype=np.int64)
        if counts.size and counts.min() < 1:
            raise InputError("engagement counts must be >= 1")
        m = sp.coo_matrix(
            (counts, (np.asarray(engagers, dtype=np.int64), np.asarray(targets, dtype=np.int64))),
            shape=(n, n),
            dtype=np.int64,
        ).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls(index=index, matrix=m)

    @classmethod
    def from_records(cls, records: Iterable[tuple[str, str] | tuple[str, str, int]]) -> EngagementGraph:
        """Build directly from (engager, target[, count]) tuples; no self-loop filtering."""
        rows = [(r[0], r[1], int(r[2]) if len(r) > 2 else 1) for r in records]
        if not rows:
            return cls.empty()
        df = pd.DataFrame(rows, columns=["engager", "target", "count"])
        index = NodeIndex.from_handles(pd.concat([df["engager"], df["target"]]).unique())
        ordinals = pd.Index(index.handles)
        return cls.from_arrays(
            index,
            ordinals.get_indexer(df["engager"]),
            ordinals.get_indexer(df["target"]),
            df["count"].to_numpy(),
        )

    @classmethod
    def empty(cls) -> EngagementGraph:
        return cls(index=NodeIndex(()), matrix=sp.csr_matrix((0, 0), dtype=np.int64))

    @property
    def node_count(self) -> int:
        return len(self.index)

    @property
    def edge_count(self) -> int:
        return int(self.matrix.nnz)

    @property
    def total_weight(self) -> int:
        return int(self.matrix.data.sum()) if self.matrix.nnz else 0

    @cached_property
    def in_weights(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0), dtype=np.int64).ravel()

    @cached_property
    def engager_ordinals(self) -> np.ndarray:
        return np.flatnonzero(np.diff(self.matrix.indptr) > 0)

    def out_edges(self, engager: NodeRef) -> list[tuple[NodeId, int]]:
        u = self.index.resolve(engager)
        lo, hi = self.matrix.indptr[u], self.matrix.indptr[u + 1]
        return [
            (self.index.node(int(t)), int(w))
            for t, w in zip(self.matrix.indices[lo:hi], self.matrix.data[lo:hi])
        ]

    def weight(self, engager: NodeRef, target: NodeRef) -> int:
        return int(self.matrix[self.index.resolve(engager), self.index.resolve(target)])


def weighted_in_degree(g: EngagementGraph, node: NodeRef) -> int:
    return int(g.in_weights[g.index.resolve(node)])


@dataclass(frozen=True, eq=False)
class CoengagementGraph:
    """
    Undirected weighted projection X over receiving accounts.

    Edges are stored column-wise (source < target by ordinal), sorted by
    (source, target). Nodes are exactly the edge endpoints.
    """

    index: NodeIndex
    source: np.ndarray
    target: np.ndarray
    weight: np.ndarray
    params: ProjectionParams | None = None

    def __post_init__(self) -> None:
        if not (len(self.source) == len(self.target) == len(self.weight)):
            raise InputError("edge arrays must have equal length")
        if len(self.source):
            if np.any(self.source >= self.target):
                raise InputError("edges must satisfy source < target (no self-edges)")
            if self.weight.min() < 1:
                raise InputError("edge weights must be >= 1")

    @classmethod
    def from_edges(
        cls,
        index: NodeIndex,
        source: np.ndarray,
        target: np.ndarray,
        weight: np.ndarray,
        *,
        params: ProjectionParams | None = None,
    ) -> CoengagementGraph:
        a = np.asarray(source, dtype=np.int64)
        b = np.asarray(target, dtype=np.int64)
        w = np.asarray(weight, dtype=np.int64)
        if np.any(a == b):
            raise InputError("self-edges are not allowed in a coengagement graph")
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        order = np.lexsort((hi, lo))
        lo, hi, w = lo[order], hi[order], w[order]
        if len(lo) > 1 and np.any((lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])):
            raise InputError("duplicate undirected edge")
        return cls(index=index, source=lo, target=hi, weight=w, params=params)

    @classmethod
    def empty(cls, index: NodeIndex, params: ProjectionParams | None = None) -> CoengagementGraph:
        z = np.zeros(0, dtype=np.int64)
        return cls(index=index, source=z, target=z.copy(), weight=z.copy(), params=params)

    @cached_property
    def node_ordinals(self) -> np.ndarray:
        return np.unique(np.concatenate([self.source, self.target]))

    @cached_property
    def _node_set(self) -> frozenset[int]:
        return frozenset(int(v) for v in self.node_ordinals)

    @property
    def nodes(self) -> tuple[NodeId, ...]:
        return tuple(self.index.node(int(v)) for v in self.node_ordinals)

    @property
    def node_handles(self) -> tuple[str, ...]:
        h = self.index.handles
        return tuple(h[int(v)] for v in self.node_ordinals)

    @property
    def node_count(self) -> int:
        return int(len(self.node_ordinals))

    @property
    def edge_count(self) -> int:
        return int(len(self.source))

    @property
    def total_weight(self) -> int:
        return int(self.weight.sum()) if len(self.weight) else 0

    def __contains__(self, node: object) -> bool:
        if isinstance(node, NodeId):
            ordinal = self.index.get(node.handle)
        elif isinstance(node, str):
            ordinal = self.index.get(node)
        else:
            return False
        return ordinal is not None and ordinal in self._node_set

    def edges(self) -> Iterator[tuple[NodeId, NodeId, int]]:
        for a, b, w in zip(self.source, self.target, self.weight):
            yield self.index.node(int(a)), self.index.node(int(b)), int(w)

    def edge_triples(self) -> list[tuple[str, str, int]]:
        h = self.index.handles
        return [(h[int(a)], h[int(b)], int(w)) for a, b, w in zip(self.source, self.target, self.weight)]

    @cached_property
    def _edge_lookup(self) -> dict[tuple[int, int], int]:
        return {(int(a), int(b)): int(w) for a, b, w in zip(self.source, self.target, self.weight)}

    def edge_weight(self, a: NodeRef, b: NodeRef) -> int:
        """Weight of the undirected edge {a, b}; 0 when absent. Symmetric in its arguments."""
        i, j = self.index.resolve(a), self.index.resolve(b)
        return self._edge_lookup.get((min(i, j), max(i, j)), 0)

    @cached_property
    def weighted_degrees(self) -> np.ndarray:
        """Weighted degree per ordinal of `index` (0 for nodes outside X)."""
        n = len(self.index)
        deg = np.zeros(n, dtype=np.int64)
        np.add.at(deg, self.source, self.weight)
        np.add.at(deg, self.target, self.weight)
        return deg

    @cached_property
    def degrees(self) -> np.ndarray:
        n = len(self.index)
        return np.bincount(self.source, minlength=n) + np.bincount(self.target, minlength=n)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        n = len(self.index)
        rows = np.concatenate([self.source, self.target])
        cols = np.concatenate([self.target, self.source])
        data = np.concatenate([self.weight, self.weight])
        m = sp.coo_matrix((data, (rows, cols)), shape=(n, n), dtype=np.int64).tocsr()
        m.sort_indices()
        return m

    def neighbors(self, node: NodeRef) -> list[tuple[NodeId, int]]:
        i = self.index.resolve(node)
        adj = self.adjacency
        lo, hi = adj.indptr[i], adj.indptr[i + 1]
        return [(self.index.node(int(j)), int(w)) for j, w in zip(adj.indices[lo:hi], adj.data[lo:hi])]


def weighted_degree(x: CoengagementGraph, node: NodeRef) -> int:
    if node not in x:
        raise NodeNotFoundError(node.handle if isinstance(node, NodeId) else node)
    return int(x.weighted_degrees[x.index.resolve(node)])
