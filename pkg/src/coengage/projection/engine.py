from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
import scipy.sparse as sp
from joblib import Parallel, delayed
from tqdm import tqdm

from coengage.errors import CapacityError, InputError
from coengage.model.graph import CoengagementGraph, EngagementGraph, NodeId, NodeRef, ProjectionParams

logger = logging.getLogger(__name__)

_CHUNKS_PER_THREAD = 4


@dataclass(frozen=True)
class ProjectionOptions:
    max_fanout_cap: int | None = None
    cap_hard: bool = False  # skip engagers above the cap instead of only warning
    threads: int = 1
    progress: bool = False
    max_pairs: int | None = None  # budget on pair expansions summed over engagers

    def __post_init__(self) -> None:
        if self.max_fanout_cap is not None and self.max_fanout_cap < 1:
            raise InputError("max_fanout_cap must be >= 1")
        if self.threads < 1:
            raise InputError("threads must be >= 1")
        if self.max_pairs is not None and self.max_pairs < 0:
            raise InputError("max_pairs must be >= 0")


@dataclass(frozen=True)
class FanoutWarning:
    engager: str
    fanout: int
    skipped: bool


@dataclass(frozen=True)
class ProjectionReport:
    n: int
    s: int
    qualifying_engagers: int
    pair_expansions: int
    skipped_engagers: int
    fanout_warnings: tuple[FanoutWarning, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["fanout_warnings"] = [asdict(w) for w in self.fanout_warnings]
        return d


def qualifying_matrix(g: EngagementGraph, s: int) -> sp.csr_matrix:
    """0/1 engager x target matrix with a 1 wherever w(u, t) >= s."""
    if s < 1:
        raise InputError("s must be >= 1")
    q = g.matrix.copy()
    q.data = (q.data >= s).astype(np.int64)
    q.eliminate_zeros()
    return q


def qualifying_targets(g: EngagementGraph, engager: NodeRef, s: int) -> tuple[NodeId, ...]:
    """T_s(engager): targets the engager engaged at least s times, in ordinal order."""
    if s < 1:
        raise InputError("s must be >= 1")
    handle = engager.handle if isinstance(engager, NodeId) else engager
    u = g.index.get(handle)
    if u is None:
        return ()
    lo, hi = g.matrix.indptr[u], g.matrix.indptr[u + 1]
    idx = g.matrix.indices[lo:hi][g.matrix.data[lo:hi] >= s]
    return tuple(g.index.node(int(t)) for t in idx)


def _pair_counts(block: sp.csr_matrix) -> sp.csr_matrix:
    # Each engager row contributes +1 to every pair of its qualifying targets.
    return (block.T @ block).tocsr()


def _chunk_ranges(costs: np.ndarray, n_chunks: int) -> list[tuple[int, int]]:
    n = len(costs)
    if n == 0:
        return []
    n_chunks = max(1, min(n_chunks, n))
    if n_chunks == 1:
        return [(0, n)]
    cum = np.cumsum(costs, dtype=np.float64)
    targets = cum[-1] * np.arange(1, n_chunks) / n_chunks
    cuts = np.unique(np.searchsorted(cum, targets, side="right"))
    bounds = [0] + [int(c) for c in cuts if 0 < c < n] + [n]
    return [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


def project(
    g: EngagementGraph,
    params: ProjectionParams,
    *,
    options: ProjectionOptions | None = None,
) -> tuple[CoengagementGraph, ProjectionReport]:
    """
    Coengagement projection X of G under (n, s).

    For targets i != j, c(i, j) counts engagers u with w(u, i) >= s and
    w(u, j) >= s; X has edge (i, j, c(i, j)) iff c(i, j) >= n. Engager rows are
    split into contiguous ranges, counted independently and summed in range
    order, so the result does not depend on the number of threads.
    """
    options = options or ProjectionOptions()
    q = qualifying_matrix(g, params.s)
    fanout = np.diff(q.indptr)

    warnings: list[FanoutWarning] = []
    skipped = 0
    if options.max_fanout_cap is not None:
        heavy = np.flatnonzero(fanout > options.max_fanout_cap)
        for u in heavy:
            handle = g.index.handles[int(u)]
            logger.warning(
                "engager %r has %d qualifying targets (cap %d)%s",
                handle,
                int(fanout[u]),
                options.max_fanout_cap,
                "; skipped" if options.cap_hard else "",
            )
            warnings.append(FanoutWarning(engager=handle, fanout=int(fanout[u]), skipped=options.cap_hard))
        if options.cap_hard and len(heavy):
            keep = np.ones(q.shape[0], dtype=np.int64)
            keep[heavy] = 0
            q = (sp.diags(keep) @ q).tocsr()
            q.eliminate_zeros()
            fanout = np.diff(q.indptr)
            skipped = int(len(heavy))

    pair_costs = fanout.astype(np.int64) * (fanout.astype(np.int64) - 1) // 2
    pair_expansions = int(pair_costs.sum())
    if options.max_pairs is not None and pair_expansions > options.max_pairs:
        raise CapacityError(
            "pair-expansion",
            f"{pair_expansions} pair expansions exceed the budget of {options.max_pairs}",
        )

    active = np.flatnonzero(fanout >= 2)
    block = q[active]
    n_chunks = 1 if options.threads == 1 else options.threads * _CHUNKS_PER_THREAD
    ranges = _chunk_ranges(pair_costs[active], n_chunks)
    logger.debug("counting pairs of %d engagers in %d chunks", len(active), len(ranges))

    total: sp.csr_matrix | None = None
    try:
        parts = Parallel(n_jobs=options.threads, prefer="threads", return_as="generator")(
            delayed(_pair_counts)(block[lo:hi]) for lo, hi in ranges
        )
        for part in tqdm(parts, total=len(ranges), disable=not options.progress, desc="projecting"):
            total = part if total is None else total + part
    except MemoryError as e:
        raise CapacityError("pair-accumulation", "out of memory while accumulating pair counts") from e

    report = ProjectionReport(
        n=params.n,
        s=params.s,
        qualifying_engagers=int(np.count_nonzero(fanout)),
        pair_expansions=pair_expansions,
        skipped_engagers=skipped,
        fanout_warnings=tuple(warnings),
    )
    if total is None:
        return CoengagementGraph.empty(g.index, params), report

    upper = sp.triu(total, k=1).tocoo()
    keep = upper.data >= params.n
    x = CoengagementGraph.from_edges(
        g.index,
        upper.row[keep],
        upper.col[keep],
        upper.data[keep],
        params=params,
    )
    logger.info(
        "projected (n=%d, s=%d): %d nodes, %d edges from %d pair expansions",
        params.n,
        params.s,
        x.node_count,
        x.edge_count,
        pair_expansions,
    )
    return x, report
