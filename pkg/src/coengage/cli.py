from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict
from typing import Any

import numpy as np

from coengage import __version__
from coengage.analysis.audience import (
    SELF_AUDIENCE_COLUMNS,
    audience_timeseries,
    coverage_stats,
    self_audience_overlap,
    timeseries_frame,
)
from coengage.analysis.overlays import FOLLOWBACK_COLUMNS, OVERLAY_COLUMNS, followback_metrics, overlay_rates
from coengage.analysis.structure import (
    BRIDGE_COLUMNS,
    SATELLITE_COLUMNS,
    bridge_concentration,
    bridge_table,
    satellites,
)
from coengage.clustering.landmarks import label_clusters, read_landmarks
from coengage.clustering.louvain import ClusterAssignment, louvain, top_nodes
from coengage.config import (
    DEFAULT_FOLLOWBACK_EPSILON,
    DEFAULT_HUB_QUANTILE,
    DEFAULT_N_VALUES,
    DEFAULT_RESOLUTION,
    DEFAULT_S_VALUES,
    DEFAULT_SEED,
    DEFAULT_TOP_K,
    parse_int_list,
    resolve_threads,
)
from coengage.errors import CapacityError, InputError, NodeNotFoundError
from coengage.io.attributes import read_attributes
from coengage.io.export import (
    read_edge_csv,
    table_records,
    write_assignment_csv,
    write_edge_csv,
    write_gexf,
    write_summary_json,
    write_table_csv,
)
from coengage.io.interactions import FORMATS, IngestOptions, read_interactions
from coengage.io.summary import summary_payload
from coengage.model.graph import CoengagementGraph, ProjectionParams
from coengage.projection.engine import ProjectionOptions, project
from coengage.sweep.grid import sweep, write_existence_csv
from coengage.synth.generator import generate, load_scenario, write_dataset

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CAPACITY = 2


class _Parser(argparse.ArgumentParser):
    # usage errors share the input-error exit code
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _print(out: dict[str, Any]) -> None:
    print(json.dumps(out, indent=2, sort_keys=True))


def _cluster_section(x: CoengagementGraph, labeled: ClusterAssignment, *, top_k: int = 5) -> dict[str, Any]:
    return {
        "modularity": labeled.modularity,
        "resolution": labeled.resolution,
        "seed": labeled.seed,
        "count": len(labeled.community_ids),
        "sizes": labeled.sizes(),
        "labels": dict(labeled.labels),
        "top_nodes": top_nodes(x, labeled, k=top_k) if len(labeled) else {},
    }


def _ingest(args: argparse.Namespace):
    return read_interactions(
        args.input,
        format=args.format,
        options=IngestOptions(keep_self_loops=args.keep_self_loops, strict=args.strict),
    )


def cmd_project(args: argparse.Namespace) -> int:
    params = ProjectionParams(n=args.n, s=args.s)
    threads = resolve_threads(args.threads)
    res = _ingest(args)
    x, report = project(
        res.graph,
        params,
        options=ProjectionOptions(
            max_fanout_cap=args.max_fanout_cap,
            cap_hard=args.cap_hard,
            threads=threads,
            progress=args.progress,
            max_pairs=args.max_pairs,
        ),
    )
    if args.out_gexf:
        if x.node_count:
            write_gexf(x, args.out_gexf)
        else:
            logger.warning("coengagement graph is empty; skipping %s", args.out_gexf)
    if args.out_edges:
        write_edge_csv(x, args.out_edges)
    if args.out_summary:
        write_summary_json(
            summary_payload(
                params=params,
                g=res.graph,
                x=x,
                ingest=res.report,
                projection=report,
                provenance={
                    "command": "project",
                    "input": args.input,
                    "format": args.format,
                    "keep_self_loops": args.keep_self_loops,
                    "strict": args.strict,
                    "max_fanout_cap": args.max_fanout_cap,
                    "cap_hard": args.cap_hard,
                    "max_pairs": args.max_pairs,
                },
            ),
            args.out_summary,
        )
    _print(
        {
            "n": params.n,
            "s": params.s,
            "nodes": x.node_count,
            "edges": x.edge_count,
            "rejected_rows": res.report.rejected_rows,
            "out_gexf": args.out_gexf if x.node_count else None,
            "out_edges": args.out_edges,
            "out_summary": args.out_summary,
        }
    )
    return EXIT_OK


def cmd_cluster(args: argparse.Namespace) -> int:
    x = read_edge_csv(args.edges)
    landmarks = read_landmarks(args.landmarks)
    labeled = label_clusters(louvain(x, resolution=args.resolution, seed=args.seed), landmarks)
    if args.out_assignments:
        write_assignment_csv(labeled, args.out_assignments)
    write_summary_json(
        summary_payload(
            x=x,
            clusters=_cluster_section(x, labeled),
            provenance={
                "command": "cluster",
                "edges": args.edges,
                "landmarks": args.landmarks,
                "resolution": args.resolution,
                "seed": args.seed,
            },
        ),
        args.out_summary,
    )
    _print(
        {
            "communities": len(labeled.community_ids),
            "modularity": labeled.modularity,
            "labels": {str(c): lab for c, lab in sorted(labeled.labels.items())},
            "out_summary": args.out_summary,
        }
    )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    n_values = parse_int_list(args.n_list, name="--n-list")
    s_values = parse_int_list(args.s_list, name="--s-list")
    threads = resolve_threads(args.threads)
    landmarks = read_landmarks(args.landmarks)
    res = _ingest(args)
    emap = sweep(
        res.graph,
        n_values=n_values,
        s_values=s_values,
        landmarks=landmarks,
        resolution=args.resolution,
        seed=args.seed,
        threads=threads,
        progress=args.progress,
    )
    write_existence_csv(emap, args.out)
    _print(
        {
            "cells": len(emap.cells),
            "labels": landmarks.labels,
            "salient_cells": {lab: len(emap.salient_region(lab)) for lab in landmarks.labels},
            "out": args.out,
        }
    )
    return EXIT_OK


def _hub_threshold(x: CoengagementGraph, explicit: int | None) -> int | None:
    if explicit is not None:
        if explicit < 1:
            raise InputError("--hub-min-weighted-degree must be >= 1")
        return explicit
    if x.node_count == 0:
        return None
    wdeg = x.weighted_degrees[x.node_ordinals]
    return int(math.ceil(float(np.quantile(wdeg, DEFAULT_HUB_QUANTILE))))


def cmd_analyze(args: argparse.Namespace) -> int:
    params = ProjectionParams(n=args.n, s=args.s)
    threads = resolve_threads(args.threads)
    landmarks = read_landmarks(args.landmarks)
    attrs, attr_report = read_attributes(args.attrs) if args.attrs else ({}, None)
    if args.overlay and not args.attrs:
        raise InputError("--overlay requires --attrs")
    res = _ingest(args)
    x, report = project(res.graph, params, options=ProjectionOptions(threads=threads, progress=args.progress))
    labeled = label_clusters(louvain(x, resolution=args.resolution, seed=args.seed), landmarks)

    out = args.out_dir
    os.makedirs(out, exist_ok=True)
    def path(name: str) -> str:
        return os.path.join(out, name)

    if x.node_count:
        write_gexf(x, path("coengagement.gexf"), clusters=labeled, attrs=attrs)
    else:
        logger.warning("coengagement graph is empty at (n=%d, s=%d); no GEXF written", params.n, params.s)
    write_edge_csv(x, path("edges.csv"))
    write_assignment_csv(labeled, path("clusters.csv"))

    analysis: dict[str, Any] = {}
    bridges = bridge_table(x, labeled)
    write_table_csv(bridges, path("bridges.csv"), columns=BRIDGE_COLUMNS)
    analysis["bridges"] = table_records(bridges)
    analysis["bridge_concentration"] = {
        f"{a}|{b}": nodes for (a, b), nodes in bridge_concentration(x, labeled).items()
    }

    hub_min = _hub_threshold(x, args.hub_min_weighted_degree)
    sats = satellites(x, hub_min_weighted_degree=hub_min) if hub_min is not None else []
    write_table_csv(sats, path("satellites.csv"), columns=SATELLITE_COLUMNS)
    analysis["satellites"] = table_records(sats)
    analysis["hub_min_weighted_degree"] = hub_min

    self_aud = self_audience_overlap(res.graph, x, labeled, params)
    write_table_csv(self_aud, path("self_audience.csv"), columns=SELF_AUDIENCE_COLUMNS)
    analysis["self_audience"] = table_records(self_aud)

    analysis["coverage"] = asdict(coverage_stats(res.graph, x, k=args.top_k))

    if attrs:
        fb = followback_metrics(x, attrs, labeled, epsilon=args.epsilon)
        write_table_csv(fb, path("followback.csv"), columns=FOLLOWBACK_COLUMNS)
        analysis["followback"] = table_records(fb)
    else:
        analysis["followback"] = None
    if args.overlay:
        ov = overlay_rates(x, labeled, attrs, attribute=args.overlay)
        write_table_csv(ov, path("overlay.csv"), columns=OVERLAY_COLUMNS)
        analysis["overlay"] = table_records(ov)
    else:
        analysis["overlay"] = None

    if args.focal:
        series = audience_timeseries(res.rows, focal=args.focal, clusters=labeled, bucket=args.bucket)
        frame = timeseries_frame(series)
        frame.to_csv(path("timeseries.csv"), index=False, lineterminator="\n")
        analysis["timeseries"] = {
            "focal": series.focal,
            "bucket": series.bucket,
            "class_names": list(series.class_names),
            "buckets": [asdict(b) for b in series.buckets],
            "engagers_per_class": {
                c: sum(1 for v in series.classes.values() if v == c) for c in series.class_names
            },
        }
    else:
        analysis["timeseries"] = None
    analysis["attributes_ingest"] = None if attr_report is None else attr_report.to_dict()

    write_summary_json(
        summary_payload(
            params=params,
            g=res.graph,
            x=x,
            ingest=res.report,
            projection=report,
            clusters=_cluster_section(x, labeled),
            analysis=analysis,
            provenance={
                "command": "analyze",
                "input": args.input,
                "format": args.format,
                "landmarks": args.landmarks,
                "attrs": args.attrs,
                "resolution": args.resolution,
                "seed": args.seed,
                "epsilon": args.epsilon,
                "top_k": args.top_k,
                "hub_quantile": DEFAULT_HUB_QUANTILE if args.hub_min_weighted_degree is None else None,
                "overlay": args.overlay,
                "focal": args.focal,
                "bucket": args.bucket,
                "keep_self_loops": args.keep_self_loops,
                "strict": args.strict,
            },
        ),
        path("summary.json"),
    )
    _print(
        {
            "n": params.n,
            "s": params.s,
            "nodes": x.node_count,
            "edges": x.edge_count,
            "communities": len(labeled.community_ids),
            "labels": sorted(set(labeled.labels.values())),
            "out_dir": out,
        }
    )
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    ds = generate(load_scenario(args.spec))
    paths = write_dataset(ds, args.out_dir)
    _print(
        {
            "rows": int(len(ds.interactions)),
            "accounts_with_attributes": int(len(ds.attributes)),
            "landmarks": int(len(ds.landmarks)),
            "files": paths,
        }
    )
    return EXIT_OK


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="Interaction rows (engager,target[,count][,timestamp]).")
    p.add_argument("--format", choices=list(FORMATS), default="csv")
    p.add_argument("--keep-self-loops", action="store_true", default=False)
    p.add_argument("--strict", action="store_true", default=False, help="Fail on the first malformed row.")
    p.add_argument("--progress", action="store_true", default=False)


def _add_cluster_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--threads", type=int, default=None, help="Worker count (default: COENGAGE_THREADS or CPU count).")

    p = _Parser(prog="coengage")
    p.add_argument("--version", action="version", version=f"coengage {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)

    pj = sub.add_parser("project", parents=[common], help="Project interactions into a coengagement network.")
    _add_input_args(pj)
    pj.add_argument("--n", type=int, required=True, help="Minimum number of co-engagers per edge.")
    pj.add_argument("--s", type=int, required=True, help="Minimum engagements per co-engager and account.")
    pj.add_argument("--max-fanout-cap", type=int, default=None)
    pj.add_argument("--cap-hard", action="store_true", default=False, help="Skip engagers above the fan-out cap.")
    pj.add_argument("--max-pairs", type=int, default=None, help="Abort when pair expansions exceed this budget.")
    pj.add_argument("--out-gexf", default=None)
    pj.add_argument("--out-edges", default=None)
    pj.add_argument("--out-summary", default=None)
    pj.set_defaults(func=cmd_project)

    cl = sub.add_parser("cluster", parents=[common], help="Louvain clustering of an edge CSV, labeled by landmarks.")
    cl.add_argument("--edges", required=True)
    cl.add_argument("--landmarks", required=True)
    _add_cluster_args(cl)
    cl.add_argument("--out-summary", required=True)
    cl.add_argument("--out-assignments", default=None)
    cl.set_defaults(func=cmd_cluster)

    sw = sub.add_parser("sweep", parents=[common], help="Existence map of labeled clusters over an (n, s) grid.")
    _add_input_args(sw)
    sw.add_argument("--n-list", default=",".join(str(v) for v in DEFAULT_N_VALUES))
    sw.add_argument("--s-list", default=",".join(str(v) for v in DEFAULT_S_VALUES))
    sw.add_argument("--landmarks", required=True)
    _add_cluster_args(sw)
    sw.add_argument("--out", required=True)
    sw.set_defaults(func=cmd_sweep)

    an = sub.add_parser("analyze", parents=[common], help="Project, cluster and run every analysis.")
    _add_input_args(an)
    an.add_argument("--n", type=int, required=True)
    an.add_argument("--s", type=int, required=True)
    an.add_argument("--landmarks", required=True)
    _add_cluster_args(an)
    an.add_argument("--attrs", default=None)
    an.add_argument("--overlay", default=None, choices=["suspended"])
    an.add_argument("--focal", default=None, help="Account whose audience is tracked over time.")
    an.add_argument("--bucket", default="day", choices=["day", "week"])
    an.add_argument("--top-k", type=int, default=DEFAULT_TOP_K)
    an.add_argument("--hub-min-weighted-degree", type=int, default=None)
    an.add_argument("--epsilon", type=float, default=DEFAULT_FOLLOWBACK_EPSILON)
    an.add_argument("--out-dir", required=True)
    an.set_defaults(func=cmd_analyze)

    sy = sub.add_parser("synth", parents=[common], help="Generate a planted synthetic dataset from a JSON scenario.")
    sy.add_argument("--spec", required=True)
    sy.add_argument("--out-dir", required=True)
    sy.set_defaults(func=cmd_synth)

    return p


def main(argv: list[str] | None = None) -> int:
    p = build_parser()
    try:
        args = p.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return int(args.func(args))
    except CapacityError as e:
        logger.error("capacity exceeded during %s: %s", e.phase, e)
        print(f"coengage: capacity error ({e.phase}): {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except NodeNotFoundError as e:
        print(f"coengage: unknown node {e.handle!r}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, OSError) as e:
        print(f"coengage: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
