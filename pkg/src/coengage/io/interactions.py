from __future__ import annotations

import json
import logging
import re
import warnings
from collections.abc import Callable, Iterable, Iterator
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from coengage.errors import InputError
from coengage.model.graph import EngagementGraph, NodeIndex

logger = logging.getLogger(__name__)

ROW_COLUMNS = ["engager", "target", "count", "timestamp"]
FORMATS = ("csv", "jsonl", "twitter")
MAX_COUNT = 10**18 - 1
_TWEET_TIME_FORMAT = "%a %b %d %H:%M:%S %z %Y"
_BAD_LINE_RE = re.compile(r"Skipping line (\d+): ([^\n]*)")


@dataclass(frozen=True)
class InteractionRecord:
    engager: str
    target: str
    count: int = 1
    timestamp: pd.Timestamp | None = None

    def __post_init__(self) -> None:
        if not self.engager or not self.target:
            raise InputError("engager and target must be non-empty")
        if self.count < 1:
            raise InputError("count must be >= 1")


@dataclass(frozen=True)
class IngestOptions:
    keep_self_loops: bool = False
    strict: bool = False
    chunksize: int = 1_000_000


@dataclass(frozen=True)
class RowError:
    line: int | None
    reason: str
    raw: str | None = None


@dataclass(frozen=True)
class IngestReport:
    total_rows: int
    accepted_rows: int
    aggregated_rows: int
    dropped_self_loops: int
    rejected_rows: int
    edge_count: int
    total_weight: int
    errors: tuple[RowError, ...] = field(default_factory=tuple)
    skipped_rows: int = 0  # tweets that are not retweets

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["errors"] = [asdict(e) for e in self.errors]
        return d


@dataclass(frozen=True, eq=False)
class IngestResult:
    graph: EngagementGraph
    report: IngestReport
    # Accepted rows in input order: engager, target, count (int64), timestamp (UTC or NaT).
    rows: pd.DataFrame


def records_frame(records: Iterable[InteractionRecord]) -> pd.DataFrame:
    rows = [(r.engager, r.target, int(r.count), r.timestamp) for r in records]
    df = pd.DataFrame(rows, columns=ROW_COLUMNS)
    df["count"] = df["count"].astype(np.int64)
    df["timestamp"] = pd.to_datetime(df["timestamp"], utc=True)
    return df


def build_engagement_graph(rows: pd.DataFrame) -> EngagementGraph:
    if len(rows) == 0:
        return EngagementGraph.empty()
    k = len(rows)
    codes, uniques = pd.factorize(
        pd.concat([rows["engager"], rows["target"]], ignore_index=True), sort=True
    )
    index = NodeIndex([str(h) for h in uniques])
    return EngagementGraph.from_arrays(index, codes[:k], codes[k:], rows["count"].to_numpy())


def _iter_csv_chunks(path: Path, options: IngestOptions, bad_lines: list[RowError]) -> Iterator[pd.DataFrame]:
    on_bad = "error" if options.strict else "warn"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", pd.errors.ParserWarning)
        try:
            reader = pd.read_csv(
                path,
                dtype=str,
                keep_default_na=False,
                na_filter=False,
                on_bad_lines=on_bad,
                chunksize=options.chunksize,
            )
            with reader:
                for chunk in reader:
                    yield chunk
        except pd.errors.EmptyDataError as e:
            raise InputError(f"{path}: empty input file") from e
        except pd.errors.ParserError as e:
            raise InputError(f"{path}: {e}") from e
    for w in caught:
        for m in _BAD_LINE_RE.finditer(str(w.message)):
            bad_lines.append(RowError(line=int(m.group(1)), reason=m.group(2).strip()))


def _jsonl_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    if isinstance(v, (int, float, str)):
        return str(v)
    return json.dumps(v, sort_keys=True)


def _flat_row(obj: dict[str, Any]) -> dict[str, str] | None:
    return {c: _jsonl_value(obj.get(c)) for c in ROW_COLUMNS}


def _user_handle(user: Any) -> str:
    if not isinstance(user, dict):
        return ""
    return str(user.get("screen_name") or user.get("id_str") or "")


def _tweet_time(raw: Any) -> str:
    if not raw:
        return ""
    try:
        return datetime.strptime(str(raw), _TWEET_TIME_FORMAT).isoformat()
    except ValueError:
        return str(raw)  # ISO timestamps pass through to row validation


def _tweet_row(obj: dict[str, Any]) -> dict[str, str] | None:
    """Retweet object -> one engagement of the retweeted author; None for other tweets."""
    original = obj.get("retweeted_status")
    if original is None:
        return None
    if not isinstance(original, dict):
        raise ValueError("retweeted_status must be a JSON object")
    return {
        "engager": _user_handle(obj.get("user")),
        "target": _user_handle(original.get("user")),
        "count": "1",
        "timestamp": _tweet_time(obj.get("created_at")),
    }


def _iter_jsonl_chunks(
    path: Path,
    options: IngestOptions,
    bad_lines: list[RowError],
    skipped: list[int],
    to_row: Callable[[dict[str, Any]], dict[str, str] | None] = _flat_row,
) -> Iterator[pd.DataFrame]:
    buf: list[dict[str, Any]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as e:
                err = RowError(line=lineno, reason=f"invalid JSON: {e.msg}", raw=raw.rstrip("\n"))
                if options.strict:
                    raise InputError(f"{path}:{lineno}: {err.reason}") from e
                bad_lines.append(err)
                continue
            try:
                if not isinstance(obj, dict):
                    raise ValueError("row must be a JSON object")
                row = to_row(obj)
            except ValueError as e:
                if options.strict:
                    raise InputError(f"{path}:{lineno}: {e}") from e
                bad_lines.append(RowError(line=lineno, reason=str(e), raw=raw.rstrip("\n")))
                continue
            if row is None:
                skipped.append(lineno)
                continue
            row["_line"] = lineno
            buf.append(row)
            if len(buf) >= options.chunksize:
                yield pd.DataFrame(buf)
                buf = []
    if buf:
        yield pd.DataFrame(buf)


def _parse_counts(raw: pd.Series) -> tuple[pd.Series, pd.Series]:
    text = raw.fillna("").astype(str).str.strip()
    text = text.where(text != "", "1").str.removeprefix("+")
    is_int = text.str.fullmatch(r"-?\d+").fillna(False).astype(bool)
    digits = text.str.lstrip("-").str.lstrip("0").str.len()
    fits = is_int & (digits <= 18)
    counts = pd.Series(np.ones(len(text), dtype=np.int64), index=text.index)
    counts[fits] = text[fits].astype(np.int64)

    reason = pd.Series([""] * len(text), index=text.index, dtype=object)
    reason[~is_int] = "count must be an integer"
    reason[is_int & ~fits] = f"count must be <= {MAX_COUNT}"
    reason[fits & (counts < 1)] = "count must be >= 1"
    counts[reason != ""] = 1
    return counts, reason


def _validate_chunk(df: pd.DataFrame, lines: np.ndarray) -> tuple[pd.DataFrame, list[RowError]]:
    """Vectorized row checks; returns accepted rows (self-loops included) and row errors."""
    n = len(df)
    engager = df["engager"].astype(str) if "engager" in df else pd.Series([""] * n, index=df.index)
    target = df["target"].astype(str) if "target" in df else pd.Series([""] * n, index=df.index)
    reason = pd.Series([""] * n, index=df.index, dtype=object)

    reason[target == ""] = "empty target"
    reason[engager == ""] = "empty engager"

    if "count" in df:
        count, count_reason = _parse_counts(df["count"])
        bad_count = (reason == "") & (count_reason != "")
        reason.loc[bad_count] = count_reason.loc[bad_count]
    else:
        count = pd.Series(np.ones(n, dtype=np.int64), index=df.index)

    if "timestamp" in df:
        raw_ts = df["timestamp"].fillna("").astype(str).str.strip()
        ts = pd.to_datetime(raw_ts.where(raw_ts != ""), utc=True, errors="coerce", format="ISO8601")
        reason[(reason == "") & (raw_ts != "") & ts.isna()] = "invalid timestamp"
    else:
        ts = pd.Series(pd.NaT, index=df.index, dtype="datetime64[ns, UTC]")

    ok = (reason == "").to_numpy()
    errors = [
        RowError(line=int(line), reason=str(r))
        for line, r in zip(lines[~ok], reason[~ok])
    ]
    accepted = pd.DataFrame({"engager": engager, "target": target, "count": count, "timestamp": ts})
    return accepted.loc[ok].reset_index(drop=True), errors


def _physical_lines(n_rows: int, bad_lines: list[int]) -> np.ndarray:
    # Line 1 is the header; skipped bad lines shift the remaining rows down.
    candidates = np.arange(2, n_rows + len(bad_lines) + 2, dtype=np.int64)
    return np.setdiff1d(candidates, np.asarray(bad_lines, dtype=np.int64), assume_unique=True)[:n_rows]


def read_interactions(
    path: str | Path,
    *,
    format: str = "csv",
    options: IngestOptions | None = None,
) -> IngestResult:
    """
    Ingest engagement rows and aggregate them into an EngagementGraph.

    CSV header: engager,target[,count][,timestamp]. JSONL rows: objects with the
    same field names. `twitter` reads one API tweet object per line; each retweet
    is one engagement of `retweeted_status.user` by `user`, other tweets are
    counted in `skipped_rows`. Rows with the same (engager, target) are summed.
    Self-loop rows are dropped unless `keep_self_loops`. Malformed rows are
    reported with their line number; strict mode raises on the first one.
    """
    options = options or IngestOptions()
    if options.chunksize < 1:
        raise InputError("chunksize must be >= 1")
    path = Path(path)
    if not path.exists():
        raise InputError(f"input file not found: {path}")

    bad: list[RowError] = []
    skipped: list[int] = []
    if format == "csv":
        chunks = list(_iter_csv_chunks(path, options, bad))
        if chunks:
            missing = {"engager", "target"} - set(chunks[0].columns)
            if missing:
                raise InputError(f"{path}: missing required column(s) {sorted(missing)}")
            extra = set(chunks[0].columns) - set(ROW_COLUMNS)
            if extra:
                logger.info("ignoring extra columns %s in %s", sorted(extra), path)
        total_parsed = sum(len(c) for c in chunks)
        all_lines = _physical_lines(total_parsed, sorted(e.line for e in bad if e.line is not None))
        offsets = np.cumsum([0] + [len(c) for c in chunks])
        line_chunks = [all_lines[offsets[i] : offsets[i + 1]] for i in range(len(chunks))]
    elif format in ("jsonl", "twitter"):
        to_row = _tweet_row if format == "twitter" else _flat_row
        chunks = list(_iter_jsonl_chunks(path, options, bad, skipped, to_row))
        line_chunks = [c.pop("_line").to_numpy(dtype=np.int64) for c in chunks]
    else:
        raise InputError(f"unsupported format {format!r} (expected one of {list(FORMATS)})")

    accepted_parts: list[pd.DataFrame] = []
    row_errors: list[RowError] = []
    for chunk, lines in zip(chunks, line_chunks):
        acc, errs = _validate_chunk(chunk, lines)
        if errs and options.strict:
            e = errs[0]
            raise InputError(f"{path}:{e.line}: {e.reason}")
        accepted_parts.append(acc)
        row_errors.extend(errs)

    rows = (
        pd.concat(accepted_parts, ignore_index=True)
        if accepted_parts
        else records_frame([])
    )
    self_loop = (rows["engager"] == rows["target"]).to_numpy()
    dropped = 0
    if not options.keep_self_loops and self_loop.any():
        dropped = int(self_loop.sum())
        rows = rows.loc[~self_loop].reset_index(drop=True)

    graph = build_engagement_graph(rows)
    errors = tuple(sorted(bad + row_errors, key=lambda e: (e.line is None, e.line or 0)))
    total = sum(len(c) for c in chunks) + len(bad)
    report = IngestReport(
        total_rows=int(total),
        accepted_rows=int(len(rows)),
        aggregated_rows=int(len(rows) - graph.edge_count),
        dropped_self_loops=dropped,
        rejected_rows=len(errors),
        edge_count=graph.edge_count,
        total_weight=graph.total_weight,
        errors=errors,
        skipped_rows=len(skipped),
    )
    if errors:
        logger.warning("%s: rejected %d malformed row(s); first at line %s", path, len(errors), errors[0].line)
    if dropped:
        logger.info("%s: dropped %d self-loop row(s)", path, dropped)
    return IngestResult(graph=graph, report=report, rows=rows)
