from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import pandas as pd

from coengage.errors import InputError
from coengage.io.interactions import RowError

logger = logging.getLogger(__name__)

ATTRIBUTE_COLUMNS = ["node", "label", "followers", "following", "suspended"]
BOOLEAN_ATTRIBUTES = ("suspended",)

_TRUE = {"true", "t", "1", "yes", "y"}
_FALSE = {"false", "f", "0", "no", "n"}


@dataclass(frozen=True)
class NodeAttributes:
    handle: str
    display_label: str | None = None
    followers: int | None = None
    following: int | None = None
    suspended: bool | None = None  # tri-state: None means unknown
    cluster_hint: str | None = None

    def __post_init__(self) -> None:
        if not self.handle:
            raise InputError("handle must be non-empty")
        for name in ("followers", "following"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise InputError(f"{name} must be >= 0")


@dataclass(frozen=True)
class AttributeReport:
    total_rows: int
    accepted_rows: int
    rejected_rows: int
    duplicate_handles: int
    errors: tuple[RowError, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["errors"] = [asdict(e) for e in self.errors]
        return d


def _parse_count(raw: str, name: str) -> int | None:
    if raw == "":
        return None
    try:
        v = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be a non-negative integer, got {raw!r}") from None
    if v < 0:
        raise ValueError(f"{name} must be >= 0")
    return v


def _parse_bool(raw: str, name: str) -> bool | None:
    if raw == "":
        return None
    low = raw.lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ValueError(f"{name} must be a boolean, got {raw!r}")


def read_attributes(
    path: str | Path,
    *,
    strict: bool = False,
) -> tuple[dict[str, NodeAttributes], AttributeReport]:
    """
    Read node attributes from CSV with header node,label,followers,following,suspended
    (an optional cluster_hint column is also accepted). Empty cells mean absent.
    Duplicate handles keep the last row and are counted as warnings.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"attribute file not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)
    except pd.errors.EmptyDataError as e:
        raise InputError(f"{path}: empty attribute file") from e
    except pd.errors.ParserError as e:
        raise InputError(f"{path}: {e}") from e
    if "node" not in df.columns:
        raise InputError(f"{path}: missing required column 'node'")

    out: dict[str, NodeAttributes] = {}
    errors: list[RowError] = []
    duplicates = 0
    for pos, row in enumerate(df.to_dict(orient="records")):
        line = pos + 2
        handle = str(row.get("node", ""))
        try:
            if handle == "":
                raise ValueError("empty node handle")
            attrs = NodeAttributes(
                handle=handle,
                display_label=(row.get("label") or None),
                followers=_parse_count(str(row.get("followers", "")).strip(), "followers"),
                following=_parse_count(str(row.get("following", "")).strip(), "following"),
                suspended=_parse_bool(str(row.get("suspended", "")).strip(), "suspended"),
                cluster_hint=(row.get("cluster_hint") or None),
            )
        except ValueError as e:
            if strict:
                raise InputError(f"{path}:{line}: {e}") from e
            errors.append(RowError(line=line, reason=str(e)))
            continue
        if handle in out:
            duplicates += 1
            logger.warning("%s:%d: duplicate handle %r, keeping the last row", path, line, handle)
        out[handle] = attrs

    if errors:
        logger.warning("%s: rejected %d attribute row(s)", path, len(errors))
    report = AttributeReport(
        total_rows=int(len(df)),
        accepted_rows=int(len(df)) - len(errors),
        rejected_rows=len(errors),
        duplicate_handles=duplicates,
        errors=tuple(errors),
    )
    return out, report
