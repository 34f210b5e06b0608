from __future__ import annotations

import os

from coengage.errors import InputError

DEFAULT_SEED = 42
DEFAULT_RESOLUTION = 1.0
DEFAULT_LOUVAIN_RESTARTS = 8
DEFAULT_FOLLOWBACK_EPSILON = 0.2
DEFAULT_TOP_K = 1000
DEFAULT_HUB_QUANTILE = 0.99
DEFAULT_N_VALUES = (1, 5, 25, 100, 1000, 10000)
DEFAULT_S_VALUES = (1, 5, 25)

THREADS_ENV_VAR = "COENGAGE_THREADS"


def resolve_threads(flag: int | None = None) -> int:
    """
    Worker count: explicit flag, then COENGAGE_THREADS, then the machine's CPU count.
    Never affects outputs, only runtime.
    """
    if flag is not None:
        value = flag
        source = "--threads"
    else:
        raw = os.environ.get(THREADS_ENV_VAR)
        if raw is None or raw.strip() == "":
            return max(1, os.cpu_count() or 1)
        try:
            value = int(raw)
        except ValueError as e:
            raise InputError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from e
        source = THREADS_ENV_VAR
    if value < 1:
        raise InputError(f"{source} must be >= 1")
    return int(value)


def parse_int_list(text: str, *, name: str) -> tuple[int, ...]:
    """Parse "1,5,25" into an ascending tuple of positive ints."""
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as e:
        raise InputError(f"{name} must be a comma-separated list of integers: {text!r}") from e
    if not values:
        raise InputError(f"{name} must not be empty")
    if any(v < 1 for v in values):
        raise InputError(f"{name} values must be >= 1")
    if list(values) != sorted(set(values)):
        raise InputError(f"{name} values must be strictly ascending")
    return values
