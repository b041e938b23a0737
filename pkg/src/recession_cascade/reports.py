"""File formats: JSON reports and ``value,count`` histogram CSVs.

JSON is written with sorted keys and no timestamps so identical inputs give
byte-identical files. CSVs use a header row, LF line endings and ``.`` as the
decimal separator.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping

from . import __version__

SCHEMA_VERSION = 1


def _clean(obj: Any) -> Any:
    if isinstance(obj, float):
        return None if math.isnan(obj) or math.isinf(obj) else obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return _clean(obj.item())
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj), newline="\n")


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text())


def hist_csv(counts: Mapping[int, int] | Iterable[int]) -> str:
    if not isinstance(counts, Mapping):
        counts = dict(enumerate(counts))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "count"])
    for value in sorted(counts):
        w.writerow([int(value), int(counts[value])])
    return buf.getvalue()


def read_hist_csv(path: str | Path) -> dict[int, int]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["value", "count"]:
        raise ValueError(f"{path}: expected header 'value,count'")
    return {int(v): int(c) for v, c in rows[1:]}


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, newline="\n")


def envelope(kind: str, **payload: Any) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": kind, "code_version": __version__, **payload}


class SchemaError(ValueError):
    pass


def load_distributions(path: str | Path) -> dict[str, dict[int, int]]:
    """Counts, duration and wait frequency tables from a facts or simulation report."""
    data = read_json(path)
    body = data.get("facts") or data.get("stats") or data
    try:
        counts = body["counts_hist"]
        durations = body["duration_counts"]
        waits = body["wait_counts"]
    except (KeyError, TypeError):
        raise SchemaError(f"{path}: needs counts_hist, duration_counts and wait_counts") from None
    if isinstance(counts, Mapping):
        counts = {int(k): int(v) for k, v in counts.items()}
    else:
        counts = dict(enumerate(int(c) for c in counts))
    return {
        "counts": counts,
        "durations": {int(k): int(v) for k, v in durations.items()},
        "waits": {int(k): int(v) for k, v in waits.items()},
    }
