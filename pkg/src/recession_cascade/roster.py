"""Roster CSV (``country,size``) reading and the bundled default roster."""

from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

from .model import ConfigError, CountryRoster

DEFAULT_ROSTER = "roster_1955_approx.csv"


def parse_roster(text: str, source: str = "<roster>") -> CountryRoster:
    rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
    if not rows or [c.strip().lower() for c in rows[0]] != ["country", "size"]:
        raise ConfigError({"roster": f"{source}: header must be 'country,size'"})
    names, sizes = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise ConfigError({"roster": f"{source}:{lineno}: expected 2 cells, got {len(row)}"})
        try:
            size = float(row[1])
        except ValueError:
            raise ConfigError({"roster": f"{source}:{lineno}: size {row[1]!r} is not a number"}) from None
        names.append(row[0].strip())
        sizes.append(size)
    return CountryRoster(tuple(names), sizes)


def load_roster(path: str | Path | None = None) -> CountryRoster:
    """Read a roster file; ``None`` gives the bundled approximate 1955 roster."""
    if path is None:
        text = resources.files("recession_cascade.data").joinpath(DEFAULT_ROSTER).read_text()
        return parse_roster(text, DEFAULT_ROSTER)
    path = Path(path)
    return parse_roster(path.read_text(), str(path))
