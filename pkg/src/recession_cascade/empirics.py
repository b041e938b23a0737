"""GDP panel ingestion and the stylized-fact extractors.

The extractors work on binary ``years x series`` matrices so that the model
path (simulated trajectories) and the data path (recession panels) share a
single implementation.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

log = logging.getLogger(__name__)


class DataFormatError(ValueError):
    """Malformed GDP file; message carries the offending row/column."""


@dataclass(frozen=True)
class LevelsTable:
    """Real GDP levels, ``values[t, c]`` for year ``years[t]``; NaN = missing."""

    years: tuple[int, ...]
    countries: tuple[str, ...]
    values: NDArray[np.float64] = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "years", tuple(int(y) for y in self.years))
        object.__setattr__(self, "countries", tuple(self.countries))
        if vals.shape != (len(self.years), len(self.countries)):
            raise DataFormatError(f"values shape {vals.shape} != ({len(self.years)}, {len(self.countries)})")
        if any(b - a != 1 for a, b in zip(self.years, self.years[1:])):
            raise DataFormatError("years must be strictly increasing and contiguous")
        present = vals[~np.isnan(vals)]
        if np.any(present <= 0):
            raise DataFormatError("GDP levels must be > 0")


@dataclass(frozen=True)
class GrowthTable:
    """Percent growth; row t is growth from ``years[t] - 1`` to ``years[t]``."""

    years: tuple[int, ...]
    countries: tuple[str, ...]
    values: NDArray[np.float64] = field(repr=False)


@dataclass(frozen=True)
class RecessionPanel:
    """Recession indicators with a presence mask (indicator defined iff growth defined)."""

    years: tuple[int, ...]
    countries: tuple[str, ...]
    indicators: NDArray[np.bool_] = field(repr=False)
    present: NDArray[np.bool_] = field(repr=False)


@dataclass
class StylizedFacts:
    counts_hist: list[int]
    duration_counts: dict[int, int]
    wait_counts: dict[int, int]
    total_spells: int
    aggregate_recession_years: list[int]
    years: list[int] = field(default_factory=list)
    counts_per_year: list[int] = field(default_factory=list)
    coverage_per_year: list[int] = field(default_factory=list)

    @property
    def n_years(self) -> int:
        return int(sum(self.counts_hist))


def load_gdp_csv(path: str | Path) -> LevelsTable:
    """Read ``year,<country>,...`` with blank cells for missing levels."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0].lower() != "year":
        raise DataFormatError(f"{path}:1: header must be 'year,<country>,...', got {rows[0]!r}")
    countries = header[1:]
    if any(not c for c in countries) or len(set(countries)) != len(countries):
        raise DataFormatError(f"{path}:1: country names must be non-empty and unique")

    years: list[int] = []
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataFormatError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            year = int(row[0].strip())
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: year {row[0]!r} is not an integer") from None
        if years and year <= years[-1]:
            raise DataFormatError(f"{path}:{lineno}: year {year} does not increase on {years[-1]}")
        if years and year != years[-1] + 1:
            raise DataFormatError(f"{path}:{lineno}: gap between {years[-1]} and {year}")
        vals = []
        for name, cell in zip(countries, row[1:]):
            cell = cell.strip()
            if not cell:
                vals.append(math.nan)
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: column {name!r}: non-numeric value {cell!r}") from None
            if not math.isfinite(v) or v <= 0:
                raise DataFormatError(f"{path}:{lineno}: column {name!r}: level must be > 0, got {cell!r}")
            vals.append(v)
        years.append(year)
        values.append(vals)
    if not years:
        raise DataFormatError(f"{path}: no data rows")
    return LevelsTable(tuple(years), tuple(countries), np.array(values, dtype=float))


def growth_rates(levels: LevelsTable) -> GrowthTable:
    v = levels.values
    g = np.full_like(v, np.nan)
    g[1:] = 100.0 * (v[1:] - v[:-1]) / v[:-1]
    return GrowthTable(levels.years, levels.countries, g)


def recession_panel(growth: GrowthTable) -> RecessionPanel:
    present = ~np.isnan(growth.values)
    ind = np.zeros(growth.values.shape, dtype=bool)
    ind[present] = growth.values[present] < 0.0
    return RecessionPanel(growth.years, growth.countries, ind, present)


def panel_from_levels(levels: LevelsTable) -> RecessionPanel:
    """Recession panel over the growth years (the first level year has no growth)."""
    panel = recession_panel(growth_rates(levels))
    return RecessionPanel(panel.years[1:], panel.countries, panel.indicators[1:], panel.present[1:])


def _as_matrix(x) -> NDArray[np.bool_]:
    m = np.asarray(x, dtype=bool)
    return m[:, None] if m.ndim == 1 else m


def spell_lengths(matrix) -> NDArray[np.int64]:
    """Lengths of maximal runs of 1s down each column of a years x series matrix.

    Spells are listed column by column, in time order within a column.
    """
    m = _as_matrix(matrix)
    if m.size == 0:
        return np.zeros(0, dtype=np.int64)
    pad = np.zeros((m.shape[0] + 2, m.shape[1]), dtype=np.int8)
    pad[1:-1] = m
    d = np.diff(pad, axis=0)
    starts = np.nonzero(d.T == 1)
    ends = np.nonzero(d.T == -1)
    return (ends[1] - starts[1]).astype(np.int64)


def wait_gaps(matrix) -> NDArray[np.int64]:
    """Gaps between successive recession years within each column.

    Years before a column's first recession and after its last contribute
    nothing, and each year after the first of a multi-year spell yields a
    wait of 1.
    """
    m = _as_matrix(matrix)
    cols, rows = np.nonzero(m.T)
    if rows.size < 2:
        return np.zeros(0, dtype=np.int64)
    same = cols[1:] == cols[:-1]
    return (rows[1:] - rows[:-1])[same].astype(np.int64)


def spell_durations(series: Sequence[int]) -> list[int]:
    return [int(x) for x in spell_lengths(np.asarray(series, dtype=bool))]


def wait_times(series: Sequence[int], years: Sequence[int] | None = None) -> list[int]:
    """Waits for one country; ``years`` gives the year labels (default 0..n-1)."""
    s = np.asarray(series, dtype=bool)
    if years is None:
        return [int(x) for x in wait_gaps(s)]
    rec = np.asarray(years)[s]
    return [int(x) for x in np.diff(rec)]


def counts_per_year(matrix) -> NDArray[np.int64]:
    return _as_matrix(matrix).sum(axis=1).astype(np.int64)


def counts_histogram(counts: NDArray[np.int64], n_series: int) -> NDArray[np.int64]:
    return np.bincount(np.asarray(counts, dtype=np.int64), minlength=n_series + 1)


def countries_per_year(panel: RecessionPanel) -> NDArray[np.int64]:
    """Histogram of how many countries are in recession per year.

    Missing observations count as not in recession; the bins run 0..n_countries.
    Years with no country observed are left out.
    """
    ind = panel.indicators & panel.present
    covered = panel.present.any(axis=1)
    return counts_histogram(counts_per_year(ind)[covered], len(panel.countries))


def tally(values) -> dict[int, int]:
    c = Counter(int(v) for v in np.asarray(values).ravel())
    return dict(sorted(c.items()))


def aggregate_recessions(levels: LevelsTable) -> list[int]:
    """Years in which the cross-country GDP total falls.

    Each year-on-year comparison sums only countries observed in both years.
    """
    v = levels.values
    out = []
    for t in range(1, len(levels.years)):
        both = ~np.isnan(v[t]) & ~np.isnan(v[t - 1])
        if not both.any():
            continue
        if v[t, both].sum() < v[t - 1, both].sum():
            out.append(levels.years[t])
    return out


def facts_from_panel(panel: RecessionPanel, aggregate_years: list[int] | None = None) -> StylizedFacts:
    ind = panel.indicators & panel.present
    coverage = panel.present.sum(axis=1)
    short = [y for y, c in zip(panel.years, coverage) if c < len(panel.countries)]
    if short:
        log.info("incomplete coverage in %d of %d years (first %d)", len(short), len(panel.years), short[0])
    durations = spell_lengths(ind)
    per_year = counts_per_year(ind)
    return StylizedFacts(
        counts_hist=[int(x) for x in counts_histogram(per_year[coverage > 0], len(panel.countries))],
        duration_counts=tally(durations),
        wait_counts=tally(wait_gaps(ind)),
        total_spells=int(durations.size),
        aggregate_recession_years=list(aggregate_years or []),
        years=list(panel.years),
        counts_per_year=[int(x) for x in per_year],
        coverage_per_year=[int(x) for x in coverage],
    )


def stylized_facts(levels: LevelsTable) -> StylizedFacts:
    panel = panel_from_levels(levels)
    return facts_from_panel(panel, aggregate_recessions(levels))
