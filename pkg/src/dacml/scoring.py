"""Percentile-rank indicators over a corpus, score tracts, rank separation.

The percentile of a value is its mid-rank position as a percent of the
population: 100 * (strictly_below + 0.5 * other_ties) / n_present.  Equal
values always get equal percentiles and the convention is invariant to any
strictly monotone rescaling of the raw values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import DacRecord, IndicatorVector
from .errors import DataError

__all__ = [
    "percentile_rank",
    "dac_score",
    "attach_percentiles",
    "rank_separation",
    "SeparationReport",
]


def percentile_rank(values: Sequence[Optional[float]]) -> np.ndarray:
    """Mid-rank percentiles in [0, 100) with absent values passed through.

    Absent entries (None or NaN) stay NaN and do not count toward the
    population size.
    """
    arr = np.array([np.nan if v is None else float(v) for v in values], dtype=float)
    present = ~np.isnan(arr)
    n = int(present.sum())
    if n == 0:
        raise DataError("cannot percentile-rank an all-absent column")
    vals = arr[present]
    sorted_vals = np.sort(vals, kind="stable")
    below = np.searchsorted(sorted_vals, vals, side="left")
    ties = np.searchsorted(sorted_vals, vals, side="right") - below
    out = np.full(arr.shape, np.nan)
    out[present] = 100.0 * (below + 0.5 * (ties - 1)) / n
    return out


def dac_score(indicators: IndicatorVector) -> float:
    """Sum of all indicator percentiles; requires a complete percentile set."""
    if indicators.percentiles is None:
        raise DataError(f"tract {indicators.tract}: no percentiles attached")
    missing = [n for n, p in zip(indicators.names, indicators.percentiles) if p is None]
    if missing:
        raise DataError(
            f"tract {indicators.tract}: missing percentiles for {', '.join(missing)}"
        )
    return float(sum(indicators.percentiles))  # type: ignore[arg-type]


def attach_percentiles(records: Sequence[DacRecord]) -> list[DacRecord]:
    """Percentile-rank every indicator over the corpus and attach the results.

    Each indicator's population is the tracts where it is present; an
    indicator absent everywhere is an error naming it.
    """
    if not records:
        return []
    names = records[0].indicators.names
    columns = np.empty((len(records), len(names)))
    for i, rec in enumerate(records):
        columns[i] = [np.nan if v is None else v for v in rec.indicators.values]
    pct = np.empty_like(columns)
    for j, name in enumerate(names):
        try:
            pct[:, j] = percentile_rank(columns[:, j])
        except DataError:
            raise DataError(f"indicator {name!r} is absent in every tract") from None
    out = []
    for i, rec in enumerate(records):
        row = tuple(None if np.isnan(p) else float(p) for p in pct[i])
        vec = IndicatorVector(rec.tract, names, rec.indicators.values, percentiles=row)
        score = float(np.nansum(pct[i])) if all(p is not None for p in row) else None
        out.append(DacRecord(rec.tract, vec, rec.dac_flag, score=score))
    return out


@dataclass(frozen=True)
class SeparationRow:
    indicator: str
    median_dac: float
    median_nondac: float
    separation: float


@dataclass(frozen=True)
class SeparationReport:
    """Indicators ranked by how far apart the two classes' medians sit."""

    rows: tuple[SeparationRow, ...]       # manifest order
    ranking: tuple[str, ...]              # by descending separation

    def top(self, k: int) -> tuple[str, ...]:
        return self.ranking[:k]


def rank_separation(records: Sequence[DacRecord]) -> SeparationReport:
    """Rank indicators by |median percentile (DAC) - median (non-DAC)|.

    Ties break by manifest order.  Records without percentiles get them
    computed over the given corpus first.
    """
    flags = {r.dac_flag for r in records}
    if flags != {True, False}:
        raise DataError("separation ranking needs both DAC and non-DAC tracts")
    if any(r.indicators.percentiles is None for r in records):
        records = attach_percentiles(records)
    names = records[0].indicators.names
    rows = []
    for j, name in enumerate(names):
        dac_vals = [r.indicators.percentiles[j] for r in records
                    if r.dac_flag and r.indicators.percentiles[j] is not None]
        non_vals = [r.indicators.percentiles[j] for r in records
                    if not r.dac_flag and r.indicators.percentiles[j] is not None]
        med_dac = float(np.median(dac_vals)) if dac_vals else float("nan")
        med_non = float(np.median(non_vals)) if non_vals else float("nan")
        sep = abs(med_dac - med_non)
        rows.append(SeparationRow(name, med_dac, med_non, 0.0 if np.isnan(sep) else sep))
    order = sorted(range(len(rows)), key=lambda j: (-rows[j].separation, j))
    return SeparationReport(rows=tuple(rows), ranking=tuple(names[j] for j in order))
