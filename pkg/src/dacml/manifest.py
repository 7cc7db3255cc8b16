"""Load the bundled manifests: burden indicator names and income bins.

Both are plain text files a user can replace to follow a new data edition;
nothing else in the package hard-codes indicator names or bin edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import DataError

EXPECTED_INDICATOR_COUNT = 36


@dataclass(frozen=True)
class IncomeBin:
    label: str
    lower: float
    upper: float | None  # None = open-ended top bin


def _read_lines(path: str | Path | None, default_name: str) -> list[str]:
    if path is None:
        text = resources.files("dacml.data").joinpath(default_name).read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    lines = []
    for raw in text.splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append(line)
    return lines


def load_indicator_names(path: str | Path | None = None) -> tuple[str, ...]:
    """Return the canonical ordered indicator names.

    The bundled manifest carries exactly 36 names; a replacement file must
    too, since the rest of the pipeline validates vectors against this count.
    """
    names = _read_lines(path, "indicators.txt")
    if len(names) != EXPECTED_INDICATOR_COUNT:
        raise DataError(
            f"indicator manifest lists {len(names)} names, "
            f"expected {EXPECTED_INDICATOR_COUNT}"
        )
    if len(set(names)) != len(names):
        raise DataError("indicator manifest contains duplicate names")
    return tuple(names)


def load_income_bins(path: str | Path | None = None) -> tuple[IncomeBin, ...]:
    """Return ordered income bins with strictly increasing edges."""
    bins: list[IncomeBin] = []
    for line in _read_lines(path, "income_bins.txt"):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise DataError(f"bad income bin line: {line!r}")
        label, lo, hi = parts
        bins.append(IncomeBin(label, float(lo), float(hi) if hi else None))
    if not bins:
        raise DataError("income bin manifest is empty")
    for prev, cur in zip(bins, bins[1:]):
        if prev.upper is None or cur.lower < prev.lower or (cur.upper is not None and cur.upper <= cur.lower):
            raise DataError("income bin edges must be strictly increasing")
    return tuple(bins)
