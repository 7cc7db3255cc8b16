"""Core record types shared by every pipeline stage, plus their validation.

All types are immutable values (frozen dataclasses over tuples), so they are
safe to share between concurrent workers.  Validation returns violations as
data rather than raising: a bad record is a fact about the input, not a
program failure.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional, Sequence

TRACT_LEN = 11
BLOCK_GROUP_LEN = 12
BLOCK_LEN = 15

# LODES count groups and their bin counts.  Every group sums to total_jobs.
LODES_GROUPS: dict[str, int] = {
    "age": 3,
    "earnings": 3,
    "industry": 20,
    "race": 6,
    "ethnicity": 2,
    "education": 4,
    "sex": 2,
}
WAC_ONLY_GROUPS: dict[str, int] = {
    "firm_age": 5,
    "firm_size": 5,
}


def is_valid_geocode(code: str, length: int) -> bool:
    return isinstance(code, str) and len(code) == length and code.isdigit()


def tract_prefix(code: str) -> str:
    """First 11 digits of a block or block-group geocode.

    Total over all valid geocodes and idempotent: applying it to its own
    output returns the same tract id.
    """
    if not isinstance(code, str) or len(code) < TRACT_LEN or not code[:TRACT_LEN].isdigit():
        raise ValueError(f"geocode {code!r} has no valid tract prefix")
    return code[:TRACT_LEN]


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.field}: {self.rule}"


@dataclass(frozen=True)
class LodesRecord:
    """Job counts for one geography (block before aggregation, tract after).

    kind is "RAC" (where workers live) or "WAC" (where they work); firm_age
    and firm_size exist only on the WAC side.
    """

    geocode: str
    kind: str
    total_jobs: int
    age: tuple[int, ...]
    earnings: tuple[int, ...]
    industry: tuple[int, ...]
    race: tuple[int, ...]
    ethnicity: tuple[int, ...]
    education: tuple[int, ...]
    sex: tuple[int, ...]
    firm_age: Optional[tuple[int, ...]] = None
    firm_size: Optional[tuple[int, ...]] = None

    def group(self, name: str) -> Optional[tuple[int, ...]]:
        return getattr(self, name)


@dataclass(frozen=True)
class AcsIncomeRecord:
    """Household income distribution for one geography (block group or tract)."""

    geocode: str
    household_counts: tuple[int, ...]
    total_households: int
    total_population: int


@dataclass(frozen=True)
class IndicatorVector:
    """One tract's burden indicators, raw and (optionally) percentile-ranked.

    names is the shared manifest tuple; values align with it positionally.
    None marks an absent measurement, which is excluded from percentile
    populations rather than imputed.
    """

    tract: str
    names: tuple[str, ...]
    values: tuple[Optional[float], ...]
    percentiles: Optional[tuple[Optional[float], ...]] = None

    def value_of(self, name: str) -> Optional[float]:
        return self.values[self.names.index(name)]

    def percentile_of(self, name: str) -> Optional[float]:
        if self.percentiles is None:
            return None
        return self.percentiles[self.names.index(name)]


@dataclass(frozen=True)
class DacRecord:
    tract: str
    indicators: IndicatorVector
    dac_flag: bool
    score: Optional[float] = None


def _check_geocode(record, violations: list[Violation], expected_lengths: Sequence[int]) -> None:
    code = record.geocode
    if not any(is_valid_geocode(code, n) for n in expected_lengths):
        violations.append(
            Violation("geocode", f"{code!r} is not a {'/'.join(map(str, expected_lengths))}-digit code")
        )


def _check_counts(name: str, counts, violations: list[Violation]) -> None:
    if any(c < 0 for c in counts):
        violations.append(Violation(name, "contains negative counts"))


def _check_group_sum(name: str, counts, total: int, violations: list[Violation], rel_tol: float) -> None:
    s = sum(counts)
    if rel_tol <= 0:
        if s != total:
            violations.append(Violation(name, f"bins sum to {s}, total is {total}"))
    elif abs(s - total) > rel_tol * max(1, abs(total)):
        violations.append(Violation(name, f"bins sum to {s}, total is {total} (tol {rel_tol})"))


def validate_lodes(record: LodesRecord, rel_tol: float = 0.0) -> list[Violation]:
    v: list[Violation] = []
    _check_geocode(record, v, (BLOCK_LEN, TRACT_LEN))
    if record.kind not in ("RAC", "WAC"):
        v.append(Violation("kind", f"unknown kind {record.kind!r}"))
    if record.total_jobs < 0:
        v.append(Violation("total_jobs", "negative"))
    for name, size in LODES_GROUPS.items():
        counts = record.group(name)
        if len(counts) != size:
            v.append(Violation(name, f"expected {size} bins, got {len(counts)}"))
            continue
        _check_counts(name, counts, v)
        _check_group_sum(name, counts, record.total_jobs, v, rel_tol)
    for name, size in WAC_ONLY_GROUPS.items():
        counts = record.group(name)
        if record.kind == "WAC":
            if counts is None:
                v.append(Violation(name, "missing on WAC record"))
                continue
            if len(counts) != size:
                v.append(Violation(name, f"expected {size} bins, got {len(counts)}"))
                continue
            _check_counts(name, counts, v)
            _check_group_sum(name, counts, record.total_jobs, v, rel_tol)
        elif counts is not None:
            v.append(Violation(name, f"{name} present on RAC"))
    return v


def validate_acs(record: AcsIncomeRecord, rel_tol: float = 0.0) -> list[Violation]:
    v: list[Violation] = []
    _check_geocode(record, v, (BLOCK_GROUP_LEN, TRACT_LEN))
    if record.total_households < 0:
        v.append(Violation("total_households", "negative"))
    if record.total_population < 0:
        v.append(Violation("total_population", "negative"))
    _check_counts("household_counts", record.household_counts, v)
    _check_group_sum("household_counts", record.household_counts, record.total_households, v, rel_tol)
    return v


def validate_indicators(vec: IndicatorVector, expected_count: int = 36) -> list[Violation]:
    v: list[Violation] = []
    if not is_valid_geocode(vec.tract, TRACT_LEN):
        v.append(Violation("tract", f"{vec.tract!r} is not an 11-digit tract id"))
    if len(vec.names) != expected_count or len(vec.values) != len(vec.names):
        v.append(Violation("values", f"expected {expected_count} indicators, got {len(vec.values)}"))
    if vec.percentiles is not None:
        if len(vec.percentiles) != len(vec.names):
            v.append(Violation("percentiles", "length differs from names"))
        else:
            for name, p in zip(vec.names, vec.percentiles):
                if p is not None and not (0.0 <= p <= 100.0):
                    v.append(Violation(f"percentiles[{name}]", f"{p} outside [0, 100]"))
    return v


def validate_dac(record: DacRecord) -> list[Violation]:
    v = validate_indicators(record.indicators)
    if record.score is not None:
        pct = record.indicators.percentiles
        if pct is None or any(p is None for p in pct):
            v.append(Violation("score", "score present but percentiles incomplete"))
        else:
            total = sum(pct)  # type: ignore[arg-type]
            if abs(total - record.score) > 1e-9:
                v.append(Violation("score", f"score {record.score} != percentile sum {total}"))
    return v


def validate_record(record, rel_tol: float = 0.0) -> list[Violation]:
    """Check every invariant of a domain record; empty list means ok.

    rel_tol relaxes the bin-sum checks for data that was rescaled after
    ingest; at ingest time counts are integers and sums must be exact.
    """
    if isinstance(record, LodesRecord):
        return validate_lodes(record, rel_tol)
    if isinstance(record, AcsIncomeRecord):
        return validate_acs(record, rel_tol)
    if isinstance(record, IndicatorVector):
        return validate_indicators(record)
    if isinstance(record, DacRecord):
        return validate_dac(record)
    raise TypeError(f"not a domain record: {type(record).__name__}")


def record_field_names(record_type) -> tuple[str, ...]:
    return tuple(f.name for f in fields(record_type))
