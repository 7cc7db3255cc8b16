"""Parse LODES, ACS, and DAC source files; aggregate blocks to tracts.

Source files are delimiter-separated text with a header row (comma or tab,
auto-detected).  A ColumnMap decouples the pipeline's logical schema from
the column codes of a particular data release; bundled defaults match the
public LODES codes and the canonical CSVs this package itself emits.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .domain import (
    BLOCK_GROUP_LEN,
    BLOCK_LEN,
    LODES_GROUPS,
    TRACT_LEN,
    WAC_ONLY_GROUPS,
    AcsIncomeRecord,
    DacRecord,
    IndicatorVector,
    LodesRecord,
    is_valid_geocode,
    tract_prefix,
    validate_record,
)
from .errors import DataError, RowError, SchemaError
from .manifest import IncomeBin, load_income_bins, load_indicator_names
from .util import format_number, open_text, write_csv

log = logging.getLogger("dacml.ingest")

SOURCE_KINDS = ("RAC", "WAC", "ACS", "DAC")

# Public LODES column codes, per released structure files.  Race bins skip
# CR06 (the released files jump from CR05 to CR07).
_LODES_SOURCE_COLUMNS = {
    "total_jobs": "C000",
    **{f"age_{i}": f"CA0{i}" for i in (1, 2, 3)},
    **{f"earnings_{i}": f"CE0{i}" for i in (1, 2, 3)},
    **{f"industry_{i}": f"CNS{i:02d}" for i in range(1, 21)},
    **{f"race_{i}": c for i, c in enumerate(("CR01", "CR02", "CR03", "CR04", "CR05", "CR07"), 1)},
    "ethnicity_1": "CT01",
    "ethnicity_2": "CT02",
    **{f"education_{i}": f"CD0{i}" for i in (1, 2, 3, 4)},
    "sex_1": "CS01",
    "sex_2": "CS02",
    **{f"firm_age_{i}": f"CFA0{i}" for i in range(1, 6)},
    **{f"firm_size_{i}": f"CFS0{i}" for i in range(1, 6)},
}


def lodes_group_fields(kind: str) -> dict[str, list[str]]:
    """Logical field names per bin group, in canonical order."""
    groups = dict(LODES_GROUPS)
    if kind == "WAC":
        groups.update(WAC_ONLY_GROUPS)
    return {g: [f"{g}_{i}" for i in range(1, n + 1)] for g, n in groups.items()}


def logical_fields(kind: str, bins: Sequence[IncomeBin] | None = None,
                   indicator_names: Sequence[str] | None = None) -> list[str]:
    """The complete logical schema (sans geocode) for a source kind."""
    if kind in ("RAC", "WAC"):
        out = ["total_jobs"]
        for names in lodes_group_fields(kind).values():
            out.extend(names)
        return out
    if kind == "ACS":
        bins = bins if bins is not None else load_income_bins()
        return ["total_households", "total_population"] + [f"income_{i}" for i in range(1, len(bins) + 1)]
    if kind == "DAC":
        names = indicator_names if indicator_names is not None else load_indicator_names()
        return ["dac_flag"] + list(names)
    raise ValueError(f"unknown source kind {kind!r}")


@dataclass(frozen=True)
class ColumnMap:
    """Maps the logical schema of one source kind to source column names."""

    kind: str
    geocode: str
    columns: dict[str, str]

    def check_total(self, bins: Sequence[IncomeBin] | None = None,
                    indicator_names: Sequence[str] | None = None) -> None:
        missing = [f for f in logical_fields(self.kind, bins, indicator_names)
                   if f not in self.columns]
        if missing:
            raise SchemaError(f"column map for {self.kind} missing logical fields: {', '.join(missing)}")
        seen = list(self.columns.values()) + [self.geocode]
        if len(set(seen)) != len(seen):
            raise SchemaError(f"column map for {self.kind} reuses a source column name")


def default_column_map(kind: str, bins: Sequence[IncomeBin] | None = None,
                       indicator_names: Sequence[str] | None = None) -> ColumnMap:
    """Bundled default maps.

    RAC/WAC default to the public LODES column codes; ACS and DAC default to
    the canonical schema emitted by this package (so synthetic corpora round-
    trip through ingest unchanged).
    """
    if kind == "RAC":
        return ColumnMap("RAC", "h_geocode", dict(_LODES_SOURCE_COLUMNS))
    if kind == "WAC":
        return ColumnMap("WAC", "w_geocode", dict(_LODES_SOURCE_COLUMNS))
    if kind == "ACS":
        bins = bins if bins is not None else load_income_bins()
        cols = {"total_households": "households_total", "total_population": "population_total"}
        for i, b in enumerate(bins, 1):
            cols[f"income_{i}"] = b.label
        return ColumnMap("ACS", "geocode", cols)
    if kind == "DAC":
        names = indicator_names if indicator_names is not None else load_indicator_names()
        cols = {"dac_flag": "dac_flag"}
        cols.update({n: n for n in names})
        return ColumnMap("DAC", "tract", cols)
    raise ValueError(f"unknown source kind {kind!r}")


def parse_column_map(text: str, kind: str | None = None) -> ColumnMap:
    """Parse a plain-text map: one `logical_field = column_name` per line.

    A `kind = RAC` line may set the source kind; otherwise pass it in.
    Unlisted logical fields fall back to the kind's default map, so a config
    only needs the columns that differ from the bundled defaults.
    """
    entries: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SchemaError(f"column map line {ln}: expected 'logical = column', got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise SchemaError(f"column map line {ln}: empty name in {line!r}")
        entries[key] = value
    kind = entries.pop("kind", kind)
    if kind is None:
        raise SchemaError("column map does not declare a kind and none was given")
    kind = kind.upper()
    if kind not in SOURCE_KINDS:
        raise SchemaError(f"unknown source kind {kind!r}")
    base = default_column_map(kind)
    geocode = entries.pop("geocode", base.geocode)
    columns = dict(base.columns)
    columns.update(entries)
    return ColumnMap(kind, geocode, columns)


def load_column_map(path: str | Path, kind: str | None = None) -> ColumnMap:
    return parse_column_map(Path(path).read_text("utf-8"), kind)


def _sniff_delimiter(header: str) -> str:
    return "\t" if header.count("\t") > header.count(",") else ","


def _reader(source, delimiter: str | None):
    """Yield (line_number, row) pairs plus the header lookup."""
    if hasattr(source, "read"):
        fh = source
        close = False
    else:
        fh = open_text(source)
        close = True
    try:
        first = fh.readline()
        if not first:
            return {}, [], None
        delim = delimiter or _sniff_delimiter(first)
        header = next(csv.reader([first], delimiter=delim))
        index = {name.strip(): i for i, name in enumerate(header)}
        rows = [(ln, row) for ln, row in enumerate(csv.reader(fh, delimiter=delim), 2) if row]
        return index, rows, delim
    finally:
        if close:
            fh.close()


def _require_columns(index: dict[str, int], cmap: ColumnMap, fields: Sequence[str]) -> dict[str, int]:
    lookup: dict[str, int] = {}
    missing: list[str] = []
    for f in ["geocode"] + list(fields):
        col = cmap.geocode if f == "geocode" else cmap.columns[f]
        if col not in index:
            missing.append(col)
        else:
            lookup[f] = index[col]
    if missing:
        raise SchemaError(f"input lacks mapped column(s): {', '.join(missing)}")
    return lookup


def _int_cell(row: list[str], pos: int, field: str, ln: int) -> int:
    raw = row[pos].strip() if pos < len(row) else ""
    try:
        value = int(raw)
    except ValueError:
        raise RowError(f"non-numeric count {raw!r} in {field}", ln) from None
    if value < 0:
        raise RowError(f"negative count {value} in {field}", ln)
    return value


def _apply_sum_policy(record, strict_sums: bool, ln: int, dropped: list[int]) -> bool:
    """Returns True if the record should be kept."""
    violations = validate_record(record)
    sum_violations = [v for v in violations if "sum" in v.rule]
    hard = [v for v in violations if v not in sum_violations]
    if hard:
        raise RowError("; ".join(map(str, hard)), ln)
    if sum_violations:
        if strict_sums:
            raise RowError("; ".join(map(str, sum_violations)), ln)
        dropped.append(ln)
    return True


def parse_lodes(source, cmap: ColumnMap, kind: str, *, delimiter: str | None = None,
                strict_sums: bool = False) -> list[LodesRecord]:
    """Parse a block-level LODES file into records.

    Bin-sum mismatches (common in publicly suppressed extracts) raise under
    strict_sums and are logged as warnings otherwise.
    """
    if kind not in ("RAC", "WAC"):
        raise ValueError(f"kind must be RAC or WAC, got {kind!r}")
    if cmap.kind != kind:
        raise SchemaError(f"column map is for {cmap.kind}, not {kind}")
    cmap.check_total()
    index, rows, _ = _reader(source, delimiter)
    if not rows and not index:
        return []
    fields = logical_fields(kind)
    lookup = _require_columns(index, cmap, fields)
    group_fields = lodes_group_fields(kind)

    records: list[LodesRecord] = []
    inexact: list[int] = []
    for ln, row in rows:
        code = row[lookup["geocode"]].strip() if lookup["geocode"] < len(row) else ""
        if not is_valid_geocode(code, BLOCK_LEN):
            raise RowError(f"malformed block geocode {code!r}", ln)
        groups = {
            g: tuple(_int_cell(row, lookup[f], f, ln) for f in names)
            for g, names in group_fields.items()
        }
        record = LodesRecord(
            geocode=code,
            kind=kind,
            total_jobs=_int_cell(row, lookup["total_jobs"], "total_jobs", ln),
            age=groups["age"],
            earnings=groups["earnings"],
            industry=groups["industry"],
            race=groups["race"],
            ethnicity=groups["ethnicity"],
            education=groups["education"],
            sex=groups["sex"],
            firm_age=groups.get("firm_age"),
            firm_size=groups.get("firm_size"),
        )
        _apply_sum_policy(record, strict_sums, ln, inexact)
        records.append(record)
    if inexact:
        log.warning("%d %s row(s) with inexact bin sums kept (first at line %d)",
                    len(inexact), kind, inexact[0])
    return records


def parse_acs(source, cmap: ColumnMap, *, bins: Sequence[IncomeBin] | None = None,
              delimiter: str | None = None, strict_sums: bool = False) -> list[AcsIncomeRecord]:
    """Parse a block-group-level ACS household income file."""
    if cmap.kind != "ACS":
        raise SchemaError(f"column map is for {cmap.kind}, not ACS")
    bins = bins if bins is not None else load_income_bins()
    cmap.check_total(bins=bins)
    index, rows, _ = _reader(source, delimiter)
    if not rows and not index:
        return []
    fields = logical_fields("ACS", bins=bins)
    lookup = _require_columns(index, cmap, fields)
    income_fields = [f"income_{i}" for i in range(1, len(bins) + 1)]

    records: list[AcsIncomeRecord] = []
    inexact: list[int] = []
    for ln, row in rows:
        code = row[lookup["geocode"]].strip() if lookup["geocode"] < len(row) else ""
        if not is_valid_geocode(code, BLOCK_GROUP_LEN):
            raise RowError(f"malformed block-group geocode {code!r}", ln)
        record = AcsIncomeRecord(
            geocode=code,
            household_counts=tuple(_int_cell(row, lookup[f], f, ln) for f in income_fields),
            total_households=_int_cell(row, lookup["total_households"], "total_households", ln),
            total_population=_int_cell(row, lookup["total_population"], "total_population", ln),
        )
        _apply_sum_policy(record, strict_sums, ln, inexact)
        records.append(record)
    if inexact:
        log.warning("%d ACS row(s) with inexact bin sums kept (first at line %d)",
                    len(inexact), inexact[0])
    return records


_TRUE = {"1", "true"}
_FALSE = {"0", "false"}


def parse_dac(source, cmap: ColumnMap, *, indicator_names: Sequence[str] | None = None,
              delimiter: str | None = None) -> list[DacRecord]:
    """Parse a tract-level DAC file: 36 indicator columns plus a flag.

    Missing indicator cells become absent values (excluded from percentile
    populations later), never zeros.
    """
    if cmap.kind != "DAC":
        raise SchemaError(f"column map is for {cmap.kind}, not DAC")
    names = tuple(indicator_names if indicator_names is not None else load_indicator_names())
    cmap.check_total(indicator_names=names)
    index, rows, _ = _reader(source, delimiter)
    if not rows and not index:
        return []
    lookup = _require_columns(index, cmap, logical_fields("DAC", indicator_names=names))

    records: list[DacRecord] = []
    seen: set[str] = set()
    for ln, row in rows:
        code = row[lookup["geocode"]].strip() if lookup["geocode"] < len(row) else ""
        if not is_valid_geocode(code, TRACT_LEN):
            raise RowError(f"malformed tract geocode {code!r}", ln)
        if code in seen:
            raise RowError(f"duplicate tract {code}", ln)
        seen.add(code)
        flag_raw = (row[lookup["dac_flag"]].strip() if lookup["dac_flag"] < len(row) else "").lower()
        if flag_raw in _TRUE:
            flag = True
        elif flag_raw in _FALSE:
            flag = False
        else:
            raise RowError(f"DAC flag {flag_raw!r} not in {{0,1,true,false}}", ln)
        values = []
        for name in names:
            pos = lookup[name]
            raw = row[pos].strip() if pos < len(row) else ""
            if raw == "":
                values.append(None)
            else:
                try:
                    values.append(float(raw))
                except ValueError:
                    raise RowError(f"non-numeric indicator value {raw!r} in {name}", ln) from None
        vec = IndicatorVector(tract=code, names=names, values=tuple(values))
        records.append(DacRecord(tract=code, indicators=vec, dac_flag=flag))
    return records


def aggregate_to_tract(records: Sequence[LodesRecord] | Sequence[AcsIncomeRecord]):
    """Group block(-group) records by tract prefix and sum every count field.

    The reduction is order-invariant: output is sorted by tract id and each
    field is a plain sum, so worker count or input shuffling cannot change
    the result.
    """
    if not records:
        return []
    first = records[0]
    if isinstance(first, LodesRecord):
        kinds = {r.kind for r in records}  # type: ignore[union-attr]
        if len(kinds) != 1:
            raise DataError(f"cannot aggregate mixed LODES kinds: {sorted(kinds)}")
        groups: dict[str, list[LodesRecord]] = {}
        for r in records:
            groups.setdefault(tract_prefix(r.geocode), []).append(r)  # type: ignore[arg-type]
        out = []
        kind = first.kind
        for tract in sorted(groups):
            members = groups[tract]
            def gsum(name):
                cols = [m.group(name) for m in members]
                if cols[0] is None:
                    return None
                return tuple(sum(c) for c in zip(*cols))
            out.append(LodesRecord(
                geocode=tract,
                kind=kind,
                total_jobs=sum(m.total_jobs for m in members),
                age=gsum("age"), earnings=gsum("earnings"), industry=gsum("industry"),
                race=gsum("race"), ethnicity=gsum("ethnicity"), education=gsum("education"),
                sex=gsum("sex"), firm_age=gsum("firm_age"), firm_size=gsum("firm_size"),
            ))
        return out
    if isinstance(first, AcsIncomeRecord):
        agroups: dict[str, list[AcsIncomeRecord]] = {}
        for r in records:
            agroups.setdefault(tract_prefix(r.geocode), []).append(r)  # type: ignore[arg-type]
        return [
            AcsIncomeRecord(
                geocode=tract,
                household_counts=tuple(sum(c) for c in zip(*(m.household_counts for m in agroups[tract]))),
                total_households=sum(m.total_households for m in agroups[tract]),
                total_population=sum(m.total_population for m in agroups[tract]),
            )
            for tract in sorted(agroups)
        ]
    raise TypeError(f"cannot aggregate {type(first).__name__}")


# --- canonical tract-level CSVs (documented column order, bit-stable) ---

def canonical_lodes_header(kind: str) -> list[str]:
    return ["geocode"] + logical_fields(kind)


def write_lodes_csv(path, records: Sequence[LodesRecord], kind: str) -> None:
    header = canonical_lodes_header(kind)
    group_fields = lodes_group_fields(kind)
    rows = []
    for r in sorted(records, key=lambda r: r.geocode):
        row: list = [r.geocode, r.total_jobs]
        for g in group_fields:
            row.extend(r.group(g))
        rows.append(row)
    write_csv(path, header, rows)


def read_lodes_csv(path, kind: str, *, strict_sums: bool = False) -> list[LodesRecord]:
    """Read a canonical tract-level LODES CSV (geocode may be tract or block)."""
    cmap = ColumnMap(kind, "geocode", {f: f for f in logical_fields(kind)})
    index, rows, _ = _reader(path, None)
    if not rows and not index:
        return []
    lookup = _require_columns(index, cmap, logical_fields(kind))
    group_fields = lodes_group_fields(kind)
    records = []
    inexact: list[int] = []
    for ln, row in rows:
        code = row[lookup["geocode"]].strip()
        if not (is_valid_geocode(code, TRACT_LEN) or is_valid_geocode(code, BLOCK_LEN)):
            raise RowError(f"malformed geocode {code!r}", ln)
        groups = {g: tuple(_int_cell(row, lookup[f], f, ln) for f in names)
                  for g, names in group_fields.items()}
        record = LodesRecord(
            geocode=code, kind=kind,
            total_jobs=_int_cell(row, lookup["total_jobs"], "total_jobs", ln),
            age=groups["age"], earnings=groups["earnings"], industry=groups["industry"],
            race=groups["race"], ethnicity=groups["ethnicity"], education=groups["education"],
            sex=groups["sex"], firm_age=groups.get("firm_age"), firm_size=groups.get("firm_size"),
        )
        _apply_sum_policy(record, strict_sums, ln, inexact)
        records.append(record)
    return records


def write_acs_csv(path, records: Sequence[AcsIncomeRecord],
                  bins: Sequence[IncomeBin] | None = None) -> None:
    bins = bins if bins is not None else load_income_bins()
    header = ["geocode", "households_total", "population_total"] + [b.label for b in bins]
    rows = [[r.geocode, r.total_households, r.total_population, *r.household_counts]
            for r in sorted(records, key=lambda r: r.geocode)]
    write_csv(path, header, rows)


def read_acs_csv(path, bins: Sequence[IncomeBin] | None = None, *,
                 strict_sums: bool = False) -> list[AcsIncomeRecord]:
    bins = bins if bins is not None else load_income_bins()
    index, rows, _ = _reader(path, None)
    if not rows and not index:
        return []
    cmap = default_column_map("ACS", bins=bins)
    lookup = _require_columns(index, cmap, logical_fields("ACS", bins=bins))
    income_fields = [f"income_{i}" for i in range(1, len(bins) + 1)]
    records = []
    inexact: list[int] = []
    for ln, row in rows:
        code = row[lookup["geocode"]].strip()
        if not (is_valid_geocode(code, TRACT_LEN) or is_valid_geocode(code, BLOCK_GROUP_LEN)):
            raise RowError(f"malformed geocode {code!r}", ln)
        record = AcsIncomeRecord(
            geocode=code,
            household_counts=tuple(_int_cell(row, lookup[f], f, ln) for f in income_fields),
            total_households=_int_cell(row, lookup["total_households"], "total_households", ln),
            total_population=_int_cell(row, lookup["total_population"], "total_population", ln),
        )
        _apply_sum_policy(record, strict_sums, ln, inexact)
        records.append(record)
    return records


def write_dac_csv(path, records: Sequence[DacRecord]) -> None:
    if not records:
        raise DataError("no DAC records to write")
    names = records[0].indicators.names
    header = ["tract", "dac_flag"] + list(names)
    rows = []
    for r in sorted(records, key=lambda r: r.tract):
        rows.append([r.tract, r.dac_flag, *[format_number(v) for v in r.indicators.values]])
    write_csv(path, header, rows)


def read_dac_csv(path, indicator_names: Sequence[str] | None = None) -> list[DacRecord]:
    names = tuple(indicator_names if indicator_names is not None else load_indicator_names())
    return parse_dac(path, default_column_map("DAC", indicator_names=names), indicator_names=names)


def join_tract_sets(*tract_sets: Iterable[str]) -> list[str]:
    """Tracts present in every source; the dropped count is logged."""
    sets = [set(s) for s in tract_sets]
    common = set.intersection(*sets) if sets else set()
    dropped = len(set.union(*sets)) - len(common) if sets else 0
    if dropped:
        log.info("dropping %d tract(s) not present in every source", dropped)
    return sorted(common)
