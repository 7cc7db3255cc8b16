import gzip
import io

import numpy as np
import pytest

from dacml.domain import LodesRecord, validate_record
from dacml.errors import RowError, SchemaError
from dacml.ingest import (
    aggregate_to_tract,
    default_column_map,
    lodes_group_fields,
    parse_acs,
    parse_column_map,
    parse_dac,
    parse_lodes,
    read_acs_csv,
    read_dac_csv,
    read_lodes_csv,
    write_acs_csv,
    write_dac_csv,
    write_lodes_csv,
)
from dacml.manifest import load_income_bins, load_indicator_names


def rac_header():
    cmap = default_column_map("RAC")
    fields = ["geocode"] + [f for fs in lodes_group_fields("RAC").values() for f in fs]
    return ["h_geocode", "C000"] + [cmap.columns[f] for fs in lodes_group_fields("RAC").values() for f in fs]


def rac_row(geocode, total, age, earnings, industry, race, ethnicity, education, sex):
    return [geocode, str(total)] + [str(v) for v in (*age, *earnings, *industry, *race, *ethnicity, *education, *sex)]


def balanced_bins(total):
    """Bin tuples for every RAC group that sum exactly to total."""
    def spread(n):
        base = [total // n] * n
        for i in range(total % n):
            base[i] += 1
        return tuple(base)
    return dict(age=spread(3), earnings=spread(3), industry=spread(20),
                race=spread(6), ethnicity=spread(2), education=spread(4), sex=spread(2))


def rac_csv(rows):
    return io.StringIO("\n".join([",".join(rac_header())] + [",".join(r) for r in rows]) + "\n")


def make_row(geocode, total):
    b = balanced_bins(total)
    return rac_row(geocode, total, b["age"], b["earnings"], b["industry"],
                   b["race"], b["ethnicity"], b["education"], b["sex"])


def test_parse_lodes_reads_totals():
    src = rac_csv([make_row("530330001001234", 5), make_row("530330001001235", 7)])
    records = parse_lodes(src, default_column_map("RAC"), "RAC")
    assert [r.total_jobs for r in records] == [5, 7]
    assert all(validate_record(r) == [] for r in records)


def test_parse_lodes_missing_column_is_schema_error():
    header = rac_header()
    header.remove("CA01")
    src = io.StringIO(",".join(header) + "\n")
    with pytest.raises(SchemaError, match="CA01"):
        parse_lodes(src, default_column_map("RAC"), "RAC")


def test_parse_lodes_non_numeric_count_names_line():
    row = make_row("530330001001234", 5)
    row[1] = "five"
    with pytest.raises(RowError, match="line 2"):
        parse_lodes(rac_csv([row]), default_column_map("RAC"), "RAC")


def test_parse_lodes_malformed_geocode():
    with pytest.raises(RowError, match="geocode"):
        parse_lodes(rac_csv([make_row("53033", 5)]), default_column_map("RAC"), "RAC")


def test_strict_sums_toggles_failure():
    row = make_row("530330001001234", 5)
    row[2] = "3"  # age bins now sum to 6 != 5
    src_text = rac_csv([row]).getvalue()
    records = parse_lodes(io.StringIO(src_text), default_column_map("RAC"), "RAC")
    assert len(records) == 1
    with pytest.raises(RowError):
        parse_lodes(io.StringIO(src_text), default_column_map("RAC"), "RAC", strict_sums=True)


def test_tab_delimiter_is_sniffed():
    src = rac_csv([make_row("530330001001234", 5)]).getvalue().replace(",", "\t")
    records = parse_lodes(io.StringIO(src), default_column_map("RAC"), "RAC")
    assert records[0].total_jobs == 5


def test_empty_acs_file_is_empty_list():
    bins = load_income_bins()
    cmap = default_column_map("ACS", bins=bins)
    header = ",".join(["geocode", "households_total", "population_total"] + [b.label for b in bins])
    assert parse_acs(io.StringIO(header + "\n"), cmap, bins=bins) == []


def acs_row_text(geocode, counts, households, population):
    bins = load_income_bins()
    header = ["geocode", "households_total", "population_total"] + [b.label for b in bins]
    row = [geocode, str(households), str(population)] + [str(c) for c in counts]
    return ",".join(header) + "\n" + ",".join(row) + "\n"


def test_parse_acs_round_and_strict():
    bins = load_income_bins()
    counts = [7] * len(bins)
    text = acs_row_text("530330001001", counts, sum(counts), 400)
    records = parse_acs(io.StringIO(text), default_column_map("ACS"))
    assert records[0].total_households == sum(counts)
    off = acs_row_text("530330001001", counts, sum(counts) + 1, 400)
    assert len(parse_acs(io.StringIO(off), default_column_map("ACS"))) == 1
    with pytest.raises(RowError):
        parse_acs(io.StringIO(off), default_column_map("ACS"), strict_sums=True)


def dac_text(rows):
    names = load_indicator_names()
    header = ["tract", "dac_flag"] + list(names)
    lines = [",".join(header)]
    for tract, flag, value in rows:
        lines.append(",".join([tract, flag] + [str(value)] * len(names)))
    return "\n".join(lines) + "\n"


def test_parse_dac_counts_flags():
    text = dac_text([("53033000100", "1", 1.0), ("53033000200", "0", 2.0),
                     ("53033000300", "true", 3.0)])
    records = parse_dac(io.StringIO(text), default_column_map("DAC"))
    assert sum(r.dac_flag for r in records) == 2


def test_parse_dac_rejects_bad_flag():
    text = dac_text([("53033000100", "maybe", 1.0)])
    with pytest.raises(RowError, match="flag"):
        parse_dac(io.StringIO(text), default_column_map("DAC"))


def test_parse_dac_rejects_duplicate_tract():
    text = dac_text([("53033000100", "1", 1.0), ("53033000100", "0", 2.0)])
    with pytest.raises(RowError, match="duplicate"):
        parse_dac(io.StringIO(text), default_column_map("DAC"))


def test_parse_dac_missing_value_is_absent():
    names = load_indicator_names()
    header = ["tract", "dac_flag"] + list(names)
    row = ["53033000100", "1", ""] + ["2.5"] * (len(names) - 1)
    text = ",".join(header) + "\n" + ",".join(row) + "\n"
    rec = parse_dac(io.StringIO(text), default_column_map("DAC"))[0]
    assert rec.indicators.values[0] is None
    assert rec.indicators.values[1] == 2.5


def test_aggregate_sums_blocks_into_tracts():
    src = rac_csv([make_row("530330001001234", 5), make_row("530330001001235", 7),
                   make_row("530330002001000", 3)])
    records = parse_lodes(src, default_column_map("RAC"), "RAC")
    tracts = aggregate_to_tract(records)
    assert [(t.geocode, t.total_jobs) for t in tracts] == [
        ("53033000100", 12), ("53033000200", 3)]
    assert all(validate_record(t) == [] for t in tracts)


def test_aggregate_conserves_counts_and_ignores_order():
    rng = np.random.default_rng(11)
    rows = [make_row(f"53033{rng.integers(1, 4):06d}{i:04d}", int(rng.integers(0, 50)))
            for i in range(40)]
    records = parse_lodes(rac_csv(rows), default_column_map("RAC"), "RAC")
    forward = aggregate_to_tract(records)
    shuffled = list(records)
    rng.shuffle(shuffled)
    assert aggregate_to_tract(shuffled) == forward
    for group in ("age", "earnings", "industry", "race", "ethnicity", "education", "sex"):
        before = np.sum([r.group(group) for r in records], axis=0)
        after = np.sum([t.group(group) for t in forward], axis=0)
        assert (before == after).all()


def test_canonical_csv_round_trip(tmp_path):
    src = rac_csv([make_row("530330001001234", 5), make_row("530330002001000", 3)])
    tracts = aggregate_to_tract(parse_lodes(src, default_column_map("RAC"), "RAC"))
    path = tmp_path / "rac.csv"
    write_lodes_csv(path, tracts, "RAC")
    assert read_lodes_csv(path, "RAC") == tracts

    bins = load_income_bins()
    acs = parse_acs(io.StringIO(acs_row_text("530330001001", [7] * len(bins), 7 * len(bins), 400)),
                    default_column_map("ACS"))
    acs_tracts = aggregate_to_tract(acs)
    apath = tmp_path / "acs.csv"
    write_acs_csv(apath, acs_tracts)
    assert read_acs_csv(apath) == acs_tracts

    dac = parse_dac(io.StringIO(dac_text([("53033000100", "1", 1.5)])), default_column_map("DAC"))
    dpath = tmp_path / "dac.csv"
    write_dac_csv(dpath, dac)
    assert read_dac_csv(dpath) == dac


def test_gzip_input_supported(tmp_path):
    text = rac_csv([make_row("530330001001234", 5)]).getvalue()
    path = tmp_path / "rac.csv.gz"
    with gzip.open(path, "wt") as fh:
        fh.write(text)
    records = parse_lodes(path, default_column_map("RAC"), "RAC")
    assert records[0].total_jobs == 5


def test_column_map_config_overrides_defaults():
    cmap = parse_column_map("kind = RAC\ngeocode = blk\ntotal_jobs = JOBS\n")
    assert cmap.kind == "RAC" and cmap.geocode == "blk"
    assert cmap.columns["total_jobs"] == "JOBS"
    assert cmap.columns["age_1"] == "CA01"  # untouched default


def test_column_map_requires_kind():
    with pytest.raises(SchemaError):
        parse_column_map("total_jobs = JOBS\n")
