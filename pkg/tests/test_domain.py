import numpy as np
import pytest

from dacml.domain import (
    AcsIncomeRecord,
    DacRecord,
    IndicatorVector,
    LodesRecord,
    is_valid_geocode,
    tract_prefix,
    validate_record,
)


def make_rac(geocode="530330001001234", total=5, age=(2, 2, 1)):
    return LodesRecord(
        geocode=geocode,
        kind="RAC",
        total_jobs=total,
        age=age,
        earnings=(1, 2, 2),
        industry=(1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
        race=(5, 0, 0, 0, 0, 0),
        ethnicity=(3, 2),
        education=(1, 1, 2, 1),
        sex=(3, 2),
    )


def test_tract_prefix_lengths():
    assert tract_prefix("530330001001234") == "53033000100"
    assert tract_prefix("530330001001") == "53033000100"
    # idempotent under re-extraction
    assert tract_prefix(tract_prefix("530330001001234")) == "53033000100"


def test_tract_prefix_total_on_random_codes():
    rng = np.random.default_rng(7)
    for _ in range(200):
        length = int(rng.choice([11, 12, 15]))
        code = "".join(str(d) for d in rng.integers(0, 10, size=length))
        prefix = tract_prefix(code)
        assert len(prefix) == 11 and code.startswith(prefix)
        assert tract_prefix(prefix) == prefix


def test_geocode_validation():
    assert is_valid_geocode("53033000100", 11)
    assert not is_valid_geocode("5303300010", 11)
    assert not is_valid_geocode("5303300010a", 11)


def test_rac_record_with_consistent_sums_is_ok():
    assert validate_record(make_rac()) == []


def test_firm_age_on_rac_is_a_violation():
    record = LodesRecord(
        **{**make_rac().__dict__, "firm_age": (1, 1, 1, 1, 1)}
    )
    rules = [v.rule for v in validate_record(record)]
    assert any("firm_age present on RAC" in r for r in rules)


def test_wac_requires_firm_groups():
    bad = LodesRecord(**{**make_rac().__dict__, "kind": "WAC"})
    fields = [v.field for v in validate_record(bad)]
    assert "firm_age" in fields and "firm_size" in fields


def test_bin_sum_violation_detected():
    record = make_rac(age=(2, 2, 2))  # sums to 6, total 5
    violations = validate_record(record)
    assert any(v.field == "age" and "sum" in v.rule for v in violations)
    # relative tolerance admits the same record after rescaling noise
    assert validate_record(record, rel_tol=0.5) == []


def test_negative_count_is_a_violation():
    record = make_rac(age=(-1, 5, 1))
    assert any("negative" in v.rule for v in validate_record(record))


def test_indicator_vector_needs_36_entries():
    names = tuple(f"ind_{i}" for i in range(35))
    vec = IndicatorVector("53033000100", names, tuple(float(i) for i in range(35)))
    violations = validate_record(vec)
    assert any("expected 36" in v.rule for v in violations)


def test_indicator_percentiles_range_checked():
    names = tuple(f"ind_{i}" for i in range(36))
    vec = IndicatorVector(
        "53033000100", names, tuple(float(i) for i in range(36)),
        percentiles=tuple([50.0] * 35 + [101.0]),
    )
    assert any("outside [0, 100]" in v.rule for v in validate_record(vec))


def test_dac_score_must_match_percentile_sum():
    names = tuple(f"ind_{i}" for i in range(36))
    pct = tuple(float(i) for i in range(36))
    vec = IndicatorVector("53033000100", names, pct, percentiles=pct)
    good = DacRecord("53033000100", vec, True, score=float(sum(pct)))
    assert validate_record(good) == []
    bad = DacRecord("53033000100", vec, True, score=float(sum(pct)) + 1.0)
    assert any(v.field == "score" for v in validate_record(bad))


def test_acs_record_validation():
    record = AcsIncomeRecord("530330001001", (60, 60), 120, 300)
    assert validate_record(record) == []
    off = AcsIncomeRecord("530330001001", (60, 59), 120, 300)
    assert any("sum" in v.rule for v in validate_record(off))


def test_validate_record_rejects_foreign_types():
    with pytest.raises(TypeError):
        validate_record({"not": "a record"})
