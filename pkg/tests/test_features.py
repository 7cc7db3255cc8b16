import numpy as np
import pytest

from dacml.domain import AcsIncomeRecord, LodesRecord
from dacml.errors import DataError
from dacml.features import (
    FeatureMatrix,
    apply_standardization,
    build_variant,
    is_demographic_feature,
    read_matrix_csv,
    split,
    standardize,
    write_matrix_csv,
)
from dacml.manifest import load_income_bins


def spread(total, n):
    base = [total // n] * n
    for i in range(total % n):
        base[i] += 1
    return tuple(base)


def lodes(tract, kind, total):
    extra = {}
    if kind == "WAC":
        extra = dict(firm_age=spread(total, 5), firm_size=spread(total, 5))
    return LodesRecord(
        geocode=tract, kind=kind, total_jobs=total,
        age=spread(total, 3), earnings=spread(total, 3), industry=spread(total, 20),
        race=spread(total, 6), ethnicity=spread(total, 2), education=spread(total, 4),
        sex=spread(total, 2), **extra,
    )


def acs(tract, households, population):
    bins = load_income_bins()
    return AcsIncomeRecord(tract, spread(households, len(bins)), households, population)


def corpus(n=12, seed=0):
    rng = np.random.default_rng(seed)
    tracts = [f"530330{i:05d}" for i in range(n)]
    rac = [lodes(t, "RAC", int(rng.integers(50, 500))) for t in tracts]
    wac = [lodes(t, "WAC", int(rng.integers(50, 500))) for t in tracts]
    acs_recs = [acs(t, int(rng.integers(100, 900)), int(rng.integers(500, 3000))) for t in tracts]
    labels = {t: bool(rng.random() < 0.5) for t in tracts}
    labels[tracts[0]] = True
    labels[tracts[1]] = False
    return tracts, rac, wac, acs_recs, labels


def test_v1a_divides_by_total_jobs():
    record = LodesRecord(
        geocode="53033000100", kind="RAC", total_jobs=5,
        age=(2, 2, 1), earnings=(1, 2, 2), industry=spread(5, 20),
        race=spread(5, 6), ethnicity=spread(5, 2), education=spread(5, 4), sex=spread(5, 2),
    )
    matrix = build_variant("v1a", lodes_rac=[record])
    assert matrix.values[0, :3].tolist() == [0.4, 0.4, 0.2]


def test_v1_group_shares_sum_to_one():
    _, rac, wac, acs_recs, labels = corpus()
    for variant, start, width in (("v1a", 0, 3), ("v1b", 0, 3)):
        matrix = build_variant(variant, lodes_rac=rac, lodes_wac=wac, labels=labels)
        assert np.allclose(matrix.values[:, start:start + width].sum(axis=1), 1.0, atol=1e-9)
        # every group sums to 1 for v1 variants
        offset = 0
        for size in (3, 3, 20, 6, 2, 4, 2):
            assert np.allclose(matrix.values[:, offset:offset + size].sum(axis=1), 1.0, atol=1e-9)
            offset += size


def test_v1c_is_the_prefixed_union():
    _, rac, wac, acs_recs, labels = corpus()
    v1a = build_variant("v1a", lodes_rac=rac, labels=labels)
    v1b = build_variant("v1b", lodes_wac=wac, labels=labels)
    v1c = build_variant("v1c", lodes_rac=rac, lodes_wac=wac, labels=labels)
    assert len(v1c.feature_names) == len(v1a.feature_names) + len(v1b.feature_names)
    assert v1c.feature_names[:3] == ("rac_age_le29", "rac_age_30_54", "rac_age_ge55")
    # each side normalized by its own totals
    np.testing.assert_allclose(v1c.values[:, :len(v1a.feature_names)], v1a.values)
    np.testing.assert_allclose(v1c.values[:, len(v1a.feature_names):], v1b.values)


def test_v2_variants_exclude_demographics():
    _, rac, wac, acs_recs, labels = corpus()
    for variant in ("v2a", "v2b"):
        matrix = build_variant(variant, lodes_rac=rac, lodes_wac=wac, acs=acs_recs, labels=labels)
        assert not any(is_demographic_feature(n) for n in matrix.feature_names)
    v2a = build_variant("v2a", lodes_rac=rac, acs=acs_recs, labels=labels)
    assert "employed_total" in v2a.feature_names
    assert sum(n.startswith("inc_") for n in v2a.feature_names) == len(load_income_bins())


def test_v2b_adds_workplace_industry():
    _, rac, wac, acs_recs, labels = corpus()
    v2a = build_variant("v2a", lodes_rac=rac, acs=acs_recs, labels=labels)
    v2b = build_variant("v2b", lodes_rac=rac, lodes_wac=wac, acs=acs_recs, labels=labels)
    extras = set(v2b.feature_names) - set(v2a.feature_names)
    assert len(extras) == 20 and all(n.startswith("wac_ind_") for n in extras)
    # normalization by population for v2 variants
    pop = {r.geocode: r.total_population for r in acs_recs}
    jobs = {r.geocode: r.total_jobs for r in rac}
    col = v2b.feature_names.index("employed_total")
    for i, tract in enumerate(v2b.tract_ids):
        assert np.isclose(v2b.values[i, col], jobs[tract] / pop[tract])


def test_unknown_variant_and_zero_denominator():
    tracts, rac, wac, acs_recs, labels = corpus()
    with pytest.raises(DataError):
        build_variant("v9", lodes_rac=rac)
    rac[0] = lodes(tracts[0], "RAC", 0)
    empty = LodesRecord(geocode=tracts[0], kind="RAC", total_jobs=0,
                        age=(0, 0, 0), earnings=(0, 0, 0), industry=(0,) * 20,
                        race=(0,) * 6, ethnicity=(0, 0), education=(0,) * 4, sex=(0, 0))
    rac[0] = empty
    matrix = build_variant("v1a", lodes_rac=rac, labels=labels)
    assert tracts[0] not in matrix.tract_ids
    assert matrix.n_rows == len(tracts) - 1


def test_build_is_order_invariant():
    _, rac, wac, acs_recs, labels = corpus()
    forward = build_variant("v2b", lodes_rac=rac, lodes_wac=wac, acs=acs_recs, labels=labels)
    rng = np.random.default_rng(1)
    rac2, wac2, acs2 = list(rac), list(wac), list(acs_recs)
    rng.shuffle(rac2)
    rng.shuffle(wac2)
    rng.shuffle(acs2)
    again = build_variant("v2b", lodes_rac=rac2, lodes_wac=wac2, acs=acs2, labels=labels)
    assert again.tract_ids == forward.tract_ids
    np.testing.assert_array_equal(again.values, forward.values)


def _matrix(n, positives, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.zeros(n, dtype=bool)
    labels[:positives] = True
    return FeatureMatrix(
        "v1a",
        tuple(f"530330{i:05d}" for i in range(n)),
        ("f1", "f2"),
        rng.normal(size=(n, 2)),
        labels,
    )


def test_split_arithmetic_matches_reported_partition():
    # 1445 labeled tracts at 67:33 with 262 positives
    matrix = _matrix(1445, 262, seed=2)
    train, test = split(matrix, 0.67, seed=5)
    assert train.n_rows == 968 and test.n_rows == 477
    # per-stratum counts within 1 of the exact proportional share
    assert abs(int(train.labels.sum()) - 0.67 * 262) <= 1
    assert abs(int((~train.labels).sum()) - 0.67 * 1183) <= 1


def test_split_half_and_half_preserves_classes():
    matrix = _matrix(10, 5, seed=3)
    train, test = split(matrix, 0.5, seed=6)
    assert train.n_rows == 5 and test.n_rows == 5
    assert abs(int(train.labels.sum()) - 2.5) <= 0.5


def test_split_is_deterministic_and_partitions():
    matrix = _matrix(101, 31, seed=4)
    a_train, a_test = split(matrix, 0.67, seed=9)
    b_train, b_test = split(matrix, 0.67, seed=9)
    assert a_train.tract_ids == b_train.tract_ids
    assert set(a_train.tract_ids) | set(a_test.tract_ids) == set(matrix.tract_ids)
    assert not (set(a_train.tract_ids) & set(a_test.tract_ids))
    c_train, _ = split(matrix, 0.67, seed=10)
    assert c_train.tract_ids != a_train.tract_ids  # seed matters


def test_split_requires_two_rows_per_stratum():
    matrix = _matrix(10, 1, seed=5)
    with pytest.raises(DataError):
        split(matrix, 0.5, seed=1)


def test_split_unstratified_flag():
    matrix = _matrix(40, 20, seed=6)
    train, test = split(matrix, 0.5, seed=7, stratify=False)
    assert train.n_rows == 20 and test.n_rows == 20


def test_standardize_train_moments_and_no_leakage():
    rng = np.random.default_rng(8)
    train = _matrix(60, 30, seed=8)
    # skew the test partition away from the train mean
    test = FeatureMatrix("v1a", tuple(f"531330{i:05d}" for i in range(30)),
                         ("f1", "f2"), rng.normal(loc=3.0, size=(30, 2)),
                         np.arange(30) < 15)
    train_s, test_s, stats = standardize(train, test)
    assert np.allclose(train_s.values.mean(axis=0), 0.0, atol=1e-9)
    assert np.allclose(train_s.values.std(axis=0), 1.0, atol=1e-9)
    # stats came from train: the skewed test partition cannot be centered
    assert abs(test_s.values.mean()) > 0.5
    assert stats.feature_names == ("f1", "f2")


def test_standardize_flags_constant_columns():
    values = np.column_stack([np.full(10, 7.0), np.arange(10.0)])
    matrix = FeatureMatrix("v1a", tuple(f"530330{i:05d}" for i in range(10)),
                           ("const", "varies"), values, np.arange(10) < 5)
    out, _, stats = standardize(matrix)
    assert stats.constant_features == ("const",)
    assert (out.values[:, 0] == 0.0).all()


def test_apply_standardization_checks_names():
    matrix = _matrix(10, 5, seed=9)
    _, _, stats = standardize(matrix)
    renamed = FeatureMatrix("v1a", matrix.tract_ids, ("other", "f2"),
                            matrix.values, matrix.labels)
    with pytest.raises(DataError):
        apply_standardization(renamed, stats)


def test_matrix_csv_round_trip(tmp_path):
    matrix = _matrix(12, 4, seed=10)
    path = tmp_path / "matrix.csv"
    write_matrix_csv(path, matrix)
    back = read_matrix_csv(path, variant=matrix.variant)
    assert back.tract_ids == matrix.tract_ids
    assert back.feature_names == matrix.feature_names
    np.testing.assert_array_equal(back.values, matrix.values)
    np.testing.assert_array_equal(back.labels, matrix.labels)


def test_matrix_rejects_nan_and_shape_mismatch():
    with pytest.raises(ValueError):
        FeatureMatrix("v1a", ("a",), ("f",), np.array([[np.nan]]))
    with pytest.raises(ValueError):
        FeatureMatrix("v1a", ("a",), ("f", "g"), np.ones((1, 1)))
