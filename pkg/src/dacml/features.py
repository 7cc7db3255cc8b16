"""Assemble the five feature variants, split train/test, standardize.

Variants v1a/v1b/v1c carry LODES residence/workplace bin shares normalized
by each side's total employment; v2a/v2b drop demographics and combine
employment-by-industry with household income bins, normalized by total
population.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .domain import AcsIncomeRecord, LodesRecord
from .errors import DataError
from .manifest import IncomeBin, load_income_bins
from .util import derive_seed, format_number, open_text, write_csv

log = logging.getLogger("dacml.features")

VARIANTS = ("v1a", "v1b", "v1c", "v2a", "v2b")
VARIANT_LABELS = {
    "v1a": "LODES(R)",
    "v1b": "LODES(W)",
    "v1c": "LODES(R+W)",
    "v2a": "LI(R)+ACS",
    "v2b": "LI(R+W)+ACS",
}

_INDUSTRY_SLUGS = (
    "agriculture", "mining", "utilities", "construction", "manufacturing",
    "wholesale", "retail", "transport_warehouse", "information", "finance",
    "real_estate", "professional", "management", "admin_waste",
    "education_services", "health_care", "arts_recreation",
    "accommodation_food", "other_services", "public_admin",
)

GROUP_FEATURE_NAMES: dict[str, tuple[str, ...]] = {
    "age": ("age_le29", "age_30_54", "age_ge55"),
    "earnings": ("earn_le1250", "earn_1251_3333", "earn_ge3334"),
    "industry": tuple(f"ind_{s}" for s in _INDUSTRY_SLUGS),
    "race": ("race_white", "race_black", "race_amindian", "race_asian",
             "race_pacific", "race_multi"),
    "ethnicity": ("eth_not_hispanic", "eth_hispanic"),
    "education": ("edu_less_hs", "edu_hs", "edu_some_college", "edu_bachelor_plus"),
    "sex": ("sex_male", "sex_female"),
    "firm_age": ("firmage_0_1", "firmage_2_3", "firmage_4_5", "firmage_6_10",
                 "firmage_11_plus"),
    "firm_size": ("firmsize_0_19", "firmsize_20_49", "firmsize_50_249",
                  "firmsize_250_499", "firmsize_500_plus"),
}

RAC_GROUPS = ("age", "earnings", "industry", "race", "ethnicity", "education", "sex")
WAC_GROUPS = RAC_GROUPS + ("firm_age", "firm_size")

# Name prefixes that mark demographic features; v2 variants must not carry any.
DEMOGRAPHIC_PREFIXES = ("age_", "race_", "eth_", "sex_")


def is_demographic_feature(name: str) -> bool:
    for side in ("rac_", "wac_"):
        if name.startswith(side):
            name = name[len(side):]
    return name.startswith(DEMOGRAPHIC_PREFIXES)


@dataclass(frozen=True)
class FeatureMatrix:
    """Named, normalized features per tract for one variant."""

    variant: str
    tract_ids: tuple[str, ...]
    feature_names: tuple[str, ...]
    values: np.ndarray
    labels: Optional[np.ndarray] = None
    year: int = 0

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.tract_ids), len(self.feature_names)):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{len(self.tract_ids)} tracts x {len(self.feature_names)} features"
            )
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("duplicate feature names")
        if np.isnan(values).any():
            raise ValueError("feature matrix contains absent values")
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=bool)
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)
            if labels.shape != (len(self.tract_ids),):
                raise ValueError("labels length does not match tract count")

    @property
    def n_rows(self) -> int:
        return len(self.tract_ids)

    def take(self, idx: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(
            self.variant,
            tuple(self.tract_ids[i] for i in idx),
            self.feature_names,
            self.values[idx],
            None if self.labels is None else self.labels[idx],
            self.year,
        )

    def with_values(self, values: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(self.variant, self.tract_ids, self.feature_names,
                             values, self.labels, self.year)


def _lodes_shares(record: LodesRecord, groups: Sequence[str]) -> list[float]:
    total = record.total_jobs
    out: list[float] = []
    for g in groups:
        counts = record.group(g)
        out.extend(c / total for c in counts)
    return out


def _lodes_feature_names(groups: Sequence[str], prefix: str = "") -> list[str]:
    names: list[str] = []
    for g in groups:
        names.extend(prefix + n for n in GROUP_FEATURE_NAMES[g])
    return names


def build_variant(
    variant: str,
    lodes_rac: Sequence[LodesRecord] | None = None,
    lodes_wac: Sequence[LodesRecord] | None = None,
    acs: Sequence[AcsIncomeRecord] | None = None,
    labels: Mapping[str, bool] | None = None,
    *,
    year: int = 0,
    bins: Sequence[IncomeBin] | None = None,
) -> FeatureMatrix:
    """Build one variant's matrix from tract-level records.

    Tracts missing from a required source, lacking a label (when labels are
    given), or with a zero denominator are dropped with a logged count.
    Output rows are sorted by tract id, so input order never matters.
    """
    if variant not in VARIANTS:
        raise DataError(f"unknown variant {variant!r}; expected one of {', '.join(VARIANTS)}")
    needs_rac = variant in ("v1a", "v1c", "v2a", "v2b")
    needs_wac = variant in ("v1b", "v1c", "v2b")
    needs_acs = variant in ("v2a", "v2b")
    for needed, recs, name in ((needs_rac, lodes_rac, "RAC"), (needs_wac, lodes_wac, "WAC"),
                               (needs_acs, acs, "ACS")):
        if needed and not recs:
            raise DataError(f"variant {variant} requires {name} records")

    rac_by = {r.geocode: r for r in (lodes_rac or [])}
    wac_by = {r.geocode: r for r in (lodes_wac or [])}
    acs_by = {r.geocode: r for r in (acs or [])}
    sets = []
    if needs_rac:
        sets.append(set(rac_by))
    if needs_wac:
        sets.append(set(wac_by))
    if needs_acs:
        sets.append(set(acs_by))
    tracts = set.intersection(*sets)
    union = set.union(*sets)
    if len(union) - len(tracts):
        log.info("variant %s: dropping %d tract(s) not present in every source",
                 variant, len(union) - len(tracts))
    if labels is not None:
        unlabeled = len(tracts - set(labels))
        if unlabeled:
            log.info("variant %s: dropping %d unlabeled tract(s)", variant, unlabeled)
        tracts &= set(labels)

    if variant == "v1a":
        names = _lodes_feature_names(RAC_GROUPS)
    elif variant == "v1b":
        names = _lodes_feature_names(WAC_GROUPS)
    elif variant == "v1c":
        names = _lodes_feature_names(RAC_GROUPS, "rac_") + _lodes_feature_names(WAC_GROUPS, "wac_")
    else:
        bins = bins if bins is not None else load_income_bins()
        names = ["employed_total"] + list(GROUP_FEATURE_NAMES["industry"]) + [b.label for b in bins]
        if variant == "v2b":
            names += [f"wac_{n}" for n in GROUP_FEATURE_NAMES["industry"]]

    rows: list[list[float]] = []
    kept: list[str] = []
    zero_denom = 0
    for tract in sorted(tracts):
        rac = rac_by.get(tract)
        wac = wac_by.get(tract)
        acs_rec = acs_by.get(tract)
        if variant == "v1a":
            if rac.total_jobs == 0:
                zero_denom += 1
                continue
            row = _lodes_shares(rac, RAC_GROUPS)
        elif variant == "v1b":
            if wac.total_jobs == 0:
                zero_denom += 1
                continue
            row = _lodes_shares(wac, WAC_GROUPS)
        elif variant == "v1c":
            if rac.total_jobs == 0 or wac.total_jobs == 0:
                zero_denom += 1
                continue
            row = _lodes_shares(rac, RAC_GROUPS) + _lodes_shares(wac, WAC_GROUPS)
        else:
            pop = acs_rec.total_population
            if pop == 0:
                zero_denom += 1
                continue
            row = [rac.total_jobs / pop]
            row.extend(c / pop for c in rac.industry)
            row.extend(c / pop for c in acs_rec.household_counts)
            if variant == "v2b":
                row.extend(c / pop for c in wac.industry)
        rows.append(row)
        kept.append(tract)
    if zero_denom:
        log.info("variant %s: dropped %d tract(s) with zero denominator", variant, zero_denom)
    if not rows:
        raise DataError(f"variant {variant}: no tracts survived construction")

    values = np.array(rows, dtype=float)
    label_arr = None
    if labels is not None:
        label_arr = np.array([labels[t] for t in kept], dtype=bool)
    return FeatureMatrix(variant, tuple(kept), tuple(names), values, label_arr, year)


def split(matrix: FeatureMatrix, ratio: float, seed: int,
          stratify: bool = True) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Deterministic train/test split; stratified by label by default.

    The train side gets exactly round(ratio * N) rows, allocated to strata
    by largest remainder so each stratum is within one row of its exact
    proportional share.
    """
    if not (0.0 < ratio < 1.0):
        raise DataError(f"split ratio must be in (0, 1), got {ratio}")
    if matrix.labels is None:
        raise DataError("split requires labels")
    n = matrix.n_rows
    rng = np.random.default_rng(derive_seed(seed, 0x5BA1))
    n_train = int(round(ratio * n))

    if stratify:
        strata = [np.flatnonzero(~matrix.labels), np.flatnonzero(matrix.labels)]
        strata = [s for s in strata if len(s) > 0]
        for s in strata:
            if len(s) < 2:
                raise DataError("every label stratum needs at least 2 rows to split")
        exact = [ratio * len(s) for s in strata]
        counts = [int(np.floor(e)) for e in exact]
        remainder = n_train - sum(counts)
        order = sorted(range(len(strata)), key=lambda i: (-(exact[i] - counts[i]), i))
        for i in order[:remainder]:
            counts[i] += 1
        train_idx: list[int] = []
        for s, k in zip(strata, counts):
            perm = rng.permutation(len(s))
            train_idx.extend(s[perm[:k]])
    else:
        if n < 2:
            raise DataError("need at least 2 rows to split")
        perm = rng.permutation(n)
        train_idx = list(perm[:n_train])

    train_mask = np.zeros(n, dtype=bool)
    train_mask[np.asarray(train_idx, dtype=int)] = True
    return matrix.take(np.flatnonzero(train_mask)), matrix.take(np.flatnonzero(~train_mask))


@dataclass(frozen=True)
class StandardizationStats:
    feature_names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    @property
    def constant_features(self) -> tuple[str, ...]:
        return tuple(n for n, s in zip(self.feature_names, self.std) if s == 0.0)

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "mean": [float(m) for m in self.mean],
            "std": [float(s) for s in self.std],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizationStats":
        return cls(tuple(d["feature_names"]), np.array(d["mean"], dtype=float),
                   np.array(d["std"], dtype=float))


class Standardizer(BaseEstimator, TransformerMixin):
    """Center/scale features using statistics learned from the training rows.

    Constant features (zero stddev) transform to zero and are flagged via
    stats_.constant_features.
    """

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        self.mean_ = X.mean(axis=0)
        self.std_ = X.std(axis=0)
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        safe = np.where(self.std_ == 0.0, 1.0, self.std_)
        out = (X - self.mean_) / safe
        out[:, self.std_ == 0.0] = 0.0
        return out


def standardize(train: FeatureMatrix, test: FeatureMatrix | None = None):
    """Standardize with statistics from the training partition only."""
    if train.n_rows == 0:
        raise DataError("cannot standardize an empty training matrix")
    scaler = Standardizer().fit(train.values)
    stats = StandardizationStats(train.feature_names, scaler.mean_.copy(), scaler.std_.copy())
    if stats.constant_features:
        log.warning("constant feature(s) standardized to zero: %s",
                    ", ".join(stats.constant_features))
    train_out = train.with_values(scaler.transform(train.values))
    test_out = None if test is None else test.with_values(scaler.transform(test.values))
    return train_out, test_out, stats


def apply_standardization(matrix: FeatureMatrix, stats: StandardizationStats) -> FeatureMatrix:
    """Transform a matrix with previously learned statistics."""
    if matrix.feature_names != stats.feature_names:
        raise DataError("feature names do not match standardization statistics")
    scaler = Standardizer()
    scaler.mean_ = stats.mean
    scaler.std_ = stats.std
    return matrix.with_values(scaler.transform(matrix.values))


def write_matrix_csv(path, matrix: FeatureMatrix) -> None:
    """Matrix CSV schema: tract_id, label, then feature columns in order."""
    header = ["tract_id", "label"] + list(matrix.feature_names)
    rows = []
    for i, tract in enumerate(matrix.tract_ids):
        label = "" if matrix.labels is None else format_number(matrix.labels[i])
        rows.append([tract, label] + [format_number(v) for v in matrix.values[i]])
    write_csv(path, header, rows)


def read_matrix_csv(path, variant: str = "", year: int = 0) -> FeatureMatrix:
    import csv as _csv

    with open_text(path) as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["tract_id", "label"]:
            raise DataError(f"{path}: not a feature matrix CSV (header must start tract_id,label)")
        names = tuple(header[2:])
        tracts: list[str] = []
        labels: list[bool] = []
        have_labels = True
        rows = []
        for row in reader:
            if not row:
                continue
            tracts.append(row[0])
            if row[1] == "":
                have_labels = False
            else:
                labels.append(row[1] in ("1", "true", "True"))
            rows.append([float(v) for v in row[2:]])
    values = np.array(rows, dtype=float) if rows else np.empty((0, len(names)))
    label_arr = np.array(labels, dtype=bool) if have_labels and labels else None
    if label_arr is not None and len(label_arr) != len(tracts):
        raise DataError(f"{path}: some rows have labels and some do not")
    return FeatureMatrix(variant, tuple(tracts), names, values, label_arr, year)
