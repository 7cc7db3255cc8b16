"""Evaluation, false-positive/negative diagnostics, historical inference,
and trend correlation.

diagnose_errors compares each error group's indicator percentiles against
the true-positive group's medians, so its output is invariant to monotone
rescaling of the raw indicators.  Trend correlation is Pearson by default
(Spearman behind a flag) between the yearly predicted-DAC counts and yearly
feature means, population-weighted when weights are supplied.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .domain import DacRecord
from .errors import DataError
from .features import FeatureMatrix, apply_standardization
from .models import Predictions, TrainedModel, predict
from .scoring import attach_percentiles, percentile_rank

log = logging.getLogger("dacml.analysis")

OUTCOMES = ("TP", "FP", "FN", "TN")


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    accuracy: float
    outcome_by_tract: dict[str, str]  # tract -> TP/FP/FN/TN

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def tracts_with_outcome(self, outcome: str) -> list[str]:
        return sorted(t for t, o in self.outcome_by_tract.items() if o == outcome)


def evaluate(predictions: Mapping[str, bool], labels: Mapping[str, bool]) -> EvalReport:
    """Confusion counts and metrics with DAC as the positive class."""
    pred_set, label_set = set(predictions), set(labels)
    if pred_set != label_set:
        only_pred = sorted(pred_set - label_set)[:5]
        only_label = sorted(label_set - pred_set)[:5]
        raise DataError(
            "prediction and label tract sets differ; "
            f"only in predictions: {only_pred}; only in labels: {only_label}"
        )
    outcome_by_tract = {}
    tp = fp = fn = tn = 0
    for tract in labels:
        predicted, actual = bool(predictions[tract]), bool(labels[tract])
        if predicted and actual:
            tp += 1
            outcome_by_tract[tract] = "TP"
        elif predicted:
            fp += 1
            outcome_by_tract[tract] = "FP"
        elif actual:
            fn += 1
            outcome_by_tract[tract] = "FN"
        else:
            tn += 1
            outcome_by_tract[tract] = "TN"
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / len(labels) if labels else 0.0
    return EvalReport(tp, fp, fn, tn, precision, recall, f1, accuracy, outcome_by_tract)


@dataclass(frozen=True)
class IndicatorDelta:
    indicator: str
    group_median: Optional[float]
    reference_median: Optional[float]

    @property
    def delta(self) -> Optional[float]:
        if self.group_median is None or self.reference_median is None:
            return None
        return self.group_median - self.reference_median


@dataclass(frozen=True)
class ErrorDiagnostics:
    """Per error group: indicators ranked by |median delta vs true positives|."""

    group_tracts: dict[str, tuple[str, ...]]          # "FP"/"FN" -> tracts
    deltas: dict[str, tuple[IndicatorDelta, ...]]      # manifest order
    ranking: dict[str, tuple[str, ...]]                # by |delta| descending

    def top_indicators(self, group: str, k: int = 5) -> tuple[str, ...]:
        return self.ranking[group][:k]


def _group_deltas(records: Sequence[DacRecord], reference: Sequence[DacRecord]):
    names = reference[0].indicators.names
    deltas = []
    for j, name in enumerate(names):
        group_vals = [r.indicators.percentiles[j] for r in records
                      if r.indicators.percentiles[j] is not None]
        ref_vals = [r.indicators.percentiles[j] for r in reference
                    if r.indicators.percentiles[j] is not None]
        deltas.append(IndicatorDelta(
            name,
            float(np.median(group_vals)) if group_vals else None,
            float(np.median(ref_vals)) if ref_vals else None,
        ))
    order = sorted(
        range(len(names)),
        key=lambda j: (deltas[j].delta is None,
                       -abs(deltas[j].delta) if deltas[j].delta is not None else 0.0,
                       j))
    return tuple(deltas), tuple(names[j] for j in order)


def diagnose_errors(report: EvalReport, dac: Sequence[DacRecord]) -> ErrorDiagnostics:
    """Explain FP/FN groups by their indicator percentiles vs true positives."""
    if report.tp == 0:
        raise DataError("no true positives: error groups have no reference")
    by_tract = {r.tract: r for r in dac}
    missing = [t for t in report.outcome_by_tract if t not in by_tract]
    if missing:
        raise DataError(f"evaluated tract(s) missing from DAC records: {missing[:5]}")
    if any(r.indicators.percentiles is None for r in dac):
        by_tract = {r.tract: r for r in attach_percentiles(list(dac))}

    reference = [by_tract[t] for t in report.tracts_with_outcome("TP")]
    group_tracts = {}
    deltas = {}
    ranking = {}
    for group in ("FP", "FN"):
        tracts = report.tracts_with_outcome(group)
        group_tracts[group] = tuple(tracts)
        if not tracts:
            deltas[group] = ()
            ranking[group] = ()
            continue
        group_deltas, group_rank = _group_deltas([by_tract[t] for t in tracts], reference)
        deltas[group] = group_deltas
        ranking[group] = group_rank
    return ErrorDiagnostics(group_tracts, deltas, ranking)


def infer_years(model: TrainedModel, matrices: Mapping[int, FeatureMatrix],
                threshold: float = 0.5, *,
                standardized: bool = False) -> tuple[dict[int, Predictions], dict[int, int]]:
    """Apply a trained model to per-year matrices; returns predictions and counts.

    Raw matrices are standardized with the model's training statistics; pass
    standardized=True when the caller already did.
    """
    predictions: dict[int, Predictions] = {}
    counts: dict[int, int] = {}
    for year in sorted(matrices):
        matrix = matrices[year]
        if not standardized:
            if model.stats is None:
                raise DataError("model carries no standardization statistics")
            if matrix.feature_names != model.stats.feature_names:
                raise DataError(f"year {year}: feature names do not match the model")
            matrix = apply_standardization(matrix, model.stats)
        try:
            preds = predict(model, matrix, threshold=threshold)
        except DataError as exc:
            raise DataError(f"year {year}: {exc}") from None
        predictions[year] = preds
        counts[year] = preds.positive_count
    return predictions, counts


@dataclass(frozen=True)
class TrendReport:
    years: tuple[int, ...]
    counts: tuple[int, ...]
    feature_means: dict[str, tuple[float, ...]]          # per selected feature
    correlations: dict[str, Optional[float]]             # None when a series is constant
    method: str = "pearson"


def feature_year_means(matrices: Mapping[int, FeatureMatrix], features: Sequence[str],
                       weights: Mapping[int, Mapping[str, float]] | None = None,
                       ) -> dict[int, dict[str, float]]:
    """Yearly mean of each feature, weighted per tract when weights given."""
    out: dict[int, dict[str, float]] = {}
    for year, matrix in matrices.items():
        w = None
        if weights is not None:
            year_w = weights.get(year, {})
            w = np.array([float(year_w.get(t, 0.0)) for t in matrix.tract_ids])
            if w.sum() <= 0:
                raise DataError(f"year {year}: no positive weights")
        row: dict[str, float] = {}
        for feature in features:
            if feature not in matrix.feature_names:
                raise DataError(f"year {year}: feature {feature!r} not in matrix")
            col = matrix.values[:, matrix.feature_names.index(feature)]
            row[feature] = float(np.average(col, weights=w))
        out[year] = row
    return out


def _pearson(a: np.ndarray, b: np.ndarray) -> Optional[float]:
    da = a - a.mean()
    db = b - b.mean()
    ssa = float(da @ da)
    ssb = float(db @ db)
    if ssa == 0.0 or ssb == 0.0:
        return None
    return float((da @ db) / np.sqrt(ssa * ssb))


def _rank(values: np.ndarray) -> np.ndarray:
    return percentile_rank(values)


def correlate_trends(counts: Mapping[int, int],
                     feature_means: Mapping[int, Mapping[str, float]],
                     features: Sequence[str], *, method: str = "pearson") -> TrendReport:
    """Correlate the yearly DAC-count series with each feature's series."""
    years = sorted(counts)
    if len(years) < 3:
        raise DataError(f"trend correlation needs at least 3 years, got {len(years)}")
    if sorted(feature_means) != years:
        raise DataError("count years and feature-mean years differ")
    if method not in ("pearson", "spearman"):
        raise DataError(f"unknown correlation method {method!r}")
    count_series = np.array([float(counts[y]) for y in years])
    means: dict[str, tuple[float, ...]] = {}
    corr: dict[str, Optional[float]] = {}
    for feature in features:
        series = np.array([float(feature_means[y][feature]) for y in years])
        means[feature] = tuple(series)
        a, b = count_series, series
        if method == "spearman":
            if len(set(a)) > 1 and len(set(b)) > 1:
                a, b = _rank(a), _rank(b)
        r = _pearson(a, b)
        if r is None:
            log.info("constant series for %s (or constant counts); correlation absent", feature)
        corr[feature] = r
    return TrendReport(tuple(years), tuple(int(counts[y]) for y in years),
                       means, corr, method=method)
