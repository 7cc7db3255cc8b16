"""Model families (sklearn-style estimators) and the TrainedModel surface.

train/predict/feature_importance operate on FeatureMatrix objects; the
estimator classes underneath follow the fit/predict_proba/get_params
convention and compose with the usual sklearn tooling.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import DataError
from ..features import FeatureMatrix, StandardizationStats
from ..util import derive_seed
from .boosting import GradientBoostedTreesClassifier
from .forest import BaggedTreesClassifier
from .importance import (
    ImportanceReport,
    coefficient_importance,
    gedeon_importance,
    tree_importance,
)
from .linear import ElasticNetLogisticRegression
from .neural import MlpClassifier
from .spec import (
    FAMILIES,
    FAMILY_LABELS,
    TABLE_FAMILY_ORDER,
    TREE_FAMILIES,
    ModelSpec,
)

__all__ = [
    "FAMILIES",
    "FAMILY_LABELS",
    "TABLE_FAMILY_ORDER",
    "TREE_FAMILIES",
    "ModelSpec",
    "TrainedModel",
    "Predictions",
    "GradientBoostedTreesClassifier",
    "BaggedTreesClassifier",
    "ElasticNetLogisticRegression",
    "MlpClassifier",
    "ImportanceReport",
    "train",
    "predict",
    "feature_importance",
    "oversample_minority",
]


@dataclass(frozen=True)
class TrainedModel:
    spec: ModelSpec
    feature_names: tuple[str, ...]
    estimator: object
    stats: Optional[StandardizationStats] = None
    loss_curve: tuple[float, ...] = ()
    train_seconds: float = 0.0
    warning: Optional[str] = None

    def with_stats(self, stats: StandardizationStats) -> "TrainedModel":
        return replace(self, stats=stats)


@dataclass(frozen=True)
class Predictions:
    tract_ids: tuple[str, ...]
    prob: np.ndarray
    label: np.ndarray

    @property
    def positive_count(self) -> int:
        return int(self.label.sum())

    def as_mapping(self) -> dict[str, bool]:
        return {t: bool(v) for t, v in zip(self.tract_ids, self.label)}


def oversample_minority(X: np.ndarray, y: np.ndarray, seed: int):
    """Duplicate minority rows (with replacement) until classes balance."""
    y = np.asarray(y, dtype=bool)
    pos = np.flatnonzero(y)
    neg = np.flatnonzero(~y)
    if len(pos) == 0 or len(neg) == 0 or len(pos) == len(neg):
        return X, y
    minority, majority = (pos, neg) if len(pos) < len(neg) else (neg, pos)
    rng = np.random.default_rng(derive_seed(seed, 0xBA1A))
    extra = rng.choice(minority, size=len(majority) - len(minority), replace=True)
    keep = np.concatenate([np.arange(len(y)), extra])
    return X[keep], y[keep]


def train(spec: ModelSpec, matrix: FeatureMatrix,
          stats: StandardizationStats | None = None) -> TrainedModel:
    """Fit one model family on a (standardized) labeled matrix."""
    spec.validate()
    if matrix.labels is None:
        raise DataError("training requires a labeled matrix")
    X, y = matrix.values, matrix.labels
    if spec.balance_classes:
        X, y = oversample_minority(X, y, spec.seed)
    estimator = spec.build_estimator()
    started = time.perf_counter()
    import warnings as _warnings

    with _warnings.catch_warnings(record=True) as caught:
        _warnings.simplefilter("always")
        estimator.fit(X, y)
    warning = "; ".join(str(w.message) for w in caught) or None
    return TrainedModel(
        spec=spec,
        feature_names=matrix.feature_names,
        estimator=estimator,
        stats=stats,
        loss_curve=tuple(getattr(estimator, "loss_curve_", ())),
        train_seconds=time.perf_counter() - started,
        warning=warning,
    )


def predict(model: TrainedModel, matrix: FeatureMatrix,
            threshold: float = 0.5) -> Predictions:
    """Probabilities and thresholded labels for a matrix matching the model."""
    if matrix.feature_names != model.feature_names:
        missing = sorted(set(model.feature_names) - set(matrix.feature_names))
        extra = sorted(set(matrix.feature_names) - set(model.feature_names))
        raise DataError(
            "feature names do not match the model"
            + (f"; missing: {', '.join(missing)}" if missing else "")
            + (f"; unexpected: {', '.join(extra)}" if extra else "")
            + ("; same names, different order" if not missing and not extra else "")
        )
    prob = model.estimator.predict_proba(matrix.values)[:, 1]
    return Predictions(matrix.tract_ids, prob, prob >= threshold)


def feature_importance(model: TrainedModel) -> ImportanceReport:
    family = model.spec.family
    if family in TREE_FAMILIES:
        return tree_importance(model.estimator, model.feature_names, family)
    if family == "GLM":
        return coefficient_importance(model.estimator, model.feature_names)
    if family == "MLP":
        return gedeon_importance(model.estimator, model.feature_names)
    raise DataError(f"no importance method for family {family!r}")
