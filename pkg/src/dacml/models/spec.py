"""ModelSpec: a model family plus hyperparameters, validated per family.

FAMILIES is the canonical family order used for budget allocation; table
reports use TABLE_FAMILY_ORDER / FAMILY_LABELS for display.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from ..errors import DataError
from .boosting import GradientBoostedTreesClassifier
from .forest import BaggedTreesClassifier
from .linear import ElasticNetLogisticRegression
from .neural import MlpClassifier

FAMILIES = ("GBM", "XGB", "DRF", "XRT", "GLM", "MLP")
TREE_FAMILIES = ("GBM", "XGB", "DRF", "XRT")

FAMILY_LABELS = {
    "GBM": "GBM",
    "XGB": "XGBoost",
    "DRF": "DRF",
    "XRT": "XRT",
    "GLM": "GLM",
    "MLP": "DeepLearning",
}
TABLE_FAMILY_ORDER = ("DRF", "MLP", "GBM", "GLM", "XGB", "XRT")

# Sampling rates live in (0, 1]; dropout ratios allow 0 and are validated
# as [0, 1) by the net itself.
_RATE_KEYS = {
    "learn_rate", "sample_rate", "col_sample_rate", "col_sample_rate_per_tree",
}

_ALLOWED_KEYS: dict[str, frozenset[str]] = {
    "GBM": frozenset({
        "ntrees", "max_depth", "learn_rate", "min_rows", "min_split_improvement",
        "sample_rate", "col_sample_rate", "col_sample_rate_per_tree",
        "col_sample_rate_change_per_level", "balance_classes",
    }),
    "XGB": frozenset({
        "booster", "ntrees", "max_depth", "learn_rate", "min_rows",
        "min_split_improvement", "sample_rate", "col_sample_rate",
        "col_sample_rate_per_tree", "reg_alpha", "reg_lambda", "balance_classes",
    }),
    "DRF": frozenset({
        "ntrees", "max_depth", "min_rows", "min_split_improvement",
        "col_sample_rate_per_tree", "col_sample_rate_change_per_level",
        "mtries", "bootstrap", "balance_classes",
    }),
    "XRT": frozenset({
        "ntrees", "max_depth", "min_rows", "min_split_improvement",
        "col_sample_rate_per_tree", "col_sample_rate_change_per_level",
        "mtries", "bootstrap", "balance_classes",
    }),
    "GLM": frozenset({"alpha", "lambda", "lambda_", "max_iter", "tol", "balance_classes"}),
    "MLP": frozenset({
        "hidden", "hidden_dropout_ratios", "input_dropout_ratio", "rho",
        "epsilon", "epochs", "batch_size", "balance_classes",
    }),
}

# XGBoost defaults follow that library's conventions; the other families keep
# the kernel defaults.
_FAMILY_DEFAULTS: dict[str, dict[str, Any]] = {
    "GBM": {},
    "XGB": {"learn_rate": 0.3, "min_rows": 3.0, "min_split_improvement": 0.0,
            "reg_lambda": 1.0},
    "DRF": {"min_rows": 1.0},
    "XRT": {"min_rows": 1.0},
    "GLM": {},
    "MLP": {},
}


# Keys whose values are genuinely list-shaped (one entry per layer).
_LIST_KEYS = {"hidden", "hidden_dropout_ratios"}


def _unwrap(value):
    """Grid reports render some scalars as one-element lists (e.g. alpha [0.0])."""
    if isinstance(value, (list, tuple)) and len(value) == 1 and not isinstance(value[0], (list, tuple)):
        return value[0]
    return value


def _normalize(key: str, value):
    return value if key in _LIST_KEYS else _unwrap(value)


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise DataError(f"unknown model family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        allowed = _ALLOWED_KEYS[self.family]
        unknown = sorted(set(self.params) - allowed)
        if unknown:
            raise DataError(f"{self.family} does not accept hyperparameter(s): {', '.join(unknown)}")
        for key, raw in self.params.items():
            value = _normalize(key, raw)
            if key in _RATE_KEYS and value is not None and not (0.0 < float(value) <= 1.0):
                raise DataError(f"{self.family}.{key} must be in (0, 1], got {value}")
            if key in ("max_depth",) and int(value) < 1:
                raise DataError(f"{self.family}.{key} must be >= 1, got {value}")
            if key in ("ntrees", "epochs") and int(value) < 0:
                raise DataError(f"{self.family}.{key} must be >= 0, got {value}")
            if key == "min_rows" and float(value) < 1:
                raise DataError(f"{self.family}.min_rows must be >= 1, got {value}")
            if key == "booster" and value != "gbtree":
                raise DataError(f"only the gbtree booster is supported, got {value!r}")

    def estimator_params(self) -> dict[str, Any]:
        params = {k: _normalize(k, v) for k, v in self.params.items()}
        params.pop("balance_classes", None)
        params.pop("booster", None)
        if "lambda" in params:
            params["lambda_"] = params.pop("lambda")
        merged = dict(_FAMILY_DEFAULTS[self.family])
        merged.update(params)
        return merged

    @property
    def balance_classes(self) -> bool:
        return bool(_unwrap(self.params.get("balance_classes", False)))

    def build_estimator(self):
        self.validate()
        kwargs = self.estimator_params()
        kwargs["seed"] = self.seed
        if self.family in ("GBM", "XGB"):
            return GradientBoostedTreesClassifier(**kwargs)
        if self.family == "DRF":
            return BaggedTreesClassifier(random_splits=False, **kwargs)
        if self.family == "XRT":
            return BaggedTreesClassifier(random_splits=True, **kwargs)
        if self.family == "GLM":
            return ElasticNetLogisticRegression(**kwargs)
        return MlpClassifier(**kwargs)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelSpec":
        return cls(family=d["family"], params=dict(d.get("params", {})), seed=int(d.get("seed", 0)))

    def describe(self) -> str:
        inner = ",".join(f"{k}={_unwrap(v)}" for k, v in sorted(self.params.items()))
        return f"{self.family}({inner})"
