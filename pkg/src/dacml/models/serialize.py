"""Model files: versioned, self-describing JSON text with exact round-trip.

Floats serialize via repr (the shortest representation that parses back to
the same IEEE double), so save -> load -> save is byte-identical and loaded
models predict bit-identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..features import StandardizationStats
from ..util import atomic_write_text
from .boosting import GradientBoostedTreesClassifier
from .forest import BaggedTreesClassifier
from .linear import ElasticNetLogisticRegression
from .neural import MlpClassifier
from .spec import ModelSpec
from .tree import Tree

FORMAT = "dacml-model"
VERSION = 1


def _estimator_state(est) -> dict:
    if isinstance(est, GradientBoostedTreesClassifier):
        return {"f0": est.f0_, "trees": [t.to_dict() for t in est.trees_]}
    if isinstance(est, BaggedTreesClassifier):
        return {"trees": [t.to_dict() for t in est.trees_]}
    if isinstance(est, ElasticNetLogisticRegression):
        return {
            "coef": est.coef_.tolist(),
            "intercept": est.intercept_,
            "converged": bool(est.converged_),
            "n_iter": int(est.n_iter_),
        }
    if isinstance(est, MlpClassifier):
        return {
            "weights": [W.tolist() for W in est.coefs_],
            "biases": [b.tolist() for b in est.intercepts_],
        }
    raise TypeError(f"cannot serialize estimator {type(est).__name__}")


def _restore_estimator(est, state: dict, n_features: int):
    from .base import CLASSES

    est.n_features_in_ = n_features
    est.classes_ = CLASSES
    if isinstance(est, GradientBoostedTreesClassifier):
        est.f0_ = float(state["f0"])
        est.trees_ = [Tree.from_dict(t) for t in state["trees"]]
        imp = np.zeros(n_features)
        for t in est.trees_:
            t.accumulate_importance(imp)
        est.feature_importances_ = imp
    elif isinstance(est, BaggedTreesClassifier):
        est.trees_ = [Tree.from_dict(t) for t in state["trees"]]
        imp = np.zeros(n_features)
        for t in est.trees_:
            t.accumulate_importance(imp)
        est.feature_importances_ = imp
    elif isinstance(est, ElasticNetLogisticRegression):
        est.coef_ = np.array(state["coef"], dtype=float)
        est.intercept_ = float(state["intercept"])
        est.converged_ = bool(state["converged"])
        est.n_iter_ = int(state["n_iter"])
    elif isinstance(est, MlpClassifier):
        est.coefs_ = [np.array(W, dtype=float) for W in state["weights"]]
        est.intercepts_ = [np.array(b, dtype=float) for b in state["biases"]]
    return est


def model_document(model) -> dict:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "spec": model.spec.to_dict(),
        "feature_names": list(model.feature_names),
        "stats": None if model.stats is None else model.stats.to_dict(),
        "state": _estimator_state(model.estimator),
        "loss_curve": [float(v) for v in (model.loss_curve or ())],
        "warning": model.warning,
    }
    return doc


def save_model(model, path: str | Path) -> None:
    text = json.dumps(model_document(model), sort_keys=True, indent=1)
    atomic_write_text(path, text + "\n")


def load_model(path: str | Path):
    from . import TrainedModel

    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise DataError(f"{path} is not a {FORMAT} file")
    if doc.get("version") != VERSION:
        raise DataError(f"{path} has unsupported version {doc.get('version')}")
    spec = ModelSpec.from_dict(doc["spec"])
    names = tuple(doc["feature_names"])
    est = spec.build_estimator()
    _restore_estimator(est, doc["state"], len(names))
    stats = None if doc.get("stats") is None else StandardizationStats.from_dict(doc["stats"])
    return TrainedModel(
        spec=spec,
        feature_names=names,
        estimator=est,
        stats=stats,
        loss_curve=tuple(doc.get("loss_curve", ())),
        train_seconds=0.0,
        warning=doc.get("warning"),
    )
