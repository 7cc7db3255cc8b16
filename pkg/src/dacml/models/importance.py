"""Per-family feature importance.

Tree families: relative influence, i.e. the summed squared-error reduction
of every split on a feature across all trees.  GLM: coefficient magnitudes
on the standardized inputs.  Neural nets: the Gedeon aggregation of
magnitude-normalized weight shares through the first two weight matrices
(one factor for single-hidden-layer nets):

    importance(i) = sum_j P(i->j) * sum_k P(j->k)

where P(i->j) = |W1[i,j]| / sum_i' |W1[i',j]| and P(j->k) likewise on W2.
All reports are max-normalized so the largest relative importance is 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

METHOD_BY_FAMILY = {
    "GBM": "relative_influence",
    "XGB": "relative_influence",
    "DRF": "relative_influence",
    "XRT": "relative_influence",
    "GLM": "coefficient_magnitude",
    "MLP": "gedeon",
}


@dataclass(frozen=True)
class ImportanceReport:
    method: str
    feature_names: tuple[str, ...]
    raw: tuple[float, ...]
    relative: tuple[float, ...]

    def ranked(self) -> list[tuple[str, float, float]]:
        order = sorted(range(len(self.feature_names)),
                       key=lambda i: (-self.relative[i], i))
        return [(self.feature_names[i], self.raw[i], self.relative[i]) for i in order]

    def rank_of(self, feature: str) -> int:
        """1-based position of a feature in the ranked report."""
        for pos, (name, _, _) in enumerate(self.ranked(), 1):
            if name == feature:
                return pos
        raise KeyError(feature)

    def relative_of(self, feature: str) -> float:
        return self.relative[self.feature_names.index(feature)]


def _report(method: str, names: Sequence[str], raw: np.ndarray) -> ImportanceReport:
    raw = np.asarray(raw, dtype=float)
    if raw.min() < 0:
        raise ValueError("raw importances must be non-negative")
    top = raw.max()
    rel = raw / top if top > 0 else np.zeros_like(raw)
    return ImportanceReport(method, tuple(names), tuple(float(v) for v in raw),
                            tuple(float(v) for v in rel))


def tree_importance(estimator, names: Sequence[str], family: str) -> ImportanceReport:
    return _report(METHOD_BY_FAMILY[family], names, estimator.feature_importances_)


def coefficient_importance(estimator, names: Sequence[str]) -> ImportanceReport:
    return _report("coefficient_magnitude", names, np.abs(estimator.coef_))


def _shares(W: np.ndarray) -> np.ndarray:
    """|W| normalized so each column (receiving unit) sums to 1; dead units 0."""
    mag = np.abs(W)
    col = mag.sum(axis=0)
    safe = np.where(col == 0.0, 1.0, col)
    return mag / safe


def gedeon_importance(estimator, names: Sequence[str]) -> ImportanceReport:
    first = _shares(estimator.coefs_[0])
    if len(estimator.coefs_) >= 3:  # at least two hidden layers
        second = _shares(estimator.coefs_[1])
        raw = (first @ second).sum(axis=1)
    else:
        raw = first.sum(axis=1)
    return _report("gedeon", names, raw)
