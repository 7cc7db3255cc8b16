"""Regression tree kernel shared by the boosting and forest families.

Splits maximize squared-error reduction on the target column; the same
per-split reduction feeds the relative-influence importance later.  Leaf
values are Newton steps num/(den + l2) with optional L1 soft-thresholding
of the numerator, which covers plain mean leaves (den = row count), logistic
boosting leaves (den = hessian sum), and regularized boosting leaves.

Reproducibility rules: candidate features are scanned in ascending index
order, equal gains keep the earliest candidate, and a tied row at a
threshold routes to the left child (x <= threshold goes left).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Tree:
    """Flat array-of-nodes form; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    improvement: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            if self.feature[node] < 0:
                out[rows] = self.value[node]
                continue
            go_left = X[rows, self.feature[node]] <= self.threshold[node]
            stack.append((self.left[node], rows[go_left]))
            stack.append((self.right[node], rows[~go_left]))
        return out

    def accumulate_importance(self, into: np.ndarray) -> None:
        internal = self.feature >= 0
        np.add.at(into, self.feature[internal], self.improvement[internal])

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "improvement": self.improvement.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.array(d["feature"], dtype=np.int32),
            threshold=np.array(d["threshold"], dtype=float),
            left=np.array(d["left"], dtype=np.int32),
            right=np.array(d["right"], dtype=np.int32),
            value=np.array(d["value"], dtype=float),
            improvement=np.array(d["improvement"], dtype=float),
        )


def _soft_threshold(s: float, alpha: float) -> float:
    if alpha <= 0.0:
        return s
    if s > alpha:
        return s - alpha
    if s < -alpha:
        return s + alpha
    return 0.0


def _best_threshold_exhaustive(x, t, min_rows, total, n):
    """Best midpoint threshold for one feature, or None.

    Gain is the SSE reduction SL^2/nL + SR^2/nR - S^2/n; np.argmax keeps the
    first (lowest-threshold) maximum on ties.
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    if xs[0] == xs[-1]:
        return None
    ts = t[order]
    left_sum = np.cumsum(ts)[:-1]
    n_left = np.arange(1, n)
    valid = xs[:-1] != xs[1:]
    if min_rows > 1:
        valid &= (n_left >= min_rows) & ((n - n_left) >= min_rows)
    if not valid.any():
        return None
    gain = left_sum * left_sum / n_left + (total - left_sum) ** 2 / (n - n_left) - total * total / n
    gain[~valid] = -np.inf
    i = int(np.argmax(gain))
    return float(gain[i]), float((xs[i] + xs[i + 1]) / 2.0)


def _best_threshold_random(x, t, min_rows, total, n, rng):
    """Gain at a single uniform-random threshold (extremely randomized mode)."""
    lo = float(x.min())
    hi = float(x.max())
    if lo == hi:
        return None
    thr = float(rng.uniform(lo, hi))
    go_left = x <= thr
    n_left = int(go_left.sum())
    n_right = n - n_left
    if n_left < max(min_rows, 1) or n_right < max(min_rows, 1):
        return None
    left_sum = float(t[go_left].sum())
    gain = left_sum * left_sum / n_left + (total - left_sum) ** 2 / n_right - total * total / n
    return float(gain), thr


def grow_tree(
    X: np.ndarray,
    targets: np.ndarray,
    hessians: np.ndarray | None,
    rows: np.ndarray,
    feature_pool: np.ndarray,
    rng: np.random.Generator,
    *,
    max_depth: int,
    min_rows: float,
    min_split_improvement: float,
    col_sample_rate: float = 1.0,
    col_sample_rate_change_per_level: float = 1.0,
    mtries: int | None = None,
    random_thresholds: bool = False,
    leaf_l1: float = 0.0,
    leaf_l2: float = 0.0,
) -> Tree:
    """Grow one tree on X[rows] (rows may repeat, e.g. bootstrap samples).

    feature_pool holds the per-tree column sample; per-split candidates are
    drawn from it at a rate of col_sample_rate scaled by
    col_sample_rate_change_per_level per depth, or as a fixed count when
    mtries is given (mtries == -1 means sqrt of the pool size).
    """
    feat: list[int] = []
    thr: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    improvement: list[float] = []

    pool = np.sort(np.asarray(feature_pool, dtype=np.intp))

    def candidates(depth: int) -> np.ndarray:
        if mtries is not None:
            k = int(np.sqrt(len(pool))) if mtries == -1 else int(mtries)
            k = int(round(k * col_sample_rate_change_per_level**depth))
        else:
            rate = col_sample_rate * col_sample_rate_change_per_level**depth
            k = int(round(rate * len(pool)))
        k = max(1, min(k, len(pool)))
        if k == len(pool):
            return pool
        return np.sort(rng.choice(pool, size=k, replace=False))

    def leaf_value(total: float, denom: float) -> float:
        den = denom + leaf_l2
        if den <= 1e-12:
            return 0.0
        return _soft_threshold(total, leaf_l1) / den

    def grow(node_rows: np.ndarray, depth: int) -> int:
        t = targets[node_rows]
        n = len(node_rows)
        total = float(t.sum())
        denom = float(n) if hessians is None else float(hessians[node_rows].sum())

        idx = len(feat)
        feat.append(-1)
        thr.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(leaf_value(total, denom))
        improvement.append(0.0)

        if depth >= max_depth or n < 2 or n < 2 * min_rows:
            return idx
        best = None
        for j in candidates(depth):
            x = X[node_rows, j]
            if random_thresholds:
                found = _best_threshold_random(x, t, min_rows, total, n, rng)
            else:
                found = _best_threshold_exhaustive(x, t, min_rows, total, n)
            if found is None:
                continue
            gain, cut = found
            if best is None or gain > best[0]:
                best = (gain, int(j), cut)
        if best is None or best[0] <= 0.0 or best[0] < min_split_improvement:
            return idx
        gain, j, cut = best
        go_left = X[node_rows, j] <= cut
        feat[idx] = j
        thr[idx] = cut
        improvement[idx] = gain
        left[idx] = grow(node_rows[go_left], depth + 1)
        right[idx] = grow(node_rows[~go_left], depth + 1)
        return idx

    grow(np.asarray(rows, dtype=np.intp), 0)
    return Tree(
        feature=np.array(feat, dtype=np.int32),
        threshold=np.array(thr, dtype=float),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=float),
        improvement=np.array(improvement, dtype=float),
    )
