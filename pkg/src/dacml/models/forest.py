"""Bagged tree ensembles: random forest and its extremely randomized twin.

Trees are grown to (near) full depth on bootstrap resamples with a random
feature subset per split; predictions average the per-tree leaf
probabilities.  random_splits=True draws one uniform threshold per candidate
feature instead of searching all cut points.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..errors import DataError
from ..util import derive_seed
from .base import CLASSES, check_predict_data, check_train_data, proba_matrix
from .tree import Tree, grow_tree


class BaggedTreesClassifier(BaseEstimator, ClassifierMixin):
    def __init__(
        self,
        ntrees: int = 50,
        max_depth: int = 20,
        min_rows: float = 1.0,
        min_split_improvement: float = 1e-5,
        col_sample_rate_per_tree: float = 1.0,
        col_sample_rate_change_per_level: float = 1.0,
        mtries: int = -1,
        bootstrap: bool = True,
        random_splits: bool = False,
        seed: int = 0,
    ):
        self.ntrees = ntrees
        self.max_depth = max_depth
        self.min_rows = min_rows
        self.min_split_improvement = min_split_improvement
        self.col_sample_rate_per_tree = col_sample_rate_per_tree
        self.col_sample_rate_change_per_level = col_sample_rate_change_per_level
        self.mtries = mtries
        self.bootstrap = bootstrap
        self.random_splits = random_splits
        self.seed = seed

    def fit(self, X, y):
        X, y = check_train_data(X, y)
        n, p = X.shape
        if self.min_rows > n:
            raise DataError(f"min_rows={self.min_rows} exceeds training size {n}")
        if self.ntrees < 1 or self.max_depth < 1:
            raise DataError("ntrees and max_depth must be >= 1")
        if not (self.mtries == -1 or self.mtries >= 1):
            raise DataError(f"mtries must be -1 (sqrt) or >= 1, got {self.mtries}")

        rng = np.random.default_rng(derive_seed(self.seed, 0xF02E57))
        n_cols_tree = max(1, int(round(self.col_sample_rate_per_tree * p)))
        self.trees_: list[Tree] = []
        for _ in range(int(self.ntrees)):
            rows = (np.sort(rng.integers(0, n, size=n)) if self.bootstrap
                    else np.arange(n))
            pool = (np.sort(rng.choice(p, size=n_cols_tree, replace=False))
                    if n_cols_tree < p else np.arange(p))
            self.trees_.append(grow_tree(
                X, y, None, rows, pool, rng,
                max_depth=self.max_depth,
                min_rows=self.min_rows,
                min_split_improvement=self.min_split_improvement,
                col_sample_rate_change_per_level=self.col_sample_rate_change_per_level,
                mtries=self.mtries,
                random_thresholds=self.random_splits,
            ))

        self.n_features_in_ = p
        self.classes_ = CLASSES
        importances = np.zeros(p)
        for tree in self.trees_:
            tree.accumulate_importance(importances)
        self.feature_importances_ = importances
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = check_predict_data(X, self.n_features_in_)
        acc = np.zeros(X.shape[0])
        for tree in self.trees_:
            acc += tree.predict(X)
        return proba_matrix(np.clip(acc / len(self.trees_), 0.0, 1.0))

    def predict(self, X) -> np.ndarray:
        return self.predict_proba(X)[:, 1] >= 0.5
