"""Gradient-boosted regression trees on logistic loss.

Each stage fits a tree to the negative gradient (label minus current
probability) with variance-reduction splits; leaf values are Newton steps
over the leaf's hessian mass, shrunk by the learning rate.  reg_alpha /
reg_lambda apply L1/L2 to leaf values, which turns the same kernel into the
regularized (XGBoost-style) family.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..errors import DataError
from ..util import derive_seed
from .base import CLASSES, check_predict_data, check_train_data, log_loss, proba_matrix, sigmoid
from .tree import Tree, grow_tree


class GradientBoostedTreesClassifier(BaseEstimator, ClassifierMixin):
    def __init__(
        self,
        ntrees: int = 50,
        max_depth: int = 5,
        learn_rate: float = 0.1,
        min_rows: float = 10.0,
        min_split_improvement: float = 1e-5,
        sample_rate: float = 1.0,
        col_sample_rate: float = 1.0,
        col_sample_rate_per_tree: float = 1.0,
        col_sample_rate_change_per_level: float = 1.0,
        reg_alpha: float = 0.0,
        reg_lambda: float = 0.0,
        seed: int = 0,
    ):
        self.ntrees = ntrees
        self.max_depth = max_depth
        self.learn_rate = learn_rate
        self.min_rows = min_rows
        self.min_split_improvement = min_split_improvement
        self.sample_rate = sample_rate
        self.col_sample_rate = col_sample_rate
        self.col_sample_rate_per_tree = col_sample_rate_per_tree
        self.col_sample_rate_change_per_level = col_sample_rate_change_per_level
        self.reg_alpha = reg_alpha
        self.reg_lambda = reg_lambda
        self.seed = seed

    def fit(self, X, y):
        X, y = check_train_data(X, y)
        n, p = X.shape
        if self.min_rows > n:
            raise DataError(f"min_rows={self.min_rows} exceeds training size {n}")
        if self.ntrees < 0 or self.max_depth < 1:
            raise DataError("ntrees must be >= 0 and max_depth >= 1")

        rng = np.random.default_rng(derive_seed(self.seed, 0xB005))
        prior = float(y.mean())
        self.f0_ = float(np.log(prior / (1.0 - prior)))
        raw = np.full(n, self.f0_)

        self.trees_: list[Tree] = []
        loss_curve = [log_loss(y, sigmoid(raw))]
        n_rows_tree = max(1, int(round(self.sample_rate * n)))
        n_cols_tree = max(1, int(round(self.col_sample_rate_per_tree * p)))
        for _ in range(int(self.ntrees)):
            prob = sigmoid(raw)
            residual = y - prob
            hessian = prob * (1.0 - prob)
            rows = (np.sort(rng.choice(n, size=n_rows_tree, replace=False))
                    if n_rows_tree < n else np.arange(n))
            pool = (np.sort(rng.choice(p, size=n_cols_tree, replace=False))
                    if n_cols_tree < p else np.arange(p))
            tree = grow_tree(
                X, residual, hessian, rows, pool, rng,
                max_depth=self.max_depth,
                min_rows=self.min_rows,
                min_split_improvement=self.min_split_improvement,
                col_sample_rate=self.col_sample_rate,
                col_sample_rate_change_per_level=self.col_sample_rate_change_per_level,
                leaf_l1=self.reg_alpha,
                leaf_l2=self.reg_lambda,
            )
            tree.value *= self.learn_rate
            self.trees_.append(tree)
            raw = raw + tree.predict(X)
            loss_curve.append(log_loss(y, sigmoid(raw)))

        self.loss_curve_ = tuple(loss_curve)
        self.n_features_in_ = p
        self.classes_ = CLASSES
        importances = np.zeros(p)
        for tree in self.trees_:
            tree.accumulate_importance(importances)
        self.feature_importances_ = importances
        return self

    def decision_function(self, X) -> np.ndarray:
        X = check_predict_data(X, self.n_features_in_)
        raw = np.full(X.shape[0], self.f0_)
        for tree in self.trees_:
            raw += tree.predict(X)
        return raw

    def predict_proba(self, X) -> np.ndarray:
        return proba_matrix(sigmoid(self.decision_function(X)))

    def predict(self, X) -> np.ndarray:
        return self.predict_proba(X)[:, 1] >= 0.5
