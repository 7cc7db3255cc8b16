"""Feed-forward net: rectifier hidden layers, logistic output, ADADELTA.

Training uses inverted dropout (masks scaled by 1/(1-p)) so inference runs
the plain forward pass.  Every random draw (init, shuffling, masks) comes
from one generator seeded by the spec seed, so runs are bit-reproducible.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..errors import DataError
from ..util import derive_seed
from .base import CLASSES, check_predict_data, check_train_data, log_loss, proba_matrix, sigmoid

# ADADELTA degenerates to all-zero steps when epsilon is exactly 0 (the RMS
# of past updates starts at 0), so a reported 0 is floored at this value.
_EPSILON_FLOOR = 1e-8


class MlpClassifier(BaseEstimator, ClassifierMixin):
    def __init__(
        self,
        hidden: Sequence[int] = (100,),
        hidden_dropout_ratios: Sequence[float] | float | None = None,
        input_dropout_ratio: float = 0.0,
        rho: float = 0.99,
        epsilon: float = 1e-8,
        epochs: int = 200,
        batch_size: int = 32,
        seed: int = 0,
    ):
        self.hidden = hidden
        self.hidden_dropout_ratios = hidden_dropout_ratios
        self.input_dropout_ratio = input_dropout_ratio
        self.rho = rho
        self.epsilon = epsilon
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    # -- configuration -------------------------------------------------------

    def _layer_sizes(self, n_in: int) -> list[int]:
        hidden = [int(h) for h in self.hidden]
        if not hidden or any(h < 1 for h in hidden):
            raise DataError(f"hidden layer sizes must all be >= 1, got {list(self.hidden)}")
        return [n_in] + hidden + [1]

    def _dropout_ratios(self) -> list[float]:
        n_hidden = len(list(self.hidden))
        r = self.hidden_dropout_ratios
        if r is None:
            ratios = [0.0] * n_hidden
        elif np.isscalar(r):
            ratios = [float(r)] * n_hidden
        else:
            ratios = [float(v) for v in r]
            if len(ratios) == 1:
                ratios = ratios * n_hidden
            if len(ratios) != n_hidden:
                raise DataError(
                    f"hidden_dropout_ratios has {len(ratios)} entries for {n_hidden} hidden layers"
                )
        if any(not (0.0 <= v < 1.0) for v in ratios) or not (0.0 <= self.input_dropout_ratio < 1.0):
            raise DataError("dropout ratios must be in [0, 1)")
        return ratios

    # -- core passes ----------------------------------------------------------

    @staticmethod
    def _mask(shape, ratio: float, rng: np.random.Generator | None):
        if rng is None or ratio <= 0.0:
            return None
        keep = 1.0 - ratio
        return (rng.random(shape) < keep) / keep

    def _forward(self, X: np.ndarray, rng: np.random.Generator | None):
        """Per-layer activations; rng enables dropout (training mode).

        Returns (acts, zs, masks): acts[l] is the input to layer l's weights
        (post-dropout), masks[l] the multiplier applied to hidden layer l's
        output (None when dropout is off).
        """
        ratios = self._dropout_ratios()
        a = X
        in_mask = self._mask(a.shape, self.input_dropout_ratio, rng)
        if in_mask is not None:
            a = a * in_mask
        acts = [a]
        zs = []
        masks: list[np.ndarray | None] = []
        last = len(self.coefs_) - 1
        for l, (W, b) in enumerate(zip(self.coefs_, self.intercepts_)):
            z = acts[-1] @ W + b
            zs.append(z)
            if l == last:
                acts.append(sigmoid(z))
            else:
                a = np.maximum(z, 0.0)
                mask = self._mask(a.shape, ratios[l], rng)
                masks.append(mask)
                if mask is not None:
                    a = a * mask
                acts.append(a)
        return acts, zs, masks

    def _backward(self, y: np.ndarray, acts, zs, masks):
        """Mean-BCE gradients for every weight matrix and bias vector."""
        batch = len(y)
        grads_W = [None] * len(self.coefs_)
        grads_b = [None] * len(self.intercepts_)
        delta = (acts[-1] - y[:, None]) / batch
        for l in range(len(self.coefs_) - 1, -1, -1):
            grads_W[l] = acts[l].T @ delta
            grads_b[l] = delta.sum(axis=0)
            if l > 0:
                delta = delta @ self.coefs_[l].T
                if masks[l - 1] is not None:
                    delta = delta * masks[l - 1]
                delta = delta * (zs[l - 1] > 0.0)
        return grads_W, grads_b

    def loss_and_gradients(self, X, y):
        """Analytic loss/gradients with dropout off (numerical-check hook)."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        acts, zs, masks = self._forward(X, rng=None)
        loss = log_loss(y, acts[-1][:, 0])
        grads_W, grads_b = self._backward(y, acts, zs, masks)
        return loss, grads_W, grads_b

    # -- training --------------------------------------------------------------

    def _init_weights(self, sizes: list[int], rng: np.random.Generator) -> None:
        self.coefs_ = []
        self.intercepts_ = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            scale = np.sqrt(2.0 / fan_in)
            self.coefs_.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.intercepts_.append(np.zeros(fan_out))

    def fit(self, X, y):
        X, y = check_train_data(X, y)
        n, p = X.shape
        if self.epochs < 0 or self.batch_size < 1:
            raise DataError("epochs must be >= 0 and batch_size >= 1")
        if not (0.0 <= self.rho < 1.0):
            raise DataError(f"rho must be in [0, 1), got {self.rho}")
        rng = np.random.default_rng(derive_seed(self.seed, 0x4E47))
        self._init_weights(self._layer_sizes(p), rng)

        eps = max(float(self.epsilon), _EPSILON_FLOOR)
        params = self.coefs_ + self.intercepts_
        acc_g = [np.zeros_like(t) for t in params]
        acc_dx = [np.zeros_like(t) for t in params]

        loss_curve = []
        for _ in range(int(self.epochs)):
            order = rng.permutation(n)
            epoch_losses = []
            for start in range(0, n, int(self.batch_size)):
                batch = order[start:start + int(self.batch_size)]
                acts, zs, masks = self._forward(X[batch], rng)
                epoch_losses.append(log_loss(y[batch], acts[-1][:, 0]))
                grads_W, grads_b = self._backward(y[batch], acts, zs, masks)
                for k, (theta, g) in enumerate(zip(params, grads_W + grads_b)):
                    acc_g[k] = self.rho * acc_g[k] + (1.0 - self.rho) * g * g
                    step = -np.sqrt(acc_dx[k] + eps) / np.sqrt(acc_g[k] + eps) * g
                    acc_dx[k] = self.rho * acc_dx[k] + (1.0 - self.rho) * step * step
                    theta += step
            loss_curve.append(float(np.mean(epoch_losses)))

        self.loss_curve_ = tuple(loss_curve)
        self.n_features_in_ = p
        self.classes_ = CLASSES
        return self

    # -- inference ---------------------------------------------------------------

    def predict_proba(self, X) -> np.ndarray:
        X = check_predict_data(X, self.n_features_in_)
        acts, _, _ = self._forward(X, rng=None)
        return proba_matrix(acts[-1][:, 0])

    def predict(self, X) -> np.ndarray:
        return self.predict_proba(X)[:, 1] >= 0.5
