"""Independent reference implementations used to pin expected test values.

Everything here deliberately avoids the package's own code paths: counting
instead of sorting, scipy/sklearn instead of the in-house solvers, and a
separate tree walker for ensemble predictions.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize, stats
from sklearn.metrics import f1_score


def percentile_oracle(values) -> np.ndarray:
    """O(n^2) counting percentiles: strictly-below + half the other ties."""
    arr = np.array([np.nan if v is None else float(v) for v in values], dtype=float)
    present = ~np.isnan(arr)
    n = present.sum()
    out = np.full(arr.shape, np.nan)
    vals = arr[present]
    res = np.empty(len(vals))
    for i, v in enumerate(vals):
        below = int((vals < v).sum())
        ties = int((vals == v).sum())
        res[i] = 100.0 * (below + 0.5 * (ties - 1)) / n
    out[present] = res
    return out


def stump_oracle(X, y, prior):
    """Exhaustive-threshold logistic-gradient stump.

    Residuals are y - prior, hessians prior*(1-prior); every midpoint of
    consecutive distinct values of every feature is scored by SSE reduction.
    First feature / lowest threshold wins ties, rows with x <= thr go left.
    Returns (feature, threshold, left_value, right_value) or None.
    """
    X = np.asarray(X, dtype=float)
    r = np.asarray(y, dtype=float) - prior
    h = prior * (1.0 - prior)
    n, p = X.shape
    total = r.sum()
    base = total * total / n
    best = None
    for j in range(p):
        xs = np.unique(X[:, j])
        for lo, hi in zip(xs, xs[1:]):
            thr = (lo + hi) / 2.0
            left = X[:, j] <= thr
            nl = int(left.sum())
            sl = r[left].sum()
            gain = sl * sl / nl + (total - sl) ** 2 / (n - nl) - base
            if best is None or gain > best[0] + 1e-15:
                left_value = sl / (h * nl)
                right_value = (total - sl) / (h * (n - nl))
                best = (gain, j, thr, left_value, right_value)
    if best is None:
        return None
    return best[1], best[2], best[3], best[4]


def glm_objective(X, y, alpha, lam, coef, intercept):
    eta = intercept + X @ coef
    # log(1 + e^eta) - y*eta, computed stably
    ll = np.logaddexp(0.0, eta) - y * eta
    return float(np.mean(ll) + lam * (alpha * np.abs(coef).sum()
                                      + 0.5 * (1 - alpha) * coef @ coef))


def glm_reference(X, y, alpha, lam):
    """Second-optimizer minimizer of the same elastic-net logistic objective."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    p = X.shape[1]

    def f(theta):
        return glm_objective(X, y, alpha, lam, theta[1:], theta[0])

    best = None
    for start in (np.zeros(p + 1), np.full(p + 1, 0.1), np.full(p + 1, -0.1)):
        res = optimize.minimize(f, start, method="BFGS",
                                options={"gtol": 1e-12, "maxiter": 5000})
        if best is None or res.fun < best.fun:
            best = res
    return best.x[0], best.x[1:]


def finite_difference_gradients(mlp, X, y, h=1e-6):
    """Central-difference gradients of the MLP loss w.r.t. all parameters."""
    grads_W = []
    for W in mlp.coefs_:
        g = np.zeros_like(W)
        it = np.nditer(W, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = W[idx]
            W[idx] = orig + h
            up, _, _ = mlp.loss_and_gradients(X, y)
            W[idx] = orig - h
            dn, _, _ = mlp.loss_and_gradients(X, y)
            W[idx] = orig
            g[idx] = (up - dn) / (2 * h)
            it.iternext()
        grads_W.append(g)
    grads_b = []
    for b in mlp.intercepts_:
        g = np.zeros_like(b)
        for i in range(len(b)):
            orig = b[i]
            b[i] = orig + h
            up, _, _ = mlp.loss_and_gradients(X, y)
            b[i] = orig - h
            dn, _, _ = mlp.loss_and_gradients(X, y)
            b[i] = orig
            g[i] = (up - dn) / (2 * h)
        grads_b.append(g)
    return grads_W, grads_b


def walk_tree(tree_dict, x):
    """Independent traversal of a serialized tree node table."""
    node = 0
    while tree_dict["feature"][node] >= 0:
        if x[tree_dict["feature"][node]] <= tree_dict["threshold"][node]:
            node = tree_dict["left"][node]
        else:
            node = tree_dict["right"][node]
    return tree_dict["value"][node]


def pearson_reference(a, b) -> float:
    return float(stats.pearsonr(a, b)[0])


def f1_reference(y_true, y_pred) -> float:
    return float(f1_score(y_true, y_pred, zero_division=0))
