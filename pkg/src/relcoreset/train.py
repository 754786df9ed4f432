"""Weight-aware trainers for the downstream tasks.

All three accept sample_weight in fit() so they run unchanged on raw data or
on a coreset.  Objectives are weighted means, matching the quantities the
coreset approximates.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .util import STREAM_TRAIN, rng_for
from .validation import check_binary_labels, check_point_matrix, check_weights


class TrainingDivergedError(RuntimeError):
    """Objective rose for many consecutive steps; the step size is too hot."""


_DIVERGE_PATIENCE = 10


def _sq_dists(X, centers, x2=None):
    if x2 is None:
        x2 = np.einsum("ij,ij->i", X, X)
    c2 = np.einsum("ij,ij->i", centers, centers)
    return np.maximum(x2[:, None] - 2.0 * X @ centers.T + c2[None, :], 0.0)


def _sigmoid(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class WeightedKMeans(BaseEstimator):
    """Lloyd iterations with per-point mass, seeded careful init.

    ``objective_`` is the weighted mean squared distance to the nearest
    center; ``inertia_`` keeps the sklearn-style weighted sum.
    """

    def __init__(self, n_clusters=8, max_iter=300, tol=1e-10, random_state=0):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _init_centers(self, X, w, rng):
        n = X.shape[0]
        k = min(self.n_clusters, n)
        centers = np.empty((k, X.shape[1]))
        probs = w / w.sum()
        centers[0] = X[rng.choice(n, p=probs)]
        d2 = ((X - centers[0]) ** 2).sum(axis=1)
        # greedy seeding: several candidates per step, keep the one that
        # shrinks the potential most; plain single-draw seeding too often
        # leaves a far light cluster unseeded, which Lloyd cannot repair
        trials = 2 + int(np.log(k + 1.0) / np.log(2.0))
        for j in range(1, k):
            mass = w * d2
            total = mass.sum()
            if total <= 0:
                centers[j:] = X[rng.choice(n, size=k - j, p=probs)]
                break
            cand = rng.choice(n, size=trials, p=mass / total)
            best_pot, best_d2 = None, None
            for c in cand:
                nd2 = np.minimum(d2, ((X - X[c]) ** 2).sum(axis=1))
                pot = float((w * nd2).sum())
                if best_pot is None or pot < best_pot:
                    best_pot, best_d2, centers[j] = pot, nd2, X[c]
            d2 = best_d2
        return centers

    def fit(self, X, y=None, sample_weight=None):
        X = check_point_matrix(X, "X")
        n, d = X.shape
        w = np.ones(n) if sample_weight is None else check_weights(sample_weight, n)
        rng = rng_for(self.random_state, STREAM_TRAIN, 1)
        centers = self._init_centers(X, w, rng)
        k = centers.shape[0]
        x2 = np.einsum("ij,ij->i", X, X)
        it = 0
        for it in range(self.max_iter):
            d2 = _sq_dists(X, centers, x2)
            labels = d2.argmin(axis=1)
            mass = np.bincount(labels, weights=w, minlength=k)
            new = np.column_stack(
                [np.bincount(labels, weights=w * X[:, dim], minlength=k) for dim in range(d)]
            )
            empty = mass <= 0
            new[~empty] /= mass[~empty, None]
            if empty.any():
                # reseat empty clusters on the heaviest-loss points
                far = np.argsort(-(w * d2.min(axis=1)))
                new[empty] = X[far[: int(empty.sum())]]
            shift = float(((new - centers) ** 2).sum())
            centers = new
            if shift <= self.tol:
                break
        d2 = _sq_dists(X, centers, x2)
        best = d2.min(axis=1)
        self.cluster_centers_ = centers
        self.labels_ = d2.argmin(axis=1)
        self.inertia_ = float((w * best).sum())
        self.objective_ = float((w * best).sum() / w.sum())
        self.n_iter_ = it + 1
        self.n_features_in_ = d
        return self

    def predict(self, X):
        X = check_point_matrix(X, "X", dim=self.n_features_in_)
        return _sq_dists(X, self.cluster_centers_).argmin(axis=1)

    @property
    def theta_(self):
        return self.cluster_centers_


class _GradientDescent(BaseEstimator):
    """Shared full-batch descent loop with a fixed decaying step schedule."""

    def _objective_grad(self, theta, X, y, w):  # pragma: no cover - abstract
        raise NotImplementedError

    def _theta0(self, d):
        raise NotImplementedError

    def _descend(self, X, y, w, step_scale=1.0):
        theta = self._theta0(X.shape[1])
        best_theta, best_obj = theta, np.inf
        prev = np.inf
        rises = 0
        for t in range(self.max_iter):
            obj, grad = self._objective_grad(theta, X, y, w)
            if obj < best_obj:
                best_obj, best_theta = obj, theta.copy()
            if obj > prev:
                rises += 1
                if rises >= _DIVERGE_PATIENCE:
                    raise TrainingDivergedError(
                        f"objective rose {rises} consecutive steps (now {obj:.6g}); lower lr={self.lr}"
                    )
            else:
                rises = 0
            gnorm = float(grad @ grad)
            if gnorm <= self.tol:
                break
            prev = obj
            theta = theta - (self.lr * step_scale / (1.0 + self.decay * t)) * grad
        obj, _ = self._objective_grad(theta, X, y, w)
        if obj < best_obj:
            best_obj, best_theta = obj, theta
        return best_theta, best_obj

    def _fit_common(self, X, y, sample_weight, step_scale=1.0):
        X = check_point_matrix(X, "X")
        y = check_binary_labels(y, X.shape[0])
        w = np.ones(X.shape[0]) if sample_weight is None else check_weights(sample_weight, X.shape[0])
        theta, obj = self._descend(X, y, w, step_scale)
        self._store(theta)
        self.objective_ = float(obj)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        return (self.decision_function(X) >= 0).astype(np.int64)


class LogisticRegressionERM(_GradientDescent):
    """Full-batch logistic regression without intercept.

    The step is preconditioned per coordinate by the diagonal curvature
    bound (d/4) * weighted mean x_j^2, so the default schedule is stable
    under any per-feature scaling, not just a global one.
    """

    def __init__(self, lr=1.0, decay=0.0, max_iter=500, tol=1e-12, random_state=0):
        self.lr = lr
        self.decay = decay
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _theta0(self, d):
        return np.zeros(d)

    def fit(self, X, y, sample_weight=None):
        X = check_point_matrix(X, "X")
        n, d = X.shape
        w = np.ones(n) if sample_weight is None else check_weights(sample_weight, n)
        curv = 0.25 * d * (w @ (X * X)) / w.sum()
        return self._fit_common(X, y, sample_weight, step_scale=1.0 / np.maximum(curv, 1e-12))

    def _objective_grad(self, theta, X, y, w):
        t = X @ theta
        obj = float((w * (np.logaddexp(0.0, t) - y * t)).sum() / w.sum())
        grad = X.T @ (w * (_sigmoid(t) - y)) / w.sum()
        return obj, grad

    def decision_function(self, X):
        X = check_point_matrix(X, "X", dim=self.n_features_in_)
        return X @ self.coef_

    def _store(self, theta):
        self.coef_ = theta

    @property
    def theta_(self):
        return self.coef_


class SoftMarginSVM(_GradientDescent):
    """Hinge loss plus ridge on the normal vector, subgradient descent.

    theta is (omega, b); the offset b is unregularized.  Keeps the best
    iterate, the usual remedy for subgradient oscillation.  The step is
    preconditioned per coordinate by (d+1) * weighted mean x_j^2 (with 1
    for the implicit intercept column), so the default schedule is stable
    under any per-feature scaling, matching the logistic trainer.
    """

    def __init__(self, reg=1e-3, lr=2.0, decay=0.05, max_iter=800, tol=1e-14, random_state=0):
        self.reg = reg
        self.lr = lr
        self.decay = decay
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _theta0(self, d):
        return np.zeros(d + 1)

    def fit(self, X, y, sample_weight=None):
        X = check_point_matrix(X, "X")
        n, d = X.shape
        w = np.ones(n) if sample_weight is None else check_weights(sample_weight, n)
        scale = (d + 1.0) * np.append((w @ (X * X)) / w.sum(), 1.0)
        return self._fit_common(X, y, sample_weight, step_scale=1.0 / np.maximum(scale, 1e-12))

    def _objective_grad(self, theta, X, y, w):
        omega, b = theta[:-1], theta[-1]
        ypm = 2.0 * y - 1.0
        margin = ypm * (X @ omega + b)
        hinge = np.maximum(0.0, 1.0 - margin)
        obj = float((w * hinge).sum() / w.sum()) + 0.5 * self.reg * float(omega @ omega)
        active = (margin < 1.0) * w * ypm
        grad_w = -(X.T @ active) / w.sum() + self.reg * omega
        grad_b = -float(active.sum()) / w.sum()
        return obj, np.concatenate([grad_w, [grad_b]])

    def decision_function(self, X):
        X = check_point_matrix(X, "X", dim=self.n_features_in_)
        return X @ self.coef_ + self.intercept_

    def _store(self, theta):
        self.coef_ = theta[:-1]
        self.intercept_ = float(theta[-1])

    @property
    def theta_(self):
        return np.concatenate([self.coef_, [self.intercept_]])


def make_trainer(kind: str, seed: int = 0, **kw):
    if kind == "kmeans":
        return WeightedKMeans(random_state=seed, **kw)
    if kind == "logistic":
        return LogisticRegressionERM(random_state=seed, **kw)
    if kind == "svm":
        return SoftMarginSVM(random_state=seed, **kw)
    raise ValueError(f"unknown trainer kind {kind!r}")
