"""Support vector classifiers trained with Pegasos (primal and kernelized)."""

from __future__ import annotations

import numpy as np

from ..core import Learner
from ._kernels import pegasos_kernel, pegasos_linear


def _signed_targets(y, n_classes):
    """(n, c) matrix of +/-1; binary problems use a single column for class 1."""
    if n_classes == 2:
        return np.where(y == 1, 1.0, -1.0)[:, None]
    return np.where(y[:, None] == np.arange(n_classes)[None, :], 1.0, -1.0)


def _visit_order(n, epochs, seed):
    rng = np.random.default_rng(seed)
    return np.concatenate([rng.permutation(n) for _ in range(epochs)]).astype(np.int64)


def _from_scores(scores, n_classes):
    if n_classes == 2:
        return (scores[:, 0] > 0).astype(np.int64)
    return np.argmax(scores, axis=1)


class LinearSVM(Learner):
    """Hinge-loss linear classifier, one-vs-rest for more than two classes.

    A constant feature carries the bias.  The returned weights are the mean
    of the iterates over the last half of training.
    """

    def __init__(self, seed=0, lam=1e-4, epochs=20):
        super().__init__(seed)
        self.lam = lam
        self.epochs = epochs

    def _fit_model(self, X, y, n_classes):
        self.n_classes = n_classes
        Xb = np.hstack([X, np.ones((X.shape[0], 1))])
        order = _visit_order(X.shape[0], self.epochs, self.seed)
        self.weights = pegasos_linear(Xb, _signed_targets(y, n_classes), self.lam, order)

    def decision_function(self, X):
        return X @ self.weights[:, :-1].T + self.weights[:, -1]

    def _predict_codes(self, X):
        return _from_scores(self.decision_function(X), self.n_classes)


def median_distance(X, max_rows=1000, seed=0) -> float:
    """Median pairwise Euclidean distance (on a fixed subsample of large inputs)."""
    if X.shape[0] > max_rows:
        X = X[np.random.default_rng(seed).choice(X.shape[0], max_rows, replace=False)]
    sq = np.sum(X * X, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    iu = np.triu_indices(X.shape[0], k=1)
    if len(iu[0]) == 0:
        return 1.0
    med = float(np.median(np.sqrt(d2[iu])))
    return med if med > 0 else 1.0


class RbfSVM(Learner):
    """Kernel Pegasos with a Gaussian kernel (plus a constant for the bias).

    The kernel width defaults to the median pairwise distance of the
    training rows.
    """

    def __init__(self, seed=0, lam=1e-4, epochs=20, width=None):
        super().__init__(seed)
        if width is not None and width <= 0:
            raise ValueError("kernel width must be positive")
        self.lam = lam
        self.epochs = epochs
        self.width = width

    def _fit_model(self, X, y, n_classes):
        self.n_classes = n_classes
        width = self.width or median_distance(X, seed=self.seed)
        self.gamma_ = 1.0 / (2.0 * width * width)
        Y = _signed_targets(y, n_classes)
        order = _visit_order(X.shape[0], self.epochs, self.seed)
        alpha = pegasos_kernel(np.ascontiguousarray(X), Y, self.lam, order, self.gamma_)
        support = np.flatnonzero(alpha.sum(axis=1) > 0)
        self.support_ = X[support].copy()
        self.dual_coef_ = (alpha * Y)[support]

    def decision_function(self, X):
        if len(self.support_) == 0:
            return np.zeros((X.shape[0], self.dual_coef_.shape[1]))
        sq = np.sum(X * X, axis=1)[:, None] + np.sum(self.support_ ** 2, axis=1)[None, :]
        d2 = np.maximum(sq - 2.0 * X @ self.support_.T, 0.0)
        K = np.exp(-self.gamma_ * d2) + 1.0
        return K @ self.dual_coef_

    def _predict_codes(self, X):
        return _from_scores(self.decision_function(X), self.n_classes)
