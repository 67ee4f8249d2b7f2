"""Tree learners: CART, random forest, SAMME AdaBoost, gradient boosting."""

from __future__ import annotations

import numpy as np

from ..core import Learner
from ._kernels import apply_tree, build_tree


class Tree:
    """Flat arrays of a fitted CART tree."""

    def __init__(self, feature, threshold, left, right, value, weight):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value
        self.weight = weight

    @classmethod
    def grow(cls, X, y=None, *, target=None, weights=None, rows=None, n_classes=0,
             max_depth=None, min_leaf=1, max_features=None, seed=0) -> "Tree":
        """Classification tree when ``y`` (integer codes) is given, else regression on ``target``."""
        n, d = X.shape
        regression = y is None
        y_cls = np.zeros(n, dtype=np.int64) if regression else np.ascontiguousarray(y, dtype=np.int64)
        y_reg = np.ascontiguousarray(target, dtype=np.float64) if regression else np.zeros(n)
        w = np.ones(n) if weights is None else np.ascontiguousarray(weights, dtype=np.float64)
        rows = np.arange(n, dtype=np.int64) if rows is None else np.ascontiguousarray(rows, dtype=np.int64)
        arrays = build_tree(
            np.ascontiguousarray(X, dtype=np.float64), y_cls, y_reg, w, rows,
            int(n_classes), regression, -1 if max_depth is None else int(max_depth),
            int(min_leaf), d if max_features is None else int(max_features),
            np.uint64(seed % (1 << 64)),
        )
        return cls(*arrays)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        return apply_tree(self.feature, self.threshold, self.left, self.right,
                          np.ascontiguousarray(X, dtype=np.float64))

    def predict_class(self, X) -> np.ndarray:
        # argmax picks the first maximum, i.e. the smallest label on ties
        return np.argmax(self.value, axis=1)[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "weight": self.weight.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        value = np.asarray(d["value"], dtype=np.float64)
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            value.reshape(len(d["feature"]), -1),
            np.asarray(d["weight"], dtype=np.float64),
        )


class DecisionTree(Learner):
    def __init__(self, seed=0, max_depth=12, min_leaf=1):
        super().__init__(seed)
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def _fit_model(self, X, y, n_classes):
        self.tree = Tree.grow(X, y, n_classes=n_classes, max_depth=self.max_depth,
                              min_leaf=self.min_leaf, seed=self.seed)

    def _predict_codes(self, X):
        return self.tree.predict_class(X)


class RandomForest(Learner):
    """Bagged CART trees with sqrt(d) candidate features per split.

    Trees vote with their leaf majority; vote ties go to the smallest label.
    """

    def __init__(self, seed=0, n_estimators=100, max_depth=None, min_leaf=1,
                 max_features="sqrt", bootstrap=True):
        super().__init__(seed)
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap

    def _n_features(self, d):
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(d)))
        if self.max_features is None:
            return d
        return max(1, min(d, int(self.max_features)))

    def _fit_model(self, X, y, n_classes):
        n, d = X.shape
        self.n_classes = n_classes
        rng = np.random.default_rng(self.seed)
        k = self._n_features(d)
        self.trees = []
        for _ in range(self.n_estimators):
            tree_seed = int(rng.integers(0, 2**63 - 1))
            if self.bootstrap:
                counts = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.float64)
                rows = np.flatnonzero(counts)
                weights = counts
            else:
                rows, weights = None, None
            self.trees.append(Tree.grow(X, y, weights=weights, rows=rows, n_classes=n_classes,
                                        max_depth=self.max_depth, min_leaf=self.min_leaf,
                                        max_features=k, seed=tree_seed))

    def votes(self, X) -> np.ndarray:
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            votes[rows, tree.predict_class(X)] += 1
        return votes

    def _predict_codes(self, X):
        return np.argmax(self.votes(X), axis=1)


class AdaBoost(Learner):
    """SAMME boosting of depth-1 stumps."""

    def __init__(self, seed=0, n_estimators=100, max_depth=1):
        super().__init__(seed)
        self.n_estimators = n_estimators
        self.max_depth = max_depth

    def _fit_model(self, X, y, n_classes):
        n = X.shape[0]
        self.n_classes = n_classes
        w = np.full(n, 1.0 / n)
        self.stumps, self.alphas = [], []
        for m in range(self.n_estimators):
            stump = Tree.grow(X, y, weights=w, n_classes=n_classes, max_depth=self.max_depth,
                              seed=self.seed + m)
            miss = stump.predict_class(X) != y
            err = float(w[miss].sum() / w.sum())
            if err >= 1.0 - 1.0 / n_classes:
                if not self.stumps:
                    self.stumps.append(stump)
                    self.alphas.append(1.0)
                break
            if err <= 0.0:
                self.stumps.append(stump)
                self.alphas.append(1.0)
                break
            alpha = np.log((1.0 - err) / err) + np.log(n_classes - 1.0)
            self.stumps.append(stump)
            self.alphas.append(alpha)
            w = w * np.exp(alpha * miss)
            w /= w.sum()

    def _predict_codes(self, X):
        score = np.zeros((X.shape[0], self.n_classes))
        rows = np.arange(X.shape[0])
        for stump, alpha in zip(self.stumps, self.alphas):
            score[rows, stump.predict_class(X)] += alpha
        return np.argmax(score, axis=1)


def _sigmoid(f):
    return 0.5 * (1.0 + np.tanh(0.5 * f))


def binomial_deviance(y, f) -> float:
    """Mean of -2 log-likelihood for labels in {0, 1} and raw scores ``f``."""
    return float(np.mean(2.0 * (np.logaddexp(0.0, f) - y * f)))


class GradientBoosting(Learner):
    """Binomial-deviance boosting with regression trees and Newton leaf values.

    Two classes use a single model; more classes fit one model per class
    (one-vs-rest) and predict the arg-max score.
    """

    def __init__(self, seed=0, n_estimators=100, learning_rate=0.1, max_depth=3):
        super().__init__(seed)
        if not 0.0 < learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth

    def _fit_model(self, X, y, n_classes):
        self.n_classes = n_classes
        targets = [(y == 1).astype(float)] if n_classes == 2 else [(y == k).astype(float) for k in range(n_classes)]
        self.models = []
        self.train_deviance_ = []
        for c, yb in enumerate(targets):
            p0 = np.clip(yb.mean(), 1e-12, 1 - 1e-12)
            init = float(np.log(p0 / (1 - p0)))
            f = np.full(len(yb), init)
            stages = []
            trace = [binomial_deviance(yb, f)]
            for m in range(self.n_estimators):
                p = _sigmoid(f)
                resid = yb - p
                tree = Tree.grow(X, target=resid, max_depth=self.max_depth,
                                 seed=self.seed + 7919 * c + m)
                leaf = tree.apply(X)
                num = np.bincount(leaf, weights=resid, minlength=tree.n_nodes)
                den = np.bincount(leaf, weights=p * (1 - p), minlength=tree.n_nodes)
                gamma = np.where(den > 1e-150, num / np.maximum(den, 1e-150), 0.0)
                tree.value = gamma[:, None]
                f = f + self.learning_rate * gamma[leaf]
                stages.append(tree)
                trace.append(binomial_deviance(yb, f))
            self.models.append((init, stages))
            self.train_deviance_.append(trace)

    def decision_function(self, X) -> np.ndarray:
        out = np.empty((X.shape[0], len(self.models)))
        for c, (init, stages) in enumerate(self.models):
            f = np.full(X.shape[0], init)
            for tree in stages:
                f += self.learning_rate * tree.value[tree.apply(X), 0]
            out[:, c] = f
        return out

    def _predict_codes(self, X):
        f = self.decision_function(X)
        if self.n_classes == 2:
            return (f[:, 0] > 0).astype(np.int64)
        return np.argmax(f, axis=1)
