"""Preprocessing components: selectors, one-hot, NA filters, scalers, extractors."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import minimize_scalar

from .core import Transformer
from .data import Column, DataError, DataTable, Kind


class ConvergenceWarning(UserWarning):
    pass


def _require_numeric(table: DataTable, who: str) -> np.ndarray:
    bad = [c.name for c in table.columns if not c.is_numeric]
    if bad:
        raise DataError(f"{who}: categorical columns {bad}")
    if any(c.na_count for c in table.columns):
        raise DataError(f"{who}: missing cells in input")
    return table.to_matrix()


def _numeric_table(matrix: np.ndarray, names, n_rows: int) -> DataTable:
    cols = tuple(Column(nm, Kind.NUMERIC, matrix[:, j], np.zeros(n_rows, dtype=bool))
                 for j, nm in enumerate(names))
    return DataTable(cols, n_rows)


# ---------------------------------------------------------------------------
# selectors and identity


def select_features(table: DataTable, kind: Kind | str) -> DataTable:
    return table.select(Kind(kind))


class FeatureSelector(Transformer):
    stateful = False

    def __init__(self, kind: Kind, seed=0):
        super().__init__(seed)
        self.select_kind = Kind(kind)

    def _transform(self, table):
        return select_features(table, self.select_kind)


class Noop(Transformer):
    stateful = False

    def _transform(self, table):
        return table


# ---------------------------------------------------------------------------
# one-hot


class OneHotEncoder(Transformer):
    """One 0/1 column per (source column, category), named ``src=cat``.

    Categories are ordered by first appearance in the fit data; categories
    unseen at fit time (and missing cells) encode as all zeros.
    """

    def _fit(self, table, target=None):
        self.dictionaries: list[tuple[str, tuple[str, ...]]] = []
        for col in table.columns:
            if col.is_numeric:
                raise DataError(f"one-hot: numeric column {col.name!r}")
            if col.na_count:
                raise DataError(f"one-hot: missing cells in {col.name!r} at fit time")
            seen = dict.fromkeys(col.categories[c] for c in col.data)
            self.dictionaries.append((col.name, tuple(seen)))

    def _transform(self, table):
        out = []
        for name, cats in self.dictionaries:
            try:
                col = table[name]
            except KeyError:
                raise DataError(f"one-hot: column {name!r} missing at transform time") from None
            labels = col.labels()
            for cat in cats:
                hit = (labels == cat) & ~col.na_mask
                out.append(Column(f"{name}={cat}", Kind.NUMERIC, hit.astype(float),
                                  np.zeros(table.n_rows, dtype=bool)))
        return DataTable(tuple(out), table.n_rows)


def onehot_fit(table: DataTable) -> OneHotEncoder:
    return OneHotEncoder().fit(table)


def onehot_transform(state: OneHotEncoder, table: DataTable) -> DataTable:
    return state.transform(table)


# ---------------------------------------------------------------------------
# missing-value filters


def colnarm(table: DataTable, threshold: float = 0.10) -> DataTable:
    """Drop columns whose NA count exceeds ``threshold * n_rows``."""
    limit = threshold * table.n_rows
    keep = tuple(c for c in table.columns if not c.na_count > limit)
    if table.columns and not keep:
        raise DataError("colnarm removed every column")
    return DataTable(keep, table.n_rows)


def rownarm_rows(table: DataTable) -> np.ndarray:
    rows = np.flatnonzero(~table.row_na_mask())
    if table.n_rows and not len(rows):
        raise DataError("rownarm removed every row")
    return rows


def rownarm(table: DataTable) -> DataTable:
    """Drop every row with at least one missing cell."""
    return table.take_rows(rownarm_rows(table))


class ColumnNARemover(Transformer):
    def __init__(self, seed=0, threshold=0.10):
        super().__init__(seed)
        self.threshold = threshold

    def _fit(self, table, target=None):
        self.keep_ = colnarm(table, self.threshold).names

    def _transform(self, table):
        missing = set(self.keep_) - set(table.names)
        if missing:
            raise DataError(f"colnarm: columns {sorted(missing)} missing at transform time")
        keep = set(self.keep_)
        return DataTable(tuple(c for c in table.columns if c.name in keep), table.n_rows)


class RowNARemover(Transformer):
    stateful = False

    def kept_rows(self, table):
        return rownarm_rows(table)

    def _transform(self, table):
        return rownarm(table)


# ---------------------------------------------------------------------------
# scalers


def yeo_johnson(x: np.ndarray, lam: float) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    if abs(lam) < 1e-12:
        out[pos] = np.log1p(x[pos])
    else:
        out[pos] = (np.power(x[pos] + 1.0, lam) - 1.0) / lam
    if abs(lam - 2.0) < 1e-12:
        out[~pos] = -np.log1p(-x[~pos])
    else:
        out[~pos] = -(np.power(1.0 - x[~pos], 2.0 - lam) - 1.0) / (2.0 - lam)
    return out


def yeo_johnson_loglik(x: np.ndarray, lam: float) -> float:
    """Gaussian profile log-likelihood of the transformed sample."""
    with np.errstate(over="ignore", invalid="ignore"):
        t = yeo_johnson(x, lam)
        var = t.var()
    if not np.isfinite(var) or var <= 0:
        return -np.inf
    n = x.shape[0]
    return -0.5 * n * np.log(var) + (lam - 1.0) * np.sum(np.sign(x) * np.log1p(np.abs(x)))


def yeo_johnson_lambda(x: np.ndarray, bounds=(-5.0, 5.0)) -> float:
    res = minimize_scalar(lambda lam: -yeo_johnson_loglik(x, lam), bounds=bounds,
                          method="bounded", options={"xatol": 1e-6})
    return float(res.x)


class Scaler(Transformer):
    """Column scaling; output keeps the input column names.

    Modes: ``standard`` (population std), ``minmax``, ``robust`` (median and
    linearly interpolated IQR), ``normalizer`` (unit Euclidean norm per row),
    ``power`` (Yeo-Johnson then standardised), ``noop``.  A constant column
    maps to zeros under the affine modes.
    """

    MODES = ("standard", "minmax", "robust", "normalizer", "power", "noop")

    def __init__(self, mode: str, seed=0):
        super().__init__(seed)
        if mode not in self.MODES:
            raise ValueError(f"unknown scaler mode {mode!r}")
        self.mode = mode
        self.stateful = mode not in ("normalizer", "noop")

    def _fit(self, table, target=None):
        X = _require_numeric(table, f"scaler[{self.mode}]")
        self.columns_ = table.names
        if self.mode == "standard":
            self.center_, self.scale_ = X.mean(axis=0), X.std(axis=0)
        elif self.mode == "minmax":
            lo = X.min(axis=0) if len(X) else np.zeros(X.shape[1])
            hi = X.max(axis=0) if len(X) else np.zeros(X.shape[1])
            self.center_, self.scale_ = lo, hi - lo
        elif self.mode == "robust":
            q1, med, q3 = np.percentile(X, [25, 50, 75], axis=0)
            self.center_, self.scale_ = med, q3 - q1
        elif self.mode == "power":
            self.lambdas_ = np.array([yeo_johnson_lambda(X[:, j]) if np.ptp(X[:, j]) > 0 else 1.0
                                      for j in range(X.shape[1])])
            T = self._power(X)
            self.center_, self.scale_ = T.mean(axis=0), T.std(axis=0)

    def _power(self, X):
        with np.errstate(over="ignore", invalid="ignore"):
            T = np.column_stack([yeo_johnson(X[:, j], lam) for j, lam in enumerate(self.lambdas_)]) \
                if X.shape[1] else X.copy()
        if not np.all(np.isfinite(T)):
            raise DataError("power transform overflowed")
        return T

    def _transform(self, table):
        if self.mode == "noop":
            return table
        X = _require_numeric(table, f"scaler[{self.mode}]")
        if self.mode == "normalizer":
            norm = np.sqrt(np.sum(X * X, axis=1))
            out = X / np.where(norm > 0, norm, 1.0)[:, None]
        else:
            if table.names != self.columns_:
                raise DataError(f"scaler[{self.mode}]: schema mismatch")
            if self.mode == "power":
                X = self._power(X)
            ok = self.scale_ > 0
            out = (X - self.center_) / np.where(ok, self.scale_, 1.0) * ok
        return _numeric_table(out, table.names, table.n_rows)


def scale_fit(mode: str, table: DataTable) -> Scaler:
    return Scaler(mode).fit(table)


def scale_apply(state: Scaler, table: DataTable) -> DataTable:
    return state.transform(table)


# ---------------------------------------------------------------------------
# extractors


def _sym_inv_sqrt(M):
    vals, vecs = np.linalg.eigh(M)
    vals = np.maximum(vals, 1e-300)
    return (vecs / np.sqrt(vals)) @ vecs.T


def _fix_signs(components):
    """Make the largest-magnitude entry of each row positive."""
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(len(components)), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


class Extractor(Transformer):
    """Linear feature extraction: ``(x - center) @ components.T``.

    ``pca`` projects on covariance eigenvectors (descending variance).
    ``ica`` runs symmetric FastICA (logcosh contrast) on whitened data.
    ``fa`` does principal-axis factoring and emits regression factor scores.
    ``k`` defaults to the full dimension; ica and fa may retain fewer
    components when the data are rank deficient.
    """

    MODES = ("pca", "ica", "fa", "noop")
    PREFIX = {"pca": "pc", "ica": "ic", "fa": "fa"}

    def __init__(self, mode: str, seed=0, k=None, max_iter=None, tol=1e-4):
        super().__init__(seed)
        if mode not in self.MODES:
            raise ValueError(f"unknown extractor mode {mode!r}")
        self.mode = mode
        self.k = k
        self.max_iter = max_iter if max_iter is not None else (200 if mode == "ica" else 50)
        self.tol = tol
        self.stateful = mode != "noop"

    def _fit(self, table, target=None):
        if self.mode == "noop":
            return
        X = _require_numeric(table, f"extractor[{self.mode}]")
        n, d = X.shape
        if n < 2:
            raise DataError(f"extractor[{self.mode}] needs at least 2 rows")
        k = min(n, d) if self.k is None else self.k
        if k > min(n, d) or k < 1:
            raise DataError(f"extractor[{self.mode}]: k={k} outside [1, {min(n, d)}]")
        self.columns_ = table.names
        self.center_ = X.mean(axis=0)
        Xc = X - self.center_
        if self.mode == "pca":
            self.components_ = self._fit_pca(Xc, k)
        elif self.mode == "ica":
            self.components_ = self._fit_ica(Xc, k)
        else:
            self.components_ = self._fit_fa(Xc, k)

    @staticmethod
    def _fit_pca(Xc, k):
        cov = Xc.T @ Xc / max(len(Xc) - 1, 1)
        vals, vecs = np.linalg.eigh(cov)
        order = np.argsort(vals)[::-1][:k]
        return _fix_signs(vecs[:, order].T)

    def _fit_ica(self, Xc, k):
        n = len(Xc)
        cov = Xc.T @ Xc / n
        vals, vecs = np.linalg.eigh(cov)
        order = np.argsort(vals)[::-1]
        vals, vecs = vals[order], vecs[:, order]
        rank = int(np.sum(vals > max(vals[0], 0.0) * 1e-10)) if vals[0] > 0 else 0
        k = min(k, rank)
        if k == 0:
            raise DataError("extractor[ica]: input has no variance")
        whitening = (vecs[:, :k] / np.sqrt(vals[:k])).T
        Z = Xc @ whitening.T
        rng = np.random.default_rng(self.seed)
        W = rng.standard_normal((k, k))
        W = _sym_inv_sqrt(W @ W.T) @ W
        self.n_iter_, converged = 0, False
        for it in range(self.max_iter):
            G = np.tanh(Z @ W.T)
            W_new = (G.T @ Z) / n - np.diag((1.0 - G * G).mean(axis=0)) @ W
            W_new = _sym_inv_sqrt(W_new @ W_new.T) @ W_new
            change = np.max(np.abs(np.abs(np.sum(W_new * W, axis=1)) - 1.0))
            W = W_new
            self.n_iter_ = it + 1
            if change < self.tol:
                converged = True
                break
        if not converged:
            warnings.warn(f"FastICA did not converge in {self.max_iter} iterations",
                          ConvergenceWarning, stacklevel=2)
        return W @ whitening

    def _fit_fa(self, Xc, k):
        std = Xc.std(axis=0)
        ok = std > 0
        Z = Xc / np.where(ok, std, 1.0)
        R = (Z.T @ Z) / len(Z)
        np.fill_diagonal(R, 1.0)
        R[~ok, :] = 0.0
        R[:, ~ok] = 0.0
        Rinv = np.linalg.pinv(R, hermitian=True)
        diag = np.diag(Rinv)
        h2 = np.clip(1.0 - 1.0 / np.where(diag > 0, diag, np.inf), 0.0, 1.0)
        loadings = np.zeros((R.shape[0], 0))
        for _ in range(self.max_iter):
            Rr = R.copy()
            np.fill_diagonal(Rr, h2)
            vals, vecs = np.linalg.eigh(Rr)
            order = np.argsort(vals)[::-1][:k]
            vals, vecs = vals[order], vecs[:, order]
            pos = vals > 1e-12
            loadings = vecs[:, pos] * np.sqrt(vals[pos])
            h2 = np.clip(np.sum(loadings ** 2, axis=1), 0.0, 1.0)
        if loadings.shape[1] == 0:
            raise DataError("extractor[fa]: no positive factors")
        loadings = _fix_signs(loadings.T).T
        weights = Rinv @ loadings
        return (weights / np.where(ok, std, 1.0)[:, None]).T

    @property
    def n_components_(self) -> int:
        return self.components_.shape[0]

    def _transform(self, table):
        if self.mode == "noop":
            return table
        X = _require_numeric(table, f"extractor[{self.mode}]")
        if table.names != self.columns_:
            raise DataError(f"extractor[{self.mode}]: schema mismatch")
        out = (X - self.center_) @ self.components_.T
        prefix = self.PREFIX[self.mode]
        return _numeric_table(out, [f"{prefix}{j + 1}" for j in range(out.shape[1])], table.n_rows)

    def inverse_transform(self, scores: np.ndarray) -> np.ndarray:
        """Back-projection (exact for full-rank pca)."""
        return scores @ self.components_ + self.center_


def extract_fit(mode: str, table: DataTable, k: int | None = None, seed: int = 0) -> Extractor:
    return Extractor(mode, seed=seed, k=k).fit(table)


def extract_apply(state: Extractor, table: DataTable) -> DataTable:
    return state.transform(table)
