"""Synthetic dataset generators and independent oracles shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

from pipeforge.core import Learner, Transformer
from pipeforge.crossval import crossvalidate, make_folds
from pipeforge.data import Column, DataError, DataTable, TargetVector
from pipeforge.expr import Name, make_pipe, make_union
from pipeforge.transformers import colnarm, extract_apply, extract_fit, rownarm

TEAMS = ["ATL", "BUF", "CHI", "DAL", "DEN", "GB", "KC", "MIA", "NE", "NYG", "PIT", "SF"]


def profb_like(seed=0, n=672):
    """5 categorical + 5 numeric columns, 1200 NA cells, home/away target.

    NA layout: 400 cells in each of two numeric columns (beyond the 10%
    colnarm limit) and 50 in each of the remaining eight columns.
    """
    rng = np.random.default_rng(seed)
    fav = rng.normal(21, 8, n).round()
    und = rng.normal(16, 8, n).round()
    spread = rng.normal(5, 3, n).round(1)
    year = rng.integers(1989, 1992, n).astype(float)
    week = rng.integers(1, 18, n).astype(float)
    home = (spread + rng.normal(0, 3, n) > 5).astype(int)
    cats = {
        "FavoriteName": rng.choice(TEAMS, n),
        "UnderdogName": rng.choice(TEAMS, n),
        "Weekday": rng.choice(["Sun", "Mon", "Sat", "Thu"], n, p=[0.8, 0.1, 0.05, 0.05]),
        "Overtime": rng.choice(["no", "yes"], n, p=[0.93, 0.07]),
        "Era": rng.choice(["early", "late"], n),
    }
    nums = {"FavoritePoints": fav, "UnderdogPoints": und, "Pointspread": spread, "Year": year,
            "Week": week}
    na_counts = {"Year": 400 * n // 672, "Week": 400 * n // 672}
    small = 50 * n // 672
    cols = []
    for name, values in cats.items():
        mask = np.zeros(n, bool)
        mask[rng.choice(n, small, replace=False)] = True
        cols.append(Column.categorical(name, [None if m else str(v) for v, m in zip(values, mask)]))
    for name, values in nums.items():
        mask = np.zeros(n, bool)
        mask[rng.choice(n, na_counts.get(name, small), replace=False)] = True
        cols.append(Column.numeric(name, np.where(mask, np.nan, values)))
    table = DataTable(tuple(cols), n)
    target = TargetVector(np.where(home == 1, "home", "away"))
    return table, target


def two_gaussians(n=400, sigma=0.3, distance=4.0, seed=0, d=2):
    rng = np.random.default_rng(seed)
    centre = np.zeros(d)
    centre[0] = distance
    X = np.vstack([rng.normal(0, sigma, (n // 2, d)), rng.normal(0, sigma, (n - n // 2, d)) + centre])
    y = np.array(["a"] * (n // 2) + ["b"] * (n - n // 2))
    return DataTable.from_numeric(X), TargetVector(y)


def xor(n=400, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 2))
    y = np.where(X[:, 0] * X[:, 1] > 0, "same", "diff")
    return DataTable.from_numeric(X), TargetVector(y)


def rotated_boundary(n=300, seed=0, d=4, angle=np.pi / 4, scales=None, noise=0.0):
    """Classes split by a hyperplane rotated away from the axes.

    ``scales`` multiplies feature columns afterwards (planted scale
    sensitivity); ``noise`` flips that fraction of labels.
    """
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    w = np.zeros(d)
    w[0], w[1] = np.cos(angle), np.sin(angle)
    y = (X @ w > 0).astype(int)
    flip = rng.random(n) < noise
    y = np.where(flip, 1 - y, y)
    if scales is not None:
        X = X * np.asarray(scales, dtype=float)
    return DataTable.from_numeric(X), TargetVector(np.where(y == 1, "pos", "neg"))


def rule_structured(n=300, seed=0, d=4, n_cat=2, noise=0.0):
    """Axis-aligned threshold rules on skewed features plus categorical noise columns.

    ``noise`` flips that fraction of labels after the rule is applied.
    """
    rng = np.random.default_rng(seed)
    X = rng.exponential(1.0, size=(n, d)) ** 2
    y = ((X[:, 0] > 0.5) & (X[:, 1] < 1.5)) | (X[:, 2] > 3.0)
    if noise:
        y = y ^ (rng.random(n) < noise)
    cols = [Column.numeric(f"x{j + 1}", X[:, j]) for j in range(d)]
    for j in range(n_cat):
        cols.append(Column.categorical(f"c{j + 1}", list(rng.choice(["u", "v", "w"], n))))
    return DataTable(tuple(cols), n), TargetVector(np.where(y, "yes", "no"))


def mixed_table(n=30, seed=0):
    rng = np.random.default_rng(seed)
    cols = (
        Column.numeric("a", rng.normal(size=n)),
        Column.categorical("b", list(rng.choice(["p", "q", "r"], n))),
        Column.numeric("c", rng.uniform(0, 10, n)),
        Column.categorical("d", list(rng.choice(["s", "t"], n))),
    )
    target = TargetVector(np.where(cols[0].data > 0, "hi", "lo"))
    return DataTable(cols, n), target


# ---------------------------------------------------------------------------
# brute-force cross-validation oracle, coded without the crossval module


def oracle_folds(labels, k, seed):
    """Stratified round-robin dealing, class by class in sorted label order."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    fold = np.empty(len(labels), dtype=int)
    offset = 0
    for cls in sorted(set(labels.tolist())):
        members = rng.permutation(np.flatnonzero(labels == cls))
        for i, row in enumerate(members):
            fold[row] = (offset + i) % k
        offset = (offset + len(members)) % k
    return fold


def oracle_cv(names, registry, table, target, k, seed):
    """Fold errors of the flat pipeline ``names[0] |> ... |> names[-1]``."""
    from pipeforge.core import derive_seed

    fold = oracle_folds(target.labels, k, seed)
    errors = []
    for f in range(k):
        train, test = np.flatnonzero(fold != f), np.flatnonzero(fold == f)
        fold_seed = derive_seed(seed, "fold", f)
        machines = [registry.create(n, derive_seed(fold_seed, str(i))) for i, n in enumerate(names)]
        X, y = table.take_rows(train), target.take(train)
        for m in machines[:-1]:
            X = m.fit(X, y).transform(X)
        machines[-1].fit(X, y)
        Z = table.take_rows(test)
        for m in machines[:-1]:
            Z = m.transform(Z)
        pred = machines[-1].predict(Z).labels
        errors.append(100.0 * float(np.mean(pred != target.labels[test])))
    return errors


def oracle_all_all(space, registry, table, target, k, seed):
    """Brute-force ranking of every (sc, fx, lr) triple: list of (signature, mean, fold errors)."""
    rows = []
    for sc in space.scalers:
        for fx in space.extractors:
            for lr in space.learners:
                errs = oracle_cv([sc, fx, lr], registry, table, target, k, seed)
                rows.append((f"{sc} |> {fx} |> {lr}", float(np.mean(errs)), errs))
    order = sorted(range(len(rows)), key=lambda i: (rows[i][1], i))
    return [rows[i] for i in order]


class FakeEvaluator:
    """Evaluator stand-in: deterministic pseudo-errors from the signature, no fitting."""

    def __init__(self, k=10):
        self.k = k
        self.calls = 0

    def __call__(self, candidates, start=0):
        import hashlib

        from pipeforge.crossval import CvResult
        from pipeforge.search import CandidateResult

        out = []
        for i, c in enumerate(candidates, start):
            h = int.from_bytes(hashlib.sha256(c.signature.encode()).digest()[:4], "little")
            errs = [float((h >> j) % 40) for j in range(self.k)]
            out.append(CandidateResult(c, CvResult(c.signature, float(np.mean(errs)), float(np.std(errs, ddof=1)), errs), i))
            self.calls += 1
        return out


def yj_oracle_loglik(x, lam):
    """Independent Yeo-Johnson profile log-likelihood."""
    y = np.where(x >= 0,
                 np.log1p(x) if lam == 0 else ((x + 1) ** lam - 1) / lam,
                 -np.log1p(-x) if lam == 2 else -((1 - x) ** (2 - lam) - 1) / (2 - lam))
    return -0.5 * len(x) * np.log(y.var()) + (lam - 1) * np.sum(np.sign(x) * np.log1p(np.abs(x)))


def yj_grid_lambda(x, step=1e-3):
    grid = np.round(np.arange(-5, 5 + step / 2, step), 6)
    with np.errstate(all="ignore"):
        ll = np.array([yj_oracle_loglik(x, lam) for lam in grid])
    return grid[np.nanargmax(ll)]


def ica_recovery(seed):
    rng = np.random.default_rng(seed)
    S = rng.uniform(-1, 1, (2000, 2))
    A = rng.normal(size=(2, 2)) + np.eye(2)
    X = S @ A.T
    out = extract_apply(extract_fit("ica", DataTable.from_numeric(X), seed=seed), DataTable.from_numeric(X))
    C = np.abs(np.corrcoef(S.T, out.to_matrix().T)[:2, 2:])
    return max(C[0, 0] + C[1, 1], C[0, 1] + C[1, 0]) / 2, min(C.max(axis=1))


def random_na_table(rng):
    n, d = rng.integers(10, 80), rng.integers(1, 8)
    rate = rng.uniform(0, 0.3, d)
    cols = []
    for j in range(d):
        mask = rng.random(n) < rate[j]
        if rng.random() < 0.5:
            cols.append(Column.numeric(f"n{j}", np.where(mask, np.nan, rng.normal(size=n))))
        else:
            vals = rng.choice(["a", "b", "c"], n)
            cols.append(Column.categorical(f"c{j}", [None if m else v for v, m in zip(vals, mask)]))
    return DataTable(tuple(cols), int(n))


def cleaned_na_counts(count=100, seed=0):
    """NA counts after colnarm |> rownarm on ``count`` random tables that clean without error.

    Tables where cleaning raises must be ones where every column or every
    row goes; those are checked here and skipped.
    """
    rng = np.random.default_rng(seed)
    counts = []
    while len(counts) < count:
        t = random_na_table(rng)
        try:
            out = rownarm(colnarm(t))
        except DataError:
            kept = [c for c in t.columns if c.na_count <= 0.1 * t.n_rows]
            assert not kept or DataTable(tuple(kept), t.n_rows).row_na_mask().all()
            continue
        counts.append(out.na_count)
    return counts


IDENTS = st.builds(lambda a, b: a + b,
                   st.sampled_from("abcxyzAZ_"),
                   st.text("abz09_XY", max_size=5))


def canonical_asts(max_leaves=12):
    """Random flattened ASTs: Pipe children are never Pipes, Union children never Unions."""
    return st.recursive(
        IDENTS.map(Name),
        lambda kids: st.one_of(
            st.lists(kids, min_size=2, max_size=4).map(make_pipe),
            st.lists(kids, min_size=2, max_size=4).map(make_union),
        ),
        max_leaves=max_leaves,
    )


class Majority(Learner):
    """Predicts the most frequent training label (smallest on ties)."""

    def _fit_model(self, X, y, n_classes):
        self.code = int(np.argmax(np.bincount(y, minlength=n_classes)))

    def _predict_codes(self, X):
        return np.full(X.shape[0], self.code)


class RowProbe(Transformer):
    """Records the ``rowid`` values seen at fit and at transform."""

    log: list = []

    def _fit(self, table, target=None):
        RowProbe.log.append(("fit", frozenset(table["rowid"].data.tolist())))

    def _transform(self, table):
        RowProbe.log.append(("transform", frozenset(table["rowid"].data.tolist())))
        return table


def no_leakage_violations(registry, k=10, seed=0, n=120):
    rng = np.random.default_rng(seed)
    table = DataTable((Column.numeric("rowid", np.arange(n, dtype=float)),
                       Column.numeric("x", rng.normal(size=n))), n)
    target = TargetVector(rng.choice(["a", "b"], n))
    plan = make_folds(target, k, seed)
    RowProbe.log = []
    crossvalidate("rowprobe |> stdsc |> dt", registry, table, target, k, seed)
    fits = [rows for kind, rows in RowProbe.log if kind == "fit"]
    # each fold: fit, transform(train) during fit_transform, transform(test)
    tests = [rows for kind, rows in RowProbe.log if kind == "transform"][1::2]
    bad = 0
    for f in range(k):
        train, test = set(plan.train_rows(f).tolist()), set(plan.test_rows(f).tolist())
        bad += not (fits[f] <= train and fits[f].isdisjoint(test) and tests[f] == test)
    return len(fits), bad
