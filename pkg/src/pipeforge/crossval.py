"""Stratified k-fold cross-validation of pipeline expressions.

Results are a pure function of (expression, registry, data, k, seed): fold
plans and per-fold workflow seeds are derived from the seed only, so running
folds on a thread pool gives the same numbers as running them serially.
"""

from __future__ import annotations

import time
from concurrent.futures import Executor
from dataclasses import dataclass, field

import numpy as np

from .core import ComponentRegistry, CompileError, compile_workflow, derive_seed, predictions_of
from .data import DataTable, TargetVector
from .expr import ExprAst, parse, render


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


@dataclass
class CvResult:
    signature: str
    mean_err: float
    std_err: float
    fold_errors: list[float]
    wall_time: float = 0.0
    std_kind: str = field(default="sample", repr=False)

    def scores(self) -> tuple:
        """Everything except timing, for determinism checks."""
        return self.signature, self.mean_err, self.std_err, tuple(self.fold_errors)


def make_folds(target: TargetVector, k: int, seed: int = 0) -> FoldPlan:
    """Shuffle each class (in class order) and deal it round-robin to folds.

    Dealing continues from where the previous class stopped, so small
    classes spread over different folds and ``k == n_rows`` is leave-one-out.
    """
    n = len(target)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of rows ({n})")
    rng = np.random.default_rng(seed)
    codes = np.asarray(target.codes)
    assignments = np.empty(n, dtype=np.int64)
    offset = 0
    for c in range(target.n_classes):
        members = rng.permutation(np.flatnonzero(codes == c))
        assignments[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    return FoldPlan(k, assignments)


def fold_error(ast: ExprAst, registry: ComponentRegistry, table: DataTable, target: TargetVector,
               plan: FoldPlan, fold: int, seed: int) -> float:
    """Percent misclassified on one held-out fold."""
    train, test = plan.train_rows(fold), plan.test_rows(fold)
    wf = compile_workflow(ast, registry, derive_seed(seed, "fold", fold))
    wf.fit_transform(table.take_rows(train), target.take(train))
    pred = predictions_of(wf.transform(table.take_rows(test)))
    return 100.0 * float(np.mean(pred != target.labels[test]))


def crossvalidate(ast: ExprAst | str, registry: ComponentRegistry, table: DataTable,
                  target: TargetVector, k: int = 10, seed: int = 0,
                  executor: Executor | None = None) -> CvResult:
    if isinstance(ast, str):
        ast = parse(ast)
    probe = compile_workflow(ast, registry, seed)
    if not probe.is_learner:
        raise CompileError(f"{render(ast)!r} does not end in a learner")
    if len(target) != table.n_rows:
        raise ValueError("target length does not match the table")
    start = time.perf_counter()
    plan = make_folds(target, k, seed)
    args = (ast, registry, table, target, plan)
    if executor is None:
        errors = [fold_error(*args, f, seed) for f in range(k)]
    else:
        errors = list(executor.map(lambda f: fold_error(*args, f, seed), range(k)))
    errs = np.asarray(errors)
    return CvResult(
        signature=render(ast),
        mean_err=float(errs.mean()),
        std_err=float(errs.std(ddof=1)),
        fold_errors=[float(e) for e in errs],
        wall_time=time.perf_counter() - start,
    )
