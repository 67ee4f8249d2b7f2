"""Pipeline search: exhaustive (all-all) and the two-stage one-all / all-one strategies.

A preprocessing pipeline (PRPL) is a union of one or two ``(scaler |>
extractor)`` blocks; a candidate is a PRPL followed by a learner.  Every
candidate in a run is cross-validated with the same fold plan and seed, so
a signature gets the same :class:`CvResult` no matter which strategy
evaluates it.
"""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import ComponentKind, ComponentRegistry
from .crossval import CvResult, crossvalidate
from .data import DataTable, Kind, TargetVector, hconcat
from .expr import ExprAst, Name, make_pipe, make_union, parse, render
from .registry import DEFAULT_EXTRACTORS, DEFAULT_LEARNERS, DEFAULT_SCALERS, default_registry
from .transformers import OneHotEncoder, colnarm, rownarm_rows

log = logging.getLogger(__name__)

BASE_PIPELINE = "colnarm |> rownarm |> (catf |> ohe) + numf"
DEFAULT_SURROGATE_PIPELINE = "(catf |> ohe) + numf |> robustsc"
DEFAULT_SURROGATE_LEARNER = "rf"
STRATEGIES = ("all_all", "one_all", "all_one")
FAILED_ERR = 100.0


@dataclass(frozen=True)
class SearchSpace:
    scalers: tuple[str, ...] = DEFAULT_SCALERS
    extractors: tuple[str, ...] = DEFAULT_EXTRACTORS
    learners: tuple[str, ...] = DEFAULT_LEARNERS

    def __post_init__(self):
        for field_name in ("scalers", "extractors", "learners"):
            names = tuple(getattr(self, field_name))
            if len(set(names)) != len(names):
                raise ValueError(f"duplicate names in {field_name}: {names}")
            if not names:
                raise ValueError(f"empty {field_name} list")
            object.__setattr__(self, field_name, names)

    def validate(self, registry: ComponentRegistry) -> "SearchSpace":
        for name in self.scalers + self.extractors:
            if registry.kind(name) is not ComponentKind.TRANSFORMER:
                raise ValueError(f"{name!r} is not a transformer")
        for name in self.learners:
            if registry.kind(name) is not ComponentKind.LEARNER:
                raise ValueError(f"{name!r} is not a learner")
        return self

    def restrict(self, names: Sequence[str]) -> "SearchSpace":
        """Keep only the listed names, preserving order."""
        keep = set(names)
        return SearchSpace(tuple(n for n in self.scalers if n in keep),
                           tuple(n for n in self.extractors if n in keep),
                           tuple(n for n in self.learners if n in keep))

    def blocks(self) -> list[tuple[str, str]]:
        return [(sc, fx) for sc in self.scalers for fx in self.extractors]


def block_ast(block: tuple[str, str]) -> ExprAst:
    return make_pipe([Name(block[0]), Name(block[1])])


@dataclass(frozen=True)
class Prpl:
    """A preprocessing pipeline and the blocks it was built from (empty if free-form)."""

    ast: ExprAst
    blocks: tuple[tuple[str, str], ...] = ()

    @classmethod
    def from_blocks(cls, *blocks) -> "Prpl":
        return cls(make_union([block_ast(b) for b in blocks]), tuple(blocks))


@dataclass(frozen=True)
class Candidate:
    prpl: Prpl
    learner: str

    @property
    def ast(self) -> ExprAst:
        return make_pipe([self.prpl.ast, Name(self.learner)])

    @property
    def signature(self) -> str:
        return render(self.ast)

    def block_fields(self) -> dict[str, str]:
        b = self.prpl.blocks
        return {
            "sc1": b[0][0] if b else "",
            "fx1": b[0][1] if b else "",
            "sc2": b[1][0] if len(b) > 1 else "",
            "fx2": b[1][1] if len(b) > 1 else "",
            "learner": self.learner,
        }


@dataclass
class CandidateResult:
    candidate: Candidate
    cv: CvResult
    index: int
    failed: bool = False
    error: str | None = None

    @property
    def signature(self) -> str:
        return self.cv.signature

    @property
    def mean_err(self) -> float:
        return self.cv.mean_err

    @property
    def block_fields(self) -> dict[str, str]:
        return self.candidate.block_fields()


@dataclass
class StrategyReport:
    strategy: str
    best: CandidateResult
    ranked: list[CandidateResult]
    cv_op_count: int
    wall_time: float
    k: int
    blocks: int = 1
    stages: list[list[CandidateResult]] = field(default_factory=list, repr=False)

    @property
    def n_candidates(self) -> int:
        return len(self.ranked)


def one_block_prpls(space: SearchSpace) -> list[Prpl]:
    return [Prpl.from_blocks(b) for b in space.blocks()]


def two_block_prpls(space: SearchSpace) -> list[Prpl]:
    """Ordered pairs of distinct blocks."""
    blocks = space.blocks()
    return [Prpl.from_blocks(b1, b2) for b1 in blocks for b2 in blocks if b1 != b2]


def prpls_for(space: SearchSpace, blocks: int) -> list[Prpl]:
    if blocks == 1:
        return one_block_prpls(space)
    if blocks == 2:
        return two_block_prpls(space)
    raise ValueError("blocks must be 1 or 2")


def enumerate_one_block(space: SearchSpace) -> list[Candidate]:
    return [Candidate(p, lr) for p in one_block_prpls(space) for lr in space.learners]


def enumerate_two_block(space: SearchSpace) -> list[Candidate]:
    return [Candidate(p, lr) for p in two_block_prpls(space) for lr in space.learners]


def base_clean(table: DataTable, target: TargetVector) -> tuple[DataTable, TargetVector]:
    """colnarm (10%) |> rownarm |> (catf |> ohe) + numf, keeping the target aligned."""
    cleaned = colnarm(table)
    rows = rownarm_rows(cleaned)
    cleaned, target = cleaned.take_rows(rows), target.take(rows)
    encoded = OneHotEncoder().fit_transform(cleaned.select(Kind.CATEGORICAL))
    return hconcat(encoded, cleaned.select(Kind.NUMERIC)), target


# ---------------------------------------------------------------------------
# evaluation


class Evaluator:
    """Cross-validates candidates, optionally on a thread pool.

    Results come back in submission order; a candidate that raises gets a
    100% error sentinel and ``failed=True``.
    """

    def __init__(self, table: DataTable, target: TargetVector, k: int = 10, seed: int = 0,
                 registry: ComponentRegistry | None = None, threads: int = 1):
        self.table = table
        self.target = target
        self.k = k
        self.seed = seed
        self.registry = registry or default_registry()
        self.threads = max(1, int(threads))

    def evaluate_one(self, candidate: Candidate, index: int) -> CandidateResult:
        try:
            cv = crossvalidate(candidate.ast, self.registry, self.table, self.target, self.k, self.seed)
            return CandidateResult(candidate, cv, index)
        except Exception as exc:  # record-and-continue
            log.warning("candidate %s failed: %s", candidate.signature, exc)
            cv = CvResult(candidate.signature, FAILED_ERR, 0.0, [FAILED_ERR] * self.k)
            return CandidateResult(candidate, cv, index, failed=True, error=f"{type(exc).__name__}: {exc}")

    def __call__(self, candidates: Sequence[Candidate], start: int = 0) -> list[CandidateResult]:
        jobs = list(enumerate(candidates, start))
        if self.threads == 1 or len(jobs) < 2:
            return [self.evaluate_one(c, i) for i, c in jobs]
        with ThreadPoolExecutor(self.threads) as pool:
            return list(pool.map(lambda job: self.evaluate_one(job[1], job[0]), jobs))


def _rank(results: list[CandidateResult]) -> list[CandidateResult]:
    return sorted(results, key=lambda r: (r.mean_err, r.index))


def _report(strategy, stages, k, blocks, started) -> StrategyReport:
    everything = [r for stage in stages for r in stage]
    best = _rank(stages[-1])[0]
    return StrategyReport(strategy, best, _rank(everything), k * len(everything),
                          time.perf_counter() - started, k, blocks, stages)


def all_all(space: SearchSpace, evaluator: Evaluator | Callable, blocks: int = 1) -> StrategyReport:
    """Cross-validate every (PRPL, learner) pair."""
    started = time.perf_counter()
    cands = enumerate_one_block(space) if blocks == 1 else enumerate_two_block(space)
    return _report("all_all", [evaluator(cands)], evaluator.k, blocks, started)


def one_all(space: SearchSpace, evaluator: Evaluator | Callable,
            surrogate_learner: str = DEFAULT_SURROGATE_LEARNER) -> StrategyReport:
    """Stage 1: all one-block PRPLs with a fixed learner.  Stage 2: all learners on the winner."""
    if surrogate_learner not in space.learners:
        raise ValueError(f"surrogate learner {surrogate_learner!r} is not in the search space")
    started = time.perf_counter()
    stage1 = evaluator([Candidate(p, surrogate_learner) for p in one_block_prpls(space)])
    winner = _rank(stage1)[0].candidate.prpl
    stage2 = evaluator([Candidate(winner, lr) for lr in space.learners], start=len(stage1))
    return _report("one_all", [stage1, stage2], evaluator.k, 1, started)


def all_one(space: SearchSpace, evaluator: Evaluator | Callable, blocks: int = 1,
            surrogate_pipeline: ExprAst | str = DEFAULT_SURROGATE_PIPELINE,
            learners: Sequence[str] | None = None,
            prpls: Sequence[Prpl] | None = None) -> StrategyReport:
    """Stage 1: all learners atop a fixed pipeline.  Stage 2: all PRPLs with the winning learner.

    ``learners`` and ``prpls`` override the space's lists (used by surrogate
    pruning).  The reported best comes from stage 2.
    """
    if isinstance(surrogate_pipeline, str):
        surrogate_pipeline = parse(surrogate_pipeline)
    started = time.perf_counter()
    learners = list(space.learners if learners is None else learners)
    prpls = list(prpls_for(space, blocks) if prpls is None else prpls)
    if not learners or not prpls:
        raise ValueError("all_one needs at least one learner and one PRPL")
    base = Prpl(surrogate_pipeline)
    stage1 = evaluator([Candidate(base, lr) for lr in learners])
    best_learner = _rank(stage1)[0].candidate.learner
    stage2 = evaluator([Candidate(p, best_learner) for p in prpls], start=len(stage1))
    return _report("all_one", [stage1, stage2], evaluator.k, blocks, started)


def run_strategy(strategy: str, space: SearchSpace, evaluator, blocks: int = 1,
                 surrogate_learner: str = DEFAULT_SURROGATE_LEARNER,
                 surrogate_pipeline: ExprAst | str = DEFAULT_SURROGATE_PIPELINE) -> StrategyReport:
    strategy = strategy.replace("-", "_")
    if strategy == "all_all":
        return all_all(space, evaluator, blocks)
    if strategy == "one_all":
        if blocks != 1:
            raise ValueError("one_all searches one-block pipelines only")
        return one_all(space, evaluator, surrogate_learner)
    if strategy == "all_one":
        return all_one(space, evaluator, blocks, surrogate_pipeline)
    raise ValueError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# budgets and output


def exhaustive_cv_ops(space: SearchSpace, k: int, blocks: int = 1) -> int:
    return k * len(prpls_for(space, blocks)) * len(space.learners)


def planned_candidates(strategy: str, space: SearchSpace, blocks: int = 1) -> int:
    strategy = strategy.replace("-", "_")
    n_prpl = len(prpls_for(space, blocks))
    if strategy == "all_all":
        return n_prpl * len(space.learners)
    if strategy == "one_all":
        return len(one_block_prpls(space)) + len(space.learners)
    return len(space.learners) + n_prpl


def summary_line(report: StrategyReport, space: SearchSpace) -> str:
    best = report.best
    exhaustive = exhaustive_cv_ops(space, report.k, report.blocks)
    ratio = exhaustive / report.cv_op_count
    return (f"strategy={report.strategy} blocks={report.blocks} best={best.signature!r} "
            f"mean_err={best.mean_err:.2f}±{best.cv.std_err:.2f} candidates={report.n_candidates} "
            f"cv_ops={report.cv_op_count} ({ratio:.1f}x fewer than exhaustive {exhaustive}) "
            f"wall_time={report.wall_time:.2f}s")


RESULT_COLUMNS = ["signature", "strategy", "mean_err", "std_err", "wall_time_s", "rank_in_run",
                  "sc1", "fx1", "sc2", "fx2", "learner"]


def write_results(path, report: StrategyReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for rank, r in enumerate(report.ranked, start=1):
            f = r.block_fields
            writer.writerow([r.signature, report.strategy, repr(r.cv.mean_err), repr(r.cv.std_err),
                             f"{r.cv.wall_time:.6f}", rank, f["sc1"], f["fx1"], f["sc2"], f["fx2"],
                             f["learner"]])


def read_results(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def mean_errors(report: StrategyReport) -> np.ndarray:
    return np.array([r.mean_err for r in report.ranked])
