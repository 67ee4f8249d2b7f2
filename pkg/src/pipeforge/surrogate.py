"""Metafeature surrogates that prune the two-block all-one search.

PRP surrogates predict the pipeline complexity category (from the number of
``noop`` slots in the optimal two-block signature); LR surrogates predict
the learner group (Ensemble or SVM).  Both are random forests over a fixed
vector of twelve dataset metafeatures.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .core import ComponentRegistry
from .data import DataError, DataTable, TargetVector
from .expr import Name, Pipe, Union, parse
from .learners import RandomForest, Tree
from .search import (Evaluator, Prpl, SearchSpace, all_one, base_clean, two_block_prpls)

log = logging.getLogger(__name__)

FORMAT = "pipeforge-surrogate"
LEARNER_GROUPS = {"Ensemble": ("rf", "ada", "gb", "dt"), "SVM": ("lsvc", "rbfsvc")}
KINDS = ("PRP", "LR")


@dataclass(frozen=True)
class Metafeatures:
    n_rows: float
    n_cols: float
    n_numeric: float
    n_categorical: float
    n_classes: float
    class_entropy: float
    na_fraction: float
    dimensionality_ratio: float
    mean_abs_skewness: float
    mean_kurtosis: float
    mean_abs_correlation: float
    mean_cardinality: float

    @classmethod
    def names(cls) -> list[str]:
        return list(cls.__dataclass_fields__)

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in self.names()], dtype=np.float64)


def _finite_mean(values) -> float:
    vals = [v for v in values if np.isfinite(v)]
    return float(np.mean(vals)) if vals else 0.0


def extract_metafeatures(table: DataTable, target: TargetVector) -> Metafeatures:
    """Twelve descriptors of a raw table; missing cells are skipped per statistic."""
    n, d = table.shape
    numeric = [c for c in table.columns if c.is_numeric]
    categorical = [c for c in table.columns if not c.is_numeric]
    counts = np.bincount(np.asarray(target.codes), minlength=target.n_classes) if len(target) else np.array([])
    p = counts[counts > 0] / counts.sum() if len(counts) else np.array([])
    entropy = float(-np.sum(p * np.log(p))) if len(p) else 0.0

    skews, kurts = [], []
    for col in numeric:
        x = col.data[~col.na_mask]
        if len(x) > 2 and np.ptp(x) > 0:
            skews.append(abs(stats.skew(x)))
            kurts.append(stats.kurtosis(x))
    corrs = []
    for i in range(len(numeric)):
        for j in range(i + 1, len(numeric)):
            a, b = numeric[i], numeric[j]
            ok = ~(a.na_mask | b.na_mask)
            x, y = a.data[ok], b.data[ok]
            if len(x) > 2 and np.ptp(x) > 0 and np.ptp(y) > 0:
                corrs.append(abs(np.corrcoef(x, y)[0, 1]))
    cards = [len(np.unique(c.data[~c.na_mask])) for c in categorical]
    return Metafeatures(
        n_rows=float(n),
        n_cols=float(d),
        n_numeric=float(len(numeric)),
        n_categorical=float(len(categorical)),
        n_classes=float(target.n_classes),
        class_entropy=entropy,
        na_fraction=table.na_count / (n * d) if n * d else 0.0,
        dimensionality_ratio=d / n if n else 0.0,
        mean_abs_skewness=_finite_mean(skews),
        mean_kurtosis=_finite_mean(kurts),
        mean_abs_correlation=_finite_mean(corrs),
        mean_cardinality=_finite_mean(cards),
    )


def _two_block_slots(ast) -> list[str]:
    if isinstance(ast, Pipe) and isinstance(ast.children[0], Union) and len(ast.children) == 2:
        ast = ast.children[0]
    if not (isinstance(ast, Union) and len(ast.children) == 2):
        raise ValueError("not a two-block signature")
    slots = []
    for block in ast.children:
        if not (isinstance(block, Pipe) and len(block.children) == 2
                and all(isinstance(c, Name) for c in block.children)):
            raise ValueError("two-block signatures need (sc |> fx) blocks")
        slots.extend(c.id for c in block.children)
    return slots


def category_of_noops(n: int) -> int:
    return 1 if n <= 1 else min(n, 4)


def complexity_of_signature(signature: str) -> int:
    """Complexity category 1-4 of a two-block signature (more noops, higher category)."""
    slots = _two_block_slots(parse(signature))
    return category_of_noops(sum(s == "noop" for s in slots))


def prpl_category(prpl: Prpl) -> int:
    return category_of_noops(sum(name == "noop" for block in prpl.blocks for name in block))


def learner_group(learner: str) -> str:
    for group, members in LEARNER_GROUPS.items():
        if learner in members:
            return group
    raise KeyError(f"learner {learner!r} belongs to no group")


# ---------------------------------------------------------------------------
# models


def _forest_to_dict(forest: RandomForest) -> dict:
    return {
        "n_estimators": forest.n_estimators,
        "max_features": forest.max_features,
        "n_classes": forest.n_classes,
        "seed": forest.seed,
        "trees": [t.to_dict() for t in forest.trees],
    }


def _forest_from_dict(d: dict, columns: list[str], classes: list[str]) -> RandomForest:
    forest = RandomForest(seed=d["seed"], n_estimators=d["n_estimators"], max_features=d["max_features"])
    forest.trees = [Tree.from_dict(t) for t in d["trees"]]
    forest.n_classes = d["n_classes"]
    forest.class_set = tuple(classes)
    forest.columns_ = list(columns)
    forest._constant = None
    forest.fitted = True
    return forest


@dataclass
class SurrogateModel:
    kind: str
    forest: RandomForest
    classes: list[str]
    manifest: dict = field(default_factory=dict)

    @property
    def feature_names(self) -> list[str]:
        return Metafeatures.names()

    def predict(self, mf: Metafeatures) -> str:
        row = DataTable.from_numeric(mf.to_array()[None, :], self.feature_names)
        return str(self.forest.predict(row).labels[0])

    def predict_category(self, mf: Metafeatures) -> int:
        if self.kind != "PRP":
            raise ValueError("only PRP surrogates predict complexity categories")
        return int(self.predict(mf))

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": 1,
            "kind": self.kind,
            "feature_names": self.feature_names,
            "classes": list(self.classes),
            "learner_groups": {k: list(v) for k, v in LEARNER_GROUPS.items()},
            "forest": _forest_to_dict(self.forest),
            "manifest": self.manifest,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SurrogateModel":
        if d.get("format") != FORMAT:
            raise DataError("not a surrogate model document")
        if d.get("kind") not in KINDS:
            raise DataError(f"unknown surrogate kind {d.get('kind')!r}")
        if d.get("feature_names") != Metafeatures.names():
            raise DataError("surrogate was trained on a different metafeature set")
        forest = _forest_from_dict(d["forest"], d["feature_names"], d["classes"])
        return cls(d["kind"], forest, list(d["classes"]), d.get("manifest", {}))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "SurrogateModel":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: malformed surrogate model ({exc})") from exc
        try:
            return cls.from_dict(doc)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DataError):
                raise
            raise DataError(f"{path}: malformed surrogate model ({exc})") from exc


@dataclass
class CorpusEntry:
    """Outcome of the two-block all-one search on one corpus dataset."""

    name: str
    metafeatures: Metafeatures
    signature: str
    learner: str
    mean_err: float

    @property
    def category(self) -> int:
        return complexity_of_signature(self.signature)

    @property
    def group(self) -> str:
        return learner_group(self.learner)

    def label(self, kind: str) -> str:
        return str(self.category) if kind == "PRP" else self.group


def survey_corpus(corpus, space: SearchSpace, k: int = 10, seed: int = 0,
                  registry: ComponentRegistry | None = None, threads: int = 1,
                  names: list[str] | None = None) -> list[CorpusEntry]:
    """Run the two-block all-one search on each raw (table, target) pair."""
    entries = []
    for i, (table, target) in enumerate(corpus):
        name = names[i] if names else f"dataset{i}"
        mf = extract_metafeatures(table, target)
        clean, y = base_clean(table, target)
        report = all_one(space, Evaluator(clean, y, k, seed, registry, threads), blocks=2)
        best = report.best
        log.info("%s: optimum %s (%.2f%%)", name, best.signature, best.mean_err)
        entries.append(CorpusEntry(name, mf, best.signature, best.candidate.learner, best.mean_err))
    return entries


def fit_surrogate(kind: str, entries: list[CorpusEntry], seed: int = 0) -> SurrogateModel:
    kind = kind.upper()
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if len(entries) < 2:
        raise DataError("a surrogate needs at least two corpus datasets")
    labels = [e.label(kind) for e in entries]
    if len(set(labels)) < 2:
        raise DataError(f"degenerate corpus: every dataset has {kind} label {labels[0]!r}")
    X = np.vstack([e.metafeatures.to_array() for e in entries])
    forest = RandomForest(seed=seed).fit(DataTable.from_numeric(X, Metafeatures.names()),
                                         TargetVector(np.array(labels, dtype=str)))
    manifest = {
        "datasets": [e.name for e in entries],
        "labels": labels,
        "signatures": [e.signature for e in entries],
        "mean_errors": [e.mean_err for e in entries],
        "metafeatures": [asdict(e.metafeatures) for e in entries],
        "seed": seed,
    }
    return SurrogateModel(kind, forest, list(forest.class_set), manifest)


def train_surrogate(kind: str, corpus, space: SearchSpace, k: int = 10, seed: int = 0,
                    registry: ComponentRegistry | None = None, threads: int = 1,
                    names: list[str] | None = None) -> SurrogateModel:
    entries = survey_corpus(corpus, space, k, seed, registry, threads, names)
    return fit_surrogate(kind, entries, seed)


# ---------------------------------------------------------------------------
# pruning


@dataclass
class PrunedSpace:
    learners: list[str]
    prpls: list[Prpl]
    category: int | None
    group: str | None
    unpruned_candidates: int
    fallbacks: list[str] = field(default_factory=list)

    @property
    def candidates(self) -> int:
        """Candidates an all-one run over this set evaluates (both stages)."""
        return len(self.learners) + len(self.prpls)

    @property
    def reduction(self) -> float:
        return self.unpruned_candidates / self.candidates


def prune_space(space: SearchSpace, prp: SurrogateModel | None, lr: SurrogateModel | None,
                table: DataTable, target: TargetVector) -> PrunedSpace:
    """Restrict learners by predicted group and two-block PRPLs by predicted complexity.

    PRPLs at the predicted category or simpler (higher category) survive.
    For category 4 the only survivor is the self-paired all-noop PRPL.
    An empty restriction falls back to the unpruned list with a warning.
    """
    mf = extract_metafeatures(table, target)
    full = two_block_prpls(space)
    learners, prpls = list(space.learners), full
    category = group = None
    fallbacks = []
    if prp is not None:
        category = prp.predict_category(mf)
        prpls = [p for p in full if prpl_category(p) >= category]
        if not prpls and category == 4 and "noop" in space.scalers and "noop" in space.extractors:
            prpls = [Prpl.from_blocks(("noop", "noop"), ("noop", "noop"))]
        if not prpls:
            warnings.warn(f"category {category} leaves no PRPL; using the full list")
            fallbacks.append("prp")
            prpls = full
    if lr is not None:
        group = lr.predict(mf)
        learners = [name for name in space.learners if name in LEARNER_GROUPS.get(group, ())]
        if not learners:
            warnings.warn(f"group {group} has no learner in the space; using all learners")
            fallbacks.append("lr")
            learners = list(space.learners)
    return PrunedSpace(learners, prpls, category, group, len(space.learners) + len(full), fallbacks)


def pruned_all_one(space: SearchSpace, pruned: PrunedSpace, evaluator):
    return all_one(space, evaluator, blocks=2, learners=pruned.learners, prpls=pruned.prpls)
