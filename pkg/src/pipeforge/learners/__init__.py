"""Native classifiers for the six-learner roster."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core import Learner
from ..data import DataError, DataTable, TargetVector
from .svm import LinearSVM, RbfSVM
from .trees import AdaBoost, DecisionTree, GradientBoosting, RandomForest, Tree, binomial_deviance

LEARNERS: dict[str, type[Learner]] = {
    "rf": RandomForest,
    "ada": AdaBoost,
    "dt": DecisionTree,
    "gb": GradientBoosting,
    "lsvc": LinearSVM,
    "rbfsvc": RbfSVM,
}


@dataclass(frozen=True)
class LearnerConfig:
    mode: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.mode not in LEARNERS:
            raise ValueError(f"unknown learner mode {self.mode!r}")
        for key in ("n_estimators", "epochs", "min_leaf"):
            if key in self.params and self.params[key] <= 0:
                raise ValueError(f"{key} must be positive")

    def build(self) -> Learner:
        return LEARNERS[self.mode](seed=self.seed, **self.params)


def learner_fit(config: LearnerConfig, features: DataTable, target: TargetVector) -> Learner:
    """Train a learner; unlike workflow use, a single-class target is an error."""
    if features.n_cols == 0:
        raise DataError("no features to learn from")
    if target.n_classes < 2:
        raise DataError("target has a single class")
    return config.build().fit(features, target)


def learner_predict(model: Learner, features: DataTable) -> TargetVector:
    return model.predict(features)


__all__ = [
    "LEARNERS", "LearnerConfig", "learner_fit", "learner_predict", "AdaBoost", "DecisionTree",
    "GradientBoosting", "LinearSVM", "RandomForest", "RbfSVM", "Tree", "binomial_deviance",
]
