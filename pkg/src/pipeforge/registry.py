"""The default component registry.

Names are part of the persisted signature format; do not rename them.
"""

from __future__ import annotations

from functools import partial

from .core import ComponentKind, ComponentRegistry
from .data import Kind
from .learners import LEARNERS
from .transformers import (ColumnNARemover, Extractor, FeatureSelector, Noop, OneHotEncoder,
                           RowNARemover, Scaler)

SCALERS = {"stdsc": "standard", "minmax": "minmax", "robustsc": "robust", "norm": "normalizer",
           "powertf": "power"}
EXTRACTORS = {"pca": "pca", "ica": "ica", "fa": "fa"}

DEFAULT_SCALERS = ("noop", "stdsc", "minmax", "robustsc", "norm", "powertf")
DEFAULT_EXTRACTORS = ("noop", "pca", "ica", "fa")
DEFAULT_LEARNERS = ("rf", "ada", "dt", "gb", "lsvc", "rbfsvc")


def default_registry(learner_params: dict[str, dict] | None = None) -> ComponentRegistry:
    """All built-in components; ``learner_params`` overrides per-learner defaults.

    >>> default_registry({"rf": {"n_estimators": 10}}).create("rf").n_estimators
    10
    """
    learner_params = learner_params or {}
    unknown = set(learner_params) - set(LEARNERS)
    if unknown:
        raise KeyError(f"no such learners: {sorted(unknown)}")
    T, L = ComponentKind.TRANSFORMER, ComponentKind.LEARNER
    reg = ComponentRegistry()
    reg.register("catf", T, lambda seed: FeatureSelector(Kind.CATEGORICAL, seed))
    reg.register("numf", T, lambda seed: FeatureSelector(Kind.NUMERIC, seed))
    reg.register("ohe", T, lambda seed: OneHotEncoder(seed))
    reg.register("noop", T, lambda seed: Noop(seed))
    reg.register("colnarm", T, lambda seed: ColumnNARemover(seed))
    reg.register("rownarm", T, lambda seed: RowNARemover(seed))
    for name, mode in SCALERS.items():
        reg.register(name, T, partial(_scaler, mode))
    for name, mode in EXTRACTORS.items():
        reg.register(name, T, partial(_extractor, mode))
    for name, cls in LEARNERS.items():
        reg.register(name, L, partial(_learner, cls, dict(learner_params.get(name, {}))))
    return reg


def _scaler(mode, seed):
    return Scaler(mode, seed=seed)


def _extractor(mode, seed):
    return Extractor(mode, seed=seed)


def _learner(cls, params, seed):
    return cls(seed=seed, **params)
