"""Machines, workflows and the component registry.

Every component is a :class:`Machine` with ``fit(table, target)`` and
``transform(table)``.  Workflows compose machines: a :class:`PipelineNode`
threads a table through its elements left to right, a :class:`ComboNode`
feeds the same input to every child and concatenates their outputs.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .data import Column, DataError, DataTable, Kind, TargetVector, hconcat
from .expr import ExprAst, Name, Pipe


class NotFittedError(RuntimeError):
    pass


class WorkflowError(RuntimeError):
    """A component failed; ``path`` locates it in the workflow tree."""

    def __init__(self, path: str, name: str, cause: BaseException):
        super().__init__(f"{name} at {path or 'root'}: {type(cause).__name__}: {cause}")
        self.path = path
        self.name = name
        self.cause = cause


class CompileError(ValueError):
    pass


class ComponentKind(str, Enum):
    TRANSFORMER = "Transformer"
    LEARNER = "Learner"


def derive_seed(seed: int, *path) -> int:
    """Stable 63-bit seed from a base seed and a path of labels."""
    key = ":".join([str(int(seed))] + [str(p) for p in path]).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little") >> 1


class Machine:
    kind: ComponentKind = ComponentKind.TRANSFORMER
    stateful = True

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.fitted = False

    def fit(self, table: DataTable, target: TargetVector | None = None) -> "Machine":
        self._fit(table, target)
        self.fitted = True
        return self

    def transform(self, table: DataTable) -> DataTable:
        if self.stateful and not self.fitted:
            raise NotFittedError(f"{type(self).__name__}.transform called before fit")
        return self._transform(table)

    def fit_transform(self, table: DataTable, target: TargetVector | None = None) -> DataTable:
        return self.fit(table, target).transform(table)

    def _fit(self, table, target):
        pass

    def _transform(self, table):
        raise NotImplementedError


class Transformer(Machine):
    kind = ComponentKind.TRANSFORMER

    def kept_rows(self, table: DataTable) -> np.ndarray | None:
        """Row indices retained by ``transform``; None if rows are untouched."""
        return None


class Learner(Machine):
    """Base class for classifiers.

    Subclasses implement ``_fit_model(X, y_codes, n_classes)`` and
    ``_predict_codes(X)``.  ``transform`` returns a one-column table named
    ``prediction``.  A training target with a single class yields a
    constant predictor instead of an error.
    """

    kind = ComponentKind.LEARNER

    def _fit(self, table, target):
        if target is None:
            raise ValueError("learners need a target to fit")
        if len(target) != table.n_rows:
            raise DataError(f"target length {len(target)} != {table.n_rows} rows")
        self.class_set = target.class_set
        self.columns_ = table.names
        X = table.to_matrix()
        self._constant = None
        if target.n_classes < 2:
            self._constant = 0
            return
        if X.shape[1] == 0:
            raise DataError("cannot fit a learner on zero features")
        self._fit_model(X, np.asarray(target.codes), target.n_classes)

    def predict_codes(self, table: DataTable) -> np.ndarray:
        if not self.fitted:
            raise NotFittedError(f"{type(self).__name__} used before fit")
        if table.names != self.columns_:
            raise DataError(f"schema mismatch: fitted on {self.columns_}, got {table.names}")
        if self._constant is not None:
            return np.full(table.n_rows, self._constant, dtype=np.int64)
        return self._predict_codes(table.to_matrix())

    def predict(self, table: DataTable) -> TargetVector:
        codes = self.predict_codes(table)
        return TargetVector(np.array(self.class_set, dtype=str)[codes])

    def _transform(self, table):
        return prediction_table(self.predict_codes(table), self.class_set)

    def _fit_model(self, X, y, n_classes):
        raise NotImplementedError

    def _predict_codes(self, X):
        raise NotImplementedError


def prediction_table(codes: np.ndarray, class_set) -> DataTable:
    col = Column("prediction", Kind.CATEGORICAL, np.asarray(codes, dtype=np.int32),
                 np.zeros(len(codes), dtype=bool), tuple(class_set))
    return DataTable((col,), len(codes))


def predictions_of(table: DataTable) -> np.ndarray:
    """Decoded labels of a learner output table."""
    return table["prediction"].labels()


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class RegistryEntry:
    kind: ComponentKind
    factory: Callable[[int], Machine]


class ComponentRegistry:
    def __init__(self, entries: dict[str, RegistryEntry] | None = None):
        self.entries: dict[str, RegistryEntry] = dict(entries or {})

    def register(self, name: str, kind: ComponentKind, factory: Callable[[int], Machine]) -> None:
        self.entries[name] = RegistryEntry(ComponentKind(kind), factory)

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __getitem__(self, name: str) -> RegistryEntry:
        try:
            return self.entries[name]
        except KeyError:
            raise KeyError(f"unregistered component {name!r}") from None

    def kind(self, name: str) -> ComponentKind:
        return self[name].kind

    def create(self, name: str, seed: int = 0) -> Machine:
        return self[name].factory(seed)

    def names(self, kind: ComponentKind | None = None) -> list[str]:
        return [n for n, e in self.entries.items() if kind is None or e.kind is kind]

    def copy(self) -> "ComponentRegistry":
        return ComponentRegistry(self.entries)


# ---------------------------------------------------------------------------
# workflows


class Workflow:
    path: str = ""

    def fit_transform(self, table: DataTable, target: TargetVector | None) -> DataTable:
        raise NotImplementedError

    def transform(self, table: DataTable) -> DataTable:
        raise NotImplementedError

    @property
    def is_learner(self) -> bool:
        return False


class LeafMachine(Workflow):
    def __init__(self, name: str, machine: Machine, path: str = ""):
        self.name = name
        self.machine = machine
        self.path = path

    @property
    def is_learner(self) -> bool:
        return self.machine.kind is ComponentKind.LEARNER

    def _guard(self, fn, *args):
        try:
            return fn(*args)
        except WorkflowError:
            raise
        except Exception as exc:
            raise WorkflowError(self.path, self.name, exc) from exc

    def fit_transform(self, table, target):
        return self._guard(self.machine.fit_transform, table, target)

    def transform(self, table):
        return self._guard(self.machine.transform, table)

    def kept_rows(self, table):
        if isinstance(self.machine, Transformer):
            return self.machine.kept_rows(table)
        return None

    def __repr__(self):
        return f"LeafMachine({self.name})"


class PipelineNode(Workflow):
    def __init__(self, elements: list[Workflow], path: str = ""):
        self.elements = list(elements)
        self.path = path

    @property
    def is_learner(self) -> bool:
        return self.elements[-1].is_learner

    def fit_transform(self, table, target):
        for el in self.elements:
            rows = el.kept_rows(table) if isinstance(el, LeafMachine) else None
            out = el.fit_transform(table, target)
            if rows is not None and target is not None:
                target = target.take(rows)
            table = out
        return table

    def transform(self, table):
        for el in self.elements:
            table = el.transform(table)
        return table

    def __repr__(self):
        return f"PipelineNode{self.elements!r}"


class ComboNode(Workflow):
    def __init__(self, children: list[Workflow], path: str = ""):
        self.children = list(children)
        self.path = path

    def _union(self, outputs):
        out = outputs[0]
        for o in outputs[1:]:
            try:
                out = hconcat(out, o)
            except DataError as exc:
                raise WorkflowError(self.path, "union", exc) from exc
        return out

    def fit_transform(self, table, target):
        return self._union([c.fit_transform(table, target) for c in self.children])

    def transform(self, table):
        return self._union([c.transform(table) for c in self.children])

    def __repr__(self):
        return f"ComboNode{self.children!r}"


def _contains_learner(w: Workflow) -> bool:
    if isinstance(w, LeafMachine):
        return w.is_learner
    kids = w.elements if isinstance(w, PipelineNode) else w.children
    return any(_contains_learner(k) for k in kids)


def compile_workflow(ast: ExprAst, registry: ComponentRegistry, seed: int = 0) -> Workflow:
    """Build a fresh, unfitted workflow; each leaf is seeded from its tree path."""

    def build(node, path: tuple[int, ...]) -> Workflow:
        label = ".".join(map(str, path))
        if isinstance(node, Name):
            if node.id not in registry:
                raise CompileError(f"unregistered component {node.id!r}")
            machine = registry.create(node.id, derive_seed(seed, label))
            return LeafMachine(node.id, machine, label)
        kids = [build(c, path + (i,)) for i, c in enumerate(node.children)]
        if isinstance(node, Pipe):
            for k in kids[:-1]:
                if _contains_learner(k):
                    raise CompileError(f"learner in non-terminal pipeline position at {k.path}")
            return PipelineNode(kids, label)
        for k in kids:
            if _contains_learner(k):
                raise CompileError(f"learner inside a feature union at {k.path}")
        return ComboNode(kids, label)

    return build(ast, ())


def workflow_fit_transform(w: Workflow, table: DataTable, target: TargetVector) -> DataTable:
    if table.n_rows == 0:
        raise DataError("cannot fit a workflow on an empty table")
    return w.fit_transform(table, target)


def workflow_transform(w: Workflow, table: DataTable) -> DataTable:
    return w.transform(table)


# ---------------------------------------------------------------------------
# majority-vote ensemble


class VoteEnsemble(Learner):
    """Plurality vote over independently fitted member learners.

    Ties go to the earliest member (in the given order) whose prediction is
    among the tied labels.
    """

    def __init__(self, members: list[str], registry: ComponentRegistry, seed: int = 0):
        super().__init__(seed)
        if not members:
            raise ValueError("vote ensemble needs at least one member")
        for m in members:
            if registry.kind(m) is not ComponentKind.LEARNER:
                raise ValueError(f"ensemble member {m!r} is not a learner")
        self.members = list(members)
        self.registry = registry

    def _fit(self, table, target):
        self.class_set = target.class_set
        self.columns_ = table.names
        self._constant = None
        self.models = [self.registry.create(m, derive_seed(self.seed, "member", i)).fit(table, target)
                       for i, m in enumerate(self.members)]

    def predict_codes(self, table):
        if not self.fitted:
            raise NotFittedError("VoteEnsemble used before fit")
        index = {c: i for i, c in enumerate(self.class_set)}
        preds = [m.predict(table).labels for m in self.models]
        out = np.empty(table.n_rows, dtype=np.int64)
        for r in range(table.n_rows):
            row = [p[r] for p in preds]
            counts = Counter(row)
            top = max(counts.values())
            out[r] = index[next(lbl for lbl in row if counts[lbl] == top)]
        return out


def vote_ensemble_fit(members, registry, table, target, seed: int = 0) -> VoteEnsemble:
    return VoteEnsemble(members, registry, seed).fit(table, target)


def vote_ensemble_predict(model: VoteEnsemble, table: DataTable) -> TargetVector:
    return model.predict(table)
