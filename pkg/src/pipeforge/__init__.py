"""Pipeline expressions, cross-validation and two-stage pipeline search."""

from .core import ComponentKind, ComponentRegistry, compile_workflow, workflow_fit_transform, workflow_transform
from .crossval import CvResult, FoldPlan, crossvalidate, make_folds
from .data import Column, DataError, DataTable, Kind, TargetVector, hconcat, load_csv, write_csv
from .expr import Name, ParseError, Pipe, Union, noop_count, parse, render
from .registry import default_registry
from .search import (Evaluator, SearchSpace, StrategyReport, all_all, all_one, base_clean, enumerate_one_block,
                     enumerate_two_block, one_all)

__version__ = "0.1.0"

__all__ = [
    "Column", "ComponentKind", "ComponentRegistry", "CvResult", "DataError", "DataTable", "Evaluator",
    "FoldPlan", "Kind", "Name", "ParseError", "Pipe", "SearchSpace", "StrategyReport", "TargetVector",
    "Union", "all_all", "all_one", "base_clean", "compile_workflow", "crossvalidate", "default_registry",
    "enumerate_one_block", "enumerate_two_block", "hconcat", "load_csv", "make_folds", "noop_count",
    "one_all", "parse", "render", "workflow_fit_transform", "workflow_transform", "write_csv",
]
