"""Command-line interface.

Exit codes: 0 success, 2 bad arguments, 3 data or model-file error,
4 search failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .data import DataError, load_csv
from .expr import ParseError, parse
from .registry import default_registry
from .search import (DEFAULT_SURROGATE_LEARNER, DEFAULT_SURROGATE_PIPELINE, Evaluator, SearchSpace,
                     base_clean, run_strategy, summary_line, write_results)
from .surrogate import SurrogateModel, fit_surrogate, prune_space, pruned_all_one, survey_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SEARCH = 0, 2, 3, 4
THREADS_ENV = "PIPEFORGE_THREADS"

log = logging.getLogger("pipeforge")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    data: str | None = None
    target: str | None = None
    strategy: str = "all-one"
    blocks: int = 1
    k: int = 10
    seed: int = 0
    threads: int = 1
    surrogate_prp: str | None = None
    surrogate_lr: str | None = None
    out: str | None = None
    clean: bool = True
    registry: list[str] = field(default_factory=list)
    surrogate_learner: str = DEFAULT_SURROGATE_LEARNER
    surrogate_pipeline: str = DEFAULT_SURROGATE_PIPELINE

    def validate(self) -> "RunConfig":
        if self.k < 2:
            raise UsageError("--folds must be at least 2")
        if self.blocks not in (1, 2):
            raise UsageError("--blocks must be 1 or 2")
        if self.threads < 1:
            raise UsageError("--threads must be positive")
        if self.strategy not in ("all-all", "one-all", "all-one"):
            raise UsageError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "one-all" and self.blocks != 1:
            raise UsageError("one-all supports --blocks 1 only")
        return self


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _common(p: argparse.ArgumentParser, data: bool = True) -> None:
    if data:
        p.add_argument("--data", required=True, help="CSV file with a header row")
        p.add_argument("--target", required=True, help="name of the class column")
        p.add_argument("--no-clean", action="store_true", help="skip the NA-removal/one-hot base pipeline")
        p.add_argument("--out", help="results CSV path")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--registry", default="",
                   help="comma-separated component names restricting the search space")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pipeforge", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("search", help="run a pipeline search strategy")
    _common(s)
    s.add_argument("--strategy", choices=["all-all", "one-all", "all-one"], default="all-one")
    s.add_argument("--blocks", type=int, default=1)
    s.add_argument("--surrogate-learner", default=DEFAULT_SURROGATE_LEARNER)
    s.add_argument("--surrogate-pipeline", default=DEFAULT_SURROGATE_PIPELINE)

    g = sub.add_parser("surrogate", help="train or apply metafeature surrogates")
    gsub = g.add_subparsers(dest="action", required=True)
    t = gsub.add_parser("train", help="train PRP and/or LR surrogates on a corpus directory")
    t.add_argument("--corpus", required=True, help="directory holding manifest.json and CSV files")
    t.add_argument("--surrogate-prp", help="output path for the PRP model")
    t.add_argument("--surrogate-lr", help="output path for the LR model")
    _common(t, data=False)
    a = gsub.add_parser("apply", help="run the pruned two-block all-one search")
    _common(a)
    a.add_argument("--surrogate-prp")
    a.add_argument("--surrogate-lr")
    return parser


def _space(cfg: RunConfig, registry) -> SearchSpace:
    space = SearchSpace()
    if cfg.registry:
        unknown = [n for n in cfg.registry if n not in registry]
        if unknown:
            raise UsageError(f"unknown component names in --registry: {unknown}")
        try:
            space = space.restrict(cfg.registry)
        except ValueError as exc:
            raise UsageError(f"--registry leaves an empty list: {exc}") from exc
    return space.validate(registry)


def _config(args) -> RunConfig:
    cfg = RunConfig(
        command=args.command,
        data=getattr(args, "data", None),
        target=getattr(args, "target", None),
        strategy=getattr(args, "strategy", "all-one"),
        blocks=getattr(args, "blocks", 2 if args.command == "surrogate" else 1),
        k=args.folds,
        seed=args.seed,
        threads=args.threads,
        surrogate_prp=getattr(args, "surrogate_prp", None),
        surrogate_lr=getattr(args, "surrogate_lr", None),
        out=getattr(args, "out", None),
        clean=not getattr(args, "no_clean", False),
        registry=[n.strip() for n in args.registry.split(",") if n.strip()],
        surrogate_learner=getattr(args, "surrogate_learner", DEFAULT_SURROGATE_LEARNER),
        surrogate_pipeline=getattr(args, "surrogate_pipeline", DEFAULT_SURROGATE_PIPELINE),
    )
    return cfg.validate()


def _load(cfg: RunConfig):
    table, target = load_csv(cfg.data, cfg.target)
    if target.n_classes < 2:
        raise DataError("target needs at least two classes")
    return table, target


def cmd_search(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    registry = default_registry()
    space = _space(cfg, registry)
    if cfg.surrogate_learner not in space.learners and cfg.strategy == "one-all":
        raise UsageError(f"--surrogate-learner {cfg.surrogate_learner!r} is not in the search space")
    try:
        parse(cfg.surrogate_pipeline)
    except ParseError as exc:
        raise UsageError(f"--surrogate-pipeline: {exc}") from exc
    table, target = _load(cfg)
    if cfg.clean:
        table, target = base_clean(table, target)
    evaluator = Evaluator(table, target, cfg.k, cfg.seed, registry, cfg.threads)
    try:
        report = run_strategy(cfg.strategy, space, evaluator, cfg.blocks,
                              cfg.surrogate_learner, cfg.surrogate_pipeline)
    except Exception as exc:
        print(f"search failed: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    if cfg.out:
        write_results(cfg.out, report)
    print(summary_line(report, space), file=out)
    if report.best.failed:
        print("search failed: every candidate failed", file=sys.stderr)
        return EXIT_SEARCH
    return EXIT_OK


def read_corpus(directory) -> tuple[list, list[str]]:
    """Load ``manifest.json`` (``{"datasets": [{"file": ..., "target": ...}]}``) and its CSVs."""
    root = Path(directory)
    manifest = root / "manifest.json"
    if not manifest.is_file():
        raise FileNotFoundError(f"no manifest.json in {root}")
    try:
        doc = json.loads(manifest.read_text(encoding="utf-8"))
        items = doc["datasets"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{manifest}: malformed manifest ({exc})") from exc
    corpus, names = [], []
    for item in items:
        corpus.append(load_csv(root / item["file"], item["target"]))
        names.append(item.get("name", Path(item["file"]).stem))
    return corpus, names


def cmd_surrogate(cfg: RunConfig, action: str, corpus_dir: str | None = None, out=None) -> int:
    out = out or sys.stdout
    registry = default_registry()
    space = _space(cfg, registry)
    if action == "train":
        if not (cfg.surrogate_prp or cfg.surrogate_lr):
            raise UsageError("give --surrogate-prp and/or --surrogate-lr output paths")
        corpus, names = read_corpus(corpus_dir)
        try:
            entries = survey_corpus(corpus, space, cfg.k, cfg.seed, registry, cfg.threads, names)
        except DataError:
            raise
        except Exception as exc:
            print(f"search failed: {exc}", file=sys.stderr)
            return EXIT_SEARCH
        for e in entries:
            print(f"{e.name}: {e.signature!r} mean_err={e.mean_err:.2f} category={e.category} "
                  f"group={e.group}", file=out)
        for kind, path in (("PRP", cfg.surrogate_prp), ("LR", cfg.surrogate_lr)):
            if path:
                fit_surrogate(kind, entries, cfg.seed).save(path)
                print(f"wrote {kind} surrogate to {path}", file=out)
        return EXIT_OK

    if not (cfg.surrogate_prp or cfg.surrogate_lr):
        raise UsageError("give --surrogate-prp and/or --surrogate-lr model paths")
    models = {}
    for kind, path in (("PRP", cfg.surrogate_prp), ("LR", cfg.surrogate_lr)):
        if path:
            if not os.path.isfile(path):
                raise FileNotFoundError(f"no such model file: {path}")
            model = SurrogateModel.load(path)
            if model.kind != kind:
                raise DataError(f"{path} holds a {model.kind} surrogate, expected {kind}")
            models[kind] = model
    raw_table, raw_target = _load(cfg)
    pruned = prune_space(space, models.get("PRP"), models.get("LR"), raw_table, raw_target)
    table, target = base_clean(raw_table, raw_target) if cfg.clean else (raw_table, raw_target)
    evaluator = Evaluator(table, target, cfg.k, cfg.seed, registry, cfg.threads)
    try:
        report = pruned_all_one(space, pruned, evaluator)
    except Exception as exc:
        print(f"search failed: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    if cfg.out:
        write_results(cfg.out, report)
    print(summary_line(report, space), file=out)
    print(f"pruning: category={pruned.category} group={pruned.group} "
          f"candidates={pruned.candidates} unpruned={pruned.unpruned_candidates} "
          f"reduction={pruned.reduction:.2f}x", file=out)
    return EXIT_SEARCH if report.best.failed else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.command == "search":
            return cmd_search(cfg)
        return cmd_surrogate(cfg, args.action, getattr(args, "corpus", None))
    except UsageError as exc:
        print(f"pipeforge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, DataError) as exc:
        print(f"pipeforge: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
