"""Command-line surface: train/predict/serialize models, emit DAC and PDP
curves, run the simulation and feature-engineering experiments.

Exit codes: 0 success, 1 usage error, 2 data or model error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .baselines import pdp_curve
from .curveio import curve_csv, curve_json, load_dataset_csv, write_text_atomic
from .dac import DacParams, FeatureSet, default_grid, ensemble_dac_curve
from .featlab import FeParams, binarize_labels, run_fe_experiment
from .sim import ModelKind, Regime, SimConfig, run_sim_experiment, sim_results_csv
from .trees import (
    BoostingError,
    DataError,
    Dataset,
    ModelFormatError,
    Task,
    TrainParams,
    fit_adaboost_r2,
    fit_random_forest,
    gini_importance,
    load_model,
    predict_batch,
    save_model,
)

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _features_arg(text: str) -> FeatureSet:
    try:
        return FeatureSet(tuple(int(v) for v in text.split(",")))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def worker_count() -> int:
    """Worker cap from DAC_THREADS, defaulting to machine parallelism."""
    env = os.environ.get("DAC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="daccurves")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a tree ensemble and save it as JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--task", required=True, choices=["reg", "cls"])
    p.add_argument("--model-out", required=True)
    p.add_argument("--trees", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--adaboost", action="store_true")
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-samples-leaf", type=int, default=None)
    p.add_argument("--no-bootstrap", action="store_true")
    p.add_argument("--target", default=None)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--target", default=None)
    p.add_argument("--out", required=True)

    for name in ("dac", "pdp"):
        p = sub.add_parser(name, help=f"emit a {name.upper()} curve CSV")
        p.add_argument("--model", required=True)
        p.add_argument("--data", required=True)
        p.add_argument("--features", required=True, type=_features_arg)
        p.add_argument("--k", type=float, default=1.0)
        p.add_argument("--grid", type=int, default=100)
        p.add_argument("--json", action="store_true")
        p.add_argument("--target", default=None)
        p.add_argument("--out", required=True)

    p = sub.add_parser("importance", help="print Gini importances")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--target", default=None)

    p = sub.add_parser("simulate", help="run one simulation configuration")
    p.add_argument("--function", type=int, required=True, choices=range(1, 11))
    p.add_argument("--regime", required=True, choices=[r.value for r in Regime])
    p.add_argument("--model", default="rf", choices=[m.value for m in ModelKind])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=5000)
    p.add_argument("--n-test", type=int, default=200_000)
    p.add_argument("--trees", type=int, default=20)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fe-experiment", help="DAC feature-engineering experiment")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=50)
    p.add_argument("--target", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("export-grid", help="emit the default evaluation grid")
    p.add_argument("--data", required=True)
    p.add_argument("--features", required=True, type=_features_arg)
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--target", default=None)
    p.add_argument("--out", required=True)

    return parser


def _load_data(args) -> Dataset:
    return load_dataset_csv(args.data, target=getattr(args, "target", None))


def _cmd_train(args) -> None:
    data = _load_data(args)
    task = Task.REGRESSION if args.task == "reg" else Task.BINARY_CLASSIFICATION
    if task is Task.BINARY_CLASSIFICATION:
        data = Dataset(data.X, binarize_labels(data.y), data.feature_names)
    params = TrainParams(
        n_trees=args.trees,
        max_depth=args.max_depth,
        min_samples_leaf=args.min_samples_leaf,
        bootstrap=not args.no_bootstrap,
        seed=args.seed,
    )
    if args.adaboost:
        if task is not Task.REGRESSION:
            raise DataError("--adaboost requires --task reg")
        model = fit_adaboost_r2(data, params)
    elif task is Task.REGRESSION:
        model = fit_random_forest(data, params, task)
    else:
        model = fit_random_forest(data, params, task)
    save_model(model, args.model_out)


def _cmd_predict(args) -> None:
    data = _load_data(args)
    model = load_model(args.model, data=data)
    preds = predict_batch(model, data.X)
    lines = ["prediction"] + [repr(float(v)) for v in preds]
    write_text_atomic(args.out, "\n".join(lines) + "\n")


def _cmd_curve(args, kind: str) -> None:
    data = _load_data(args)
    model = load_model(args.model, data=data)
    params = DacParams(k=args.k, grid_points_per_dim=args.grid)
    S = args.features
    if kind == "dac" and len(S) > 2:
        raise DataError("the CLI renders 1-D and 2-D curves only")
    grid = default_grid(data, S, params)
    if kind == "dac":
        curve = ensemble_dac_curve(model, data, S, grid, params)
    else:
        curve = pdp_curve(model, data, S, grid)
    write_text_atomic(args.out, curve_csv(curve, data.feature_names))
    if args.json:
        base, _ = os.path.splitext(args.out)
        write_text_atomic(base + ".json", curve_json(curve, data.feature_names))


def _cmd_importance(args) -> None:
    data = _load_data(args)
    model = load_model(args.model, data=data)
    imp = gini_importance(model, data)
    for name, v in zip(data.feature_names, imp):
        print(f"{name},{float(v)!r}")


def _cmd_simulate(args) -> None:
    config = SimConfig(
        function_id=args.function,
        regime=Regime(args.regime),
        n_train=args.n_train,
        n_test=args.n_test,
        model_kind=ModelKind(args.model),
        n_trees=args.trees,
        seed=args.seed,
    )
    result = run_sim_experiment(config)
    write_text_atomic(args.out, sim_results_csv([result]))


def _cmd_fe(args) -> None:
    data = _load_data(args)
    r = run_fe_experiment(
        data,
        FeParams(seed=args.seed, n_trees=args.trees),
        name=os.path.splitext(os.path.basename(args.data))[0],
    )
    lines = [
        "dataset,rf_acc,logit_acc,logit_dac_acc,difference",
        f"{r.dataset},{r.rf_accuracy!r},{r.logit_accuracy!r},"
        f"{r.logit_dac_accuracy!r},{r.difference!r}",
    ]
    write_text_atomic(args.out, "\n".join(lines) + "\n")


def _cmd_export_grid(args) -> None:
    data = _load_data(args)
    params = DacParams(grid_points_per_dim=args.grid)
    grid = default_grid(data, args.features, params)
    lines = ["feature,index,coordinate"]
    for j, axis in zip(args.features.indices, grid.axes):
        for i, v in enumerate(axis):
            lines.append(f"{data.feature_names[j]},{i},{float(v)!r}")
    write_text_atomic(args.out, "\n".join(lines) + "\n")


_COMMANDS = {
    "train": _cmd_train,
    "predict": _cmd_predict,
    "dac": lambda a: _cmd_curve(a, "dac"),
    "pdp": lambda a: _cmd_curve(a, "pdp"),
    "importance": _cmd_importance,
    "simulate": _cmd_simulate,
    "fe-experiment": _cmd_fe,
    "export-grid": _cmd_export_grid,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _COMMANDS[args.command](args)
    except (DataError, ModelFormatError, BoostingError, ValueError, OSError) as exc:
        print(f"daccurves {args.command}: error: {exc}", file=sys.stderr)
        return DATA_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
