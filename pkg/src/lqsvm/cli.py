"""Command-line entry points.

Exit codes: 0 success, 2 configuration error, 3 data or model-file error,
4 sampler or backend error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .data import DataError, load_csv, read_feature_csv, separated_blobs, standardize_apply, standardize_fit, write_csv
from .evaluation import fit_method, run_cv
from .falk import LocalTrainingError
from .kernel import KernelConfig, resolve_gamma
from .persist import PersistError, SavedModel, load_model, save_model
from .qubo import QbsvmQuboParams, QmsvmQuboParams, build_qbsvm_qubo, build_qmsvm_qubo, dump_qubo, signed_binary_labels
from .render import RenderError, grid_points, render_prediction_map
from .sampler import SamplerError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_SAMPLER = 0, 2, 3, 4

logger = logging.getLogger("lqsvm")


def exit_code_for(exc: BaseException) -> int | None:
    """Map an exception (or anything in its cause chain) to an exit code."""
    seen = set()
    while exc is not None and id(exc) not in seen:
        seen.add(id(exc))
        if isinstance(exc, ConfigError):
            return EXIT_CONFIG
        if isinstance(exc, SamplerError):
            return EXIT_SAMPLER
        if isinstance(exc, (DataError, PersistError, RenderError, OSError)):
            return EXIT_DATA
        if isinstance(exc, LocalTrainingError):
            exc = exc.cause
            continue
        exc = exc.__cause__
    return None


# -- config handling -------------------------------------------------------------------


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    return cfg.override(getattr(args, "set", None) or [])


def _load_for(cfg: RunConfig, args):
    data = load_csv(args.data, label_column=args.label_column, skip_header=args.skip_header)
    if cfg.task == "binary" and data.class_count != 2:
        raise ConfigError(f"run.task=binary but {args.data} has {data.class_count} classes")
    cfg.check_capacity(data.class_count)
    return data


# -- commands ----------------------------------------------------------------------------


def cmd_cv(args) -> int:
    cfg = resolve_config(args)
    data = _load_for(cfg, args)
    report = run_cv(data, cfg.method(), cfg.folds, cfg.seed, standardize=cfg.standardize,
                    keep_models=args.save_models)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.dumps())
    (out / "report.json").write_text(report.to_json())
    (out / "report.txt").write_text(report.to_text())
    if args.save_models:
        for f, entry in enumerate(report.models):
            if entry is None:
                continue
            model, scaler = entry
            save_model(SavedModel(cfg.task, cfg.mode, model, data.d, data.label_values, scaler),
                       out / f"fold_{f}.model.json")
    print(f"accuracy {report.accuracy:.6f} balanced_accuracy {report.balanced_accuracy:.6f} "
          f"macro_f1 {report.macro_f1:.6f}" + (" (partial)" if report.partial else ""))
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    data = _load_for(cfg, args)
    scaler = None
    train = data
    if cfg.standardize:
        scaler = standardize_fit(data)
        train = standardize_apply(scaler, data)
    fitted = fit_method(cfg.method(), train, cfg.seed)
    save_model(SavedModel(cfg.task, cfg.mode, fitted.model, data.d, data.label_values, scaler), args.model)
    return EXIT_OK


def cmd_predict(args) -> int:
    saved = load_model(args.model, expect_task=args.task)
    X = read_feature_csv(args.input, skip_header=args.skip_header)
    labels = saved.predict_labels(X)
    lines = "".join(f"{v}\n" for v in labels.tolist())
    if args.out:
        Path(args.out).write_text(lines)
    else:
        sys.stdout.write(lines)
    return EXIT_OK


def cmd_render_map(args) -> int:
    if args.grid:
        try:
            grid = np.loadtxt(args.grid, delimiter=",", dtype=np.int64, ndmin=2)
        except ValueError as exc:
            raise DataError(f"{args.grid}: {exc}") from None
    else:
        if not (args.model and args.bounds and args.size):
            raise ConfigError("render-map needs --grid, or --model with --bounds and --size")
        saved = load_model(args.model)
        if saved.n_features != 2:
            raise DataError(f"map rendering needs a 2-feature model, this one has {saved.n_features}")
        w, h = args.size
        pts = grid_points(*args.bounds, w, h)
        grid = saved.predict(pts).reshape(h, w)
    render_prediction_map(grid, args.out)
    return EXIT_OK


def cmd_gen_blobs(args) -> int:
    data = separated_blobs(args.classes, args.n, args.distance, seed=args.seed, dim=args.dim)
    write_csv(data, args.out)
    return EXIT_OK


def cmd_qubo_dump(args) -> int:
    cfg = resolve_config(args)
    data = load_csv(args.data, label_column=args.label_column, skip_header=args.skip_header)
    if cfg.standardize:
        data = standardize_apply(standardize_fit(data), data)
    gamma = resolve_gamma(KernelConfig(cfg.gamma), data)
    if cfg.task == "binary":
        if data.class_count != 2:
            raise ConfigError(f"run.task=binary but {args.data} has {data.class_count} classes")
        Q = build_qbsvm_qubo(data.features, signed_binary_labels(data.labels),
                             QbsvmQuboParams(cfg.B, cfg.K_binary, cfg.xi, gamma))
    else:
        Q = build_qmsvm_qubo(data.features, data.labels, data.class_count,
                             QmsvmQuboParams(cfg.K_multi, cfg.mu, cfg.beta, gamma))
    dump_qubo(Q, args.out)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------


def _config_args(p):
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")


def _data_args(p):
    p.add_argument("--data", required=True, help="CSV with features and an integer label column")
    p.add_argument("--label-column", type=int, default=-1)
    p.add_argument("--skip-header", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lqsvm", description="Local annealing-trained SVMs")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cv", help="stratified cross-validation")
    _config_args(p)
    _data_args(p)
    p.add_argument("--out", required=True, help="output directory for report files")
    p.add_argument("--save-models", action="store_true", help="also write one model file per fold")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("train", help="train on a whole file and save the model")
    _config_args(p)
    _data_args(p)
    p.add_argument("--model", required=True, help="output model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict labels for a feature-only CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.add_argument("--task", choices=("binary", "multiclass"), help="require this model task")
    p.add_argument("--skip-header", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("render-map", help="write a prediction map as a P6 PPM image")
    p.add_argument("--out", required=True)
    p.add_argument("--grid", help="CSV grid of class ids, one image row per line")
    p.add_argument("--model", help="2-feature model to evaluate on a regular grid")
    p.add_argument("--bounds", type=float, nargs=4, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--size", type=int, nargs=2, metavar=("WIDTH", "HEIGHT"))
    p.set_defaults(func=cmd_render_map)

    p = sub.add_parser("gen-blobs", help="write Gaussian blobs with equidistant centers")
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--distance", type=float, default=6.0, help="center distance in units of sigma")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_blobs)

    p = sub.add_parser("qubo-dump", help="write the training QUBO of a (small) dataset")
    _config_args(p)
    _data_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_qubo_dump)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        code = exit_code_for(exc)
        if code is None:
            raise
        print(f"lqsvm: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
