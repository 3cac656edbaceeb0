"""Command-line entry point: ``proemlc {train,stream,crossval,tune,predict,inspect}``.

Exit codes: 0 success, 1 computation error, 2 I/O or configuration error.
Failures print ``{"error": {"kind": ..., "message": ...}}`` on stderr and,
when the output directory exists, to ``error.json`` inside it.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ProEMLCError
from .harness import (
    RunConfig,
    crossval,
    load_config_dataset,
    report_document,
    split_indices,
    train_batch,
    train_stream,
    tune_hidden,
)
from .hidden import HiddenLayer
from .metrics import apply_threshold, evaluate, label_stats, predict_raw
from .stream import StreamError, align_to_dataset, build_stream_plan
from .training import load_state, save_state

CONFIG_ERRORS = {"io", "config", "parse", "invalid-argument", "invalid-pattern", "infeasible-plan", "label-conflict"}


class ConfigError(ProEMLCError):
    kind = "config"


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _save_model(path: Path, state, layer: HiddenLayer, cfg: RunConfig, plan=None) -> None:
    extra = {"layer": layer.to_dict(), "config": cfg.to_dict()}
    if plan is not None:
        extra["label_order"] = plan.label_order
    with path.open("wb") as fh:
        save_state(state, fh, extra)


def cmd_train(cfg: RunConfig) -> dict:
    ds = load_config_dataset(cfg)
    train_idx, test_idx = split_indices(ds.n_samples, cfg.test_fraction, cfg.seed)
    report, state, layer = train_batch(cfg, ds.subset(train_idx), ds.subset(test_idx))
    out = _out_dir(cfg)
    doc = report_document(report, cfg)
    _write_json(out / "report.json", doc)
    _save_model(out / "model.npz", state, layer, cfg)
    return doc


def cmd_stream(cfg: RunConfig, tracked=None) -> dict:
    """Progressive run on a train split; the held-out split feeds the learning curve."""
    ds = load_config_dataset(cfg)
    train_idx, test_idx = split_indices(ds.n_samples, cfg.test_fraction, cfg.seed)
    train, test = ds.subset(train_idx), ds.subset(test_idx)
    out = _out_dir(cfg)
    try:
        report, state, layer, plan, curve = train_stream(cfg, train, test, curve_set=test, tracked=tracked)
    except StreamError as exc:
        if exc.curve is not None:
            exc.curve.to_csv(out / "curve.csv", cfg.to_dict())
        raise
    doc = report_document(report, cfg, introduction_events=plan.introduction_events)
    _write_json(out / "report.json", doc)
    _write_json(out / "plan.json", {**plan.to_dict(), "config": cfg.to_dict()})
    curve.to_csv(out / "curve.csv", cfg.to_dict())
    _save_model(out / "model.npz", state, layer, cfg, plan)
    return doc


def cmd_crossval(cfg: RunConfig) -> dict:
    ds = load_config_dataset(cfg)
    reports, agg = crossval(cfg, ds)
    doc = {
        "folds": [r.to_table() for r in reports],
        "mean": agg["mean"],
        "std": agg["std"],
        "config": cfg.to_dict(),
        "backend": kernels.BACKEND,
    }
    _write_json(_out_dir(cfg) / "crossval.json", doc)
    return doc


def cmd_tune_hidden(cfg: RunConfig, candidates) -> dict:
    ds = load_config_dataset(cfg)
    rows, best = tune_hidden(cfg, ds, candidates)
    out = _out_dir(cfg)
    with (out / "tune.csv").open("w", newline="", encoding="utf-8") as fh:
        fh.write("# config: " + json.dumps(cfg.to_dict(), sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(["hidden", "train_hamming", "train_accuracy", "val_hamming", "val_accuracy", "status"])
        for r in rows:
            w.writerow([r.hidden, r.train_hamming, r.train_accuracy, r.val_hamming, r.val_accuracy, r.status])
    table = [{k: (None if isinstance(v, float) and v != v else v) for k, v in asdict(r).items()} for r in rows]
    doc = {"rows": table, "recommended_hidden": best, "config": cfg.to_dict()}
    _write_json(out / "tune.json", doc)
    return doc


def cmd_predict(cfg: RunConfig, model_path) -> dict:
    with open(model_path, "rb") as fh:
        state, extra = load_state(fh)
    layer = HiddenLayer.from_dict(extra["layer"])
    ds = load_config_dataset(cfg)
    raw = predict_raw(state, layer, ds.features)
    pred = apply_threshold(raw, cfg.threshold)
    out = _out_dir(cfg)
    with (out / "predictions.csv").open("w", newline="", encoding="utf-8") as fh:
        fh.write("# config: " + json.dumps(cfg.to_dict(), sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(state.labels.names)
        w.writerows(pred.tolist())
    doc = {"predictions": str(out / "predictions.csv"), "config": cfg.to_dict()}
    if set(ds.label_names) == set(state.labels.names):
        report = evaluate(pred[:, align_to_dataset(state, ds)], ds.targets, lip=str(ds.n_labels))
        doc.update(report.to_table())
        _write_json(out / "report.json", doc)
    return doc


def cmd_inspect(cfg: RunConfig, model_path=None) -> dict:
    doc: dict = {}
    if model_path:
        with open(model_path, "rb") as fh:
            state, extra = load_state(fh)
        doc["model"] = {
            "hidden": state.hidden_dim,
            "labels": state.labels.names,
            "samples_seen": state.samples_seen,
            "ridge": state.ridge,
            "m_inv_asymmetry": state.symmetry_error(),
            "layer": extra.get("layer"),
            "config": extra.get("config"),
        }
    if cfg.data:
        ds = load_config_dataset(cfg)
        stats = label_stats(ds.targets)
        doc["dataset"] = {
            "name": ds.name,
            "samples": ds.n_samples,
            "features": ds.n_features,
            "labels": ds.n_labels,
            "LC": stats["label_cardinality"],
            "LD": stats["label_density"],
            "label_frequency": dict(zip(ds.label_names, (ds.targets > 0).sum(axis=0).tolist())),
        }
        if cfg.pattern:
            plan = build_stream_plan(ds, cfg.resolved_pattern(ds), cfg.resolved_init_block(), cfg.chunk, cfg.seed)
            doc["plan"] = {
                "pattern": cfg.pattern,
                "label_order": plan.label_order,
                "initial_block": len(plan.initial_block),
                "phases": [{"introduced": p.introduced, "samples": len(p.samples)} for p in plan.phases],
            }
    if not doc:
        raise ConfigError("inspect needs --data and/or --model")
    doc["backend"] = kernels.BACKEND
    return doc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file (or report) whose config block seeds the defaults")
    common.add_argument("--data", help="dataset path")
    common.add_argument("--format", choices=["csv", "arff"])
    common.add_argument("--labels", help="comma-separated label column names")
    common.add_argument("--trailing-labels", type=int, help="number of trailing label columns")
    common.add_argument("--hidden", type=int, help="hidden neurons (default 100)")
    common.add_argument("--activation", choices=["sigmoid", "tanh", "radial-basis"])
    common.add_argument("--seed", type=int)
    common.add_argument("--ridge", type=float)
    common.add_argument("--init-block", type=int, help="initial block size (default ceil(1.2*hidden))")
    common.add_argument("--chunk", type=int, help="chunk size b (default 1)")
    common.add_argument("--pattern", help="label introduction pattern, e.g. 39+2+2+1+1")
    common.add_argument("--mode", choices=["history-exact", "paper-literal"])
    common.add_argument("--threshold", type=float)
    common.add_argument("--folds", type=int)
    common.add_argument("--test-fraction", type=float)
    common.add_argument("--out", help="output directory")

    parser = argparse.ArgumentParser(prog="proemlc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="batch ELM on a train split, report on the test split")
    stream = sub.add_parser("stream", parents=[common], help="progressive run with a learning curve")
    stream.add_argument("--track", help="comma-separated label indices for per-label curves")
    sub.add_parser("crossval", parents=[common], help="k-fold cross-validation of progressive training")
    tune = sub.add_parser("tune", parents=[common], help="sweep hidden-layer sizes")
    tune.add_argument("--candidates", required=True, help="comma-separated hidden sizes")
    predict = sub.add_parser("predict", parents=[common], help="apply a saved model")
    predict.add_argument("--model", required=True)
    inspect = sub.add_parser("inspect", parents=[common], help="dataset, plan or model summary")
    inspect.add_argument("--model")
    return parser


def _config_from_args(args) -> RunConfig:
    base = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: {exc}") from None
        base = doc.get("config", doc)
    cfg = RunConfig.from_dict(base)
    overrides = {
        "data": args.data,
        "format": args.format,
        "labels": [s.strip() for s in args.labels.split(",")] if args.labels else None,
        "trailing_labels": args.trailing_labels,
        "hidden": args.hidden,
        "activation": args.activation,
        "seed": args.seed,
        "ridge": args.ridge,
        "init_block": args.init_block,
        "chunk": args.chunk,
        "pattern": args.pattern,
        "mode": args.mode,
        "threshold": args.threshold,
        "folds": args.folds,
        "test_fraction": args.test_fraction,
        "out": args.out,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "candidates", None):
        try:
            cfg.candidates = [int(c) for c in args.candidates.split(",")]
        except ValueError:
            raise ConfigError(f"--candidates {args.candidates!r} is not a list of integers") from None
    if args.command != "inspect" and not cfg.data:
        raise ConfigError("--data is required")
    return cfg.validate()


def _fail(kind: str, message: str, out: str | None) -> int:
    doc = {"error": {"kind": kind, "message": message}}
    print(json.dumps(doc), file=sys.stderr)
    if out and Path(out).is_dir():
        _write_json(Path(out) / "error.json", doc)
    return 2 if kind in CONFIG_ERRORS else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = None
    try:
        cfg = _config_from_args(args)
        if args.command == "train":
            doc = cmd_train(cfg)
        elif args.command == "stream":
            tracked = [int(i) for i in args.track.split(",")] if args.track else None
            doc = cmd_stream(cfg, tracked)
        elif args.command == "crossval":
            doc = cmd_crossval(cfg)
        elif args.command == "tune":
            doc = cmd_tune_hidden(cfg, cfg.candidates)
        elif args.command == "predict":
            doc = cmd_predict(cfg, args.model)
        else:
            doc = cmd_inspect(cfg, args.model)
    except OSError as exc:
        return _fail("io", str(exc), cfg.out if cfg else args.out)
    except ProEMLCError as exc:
        return _fail(exc.kind, str(exc), cfg.out if cfg else args.out)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail("numeric", str(exc), cfg.out if cfg else args.out)
    except (KeyError, ValueError) as exc:
        return _fail("config", str(exc), cfg.out if cfg else args.out)
    print(json.dumps(doc, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
