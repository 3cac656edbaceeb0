"""Experiment drivers shared by the command-line tool and the acceptance tests."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import kernels
from .data import Dataset, load_dataset
from .errors import InvalidArgumentError, SingularMatrixError
from .hidden import ActivationKind, HiddenLayer, hidden_map, init_hidden_layer
from .metrics import (
    METRIC_FIELDS,
    MetricReport,
    apply_threshold,
    evaluate,
    hamming_loss,
    predict_raw,
)
from .stream import (
    LearningCurve,
    StreamPlan,
    align_to_dataset,
    build_stream_plan,
    format_pattern,
    parse_pattern,
    run_stream,
)
from .training import ExpansionMode, ModelState, init_batch


@dataclass
class RunConfig:
    data: str = ""
    format: str | None = None
    labels: list[str] | None = None
    trailing_labels: int | None = None
    hidden: int = 100
    activation: str = "sigmoid"
    seed: int = 0
    ridge: float = 0.0
    init_block: int | None = None
    chunk: int = 1
    pattern: str | None = None
    mode: str = "history-exact"
    threshold: float = 0.0
    folds: int = 10
    test_fraction: float = 0.2
    candidates: list[int] = field(default_factory=list)
    out: str = "."

    def validate(self) -> "RunConfig":
        if self.hidden < 1:
            raise InvalidArgumentError(f"--hidden must be >= 1, got {self.hidden}")
        self.activation = ActivationKind.parse(self.activation).value
        self.mode = ExpansionMode.parse(self.mode).value
        if not (self.ridge >= 0 and math.isfinite(self.ridge)):
            raise InvalidArgumentError(f"--ridge must be finite and >= 0, got {self.ridge}")
        if self.chunk < 1:
            raise InvalidArgumentError(f"--chunk must be >= 1, got {self.chunk}")
        if self.init_block is not None and self.init_block < 1:
            raise InvalidArgumentError(f"--init-block must be >= 1, got {self.init_block}")
        if self.folds < 2:
            raise InvalidArgumentError(f"--folds must be >= 2, got {self.folds}")
        if not 0 < self.test_fraction < 1:
            raise InvalidArgumentError("test fraction must lie in (0, 1)")
        if not math.isfinite(self.threshold):
            raise InvalidArgumentError("--threshold must be finite")
        if self.pattern is not None:
            self.pattern = format_pattern(parse_pattern(self.pattern))
        if any(int(c) < 1 for c in self.candidates):
            raise InvalidArgumentError("hidden-size candidates must be >= 1")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in known})

    def resolved_init_block(self) -> int:
        return self.init_block if self.init_block is not None else math.ceil(1.2 * self.hidden)

    def resolved_pattern(self, ds: Dataset) -> list[int]:
        return parse_pattern(self.pattern) if self.pattern else [ds.n_labels]


def load_config_dataset(cfg: RunConfig) -> Dataset:
    return load_dataset(cfg.data, cfg.format, cfg.labels, cfg.trailing_labels)


def make_layer(cfg: RunConfig, ds: Dataset, hidden: int | None = None) -> HiddenLayer:
    return init_hidden_layer(ds.n_features, hidden or cfg.hidden, cfg.activation, cfg.seed)


def split_indices(n: int, test_fraction: float, seed: int):
    perm = np.random.default_rng(seed).permutation(n)
    n_test = max(1, int(round(n * test_fraction)))
    if n_test >= n:
        raise InvalidArgumentError(f"cannot hold out {n_test} of {n} samples")
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Shuffle once, then cut into ``folds`` contiguous parts of near-equal size."""
    if folds < 2:
        raise InvalidArgumentError("fold count must be >= 2")
    if folds > n:
        raise InvalidArgumentError(f"fold count {folds} exceeds sample count {n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def evaluate_state(state: ModelState, layer: HiddenLayer, test: Dataset, threshold=0.0):
    """Predict ``test`` and align columns to its label order; returns (bipolar, seconds)."""
    t0 = time.perf_counter()
    raw = predict_raw(state, layer, test.features)
    pred = apply_threshold(raw, threshold)
    elapsed = time.perf_counter() - t0
    return pred[:, align_to_dataset(state, test)], elapsed


def train_batch(cfg: RunConfig, train: Dataset, test: Dataset, hidden: int | None = None):
    """Plain ELM: one batch solve on ``train``, evaluated on ``test``."""
    layer = make_layer(cfg, train, hidden)
    t0 = time.perf_counter()
    state = init_batch(hidden_map(layer, train.features), train.targets, cfg.ridge, labels=train.label_names)
    t1 = time.perf_counter() - t0
    pred, t2 = evaluate_state(state, layer, test, cfg.threshold)
    report = evaluate(pred, test.targets, t1, t2, lip=str(train.n_labels))
    return report, state, layer


def train_stream(cfg: RunConfig, train: Dataset, test: Dataset | None = None,
                 curve_set: Dataset | None = None, tracked=None):
    """Progressive training on ``train`` under the configured label pattern."""
    pattern = cfg.resolved_pattern(train)
    plan = build_stream_plan(train, pattern, cfg.resolved_init_block(), cfg.chunk, cfg.seed)
    layer = make_layer(cfg, train)
    t0 = time.perf_counter()
    state, curve = run_stream(train, plan, layer, cfg.ridge, cfg.mode,
                              eval_set=curve_set, tracked=tracked, threshold=cfg.threshold)
    t1 = time.perf_counter() - t0
    report = None
    if test is not None:
        pred, t2 = evaluate_state(state, layer, test, cfg.threshold)
        report = evaluate(pred, test.targets, t1, t2, lip=format_pattern(pattern))
    return report, state, layer, plan, curve


def report_document(report: MetricReport, cfg: RunConfig, **extra) -> dict:
    doc = report.to_table()
    doc["config"] = cfg.to_dict()
    doc["backend"] = kernels.BACKEND
    doc.update(extra)
    return doc


def aggregate(reports: list[MetricReport]) -> dict:
    """Mean and population standard deviation of every metric across reports."""
    tables = [r.to_table() for r in reports]
    out = {"mean": {}, "std": {}}
    for key in METRIC_FIELDS + ("T1", "T2"):
        values = np.array([t[key] for t in tables], dtype=np.float64)
        out["mean"][key] = float(values.mean())
        out["std"][key] = float(values.std())
    out["mean"]["LIP"] = out["std"]["LIP"] = tables[0]["LIP"] if tables else ""
    return out


def crossval(cfg: RunConfig, ds: Dataset, progress=None):
    """k-fold cross-validation of progressive training; returns (per-fold reports, aggregate)."""
    reports = []
    for k, test_idx in enumerate(fold_indices(ds.n_samples, cfg.folds, cfg.seed)):
        train_idx = np.setdiff1d(np.arange(ds.n_samples), test_idx, assume_unique=True)
        report, *_ = train_stream(cfg, ds.subset(train_idx), ds.subset(test_idx))
        reports.append(report)
        if progress:
            progress(k, report)
    return reports, aggregate(reports)


@dataclass
class TuneRow:
    hidden: int
    train_hamming: float = float("nan")
    train_accuracy: float = float("nan")
    val_hamming: float = float("nan")
    val_accuracy: float = float("nan")
    status: str = "ok"


def tune_hidden(cfg: RunConfig, ds: Dataset, candidates) -> tuple[list[TuneRow], int | None]:
    """Batch-train each hidden size on a train split and score it on the held-out split.

    A candidate whose Gram matrix is singular gets ``status='singular-matrix'``
    and does not stop the sweep. Returns the rows and the size with the best
    validation accuracy (smallest size on ties).
    """
    candidates = [int(c) for c in candidates]
    if not candidates:
        raise InvalidArgumentError("no hidden-size candidates given")
    train_idx, val_idx = split_indices(ds.n_samples, cfg.test_fraction, cfg.seed)
    train, val = ds.subset(train_idx), ds.subset(val_idx)
    rows = []
    for hidden in candidates:
        row = TuneRow(hidden)
        try:
            report, state, layer = train_batch(cfg, train, val, hidden)
        except SingularMatrixError:
            row.status = "singular-matrix"
            rows.append(row)
            continue
        train_pred, _ = evaluate_state(state, layer, train, cfg.threshold)
        row.train_hamming = hamming_loss(train_pred, train.targets)
        row.train_accuracy = evaluate(train_pred, train.targets).accuracy
        row.val_hamming = report.hamming_loss
        row.val_accuracy = report.accuracy
        rows.append(row)
    ok = [r for r in rows if r.status == "ok"]
    best = max(ok, key=lambda r: (r.val_accuracy, -r.hidden)).hidden if ok else None
    return rows, best


__all__ = [
    "LearningCurve",
    "RunConfig",
    "StreamPlan",
    "TuneRow",
    "aggregate",
    "crossval",
    "evaluate_state",
    "fold_indices",
    "load_config_dataset",
    "make_layer",
    "report_document",
    "split_indices",
    "train_batch",
    "train_stream",
    "tune_hidden",
]
