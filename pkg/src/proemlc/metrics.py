"""Prediction, bipolar thresholding and multi-label evaluation measures.

Label matrices are bipolar: +1 marks membership, -1 non-membership.
Example-based measures are averaged over samples; a sample with empty
predicted and true sets scores 1 on every measure, and any other 0/0 ratio
counts as 0.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericError, ShapeError
from .hidden import HiddenLayer, hidden_map


@dataclass
class PredictionBatch:
    raw: np.ndarray
    bipolar: np.ndarray
    threshold: float = 0.0


@dataclass
class MetricReport:
    hamming_loss: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    label_cardinality: float
    label_density: float
    train_time_s: float = 0.0
    test_time_s: float = 0.0
    lip: str = ""

    def to_table(self) -> dict:
        """Table-style field names, timings rounded to milliseconds."""
        return {
            "LIP": self.lip,
            "H": self.hamming_loss,
            "Acc": self.accuracy,
            "Pre": self.precision,
            "Rec": self.recall,
            "F1": self.f1,
            "T1": round(self.train_time_s, 3),
            "T2": round(self.test_time_s, 3),
            "LC": self.label_cardinality,
            "LD": self.label_density,
        }

    @classmethod
    def from_table(cls, doc: dict) -> "MetricReport":
        return cls(
            hamming_loss=doc["H"],
            accuracy=doc["Acc"],
            precision=doc["Pre"],
            recall=doc["Rec"],
            f1=doc["F1"],
            label_cardinality=doc["LC"],
            label_density=doc["LD"],
            train_time_s=doc["T1"],
            test_time_s=doc["T2"],
            lip=doc["LIP"],
        )

    def as_dict(self) -> dict:
        return asdict(self)


TABLE_FIELDS = ("LIP", "H", "Acc", "Pre", "Rec", "F1", "T1", "T2", "LC", "LD")
METRIC_FIELDS = ("H", "Acc", "Pre", "Rec", "F1", "LC", "LD")


def predict_raw(state, layer: HiddenLayer, X) -> np.ndarray:
    if state.beta.shape[0] != layer.hidden_dim:
        raise ShapeError("beta rows vs hidden layer size", layer.hidden_dim, state.beta.shape[0])
    return hidden_map(layer, X) @ state.beta


def apply_threshold(raw, threshold: float = 0.0) -> np.ndarray:
    """Bipolar step: ``raw >= threshold`` maps to +1, everything else to -1."""
    raw = np.asarray(raw, dtype=np.float64)
    bad = ~np.isfinite(raw)
    if bad.any():
        idx = np.argwhere(bad)[0]
        row, col = (int(idx[0]), int(idx[1])) if raw.ndim == 2 else (int(idx[0]), None)
        raise NumericError(f"non-finite raw output at row {row}, column {col}", row, col)
    return np.where(raw >= threshold, 1, -1).astype(np.int8)


def predict(state, layer, X, threshold: float = 0.0) -> PredictionBatch:
    raw = predict_raw(state, layer, X)
    return PredictionBatch(raw, apply_threshold(raw, threshold), threshold)


def _pair(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ShapeError("prediction and truth shapes differ", truth.shape, pred.shape)
    return pred > 0, truth > 0


def hamming_loss(pred, truth) -> float:
    p, t = _pair(pred, truth)
    if p.size == 0:
        raise InvalidArgumentError("hamming loss of an empty matrix")
    return float(np.mean(p != t))


def per_label_hamming(pred, truth, label_index: int) -> float:
    p, t = _pair(pred, truth)
    if p.ndim != 2 or not 0 <= label_index < p.shape[1]:
        raise InvalidArgumentError(f"label index {label_index} out of range for {p.shape}")
    return float(np.mean(p[:, label_index] != t[:, label_index]))


def _example_scores(pred, truth):
    p, t = _pair(pred, truth)
    if p.ndim != 2 or p.shape[0] == 0:
        raise InvalidArgumentError("example-based metrics need a nonempty N x m matrix")
    inter = np.sum(p & t, axis=1).astype(np.float64)
    union = np.sum(p | t, axis=1).astype(np.float64)
    n_pred = np.sum(p, axis=1).astype(np.float64)
    n_true = np.sum(t, axis=1).astype(np.float64)

    def ratio(num, den):
        return np.divide(num, den, out=np.zeros_like(num), where=den > 0)

    scores = {
        "accuracy": ratio(inter, union),
        "precision": ratio(inter, n_pred),
        "recall": ratio(inter, n_true),
        "f1": ratio(2 * inter, n_pred + n_true),
    }
    both_empty = union == 0
    for v in scores.values():
        v[both_empty] = 1.0
    return scores


def example_based_metrics(pred, truth) -> dict:
    """Mean per-sample accuracy, precision, recall and F1."""
    return {k: float(v.mean()) for k, v in _example_scores(pred, truth).items()}


def label_stats(truth) -> dict:
    truth = np.asarray(truth)
    if truth.ndim != 2 or truth.size == 0:
        raise InvalidArgumentError("label statistics need a nonempty N x m matrix")
    lc = float(np.mean(np.sum(truth > 0, axis=1)))
    return {"label_cardinality": lc, "label_density": lc / truth.shape[1]}


def evaluate(pred, truth, train_time_s=0.0, test_time_s=0.0, lip="") -> MetricReport:
    """Build a report. Its F1 is the harmonic mean of the averaged precision and recall."""
    ex = example_based_metrics(pred, truth)
    stats = label_stats(truth)
    pre, rec = ex["precision"], ex["recall"]
    f1 = 2 * pre * rec / (pre + rec) if pre + rec > 0 else 0.0
    return MetricReport(
        hamming_loss=hamming_loss(pred, truth),
        accuracy=ex["accuracy"],
        precision=pre,
        recall=rec,
        f1=f1,
        label_cardinality=stats["label_cardinality"],
        label_density=stats["label_density"],
        train_time_s=float(train_time_s),
        test_time_s=float(test_time_s),
        lip=lip,
    )
