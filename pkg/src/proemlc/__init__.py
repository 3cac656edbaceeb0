"""Progressive ELM multi-label classifier."""

from .data import Dataset, generate_synthetic, load_benchmark, load_dataset
from .hidden import HiddenLayer, hidden_map, init_hidden_layer
from .kernels import BACKEND
from .metrics import MetricReport, evaluate, hamming_loss, label_stats, predict
from .stream import StreamPlan, build_stream_plan, run_stream
from .training import (
    ExpansionMode,
    ModelState,
    expand_labels,
    init_batch,
    load_state,
    save_state,
    sequential_update,
)

__all__ = [
    "BACKEND",
    "Dataset",
    "ExpansionMode",
    "HiddenLayer",
    "MetricReport",
    "ModelState",
    "StreamPlan",
    "build_stream_plan",
    "evaluate",
    "expand_labels",
    "generate_synthetic",
    "hamming_loss",
    "hidden_map",
    "init_batch",
    "init_hidden_layer",
    "label_stats",
    "load_benchmark",
    "load_dataset",
    "load_state",
    "predict",
    "run_stream",
    "save_state",
    "sequential_update",
]
