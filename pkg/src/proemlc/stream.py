"""Label-introduction stream plans and the streaming training loop."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import (
    InfeasiblePlanError,
    InvalidArgumentError,
    InvalidPatternError,
    ProEMLCError,
)
from .hidden import HiddenLayer, hidden_map
from .metrics import apply_threshold
from .training import (
    ExpansionMode,
    ModelState,
    expand_labels,
    init_batch,
    sequential_sweep,
    sequential_update,
)


def parse_pattern(text) -> list[int]:
    """``"39+2+2+1+1"`` -> ``[39, 2, 2, 1, 1]``; lists pass through."""
    if isinstance(text, str):
        parts = [p.strip() for p in text.split("+")]
        try:
            pattern = [int(p) for p in parts]
        except ValueError:
            raise InvalidPatternError(f"pattern {text!r} is not '+'-separated integers") from None
    else:
        pattern = [int(p) for p in text]
    if not pattern or any(p < 1 for p in pattern):
        raise InvalidPatternError(f"pattern entries must be positive integers, got {pattern}")
    return pattern


def format_pattern(pattern) -> str:
    return "+".join(str(int(p)) for p in pattern)


@dataclass
class Phase:
    introduced: list[int]
    samples: list[int]
    chunk_size: int

    def chunks(self):
        b = self.chunk_size
        for start in range(0, len(self.samples), b):
            yield self.samples[start:start + b]


@dataclass
class StreamPlan:
    """Initial block plus phases; label indices refer to the dataset's own order.

    ``label_order`` lists dataset label indices in introduction order, so the
    first ``pattern[0]`` entries are the labels known to the initial block.
    """

    pattern: list[int]
    label_order: list[int]
    initial_block: list[int]
    phases: list[Phase]
    seed: int
    n_samples: int = 0

    @property
    def chunk_size(self) -> int:
        return self.phases[0].chunk_size if self.phases else 1

    @property
    def introduction_events(self) -> int:
        return sum(1 for p in self.phases if p.introduced)

    def n_chunks(self) -> int:
        return sum(math.ceil(len(p.samples) / p.chunk_size) for p in self.phases)

    def validate(self, ds: Dataset) -> None:
        """Check every plan invariant against ``ds``; raises InvalidPatternError."""
        m = ds.n_labels
        if sum(self.pattern) != m:
            raise InvalidPatternError(f"pattern {format_pattern(self.pattern)} sums to {sum(self.pattern)}, dataset has {m} labels")
        if sorted(self.label_order) != list(range(m)):
            raise InvalidPatternError("label_order is not a permutation of the dataset labels")
        seen = list(self.initial_block) + [s for p in self.phases for s in p.samples]
        if sorted(seen) != list(range(ds.n_samples)):
            raise InvalidPatternError("samples are not covered exactly once by the plan")
        known = set(self.label_order[: self.pattern[0]])
        positives = ds.targets > 0
        for s in self.initial_block:
            if not set(np.flatnonzero(positives[s])) <= known:
                raise InvalidPatternError(f"initial-block sample {s} carries a label outside the first group")
        for p in self.phases:
            known |= set(p.introduced)
            for s in p.samples:
                if not set(np.flatnonzero(positives[s])) <= known:
                    raise InvalidPatternError(f"sample {s} carries a label not yet introduced")
        if known != set(range(m)):
            raise InvalidPatternError("plan never introduces some labels")

    def to_dict(self) -> dict:
        return {
            "pattern": format_pattern(self.pattern),
            "label_order": list(self.label_order),
            "initial_block": list(self.initial_block),
            "phases": [
                {"introduced": p.introduced, "samples": p.samples, "chunk_size": p.chunk_size}
                for p in self.phases
            ],
            "seed": self.seed,
            "n_samples": self.n_samples,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StreamPlan":
        return cls(
            pattern=parse_pattern(doc["pattern"]),
            label_order=[int(i) for i in doc["label_order"]],
            initial_block=[int(i) for i in doc["initial_block"]],
            phases=[Phase([int(i) for i in p["introduced"]], [int(i) for i in p["samples"]], int(p["chunk_size"]))
                    for p in doc["phases"]],
            seed=int(doc["seed"]),
            n_samples=int(doc.get("n_samples", 0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _earliest_phase(positives: np.ndarray, order, pattern) -> np.ndarray:
    group_of = np.empty(len(order), dtype=np.intp)
    start = 0
    for g, size in enumerate(pattern):
        group_of[list(order[start:start + size])] = g
        start += size
    # group index of each positive cell, 0 where negative; max over labels
    return np.max(np.where(positives, group_of[None, :], 0), axis=1)


def build_stream_plan(ds: Dataset, pattern, n0: int, chunk_size: int = 1, seed: int = 0) -> StreamPlan:
    """Schedule samples so each arrives in the first phase where all its labels exist.

    The dataset's label order is tried first; if it cannot supply ``n0``
    initial samples, labels are reordered so the least frequent ones are
    introduced last, and the permutation is recorded in the plan.
    """
    pattern = parse_pattern(pattern)
    m = ds.n_labels
    if sum(pattern) != m:
        raise InvalidPatternError(
            f"pattern {format_pattern(pattern)} sums to {sum(pattern)} but the dataset has {m} labels"
        )
    n0, chunk_size = int(n0), int(chunk_size)
    if n0 < 1:
        raise InvalidArgumentError("initial block size must be >= 1")
    if chunk_size < 1:
        raise InvalidArgumentError("chunk size must be >= 1")

    positives = ds.targets > 0
    natural = list(range(m))
    freq = positives.sum(axis=0)
    by_frequency = [int(i) for i in np.argsort(-freq, kind="stable")]
    best = 0
    for order in (natural, by_frequency):
        phase_of = _earliest_phase(positives, order, pattern)
        feasible = int(np.sum(phase_of == 0))
        best = max(best, feasible)
        if feasible >= n0:
            break
    else:
        raise InfeasiblePlanError(
            f"only {best} samples fit the first {pattern[0]} labels; initial block of {n0} is infeasible",
            max_feasible=best,
        )

    rng = np.random.default_rng(seed)
    first = rng.permutation(np.flatnonzero(phase_of == 0))
    phases = [Phase([], [int(i) for i in first[n0:]], chunk_size)]
    start = pattern[0]
    for g, size in enumerate(pattern[1:], start=1):
        members = rng.permutation(np.flatnonzero(phase_of == g))
        phases.append(Phase([int(i) for i in order[start:start + size]], [int(i) for i in members], chunk_size))
        start += size
    plan = StreamPlan(pattern, [int(i) for i in order], [int(i) for i in first[:n0]], phases, int(seed), ds.n_samples)
    plan.validate(ds)
    return plan


@dataclass
class LearningCurve:
    """Held-out hamming loss after the initial block and after every chunk."""

    tracked: list[int]
    tracked_names: list[str]
    rows: list[tuple] = field(default_factory=list)
    events: list[tuple[int, list[int]]] = field(default_factory=list)
    error: str | None = None

    @property
    def columns(self) -> list[str]:
        return ["samples_seen", "overall_hamming"] + [f"label_{i}" for i in self.tracked]

    def column(self, name) -> np.ndarray:
        return np.array([r[self.columns.index(name)] for r in self.rows])

    def to_csv(self, path, config: dict | None = None) -> None:
        """Write the series; provenance goes on ``#`` comment lines before the header."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if config is not None:
                fh.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
            for at, labels in self.events:
                fh.write(f"# introduced labels {labels} at samples_seen={at}\n")
            w = csv.writer(fh)
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([r[0]] + [repr(float(v)) for v in r[1:]])
            if self.error:
                fh.write(f"# error: {self.error}\n")


class StreamError(ProEMLCError):
    """Training failed mid-stream; carries the partial state and curve."""

    def __init__(self, cause: Exception, state, curve):
        super().__init__(f"stream aborted after {state.samples_seen if state else 0} samples: {cause}")
        self.kind = getattr(cause, "kind", "error")
        self.cause = cause
        self.state = state
        self.curve = curve


def run_stream(
    ds: Dataset,
    plan: StreamPlan,
    layer: HiddenLayer,
    ridge: float = 0.0,
    mode: ExpansionMode | str = ExpansionMode.HISTORY_EXACT,
    eval_set: Dataset | None = None,
    tracked=None,
    threshold: float = 0.0,
) -> tuple[ModelState, LearningCurve | None]:
    """Initial batch solve, then per chunk: expand labels if the phase introduces any, then RLS.

    With ``eval_set`` a learning curve is recorded (``n_chunks + 1`` rows);
    labels the model has not met yet are predicted -1. Without it, chunks
    of size 1 are swept through the kernel in one call per phase. The
    returned state's label registry follows ``plan.label_order``.
    """
    mode = ExpansionMode.parse(mode)
    m = ds.n_labels
    order = plan.label_order
    names = [ds.label_names[i] for i in order]
    targets = ds.targets[:, order].astype(np.float64)
    X = ds.features

    curve = None
    if eval_set is not None:
        if eval_set.n_labels != m:
            raise InvalidArgumentError("evaluation set has a different label count")
        if tracked is None:
            tracked = list(order[plan.pattern[0]:])
        tracked = [int(i) for i in tracked]
        curve = LearningCurve(tracked, [ds.label_names[i] for i in tracked])
        H_eval = hidden_map(layer, eval_set.features)
        truth = eval_set.targets > 0

    def record(state):
        k = state.labels.count
        pred = np.zeros_like(truth)
        pred[:, order[:k]] = apply_threshold(H_eval @ state.beta, threshold) > 0
        wrong = pred != truth
        curve.rows.append(
            (state.samples_seen, float(wrong.mean()), *(float(wrong[:, i].mean()) for i in tracked))
        )

    k0 = plan.pattern[0]
    init = plan.initial_block
    state = init_batch(hidden_map(layer, X[init]), targets[init, :k0], ridge, labels=names[:k0])
    if curve is not None:
        record(state)

    try:
        for phase in plan.phases:
            if phase.introduced:
                trigger = None
                if mode is ExpansionMode.PAPER_LITERAL:
                    first = next(phase.chunks(), [])
                    trigger = hidden_map(layer, X[first]) if first else np.zeros((1, layer.hidden_dim))
                new = [ds.label_names[i] for i in phase.introduced]
                state = expand_labels(state, new, mode, H_trigger=trigger, inplace=True)
                if curve is not None:
                    curve.events.append((state.samples_seen, list(phase.introduced)))
            k = state.labels.count
            if curve is None and phase.chunk_size == 1:
                idx = phase.samples
                if idx:
                    sequential_sweep(state, hidden_map(layer, X[idx]), targets[idx, :k], inplace=True)
                continue
            for chunk in phase.chunks():
                sequential_update(state, hidden_map(layer, X[chunk]), targets[chunk, :k], inplace=True)
                if curve is not None:
                    record(state)
    except (ProEMLCError, np.linalg.LinAlgError, FloatingPointError) as exc:
        if curve is not None:
            curve.error = str(exc)
        raise StreamError(exc, state, curve) from exc
    return state, curve


def align_to_dataset(state: ModelState, ds: Dataset) -> np.ndarray:
    """Column permutation mapping the state's label registry back to ``ds.label_names`` order."""
    return np.array([state.labels.index(n) for n in ds.label_names], dtype=np.intp)
