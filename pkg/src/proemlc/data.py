"""Multi-label datasets: CSV and ARFF parsing, writing, and synthetic fixtures."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, ParseError, ShapeError


@dataclass
class Dataset:
    """Features plus bipolar targets (+1 member, -1 non-member)."""

    features: np.ndarray
    targets: np.ndarray
    label_names: list[str]
    feature_names: list[str] | None = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.targets = np.asarray(self.targets).astype(np.int8)
        self.label_names = [str(n) for n in self.label_names]
        if self.features.ndim != 2 or self.targets.ndim != 2:
            raise ShapeError("features and targets must be matrices", 2, (self.features.ndim, self.targets.ndim))
        if self.features.shape[0] != self.targets.shape[0]:
            raise ShapeError("feature and target row counts differ", self.features.shape[0], self.targets.shape[0])
        if self.targets.shape[1] != len(self.label_names):
            raise ShapeError("label names vs target columns", self.targets.shape[1], len(self.label_names))
        if not np.isin(self.targets, (-1, 1)).all():
            raise InvalidArgumentError("targets must be bipolar (+1/-1)")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_labels(self) -> int:
        return self.targets.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(
            self.features[idx], self.targets[idx], list(self.label_names),
            self.feature_names, self.name, dict(self.meta),
        )

    def reorder_labels(self, order) -> "Dataset":
        order = list(order)
        return Dataset(
            self.features, self.targets[:, order], [self.label_names[i] for i in order],
            self.feature_names, self.name, dict(self.meta),
        )


def _label_value(text, line):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"label cell {text!r} is not numeric", line) from None
    if v not in (-1.0, 0.0, 1.0):
        raise ParseError(f"label cell {text!r} is not 0/1 or -1/1", line)
    return int(v)


def _to_bipolar(raw_labels: np.ndarray) -> np.ndarray:
    # 0 only occurs in {0,1} encodings; -1 only in {-1,1}.
    if (raw_labels == 0).any() and (raw_labels == -1).any():
        raise ParseError("label columns mix {0,1} and {-1,1} encodings")
    return np.where(raw_labels == 1, 1, -1).astype(np.int8)


def _pick_labels(header, label_columns, leading=False):
    if isinstance(label_columns, (int, np.integer)):
        k = int(label_columns)
        if not 1 <= k < len(header):
            raise InvalidArgumentError(f"label count {k} invalid for {len(header)} columns")
        return list(range(k)) if leading else list(range(len(header) - k, len(header)))
    names = [str(n) for n in label_columns]
    if not names:
        raise InvalidArgumentError("at least one label column is required")
    missing = [n for n in names if n not in header]
    if missing:
        raise ParseError(f"unknown label name(s) {missing}", 1)
    return [header.index(n) for n in names]


def parse_csv(path, label_columns) -> Dataset:
    """Read a headed CSV file.

    ``label_columns`` is either the number of trailing label columns or a
    list of label column names. Label cells may use 0/1 or -1/1.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file, header row expected", 1) from None
        label_idx = _pick_labels(header, label_columns)
        label_set = set(label_idx)
        feat_idx = [i for i in range(len(header)) if i not in label_set]
        feats, labels = [], []
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} cells, found {len(row)}", line)
            try:
                feats.append([float(row[i]) for i in feat_idx])
            except ValueError:
                bad = next(row[i] for i in feat_idx if not _is_float(row[i]))
                raise ParseError(f"non-numeric feature cell {bad!r}", line) from None
            labels.append([_label_value(row[i], line) for i in label_idx])
    if not feats:
        raise ParseError("no data rows", 2)
    return Dataset(
        np.array(feats, dtype=np.float64).reshape(len(feats), len(feat_idx)),
        _to_bipolar(np.array(labels)),
        [header[i] for i in label_idx],
        [header[i] for i in feat_idx],
        name=path.stem,
    )


def _is_float(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def write_csv(ds: Dataset, path) -> None:
    """Features first, then labels as -1/1; floats use ``repr`` so values round-trip exactly."""
    fnames = ds.feature_names or [f"x{i}" for i in range(ds.n_features)]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(fnames) + list(ds.label_names))
        for x, y in zip(ds.features, ds.targets):
            w.writerow([repr(float(v)) for v in x] + [int(v) for v in y])


# ---------------------------------------------------------------------------
# ARFF

_ATTR_RE = re.compile(r"""^@attribute\s+('(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*"|\S+)\s+(.+)$""", re.I)
_NUMERIC_TYPES = {"numeric", "real", "integer"}


def _unquote(text):
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1].replace("\\" + text[0], text[0])
    return text


def _parse_attr_type(spec, line):
    spec = spec.strip()
    if spec.lower() in _NUMERIC_TYPES:
        return "numeric"
    if spec.startswith("{") and spec.endswith("}"):
        values = {_unquote(v) for v in spec[1:-1].split(",")}
        if values <= {"0", "1"}:
            return "binary"
        raise ParseError(f"nominal attribute values {sorted(values)} are not {{0,1}}", line)
    raise ParseError(f"unsupported attribute type {spec!r}", line)


def _cell(text, kind, line):
    text = _unquote(text)
    if text == "?":
        raise ParseError("missing values ('?') are not supported", line)
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"non-numeric value {text!r}", line) from None
    if kind == "binary" and v not in (0.0, 1.0):
        raise ParseError(f"value {text!r} is not 0 or 1", line)
    return v


def _meka_label_count(relation):
    m = re.search(r"-C\s+(-?\d+)", relation)
    return int(m.group(1)) if m else None


def parse_arff(data_path, label_names=None, trailing_labels: int | None = None,
               leading_labels: int | None = None) -> Dataset:
    """Read a dense or sparse ARFF file with {0,1} nominal label attributes.

    Labels are chosen by name (kept in the given order), by a trailing or
    leading count, or, failing all three, from a MEKA-style ``-C k``
    relation name.
    """
    path = Path(data_path)
    relation = ""
    names, kinds = [], []
    rows = []
    in_data = False
    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            if not in_data:
                low = line.lower()
                if low.startswith("@relation"):
                    relation = _unquote(line[len("@relation"):])
                elif low.startswith("@attribute"):
                    m = _ATTR_RE.match(line)
                    if not m:
                        raise ParseError(f"malformed attribute declaration {line!r}", line_no)
                    names.append(_unquote(m.group(1)))
                    kinds.append(_parse_attr_type(m.group(2), line_no))
                elif low.startswith("@data"):
                    in_data = True
                    width = len(names)
                    if width == 0:
                        raise ParseError("no attributes declared before @data", line_no)
                else:
                    raise ParseError(f"unexpected header line {line!r}", line_no)
                continue
            row = np.zeros(width)
            if line.startswith("{"):
                if not line.endswith("}"):
                    raise ParseError("unterminated sparse row", line_no)
                body = line[1:-1].strip()
                for entry in filter(None, (e.strip() for e in body.split(","))):
                    parts = entry.split(None, 1)
                    if len(parts) != 2 or not parts[0].isdigit():
                        raise ParseError(f"malformed sparse entry {entry!r}", line_no)
                    j = int(parts[0])
                    if j >= width:
                        raise ParseError(f"sparse index {j} beyond {width} attributes", line_no)
                    row[j] = _cell(parts[1], kinds[j], line_no)
            else:
                cells = line.split(",")
                if len(cells) != width:
                    raise ParseError(f"expected {width} values, found {len(cells)}", line_no)
                for j, c in enumerate(cells):
                    row[j] = _cell(c, kinds[j], line_no)
            rows.append(row)
    if not in_data:
        raise ParseError("no @data section", None)

    if label_names is not None:
        missing = [n for n in label_names if n not in names]
        if missing:
            raise ParseError(f"label attribute(s) {missing} not declared")
        label_idx = [names.index(n) for n in label_names]
    elif trailing_labels is not None:
        label_idx = _pick_labels(names, int(trailing_labels))
    elif leading_labels is not None:
        label_idx = _pick_labels(names, int(leading_labels), leading=True)
    else:
        k = _meka_label_count(relation)
        if not k:
            raise InvalidArgumentError("label attributes not specified and relation has no '-C k'")
        label_idx = _pick_labels(names, abs(k), leading=k > 0)
    for j in label_idx:
        if kinds[j] != "binary":
            raise ParseError(f"label attribute {names[j]!r} is not a {{0,1}} nominal")
    label_set = set(label_idx)
    feat_idx = [j for j in range(len(names)) if j not in label_set]
    data = np.array(rows).reshape(len(rows), len(names))
    return Dataset(
        data[:, feat_idx],
        np.where(data[:, label_idx] == 1, 1, -1),
        [names[j] for j in label_idx],
        [names[j] for j in feat_idx],
        name=relation.split(":")[0].strip() or path.stem,
    )


def _arff_name(name):
    if re.fullmatch(r"[A-Za-z_][\w.\-]*", name):
        return name
    return "'" + name.replace("'", "\\'") + "'"


def write_arff(ds: Dataset, path, sparse: bool = False) -> None:
    """Features declared numeric, labels {0,1}; labels are written last."""
    fnames = ds.feature_names or [f"x{i}" for i in range(ds.n_features)]
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"@relation {_arff_name(ds.name or 'dataset')}\n\n")
        for n in fnames:
            fh.write(f"@attribute {_arff_name(n)} numeric\n")
        for n in ds.label_names:
            fh.write(f"@attribute {_arff_name(n)} {{0,1}}\n")
        fh.write("\n@data\n")
        for x, y in zip(ds.features, ds.targets):
            values = [repr(float(v)) for v in x] + ["1" if v > 0 else "0" for v in y]
            if sparse:
                cells = [f"{j} {v}" for j, v in enumerate(values) if float(v) != 0.0]
                fh.write("{" + ", ".join(cells) + "}\n")
            else:
                fh.write(",".join(values) + "\n")


def load_dataset(path, fmt=None, labels=None, trailing_labels=None) -> Dataset:
    """Dispatch on ``fmt`` (or the file suffix) to the CSV or ARFF parser."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "csv":
        spec = list(labels) if labels else trailing_labels
        if spec is None:
            raise InvalidArgumentError("CSV input needs label names or a trailing label count")
        return parse_csv(path, spec)
    if fmt == "arff":
        return parse_arff(path, labels, trailing_labels=trailing_labels)
    raise InvalidArgumentError(f"unknown dataset format {fmt!r}")


# ---------------------------------------------------------------------------
# synthetic fixtures

def generate_synthetic(N: int, n: int, m: int, lc_target: float, seed: int = 0,
                       teacher_hidden: int | None = None, noise: float = 0.0) -> Dataset:
    """Random features in [-1, 1] with labels thresholded from a random teacher.

    Each label is positive for the ``round(N * lc_target / m)`` highest
    teacher scores, so the mean number of positives per sample tracks
    ``lc_target``. The teacher is linear unless ``teacher_hidden`` asks for a
    tanh network of that width.
    """
    if not (0 < lc_target <= m):
        raise InvalidArgumentError(f"lc_target must lie in (0, {m}], got {lc_target}")
    if N < 1 or n < 1 or m < 1:
        raise InvalidArgumentError("N, n and m must all be >= 1")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(N, n))
    if teacher_hidden:
        W = rng.normal(scale=2.0 / math.sqrt(n), size=(n, teacher_hidden))
        b = rng.normal(scale=0.5, size=teacher_hidden)
        V = rng.normal(size=(teacher_hidden, m))
        scores = np.tanh(X @ W + b) @ V
    else:
        scores = X @ rng.normal(size=(n, m))
    if noise:
        scores = scores + noise * scores.std(axis=0) * rng.normal(size=scores.shape)
    k = int(round(N * lc_target / m))
    Y = -np.ones((N, m), dtype=np.int8)
    if k > 0:
        top = np.argsort(-scores, axis=0, kind="stable")[:k]
        for j in range(m):
            Y[top[:, j], j] = 1
    return Dataset(
        X, Y, [f"y{j}" for j in range(m)], [f"x{i}" for i in range(n)],
        name=f"synthetic-{seed}",
    )


# label counts of the standard multi-label benchmark files (labels trail the
# features in the Mulan distribution; MEKA files announce theirs with -C)
BENCHMARK_LABELS = {"scene": 6, "medical": 45, "corel5k": 374}


def _concat(parts: list[Dataset]) -> Dataset:
    first = parts[0]
    for p in parts[1:]:
        if p.label_names != first.label_names or p.n_features != first.n_features:
            raise ParseError("train and test files declare different attributes")
    return Dataset(
        np.vstack([p.features for p in parts]),
        np.vstack([p.targets for p in parts]),
        first.label_names, first.feature_names, first.name,
    )


def find_benchmark(name: str, directory) -> list[Path]:
    """Locate ``<name>.arff`` or the ``<name>-train.arff``/``<name>-test.arff`` pair, case-insensitively."""
    directory = Path(directory)
    if not directory.is_dir():
        return []
    files = {p.name.lower(): p for p in directory.iterdir() if p.is_file()}
    key = name.lower()
    if f"{key}.arff" in files:
        return [files[f"{key}.arff"]]
    pair = [files.get(f"{key}-train.arff"), files.get(f"{key}-test.arff")]
    return pair if all(pair) else []


def load_benchmark(name: str, directory) -> Dataset | None:
    """Load a standard benchmark from ``directory``, or None when its files are absent."""
    paths = find_benchmark(name, directory)
    if not paths:
        return None
    k = BENCHMARK_LABELS[name.lower()]
    parts = []
    for path in paths:
        try:
            parts.append(parse_arff(path))
        except InvalidArgumentError:
            parts.append(parse_arff(path, trailing_labels=k))
    ds = _concat(parts)
    if ds.n_labels != k:
        raise ParseError(f"{name}: expected {k} labels, found {ds.n_labels}")
    ds.name = name
    return ds
