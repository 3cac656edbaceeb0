"""Batch initialisation, chunk-wise RLS learning and progressive label expansion.

All operations return a new :class:`ModelState` and leave their input
untouched unless called with ``inplace=True`` (the streaming harness does
this to avoid copying the inverse Gram matrix on every sample).
"""

from __future__ import annotations

import enum
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from . import kernels
from .errors import (
    InvalidArgumentError,
    LabelConflictError,
    ShapeError,
    SingularMatrixError,
)

STATE_FORMAT = "proemlc-state/1"


class ExpansionMode(str, enum.Enum):
    HISTORY_EXACT = "history-exact"
    PAPER_LITERAL = "paper-literal"

    @classmethod
    def parse(cls, value) -> "ExpansionMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidArgumentError(
                f"unknown expansion mode {value!r}; choose history-exact or paper-literal"
            ) from None


@dataclass
class LabelRegistry:
    """Append-only mapping from label name to output column."""

    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.names = [str(n) for n in self.names]
        if len(set(self.names)) != len(self.names):
            raise LabelConflictError(f"duplicate label names in {self.names}")

    @property
    def count(self) -> int:
        return len(self.names)

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return str(name) in self.names

    def index(self, name) -> int:
        try:
            return self.names.index(str(name))
        except ValueError:
            raise InvalidArgumentError(f"unknown label {name!r}") from None

    def extended(self, new_names) -> "LabelRegistry":
        new_names = [str(n) for n in new_names]
        clash = [n for n in new_names if n in self.names]
        if clash or len(set(new_names)) != len(new_names):
            raise LabelConflictError(f"labels already registered or repeated: {clash or new_names}")
        return LabelRegistry(self.names + new_names)

    def copy(self) -> "LabelRegistry":
        return LabelRegistry(list(self.names))


@dataclass
class ModelState:
    beta: np.ndarray
    m_inv: np.ndarray
    hidden_sum: np.ndarray
    samples_seen: int
    labels: LabelRegistry
    ridge: float = 0.0

    @property
    def hidden_dim(self) -> int:
        return self.m_inv.shape[0]

    def copy(self) -> "ModelState":
        return ModelState(
            self.beta.copy(),
            self.m_inv.copy(),
            self.hidden_sum.copy(),
            self.samples_seen,
            self.labels.copy(),
            self.ridge,
        )

    def check(self) -> None:
        """Assert the structural invariants; raises ShapeError on violation."""
        n = self.m_inv.shape[0]
        if self.m_inv.shape != (n, n) or self.beta.shape[0] != n or self.hidden_sum.shape != (n,):
            raise ShapeError(
                "state matrices disagree on hidden size",
                expected=n,
                actual=(self.beta.shape, self.m_inv.shape, self.hidden_sum.shape),
            )
        if self.beta.shape[1] != self.labels.count:
            raise ShapeError("beta columns vs label registry", self.labels.count, self.beta.shape[1])

    def symmetry_error(self) -> float:
        """Relative Frobenius asymmetry of ``m_inv``."""
        return float(np.linalg.norm(self.m_inv - self.m_inv.T) / np.linalg.norm(self.m_inv))


def _as_matrix(a, name) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be a matrix", expected=2, actual=a.ndim)
    return a


def _default_names(start, count):
    return [str(i) for i in range(start, start + count)]


def init_batch(H0, Y0, ridge: float = 0.0, labels=None) -> ModelState:
    """Solve the initial block: ``m_inv = (H0^T H0 + ridge I)^-1``, ``beta = m_inv H0^T Y0``.

    Both are computed through a QR factorisation of ``H0`` (stacked on
    ``sqrt(ridge) I`` when ``ridge > 0``) rather than by inverting the Gram
    matrix.
    """
    H0 = _as_matrix(H0, "H0")
    Y0 = _as_matrix(Y0, "Y0")
    ridge = float(ridge)
    if ridge < 0 or not np.isfinite(ridge):
        raise InvalidArgumentError(f"ridge must be a finite nonnegative real, got {ridge}")
    n0, hidden = H0.shape
    if n0 < 1:
        raise InvalidArgumentError("initial block needs at least one sample")
    if Y0.shape[0] != n0:
        raise ShapeError("Y0 row count must match H0", expected=n0, actual=Y0.shape[0])
    labels = LabelRegistry(_default_names(0, Y0.shape[1]) if labels is None else list(labels))
    if labels.count != Y0.shape[1]:
        raise ShapeError("label names vs Y0 columns", labels.count, Y0.shape[1])

    if ridge == 0.0:
        rank = np.linalg.matrix_rank(H0)
        if rank < hidden:
            raise SingularMatrixError(
                f"initial Gram matrix is singular (rank {rank} < {hidden} hidden neurons "
                f"with {n0} samples); use a larger initial block, fewer hidden neurons, "
                "or ridge > 0"
            )
    # QR of the (ridge-augmented) block keeps the error at cond(H0) rather
    # than cond(H0)^2 from forming the Gram matrix explicitly
    A = H0 if ridge == 0.0 else np.vstack([H0, np.sqrt(ridge) * np.eye(hidden)])
    Q, R = np.linalg.qr(A)
    diag = np.abs(np.diag(R))
    if not np.all(diag > np.finfo(float).eps * diag.max() * max(A.shape)):
        raise SingularMatrixError(
            "initial Gram matrix is numerically singular; use a larger initial "
            "block, fewer hidden neurons, or ridge > 0"
        )
    R_inv = solve_triangular(R, np.eye(hidden))
    m_inv = R_inv @ R_inv.T
    m_inv = 0.5 * (m_inv + m_inv.T)
    beta = R_inv @ (Q[:n0].T @ Y0)
    return ModelState(
        beta=np.ascontiguousarray(beta),
        m_inv=np.ascontiguousarray(m_inv),
        hidden_sum=H0.sum(axis=0),
        samples_seen=n0,
        labels=labels,
        ridge=ridge,
    )


def sequential_update(state: ModelState, H_chunk, Y_chunk, inplace: bool = False) -> ModelState:
    """Fold a chunk of ``b`` samples into the state by recursive least squares.

    Single-sample chunks go through the rank-1 kernel (compiled when
    available); larger chunks invert the ``b x b`` innovation matrix directly.
    """
    H = _as_matrix(H_chunk, "H_chunk")
    Y = _as_matrix(Y_chunk, "Y_chunk")
    hidden = state.hidden_dim
    if H.shape[1] != hidden:
        raise ShapeError("H_chunk columns must equal the hidden size", hidden, H.shape[1])
    if H.shape[0] < 1:
        raise InvalidArgumentError("chunk must contain at least one sample")
    if Y.shape[0] != H.shape[0]:
        raise ShapeError("Y_chunk row count must match H_chunk", H.shape[0], Y.shape[0])
    m = state.labels.count
    if Y.shape[1] != m:
        if Y.shape[1] > m:
            detail = f"{Y.shape[1] - m} extra label column(s) beyond {state.labels.names}"
        else:
            detail = f"missing label(s) {state.labels.names[Y.shape[1]:]}"
        raise ShapeError(f"label count mismatch: {detail}", m, Y.shape[1])

    out = state if inplace else state.copy()
    if H.shape[0] == 1:
        kernels.rank1_update(out.m_inv, out.beta, np.ascontiguousarray(H[0]), np.ascontiguousarray(Y[0]))
    else:
        # chunk analogue of the rank-1 kernel: S = I + H M H^T = L L^T,
        # V = M H^T L^-T, M -= V V^T, beta += V L^-1 (Y - H beta)
        MHt = out.m_inv @ H.T
        inner = np.eye(H.shape[0]) + H @ MHt
        try:
            L = cholesky(inner, lower=True)
        except np.linalg.LinAlgError:
            raise SingularMatrixError("chunk innovation matrix is not positive definite") from None
        V = solve_triangular(L, MHt.T, lower=True).T
        residual = Y - H @ out.beta
        out.beta += V @ solve_triangular(L, residual, lower=True)
        out.m_inv -= V @ V.T
        out.m_inv[...] = 0.5 * (out.m_inv + out.m_inv.T)
    out.hidden_sum += H.sum(axis=0)
    out.samples_seen += H.shape[0]
    return out


def sequential_sweep(state: ModelState, H, Y, inplace: bool = False) -> ModelState:
    """Equivalent to ``sequential_update`` on every row of ``H`` in turn, in one kernel call."""
    H = _as_matrix(H, "H")
    Y = _as_matrix(Y, "Y")
    if H.shape[1] != state.hidden_dim or Y.shape != (H.shape[0], state.labels.count):
        raise ShapeError(
            "sweep block shape", (H.shape[0], state.hidden_dim, state.labels.count),
            (H.shape, Y.shape),
        )
    out = state if inplace else state.copy()
    if H.shape[0]:
        kernels.rank1_sweep(out.m_inv, out.beta, np.ascontiguousarray(H), np.ascontiguousarray(Y))
        out.hidden_sum += H.sum(axis=0)
        out.samples_seen += H.shape[0]
    return out


def expand_labels(
    state: ModelState,
    new_labels,
    mode: ExpansionMode | str = ExpansionMode.HISTORY_EXACT,
    H_trigger=None,
    allow_empty: bool = False,
    inplace: bool = False,
) -> ModelState:
    """Append output columns for ``new_labels``.

    Existing columns of ``beta`` are kept as they are. Each new column is
    the correction that treats past samples as negatives (target -1):

    * ``history-exact``: ``-m_inv @ hidden_sum``, every consumed sample.
    * ``paper-literal``: ``-m_inv @ H_trigger^T @ ones``, the triggering
      chunk only.

    ``m_inv``, ``hidden_sum`` and ``samples_seen`` are unchanged.
    """
    new_labels = [str(n) for n in new_labels]
    if not new_labels:
        if allow_empty:
            return state
        raise InvalidArgumentError("new_labels must not be empty")
    registry = state.labels.extended(new_labels)
    mode = ExpansionMode.parse(mode)
    c = len(new_labels)

    if mode is ExpansionMode.HISTORY_EXACT:
        column = -(state.m_inv @ state.hidden_sum)
    else:
        if H_trigger is None:
            raise InvalidArgumentError("paper-literal expansion needs the triggering chunk's hidden map")
        Ht = _as_matrix(H_trigger, "H_trigger")
        if Ht.shape[1] != state.hidden_dim:
            raise ShapeError("H_trigger columns must equal the hidden size", state.hidden_dim, Ht.shape[1])
        column = -(state.m_inv @ Ht.sum(axis=0))
    delta = np.repeat(column[:, None], c, axis=1)

    out = state if inplace else state.copy()
    out.beta = np.ascontiguousarray(np.hstack([out.beta, delta]))
    out.labels = registry
    return out


def save_state(state: ModelState, file, extra: dict | None = None) -> None:
    """Write ``state`` as an ``.npz`` document. Matrices are stored raw, so round trips are bit-exact."""
    meta = {
        "format": STATE_FORMAT,
        "samples_seen": int(state.samples_seen),
        "ridge": repr(float(state.ridge)),
        "labels": state.labels.names,
        "extra": extra or {},
    }
    np.savez(
        file,
        beta=state.beta,
        m_inv=state.m_inv,
        hidden_sum=state.hidden_sum,
        meta=np.array(json.dumps(meta, sort_keys=True)),
    )


def load_state(file) -> tuple[ModelState, dict]:
    """Inverse of :func:`save_state`; returns the state and the ``extra`` dict."""
    with np.load(file, allow_pickle=False) as doc:
        meta = json.loads(str(doc["meta"]))
        if meta.get("format") != STATE_FORMAT:
            raise InvalidArgumentError(f"unsupported model format {meta.get('format')!r}")
        state = ModelState(
            beta=np.ascontiguousarray(doc["beta"]),
            m_inv=np.ascontiguousarray(doc["m_inv"]),
            hidden_sum=doc["hidden_sum"].copy(),
            samples_seen=int(meta["samples_seen"]),
            labels=LabelRegistry(meta["labels"]),
            ridge=float(meta["ridge"]),
        )
    state.check()
    return state, meta["extra"]


def state_to_bytes(state: ModelState, extra: dict | None = None) -> bytes:
    buf = io.BytesIO()
    save_state(state, buf, extra)
    return buf.getvalue()


def state_from_bytes(data: bytes) -> tuple[ModelState, dict]:
    return load_state(io.BytesIO(data))
