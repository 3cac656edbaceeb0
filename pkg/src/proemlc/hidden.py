"""Frozen random hidden layer of the single-hidden-layer network."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import InvalidArgumentError, ShapeError


class ActivationKind(str, enum.Enum):
    SIGMOID = "sigmoid"
    TANH = "tanh"
    RADIAL_BASIS = "radial-basis"

    @classmethod
    def parse(cls, value) -> "ActivationKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise InvalidArgumentError(
                f"unknown activation {value!r}; choose one of {choices}"
            ) from None


def _activate(kind: ActivationKind, z: np.ndarray) -> np.ndarray:
    if kind is ActivationKind.SIGMOID:
        return expit(z)
    if kind is ActivationKind.TANH:
        return np.tanh(z)
    return np.exp(-np.square(z))


@dataclass(frozen=True)
class HiddenLayer:
    """Random input weights and biases, drawn once and never tuned.

    ``weights`` has one row per hidden neuron. Both arrays are read-only and
    are regenerated bit-for-bit from ``(input_dim, hidden_dim, seed)``.
    """

    input_dim: int
    hidden_dim: int
    activation: ActivationKind
    seed: int
    weights: np.ndarray = field(repr=False, compare=False)
    biases: np.ndarray = field(repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "activation": self.activation.value,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "HiddenLayer":
        try:
            return init_hidden_layer(
                doc["input_dim"], doc["hidden_dim"], doc["activation"], doc["seed"]
            )
        except KeyError as exc:
            raise InvalidArgumentError(f"hidden layer document lacks {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "HiddenLayer":
        return cls.from_dict(json.loads(text))


def init_hidden_layer(
    input_dim: int,
    hidden_dim: int,
    activation: ActivationKind | str = ActivationKind.SIGMOID,
    seed: int = 0,
) -> HiddenLayer:
    """Draw weights and biases uniformly on [-1, 1] from a generator seeded by ``seed``."""
    input_dim, hidden_dim, seed = int(input_dim), int(hidden_dim), int(seed)
    if input_dim < 1 or hidden_dim < 1:
        raise InvalidArgumentError(
            f"input_dim and hidden_dim must be >= 1, got {input_dim} and {hidden_dim}"
        )
    kind = ActivationKind.parse(activation)
    rng = np.random.default_rng(seed)
    weights = rng.uniform(-1.0, 1.0, size=(hidden_dim, input_dim))
    biases = rng.uniform(-1.0, 1.0, size=hidden_dim)
    weights.flags.writeable = False
    biases.flags.writeable = False
    return HiddenLayer(input_dim, hidden_dim, kind, seed, weights, biases)


def hidden_map(layer: HiddenLayer, X) -> np.ndarray:
    """Return the N x hidden_dim activation matrix, entry (j, i) = g(w_i . x_j + b_i)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != layer.input_dim:
        raise ShapeError(
            "feature matrix column count does not match the hidden layer",
            expected=("N", layer.input_dim),
            actual=X.shape,
        )
    return _activate(layer.activation, X @ layer.weights.T + layer.biases)
