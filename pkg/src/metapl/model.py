"""Network construction, prediction, and checkpoint serialization."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .numcore import ACTIVATIONS, Params, forward, param_count, softmax_temp

INIT_LOW, INIT_HIGH = -0.1, 0.1

_MAGIC = b"MPLW"
_VERSION = 1
_ACT_CODES = {name: i for i, name in enumerate(ACTIVATIONS)}
_ACT_NAMES = {i: name for name, i in _ACT_CODES.items()}


@dataclass(frozen=True)
class MlpSpec:
    """Architecture descriptor: input_dim -> hidden widths -> classes."""

    input_dim: int
    hidden: tuple[int, ...]
    classes: int
    activation: str = "sigmoid"

    def __post_init__(self):
        if self.input_dim < 1 or any(h < 1 for h in self.hidden):
            raise ValueError("all layer widths must be >= 1")
        if self.classes < 2:
            raise ValueError(f"need at least 2 classes, got {self.classes}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "hidden", tuple(self.hidden))

    def layer_shapes(self) -> tuple[tuple[int, int], ...]:
        widths = (self.input_dim, *self.hidden, self.classes)
        return tuple((widths[i], widths[i + 1]) for i in range(len(widths) - 1))

    def param_count(self) -> int:
        return param_count(self.layer_shapes())


def init_params(spec: MlpSpec, seed: int) -> Params:
    """Uniform(-0.1, 0.1) initialization, deterministic per seed.

    Teacher and student must be given distinct seeds so they start with
    independent weights.
    """
    rng = np.random.default_rng(seed)
    values = rng.uniform(INIT_LOW, INIT_HIGH, size=spec.param_count())
    return Params(values=values, shape=spec.layer_shapes(), activation=spec.activation)


def predict(params: Params, x: np.ndarray) -> np.ndarray:
    """Class probability rows: softmax at temperature 1 over the logits."""
    return softmax_temp(forward(params, x), 1.0)


def save_params(params: Params, path) -> None:
    """Write a checkpoint: little-endian (magic, version, activation,
    layer count, per-layer fan_in/fan_out, float64 values)."""
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<IBI", _VERSION, _ACT_CODES[params.activation], len(params.shape)))
        for fan_in, fan_out in params.shape:
            f.write(struct.pack("<II", fan_in, fan_out))
        f.write(params.values.astype("<f8").tobytes())


def load_params(path) -> Params:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (bad magic {magic!r})")
        version, act_code, n_layers = struct.unpack("<IBI", f.read(9))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        if act_code not in _ACT_NAMES:
            raise ValueError(f"{path}: unknown activation code {act_code}")
        shape = tuple(struct.unpack("<II", f.read(8)) for _ in range(n_layers))
        n = param_count(shape)
        raw = f.read(8 * n)
        if len(raw) != 8 * n:
            raise ValueError(f"{path}: truncated checkpoint ({len(raw)} of {8 * n} bytes)")
        values = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    return Params(values=values, shape=shape, activation=_ACT_NAMES[act_code])
