"""Sequential models, the two architectures, and the model file format."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ArchMismatch, ConfigInvariantViolation, ParseError
from .layers import (BatchNorm1d, Collapse, Conv1d, Dense, Dropout, ReLU, Standardize,
                     ToChannelMajor)

CHANNELS = 64
FCNN_WIDTH = 128
FCNN_HIDDEN = 3  # 128 -> 128 layers between the input and output layers


class Model:
    """A layer stack plus a text descriptor sufficient to rebuild it."""

    def __init__(self, layers, descriptor: dict):
        self.layers = list(layers)
        self.descriptor = {k: str(v) for k, v in descriptor.items()}

    def forward(self, x, train: bool = False):
        for layer in self.layers:
            layer.release()
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    __call__ = forward

    def backward(self, g):
        for layer in reversed(self.layers):
            g = layer.backward(g)
            layer.release()
        return g

    @property
    def params(self):
        return [p for layer in self.layers for p in layer.params]

    @property
    def grads(self):
        return [g for layer in self.layers for g in layer.grads]

    @property
    def buffers(self):
        return [b for layer in self.layers for b in layer.buffers]

    def tensors(self):
        return self.params + self.buffers

    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def state(self):
        return [t.copy() for t in self.tensors()]

    def load_state(self, state) -> None:
        for t, s in zip(self.tensors(), state, strict=True):
            t[...] = s

    def set_rng(self, rng) -> None:
        for layer in self.layers:
            if isinstance(layer, Dropout):
                layer.rng = rng

    @property
    def input_shape(self) -> tuple:
        d = self.descriptor
        if d["arch"] == "cnn":
            return (3, int(d["input_len"]))
        return (int(d["num_features"]),)

    @property
    def num_classes(self) -> int:
        return int(self.descriptor["num_classes"])

    def check_input(self, shape) -> None:
        if tuple(shape) != self.input_shape:
            raise ArchMismatch(f"features have shape {tuple(shape)}, model expects {self.input_shape}")

    def summary(self) -> str:
        return "\n".join(layer.spec() for layer in self.layers)


# ---------------------------------------------------------------------------
# CNN


def default_l2(input_len: int) -> int:
    return max(0, math.ceil(math.log2(input_len))) if input_len > 1 else 0


@dataclass(frozen=True)
class CnnConfig:
    input_len: int
    num_classes: int
    L1: int = 0
    L2: int | None = None
    L3: int = 3
    KS: int = 17
    channels: int = CHANNELS

    @property
    def l2(self) -> int:
        return default_l2(self.input_len) if self.L2 is None else self.L2

    def validate(self) -> None:
        if self.KS < 1 or self.KS % 2 == 0:
            raise ConfigInvariantViolation(f"kernel size {self.KS} must be odd")
        if self.channels != CHANNELS:
            raise ConfigInvariantViolation("channel count is fixed at 64")
        if min(self.L1, self.l2, self.L3) < 0 or self.input_len < 1 or self.num_classes < 2:
            raise ConfigInvariantViolation("layer counts must be nonnegative, 2+ classes")
        if -(-self.input_len // 2 ** self.l2) != 1:
            raise ConfigInvariantViolation(
                f"ceil({self.input_len} / 2^{self.l2}) != 1; sequence would not reduce to length 1")


def _conv_block(c_in, c_out, ks, stride, rng):
    return [Conv1d(c_in, c_out, ks, stride, rng), ReLU(), BatchNorm1d(c_out)]


def build_cnn(config: CnnConfig, seed: int = 0) -> Model:
    """prep conv 3->64, L1 + L2 (stride 2) + L3 convs, each with ReLU then batch norm; dense 64->K."""
    config.validate()
    rng = np.random.default_rng(seed)
    c, ks = config.channels, config.KS
    layers = [ToChannelMajor()]
    layers += _conv_block(3, c, ks, 1, rng)
    for stride, count in ((1, config.L1), (2, config.l2), (1, config.L3)):
        for _ in range(count):
            layers += _conv_block(c, c, ks, stride, rng)
    layers += [Collapse(), Dense(c, config.num_classes, rng)]
    desc = dict(arch="cnn", input_len=config.input_len, num_classes=config.num_classes,
                L1=config.L1, L2=config.l2, L3=config.L3, KS=ks, channels=c)
    return Model(layers, desc)


# ---------------------------------------------------------------------------
# FCNN


def build_fcnn(num_features: int, num_classes: int, dropout_rate: float = 0.0,
               seed: int = 0, arch: str = "fcnn") -> Model:
    """Standardise, dense F->128, 3 x dense 128->128, dense 128->K; dropout then ReLU between."""
    if num_features < 1:
        raise ConfigInvariantViolation("need at least one input feature")
    if num_classes < 2:
        raise ConfigInvariantViolation("need at least two classes")
    rng = np.random.default_rng(seed)
    drop_rng = np.random.default_rng(seed + 1)
    widths = [num_features] + [FCNN_WIDTH] * (FCNN_HIDDEN + 1) + [num_classes]
    layers = [Standardize(num_features)]
    for i in range(len(widths) - 1):
        if i:
            layers += [Dropout(dropout_rate, drop_rng), ReLU()]
        layers.append(Dense(widths[i], widths[i + 1], rng))
    desc = dict(arch=arch, num_features=num_features, num_classes=num_classes, dropout=dropout_rate)
    return Model(layers, desc)


def build_from_descriptor(desc: dict) -> Model:
    arch = desc["arch"]
    if arch == "cnn":
        cfg = CnnConfig(input_len=int(desc["input_len"]), num_classes=int(desc["num_classes"]),
                        L1=int(desc["L1"]), L2=int(desc["L2"]), L3=int(desc["L3"]),
                        KS=int(desc["KS"]), channels=int(desc["channels"]))
        model = build_cnn(cfg)
    elif arch in ("fcnn", "omega"):
        model = build_fcnn(int(desc["num_features"]), int(desc["num_classes"]),
                           float(desc["dropout"]), arch=arch)
    else:
        raise ParseError(f"unknown architecture {arch!r}")
    model.descriptor = dict(desc)
    return model


# ---------------------------------------------------------------------------
# model file: magic, u32 version, u32 descriptor length, descriptor text
# (key=value lines), u32 tensor count, then per tensor u32 ndim, u32 dims,
# little-endian float64 data. Parameters come first, then buffers.

MAGIC = b"ECRKMODL"
VERSION = 1


def model_to_bytes(model: Model) -> bytes:
    text = "".join(f"{k}={v}\n" for k, v in sorted(model.descriptor.items())).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", VERSION, len(text)), text]
    tensors = model.tensors()
    parts.append(struct.pack("<I", len(tensors)))
    for t in tensors:
        parts.append(struct.pack(f"<I{t.ndim}I", t.ndim, *t.shape))
        parts.append(np.ascontiguousarray(t, dtype="<f8").tobytes())
    return b"".join(parts)


def save_model(path, model: Model) -> None:
    Path(path).write_bytes(model_to_bytes(model))


def model_from_bytes(data: bytes) -> Model:
    if data[:len(MAGIC)] != MAGIC:
        raise ParseError("not a model file (bad magic)")
    pos = len(MAGIC)
    try:
        version, n = struct.unpack_from("<II", data, pos)
        pos += 8
        if version != VERSION:
            raise ParseError(f"unsupported model version {version}")
        desc = {}
        for line in data[pos:pos + n].decode("utf-8").splitlines():
            k, _, v = line.partition("=")
            desc[k] = v
        pos += n
        model = build_from_descriptor(desc)
        (count,) = struct.unpack_from("<I", data, pos)
        pos += 4
        tensors = model.tensors()
        if count != len(tensors):
            raise ParseError(f"model file has {count} tensors, architecture needs {len(tensors)}")
        for t in tensors:
            (ndim,) = struct.unpack_from("<I", data, pos)
            shape = struct.unpack_from(f"<{ndim}I", data, pos + 4)
            pos += 4 + 4 * ndim
            if tuple(shape) != t.shape:
                raise ParseError(f"tensor shape {shape} does not match {t.shape}")
            t[...] = np.frombuffer(data, dtype="<f8", count=t.size, offset=pos).reshape(shape)
            pos += 8 * t.size
    except (struct.error, ValueError) as exc:
        raise ParseError(f"truncated model file: {exc}") from None
    return model


def load_model(path) -> Model:
    return model_from_bytes(Path(path).read_bytes())
