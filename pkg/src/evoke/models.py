"""Teacher and student grid CNNs, counters, and checkpoint files.

The teacher stacks four convolutions (three 4x4, then a 1x1 fusing down
to 64 maps) with no pooling, so the 9x9 grid survives to the flatten,
giving a 64*9*9 = 5184 feature vector ahead of the 1024-unit head. The
student keeps two 4x4 convolutions (16 then 32 maps) and a 128-unit
head, about 17.5x fewer parameters. Both emit raw 3-label logits;
sigmoids live in the loss and inference paths.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, asdict

import numpy as np

from .preprocess import GRID_COLS, GRID_ROWS, N_BANDS
from .tensor import (
    DEFAULT_DTYPE,
    Prng,
    ShapeError,
    Tensor,
    conv2d,
    flatten,
    kaiming_init,
    linear,
    relu,
    same_padding,
)


class CheckpointError(Exception):
    """Base for unreadable or inconsistent checkpoint files."""


class UnknownArchitectureError(CheckpointError):
    pass


class ChecksumError(CheckpointError):
    pass


class DimsMismatchError(CheckpointError):
    pass


@dataclass
class TeacherConfig:
    conv_channels: tuple = (64, 128, 256)
    fuse_channels: int = 64
    kernel: int = 4
    fc_hidden: int = 1024
    n_labels: int = 3

    @property
    def flatten_size(self):
        return self.fuse_channels * GRID_ROWS * GRID_COLS


@dataclass
class StudentConfig:
    c1_channels: int = 16
    c2_channels: int = 32
    kernel: int = 4
    fc_hidden: int = 128
    n_labels: int = 3

    @property
    def flatten_size(self):
        return self.c2_channels * GRID_ROWS * GRID_COLS


def _config_from_dict(arch, d):
    d = dict(d)
    if "conv_channels" in d:
        d["conv_channels"] = tuple(d["conv_channels"])
    cls = {"teacher": TeacherConfig, "student": StudentConfig}[arch]
    return cls(**d)


class Conv2dLayer:
    kind = "conv"

    def __init__(self, cin, cout, kernel, prng, name, dtype=DEFAULT_DTYPE):
        self.cin, self.cout, self.kernel = cin, cout, kernel
        self.padding = same_padding(kernel)
        self.weight = kaiming_init(prng, (cout, cin, kernel, kernel), dtype=dtype, name=f"{name}.weight")
        self.bias = Tensor(np.zeros(cout, dtype=dtype), requires_grad=True, dtype=dtype, name=f"{name}.bias")
        self.name = name

    def __call__(self, x):
        return conv2d(x, self.weight, self.bias, self.padding)

    def named_params(self):
        return [(self.weight.name, self.weight), (self.bias.name, self.bias)]


class LinearLayer:
    kind = "linear"

    def __init__(self, fin, fout, prng, name, dtype=DEFAULT_DTYPE):
        self.fin, self.fout = fin, fout
        self.weight = kaiming_init(prng, (fout, fin), dtype=dtype, name=f"{name}.weight")
        self.bias = Tensor(np.zeros(fout, dtype=dtype), requires_grad=True, dtype=dtype, name=f"{name}.bias")
        self.name = name

    def __call__(self, x):
        return linear(x, self.weight, self.bias)

    def named_params(self):
        return [(self.weight.name, self.weight), (self.bias.name, self.bias)]


class ReluLayer:
    kind = "relu"

    def __call__(self, x):
        return relu(x)

    def named_params(self):
        return []


class FlattenLayer:
    kind = "flatten"

    def __call__(self, x):
        return flatten(x)

    def named_params(self):
        return []


class Model:
    """An ordered layer stack with named parameters and an arch tag."""

    def __init__(self, arch, config, layers, meta=None):
        self.arch = arch
        self.config = config
        self.layers = layers
        self.meta = meta or {}

    def forward(self, x):
        for layer in self.layers:
            x = layer(x)
        return x

    __call__ = forward

    def named_params(self):
        out = []
        for layer in self.layers:
            out.extend(layer.named_params())
        return out

    def set_requires_grad(self, flag):
        for _, p in self.named_params():
            p.requires_grad = bool(flag)
        return self

    def freeze(self):
        return self.set_requires_grad(False)


def build_teacher(cfg=None, prng=None, dtype=DEFAULT_DTYPE):
    """Four-conv CCNN: 4x4 convs 4->64->128->256, 1x1 fuse to 64, then
    a 5184->1024->3 head. ReLU after every hidden layer, no pooling."""
    cfg = cfg or TeacherConfig()
    prng = prng or Prng(0)
    a, b, c = cfg.conv_channels
    k = cfg.kernel
    layers = [
        Conv2dLayer(N_BANDS, a, k, prng.derive("conv1"), "conv1", dtype),
        ReluLayer(),
        Conv2dLayer(a, b, k, prng.derive("conv2"), "conv2", dtype),
        ReluLayer(),
        Conv2dLayer(b, c, k, prng.derive("conv3"), "conv3", dtype),
        ReluLayer(),
        Conv2dLayer(c, cfg.fuse_channels, 1, prng.derive("conv4"), "conv4", dtype),
        ReluLayer(),
        FlattenLayer(),
        LinearLayer(cfg.flatten_size, cfg.fc_hidden, prng.derive("fc1"), "fc1", dtype),
        ReluLayer(),
        LinearLayer(cfg.fc_hidden, cfg.n_labels, prng.derive("fc2"), "fc2", dtype),
    ]
    return Model("teacher", cfg, layers)


def build_student(cfg=None, prng=None, dtype=DEFAULT_DTYPE):
    """Two-conv student: 4x4 convs 4->16->32, then a 2592->128->3 head."""
    cfg = cfg or StudentConfig()
    prng = prng or Prng(0)
    k = cfg.kernel
    layers = [
        Conv2dLayer(N_BANDS, cfg.c1_channels, k, prng.derive("conv1"), "conv1", dtype),
        ReluLayer(),
        Conv2dLayer(cfg.c1_channels, cfg.c2_channels, k, prng.derive("conv2"), "conv2", dtype),
        ReluLayer(),
        FlattenLayer(),
        LinearLayer(cfg.flatten_size, cfg.fc_hidden, prng.derive("fc1"), "fc1", dtype),
        ReluLayer(),
        LinearLayer(cfg.fc_hidden, cfg.n_labels, prng.derive("fc2"), "fc2", dtype),
    ]
    return Model("student", cfg, layers)


_BUILDERS = {"teacher": build_teacher, "student": build_student}


def count_params(model):
    """Total element count over all trainable tensors."""
    return int(sum(p.size for _, p in model.named_params()))


def count_flops(model, input_dims):
    """Forward FLOPs for a batch of input_dims, one MAC = 2 FLOPs.

    Convolutions cost 2*h*w*cout*cin*k^2 per sample, linears 2*out*in,
    and each activation costs 1 per element.
    """
    if len(input_dims) != 4:
        raise ShapeError(f"count_flops expects [n, c, h, w] input dims, got {input_dims}")
    n, c, h, w = (int(d) for d in input_dims)
    total = 0
    shape = (c, h, w)
    for layer in model.layers:
        if layer.kind == "conv":
            if shape[0] != layer.cin:
                raise ShapeError(f"input dims {input_dims} do not fit layer {layer.name}")
            c, h, w = shape
            total += 2 * h * w * layer.cout * layer.cin * layer.kernel**2 * n
            shape = (layer.cout, h, w)
        elif layer.kind == "linear":
            total += 2 * layer.fout * layer.fin * n
            shape = (layer.fout,)
        elif layer.kind == "relu":
            total += int(np.prod(shape, dtype=np.int64)) * n
        elif layer.kind == "flatten":
            shape = (int(np.prod(shape, dtype=np.int64)),)
    return int(total)


# ---------------------------------------------------------------------------
# checkpoints: u64 header length | JSON header | raw float32 payload

CHECKPOINT_FORMAT_VERSION = 1


def serialize_checkpoint(model, meta=None):
    """Checkpoint bytes for a model; deterministic for identical state."""
    index = []
    chunks = []
    offset = 0
    for name, p in model.named_params():
        raw = np.ascontiguousarray(p.data, dtype="<f4").tobytes()
        index.append({"name": name, "dims": list(p.dims), "offset": offset})
        chunks.append(raw)
        offset += len(raw)
    payload = b"".join(chunks)
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "arch": model.arch,
        "config": asdict(model.config),
        "tensors": index,
        "meta": meta if meta is not None else model.meta,
        "payload_len": len(payload),
        "payload_crc32": zlib.crc32(payload),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    return struct.pack("<Q", len(blob)) + blob + payload


def save_checkpoint(model, meta, path):
    data = serialize_checkpoint(model, meta)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def load_checkpoint(path, requires_grad=False):
    """Rebuild a model from a checkpoint; exact parameter round trip.

    The architecture tag must be known, tensor dims must match the
    config-built model, and the payload CRC must verify.
    """
    with open(path, "rb") as fh:
        raw_len = fh.read(8)
        if len(raw_len) < 8:
            raise ChecksumError(f"{path}: file too short for a checkpoint header")
        (header_len,) = struct.unpack("<Q", raw_len)
        blob = fh.read(header_len)
        if len(blob) < header_len:
            raise ChecksumError(f"{path}: truncated checkpoint header")
        try:
            header = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ChecksumError(f"{path}: unreadable checkpoint header: {exc}") from None
        payload = fh.read()

    arch = header.get("arch")
    if arch not in _BUILDERS:
        raise UnknownArchitectureError(f"{path}: unknown architecture tag {arch!r}")
    if len(payload) != header["payload_len"] or zlib.crc32(payload) != header["payload_crc32"]:
        raise ChecksumError(f"{path}: payload checksum failure")

    cfg = _config_from_dict(arch, header["config"])
    model = _BUILDERS[arch](cfg, Prng(0))
    params = dict(model.named_params())
    if set(params) != {t["name"] for t in header["tensors"]}:
        raise DimsMismatchError(f"{path}: tensor index does not match architecture {arch}")
    for entry in header["tensors"]:
        p = params[entry["name"]]
        dims = tuple(entry["dims"])
        if dims != tuple(p.dims):
            raise DimsMismatchError(
                f"{path}: {entry['name']} has dims {dims}, architecture expects {tuple(p.dims)}"
            )
        start = entry["offset"]
        count = int(np.prod(dims, dtype=np.int64))
        chunk = payload[start : start + count * 4]
        if len(chunk) != count * 4:
            raise ChecksumError(f"{path}: payload too short for tensor {entry['name']}")
        p.data = np.frombuffer(chunk, dtype="<f4").reshape(dims).copy()
    model.meta = header.get("meta", {})
    model.set_requires_grad(requires_grad)
    return model
