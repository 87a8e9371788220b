"""Portable tensor container files and the dataset manifest.

Container layout (little-endian throughout):

    magic "EVKT" | u32 version=1 | u8 dtype (1 = float32) | u8 ndim |
    u16 reserved=0 | u64 x ndim extents | raw row-major payload

The manifest is a UTF-8 JSON file listing trial container files along
with ratings, advisory label bits, and the preprocessing parameters the
files were produced under. Paths are stored relative to the manifest.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field, asdict

import numpy as np

from .preprocess import BAND_EDGES_HZ

MAGIC = b"EVKT"
CONTAINER_VERSION = 1
DTYPE_FLOAT32 = 1

_HEAD = struct.Struct("<4sIBBH")


class ContainerError(Exception):
    """Base for malformed container files; `code` names the failure."""

    code = "container"


class BadMagicError(ContainerError):
    code = "bad_magic"


class TruncatedPayloadError(ContainerError):
    code = "truncated"


class SizeMismatchError(ContainerError):
    code = "size_mismatch"


class ManifestError(Exception):
    """Manifest file is missing entries or disagrees with its containers."""


def write_container(array, path):
    """Write an array as a float32 container; returns the byte count."""
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim < 1:
        raise ValueError("container tensors need at least one dimension")
    header = _HEAD.pack(MAGIC, CONTAINER_VERSION, DTYPE_FLOAT32, arr.ndim, 0)
    dims = struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = arr.tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(dims)
        fh.write(payload)
    return len(header) + len(dims) + len(payload)


def _read_header(fh, path):
    head = fh.read(_HEAD.size)
    if len(head) < 4 or head[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic, not an EVKT container")
    if len(head) < _HEAD.size:
        raise TruncatedPayloadError(f"{path}: truncated header")
    _, version, dtype, ndim, reserved = _HEAD.unpack(head)
    if version != CONTAINER_VERSION:
        raise ContainerError(f"{path}: unsupported container version {version}")
    if dtype != DTYPE_FLOAT32:
        raise ContainerError(f"{path}: unsupported dtype code {dtype}")
    raw_dims = fh.read(8 * ndim)
    if len(raw_dims) < 8 * ndim:
        raise TruncatedPayloadError(f"{path}: truncated dims")
    dims = struct.unpack(f"<{ndim}Q", raw_dims)
    if any(d == 0 for d in dims):
        raise ContainerError(f"{path}: zero extent in dims {dims}")
    return dims


def read_container_dims(path):
    """Dims from a container header without touching the payload."""
    with open(path, "rb") as fh:
        return _read_header(fh, path)


def read_container(path):
    """Read a container back into a float32 array; lossless round trip."""
    with open(path, "rb") as fh:
        dims = _read_header(fh, path)
        expect = int(np.prod(dims, dtype=np.uint64)) * 4
        payload = fh.read()
    if len(payload) < expect:
        raise TruncatedPayloadError(
            f"{path}: payload holds {len(payload) // 4} scalars, header declares {expect // 4}"
        )
    if len(payload) > expect:
        raise SizeMismatchError(
            f"{path}: payload holds {len(payload) // 4} scalars, header declares {expect // 4}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


@dataclass
class TrialEntry:
    """One manifest row: a container file plus its labels."""

    path: str
    subject: str
    trial: str
    ratings: tuple  # raw (valence, arousal, dominance) on [1, 9]
    bits: tuple  # advisory thresholded bits
    dims: tuple

    def to_dict(self):
        d = asdict(self)
        d["ratings"] = list(self.ratings)
        d["bits"] = list(self.bits)
        d["dims"] = list(self.dims)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            path=d["path"],
            subject=d["subject"],
            trial=d["trial"],
            ratings=tuple(float(r) for r in d["ratings"]),
            bits=tuple(int(b) for b in d["bits"]),
            dims=tuple(int(x) for x in d["dims"]),
        )


@dataclass
class DatasetManifest:
    """Index of a dataset directory; kind is "signals" or "features"."""

    version: int = 1
    kind: str = "signals"
    sample_rate_hz: float = 128.0
    window_secs: float = 1.0
    baseline_secs: float = 3.0
    band_edges: tuple = BAND_EDGES_HZ
    trials: list = field(default_factory=list)

    def to_dict(self):
        return {
            "version": self.version,
            "kind": self.kind,
            "sample_rate_hz": self.sample_rate_hz,
            "window_secs": self.window_secs,
            "baseline_secs": self.baseline_secs,
            "band_edges": [list(b) for b in self.band_edges],
            "trials": [t.to_dict() for t in self.trials],
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path, validate=True):
        path = resolve_manifest_path(path)
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
        manifest = cls(
            version=int(d["version"]),
            kind=d.get("kind", "signals"),
            sample_rate_hz=float(d["sample_rate_hz"]),
            window_secs=float(d["window_secs"]),
            baseline_secs=float(d["baseline_secs"]),
            band_edges=tuple(tuple(b) for b in d["band_edges"]),
            trials=[TrialEntry.from_dict(t) for t in d["trials"]],
        )
        if validate:
            manifest.check_files(os.path.dirname(path))
        return manifest

    def check_files(self, base_dir):
        """Every referenced container must exist with matching dims."""
        for entry in self.trials:
            full = os.path.join(base_dir, entry.path)
            if not os.path.exists(full):
                raise ManifestError(f"manifest references missing file {entry.path}")
            dims = read_container_dims(full)
            if tuple(dims) != tuple(entry.dims):
                raise ManifestError(
                    f"{entry.path}: container dims {dims} do not match manifest dims {entry.dims}"
                )


def resolve_manifest_path(path):
    """Accept either a manifest file or a directory holding manifest.json."""
    if os.path.isdir(path):
        return os.path.join(path, "manifest.json")
    return path
