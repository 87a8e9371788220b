"""Writers for the EVKT container format and the dataset manifest.

This tool only produces the formats; the consumer side lives in the
emotion-recognition package. Container layout (little-endian):

    magic "EVKT" | u32 version=1 | u8 dtype (1 = float32) | u8 ndim |
    u16 reserved=0 | u64 x ndim extents | raw row-major float32 payload

The manifest is UTF-8 JSON with dataset-level preprocessing parameters
and one row per trial (path relative to the manifest, subject, trial,
raw ratings, advisory threshold bits, container dims).
"""

import json
import struct

import numpy as np

MAGIC = b"EVKT"
CONTAINER_VERSION = 1
DTYPE_FLOAT32 = 1

_HEAD = struct.Struct("<4sIBBH")

SAMPLE_RATE_HZ = 128.0
BASELINE_SECS = 3.0
WINDOW_SECS = 1.0
BAND_EDGES = [[4.0, 8.0], [8.0, 14.0], [14.0, 31.0], [31.0, 49.0]]


def write_container(array, path):
    arr = np.ascontiguousarray(array, dtype="<f4")
    header = _HEAD.pack(MAGIC, CONTAINER_VERSION, DTYPE_FLOAT32, arr.ndim, 0)
    dims = struct.pack(f"<{arr.ndim}Q", *arr.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(dims)
        fh.write(arr.tobytes())


def manifest_skeleton():
    return {
        "version": 1,
        "kind": "signals",
        "sample_rate_hz": SAMPLE_RATE_HZ,
        "window_secs": WINDOW_SECS,
        "baseline_secs": BASELINE_SECS,
        "band_edges": BAND_EDGES,
        "trials": [],
    }


def write_manifest(manifest, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
