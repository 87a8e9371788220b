"""Inference latency, throughput, and footprint measurements.

Wall-clock numbers are hardware-specific; use the orderings and the
param/FLOP ratios for comparisons, not the absolute milliseconds.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

import numpy as np

from .models import count_flops, count_params, serialize_checkpoint
from .preprocess import GRID_COLS, GRID_ROWS, N_BANDS
from .tensor import Prng, Tensor, ValidationError


@dataclass
class BenchReport:
    model: str
    batch_size: int
    iterations: int
    warmup: int
    mean_ms: float
    median_ms: float
    p95_ms: float
    throughput_per_s: float
    param_count: int
    flops: int  # per-sample forward FLOPs
    checkpoint_bytes: int

    def to_dict(self):
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def measure(model, batch_size=128, iterations=200, warmup=20, prng=None):
    """Time `iterations` forward passes on one fixed random batch.

    Warmup passes are unrecorded; timing uses a monotonic clock and a
    single execution context. throughput = batch_size / mean latency.
    """
    if iterations < 10:
        raise ValidationError(f"need at least 10 iterations, got {iterations}")
    if warmup < 1:
        raise ValidationError(f"need at least 1 warmup pass, got {warmup}")
    prng = prng or Prng(0)
    batch = Tensor(prng.normal((batch_size, N_BANDS, GRID_ROWS, GRID_COLS), dtype=np.float32))
    for _ in range(warmup):
        model.forward(batch)
    latencies = np.empty(iterations)
    for i in range(iterations):
        t0 = time.perf_counter()
        model.forward(batch)
        latencies[i] = (time.perf_counter() - t0) * 1e3
    mean_ms = float(latencies.mean())
    return BenchReport(
        model=model.arch,
        batch_size=batch_size,
        iterations=iterations,
        warmup=warmup,
        mean_ms=mean_ms,
        median_ms=float(np.median(latencies)),
        p95_ms=float(np.percentile(latencies, 95)),
        throughput_per_s=batch_size / (mean_ms / 1e3),
        param_count=count_params(model),
        flops=count_flops(model, (1, N_BANDS, GRID_ROWS, GRID_COLS)),
        checkpoint_bytes=len(serialize_checkpoint(model)),
    )


def measure_multiworker(model, workers, batch_size=128, iterations=200, warmup=20, prng=None):
    """Aggregate throughput with `workers` concurrent inference contexts.

    Each worker times its own forward loop against the shared read-only
    model; throughput is total samples over wall time. Latency fields
    report the across-worker mean of per-worker means.
    """
    if workers < 1:
        raise ValidationError(f"need at least 1 worker, got {workers}")
    if workers == 1:
        return measure(model, batch_size, iterations, warmup, prng)
    if iterations < 10:
        raise ValidationError(f"need at least 10 iterations, got {iterations}")
    if warmup < 1:
        raise ValidationError(f"need at least 1 warmup pass, got {warmup}")
    prng = prng or Prng(0)
    batches = [
        Tensor(prng.derive("bench", w).normal((batch_size, N_BANDS, GRID_ROWS, GRID_COLS),
                                              dtype=np.float32))
        for w in range(workers)
    ]
    means = [0.0] * workers
    barrier = threading.Barrier(workers + 1)

    def run(w):
        for _ in range(warmup):
            model.forward(batches[w])
        barrier.wait()
        t0 = time.perf_counter()
        for _ in range(iterations):
            model.forward(batches[w])
        means[w] = (time.perf_counter() - t0) / iterations * 1e3

    threads = [threading.Thread(target=run, args=(w,)) for w in range(workers)]
    for t in threads:
        t.start()
    barrier.wait()  # all workers warmed up; start the wall clock
    wall0 = time.perf_counter()
    for t in threads:
        t.join()
    wall = time.perf_counter() - wall0
    mean_ms = float(np.mean(means))
    return BenchReport(
        model=f"{model.arch}x{workers}",
        batch_size=batch_size,
        iterations=iterations * workers,
        warmup=warmup,
        mean_ms=mean_ms,
        median_ms=float(np.median(means)),
        p95_ms=float(np.percentile(means, 95)),
        throughput_per_s=workers * iterations * batch_size / wall,
        param_count=count_params(model),
        flops=count_flops(model, (1, N_BANDS, GRID_ROWS, GRID_COLS)),
        checkpoint_bytes=len(serialize_checkpoint(model)),
    )


def compare(reports):
    """Rank reports by throughput; ratio columns are vs the largest model."""
    if len(reports) < 2:
        raise ValidationError("compare needs at least 2 reports")
    largest = max(reports, key=lambda r: r.param_count)
    rows = []
    for r in sorted(reports, key=lambda r: r.throughput_per_s, reverse=True):
        rows.append(
            {
                "model": r.model,
                "throughput_per_s": r.throughput_per_s,
                "mean_ms": r.mean_ms,
                "param_count": r.param_count,
                "flops": r.flops,
                "checkpoint_bytes": r.checkpoint_bytes,
                "param_ratio_vs_largest": largest.param_count / r.param_count,
                "flops_ratio_vs_largest": largest.flops / r.flops,
            }
        )
    return rows


def format_table(rows):
    """Human-readable alignment of compare() rows."""
    headers = ["model", "thr/s", "mean ms", "params", "flops", "bytes", "param x", "flop x"]
    fmt_rows = [
        [
            row["model"],
            f"{row['throughput_per_s']:.1f}",
            f"{row['mean_ms']:.4f}",
            str(row["param_count"]),
            str(row["flops"]),
            str(row["checkpoint_bytes"]),
            f"{row['param_ratio_vs_largest']:.2f}",
            f"{row['flops_ratio_vs_largest']:.2f}",
        ]
        for row in rows
    ]
    widths = [max(len(h), *(len(r[i]) for r in fmt_rows)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    for r in fmt_rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)
