"""Loading manifest-indexed datasets into flat window arrays.

A "signals" manifest points at raw channel x time containers, which are
featurized on the fly; a "features" manifest (written by `preprocess`)
points at ready [n, 4, 9, 9] containers. Either way the result is one
feature matrix over all windows with trial-level bookkeeping so that
cross-validation can split at trial granularity.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .container import DatasetManifest, resolve_manifest_path, read_container, write_container, TrialEntry
from .preprocess import (
    GENEVA_ORDER,
    TrialRecording,
    ValidationError,
    extract_features,
    threshold_labels,
)


@dataclass
class WindowDataset:
    """All windows of a dataset, flattened across trials."""

    features: np.ndarray  # [N, 4, 9, 9] float32
    labels: np.ndarray  # [N, 3] float32 bits
    window_trial: np.ndarray  # [N] index into trial_ids
    trial_ids: list

    @property
    def n_windows(self):
        return self.features.shape[0]

    @property
    def n_trials(self):
        return len(self.trial_ids)

    def windows_of_trials(self, trial_indices):
        mask = np.isin(self.window_trial, np.asarray(trial_indices))
        return np.nonzero(mask)[0]


def _trial_from_entry(entry, manifest, base_dir):
    samples = read_container(os.path.join(base_dir, entry.path))
    if samples.ndim != 2 or samples.shape[0] != len(GENEVA_ORDER):
        raise ValidationError(f"{entry.path}: expected a {len(GENEVA_ORDER)} x time signal matrix")
    return TrialRecording(
        subject_id=entry.subject,
        trial_id=entry.trial,
        sample_rate_hz=manifest.sample_rate_hz,
        channels=GENEVA_ORDER,
        samples=samples,
        ratings=entry.ratings,
    )


def load_windows(path, window_secs=None, baseline_secs=None):
    """Load a manifest (file or directory) into a WindowDataset.

    Label bits always come from re-thresholding the manifest's raw
    ratings; the stored bits are advisory only.
    """
    manifest_path = resolve_manifest_path(path)
    manifest = DatasetManifest.load(manifest_path)
    base_dir = os.path.dirname(manifest_path)
    window_secs = manifest.window_secs if window_secs is None else window_secs
    baseline_secs = manifest.baseline_secs if baseline_secs is None else baseline_secs

    feats = []
    labels = []
    window_trial = []
    trial_ids = []
    for ti, entry in enumerate(manifest.trials):
        if manifest.kind == "features":
            windows = read_container(os.path.join(base_dir, entry.path))
            bits = threshold_labels(entry.ratings)
        else:
            grid = extract_features(
                _trial_from_entry(entry, manifest, base_dir),
                window_secs=window_secs,
                baseline_secs=baseline_secs,
            )
            windows, bits = grid.windows, grid.labels
        feats.append(np.asarray(windows, dtype=np.float32))
        labels.append(np.tile(np.asarray(bits, dtype=np.float32), (windows.shape[0], 1)))
        window_trial.append(np.full(windows.shape[0], ti, dtype=np.int64))
        trial_ids.append(f"{entry.subject}/{entry.trial}")
    return WindowDataset(
        features=np.concatenate(feats, axis=0),
        labels=np.concatenate(labels, axis=0),
        window_trial=np.concatenate(window_trial),
        trial_ids=trial_ids,
    )


def write_feature_dataset(signals_path, out_dir, window_secs=1.0, baseline_secs=3.0):
    """Featurize a signals manifest into a features directory + manifest."""
    manifest_path = resolve_manifest_path(signals_path)
    manifest = DatasetManifest.load(manifest_path)
    if manifest.kind != "signals":
        raise ValidationError(f"expected a signals manifest, got kind={manifest.kind!r}")
    base_dir = os.path.dirname(manifest_path)
    os.makedirs(out_dir, exist_ok=True)
    out = DatasetManifest(
        kind="features",
        sample_rate_hz=manifest.sample_rate_hz,
        window_secs=window_secs,
        baseline_secs=baseline_secs,
    )
    for entry in manifest.trials:
        grid = extract_features(
            _trial_from_entry(entry, manifest, base_dir),
            window_secs=window_secs,
            baseline_secs=baseline_secs,
        )
        name = os.path.splitext(entry.path)[0] + ".de.evkt"
        write_container(grid.windows, os.path.join(out_dir, name))
        out.trials.append(
            TrialEntry(
                path=name,
                subject=entry.subject,
                trial=entry.trial,
                ratings=entry.ratings,
                bits=grid.labels,
                dims=tuple(grid.windows.shape),
            )
        )
    out.save(os.path.join(out_dir, "manifest.json"))
    return out
