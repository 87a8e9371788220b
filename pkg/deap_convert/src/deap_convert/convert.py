"""DEAP preprocessed archive to container conversion.

A per-subject archive is a pickled dict with

    data:   40 trials x 40 channels x 8064 samples (float64)
    labels: 40 trials x 4 ratings (valence, arousal, dominance, liking)

The first 32 channels are EEG in Geneva order and are kept; the last 8
are peripheral sensors and are dropped, as is the liking rating. Each
trial becomes one 32 x 8064 float32 container; ratings go into the
manifest raw, with advisory bits thresholded at 5.0 (the consumer
re-thresholds from the raw ratings, so the bits are duplicates).
"""

import os
import pickle

import numpy as np

from .containers import manifest_skeleton, write_container, write_manifest

N_TRIALS = 40
N_CHANNELS_TOTAL = 40
N_CHANNELS_EEG = 32
N_SAMPLES = 8064  # (3 + 60) seconds at 128 Hz
N_RATINGS = 4  # valence, arousal, dominance, liking

RATING_THRESHOLD = 5.0


class ArchiveError(Exception):
    """Archive is unreadable or has unexpected shapes."""


def load_archive(path):
    try:
        with open(path, "rb") as fh:
            raw = pickle.load(fh, encoding="latin1")
    except (OSError, pickle.UnpicklingError, EOFError, UnicodeDecodeError) as exc:
        raise ArchiveError(f"{path}: cannot read archive: {exc}") from None
    if not isinstance(raw, dict) or "data" not in raw or "labels" not in raw:
        raise ArchiveError(f"{path}: archive must be a dict with 'data' and 'labels'")
    data = np.asarray(raw["data"])
    labels = np.asarray(raw["labels"])
    if data.shape != (N_TRIALS, N_CHANNELS_TOTAL, N_SAMPLES):
        raise ArchiveError(
            f"{path}: data shape {data.shape}, expected "
            f"({N_TRIALS}, {N_CHANNELS_TOTAL}, {N_SAMPLES})"
        )
    if labels.shape != (N_TRIALS, N_RATINGS):
        raise ArchiveError(
            f"{path}: labels shape {labels.shape}, expected ({N_TRIALS}, {N_RATINGS})"
        )
    return data, labels


def subject_tag(archive_path):
    return os.path.splitext(os.path.basename(archive_path))[0]


def convert(archive_paths, out_dir):
    """Convert archives into out_dir; returns the manifest dict.

    Emits one container per trial plus a single manifest.json covering
    every converted archive. Deterministic: identical archives give
    byte-identical outputs.
    """
    os.makedirs(out_dir, exist_ok=True)
    manifest = manifest_skeleton()
    for path in archive_paths:
        data, labels = load_archive(path)
        subject = subject_tag(path)
        for ti in range(N_TRIALS):
            eeg = data[ti, :N_CHANNELS_EEG, :]  # peripheral channels dropped
            name = f"{subject}_t{ti + 1:03d}.evkt"
            write_container(eeg, os.path.join(out_dir, name))
            ratings = [float(x) for x in labels[ti, :3]]  # liking dropped
            manifest["trials"].append(
                {
                    "path": name,
                    "subject": subject,
                    "trial": f"t{ti + 1:03d}",
                    "ratings": ratings,
                    "bits": [int(r > RATING_THRESHOLD) for r in ratings],
                    "dims": [N_CHANNELS_EEG, N_SAMPLES],
                }
            )
    write_manifest(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest
