"""Synthetic EEG dataset with labels planted in band power.

Each trial is Gaussian noise on all 32 channels plus, after the
baseline period, one sinusoid per label dimension at a fixed set of
electrodes: valence rides the alpha band at occipital sites, arousal
the beta band at frontal sites, dominance the gamma band at central
sites. A high amplitude encodes bit 1 and a low amplitude bit 0, and
the emitted rating is placed strictly above or below the 5.0 threshold
to match, so every label is recoverable from band power alone.
"""

from __future__ import annotations

import os

import numpy as np

from .container import DatasetManifest, TrialEntry, write_container
from .preprocess import GENEVA_ORDER, threshold_labels

LABEL_NAMES = ("valence", "arousal", "dominance")

# (band name, stimulus frequency Hz, electrodes carrying the stimulus)
STIMULI = {
    "valence": ("alpha", 10.0, ("PO3", "PO4", "O1", "Oz", "O2")),
    "arousal": ("beta", 20.0, ("Fp1", "Fp2", "AF3", "AF4")),
    "dominance": ("gamma", 40.0, ("C3", "Cz", "C4")),
}

AMP_HIGH = 2.0
AMP_LOW = 0.25
NOISE_STD = 0.1

_CHANNEL_INDEX = {name: i for i, name in enumerate(GENEVA_ORDER)}


def stimulus_power_threshold():
    """Band-power midpoint separating high from low stimulus amplitude."""
    return (AMP_HIGH**2 / 2.0 + AMP_LOW**2 / 2.0) / 2.0


def synth_trial(rng, trial_secs, baseline_secs, fs):
    """One (samples, ratings, bits) triple from a derived stream."""
    n_total = int(round((baseline_secs + trial_secs) * fs))
    n_baseline = int(round(baseline_secs * fs))
    bits = tuple(int(b) for b in rng.integers(0, 2, 3))
    ratings = tuple(
        float(rng.uniform(5.5, 8.5)) if b else float(rng.uniform(1.5, 4.5)) for b in bits
    )
    samples = NOISE_STD * rng.normal((len(GENEVA_ORDER), n_total))
    t = np.arange(n_total - n_baseline) / fs
    for bit, label in zip(bits, LABEL_NAMES):
        _, freq, electrodes = STIMULI[label]
        amp = AMP_HIGH if bit else AMP_LOW
        for name in electrodes:
            phase = rng.uniform(0.0, 2.0 * np.pi)
            samples[_CHANNEL_INDEX[name], n_baseline:] += amp * np.sin(
                2.0 * np.pi * freq * t + phase
            )
    return samples.astype(np.float32), ratings, bits


def synth_dataset(prng, n_subjects, n_trials, out_dir, trial_secs=4.0, baseline_secs=3.0,
                  sample_rate_hz=128.0):
    """Write n_subjects x n_trials synthetic trials and a manifest.

    Deterministic in the prng seed: the same seed produces byte-identical
    container files and manifest. Returns the manifest.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    if n_subjects < 1:
        raise ValueError("n_subjects must be at least 1")
    os.makedirs(out_dir, exist_ok=True)
    manifest = DatasetManifest(
        kind="signals",
        sample_rate_hz=sample_rate_hz,
        baseline_secs=baseline_secs,
    )
    for s in range(n_subjects):
        for t in range(n_trials):
            rng = prng.derive("synth", s, t)
            samples, ratings, bits = synth_trial(rng, trial_secs, baseline_secs, sample_rate_hz)
            assert bits == threshold_labels(ratings)
            name = f"s{s + 1:02d}_t{t + 1:03d}.evkt"
            write_container(samples, os.path.join(out_dir, name))
            manifest.trials.append(
                TrialEntry(
                    path=name,
                    subject=f"s{s + 1:02d}",
                    trial=f"t{t + 1:03d}",
                    ratings=ratings,
                    bits=bits,
                    dims=tuple(samples.shape),
                )
            )
    manifest.save(os.path.join(out_dir, "manifest.json"))
    return manifest
