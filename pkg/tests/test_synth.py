import numpy as np
import pytest

from evoke.container import DatasetManifest, read_container
from evoke.preprocess import GENEVA_ORDER, band_variance, threshold_labels, BAND_EDGES_HZ
from evoke.synth import STIMULI, stimulus_power_threshold, synth_dataset
from evoke.tensor import Prng

BAND_INDEX = {"theta": 0, "alpha": 1, "beta": 2, "gamma": 3}


def _dir_bytes(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


def test_same_seed_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    synth_dataset(Prng(7), 1, 6, a, trial_secs=2.0)
    synth_dataset(Prng(7), 1, 6, b, trial_secs=2.0)
    assert _dir_bytes(a) == _dir_bytes(b)


def test_different_seed_differs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    synth_dataset(Prng(7), 1, 3, a, trial_secs=2.0)
    synth_dataset(Prng(8), 1, 3, b, trial_secs=2.0)
    assert _dir_bytes(a) != _dir_bytes(b)


def test_manifest_consistent_with_ratings(tmp_path):
    manifest = synth_dataset(Prng(3), 2, 5, tmp_path, trial_secs=2.0)
    assert len(manifest.trials) == 10
    for entry in manifest.trials:
        assert entry.bits == threshold_labels(entry.ratings)


def test_labels_recoverable_from_band_power_oracle(tmp_path):
    """Thresholding measured band power recovers every label bit."""
    manifest = synth_dataset(Prng(11), 1, 25, tmp_path, trial_secs=3.0, baseline_secs=3.0)
    fs = manifest.sample_rate_hz
    n_base = int(manifest.baseline_secs * fs)
    cutoff = stimulus_power_threshold()
    for entry in manifest.trials:
        samples = read_container(tmp_path / entry.path)
        post = samples[:, n_base:]
        for li, label in enumerate(("valence", "arousal", "dominance")):
            band_name, _, electrodes = STIMULI[label]
            band = BAND_EDGES_HZ[BAND_INDEX[band_name]]
            power = np.mean(
                [band_variance(post[GENEVA_ORDER.index(ch)], band, fs) for ch in electrodes]
            )
            assert (power > cutoff) == bool(entry.bits[li]), (entry.trial, label, power)


def test_high_alpha_trial_gives_valence_bit(tmp_path):
    manifest = synth_dataset(Prng(5), 1, 20, tmp_path, trial_secs=2.0)
    fs = manifest.sample_rate_hz
    n_base = int(manifest.baseline_secs * fs)
    hits = 0
    for entry in manifest.trials:
        if entry.bits[0] != 1:
            continue
        hits += 1
        samples = read_container(tmp_path / entry.path)
        oz = samples[GENEVA_ORDER.index("Oz"), n_base:]
        power = band_variance(oz, BAND_EDGES_HZ[1], fs)
        assert power > stimulus_power_threshold()
        assert threshold_labels(entry.ratings)[0] == 1
    assert hits > 0


def test_baseline_carries_no_stimulus(tmp_path):
    manifest = synth_dataset(Prng(9), 1, 5, tmp_path, trial_secs=2.0)
    fs = manifest.sample_rate_hz
    n_base = int(manifest.baseline_secs * fs)
    for entry in manifest.trials:
        samples = read_container(tmp_path / entry.path)
        oz = samples[GENEVA_ORDER.index("Oz"), :n_base]
        assert band_variance(oz, BAND_EDGES_HZ[1], fs) < 0.05


def test_trial_count_validation(tmp_path):
    with pytest.raises(ValueError):
        synth_dataset(Prng(0), 1, 0, tmp_path)


def test_shapes_and_manifest_kind(tmp_path):
    manifest = synth_dataset(Prng(1), 1, 2, tmp_path, trial_secs=4.0, baseline_secs=3.0)
    assert manifest.kind == "signals"
    loaded = DatasetManifest.load(tmp_path)
    assert loaded.trials[0].dims == (32, int((4.0 + 3.0) * 128))
