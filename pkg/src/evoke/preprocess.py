"""EEG preprocessing into band differential-entropy grid features.

A 32-channel recording (Geneva channel order, nominally 128 Hz with a
3-second pre-trial baseline) is turned into one DE value per channel,
per 1-second window, per frequency band:

    theta 4-8 Hz, alpha 8-14 Hz, beta 14-31 Hz, gamma 31-49 Hz

Band variance comes from a rectangular-window periodogram (sum of DFT
bin powers with lo <= f < hi, DC excluded), and the differential
entropy of a Gaussian with that variance is 0.5*ln(2*pi*e*sigma^2).
The mean DE of the baseline windows is subtracted from every trial
window, then the 32 channel values are scattered onto a 9x9 scalp grid,
giving windows of shape [n, 4, 9, 9]. Ratings are binarized at 5.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ValidationError(ValueError):
    """Input violates a preprocessing contract."""


class UnknownChannelError(KeyError):
    """Channel name is not in the 32-channel Geneva list."""


# DEAP's canonical 32-channel ordering.
GENEVA_ORDER = (
    "Fp1", "AF3", "F3", "F7", "FC5", "FC1", "C3", "T7",
    "CP5", "CP1", "P3", "P7", "PO3", "O1", "Oz", "Pz",
    "Fp2", "AF4", "Fz", "F4", "F8", "FC6", "FC2", "Cz",
    "C4", "T8", "CP6", "CP2", "P4", "P8", "PO4", "O2",
)

# Planar 10-20 projection of the 32 electrodes onto a 9x9 grid.
GRID_POSITIONS = {
    "Fp1": (0, 3), "Fp2": (0, 5),
    "AF3": (1, 3), "AF4": (1, 5),
    "F7": (2, 0), "F3": (2, 2), "Fz": (2, 4), "F4": (2, 6), "F8": (2, 8),
    "FC5": (3, 1), "FC1": (3, 3), "FC2": (3, 5), "FC6": (3, 7),
    "T7": (4, 0), "C3": (4, 2), "Cz": (4, 4), "C4": (4, 6), "T8": (4, 8),
    "CP5": (5, 1), "CP1": (5, 3), "CP2": (5, 5), "CP6": (5, 7),
    "P7": (6, 0), "P3": (6, 2), "Pz": (6, 4), "P4": (6, 6), "P8": (6, 8),
    "PO3": (7, 3), "PO4": (7, 5),
    "O1": (8, 3), "Oz": (8, 4), "O2": (8, 5),
}

BAND_NAMES = ("theta", "alpha", "beta", "gamma")
BAND_EDGES_HZ = ((4.0, 8.0), (8.0, 14.0), (14.0, 31.0), (31.0, 49.0))

N_CHANNELS = 32
N_BANDS = len(BAND_NAMES)
GRID_ROWS = 9
GRID_COLS = 9

RATING_THRESHOLD = 5.0

# Variance floor applied before the log; silent channels otherwise give -inf.
VARIANCE_FLOOR = 1e-12


class _ClampCounter:
    """Counts variance-floor clamps so silent-channel runs are visible."""

    def __init__(self):
        self.count = 0

    def bump(self, n=1):
        self.count += int(n)

    def reset(self):
        self.count = 0


variance_clamps = _ClampCounter()


@dataclass
class TrialRecording:
    """One subject-trial of multi-channel EEG plus its VAD ratings.

    samples is a channel x time matrix; ratings are (valence, arousal,
    dominance) on the [1, 9] self-assessment scale.
    """

    subject_id: str
    trial_id: str
    sample_rate_hz: float
    channels: tuple
    samples: np.ndarray
    ratings: tuple

    def validate(self):
        if self.sample_rate_hz <= 0:
            raise ValidationError("sample_rate_hz must be positive")
        if self.samples.ndim != 2:
            raise ValidationError("samples must be a channel x time matrix")
        if len(self.channels) != self.samples.shape[0]:
            raise ValidationError(
                f"{len(self.channels)} channel names for {self.samples.shape[0]} rows"
            )
        if tuple(self.channels) != GENEVA_ORDER:
            raise ValidationError("channels must be the 32-channel Geneva order")
        if len(self.ratings) != 3:
            raise ValidationError("ratings must be (valence, arousal, dominance)")


@dataclass
class FeatureGrid:
    """Per-window 4-band 9x9 DE features and the trial's binary labels."""

    windows: np.ndarray  # [n_windows, 4, 9, 9] float32
    labels: tuple  # (valence_bit, arousal_bit, dominance_bit)

    def __post_init__(self):
        if self.windows.ndim != 4 or self.windows.shape[1:] != (N_BANDS, GRID_ROWS, GRID_COLS):
            raise ValidationError(f"feature windows must be [n, 4, 9, 9], got {self.windows.shape}")


def grid_position(channel_name):
    """(row, col) of a Geneva channel on the 9x9 scalp grid."""
    try:
        return GRID_POSITIONS[channel_name]
    except KeyError:
        raise UnknownChannelError(f"unknown EEG channel {channel_name!r}") from None


def average_reference(samples):
    """Subtract the cross-channel mean at every time step.

    Output columns sum to zero, which removes any reference offset
    common to all electrodes.
    """
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise ValidationError("average_reference needs a matrix with at least 2 channels")
    return samples - samples.mean(axis=0, keepdims=True)


def _bin_scale(n):
    """Per-bin variance weights of a one-sided periodogram, DC zeroed."""
    n_bins = n // 2 + 1
    scale = np.full(n_bins, 2.0 / (n * n))
    scale[0] = 0.0
    if n % 2 == 0:
        scale[-1] = 1.0 / (n * n)
    return scale


def _check_band(band, fs):
    lo, hi = band
    if not (0.0 <= lo < hi):
        raise ValidationError(f"invalid band {band}")
    if hi >= fs / 2.0:
        raise ValidationError(f"band {band} exceeds the Nyquist frequency {fs / 2.0}")
    return float(lo), float(hi)


def band_variance(window, band, fs):
    """Variance of the band-limited component of a 1-D window.

    Computed as the sum of periodogram power over DFT bins whose
    frequency satisfies lo <= f < hi (DC always excluded), so Parseval
    gives total variance when the bands tile the spectrum.
    """
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1:
        raise ValidationError("band_variance expects a 1-D window")
    n = window.shape[0]
    if n < fs:
        raise ValidationError(f"window of {n} samples is shorter than 1 second at {fs} Hz")
    lo, hi = _check_band(band, fs)
    power = np.abs(np.fft.rfft(window)) ** 2
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    mask = (freqs >= lo) & (freqs < hi)
    return float(np.sum(power[mask] * _bin_scale(n)[mask]))


def differential_entropy(variance):
    """DE in nats of a Gaussian with the given variance.

    Closed form 0.5*ln(2*pi*e*sigma^2); variances at or below the floor
    are clamped and counted in `variance_clamps`.
    """
    variance = float(variance)
    if variance <= VARIANCE_FLOOR:
        variance_clamps.bump()
        variance = VARIANCE_FLOOR
    return 0.5 * math.log(2.0 * math.pi * math.e * variance)


def threshold_labels(ratings):
    """Binarize (valence, arousal, dominance) ratings at 5.0.

    A bit is 1 only for ratings strictly greater than the threshold;
    exact 5.0 goes low, so all-low absorbs neutral ties.
    """
    if len(ratings) != 3:
        raise ValidationError("ratings must be (valence, arousal, dominance)")
    for r in ratings:
        if not (1.0 <= float(r) <= 9.0):
            raise ValidationError(f"rating {r} outside [1, 9]")
    return tuple(int(float(r) > RATING_THRESHOLD) for r in ratings)


def _window_band_de(ref, fs, wlen, n_windows):
    """DE per (window, band, channel) from a referenced signal matrix."""
    n_ch = ref.shape[0]
    segs = ref[:, : n_windows * wlen].reshape(n_ch, n_windows, wlen).astype(np.float64)
    power = np.abs(np.fft.rfft(segs, axis=2)) ** 2
    freqs = np.fft.rfftfreq(wlen, d=1.0 / fs)
    scale = _bin_scale(wlen)
    de = np.empty((n_windows, N_BANDS, n_ch))
    for bi, band in enumerate(BAND_EDGES_HZ):
        lo, hi = _check_band(band, fs)
        mask = (freqs >= lo) & (freqs < hi)
        var = power[:, :, mask] @ scale[mask]  # [n_ch, n_windows]
        clamped = var <= VARIANCE_FLOOR
        if clamped.any():
            variance_clamps.bump(int(clamped.sum()))
            var = np.maximum(var, VARIANCE_FLOOR)
        de[:, bi, :] = (0.5 * np.log(2.0 * math.pi * math.e * var)).T
    return de


def extract_features(trial, window_secs=1.0, baseline_secs=3.0):
    """Full trial pipeline: reference, window, DE, baseline-subtract, grid.

    The first baseline_secs of the referenced recording supply baseline
    windows whose mean DE is subtracted from every trial window. The
    result is scattered onto the 9x9 grid; cells without an electrode
    stay exactly 0.
    """
    trial.validate()
    fs = float(trial.sample_rate_hz)
    wlen = int(round(window_secs * fs))
    if wlen < fs * window_secs - 0.5:
        raise ValidationError(f"window of {window_secs}s is not an integer number of samples at {fs} Hz")
    if wlen < fs:
        raise ValidationError("windows shorter than 1 second are not supported")
    n_baseline = int(round(baseline_secs / window_secs))
    total_windows = trial.samples.shape[1] // wlen
    n_trial = total_windows - n_baseline
    if n_trial < 1:
        raise ValidationError(
            f"trial of {trial.samples.shape[1]} samples has no trial windows after "
            f"{baseline_secs}s baseline at {window_secs}s windows"
        )

    ref = average_reference(trial.samples)
    de = _window_band_de(ref, fs, wlen, total_windows)  # [win, band, ch]
    baseline_mean = de[:n_baseline].mean(axis=0) if n_baseline > 0 else 0.0
    trial_de = de[n_baseline:] - baseline_mean

    grid = np.zeros((n_trial, N_BANDS, GRID_ROWS, GRID_COLS), dtype=np.float32)
    for ci, name in enumerate(trial.channels):
        row, col = grid_position(name)
        grid[:, :, row, col] = trial_de[:, :, ci].astype(np.float32)
    return FeatureGrid(windows=grid, labels=threshold_labels(trial.ratings))
