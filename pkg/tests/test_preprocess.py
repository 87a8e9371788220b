import math

import numpy as np
import pytest

from evoke.preprocess import (
    BAND_EDGES_HZ,
    BAND_NAMES,
    GENEVA_ORDER,
    GRID_POSITIONS,
    TrialRecording,
    UnknownChannelError,
    ValidationError,
    average_reference,
    band_variance,
    differential_entropy,
    extract_features,
    grid_position,
    threshold_labels,
    variance_clamps,
)

FS = 128.0


def make_trial(samples, ratings=(7.0, 3.0, 6.0), fs=FS):
    return TrialRecording(
        subject_id="s01",
        trial_id="t001",
        sample_rate_hz=fs,
        channels=GENEVA_ORDER,
        samples=samples,
        ratings=ratings,
    )


class TestAverageReference:
    def test_zero_mean_input_unchanged(self):
        x = np.array([[1.0, 1.0, 1.0], [-1.0, -1.0, -1.0]])
        assert np.array_equal(average_reference(x), x)

    def test_identical_channels_vanish(self):
        x = np.tile(np.arange(5.0), (4, 1))
        assert np.all(average_reference(x) == 0.0)

    def test_column_means_vanish(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(4, 16))
        out = average_reference(x)
        assert np.abs(out.mean(axis=0)).max() < 1e-9

    def test_single_channel_rejected(self):
        with pytest.raises(ValidationError):
            average_reference(np.zeros((1, 8)))


class TestBandVariance:
    def test_on_bin_sinusoid_parseval(self):
        t = np.arange(128) / FS
        x = 2.0 * np.sin(2 * np.pi * 10.0 * t)
        assert abs(band_variance(x, (8.0, 14.0), FS) - 2.0) < 1e-6

    def test_disjoint_band_sees_nothing(self):
        t = np.arange(128) / FS
        x = 2.0 * np.sin(2 * np.pi * 10.0 * t)
        assert band_variance(x, (14.0, 31.0), FS) < 1e-9

    def test_zero_signal(self):
        assert band_variance(np.zeros(128), (8.0, 14.0), FS) == 0.0

    def test_band_above_nyquist_rejected(self):
        with pytest.raises(ValidationError):
            band_variance(np.zeros(128), (30.0, 70.0), FS)

    def test_short_window_rejected(self):
        with pytest.raises(ValidationError):
            band_variance(np.zeros(64), (8.0, 14.0), FS)

    def test_shared_edges_never_double_count(self):
        # a bin exactly on an edge belongs to the upper band only
        t = np.arange(128) / FS
        x = np.sin(2 * np.pi * 14.0 * t)
        lower = band_variance(x, (8.0, 14.0), FS)
        upper = band_variance(x, (14.0, 31.0), FS)
        assert lower < 1e-12
        assert abs(upper - 0.5) < 1e-9

    def test_parseval_band_sum_below_total_variance(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            x = rng.normal(size=256)
            x -= x.mean()
            total = float(np.var(x))
            band_sum = sum(band_variance(x, band, FS) for band in BAND_EDGES_HZ)
            assert band_sum <= total + 1e-6


class TestDifferentialEntropy:
    def test_unit_variance(self):
        assert abs(differential_entropy(1.0) - 0.5 * math.log(2 * math.pi * math.e)) < 1e-12
        assert abs(differential_entropy(1.0) - 1.418939) < 1e-6

    def test_zero_at_reciprocal_2pie(self):
        assert abs(differential_entropy(1.0 / (2 * math.pi * math.e))) < 1e-12

    def test_one_at_e_over_2pi(self):
        assert abs(differential_entropy(math.e / (2 * math.pi)) - 1.0) < 1e-12

    def test_monotone_in_variance(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            a, b = rng.uniform(1e-9, 10.0, 2)
            lo, hi = min(a, b), max(a, b)
            if lo == hi:
                continue
            assert differential_entropy(lo) < differential_entropy(hi)

    def test_nonpositive_variance_clamps_and_counts(self):
        variance_clamps.reset()
        v = differential_entropy(0.0)
        assert np.isfinite(v)
        assert variance_clamps.count == 1
        variance_clamps.reset()


class TestGridPosition:
    def test_cz_center(self):
        assert grid_position("Cz") == (4, 4)

    def test_fp1(self):
        assert grid_position("Fp1") == (0, 3)

    def test_injective_over_32_channels(self):
        cells = {grid_position(name) for name in GENEVA_ORDER}
        assert len(cells) == 32

    def test_unknown_channel(self):
        with pytest.raises(UnknownChannelError):
            grid_position("XX9")

    def test_table_matches_channel_list(self):
        assert set(GRID_POSITIONS) == set(GENEVA_ORDER)


class TestThresholdLabels:
    def test_paper_threshold_with_tie(self):
        assert threshold_labels((7.2, 3.1, 5.0)) == (1, 0, 0)

    def test_all_high(self):
        assert threshold_labels((9, 9, 9)) == (1, 1, 1)

    def test_all_low(self):
        assert threshold_labels((1, 1, 1)) == (0, 0, 0)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            threshold_labels((0.5, 5.0, 5.0))
        with pytest.raises(ValidationError):
            threshold_labels((5.0, 9.5, 5.0))


class TestExtractFeatures:
    def test_deap_shaped_trial_gives_60_windows(self):
        rng = np.random.default_rng(3)
        trial = make_trial(rng.normal(size=(32, 8064)).astype(np.float32))
        grid = extract_features(trial)
        assert grid.windows.shape == (60, 4, 9, 9)
        assert grid.labels == (1, 0, 1)

    def test_tiled_trial_cancels(self):
        # every window identical to the baseline windows, so DE differences
        # cancel to zero up to one rounding ulp of the baseline mean
        rng = np.random.default_rng(4)
        segment = rng.normal(size=(32, 128)).astype(np.float32)
        trial = make_trial(np.tile(segment, (1, 8)))
        grid = extract_features(trial)
        assert grid.windows.shape == (5, 4, 9, 9)
        assert np.abs(grid.windows).max() < 1e-12

    def test_unassigned_corner_stays_zero(self):
        rng = np.random.default_rng(5)
        trial = make_trial(rng.normal(size=(32, 1280)))
        grid = extract_features(trial)
        assert np.all(grid.windows[:, :, 0, 0] == 0.0)

    def test_exactly_32_nonzero_cells_per_band(self):
        rng = np.random.default_rng(6)
        trial = make_trial(rng.normal(size=(32, 1280)))
        grid = extract_features(trial)
        for wi in range(grid.windows.shape[0]):
            for bi in range(4):
                nonzero = np.count_nonzero(grid.windows[wi, bi])
                assert nonzero <= 32
                occupied = np.zeros((9, 9), dtype=bool)
                for name in GENEVA_ORDER:
                    occupied[grid_position(name)] = True
                assert np.all(grid.windows[wi, bi][~occupied] == 0.0)

    def test_common_offset_invariance(self):
        rng = np.random.default_rng(7)
        base = rng.normal(size=(32, 1280))
        a = extract_features(make_trial(base))
        b = extract_features(make_trial(base + 42.0))
        assert np.allclose(a.windows, b.windows, atol=1e-5)

    def test_matches_scalar_band_variance_route(self):
        rng = np.random.default_rng(8)
        samples = rng.normal(size=(32, 5 * 128))
        trial = make_trial(samples)
        grid = extract_features(trial)
        ref = average_reference(samples)
        # recompute one (window, band, channel) cell by hand
        name = "Cz"
        ci = GENEVA_ORDER.index(name)
        wi, bi = 1, 2  # second trial window, beta band
        windows = ref[:, : 5 * 128].reshape(32, 5, 128)
        de = np.empty((5, 32))
        for w in range(5):
            for c in range(32):
                var = band_variance(windows[c, w], BAND_EDGES_HZ[bi], FS)
                de[w, c] = differential_entropy(var)
        expect = de[3 + wi, ci] - de[:3, ci].mean()
        row, col = grid_position(name)
        assert abs(grid.windows[wi, bi, row, col] - expect) < 1e-5

    def test_too_short_trial_rejected(self):
        trial = make_trial(np.zeros((32, 3 * 128)))
        with pytest.raises(ValidationError):
            extract_features(trial)

    def test_band_order_is_theta_alpha_beta_gamma(self):
        assert BAND_NAMES == ("theta", "alpha", "beta", "gamma")
        # plant an on-bin alpha tone after the baseline on one channel and
        # check it lands in band index 1
        t = np.arange(1280) / FS
        samples = np.zeros((32, 1280))
        rng = np.random.default_rng(9)
        samples += 0.01 * rng.normal(size=samples.shape)
        ci = GENEVA_ORDER.index("Oz")
        samples[ci, 384:] += 2.0 * np.sin(2 * np.pi * 10.0 * t[384:])
        grid = extract_features(make_trial(samples))
        row, col = grid_position("Oz")
        alpha_vals = grid.windows[:, 1, row, col]
        other = [grid.windows[:, b, row, col] for b in (0, 2, 3)]
        assert alpha_vals.min() > 2.0
        assert max(np.abs(o).max() for o in other) < 1.5
