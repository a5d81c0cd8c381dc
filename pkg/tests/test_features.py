import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from collarwave.errors import EmptyInput, MixedWindowLength, TooFewRows
from collarwave.features import (
    Dataset,
    FeatureConfig,
    FeatureSchema,
    apply_normalizer,
    autocorr_lag1,
    featurize,
    fit_normalizer,
    iqr,
    pearson,
    power_spectrum,
    read_dataset_csv,
    spectral_features,
    stat_features,
    temporal_features,
    write_dataset_csv,
)
from collarwave.ingest import RawRecording
from collarwave.preprocess import WindowSpec, make_windows
from collarwave.synth import random_rotation

from .conftest import grid_recording
from .oracles import brute_power

FS = 12.5
L = 12


def exclusive_quantile(v, p):
    s = sorted(v)
    pos = p * (len(s) + 1)  # 1-based
    lo = int(math.floor(pos))
    frac = pos - lo
    if frac == 0:
        return s[lo - 1]
    return s[lo - 1] + frac * (s[lo] - s[lo - 1])


def idx(name):
    return spectral_names().index(name)


def spectral_names():
    return list(FeatureConfig().spectral_names())


class TestStatFeatures:
    def test_constant(self):
        kurt, skew, mean, std, q, rms, mad = stat_features([1, 1, 1, 1])
        assert (mean, std, kurt, skew, q, rms, mad) == (1, 0, 0, 0, 0, 1, 0)

    def test_one_to_four(self):
        # m2 = 1.25, m4 = 2.5625 -> 2.5625 / 1.5625 - 3
        kurt, skew, mean, *_ = stat_features([1, 2, 3, 4])
        assert mean == 2.5
        assert kurt == pytest.approx(2.5625 / 1.25**2 - 3, abs=1e-12)
        assert kurt == pytest.approx(-1.36, abs=1e-12)
        assert skew == pytest.approx(0.0, abs=1e-12)

    def test_rms(self):
        assert stat_features([3, 4])[5] == pytest.approx(math.sqrt(12.5), abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 40))
    def test_against_reference(self, seed, n):
        v = np.random.default_rng(seed).normal(size=n)
        kurt, skew, mean, std, q, rms, mad = stat_features(v)
        assert kurt == pytest.approx(sps.kurtosis(v, fisher=True, bias=True), abs=1e-9)
        assert skew == pytest.approx(sps.skew(v, bias=True), abs=1e-9)
        assert std == pytest.approx(math.sqrt(sum((x - v.mean()) ** 2 for x in v) / n), abs=1e-12)
        assert q == pytest.approx(exclusive_quantile(v, 0.75) - exclusive_quantile(v, 0.25), abs=1e-12)
        assert rms == pytest.approx(math.sqrt(sum(x * x for x in v) / n), abs=1e-12)
        med = sorted(v)[n // 2] if n % 2 else (sorted(v)[n // 2 - 1] + sorted(v)[n // 2]) / 2
        assert mad == pytest.approx(np.median([abs(x - med) for x in v]), abs=1e-12)

    def test_iqr_exclusive_method(self):
        # positions 1.25 and 3.75 in [1, 2, 3, 4]
        assert iqr(np.array([1.0, 2.0, 3.0, 4.0])) == pytest.approx(2.5)


class TestTemporalFeatures:
    def test_zero_crossings_alternating(self):
        xyz = np.array([[1, 0, 0], [-1, 0, 0], [1, 0, 0], [-1, 0, 0]], dtype=float)
        out = temporal_features(xyz, np.ones(4))
        assert out["x.zero_crossings"] == 3
        assert out["y.zero_crossings"] == 0

    def test_zeros_inherit_previous_sign(self):
        xyz = np.zeros((5, 3))
        xyz[:, 0] = [1, 0, -1, 0, 0]  # mean 0: +, (+), -, (-), (-) -> one crossing
        assert temporal_features(xyz, np.ones(5))["x.zero_crossings"] == 1

    def test_pairwise_perfect(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
        assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0)

    def test_constant_channel_conventions(self):
        assert autocorr_lag1([2.0] * 12) == 0.0
        assert pearson([1, 1, 1], [1, 2, 3]) == 0.0

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_autocorr_is_lagged_pearson(self, seed):
        v = np.random.default_rng(seed).normal(size=12)
        assert autocorr_lag1(v) == pytest.approx(np.corrcoef(v[:-1], v[1:])[0, 1], abs=1e-12)


class TestSpectralFeatures:
    def test_constant_all_zero(self):
        assert not np.any(spectral_features(np.full(12, 0.7), FS))

    def test_pure_sinusoid_k3(self):
        t = np.arange(L)
        out = spectral_features(np.sin(2 * np.pi * 3 * t / L), FS)
        assert out[idx("fundamental_frequency")] == pytest.approx(3 * FS / L) == pytest.approx(3.125)
        assert out[idx("max_frequency")] == pytest.approx(3.125)
        assert out[idx("median_frequency")] == pytest.approx(3.125)
        assert out[idx("power_bandwidth")] == 0.0

    def test_two_tone(self):
        t = np.arange(L)
        v = 2 * np.sin(2 * np.pi * 2 * t / L) + np.sin(2 * np.pi * 4 * t / L)
        P = brute_power(list(v))
        assert int(np.argmax(P)) == 2 and P[2] > P[4]
        out = spectral_features(v, FS)
        assert out[idx("fundamental_frequency")] == pytest.approx(2 * FS / L, abs=1e-12)
        assert out[idx("fundamental_frequency")] == pytest.approx(2.0833, abs=1e-4)
        assert out[idx("max_power")] == pytest.approx(P[2], abs=1e-9)
        # cumulative power: 12 at k=2 (80%), 15 at k=4
        assert out[idx("median_frequency")] == pytest.approx(2 * FS / L)
        assert out[idx("max_frequency")] == pytest.approx(4 * FS / L)
        assert out[idx("power_bandwidth")] == pytest.approx(2 * FS / L)

    def test_cepstrum_matches_brute_force(self):
        v = np.random.default_rng(5).normal(size=L)
        P = brute_power(list(v))
        full = P + P[1:-1][::-1]  # symmetric two-sided spectrum, length L
        logp = [math.log(p + 1e-12) for p in full]
        ceps = [sum(logp[k] * cmath.exp(2j * math.pi * k * n / L) for k in range(L)).real / L for n in range(4)]
        out = spectral_features(v, FS)
        np.testing.assert_allclose(out[2:6], ceps, atol=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(4, 20))
    def test_power_spectrum_vs_brute_force(self, seed, n):
        v = np.random.default_rng(seed).normal(size=n) * 3
        np.testing.assert_allclose(power_spectrum(v), brute_power(list(v)), atol=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_parseval(self, seed):
        v = np.random.default_rng(seed).normal(size=L)
        d = v - v.mean()
        P = power_spectrum(v)
        two_sided = P[0] + 2 * P[1:-1].sum() + P[-1]
        assert two_sided == pytest.approx(np.dot(d, d), abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_ordering_invariants(self, seed):
        out = spectral_features(np.random.default_rng(seed).normal(size=L), FS)
        assert 0 <= out[idx("median_frequency")] <= out[idx("max_frequency")] <= FS / 2
        assert out[idx("power_bandwidth")] >= 0
        assert out[idx("fundamental_frequency")] > 0


class TestSchema:
    def test_default_width(self):
        assert len(FeatureSchema.for_config()) == 4 * (7 + 2 + 5 + 4) + 3 == 75

    def test_single_cepstral_width(self):
        assert len(FeatureSchema.for_config(FeatureConfig(n_cepstral=1))) == 4 * 15 + 3 == 63

    def test_names(self):
        names = FeatureSchema.for_config().names
        for n in ("amag.kurtosis", "x.zero_crossings", "xy.pairwise_corr", "z.cepstral_3", "amag.max_power"):
            assert n in names

    def test_hash_depends_on_names(self):
        assert FeatureSchema.for_config().hash != FeatureSchema.for_config(FeatureConfig(n_cepstral=2)).hash

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            FeatureSchema(("a", "a"))


class TestFeaturize:
    def test_shape(self):
        ds = featurize(make_windows(grid_recording(36)))
        assert ds.X.shape == (5, 75)
        assert list(ds.groups) == ["dev"] * 5
        assert list(ds.starts) == [0, 6, 12, 18, 24]

    def test_shape_63(self):
        ds = featurize(make_windows(grid_recording(36)), FeatureConfig(n_cepstral=1))
        assert ds.X.shape == (5, 63)

    def test_mixed_lengths(self):
        a = make_windows(grid_recording(12))
        b = make_windows(grid_recording(13), WindowSpec(13, 0.5))
        with pytest.raises(MixedWindowLength):
            featurize(a + b)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            featurize([])

    def test_all_zero_window_finite(self):
        rec = RawRecording("z", 12.5, np.arange(12) * 80.0, np.zeros((12, 3)))
        row = featurize(make_windows(rec)).X[0]
        assert np.all(np.isfinite(row))
        assert not np.any(row)

    def test_row_order_and_determinism(self):
        ws = make_windows(grid_recording(120, seed=3))
        a, b = featurize(ws), featurize(ws)
        assert np.array_equal(a.X, b.X)
        rev = featurize(ws[::-1])
        assert np.array_equal(rev.X, a.X[::-1])

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_amag_features_rotation_invariant(self, seed):
        rng = np.random.default_rng(seed)
        rec = grid_recording(12, seed=seed)
        R = random_rotation(rng)
        rot = RawRecording("dev", 12.5, rec.t, rec.xyz @ R.T)
        names = FeatureSchema.for_config().names
        cols = [i for i, n in enumerate(names) if n.startswith("amag.")]
        a = featurize(make_windows(rec)).X[0, cols]
        b = featurize(make_windows(rot)).X[0, cols]
        np.testing.assert_allclose(a, b, atol=1e-6, rtol=0)

    def test_csv_round_trip(self):
        ds = featurize(make_windows(grid_recording(60, seed=1)))
        ds.labels[:] = ["spin", "negative"] * 4 + ["negative"]
        back = read_dataset_csv(write_dataset_csv(ds))
        assert back.schema == ds.schema
        assert np.array_equal(back.X, ds.X)
        assert list(back.labels) == list(ds.labels)
        assert list(back.groups) == list(ds.groups)
        assert list(back.starts) == list(ds.starts)

    def test_csv_header(self):
        text = write_dataset_csv(featurize(make_windows(grid_recording(12))))
        assert text.startswith("recording_id,window_start_index,label,x.kurtosis,")


def dataset(X):
    X = np.asarray(X, dtype=float)
    return Dataset(FeatureSchema(tuple(f"f{i}" for i in range(X.shape[1]))), X, ["a"] * len(X), ["g"] * len(X))


class TestNormalizer:
    def test_column_one_two_three(self):
        out = apply_normalizer(dataset([[1], [2], [3]]), fit_normalizer(dataset([[1], [2], [3]])))
        s = math.sqrt(2 / 3)
        np.testing.assert_allclose(out.X[:, 0], [-1 / s, 0, 1 / s], atol=1e-12)
        np.testing.assert_allclose(out.X[:, 0], [-1.2247449, 0, 1.2247449], atol=1e-7)

    def test_constant_column(self):
        ds = dataset([[5, 1], [5, 2], [5, 4]])
        stats = fit_normalizer(ds)
        assert stats.constant.tolist() == [True, False]
        assert not np.any(apply_normalizer(ds, stats).X[:, 0])

    def test_too_few_rows(self):
        with pytest.raises(TooFewRows):
            fit_normalizer(dataset([[1.0]]))

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 50), d=st.integers(1, 8))
    def test_zero_mean_unit_variance(self, seed, n, d):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, d)) * rng.uniform(0.1, 100, d) + rng.uniform(-50, 50, d)
        X[:, 0] = 3.0
        ds = dataset(X)
        Z = apply_normalizer(ds, fit_normalizer(ds)).X
        assert np.all(np.abs(Z.mean(axis=0)) < 1e-9)
        assert np.all(np.abs(Z[:, 1:].var(axis=0) - 1) < 1e-9)
        assert not np.any(Z[:, 0])
