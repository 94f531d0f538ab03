import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isac_weather import features
from isac_weather.features import ChannelMoments, FeatureTensor, NormStats, apply_norm, fit_norm_stats
from isac_weather.radar import Periodogram


def _random_features(rng, k, shape=(6, 5)):
    out = []
    for _ in range(k):
        v = rng.standard_normal(shape + (4,)) * np.array([1.0, 3.0, 0.1, 20.0]) + np.array([5.0, -2.0, 0.0, 100.0])
        out.append(FeatureTensor(v))
    return out


def test_channel_order():
    a = np.array([[1 + 2j]])
    b = np.array([[3 - 4j]])
    f = features.assemble_features(Periodogram(a, 1, 1), Periodogram(b, 1, 1, "rho1_rho2"))
    assert f.values.tolist() == [[[1.0, 2.0, 3.0, -4.0]]]
    assert not f.normalized
    with pytest.raises(ValueError):
        features.assemble_features(Periodogram(a, 1, 1), Periodogram(np.ones((2, 1)), 1, 1))


def test_normalized_channels_have_zero_mean_unit_std():
    rng = np.random.default_rng(0)
    fs = _random_features(rng, 25)
    stats = fit_norm_stats(fs)
    normed = np.stack([apply_norm(f, stats).values for f in fs])
    ch = normed.reshape(-1, 4)
    assert np.all(np.abs(ch.mean(axis=0)) < 1e-6)
    assert np.all(np.abs(ch.std(axis=0) - 1) < 1e-6)
    assert stats.sample_count == 25


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 8), st.integers(1, 8))
def test_streaming_moments_match_batch(seed, k1, k2):
    rng = np.random.default_rng(seed)
    fs = _random_features(rng, k1 + k2, shape=(3, 4))
    a = ChannelMoments()
    for f in fs[:k1]:
        a.update(f.values)
    b = ChannelMoments()
    for f in fs[k1:]:
        b.update(f.values)
    a.merge(b)
    allv = np.stack([f.values for f in fs]).reshape(-1, 4)
    np.testing.assert_allclose(a.mean, allv.mean(axis=0), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(np.sqrt(a.m2 / a.count), allv.std(axis=0), rtol=1e-10)
    assert a.tensors == k1 + k2


def test_zero_variance_channel_rejected():
    v = np.random.default_rng(1).standard_normal((4, 4, 4))
    v[..., 2] = 7.0
    with pytest.raises(ValueError, match="zero-variance"):
        fit_norm_stats([FeatureTensor(v)])
    with pytest.raises(ValueError):
        NormStats(np.zeros(4), np.array([1.0, 0.0, 1.0, 1.0]), 1)
    with pytest.raises(ValueError):
        fit_norm_stats([])


def test_double_normalization_rejected():
    rng = np.random.default_rng(2)
    fs = _random_features(rng, 3)
    stats = fit_norm_stats(fs)
    n = apply_norm(fs[0], stats)
    with pytest.raises(ValueError):
        apply_norm(n, stats)
    with pytest.raises(ValueError):
        fit_norm_stats([n])


def test_stats_dict_roundtrip_is_exact():
    rng = np.random.default_rng(3)
    stats = fit_norm_stats(_random_features(rng, 4))
    back = NormStats.from_dict(stats.to_dict())
    assert np.array_equal(back.mean, stats.mean) and np.array_equal(back.std, stats.std)
    f = _random_features(rng, 1)[0]
    assert np.array_equal(apply_norm(f, back).values, apply_norm(f, stats).values)


def test_float32_features_normalised_in_float64():
    rng = np.random.default_rng(4)
    fs = [FeatureTensor(f.values.astype(np.float32)) for f in _random_features(rng, 5)]
    stats = fit_norm_stats(fs)
    out = apply_norm(fs[0], stats)
    assert out.values.dtype == np.float32
    ref = (fs[0].values.astype(np.float64) - stats.mean) / stats.std
    np.testing.assert_allclose(out.values, ref, rtol=1e-6)
