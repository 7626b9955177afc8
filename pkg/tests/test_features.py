import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mchd import features as F
from mchd.errors import ConfigurationError, IngestionError

FS = 256.0


def brute_sampen(x, m, r):
    n = len(x)
    def count(length):
        t = [x[i:i + length] for i in range(n - m)]
        c = 0
        for i in range(len(t)):
            for j in range(i + 1, len(t)):
                if max(abs(a - b) for a, b in zip(t[i], t[j])) <= r:
                    c += 1
        return c
    b, a = count(m), count(m + 1)
    if b == 0:
        return 0.0
    return math.log(b) - math.log(max(a, 1))


def brute_apen(x, m, r):
    n = len(x)
    def phi(length):
        t = [x[i:i + length] for i in range(n - length + 1)]
        vals = []
        for ti in t:
            c = sum(max(abs(a - b) for a, b in zip(ti, tj)) <= r for tj in t)
            vals.append(math.log(c / len(t)))
        return sum(vals) / len(vals)
    return max(0.0, phi(m) - phi(m + 1))


def brute_permen(x, order, delay):
    counts = {}
    n = len(x) - (order - 1) * delay
    for t in range(n):
        v = [x[t + k * delay] for k in range(order)]
        pattern = tuple(sorted(range(order), key=lambda k: (v[k], k)))
        counts[pattern] = counts.get(pattern, 0) + 1
    return -sum(c / n * math.log2(c / n) for c in counts.values())


def test_feature_names_layout():
    names = F.feature_names()
    assert len(names) == 46 and len(set(names)) == 46
    assert len(F.entropy_names()) == 37 and len(F.frequency_names()) == 8


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("m", [2, 3])
def test_sample_and_approximate_entropy_match_brute_force(seed, m):
    x = np.random.default_rng(seed).normal(size=120).round(1)  # rounding creates exact-tolerance ties
    r = 0.2 * x.std()
    assert F.sample_entropy(x, m, r) == pytest.approx(brute_sampen(list(x), m, r), abs=1e-12)
    assert F.approximate_entropy(x, m, r) == pytest.approx(brute_apen(list(x), m, r), abs=1e-12)


@given(arrays(np.float64, st.integers(10, 60), elements=st.integers(-3, 3).map(float)),
       st.integers(3, 5), st.integers(1, 3))
def test_permutation_entropy_matches_brute_force(x, order, delay):
    expect = brute_permen(list(x), order, delay) if len(x) > (order - 1) * delay else 0.0
    assert F.permutation_entropy(x, order, delay) == pytest.approx(expect, abs=1e-12)


def test_permutation_entropy_degenerate():
    for order, delay in itertools.product(range(3, 8), range(1, 4)):
        assert F.permutation_entropy(np.zeros(512), order, delay) == 0.0
        assert F.permutation_entropy(np.arange(512.0), order, delay) == 0.0


def test_permutation_entropy_uniform_noise():
    x = np.random.default_rng(0).uniform(size=20000)
    assert F.permutation_entropy(x, 3, 1) == pytest.approx(math.log2(6), rel=0.03)


def test_shannon_of_uniform_white_noise_histogram():
    vals = [F.shannon(F.histogram_distribution(np.random.default_rng(s).uniform(-1, 1, 2048), 20))
            for s in range(100)]
    assert np.all(np.abs(np.array(vals) - math.log2(20)) <= 0.05 * math.log2(20))


def test_sine_alpha_dominates():
    t = np.arange(int(8 * FS)) / FS
    rel = F.frequency_bank(np.sin(2 * np.pi * 10 * t), FS)[:6]
    assert np.argmax(rel) == 3  # low, delta, theta, alpha, beta, gamma


def test_slow_sine_is_delta():
    t = np.arange(int(8 * FS)) / FS
    rel = F.frequency_bank(np.sin(2 * np.pi * 2 * t), FS)[:6]
    assert rel[1] > 0.9
    assert rel.sum() == pytest.approx(1.0)


def test_zero_signal_frequency_convention():
    out = F.frequency_bank(np.zeros(int(8 * FS)), FS)
    np.testing.assert_allclose(out[:6], 1 / 6)
    assert out[6] == 0.0


def test_frequency_bank_needs_fs_90():
    with pytest.raises(ConfigurationError):
        F.frequency_bank(np.zeros(512), 64.0)


def test_welch_parseval_on_white_noise():
    # white noise has variance spread to Nyquist, so compare full-band PSD power with variance
    for s in range(100):
        x = np.random.default_rng(s).normal(size=int(8 * FS))
        f, p = F.welch_psd(x, FS)
        assert np.sum(p) * (f[1] - f[0]) == pytest.approx(x.var(), rel=0.10)


def test_zero_window_features():
    fm = F.extract_window_features(np.zeros((2, int(8 * FS))), FS, 8.0)
    names = F.feature_names()
    assert fm.shape == (2, 46)
    assert fm[0, 0] == 0.0
    perm = [i for i, n in enumerate(names) if n.startswith("perm")]
    assert len(perm) == 15 and np.all(fm[:, perm] == 0)
    assert np.all(np.isfinite(fm))


def test_short_window_rejected():
    with pytest.raises(IngestionError):
        F.extract_window_features(np.zeros((1, 100)), FS, 8.0)
    with pytest.raises(IngestionError):
        F.extract_window_features(np.full((1, 2048), np.nan), FS, 8.0)


@given(arrays(np.float64, st.integers(256, 600),
              elements=st.floats(-500, 500, allow_nan=False, allow_infinity=False)))
def test_entropies_finite_nonnegative(x):
    e = F.entropy_bank(x, FS)
    assert e.shape == (37,)
    assert np.all(np.isfinite(e)) and np.all(e >= 0)


def test_feature_extraction_deterministic():
    x = np.random.default_rng(4).normal(size=(3, int(10 * FS)))
    a = F.extract_features(x, FS, 8, 1)
    b = F.extract_features(x, FS, 8, 1)
    assert a.shape == (3, 3, 46)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("duration,wlen,wstep", [(10, 8, 1), (60, 8, 1), (20, 4, 2), (8, 8, 1)])
def test_window_count(duration, wlen, wstep):
    n = F.window_starts(int(duration * FS), FS, wlen, wstep).size
    assert n == math.floor((duration - wlen) / wstep) + 1


def test_discretize_examples():
    cal = F.Calibration(np.array([0.0, 5.0]), np.array([10.0, 5.0]), (1, 99))
    fm = np.array([[0.0, 1.0], [10.0, 7.0], [5.0, -3.0], [-4.0, 5.0], [99.0, 5.0]])
    lv = F.discretize(fm, cal, 20)
    assert lv[:, 0].tolist() == [0, 19, 10, 0, 19]
    assert lv[:, 1].tolist() == [10] * 5


def test_fit_calibration_percentiles():
    train = [np.arange(100.0).reshape(50, 1, 2), np.arange(100.0, 200.0).reshape(50, 1, 2)]
    cal = F.fit_calibration(train)
    pooled = np.concatenate([t.reshape(-1, 2) for t in train])
    np.testing.assert_allclose(cal.lower, np.percentile(pooled, 1, axis=0))
    np.testing.assert_allclose(cal.upper, np.percentile(pooled, 99, axis=0))
    back = F.Calibration.from_dict(cal.to_dict())
    np.testing.assert_array_equal(back.lower, cal.lower)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0.1, 100), st.integers(2, 40))
def test_discretize_monotone_and_in_range(v1, v2, width, n_levels):
    cal = F.Calibration(np.array([-50.0]), np.array([-50.0 + width]), (1, 99))
    lo, hi = sorted((v1, v2))
    l1, l2 = F.discretize(np.array([[lo], [hi]]), cal, n_levels)[:, 0]
    assert 0 <= l1 <= l2 <= n_levels - 1
