import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import bits64
from mchd.errors import UsageError
from mchd.hdcore import Hypervector, TieBreaker, hamming, new_random_hv
from mchd.inference import classify_window, classify_windows, predict, smooth_labels
from mchd.training import GlobalLabel, train_multicentroid, train_two_class

S, N = GlobalLabel.SEIZURE, GlobalLabel.NON_SEIZURE


def brute_smooth(x, w):
    out = []
    for t in range(len(x)):
        win = x[max(0, t - w + 1): t + 1]
        out.append(1 if 2 * sum(win) > len(win) else 0)
    return out


def test_smoothing_examples():
    assert smooth_labels([0] * 8).tolist() == [0] * 8
    assert smooth_labels([0, 1, 0, 0, 0, 0, 0, 0]).tolist() == [0] * 8
    assert smooth_labels([1] * 5).tolist() == [1] * 5
    assert smooth_labels([1, 0, 1, 1, 0, 0], 3).tolist() == [1, 0, 1, 1, 1, 0]


def test_smoothing_errors():
    with pytest.raises(UsageError):
        smooth_labels([])
    with pytest.raises(UsageError):
        smooth_labels([0, 1], 4)
    with pytest.raises(UsageError):
        smooth_labels([0, 1], 3, mode="sideways")


@given(st.lists(st.sampled_from([0, 1]), min_size=1, max_size=100), st.sampled_from([1, 3, 5, 7, 9]))
def test_causal_smoothing_matches_brute_force(x, w):
    assert smooth_labels(x, w).tolist() == brute_smooth(x, w)


@given(st.lists(st.sampled_from([0, 1]), min_size=1, max_size=100), st.sampled_from([1, 3, 5, 7]))
def test_centered_smoothing_properties(x, w):
    out = smooth_labels(x, w, mode="centered")
    half = w // 2
    for t, v in enumerate(out):
        win = x[max(0, t - half): t + half + 1]
        assert v == (2 * sum(win) > len(win))


@given(st.sampled_from([0, 1]), st.integers(1, 50), st.sampled_from([1, 3, 5]))
def test_smoothing_constant_sequences(v, n, w):
    assert smooth_labels([v] * n, w).tolist() == [v] * n


def test_classify_exact_prototype(rng):
    tie = TieBreaker.generate(256, rng)
    a, b = new_random_hv(256, rng), new_random_hv(256, rng)
    m = train_two_class([a, b], [S, N], tie)
    assert classify_window(m, a) == (S, int(S), 0.0)


def test_classify_tie_prefers_nonseizure():
    m = train_two_class([bits64("11"), bits64("00")], [S, N], TieBreaker(bits64("")))
    label, _, dist = classify_window(m, bits64("01"))
    assert label == N and dist == 1 / 64


def test_classify_matches_brute_force_scan(rng):
    dim = 256
    centres = [new_random_hv(dim, rng) for _ in range(6)]
    vs, ys = [], []
    for i in range(300):
        k = i % 6
        flip = (rng.random(dim) < 0.2).astype(np.uint8)
        vs.append(Hypervector.from_bits(centres[k].to_bits() ^ flip))
        ys.append(GlobalLabel(k % 2))
    model = train_multicentroid(vs, ys, TieBreaker.generate(dim, rng))
    queries = [new_random_hv(dim, rng) for _ in range(1000)]
    labels, ids, dist = classify_windows(model, np.stack([q.words for q in queries]))
    for q, lab, sid, d in zip(queries, labels, ids, dist):
        best = min(model.subclasses, key=lambda s: (hamming(q, s.prototype), s.label != N, s.id))
        assert (lab, sid, d) == (best.label, best.id, hamming(q, best.prototype) / dim)


def test_two_class_through_multicentroid_path(rng):
    tie = TieBreaker.generate(128, rng)
    vs = [new_random_hv(128, rng) for _ in range(40)]
    ys = [GlobalLabel(i % 2) for i in range(40)]
    two = train_two_class(vs, ys, tie)
    words = np.stack([v.words for v in vs])
    for v, lab in zip(vs, classify_windows(two, words)[0]):
        assert classify_window(two, v)[0] == lab


def test_predict_and_csv(tmp_path, rng):
    tie = TieBreaker.generate(64, rng)
    a, b = new_random_hv(64, rng), new_random_hv(64, rng)
    m = train_two_class([a, b], [S, N], tie)
    words = np.stack([b.words, a.words, b.words, b.words, a.words, a.words, a.words])
    pred = predict(m, words, 3, times=np.arange(7.0) + 8)
    assert pred.raw.tolist() == [0, 1, 0, 0, 1, 1, 1]
    assert pred.smoothed.tolist() == [0, 0, 0, 0, 0, 1, 1]
    pred.write_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "time,rawLabel,smoothedLabel,subclassId,distance"
    assert lines[2].startswith("9,1,0,1,0.000000")
