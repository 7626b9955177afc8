import json
import math

import numpy as np
import pytest

from mchd.errors import ConfigurationError, IngestionError
from mchd.ingest import (
    EDFSamples,
    Recording,
    SeizureAnnotation,
    SubjectFile,
    SyntheticSubjectConfig,
    build_subject_files,
    exclusion_zones,
    generate_synthetic_subject,
    load_montage,
    read_annotations,
    read_chbmit_summary,
    read_dataset_manifest,
    read_edf,
    read_text_signal,
    select_montage,
    write_annotations,
    write_dataset_manifest,
    write_edf,
    write_text_signal,
)


def raw_edf(path, labels, spr, n_records, digital, pmin=-100.0, pmax=100.0, dmin=-32768, dmax=32767,
            duration=1, reserved=""):
    """Byte-level EDF writer used as an oracle; ``digital`` is (records, signals, spr) int16."""
    ns = len(labels)
    f = lambda v, w: str(v).ljust(w)[:w].encode("ascii")
    head = (f(0, 8) + f("p", 80) + f("r", 80) + f("01.01.00", 8) + f("00.00.00", 8)
            + f(256 * (ns + 1), 8) + f(reserved, 44) + f(n_records, 8) + f(duration, 8) + f(ns, 4))
    for vals, w in ((labels, 16), ([""] * ns, 80), (["uV"] * ns, 8), ([pmin] * ns, 8), ([pmax] * ns, 8),
                    ([dmin] * ns, 8), ([dmax] * ns, 8), ([""] * ns, 80), ([spr] * ns, 8), ([""] * ns, 32)):
        head += b"".join(f(v, w) for v in vals)
    path.write_bytes(head + np.asarray(digital, dtype="<i2").tobytes())


def test_physical_calibration(tmp_path):
    p = tmp_path / "c.edf"
    raw_edf(p, ["A", "B"], 4, 2, np.zeros((2, 2, 4)))
    rec = read_edf(p)
    expect = (0 - (-32768)) * 200 / 65535 - 100
    assert rec.samples[0, 0] == pytest.approx(expect) and abs(expect - 0.0015) < 1e-4
    dig = np.arange(16).reshape(2, 2, 4) * 1000 - 8000
    raw_edf(p, ["A", "B"], 4, 2, dig)
    rec = read_edf(p)
    np.testing.assert_allclose(rec.samples[1], (dig[:, 1].reshape(-1) + 32768) * 200 / 65535 - 100)


def test_edf_fixture_dims(tmp_path):
    p = tmp_path / "big.edf"
    rng = np.random.default_rng(0)
    raw_edf(p, [f"C{i}" for i in range(23)], 256, 3600,
            rng.integers(-2000, 2000, (3600, 23, 256)))
    rec = read_edf(p, lazy=True)
    assert isinstance(rec.samples, EDFSamples)
    assert len(rec.channels) == 23 and rec.fs == 256 and rec.duration == 3600
    assert rec.samples.shape == (23, 3600 * 256)
    window = rec.samples[[3, 7], 1000:1600]
    eager = read_edf(p).samples
    np.testing.assert_array_equal(window, eager[[3, 7], 1000:1600])


def test_edf_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    rec = Recording("s", "r", ["FP1-F7", "F7-T7", "T7-P7"], 256.0, rng.normal(0, 40, (3, 256 * 5)))
    write_edf(tmp_path / "r.edf", rec)
    back = read_edf(tmp_path / "r.edf", subject="s")
    assert back.channels == rec.channels and back.fs == 256
    step = (np.ptp(rec.samples, axis=1) + 4) / 65535
    assert np.all(np.abs(back.samples - rec.samples) <= step[:, None])


def test_edf_errors(tmp_path):
    p = tmp_path / "t.edf"
    raw_edf(p, ["A"], 8, 4, np.zeros((4, 1, 8)))
    full = p.read_bytes()
    p.write_bytes(full[:-3])
    with pytest.raises(IngestionError, match="truncated"):
        read_edf(p)
    p.write_bytes(full[:100])
    with pytest.raises(IngestionError, match="header"):
        read_edf(p)
    p.write_bytes(full[:236] + b"abcd    " + full[244:])
    with pytest.raises(IngestionError, match="byte 236"):
        read_edf(p)
    raw_edf(p, ["A"], 8, 4, np.zeros((4, 1, 8)), reserved="EDF+D")
    with pytest.raises(IngestionError, match="EDF\\+D"):
        read_edf(p)
    p.write_bytes(b"\xff" + full[1:])
    with pytest.raises(IngestionError, match="BDF"):
        read_edf(p)


def test_text_signal_round_trip(tmp_path):
    rec = Recording("s", "r", ["a", "b"], 100.0, np.arange(20.0).reshape(2, 10))
    write_text_signal(tmp_path / "r.txt", rec)
    back = read_text_signal(tmp_path / "r.txt", "s")
    assert back.channels == ["a", "b"] and back.fs == 100
    np.testing.assert_allclose(back.samples, rec.samples)


def test_annotation_formats(tmp_path):
    anns = [SeizureAnnotation("chb01", "chb01_03", 2996, 3036), SeizureAnnotation("chb01", "chb01_04", 1467, 1494)]
    write_annotations(tmp_path / "a.csv", anns)
    assert read_annotations(tmp_path / "a.csv") == anns
    (tmp_path / "chb01-summary.txt").write_text(
        "File Name: chb01_03.edf\nNumber of Seizures in File: 1\n"
        "Seizure Start Time: 2996 seconds\nSeizure End Time: 3036 seconds\n\n"
        "File Name: chb01_04.edf\nNumber of Seizures in File: 1\n"
        "Seizure 1 Start Time: 1467 seconds\nSeizure 1 End Time: 1494 seconds\n"
    )
    assert read_chbmit_summary(tmp_path / "chb01-summary.txt") == anns
    with pytest.raises(IngestionError):
        SeizureAnnotation("s", "r", 10, 5)


def test_montage_selection():
    canon = load_montage()
    assert len(canon) == 18 and len(set(canon)) == 18
    extras = ["ECG", "T8-P8-1", *reversed(canon), "VNS"]
    rec = Recording("s", "r", [f"EEG {c}" if i % 3 == 0 else c for i, c in enumerate(extras)],
                    256.0, np.arange(len(extras), dtype=float)[:, None] * np.ones((1, 4)))
    out = select_montage(rec, canon)
    assert out.channels == canon
    # rows follow the canonical order; the duplicated T8-P8 resolves to its first occurrence
    firsts = {}
    for i, c in enumerate(extras):
        firsts.setdefault(c.replace("-1", "") if c.count("-") > 1 else c, i)
    assert out.samples[:, 0].tolist() == [firsts[c] for c in canon]
    again = select_montage(out, canon)
    np.testing.assert_array_equal(again.samples, out.samples)
    missing = Recording("s", "r", canon[1:], 256.0, np.zeros((17, 4)))
    with pytest.raises(IngestionError, match=canon[0]):
        select_montage(missing, canon)


def test_exclusion_zone_arithmetic():
    zones = exclusion_zones([SeizureAnnotation("s", "r", 1000, 1060)], "r")
    assert zones == [(940, 1960)]


def _long_subject(fs=4.0, seconds=20000):
    rng = np.random.default_rng(3)
    recs = [Recording("s", f"r{i}", ["a"], fs, rng.normal(size=(1, int(seconds * fs)))) for i in range(2)]
    anns = [SeizureAnnotation("s", "r0", 1000, 1060), SeizureAnnotation("s", "r0", 8000, 8045),
            SeizureAnnotation("s", "r1", 5000, 5030)]
    return recs, anns


@pytest.mark.parametrize("factor", [1, 5, 10])
def test_subject_files_respect_rules(factor):
    recs, anns = _long_subject()
    files = build_subject_files(recs, anns, factor, seed=11)
    assert len(files) == 3
    used = {}
    for sf, sz in zip(files, sorted(anns, key=lambda a: (a.recording, a.onset))):
        seiz = [s for s in sf.segments if s.kind == "seizure"]
        non = [s for s in sf.segments if s.kind == "nonseizure"]
        assert len(seiz) == 1 and seiz[0].source == sz.recording
        n_seiz = seiz[0].source_stop - seiz[0].source_start
        assert sum(s.source_stop - s.source_start for s in non) == factor * n_seiz
        assert sf.samples.shape[1] == (factor + 1) * n_seiz
        for s in non:
            assert (s.source_stop - s.source_start) <= 60 * sf.fs
            lo, hi = s.source_start / sf.fs, s.source_stop / sf.fs
            for zlo, zhi in exclusion_zones(anns, s.source):
                assert hi <= zlo or lo >= zhi
            for a, b in used.get(s.source, []):
                assert s.source_stop <= a or s.source_start >= b
            used.setdefault(s.source, []).append((s.source_start, s.source_stop))
        for s in sf.segments:
            src = next(r for r in recs if r.name == s.source)
            np.testing.assert_array_equal(
                sf.samples[:, s.file_start:s.file_start + s.source_stop - s.source_start],
                src.samples[:, s.source_start:s.source_stop])


def test_subject_file_errors():
    recs, anns = _long_subject(seconds=3000)
    with pytest.raises(IngestionError, match="insufficient"):
        build_subject_files(recs, anns[:1] + [SeizureAnnotation("s", "r1", 100, 700)], 10)
    with pytest.raises(IngestionError, match="at least 2"):
        build_subject_files(recs, anns[:1], 1)
    with pytest.raises(ConfigurationError):
        build_subject_files(recs, anns, 0)


def test_window_labels_and_count():
    sf = SubjectFile("s", 0, 2.0, ["a"], np.zeros((1, 60)), (20, 36), [], 1, 0)
    labels = sf.window_labels(8, 1)
    assert labels.size == math.floor((30 - 8) / 1) + 1
    starts = np.arange(labels.size) * 2
    overlap = np.clip(np.minimum(starts + 16, 36) - np.maximum(starts, 20), 0, None)
    assert labels.tolist() == (overlap >= 8).astype(int).tolist()


def test_provenance_round_trip(tmp_path):
    recs, anns = _long_subject()
    files = build_subject_files(recs, anns, 5, seed=2)
    paths = []
    for sf in files:
        sf.save(tmp_path / f"{sf.file_id}.npz")
        paths.append(f"{sf.file_id}.npz")
        back = SubjectFile.load(tmp_path / f"{sf.file_id}.npz")
        assert back.provenance() == sf.provenance()
        np.testing.assert_allclose(back.samples, sf.samples, rtol=1e-6)
    write_dataset_manifest(tmp_path / "manifest.json", files, paths)
    listed = read_dataset_manifest(tmp_path / "manifest.json")
    assert [p.name for p in listed["s"]] == paths
    meta = json.loads((tmp_path / "manifest.json").read_text())
    assert all("segments" in e and "seed" in e for e in meta["files"])


def test_subject_files_deterministic():
    recs, anns = _long_subject()
    a = build_subject_files(recs, anns, 10, seed=4)
    b = build_subject_files(recs, anns, 10, seed=4)
    assert [f.provenance() for f in a] == [f.provenance() for f in b]


def test_synthetic_subject():
    cfg = SyntheticSubjectConfig(n_seizures=3, factor=1, seed=5)
    recs, anns = generate_synthetic_subject(cfg)
    recs2, anns2 = generate_synthetic_subject(cfg)
    assert anns == anns2 and len(anns) == 3
    for r, r2 in zip(recs, recs2):
        assert r.samples.tobytes() == r2.samples.tobytes()
    for a in anns:
        r = next(x for x in recs if x.name == a.recording)
        assert 0 <= a.onset < a.offset <= r.duration
    files = build_subject_files(recs, anns, cfg.factor, seed=cfg.seed)
    assert len(files) == 3
    with pytest.raises(ConfigurationError):
        SyntheticSubjectConfig(n_seizure_modes=0)


def test_synthetic_single_mode_is_separable():
    from mchd.features import extract_features

    cfg = SyntheticSubjectConfig(n_seizure_modes=1, n_nonseizure_modes=1, n_seizures=2, factor=1, seed=0)
    recs, anns = generate_synthetic_subject(cfg)
    sf = build_subject_files(recs, anns, 1, seed=0)[0]
    fm = extract_features(sf.samples, sf.fs, 8, 2)
    y = sf.window_labels(8, 2)
    amp = fm[:, :, 0].mean(axis=1)
    # mean amplitude alone splits clean seizure/non-seizure windows
    assert amp[y == 1].min() > amp[(y == 0)].max() or \
        np.mean(amp[y == 1] > np.median(amp[y == 0]) * 2) > 0.9
