"""Recordings, annotations and per-seizure subject files.

Supported signal formats are the continuous 16-bit EDF/EDF+C subset used by
CHB-MIT and a columnar text format::

    # fs: 256
    # channels: FP1-F7,F7-T7
    12.5 -3.1
    ...

Annotation files are CSV with ``subject,recording,onset,offset`` (seconds).
"""
from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, IngestionError

log = logging.getLogger(__name__)

PRE_ICTAL_EXCLUSION = 60.0
POST_ICTAL_EXCLUSION = 900.0
MIN_CHUNK_SECONDS = 60.0


@dataclass
class Recording:
    subject: str
    name: str
    channels: list[str]
    fs: float
    samples: np.ndarray  # (n_channels, n_samples), microvolts

    def __post_init__(self) -> None:
        if not isinstance(self.samples, EDFSamples):
            self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        if self.samples.shape[0] != len(self.channels):
            raise IngestionError(
                f"{self.name}: {len(self.channels)} channel names for {self.samples.shape[0]} rows"
            )
        if self.fs <= 0:
            raise IngestionError(f"{self.name}: non-positive sampling rate {self.fs}")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.fs


@dataclass(frozen=True)
class SeizureAnnotation:
    subject: str
    recording: str
    onset: float
    offset: float

    def __post_init__(self) -> None:
        if not self.onset < self.offset:
            raise IngestionError(f"seizure onset {self.onset} not before offset {self.offset}")


# -- EDF -----------------------------------------------------------------------------

_EDF_MAIN = [("version", 8), ("patient", 80), ("recording", 80), ("startdate", 8),
             ("starttime", 8), ("header_bytes", 8), ("reserved", 44), ("n_records", 8),
             ("record_duration", 8), ("n_signals", 4)]
_EDF_SIGNAL = [("label", 16), ("transducer", 80), ("phys_dim", 8), ("phys_min", 8),
               ("phys_max", 8), ("dig_min", 8), ("dig_max", 8), ("prefilter", 80),
               ("samples_per_record", 8), ("reserved", 32)]


def _num(raw: str, name: str, offset: int, kind=float):
    try:
        return kind(raw.strip()) if kind is float else int(float(raw.strip()))
    except ValueError:
        raise IngestionError(f"malformed EDF header field {name!r} at byte {offset}: {raw!r}") from None


class EDFSamples:
    """Memory-mapped physical-unit view of EDF data; decodes only what is sliced.

    Supports ``view[rows]`` and ``view[rows, a:b]`` with ``rows`` a slice or
    integer list, which is all subject-file construction needs.
    """

    def __init__(self, path, header_bytes, n_records, record_samples, starts, spr, gains, offsets, rows):
        self._mm = np.memmap(path, dtype="<i2", mode="r", offset=header_bytes,
                             shape=(n_records, record_samples))
        self._starts, self._spr = starts, spr
        self._gains, self._offsets = np.asarray(gains), np.asarray(offsets)
        self._rows = list(rows)
        self.shape = (len(self._rows), n_records * spr)
        self.ndim = 2

    def _select(self, rows) -> "EDFSamples":
        out = object.__new__(EDFSamples)
        out.__dict__.update(self.__dict__)
        out._rows = list(np.asarray(self._rows)[rows]) if not isinstance(rows, int) else [self._rows[rows]]
        out.shape = (len(out._rows), self.shape[1])
        return out

    def __getitem__(self, key):
        rows, cols = (key, slice(None)) if not isinstance(key, tuple) else key
        view = self._select(rows)
        if cols == slice(None):
            a, b = 0, self.shape[1]
        else:
            a, b, step = cols.indices(self.shape[1])
            if step != 1:
                raise IndexError("strided column access is not supported")
        if cols == slice(None) and not isinstance(key, tuple):
            return view
        spr = self._spr
        r0, r1 = a // spr, -(-b // spr)
        out = np.empty((len(view._rows), max(b - a, 0)))
        for k, i in enumerate(view._rows):
            block = self._mm[r0:r1, self._starts[i] : self._starts[i] + spr].reshape(-1)
            out[k] = block[a - r0 * spr : b - r0 * spr] * self._gains[i] + self._offsets[i]
        return out

    def __array__(self, dtype=None, copy=None):
        arr = self[:, :]
        return arr if dtype is None else arr.astype(dtype)


def read_edf(path: str | Path, subject: str | None = None, lazy: bool = False) -> Recording:
    """Read an EDF file, converting digital samples to physical units.

    With ``lazy=True`` the samples stay on disk behind an :class:`EDFSamples` view.
    """
    path = Path(path)
    size = path.stat().st_size
    with open(path, "rb") as fh:
        buf = fh.read(256)
        if len(buf) == 256 and buf[252:256].strip().isdigit():
            buf += fh.read(256 * int(buf[252:256]))
    if len(buf) < 256:
        raise IngestionError(f"{path}: truncated EDF header (file has {len(buf)} bytes, need 256)")
    if buf[0:1] == b"\xff":
        raise IngestionError(f"{path}: BDF (24-bit) files are not supported (byte 0)")

    main, pos = {}, 0
    for name, width in _EDF_MAIN:
        main[name] = (buf[pos : pos + width].decode("ascii", "replace"), pos)
        pos += width
    if main["reserved"][0].startswith("EDF+D"):
        raise IngestionError(f"{path}: discontinuous EDF+D is not supported (byte {main['reserved'][1]})")
    ns = _num(main["n_signals"][0], "n_signals", main["n_signals"][1], int)
    header_bytes = _num(main["header_bytes"][0], "header_bytes", main["header_bytes"][1], int)
    if ns < 1 or header_bytes != 256 * (ns + 1):
        raise IngestionError(f"{path}: header size {header_bytes} inconsistent with {ns} signals (byte 184)")
    if size < header_bytes:
        raise IngestionError(f"{path}: truncated signal headers (file has {size} bytes, need {header_bytes})")
    n_records = _num(main["n_records"][0], "n_records", main["n_records"][1], int)
    duration = _num(main["record_duration"][0], "record_duration", main["record_duration"][1])
    if duration <= 0:
        raise IngestionError(f"{path}: non-positive record duration at byte {main['record_duration'][1]}")

    sig: dict[str, list] = {name: [] for name, _ in _EDF_SIGNAL}
    for name, width in _EDF_SIGNAL:
        for _ in range(ns):
            sig[name].append((buf[pos : pos + width].decode("ascii", "replace"), pos))
            pos += width
    labels = [s.strip() for s, _ in sig["label"]]
    spr = [_num(s, "samples_per_record", o, int) for s, o in sig["samples_per_record"]]
    pmin = np.array([_num(s, "phys_min", o) for s, o in sig["phys_min"]])
    pmax = np.array([_num(s, "phys_max", o) for s, o in sig["phys_max"]])
    dmin = np.array([_num(s, "dig_min", o) for s, o in sig["dig_min"]])
    dmax = np.array([_num(s, "dig_max", o) for s, o in sig["dig_max"]])

    record_samples = sum(spr)
    record_bytes = 2 * record_samples
    available = (size - header_bytes) // record_bytes
    if n_records < 0:
        n_records = available
    if available < n_records:
        expected = header_bytes + n_records * record_bytes
        raise IngestionError(
            f"{path}: truncated data, expected {expected} bytes but file ends at byte {size}"
        )

    keep = [i for i, lab in enumerate(labels) if lab != "EDF Annotations"]
    if not keep:
        raise IngestionError(f"{path}: no signal channels")
    rates = {spr[i] / duration for i in keep}
    if len(rates) != 1:
        raise IngestionError(f"{path}: channels with differing sampling rates {sorted(rates)} are not supported")
    for i in keep:
        if dmax[i] == dmin[i]:
            raise IngestionError(f"{path}: channel {labels[i]!r} has dig_min == dig_max (byte {sig['dig_min'][i][1]})")
    gains = (pmax - pmin) / np.where(dmax == dmin, 1, dmax - dmin)
    offsets = pmin - dmin * gains
    starts = np.concatenate([[0], np.cumsum(spr)]).astype(int)
    view = EDFSamples(path, header_bytes, n_records, record_samples, starts, spr[keep[0]], gains, offsets, keep)
    return Recording(
        subject or path.stem.split("_")[0],
        path.stem,
        [labels[i] for i in keep],
        rates.pop(),
        view if lazy else np.asarray(view),
    )


def _field(value, width: int) -> bytes:
    text = str(value)
    if len(text) > width:
        text = text[:width]
    return text.ljust(width).encode("ascii")


def write_edf(path: str | Path, rec: Recording, record_duration: float = 1.0) -> None:
    """Write a plain EDF file; trailing samples that do not fill a record are dropped."""
    spr = int(round(rec.fs * record_duration))
    n_records = rec.n_samples // spr
    data = rec.samples[:, : n_records * spr]
    ns = len(rec.channels)
    dmin, dmax = -32768, 32767
    pmin = np.floor(data.min(axis=1) - 1.0) if data.size else np.full(ns, -1.0)
    pmax = np.ceil(data.max(axis=1) + 1.0) if data.size else np.full(ns, 1.0)
    if np.any(np.abs(np.concatenate([pmin, pmax])) >= 1e7):
        raise IngestionError(f"{rec.name}: amplitudes beyond the 8-character EDF header range")
    header = b"".join([
        _field(0, 8), _field("X X X X", 80), _field(f"Startdate X {rec.name}", 80),
        _field("01.01.00", 8), _field("00.00.00", 8), _field(256 * (ns + 1), 8), _field("", 44),
        _field(n_records, 8), _field(f"{record_duration:g}", 8), _field(ns, 4),
    ])
    cols = [
        [_field(c, 16) for c in rec.channels],
        [_field("", 80)] * ns,
        [_field("uV", 8)] * ns,
        [_field(int(v), 8) for v in pmin],
        [_field(int(v), 8) for v in pmax],
        [_field(dmin, 8)] * ns,
        [_field(dmax, 8)] * ns,
        [_field("", 80)] * ns,
        [_field(spr, 8)] * ns,
        [_field("", 32)] * ns,
    ]
    header += b"".join(b"".join(c) for c in cols)
    gain = (pmax - pmin) / (dmax - dmin)
    digital = np.rint((data - pmin[:, None]) / gain[:, None] + dmin).clip(dmin, dmax).astype("<i2")
    body = digital.reshape(ns, n_records, spr).transpose(1, 0, 2).tobytes()
    Path(path).write_bytes(header + body)


# -- text formats ----------------------------------------------------------------------


def write_text_signal(path: str | Path, rec: Recording) -> None:
    with open(path, "w") as fh:
        fh.write(f"# fs: {rec.fs:g}\n# channels: {','.join(rec.channels)}\n")
        np.savetxt(fh, rec.samples.T, fmt="%.6g")


def read_text_signal(path: str | Path, subject: str | None = None) -> Recording:
    path = Path(path)
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            meta[key.strip().lower()] = value.strip()
    if "fs" not in meta or "channels" not in meta:
        raise IngestionError(f"{path}: text signal needs '# fs:' and '# channels:' header lines")
    channels = [c.strip() for c in meta["channels"].split(",") if c.strip()]
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except ValueError as exc:
        raise IngestionError(f"{path}: {exc}") from None
    if data.shape[1] != len(channels):
        raise IngestionError(f"{path}: {data.shape[1]} columns but {len(channels)} channel names")
    return Recording(subject or path.stem.split("_")[0], path.stem, channels, float(meta["fs"]), data.T)


def read_recording(path: str | Path, subject: str | None = None) -> Recording:
    path = Path(path)
    if path.suffix.lower() == ".edf":
        return read_edf(path, subject)
    return read_text_signal(path, subject)


def read_annotations(path: str | Path) -> list[SeizureAnnotation]:
    out = []
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if rows and rows[0][0].strip().lower() == "subject":
        rows = rows[1:]
    for i, r in enumerate(rows):
        if len(r) != 4:
            raise IngestionError(f"{path}: annotation row {i + 1} has {len(r)} fields, expected 4")
        try:
            out.append(SeizureAnnotation(r[0].strip(), r[1].strip(), float(r[2]), float(r[3])))
        except ValueError:
            raise IngestionError(f"{path}: bad number in annotation row {i + 1}") from None
    return out


def write_annotations(path: str | Path, annotations: Iterable[SeizureAnnotation]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subject", "recording", "onset", "offset"])
        for a in annotations:
            w.writerow([a.subject, a.recording, f"{a.onset:g}", f"{a.offset:g}"])


_SUMMARY_FILE = re.compile(r"File Name:\s*(\S+)")
_SUMMARY_TIME = re.compile(r"Seizure\s*\d*\s*(Start|End) Time:\s*([\d.]+)\s*seconds", re.I)


def read_chbmit_summary(path: str | Path) -> list[SeizureAnnotation]:
    """Parse a CHB-MIT ``chbNN-summary.txt`` into annotations."""
    path = Path(path)
    subject = path.name.split("-")[0]
    out, current, onset = [], None, None
    for line in path.read_text(errors="replace").splitlines():
        m = _SUMMARY_FILE.search(line)
        if m:
            current = Path(m.group(1)).stem
            continue
        m = _SUMMARY_TIME.search(line)
        if m and current:
            if m.group(1).lower() == "start":
                onset = float(m.group(2))
            elif onset is not None:
                out.append(SeizureAnnotation(subject, current, onset, float(m.group(2))))
                onset = None
    return out


# -- montage -------------------------------------------------------------------------------


def normalize_channel_name(name: str) -> str:
    name = name.strip().upper().replace(" ", "")
    if name.startswith("EEG"):
        name = name[3:]
    return re.sub(r"-(\d+)$", "", name) if name.count("-") > 1 else name


def load_montage(path: str | Path | None = None) -> list[str]:
    if path is None:
        text = resources.files("mchd").joinpath("data/montage18.txt").read_text()
    else:
        text = Path(path).read_text()
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


def select_montage(rec: Recording, channels: Sequence[str]) -> Recording:
    """Keep ``channels`` in the given order; the first of duplicate names wins."""
    index: dict[str, int] = {}
    for i, name in enumerate(rec.channels):
        index.setdefault(normalize_channel_name(name), i)
    rows = []
    for ch in channels:
        key = normalize_channel_name(ch)
        if key not in index:
            raise IngestionError(f"{rec.name}: missing channel {ch!r}")
        rows.append(index[key])
    return Recording(rec.subject, rec.name, list(channels), rec.fs, rec.samples[rows])


# -- subject files --------------------------------------------------------------------------


@dataclass
class Segment:
    """Provenance of one contiguous stretch of a subject file (sample units)."""

    source: str
    source_start: int
    source_stop: int
    file_start: int
    kind: str  # "seizure" | "nonseizure"

    @property
    def length(self) -> int:
        return self.source_stop - self.source_start


@dataclass
class SubjectFile:
    subject: str
    index: int
    fs: float
    channels: list[str]
    samples: np.ndarray
    seizure: tuple[int, int]  # [start, stop) in file samples
    segments: list[Segment]
    factor: float
    seed: int

    @property
    def file_id(self) -> str:
        return f"{self.subject}_f{self.index:02d}"

    @property
    def duration(self) -> float:
        return self.samples.shape[1] / self.fs

    def window_labels(self, wlen: float, wstep: float) -> np.ndarray:
        """1 where at least half of a window's samples lie inside the seizure."""
        from .features import window_starts

        span = int(round(wlen * self.fs))
        starts = window_starts(self.samples.shape[1], self.fs, wlen, wstep)
        a, b = self.seizure
        overlap = np.clip(np.minimum(starts + span, b) - np.maximum(starts, a), 0, None)
        return (2 * overlap >= span).astype(np.int64)

    def provenance(self) -> dict:
        return {
            "subject": self.subject,
            "index": self.index,
            "fs": self.fs,
            "channels": list(self.channels),
            "seizure": list(self.seizure),
            "segments": [asdict(s) for s in self.segments],
            "factor": self.factor,
            "seed": self.seed,
        }

    def save(self, path: str | Path) -> None:
        np.savez_compressed(
            path,
            samples=self.samples.astype(np.float32),
            provenance=np.array(json.dumps(self.provenance(), sort_keys=True)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "SubjectFile":
        try:
            with np.load(path) as z:
                samples = z["samples"].astype(np.float64)
                meta = json.loads(str(z["provenance"]))
        except (OSError, KeyError, ValueError) as exc:
            raise IngestionError(f"{path}: not a subject file ({exc})") from None
        return cls(
            meta["subject"],
            meta["index"],
            meta["fs"],
            meta["channels"],
            samples,
            tuple(meta["seizure"]),
            [Segment(**s) for s in meta["segments"]],
            meta["factor"],
            meta["seed"],
        )


def exclusion_zones(
    annotations: Iterable[SeizureAnnotation],
    recording: str,
    pre: float = PRE_ICTAL_EXCLUSION,
    post: float = POST_ICTAL_EXCLUSION,
) -> list[tuple[float, float]]:
    """Spans (seconds) around each seizure of ``recording`` unusable as non-seizure data."""
    return sorted((a.onset - pre, a.offset + post) for a in annotations if a.recording == recording)


def _free_intervals(n_samples: int, fs: float, zones: list[tuple[float, float]]) -> list[list[int]]:
    free, cursor = [], 0
    for lo, hi in zones:
        a = max(0, int(np.floor(lo * fs)))
        b = min(n_samples, int(np.ceil(hi * fs)))
        if a > cursor:
            free.append([cursor, a])
        cursor = max(cursor, b)
    if cursor < n_samples:
        free.append([cursor, n_samples])
    return free


def build_subject_files(
    recordings: Sequence[Recording],
    annotations: Sequence[SeizureAnnotation],
    factor: float,
    seed: int = 0,
    min_chunk: float = MIN_CHUNK_SECONDS,
    pre: float = PRE_ICTAL_EXCLUSION,
    post: float = POST_ICTAL_EXCLUSION,
) -> list[SubjectFile]:
    """One file per seizure plus ``factor`` times its duration of non-seizure data.

    Non-seizure data is drawn as contiguous chunks of ``min_chunk`` seconds
    (shorter only when the remaining need or the largest free stretch is
    shorter) from outside every exclusion zone, without reuse across files.
    The seizure is placed at a random position among the chunks.
    """
    if factor <= 0:
        raise ConfigurationError(f"factor must be positive, got {factor}")
    by_name = {r.name: r for r in recordings}
    if not by_name:
        raise IngestionError("no recordings given")
    fs_set = {r.fs for r in recordings}
    ch_set = {tuple(r.channels) for r in recordings}
    if len(fs_set) != 1 or len(ch_set) != 1:
        raise IngestionError("recordings of one subject must share sampling rate and channel list")
    fs, channels = fs_set.pop(), list(ch_set.pop())
    seizures = [a for a in annotations if a.recording in by_name]
    missing = {a.recording for a in annotations} - set(by_name)
    if missing:
        raise IngestionError(f"annotations reference unknown recordings: {sorted(missing)}")
    if len(seizures) < 2:
        raise IngestionError(f"need at least 2 seizures for leave-one-out, got {len(seizures)}")
    order = {r.name: i for i, r in enumerate(recordings)}
    seizures.sort(key=lambda a: (order[a.recording], a.onset))

    pool = {
        r.name: _free_intervals(r.n_samples, fs, exclusion_zones(annotations, r.name, pre, post))
        for r in recordings
    }
    rng = np.random.default_rng(seed)
    chunk_len = int(round(min_chunk * fs))
    files = []
    for idx, sz in enumerate(seizures):
        rec = by_name[sz.recording]
        a = int(round(sz.onset * fs))
        b = min(int(round(sz.offset * fs)), rec.n_samples)
        if b <= a:
            raise IngestionError(f"seizure {sz} lies outside recording {rec.name}")
        need = int(round(factor * (b - a)))
        chunks = []
        while need > 0:
            flat = [(name, iv) for name in pool for iv in pool[name] if iv[1] > iv[0]]
            if not flat:
                raise IngestionError(
                    f"{sz.subject}: insufficient eligible non-seizure data for seizure {idx} "
                    f"({need / fs:.1f} s still needed)"
                )
            want = min(chunk_len, need)
            largest = max(iv[1] - iv[0] for _, iv in flat)
            want = min(want, largest)
            fits = [(n, iv) for n, iv in flat if iv[1] - iv[0] >= want]
            weights = np.array([iv[1] - iv[0] - want + 1 for _, iv in fits], dtype=float)
            name, iv = fits[rng.choice(len(fits), p=weights / weights.sum())]
            start = iv[0] + int(rng.integers(0, iv[1] - iv[0] - want + 1))
            chunks.append((name, start, start + want))
            pool[name].remove(iv)
            pool[name].extend(p for p in ([iv[0], start], [start + want, iv[1]]) if p[1] > p[0])
            pool[name].sort()
            need -= want
        insert_at = int(rng.integers(0, len(chunks) + 1))
        parts = [(n, s, e, "nonseizure") for n, s, e in chunks]
        parts.insert(insert_at, (rec.name, a, b, "seizure"))
        segments, pieces, cursor, seizure_span = [], [], 0, (0, 0)
        for name, s, e, kind in parts:
            segments.append(Segment(name, int(s), int(e), cursor, kind))
            pieces.append(by_name[name].samples[:, s:e])
            if kind == "seizure":
                seizure_span = (cursor, cursor + e - s)
            cursor += e - s
        files.append(
            SubjectFile(sz.subject, idx, fs, channels, np.concatenate(pieces, axis=1),
                        seizure_span, segments, factor, seed)
        )
    return files


def write_dataset_manifest(path: str | Path, files: Sequence[SubjectFile], paths: Sequence[str | Path]) -> None:
    entries = []
    for sf, p in zip(files, paths):
        entry = sf.provenance()
        entry["path"] = str(p)
        entry["file_id"] = sf.file_id
        entries.append(entry)
    Path(path).write_text(json.dumps({"files": entries}, indent=2, sort_keys=True))


def read_dataset_manifest(path: str | Path) -> dict[str, list[Path]]:
    """Subject id -> subject-file paths (relative paths resolve against the manifest)."""
    path = Path(path)
    try:
        meta = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestionError(f"{path}: unreadable dataset manifest ({exc})") from None
    out: dict[str, list[Path]] = {}
    for e in sorted(meta["files"], key=lambda e: (e["subject"], e["index"])):
        p = Path(e["path"])
        out.setdefault(e["subject"], []).append(p if p.is_absolute() else path.parent / p)
    return out


def prepare_dataset(
    data: str | Path,
    annotations: Sequence[SeizureAnnotation],
    factor: float,
    out: str | Path,
    seed: int = 0,
    montage: Sequence[str] | None = None,
    subjects: Sequence[str] | None = None,
) -> Path:
    """Build and save subject files for every recording found under ``data``.

    Recordings are read lazily; those lacking a montage channel are skipped
    with a warning. Returns the path of the written dataset manifest.
    """
    data, out = Path(data), Path(out)
    out.mkdir(parents=True, exist_ok=True)
    subject_of = {a.recording: a.subject for a in annotations}
    paths = sorted(p for p in data.rglob("*") if p.suffix.lower() in (".edf", ".txt")
                   and not p.name.endswith("summary.txt"))
    by_subject: dict[str, list[Recording]] = {}
    for p in paths:
        subject = subject_of.get(p.stem, p.stem.split("_")[0])
        if subjects is not None and subject not in subjects:
            continue
        rec = read_edf(p, subject, lazy=True) if p.suffix.lower() == ".edf" else read_text_signal(p, subject)
        if montage is not None:
            try:
                rec = select_montage(rec, montage)
            except IngestionError as exc:
                log.warning("skipping %s: %s", p.name, exc)
                continue
        by_subject.setdefault(subject, []).append(rec)
    files, names = [], []
    for subject, recs in sorted(by_subject.items()):
        anns = [a for a in annotations if a.subject == subject and a.recording in {r.name for r in recs}]
        for sf in build_subject_files(recs, anns, factor, seed=seed):
            name = f"{sf.file_id}.npz"
            sf.save(out / name)
            files.append(sf)
            names.append(name)
        log.info("%s: %d subject files", subject, sum(f.subject == subject for f in files))
    manifest = out / "manifest.json"
    write_dataset_manifest(manifest, files, names)
    return manifest


def prepare_chbmit(
    root: str | Path, subjects: Sequence[str], factor: float, out: str | Path, seed: int = 0
) -> Path:
    """:func:`prepare_dataset` for a CHB-MIT tree (``root/chbNN/*.edf`` plus summaries)."""
    root = Path(root)
    annotations = []
    for subject in subjects:
        summary = root / subject / f"{subject}-summary.txt"
        if not summary.exists():
            raise IngestionError(f"missing {summary}")
        annotations += read_chbmit_summary(summary)
    return prepare_dataset(root, annotations, factor, out, seed, load_montage(), subjects)


# -- synthetic data ---------------------------------------------------------------------------

# (dominant Hz, amplitude uV, harmonic weight) per regime; non-seizure regimes are
# listed from most to least frequent and the last ones deliberately share
# amplitude/rhythmicity traits with the seizure regimes.
NONSEIZURE_MODES = [(10.0, 12.0, 0.0), (21.0, 7.0, 0.0), (2.0, 45.0, 0.3), (6.5, 18.0, 0.0), (38.0, 5.0, 0.0)]
SEIZURE_MODES = [(4.5, 60.0, 0.5), (3.0, 75.0, 0.8), (7.5, 50.0, 0.4), (1.5, 80.0, 0.6)]


@dataclass
class SyntheticSubjectConfig:
    subject: str = "synth01"
    n_seizure_modes: int = 2
    n_nonseizure_modes: int = 3
    n_seizures: int = 6
    factor: float = 10.0
    n_channels: int = 4
    fs: float = 128.0
    seizure_duration: tuple[float, float] = (20.0, 30.0)
    regime_duration: tuple[float, float] = (15.0, 45.0)
    mode_weights: tuple[float, ...] | None = None
    noise_uv: float = 6.0
    post_seizure: float = 20.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.n_seizure_modes <= len(SEIZURE_MODES):
            raise ConfigurationError(f"n_seizure_modes must be in [1, {len(SEIZURE_MODES)}]")
        if not 1 <= self.n_nonseizure_modes <= len(NONSEIZURE_MODES):
            raise ConfigurationError(f"n_nonseizure_modes must be in [1, {len(NONSEIZURE_MODES)}]")
        if self.n_seizures < 1 or self.n_channels < 1:
            raise ConfigurationError("need at least one seizure and one channel")
        if self.mode_weights is not None and len(self.mode_weights) != self.n_nonseizure_modes:
            raise ConfigurationError("mode_weights must have one entry per non-seizure mode")

    def weights(self) -> np.ndarray:
        if self.mode_weights is not None:
            w = np.asarray(self.mode_weights, dtype=float)
        else:
            w = 0.5 ** np.arange(self.n_nonseizure_modes)
        return w / w.sum()


def _pink_noise(rng: np.random.Generator, n_channels: int, n: int, fs: float) -> np.ndarray:
    spec = np.fft.rfft(rng.standard_normal((n_channels, n)), axis=1)
    f = np.fft.rfftfreq(n, 1 / fs)
    shape = 1 / np.sqrt(np.maximum(f, 0.5))
    x = np.fft.irfft(spec * shape, n=n, axis=1)
    return x / x.std(axis=1, keepdims=True)


def _regime(rng, mode, n_channels, n, fs, noise_uv, gains, phases) -> np.ndarray:
    freq, amp, harm = mode
    freq = freq * rng.uniform(0.95, 1.05)
    t = np.arange(n) / fs
    base = np.sin(2 * np.pi * freq * t[None, :] + phases[:, None])
    if harm:
        base = base + harm * np.sin(2 * np.pi * 2 * freq * t[None, :] + 2 * phases[:, None])
        base = base + 0.5 * harm * np.sin(2 * np.pi * 3 * freq * t[None, :] + 3 * phases[:, None])
    envelope = 1 + 0.1 * np.sin(2 * np.pi * rng.uniform(0.05, 0.2) * t)
    return amp * gains[:, None] * envelope[None, :] * base + noise_uv * _pink_noise(rng, n_channels, n, fs)


def generate_synthetic_subject(cfg: SyntheticSubjectConfig) -> tuple[list[Recording], list[SeizureAnnotation]]:
    """One recording per seizure: regime-switching background, the seizure, a short tail.

    Each recording carries enough pre-seizure background (outside the
    exclusion zone) for ``factor`` times the seizure duration.
    """
    rng = np.random.default_rng(cfg.seed)
    fs, nch = cfg.fs, cfg.n_channels
    weights = cfg.weights()
    ns_modes = NONSEIZURE_MODES[: cfg.n_nonseizure_modes]
    sz_modes = SEIZURE_MODES[: cfg.n_seizure_modes]
    gains = rng.uniform(0.7, 1.3, size=nch)
    recordings, annotations = [], []
    for k in range(cfg.n_seizures):
        dur = rng.uniform(*cfg.seizure_duration)
        background = cfg.factor * dur + PRE_ICTAL_EXCLUSION + 2 * MIN_CHUNK_SECONDS
        pieces, filled = [], 0
        n_bg = int(round(background * fs))
        while filled < n_bg:
            seg = min(int(round(rng.uniform(*cfg.regime_duration) * fs)), n_bg - filled)
            mode = ns_modes[rng.choice(len(ns_modes), p=weights)]
            pieces.append(_regime(rng, mode, nch, seg, fs, cfg.noise_uv, gains, rng.uniform(0, 2 * np.pi, nch)))
            filled += seg
        n_sz = int(round(dur * fs))
        pieces.append(_regime(rng, sz_modes[k % len(sz_modes)], nch, n_sz, fs, cfg.noise_uv, gains,
                              rng.uniform(0, 2 * np.pi, nch)))
        n_tail = int(round(cfg.post_seizure * fs))
        pieces.append(_regime(rng, ns_modes[0], nch, n_tail, fs, cfg.noise_uv, gains, rng.uniform(0, 2 * np.pi, nch)))
        name = f"{cfg.subject}_r{k:02d}"
        channels = [f"CH{c + 1}" for c in range(nch)]
        recordings.append(Recording(cfg.subject, name, channels, fs, np.concatenate(pieces, axis=1)))
        annotations.append(SeizureAnnotation(cfg.subject, name, n_bg / fs, (n_bg + n_sz) / fs))
    return recordings, annotations
