"""Prototype models: the single-pass 2-class baseline and the multi-centroid trainer."""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import hdcore
from .errors import TrainingError, UsageError
from .hdcore import BitAccumulator, Hypervector, TieBreaker


class GlobalLabel(enum.IntEnum):
    NON_SEIZURE = 0
    SEIZURE = 1


LABEL_NAMES = ("nonSeizure", "seizure")


@dataclass
class SubClass:
    id: int
    label: GlobalLabel
    acc: BitAccumulator
    prototype: Hypervector

    @property
    def count(self) -> int:
        return self.acc.n

    def absorb(self, words: np.ndarray, tiebreak: TieBreaker) -> None:
        self.acc.add(words)
        self.prototype = hdcore.binarize(self.acc, tiebreak)

    def copy(self) -> "SubClass":
        return SubClass(self.id, self.label, self.acc.copy(), self.prototype)


@dataclass
class Model:
    """Ordered sub-classes sharing one tiebreaker.

    A 2-class model is simply one with a single sub-class per label, so both
    variants go through the same inference code.
    """

    tiebreak: TieBreaker
    subclasses: list[SubClass] = field(default_factory=list)
    variant: str = "MC"
    n_levels: int = 0
    n_channels: int = 0
    n_features: int = 0
    seed: int = 0

    @property
    def dim(self) -> int:
        return self.tiebreak.dim

    def __len__(self) -> int:
        return len(self.subclasses)

    @property
    def labels(self) -> np.ndarray:
        return np.array([int(s.label) for s in self.subclasses], dtype=np.int64)

    @property
    def ids(self) -> np.ndarray:
        return np.array([s.id for s in self.subclasses], dtype=np.int64)

    @property
    def counts(self) -> np.ndarray:
        return np.array([s.count for s in self.subclasses], dtype=np.int64)

    def prototype_words(self) -> np.ndarray:
        if not self.subclasses:
            return np.empty((0, self.dim // hdcore.WORD_BITS), dtype=np.uint64)
        return np.stack([s.prototype.words for s in self.subclasses])

    def counts_per_label(self) -> dict[GlobalLabel, int]:
        out = {lab: 0 for lab in GlobalLabel}
        for s in self.subclasses:
            out[s.label] += 1
        return out

    def next_id(self) -> int:
        return max((s.id for s in self.subclasses), default=-1) + 1

    def copy(self) -> "Model":
        return Model(
            self.tiebreak,
            [s.copy() for s in self.subclasses],
            self.variant,
            self.n_levels,
            self.n_channels,
            self.n_features,
            self.seed,
        )

    # -- serialization ---------------------------------------------------------

    def to_bytes(self) -> bytes:
        return dump_model(self)

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "Model":
        return load_model(Path(path).read_bytes())


def _stream(hvs, labels) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(hvs, np.ndarray):
        words = np.atleast_2d(hvs)
    else:
        hvs = list(hvs)
        if not hvs:
            return np.empty((0, 0), dtype=np.uint64), np.empty(0, dtype=np.int64)
        words = np.stack([h.words for h in hvs])
    labels = np.asarray([int(y) for y in labels], dtype=np.int64)
    if labels.shape[0] != words.shape[0]:
        raise UsageError("vectors and labels differ in length")
    if labels.size and not np.isin(labels, [0, 1]).all():
        raise UsageError("labels must be 0 (non-seizure) or 1 (seizure)")
    return words, labels


def train_two_class(hvs, labels, tiebreak: TieBreaker) -> Model:
    """Bundle every vector of each label into one prototype."""
    words, labels = _stream(hvs, labels)
    model = Model(tiebreak, variant="2C")
    for lab in GlobalLabel:
        sel = words[labels == lab]
        if sel.shape[0] == 0:
            raise TrainingError(f"no training vectors with label {LABEL_NAMES[lab]}")
        sums = hdcore.unpack_words(sel, tiebreak.dim).sum(axis=0, dtype=np.int64)
        acc = BitAccumulator(tiebreak.dim, sums, sel.shape[0])
        model.subclasses.append(SubClass(int(lab), lab, acc, hdcore.binarize(acc, tiebreak)))
    return model


def train_multicentroid(hvs, labels, tiebreak: TieBreaker, margin: float = 0.0) -> Model:
    """Single pass; a vector closer to a wrong-label prototype founds a new sub-class.

    Ties between the best correct-label and wrong-label prototypes favour the
    correct label. ``margin`` (normalized distance) requires the wrong label
    to be closer by more than that amount before a sub-class is created.
    """
    words, labels = _stream(hvs, labels)
    if words.shape[0] == 0:
        raise TrainingError("empty training stream")
    dim = tiebreak.dim
    model = Model(tiebreak, variant="MC")
    protos = np.empty((0, words.shape[1]), dtype=np.uint64)
    proto_labels = np.empty(0, dtype=np.int64)
    slack = margin * dim

    for hv, y in zip(words, labels):
        correct = proto_labels == y
        found = not correct.any()
        if not found:
            dist = hdcore.popcount(protos ^ hv)
            d_correct = dist[correct]
            best = int(np.flatnonzero(correct)[np.argmin(d_correct)])
            wrong = ~correct
            if wrong.any() and dist[wrong].min() + slack < d_correct.min():
                found = True
        if found:
            acc = BitAccumulator(dim)
            acc.add(hv)
            sub = SubClass(len(model.subclasses), GlobalLabel(int(y)), acc, Hypervector(dim, hv))
            model.subclasses.append(sub)
            protos = np.vstack([protos, hv[None]])
            proto_labels = np.append(proto_labels, y)
        else:
            sub = model.subclasses[best]
            sub.absorb(hv, tiebreak)
            protos[best] = sub.prototype.words
    return model


def nearest_subclass(
    model: Model, hv: Hypervector, prefer: GlobalLabel = GlobalLabel.NON_SEIZURE
) -> tuple[SubClass, float]:
    """Nearest prototype; equal distances go to ``prefer``'s sub-classes, then lowest id."""
    if len(model) == 0:
        raise UsageError("model has no sub-classes")
    idx, dist = nearest_indices(model, hv.words[None], prefer)
    return model.subclasses[int(idx[0])], float(dist[0]) / model.dim


def nearest_indices(
    model: Model, words: np.ndarray, prefer: GlobalLabel = GlobalLabel.NON_SEIZURE
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`nearest_subclass`: sub-class positions and bit distances."""
    if len(model) == 0:
        raise UsageError("model has no sub-classes")
    dist = hdcore.hamming_matrix(np.atleast_2d(words), model.prototype_words())
    labels, ids = model.labels, model.ids
    # lexicographic key: distance, then non-preferred label, then id
    rank = np.lexsort((ids, labels != int(prefer)))
    order_pos = np.empty_like(rank)
    order_pos[rank] = np.arange(rank.size)
    key = dist * rank.size + order_pos[None, :]
    idx = np.argmin(key, axis=1)
    return idx, dist[np.arange(dist.shape[0]), idx]


# -- binary model file --------------------------------------------------------------
#
#   magic "MCHD" | u32 version
#   u32 dim | u32 n_levels | u32 n_channels | u32 n_features | u64 seed
#   u16 len + utf8 variant
#   u32 n_labels, then per label: u16 len + utf8 name
#   tiebreak hypervector (u32 dim + dim/64 little-endian u64 words)
#   u32 n_subclasses, then per sub-class:
#     u32 id | u8 label | u64 count | dim x u32 accumulator sums | prototype hypervector
#
# All integers little-endian.

MAGIC = b"MCHD"
VERSION = 1


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def dump_model(model: Model) -> bytes:
    parts = [
        MAGIC,
        struct.pack("<I", VERSION),
        struct.pack("<IIIIQ", model.dim, model.n_levels, model.n_channels, model.n_features, model.seed),
        _pack_str(model.variant),
        struct.pack("<I", len(LABEL_NAMES)),
        *(_pack_str(n) for n in LABEL_NAMES),
        model.tiebreak.hv.to_bytes(),
        struct.pack("<I", len(model)),
    ]
    for s in model.subclasses:
        parts.append(struct.pack("<IBQ", s.id, int(s.label), s.count))
        parts.append(s.acc.sums.astype("<u4").tobytes())
        parts.append(s.prototype.to_bytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf, self.pos = buf, 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.buf):
            raise UsageError(f"truncated model file at byte {self.pos}")
        out = struct.unpack_from(fmt, self.buf, self.pos)
        self.pos += size
        return out

    def string(self) -> str:
        (n,) = self.take("<H")
        raw = self.buf[self.pos : self.pos + n]
        self.pos += n
        return raw.decode("utf-8")

    def hv(self) -> Hypervector:
        hv, self.pos = Hypervector.from_bytes(self.buf, self.pos)
        return hv


def load_model(buf: bytes) -> Model:
    r = _Reader(buf)
    if buf[:4] != MAGIC:
        raise UsageError("not a model file (bad magic)")
    r.pos = 4
    (version,) = r.take("<I")
    if version != VERSION:
        raise UsageError(f"unsupported model version {version}")
    dim, n_levels, n_channels, n_features, seed = r.take("<IIIIQ")
    variant = r.string()
    (n_labels,) = r.take("<I")
    names = tuple(r.string() for _ in range(n_labels))
    if names != LABEL_NAMES:
        raise UsageError(f"unexpected label names {names}")
    tiebreak = TieBreaker(r.hv())
    (n_sub,) = r.take("<I")
    subs = []
    for _ in range(n_sub):
        sid, lab, count = r.take("<IBQ")
        nbytes = 4 * dim
        if r.pos + nbytes > len(buf):
            raise UsageError(f"truncated accumulator at byte {r.pos}")
        sums = np.frombuffer(buf, dtype="<u4", count=dim, offset=r.pos).astype(np.int64)
        r.pos += nbytes
        proto = r.hv()
        subs.append(SubClass(sid, GlobalLabel(lab), BitAccumulator(dim, sums, count), proto))
    return Model(tiebreak, subs, variant, n_levels, n_channels, n_features, seed)
