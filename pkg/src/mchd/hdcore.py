"""Packed binary hypervector algebra.

Vectors are stored as little-endian ``uint64`` words; bit ``i`` lives in word
``i // 64`` at position ``i % 64``. Batches of vectors are plain 2-D word
arrays of shape ``(n, dim // 64)`` so that distance scans stay vectorized.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, UsageError

WORD_BITS = 64
DEFAULT_DIM = 10240
DEFAULT_LEVELS = 20


def check_dim(dim: int) -> int:
    if not isinstance(dim, (int, np.integer)) or dim < WORD_BITS or dim % WORD_BITS:
        raise ConfigurationError(f"dim must be a positive multiple of {WORD_BITS}, got {dim!r}")
    return int(dim)


def n_words(dim: int) -> int:
    return check_dim(dim) // WORD_BITS


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 array along its last axis into uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    dim = bits.shape[-1]
    check_dim(dim)
    packed = np.packbits(bits, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_words(words: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns uint8 0/1 values."""
    words = np.ascontiguousarray(np.asarray(words, dtype="<u8"))
    bits = np.unpackbits(words.view(np.uint8), axis=-1, bitorder="little")
    if dim is not None:
        bits = bits[..., :dim]
    return bits


def popcount(words: np.ndarray) -> np.ndarray:
    """Number of set bits, summed over the last (word) axis."""
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


def _frozen(words: np.ndarray) -> np.ndarray:
    arr = np.array(words, dtype=np.uint64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Hypervector:
    """Immutable packed binary vector of ``dim`` bits."""

    dim: int
    words: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        check_dim(self.dim)
        words = np.asarray(self.words)
        if words.shape != (self.dim // WORD_BITS,):
            raise UsageError(f"expected {self.dim // WORD_BITS} words, got shape {words.shape}")
        object.__setattr__(self, "words", _frozen(words))

    @classmethod
    def from_bits(cls, bits: Sequence[int] | np.ndarray) -> "Hypervector":
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 1 or np.any(bits > 1):
            raise UsageError("bits must be a flat 0/1 sequence")
        return cls(bits.size, pack_bits(bits))

    @classmethod
    def zeros(cls, dim: int) -> "Hypervector":
        return cls(dim, np.zeros(n_words(dim), dtype=np.uint64))

    def to_bits(self) -> np.ndarray:
        return unpack_words(self.words, self.dim)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.dim:
            raise IndexError(i)
        return int((int(self.words[i // WORD_BITS]) >> (i % WORD_BITS)) & 1)

    def __invert__(self) -> "Hypervector":
        return Hypervector(self.dim, ~self.words)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hypervector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.dim, self.words.tobytes()))

    def to_bytes(self) -> bytes:
        """``uint32`` dim followed by the little-endian 64-bit words."""
        return struct.pack("<I", self.dim) + self.words.astype("<u8").tobytes()

    @classmethod
    def from_bytes(cls, buf: bytes, offset: int = 0) -> tuple["Hypervector", int]:
        """Decode one vector at ``offset``; returns it and the offset just past it."""
        if len(buf) < offset + 4:
            raise UsageError(f"truncated hypervector header at byte {offset}")
        (dim,) = struct.unpack_from("<I", buf, offset)
        nbytes = check_dim(dim) // 8
        start = offset + 4
        if len(buf) < start + nbytes:
            raise UsageError(f"truncated hypervector payload at byte {start}")
        words = np.frombuffer(buf, dtype="<u8", count=nbytes // 8, offset=start)
        return cls(dim, words.astype(np.uint64)), start + nbytes


def _same_dim(a: Hypervector, b: Hypervector) -> None:
    if a.dim != b.dim:
        raise UsageError(f"dimension mismatch: {a.dim} vs {b.dim}")


def new_random_hv(dim: int, rng: np.random.Generator) -> Hypervector:
    """I.i.d. fair bits drawn from ``rng``."""
    nw = n_words(dim)
    return Hypervector(dim, rng.integers(0, 2**64, size=nw, dtype=np.uint64, endpoint=False))


def random_words(shape: tuple[int, ...], dim: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2**64, size=(*shape, n_words(dim)), dtype=np.uint64)


def bind(a: Hypervector, b: Hypervector) -> Hypervector:
    _same_dim(a, b)
    return Hypervector(a.dim, a.words ^ b.words)


def hamming(a: Hypervector, b: Hypervector) -> int:
    _same_dim(a, b)
    return int(popcount(a.words ^ b.words))


def normalized_hamming(a: Hypervector, b: Hypervector) -> float:
    return hamming(a, b) / a.dim


def hamming_matrix(queries: np.ndarray, refs: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Pairwise bit distances between two word matrices, shape ``(len(queries), len(refs))``."""
    queries = np.atleast_2d(queries)
    refs = np.atleast_2d(refs)
    if queries.shape[1] != refs.shape[1]:
        raise UsageError("dimension mismatch between query and reference words")
    out = np.empty((queries.shape[0], refs.shape[0]), dtype=np.int64)
    for s in range(0, queries.shape[0], chunk):
        block = queries[s : s + chunk, None, :] ^ refs[None, :, :]
        out[s : s + chunk] = popcount(block)
    return out


@dataclass(frozen=True, eq=False)
class TieBreaker:
    """Fixed random vector deciding majority-vote ties position by position."""

    hv: Hypervector

    @property
    def dim(self) -> int:
        return self.hv.dim

    @classmethod
    def generate(cls, dim: int, rng: np.random.Generator) -> "TieBreaker":
        return cls(new_random_hv(dim, rng))


def majority_words(sums: np.ndarray, n: int | np.ndarray, tiebreak: TieBreaker) -> np.ndarray:
    """Binarize per-bit counts: 1 where ``2*sums > n``, tiebreak bit where equal.

    ``sums`` may be 1-D (one vector) or 2-D with ``n`` broadcast per row.
    """
    sums = np.asarray(sums)
    twice = 2 * sums.astype(np.int64)
    n = np.asarray(n, dtype=np.int64)
    if sums.ndim == 2 and n.ndim == 1:
        n = n[:, None]
    tb = tiebreak.hv.to_bits().astype(bool)
    bits = (twice > n) | ((twice == n) & tb)
    return pack_bits(bits.astype(np.uint8))


def bundle(vs: Sequence[Hypervector], tiebreak: TieBreaker) -> Hypervector:
    """Bit-wise majority over ``vs``; exact ties take the tiebreak bit."""
    if len(vs) == 0:
        raise UsageError("cannot bundle an empty list")
    dim = vs[0].dim
    for v in vs:
        _same_dim(vs[0], v)
    _same_dim(vs[0], tiebreak.hv)
    sums = unpack_words(np.stack([v.words for v in vs]), dim).sum(axis=0, dtype=np.int64)
    return Hypervector(dim, majority_words(sums, len(vs), tiebreak))


class BitAccumulator:
    """Per-bit counters of how many absorbed vectors had a 1 there."""

    __slots__ = ("dim", "sums", "n")

    def __init__(self, dim: int, sums: np.ndarray | None = None, n: int = 0):
        self.dim = check_dim(dim)
        if sums is None:
            sums = np.zeros(dim, dtype=np.int64)
        self.sums = np.asarray(sums, dtype=np.int64).copy()
        self.n = int(n)
        if self.sums.shape != (dim,):
            raise UsageError(f"sums must have shape ({dim},)")

    def add(self, hv: Hypervector | np.ndarray) -> None:
        """In-place absorption of one vector (or its words)."""
        words = hv.words if isinstance(hv, Hypervector) else np.asarray(hv)
        if words.shape != (self.dim // WORD_BITS,):
            raise UsageError("dimension mismatch in accumulate")
        self.sums += unpack_words(words, self.dim)
        self.n += 1

    def merge(self, other: "BitAccumulator") -> None:
        if other.dim != self.dim:
            raise UsageError("dimension mismatch in merge")
        self.sums += other.sums
        self.n += other.n

    def copy(self) -> "BitAccumulator":
        return BitAccumulator(self.dim, self.sums, self.n)

    def __repr__(self) -> str:
        return f"BitAccumulator(dim={self.dim}, n={self.n})"


def accumulate(acc: BitAccumulator, hv: Hypervector) -> BitAccumulator:
    out = acc.copy()
    out.add(hv)
    return out


def binarize(acc: BitAccumulator, tiebreak: TieBreaker) -> Hypervector:
    if acc.n == 0:
        raise UsageError("cannot binarize an empty accumulator")
    if tiebreak.dim != acc.dim:
        raise UsageError("tiebreak dimension mismatch")
    return Hypervector(acc.dim, majority_words(acc.sums, acc.n, tiebreak))


@dataclass(frozen=True, eq=False)
class LevelMemory:
    """Ordered value vectors; neighbours differ by one complemented block of ``block`` bits."""

    dim: int
    n_levels: int
    block: int
    words: np.ndarray = field(repr=False)  # (n_levels, dim // 64)

    def __len__(self) -> int:
        return self.n_levels

    def __getitem__(self, k: int) -> Hypervector:
        if not 0 <= k < self.n_levels:
            raise UsageError(f"level {k} outside [0, {self.n_levels - 1}]")
        return Hypervector(self.dim, self.words[k])

    @property
    def vectors(self) -> list[Hypervector]:
        return [self[k] for k in range(self.n_levels)]


def generate_level_memory(dim: int, n_levels: int, rng: np.random.Generator) -> LevelMemory:
    check_dim(dim)
    if n_levels < 2:
        raise ConfigurationError(f"need at least 2 levels, got {n_levels}")
    if dim < 2 * (n_levels - 1):
        raise ConfigurationError(f"{n_levels} levels do not fit in dim={dim}")
    block = dim // (2 * (n_levels - 1))
    bits = new_random_hv(dim, rng).to_bits()
    rows = [bits.copy()]
    for k in range(1, n_levels):
        bits = bits.copy()
        bits[(k - 1) * block : k * block] ^= 1
        rows.append(bits)
    words = pack_bits(np.stack(rows))
    words.setflags(write=False)
    return LevelMemory(dim, n_levels, block, words)


@dataclass(frozen=True, eq=False)
class ChFeatMemory:
    """Independent random vectors, one per (channel, feature) slot."""

    dim: int
    n_channels: int
    n_features: int
    words: np.ndarray = field(repr=False)  # (n_channels, n_features, dim // 64)

    def __getitem__(self, idx: tuple[int, int]) -> Hypervector:
        c, f = idx
        return Hypervector(self.dim, self.words[c, f])

    def __len__(self) -> int:
        return self.n_channels * self.n_features


def generate_chfeat_memory(
    n_channels: int, n_features: int, dim: int, rng: np.random.Generator
) -> ChFeatMemory:
    check_dim(dim)
    if n_channels < 1 or n_features < 1:
        raise ConfigurationError("need at least one channel and one feature")
    words = random_words((n_channels, n_features), dim, rng)
    words.setflags(write=False)
    return ChFeatMemory(dim, n_channels, n_features, words)


def iter_words(vs: Iterable[Hypervector]) -> np.ndarray:
    return np.stack([v.words for v in vs])
