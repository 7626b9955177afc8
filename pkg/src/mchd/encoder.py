"""Window encoding: bind each (channel, feature) slot to its level vector, then bundle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hdcore
from .errors import UsageError
from .hdcore import ChFeatMemory, Hypervector, LevelMemory, TieBreaker


@dataclass(frozen=True, eq=False)
class EncoderContext:
    level_memory: LevelMemory
    chfeat_memory: ChFeatMemory
    tiebreak: TieBreaker
    seed: int | None = None

    def __post_init__(self) -> None:
        dims = {self.level_memory.dim, self.chfeat_memory.dim, self.tiebreak.dim}
        if len(dims) != 1:
            raise UsageError(f"inconsistent memory dimensions: {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.level_memory.dim

    @property
    def n_levels(self) -> int:
        return self.level_memory.n_levels

    @property
    def shape(self) -> tuple[int, int]:
        return self.chfeat_memory.n_channels, self.chfeat_memory.n_features

    @classmethod
    def generate(
        cls,
        n_channels: int,
        n_features: int,
        dim: int = hdcore.DEFAULT_DIM,
        n_levels: int = hdcore.DEFAULT_LEVELS,
        seed: int = 0,
    ) -> "EncoderContext":
        """Draw level memory, channel-feature memory and tiebreaker (in that order) from ``seed``."""
        rng = np.random.default_rng(seed)
        levels = hdcore.generate_level_memory(dim, n_levels, rng)
        chfeat = hdcore.generate_chfeat_memory(n_channels, n_features, dim, rng)
        tiebreak = TieBreaker.generate(dim, rng)
        return cls(levels, chfeat, tiebreak, seed)


def _check_levels(levels: np.ndarray, ctx: EncoderContext) -> np.ndarray:
    levels = np.asarray(levels)
    if levels.shape[-2:] != ctx.shape:
        raise UsageError(f"levels shape {levels.shape[-2:]} does not match memory {ctx.shape}")
    if levels.size and (levels.min() < 0 or levels.max() >= ctx.n_levels):
        raise UsageError(f"level outside [0, {ctx.n_levels - 1}]")
    return levels.astype(np.int64)


def encode_window(levels: np.ndarray, ctx: EncoderContext) -> Hypervector:
    """Encode one ``(n_channels, n_features)`` matrix of discretized levels."""
    return Hypervector(ctx.dim, encode_windows(np.asarray(levels)[None], ctx)[0])


def encode_windows(levels: np.ndarray, ctx: EncoderContext, batch: int = 256) -> np.ndarray:
    """Encode a stack of level matrices ``(n, n_channels, n_features)`` into packed words.

    Level ``v`` equals level 0 with bit blocks ``0..v-1`` complemented, so the
    one-count at a position in block ``b`` is the level-0 count corrected by
    every slot whose level exceeds ``b``. That turns the 828-way bundle into
    one matrix product per block.
    """
    levels = _check_levels(levels, ctx)
    n = levels.shape[0]
    dim, d = ctx.dim, ctx.level_memory.block
    n_blocks = ctx.n_levels - 1
    flat = levels.reshape(n, -1)
    k = flat.shape[1]

    base = hdcore.unpack_words(
        ctx.chfeat_memory.words.reshape(k, -1) ^ ctx.level_memory.words[0][None, :], dim
    )
    base_count = base.sum(axis=0, dtype=np.int64)
    flip_gain = (1 - 2 * base.astype(np.float32))  # +1 where flipping adds a one
    tb = ctx.tiebreak.hv.to_bits().astype(bool)

    out = np.empty((n, dim // hdcore.WORD_BITS), dtype=np.uint64)
    for s in range(0, n, batch):
        chunk = flat[s : s + batch]
        counts = np.broadcast_to(base_count, (chunk.shape[0], dim)).copy()
        for b in range(n_blocks):
            active = (chunk > b).astype(np.float32)
            sl = slice(b * d, (b + 1) * d)
            counts[:, sl] += np.rint(active @ flip_gain[:, sl]).astype(np.int64)
        twice = 2 * counts
        bits = (twice > k) | ((twice == k) & tb)
        out[s : s + batch] = hdcore.pack_bits(bits.astype(np.uint8))
    return out


def encode_window_reference(levels: np.ndarray, ctx: EncoderContext) -> Hypervector:
    """Literal bind-then-bundle encoding; slow, kept as a cross-check."""
    levels = _check_levels(levels, ctx)
    bound = [
        hdcore.bind(ctx.chfeat_memory[c, f], ctx.level_memory[int(levels[c, f])])
        for c in range(levels.shape[0])
        for f in range(levels.shape[1])
    ]
    return hdcore.bundle(bound, ctx.tiebreak)
