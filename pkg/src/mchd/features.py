"""Per-window, per-channel feature extraction and level discretization.

Every channel of a window yields 46 values in a fixed order::

    [mean_amplitude] + entropy bank (37) + frequency bank (8)

The names returned by :func:`feature_names` define that order for the whole
pipeline and are written into every model manifest.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.signal import welch
from numba import njit

from .errors import ConfigurationError, IngestionError, UsageError

BANDS: tuple[tuple[str, float, float], ...] = (
    ("low", 0.0, 0.5),
    ("delta", 0.5, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 12.0),
    ("beta", 12.0, 30.0),
    ("gamma", 30.0, 45.0),
)
MAX_FREQ = 45.0


@dataclass(frozen=True)
class FeatureBank:
    """Parameterization of the entropy and spectral features."""

    sampen_orders: tuple[int, ...] = (2, 3)
    apen_orders: tuple[int, ...] = (2, 3)
    tolerance_factor: float = 0.2
    perm_orders: tuple[int, ...] = (3, 4, 5, 6, 7)
    perm_delays: tuple[int, ...] = (1, 2, 3)
    hist_bins: int = 20
    renyi_alphas: tuple[float, ...] = (0.5, 2.0, 3.0, 4.0, 5.0)
    tsallis_qs: tuple[float, ...] = (0.5, 2.0, 3.0, 4.0, 5.0)
    svd_embedding: int = 3
    svd_delay: int = 1
    welch_segment_s: float = 2.0
    sef_fraction: float = 0.9

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureBank":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


DEFAULT_BANK = FeatureBank()


def entropy_names(bank: FeatureBank = DEFAULT_BANK) -> list[str]:
    names = [f"sampen_m{m}" for m in bank.sampen_orders]
    names += [f"permen_o{o}_d{d}" for o in bank.perm_orders for d in bank.perm_delays]
    names.append(f"shannon_hist{bank.hist_bins}")
    names += [f"renyi_a{a:g}" for a in bank.renyi_alphas]
    names += [f"tsallis_q{q:g}" for q in bank.tsallis_qs]
    names += ["band_shannon", "band_renyi_a2", "band_tsallis_q2"]
    names += [f"apen_m{m}" for m in bank.apen_orders]
    names += ["svd_entropy", "spectral_entropy", "fisher_info", "katz_fd"]
    return names


def frequency_names() -> list[str]:
    return [f"relpow_{b[0]}" for b in BANDS] + ["total_power", "sef90"]


def feature_names(bank: FeatureBank = DEFAULT_BANK) -> list[str]:
    return ["mean_amplitude"] + entropy_names(bank) + frequency_names()


# -- spectral -----------------------------------------------------------------


def welch_psd(x: np.ndarray, fs: float, segment_s: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed Welch PSD with 50% overlap; works along the last axis."""
    x = np.asarray(x, dtype=float)
    nperseg = min(int(round(segment_s * fs)), x.shape[-1])
    return welch(x, fs=fs, window="hann", nperseg=nperseg, noverlap=nperseg // 2, detrend=False, axis=-1)


def band_powers(freqs: np.ndarray, psd: np.ndarray) -> tuple[np.ndarray, float]:
    """Absolute power per band (last axis of ``psd``) and the total over [0, 45] Hz."""
    df = freqs[1] - freqs[0] if freqs.size > 1 else 1.0
    powers = []
    for i, (_, lo, hi) in enumerate(BANDS):
        mask = (freqs >= lo) & ((freqs < hi) if i < len(BANDS) - 1 else (freqs <= hi))
        powers.append(psd[..., mask].sum(axis=-1) * df)
    powers = np.stack(powers, axis=-1)
    return powers, powers.sum(axis=-1)


def relative_band_powers(freqs: np.ndarray, psd: np.ndarray) -> np.ndarray:
    powers, total = band_powers(freqs, psd)
    if total <= 0:
        return np.full(len(BANDS), 1.0 / len(BANDS))
    return powers / total


def frequency_bank(x: np.ndarray, fs: float, bank: FeatureBank = DEFAULT_BANK) -> np.ndarray:
    """Six relative band powers, total [0, 45] Hz power and the spectral edge frequency."""
    if fs < 2 * MAX_FREQ:
        raise ConfigurationError(f"fs={fs} cannot resolve the {MAX_FREQ} Hz band edge")
    freqs, psd = welch_psd(x, fs, bank.welch_segment_s)
    return _frequency_from_psd(freqs, psd, bank)


def _frequency_from_psd(freqs: np.ndarray, psd: np.ndarray, bank: FeatureBank) -> np.ndarray:
    powers, total = band_powers(freqs, psd)
    if total <= 0:
        return np.array([1.0 / len(BANDS)] * len(BANDS) + [0.0, 0.0])
    rel = powers / total
    keep = freqs <= MAX_FREQ
    cum = np.cumsum(psd[keep])
    sef = freqs[keep][np.searchsorted(cum, bank.sef_fraction * cum[-1])]
    return np.concatenate([rel, [total, sef]])


# -- entropies ------------------------------------------------------------------


def _embed(x: np.ndarray, dim: int, delay: int) -> np.ndarray:
    n = x.size - (dim - 1) * delay
    if n <= 0:
        return np.empty((0, dim))
    idx = np.arange(dim) * delay + np.arange(n)[:, None]
    return x[idx]


@njit(cache=True)
def _match_counts(x, r, max_len):  # pragma: no cover - compiled
    """Template-match statistics for every length ``1..max_len`` in one O(n^2) pass.

    Walks each diagonal (lag) backwards keeping the run of consecutive
    within-``r`` samples, so templates of length ``l`` match iff ``run >= l``.
    Returns per-template counts (self excluded), pairs restricted to the first
    ``n - l`` templates, and unrestricted pairs.
    """
    n = x.size
    # hist[t, i]: partners of template i whose common run, capped at max_len, is exactly t
    hist = np.zeros((max_len + 1, n), dtype=np.int64)
    cut_hist = np.zeros((max_len + 1, max_len + 1), dtype=np.int64)
    for lag in range(1, n):
        run = 0
        for i in range(n - lag - 1, -1, -1):
            j = i + lag
            if abs(x[i] - x[j]) <= r:
                run += 1
                top = run if run < max_len else max_len
                hist[top, i] += 1
                hist[top, j] += 1
                # pairs_cut[l] needs j < n - l, i.e. l < n - j
                room = n - j - 1
                cut_hist[top, room if room < max_len else max_len] += 1
            else:
                run = 0
    per_template = np.zeros((max_len + 1, n), dtype=np.int64)
    pairs_all = np.zeros(max_len + 1, dtype=np.int64)
    pairs_cut = np.zeros(max_len + 1, dtype=np.int64)
    for length in range(max_len, 0, -1):
        for t in range(length, max_len + 1):
            per_template[length] += hist[t]
            for room in range(length, max_len + 1):
                pairs_cut[length] += cut_hist[t, room]
        pairs_all[length] = per_template[length].sum() // 2
    return per_template, pairs_cut, pairs_all


def _regularity_stats(x: np.ndarray, r: float, max_len: int):
    return _match_counts(np.ascontiguousarray(x, dtype=np.float64), float(r), int(max_len))


def sample_entropy(x: np.ndarray, m: int, r: float, _stats=None) -> float:
    """SampEn with Chebyshev tolerance ``r``; both template lengths use N-m vectors.

    Returns 0 when ``r == 0`` or no length-m matches exist; if no length-(m+1)
    match exists the count is floored at one so the value stays finite.
    """
    x = np.asarray(x, dtype=float)
    if r <= 0 or x.size <= m + 1:
        return 0.0
    _, pairs_cut, pairs_all = _stats if _stats is not None else _regularity_stats(x, r, m + 1)
    b, a = pairs_cut[m], pairs_all[m + 1]
    if b <= 0:
        return 0.0
    return float(np.log(b) - np.log(max(a, 1)))


def approximate_entropy(x: np.ndarray, m: int, r: float, _stats=None) -> float:
    """ApEn (self-matches included), clipped at zero."""
    x = np.asarray(x, dtype=float)
    if r <= 0 or x.size <= m + 1:
        return 0.0
    per_template = (_stats if _stats is not None else _regularity_stats(x, r, m + 1))[0]

    def phi(length: int) -> float:
        n_templates = x.size - length + 1
        counts = per_template[length, :n_templates] + 1
        return float(np.mean(np.log(counts / n_templates)))

    return max(0.0, phi(m) - phi(m + 1))


@njit(cache=True)
def _ordinal_codes(x, order, delay):  # pragma: no cover - compiled
    """Lehmer code of each embedded vector; strict comparisons rank ties by position."""
    n = x.size - (order - 1) * delay
    codes = np.empty(max(n, 0), dtype=np.int64)
    for t in range(n):
        code = 0
        for i in range(order):
            smaller = 0
            xi = x[t + i * delay]
            for j in range(i + 1, order):
                if x[t + j * delay] < xi:
                    smaller += 1
            code = code * (order - i) + smaller
        codes[t] = code
    return codes


def permutation_entropy(x: np.ndarray, order: int, delay: int) -> float:
    """Shannon entropy (bits) of ordinal patterns; equal values rank by position."""
    codes = _ordinal_codes(np.ascontiguousarray(x, dtype=np.float64), int(order), int(delay))
    if codes.size == 0:
        return 0.0
    counts = np.bincount(codes)
    return shannon(counts / codes.size)


def shannon(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def renyi(p: np.ndarray, alpha: float) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    if alpha == 1:
        return shannon(p)
    return float(max(0.0, np.log2(np.sum(p**alpha)) / (1 - alpha)))


def tsallis(p: np.ndarray, q: float) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    if q == 1:
        return shannon(p) * np.log(2)
    return float(max(0.0, (1 - np.sum(p**q)) / (q - 1)))


def histogram_distribution(x: np.ndarray, bins: int) -> np.ndarray:
    counts, _ = np.histogram(x, bins=bins)
    return counts / max(counts.sum(), 1)


def _normalized_singular_values(x: np.ndarray, emb_dim: int, delay: int) -> np.ndarray:
    emb = _embed(np.asarray(x, dtype=float), emb_dim, delay)
    if emb.shape[0] == 0:
        return np.zeros(emb_dim)
    s = np.linalg.svd(emb, compute_uv=False)
    total = s.sum()
    return s / total if total > 0 else np.zeros_like(s)


def svd_entropy(x: np.ndarray, emb_dim: int = 3, delay: int = 1) -> float:
    return shannon(_normalized_singular_values(x, emb_dim, delay))


def fisher_information(x: np.ndarray, emb_dim: int = 3, delay: int = 1) -> float:
    w = _normalized_singular_values(x, emb_dim, delay)
    num = np.diff(w) ** 2
    den = w[:-1]
    ok = den > 0
    return float(np.sum(num[ok] / den[ok]))


def katz_fd(x: np.ndarray) -> float:
    """Katz fractal dimension on the amplitude path; degenerate paths give 0."""
    x = np.asarray(x, dtype=float)
    steps = np.abs(np.diff(x))
    length = steps.sum()
    if length <= 0:
        return 0.0
    ln = np.log10(x.size - 1)
    d = np.max(np.abs(x - x[0]))
    den = ln + np.log10(d / length)
    return float(ln / den) if den > 1e-12 else 0.0


def spectral_entropy(psd: np.ndarray) -> float:
    """Shannon entropy of the PSD bins normalized by its maximum."""
    psd = np.asarray(psd, dtype=float)
    total = psd.sum()
    if total <= 0 or psd.size < 2:
        return 0.0
    return shannon(psd / total) / np.log2(psd.size)


def entropy_bank(
    x: np.ndarray,
    fs: float = 256.0,
    bank: FeatureBank = DEFAULT_BANK,
    psd: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """The 37 entropy-family values of one channel, ordered as :func:`entropy_names`."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise UsageError("empty window")
    r = bank.tolerance_factor * float(np.std(x))
    max_len = max(bank.sampen_orders + bank.apen_orders) + 1
    stats = _regularity_stats(x, r, max_len) if r > 0 else None
    out = [sample_entropy(x, m, r, stats) for m in bank.sampen_orders]
    out += [permutation_entropy(x, o, d) for o in bank.perm_orders for d in bank.perm_delays]
    p = histogram_distribution(x, bank.hist_bins)
    out.append(shannon(p))
    out += [renyi(p, a) for a in bank.renyi_alphas]
    out += [tsallis(p, q) for q in bank.tsallis_qs]
    freqs, spec = psd if psd is not None else welch_psd(x, fs, bank.welch_segment_s)
    rel = relative_band_powers(freqs, spec)
    out += [shannon(rel), renyi(rel, 2.0), tsallis(rel, 2.0)]
    out += [approximate_entropy(x, m, r, stats) for m in bank.apen_orders]
    out.append(svd_entropy(x, bank.svd_embedding, bank.svd_delay))
    out.append(spectral_entropy(spec[freqs <= MAX_FREQ]))
    out.append(fisher_information(x, bank.svd_embedding, bank.svd_delay))
    out.append(katz_fd(x))
    return np.asarray(out, dtype=float)


def channel_features(x: np.ndarray, fs: float, bank: FeatureBank = DEFAULT_BANK) -> np.ndarray:
    freqs, spec = welch_psd(x, fs, bank.welch_segment_s)
    return np.concatenate(
        [
            [float(np.mean(np.abs(x)))],
            entropy_bank(x, fs, bank, psd=(freqs, spec)),
            _frequency_from_psd(freqs, spec, bank),
        ]
    )


def extract_window_features(
    window: np.ndarray,
    fs: float,
    wlen: float | None = None,
    bank: FeatureBank = DEFAULT_BANK,
) -> np.ndarray:
    """Feature matrix ``(n_channels, 46)`` for one multi-channel window."""
    window = np.atleast_2d(np.asarray(window, dtype=float))
    if fs < 2 * MAX_FREQ:
        raise ConfigurationError(f"fs={fs} cannot resolve the {MAX_FREQ} Hz band edge")
    if wlen is not None and window.shape[1] < int(round(wlen * fs)):
        raise IngestionError(
            f"window has {window.shape[1]} samples, expected {int(round(wlen * fs))}"
        )
    if not np.all(np.isfinite(window)):
        raise IngestionError("window contains non-finite samples")
    return np.stack([channel_features(ch, fs, bank) for ch in window])


def window_starts(n_samples: int, fs: float, wlen: float, wstep: float) -> np.ndarray:
    """Sample offsets of every full window; ``floor((T - wlen) / wstep) + 1`` of them."""
    span = int(round(wlen * fs))
    step = int(round(wstep * fs))
    if n_samples < span:
        return np.empty(0, dtype=np.int64)
    return np.arange(0, n_samples - span + 1, step, dtype=np.int64)


def extract_features(
    signal: np.ndarray,
    fs: float,
    wlen: float = 8.0,
    wstep: float = 1.0,
    bank: FeatureBank = DEFAULT_BANK,
) -> np.ndarray:
    """Features of every sliding window, shape ``(n_windows, n_channels, 46)``."""
    signal = np.atleast_2d(np.asarray(signal, dtype=float))
    span = int(round(wlen * fs))
    starts = window_starts(signal.shape[1], fs, wlen, wstep)
    n_feat = len(feature_names(bank))
    out = np.empty((starts.size, signal.shape[0], n_feat))
    for i, s in enumerate(starts):
        out[i] = extract_window_features(signal[:, s : s + span], fs, wlen, bank)
    return out


# -- calibration / discretization --------------------------------------------------


@dataclass
class Calibration:
    """Per-feature clamp bounds from the 1st/99th training percentiles."""

    lower: np.ndarray
    upper: np.ndarray
    percentiles: tuple[float, float] = (1.0, 99.0)

    def to_dict(self) -> dict:
        return {
            "lower": [float(v) for v in self.lower],
            "upper": [float(v) for v in self.upper],
            "percentiles": list(self.percentiles),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Calibration":
        return cls(np.asarray(d["lower"], float), np.asarray(d["upper"], float), tuple(d["percentiles"]))


def fit_calibration(
    train: Sequence[np.ndarray] | np.ndarray, percentiles: tuple[float, float] = (1.0, 99.0)
) -> Calibration:
    """Pool all windows and channels of ``train`` (feature matrices) per feature."""
    if len(train) == 0:
        raise UsageError("calibration needs at least one feature matrix")
    if isinstance(train, np.ndarray):
        pooled = train.reshape(-1, train.shape[-1])
    else:
        pooled = np.concatenate([np.asarray(fm).reshape(-1, np.asarray(fm).shape[-1]) for fm in train])
    lo, hi = np.percentile(pooled, percentiles, axis=0)
    return Calibration(lo, hi, tuple(percentiles))


def discretize(fm: np.ndarray, cal: Calibration, n_levels: int) -> np.ndarray:
    """Map values to integer levels in ``[0, n_levels - 1]``; constant features go to the middle."""
    fm = np.asarray(fm, dtype=float)
    span = cal.upper - cal.lower
    degenerate = ~(span > 0)
    safe = np.where(degenerate, 1.0, span)
    levels = np.floor((fm - cal.lower) / safe * n_levels)
    levels = np.clip(levels, 0, n_levels - 1)
    levels = np.where(degenerate, n_levels // 2, levels)
    return levels.astype(np.int64)
