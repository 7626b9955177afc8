"""Multi-centroid binary hyperdimensional classification of EEG windows."""
from .encoder import EncoderContext, encode_window, encode_windows
from .hdcore import (
    BitAccumulator,
    Hypervector,
    TieBreaker,
    accumulate,
    binarize,
    bind,
    bundle,
    generate_chfeat_memory,
    generate_level_memory,
    new_random_hv,
    normalized_hamming,
)
from .inference import classify_window, smooth_labels
from .metrics import ScoreSet, aggregate_subject, duration_scores, episode_scores, f1de_gmean
from .reduction import ReductionConfig, reduce
from .training import GlobalLabel, Model, nearest_subclass, train_multicentroid, train_two_class

__version__ = "0.1.0"

__all__ = [
    "BitAccumulator",
    "EncoderContext",
    "GlobalLabel",
    "Hypervector",
    "Model",
    "ReductionConfig",
    "ScoreSet",
    "TieBreaker",
    "accumulate",
    "aggregate_subject",
    "binarize",
    "bind",
    "bundle",
    "classify_window",
    "duration_scores",
    "encode_window",
    "encode_windows",
    "episode_scores",
    "f1de_gmean",
    "generate_chfeat_memory",
    "generate_level_memory",
    "nearest_subclass",
    "new_random_hv",
    "normalized_hamming",
    "reduce",
    "smooth_labels",
    "train_multicentroid",
    "train_two_class",
]
