"""Train/validation/test splits, binary relabelling and class weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptySplit, MissingClass

LMFDB_HIGH_RANK = 4
CUSTOM_HIGH_RANK = 8


@dataclass(frozen=True)
class SplitSpec:
    mode: str = "uniform"  # or "top_range"
    ratio: float = 4.0  # train : val
    test_fraction: float = 0.2
    conductor_cut: tuple[int, int] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("uniform", "top_range"):
            raise ValueError(f"unknown split mode {self.mode!r}")
        if self.mode == "top_range" and self.conductor_cut is None:
            raise ValueError("top_range split needs conductor_cut")


def _train_val(idx: np.ndarray, ratio: float):
    n_val = int(round(len(idx) / (ratio + 1)))
    return idx[n_val:], idx[:n_val]


def split_indices(conductors, spec: SplitSpec):
    """Index arrays (train, val, test) into ``conductors``."""
    conductors = np.asarray([int(c) for c in conductors], dtype=object)
    n = len(conductors)
    if n == 0:
        raise EmptySplit("no records to split")
    rng = np.random.default_rng(spec.seed)
    if spec.mode == "uniform":
        perm = rng.permutation(n)
        n_test = int(round(spec.test_fraction * n))
        test = np.sort(perm[:n_test])
        train, val = _train_val(perm[n_test:], spec.ratio)
    else:
        lo, hi = spec.conductor_cut
        in_test = np.array([lo <= c < hi for c in conductors], dtype=bool)
        below = np.array([c < lo for c in conductors], dtype=bool)
        test = np.flatnonzero(in_test)
        rest = np.flatnonzero(below)
        train, val = _train_val(rest[rng.permutation(len(rest))], spec.ratio)
    train, val = np.sort(train), np.sort(val)
    for name, part in (("train", train), ("validation", val), ("test", test)):
        if len(part) == 0:
            raise EmptySplit(f"{name} split is empty")
    return train, val, test


def split_dataset(records, spec: SplitSpec):
    """(train, val, test) lists of records; uses each record's conductor."""
    records = list(records)
    tr, va, te = split_indices([r.conductor for r in records], spec)
    return [records[i] for i in tr], [records[i] for i in va], [records[i] for i in te]


def merge_binary_labels(ranks, high_rank_threshold: int) -> np.ndarray:
    """1 for rank >= threshold, else 0. Accepts ranks or records with .rank."""
    r = np.array([getattr(x, "rank", x) for x in ranks], dtype=np.int64)
    return (r >= high_rank_threshold).astype(np.int64)


def class_weights(labels, num_classes: int | None = None) -> np.ndarray:
    """total / (K * count_c); the sample-weighted mean of these is 1."""
    labels = np.asarray(labels, dtype=np.int64)
    if num_classes is None:
        num_classes = max(2, int(labels.max()) + 1 if len(labels) else 2)
    counts = np.bincount(labels, minlength=num_classes)[:num_classes]
    missing = np.flatnonzero(counts == 0)
    if len(missing):
        raise MissingClass(f"classes {missing.tolist()} absent from training labels")
    return len(labels) / (num_classes * counts.astype(np.float64))
