"""Input matrices for the classifiers."""

from __future__ import annotations

import math

import numpy as np

from ..arith import PrimeTable
from ..curve import ApRecord
from ..errors import ConductorExceedsMax, InsufficientApData


def _covered_ap(rec: ApRecord, table: PrimeTable) -> np.ndarray:
    n = table.pi
    if len(rec.primes) < n or not np.array_equal(rec.primes[:n], table.primes):
        raise InsufficientApData(f"{rec.curve_id}: a_p data do not cover p < {table.bound}")
    return rec.ap[:n]


def _normalized_ap(rec: ApRecord, table: PrimeTable) -> np.ndarray:
    return _covered_ap(rec, table) / np.sqrt(table.primes.astype(np.float64))


def sweep_row(n: int) -> np.ndarray:
    """r_k = -1 + 2k/n for k = 1..n."""
    return -1 + 2 * np.arange(1, n + 1, dtype=np.float64) / n


def conductor_feature(conductor: int, N_max: int) -> float:
    if conductor > N_max:
        raise ConductorExceedsMax(f"conductor {conductor} exceeds N_max = {N_max}")
    return math.log(conductor) / math.log(N_max)


def build_feature_matrix(conductor: int, rec: ApRecord, table: PrimeTable, N_max: int) -> np.ndarray:
    """3 x pi(N) matrix: a_p/sqrt(p), log N_E / log N_max, and a linear sweep."""
    m = np.empty((3, table.pi), dtype=np.float64)
    m[0] = _normalized_ap(rec, table)
    m[1] = conductor_feature(conductor, N_max)
    m[2] = sweep_row(table.pi)
    return m


class ApFeatures:
    """Compact store of a_p/sqrt(p) rows; full matrices are assembled per batch.

    ``values`` holds one row per curve, divided by ``scale`` (if given) on use,
    so integer a_p can be kept as they are. Subsets share the store and keep
    their own index into it.
    """

    def __init__(self, values: np.ndarray, log_cond: np.ndarray, labels: np.ndarray,
                 rows=None, scale=None):
        self.values = np.asarray(values)
        self.scale = scale
        self.rows = np.arange(len(self.values)) if rows is None else np.asarray(rows, dtype=np.int64)
        self.log_cond = np.asarray(log_cond, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.sweep = sweep_row(self.values.shape[1])

    @classmethod
    def from_records(cls, conductors, aps, table: PrimeTable, N_max: int, labels):
        log_cond = np.array([conductor_feature(int(c), N_max) for c in conductors])
        # |a_p| <= 2 sqrt(p) fits int16 below p = 2^28
        dtype = np.int16 if table.bound <= 1 << 28 else np.int64
        values = np.empty((len(log_cond), table.pi), dtype=dtype)
        for i, r in enumerate(aps):
            values[i] = _covered_ap(r, table)
        return cls(values, log_cond, labels, scale=np.sqrt(table.primes.astype(np.float64)))

    def _normalized(self, rows):
        out = self.values[rows].astype(np.float64)
        if self.scale is not None:
            out /= self.scale
        return out

    @property
    def ap_norm(self) -> np.ndarray:
        return self._normalized(self.rows)

    @property
    def input_shape(self):
        return (3, self.values.shape[1])

    def __len__(self):
        return len(self.labels)

    def subset(self, idx) -> ApFeatures:
        return ApFeatures(self.values, self.log_cond[idx], self.labels[idx], self.rows[idx],
                          self.scale)

    def batch(self, idx):
        n, L = len(idx), self.values.shape[1]
        x = np.empty((n, 3, L))
        x[:, 0] = self._normalized(self.rows[idx])
        x[:, 1] = self.log_cond[idx, None]
        x[:, 2] = self.sweep
        return x, self.labels[idx]


class TabularFeatures:
    """Plain (n, F) feature table, e.g. one or more sums plus the conductor feature."""

    def __init__(self, x: np.ndarray, labels: np.ndarray):
        self.x = np.asarray(x, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)

    @property
    def input_shape(self):
        return (self.x.shape[1],)

    def __len__(self):
        return len(self.labels)

    def subset(self, idx) -> TabularFeatures:
        return TabularFeatures(self.x[idx], self.labels[idx])

    def batch(self, idx):
        return self.x[idx], self.labels[idx]
