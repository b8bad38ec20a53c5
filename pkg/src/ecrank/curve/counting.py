"""a_p by character sums, with per-prime residue tables shared over a batch."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numba
import numpy as np

from ..arith import PrimeTable, is_probable_prime, next_prime
from ..errors import BadReductionPrime
from .local import ReductionType, local_data
from .weierstrass import WeierstrassCurve

log = logging.getLogger(__name__)

# curves per kernel call; bounds the (curves x primes x 3) coefficient block
CHUNK = 64
_I62 = 1 << 62


@dataclass(frozen=True)
class ApRecord:
    """a_p and reduction type for every prime p < bound."""

    curve_id: str
    bound: int
    primes: np.ndarray
    ap: np.ndarray
    reduction: np.ndarray  # ReductionType codes, uint8

    def __len__(self):
        return len(self.primes)

    def covers(self, x: float) -> bool:
        """True when every prime <= x is present."""
        if x < self.bound:
            return True
        return next_prime(self.bound) > x

    def restrict(self, bound: int) -> ApRecord:
        k = int(np.searchsorted(self.primes, bound))
        return ApRecord(self.curve_id, min(bound, self.bound), self.primes[:k],
                        self.ap[:k], self.reduction[:k])

    def ap_of(self, p: int) -> int:
        i = int(np.searchsorted(self.primes, p))
        if i == len(self.primes) or self.primes[i] != p:
            raise KeyError(p)
        return int(self.ap[i])

    def good_mask(self) -> np.ndarray:
        return self.reduction == ReductionType.Good


# lanes advanced together in the inner loop; independent lanes hide latency
LANES = 16
# residue-table entries built per group of primes
CHI_BUDGET = 1 << 22


@numba.njit(cache=True)
def _character_sums(primes, coef, skip, out):
    # out[i, j] = -sum_x chi_p(x^3 + A x^2 + B x + C), (A, B, C) = coef[i, j] in [0, p).
    # The cubic is stepped by finite differences (third difference 6), so the
    # inner loop is additions and one table lookup. Work is split into lanes
    # (curve, prime, x-segment) run LANES at a time; lanes in a block share a
    # prime where possible, and independent lanes hide the add latency.
    n_c, n_p = skip.shape
    nseg = max(1, LANES // n_c)
    chi = np.empty(max(min(CHI_BUDGET, primes.sum()), primes.max() + 1), np.int8)
    off = np.empty(n_p, np.int64)
    n_max = n_c * n_p * nseg
    lane_i = np.empty(n_max, np.int64)
    lane_j = np.empty(n_max, np.int64)
    lane_x = np.empty(n_max, np.int64)
    lane_n = np.empty(n_max, np.int64)
    f = np.empty(LANES, np.int64)
    d1 = np.empty(LANES, np.int64)
    d2 = np.empty(LANES, np.int64)
    six = np.empty(LANES, np.int64)
    pp = np.empty(LANES, np.int64)
    ln = np.empty(LANES, np.int64)
    base = np.empty(LANES, np.int64)
    s = np.empty(LANES, np.int64)
    out[:, :] = 0
    g0 = 0
    while g0 < n_p:
        # group of primes whose tables fit in the buffer
        g1 = g0
        used = 0
        while g1 < n_p and (g1 == g0 or used + primes[g1] <= chi.shape[0]):
            off[g1] = used
            used += primes[g1]
            g1 += 1
        for j in range(g0, g1):
            p = primes[j]
            o = off[j]
            for x in range(p):
                chi[o + x] = -1
            chi[o] = 0
            for x in range(1, (p + 1) // 2):
                chi[o + x * x % p] = 1
        n_l = 0
        for j in range(g0, g1):
            p = primes[j]
            if p == 2:
                continue
            k = min(nseg, p)
            for i in range(n_c):
                if skip[i, j]:
                    continue
                for q in range(k):
                    lane_i[n_l] = i
                    lane_j[n_l] = j
                    lane_x[n_l] = q * p // k
                    lane_n[n_l] = (q + 1) * p // k - q * p // k
                    n_l += 1
        for b0 in range(0, n_l, LANES):
            w = min(LANES, n_l - b0)
            steps = 0
            for k in range(w):
                i = lane_i[b0 + k]
                j = lane_j[b0 + k]
                p = primes[j]
                A = coef[i, j, 0]
                B = coef[i, j, 1]
                C = coef[i, j, 2]
                x0 = lane_x[b0 + k]
                x2 = x0 * x0 % p
                pp[k] = p
                ln[k] = lane_n[b0 + k]
                base[k] = off[j]
                f[k] = ((x2 * x0 % p) + A * x2 + B * x0 + C) % p
                d1[k] = (3 * x2 + 3 * x0 + 1 + A * (2 * x0 + 1) + B) % p
                d2[k] = (6 * x0 + 6 + 2 * A) % p
                six[k] = 6 % p
                s[k] = 0
                if ln[k] > steps:
                    steps = ln[k]
            for x in range(steps):
                for k in range(w):
                    if x < ln[k]:
                        p = pp[k]
                        s[k] += chi[base[k] + f[k]]
                        t = f[k] + d1[k]
                        f[k] = t - p if t >= p else t
                        t = d1[k] + d2[k]
                        d1[k] = t - p if t >= p else t
                        t = d2[k] + six[k]
                        d2[k] = t - p if t >= p else t
            for k in range(w):
                out[lane_i[b0 + k], lane_j[b0 + k]] -= s[k]
        g0 = g1


def _mod_primes(n: int, primes: np.ndarray) -> np.ndarray:
    if -_I62 < n < _I62:
        return np.int64(n) % primes
    return np.array([n % p for p in primes.tolist()], dtype=np.int64)


def _depressed_coefficients(E: WeierstrassCurve, primes: np.ndarray) -> np.ndarray:
    """(A, B, C) mod p with (2y + a1x + a3)^2 = 4(x^3 + A x^2 + B x + C), odd p."""
    inv2 = (primes + 1) // 2
    inv4 = inv2 * inv2 % primes
    out = np.empty((len(primes), 3), dtype=np.int64)
    out[:, 0] = _mod_primes(E.b2, primes) * inv4 % primes
    out[:, 1] = _mod_primes(E.b4, primes) * inv2 % primes
    out[:, 2] = _mod_primes(E.b6, primes) * inv4 % primes
    return out


def _count_mod2(E: WeierstrassCurve) -> int:
    a1, a2, a3, a4, a6 = (a % 2 for a in E.ainvs)
    n = 1
    for x in (0, 1):
        for y in (0, 1):
            if (y * y + a1 * x * y + a3 * y - x ** 3 - a2 * x * x - a4 * x - a6) % 2 == 0:
                n += 1
    return n


def _ap_model(E: WeierstrassCurve, p: int) -> int:
    """a_p = p + 1 - #E(F_p) for a model with good reduction at p."""
    if p == 2:
        return 3 - _count_mod2(E)
    primes = np.array([p], dtype=np.int64)
    coef = _depressed_coefficients(E, primes)[None, :, :]
    out = np.zeros((1, 1), dtype=np.int64)
    _character_sums(primes, coef, np.zeros((1, 1), dtype=np.bool_), out)
    return int(out[0, 0])


def ap_good_prime(E: WeierstrassCurve, p: int) -> int:
    """a_p at a prime of good reduction (of the p-minimal model)."""
    if E.disc % p == 0:
        ld = local_data(E, p)
        if ld.reduction is not ReductionType.Good:
            raise BadReductionPrime(f"{E} has bad reduction at {p}")
        E = ld.minimal_model
    return _ap_model(E, p)


def _bad_prime_entry(E: WeierstrassCurve, p: int) -> tuple[int, int]:
    ld = local_data(E, p)
    if ld.reduction is ReductionType.Good:
        return _ap_model(ld.minimal_model, p), int(ReductionType.Good)
    return ld.reduction.ap, int(ld.reduction)


def ap_batch(curves, prime_table: PrimeTable, ids=None) -> list:
    """ApRecords for every curve over all primes of the table.

    Failures are returned in place of the record for that curve.
    """
    curves = list(curves)
    if ids is None:
        ids = [str(i) for i in range(len(curves))]
    primes = np.ascontiguousarray(prime_table.primes, dtype=np.int64)
    results: list = []
    for start in range(0, len(curves), CHUNK):
        chunk = curves[start:start + CHUNK]
        n = len(chunk)
        coef = np.zeros((n, len(primes), 3), dtype=np.int64)
        skip = np.zeros((n, len(primes)), dtype=np.bool_)
        for i, E in enumerate(chunk):
            coef[i] = _depressed_coefficients(E, primes)
            skip[i] = _mod_primes(E.disc, primes) == 0
        skip[:, primes == 2] = True
        out = np.zeros((n, len(primes)), dtype=np.int64)
        _character_sums(primes, coef, skip, out)
        for i, E in enumerate(chunk):
            cid = ids[start + i]
            try:
                red = np.zeros(len(primes), dtype=np.uint8)
                ap = out[i].copy()
                for j in np.flatnonzero(skip[i]).tolist():
                    p = int(primes[j])
                    if E.disc % p == 0:
                        ap[j], red[j] = _bad_prime_entry(E, p)
                    else:
                        ap[j] = _ap_model(E, p)
                results.append(ApRecord(cid, prime_table.bound, primes, ap, red))
            except Exception as exc:  # per-curve error slot
                log.warning("a_p computation failed for %s: %s", cid, exc)
                results.append(exc)
    return results


def ap_record(E: WeierstrassCurve, bound: int, curve_id: str = "") -> ApRecord:
    from ..arith import sieve_primes

    rec = ap_batch([E], sieve_primes(bound), ids=[curve_id])[0]
    if isinstance(rec, Exception):
        raise rec
    return rec


def group_order(E: WeierstrassCurve, p: int) -> int:
    """#E(F_p) at a good prime."""
    assert is_probable_prime(p)
    return p + 1 - ap_good_prime(E, p)
