"""Mestre-Nagao sums S0..S6, Dirichlet coefficients c_n and the partial Euler product."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arith import EULER_GAMMA, digamma_array, next_prime
from .curve.counting import ApRecord
from .curve.local import ReductionType
from .errors import DeltaOutOfRange, InsufficientApData

DELTA_MAX = 3.0

# Gauss-Legendre rule used on every panel of the S6 integral
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class CnTable:
    """c_n and Lambda(n) at the prime powers n = p^m <= bound, sorted by n."""

    bound: int
    n: np.ndarray
    p: np.ndarray
    m: np.ndarray
    c: np.ndarray
    lam: np.ndarray

    def __len__(self):
        return len(self.n)

    def get(self, n: int) -> float:
        i = int(np.searchsorted(self.n, n))
        if i == len(self.n) or self.n[i] != n:
            raise KeyError(n)
        return float(self.c[i])


@dataclass(frozen=True)
class SumVector:
    B: int
    s0: float
    s1: float
    s2: float
    s3: float
    s4: float
    s5: float
    delta: float
    s6: float | None  # None when the a_p data do not reach exp(2 pi delta)

    def values(self) -> list[float | None]:
        return [self.s0, self.s1, self.s2, self.s3, self.s4, self.s5, self.s6]


def _require_below(rec: ApRecord, B: float) -> None:
    """All primes p < B must be present in rec."""
    if rec.bound >= B or next_prime(rec.bound) >= B:
        return
    raise InsufficientApData(f"a_p known for p < {rec.bound}, need p < {B}")


def _good_below(rec: ApRecord, B: float):
    k = int(np.searchsorted(rec.primes, B))
    good = rec.reduction[:k] == ReductionType.Good
    p = rec.primes[:k][good].astype(np.float64)
    a = rec.ap[:k][good].astype(np.float64)
    return p, a


def _powers(rec: ApRecord, X: float) -> tuple[list, list, list, list]:
    """(p, m, p^m, c_{p^m}) for every prime power p^m <= X."""
    ps, ms, ns, cs = [], [], [], []
    k = int(np.searchsorted(rec.primes, X, side="right"))
    for p, a, red in zip(rec.primes[:k].tolist(), rec.ap[:k].tolist(), rec.reduction[:k].tolist()):
        good = red == ReductionType.Good
        c_prev, c = 2.0, float(a)
        q, m = p, 1
        while q <= X:
            ps.append(p)
            ms.append(m)
            ns.append(q)
            cs.append(c)
            if good:
                c_prev, c = c, c * a - p * c_prev
            else:
                c = c * a
            q *= p
            m += 1
    return ps, ms, ns, cs


def cn_table(rec: ApRecord, B: int) -> CnTable:
    """c_n for all prime powers n <= B.

    Good p: c_{p^m} = c_{p^{m-1}} a_p - p c_{p^{m-2}} with c_1 = 2.
    Bad p: c_{p^m} = a_p^m.
    """
    _require_below(rec, B + 1)
    ps, ms, ns, cs = _powers(rec, B)
    order = np.argsort(ns, kind="stable")
    p = np.asarray(ps, dtype=np.int64)[order]
    return CnTable(
        bound=B,
        n=np.asarray(ns, dtype=np.int64)[order],
        p=p,
        m=np.asarray(ms, dtype=np.int64)[order],
        c=np.asarray(cs, dtype=np.float64)[order],
        lam=np.log(p.astype(np.float64)),
    )


def _fsum(x) -> float:
    return math.fsum(np.asarray(x, dtype=np.float64).tolist())


def s0(rec: ApRecord, B: int) -> float:
    _require_below(rec, B)
    p, a = _good_below(rec, B)
    return _fsum(a * np.log(p) / p) / math.log(B)


def _cn_lambda_sums(rec: ApRecord, B: int) -> tuple[float, float]:
    """(sum c_n Lambda(n), sum c_n Lambda(n) / n) over n <= B."""
    t = cn_table(rec, B)
    w = t.c * t.lam
    return _fsum(w), _fsum(w / t.n)


def s1(rec: ApRecord, B: int) -> float:
    plain, _ = _cn_lambda_sums(rec, B)
    return s0(rec, B) - plain / (B * math.log(B))


def s2(rec: ApRecord, B: int) -> float:
    plain, weighted = _cn_lambda_sums(rec, B)
    return weighted / math.log(B) - plain / (B * math.log(B))


def s3(rec: ApRecord, B: int) -> float:
    _require_below(rec, B)
    p, a = _good_below(rec, B)
    return _fsum((2 - a) / (p + 1 - a) * np.log(p))


def s4(rec: ApRecord, B: int) -> float:
    _require_below(rec, B)
    p, a = _good_below(rec, B)
    return _fsum(-a * np.log(p)) / B


def s5_tilde(rec: ApRecord, B: int) -> float:
    """Good-prime part of S5; exp(-S5~) is the partial Euler product at s = 1."""
    _require_below(rec, B)
    p, a = _good_below(rec, B)
    return _fsum(np.log((p + 1 - a) / p))


def s5(rec: ApRecord, B: int) -> float:
    k = int(np.searchsorted(rec.primes, B))
    split = rec.primes[:k][rec.reduction[:k] == ReductionType.SplitMultiplicative].astype(np.float64)
    return s5_tilde(rec, B) + _fsum(np.log(1.5 * (split - 1) / split))


def partial_euler_product(rec: ApRecord, B: int, s: float) -> float:
    """prod over good p < B of (1 - a_p p^-s + p^(1-2s))^-1."""
    if s <= 0.5:
        raise ValueError("partial_euler_product needs s > 1/2")
    _require_below(rec, B)
    p, a = _good_below(rec, B)
    factors = 1.0 / (1.0 - a * p ** -s + p ** (1 - 2 * s))
    return math.prod(factors.tolist())


# ---------------------------------------------------------------------------
# S6


def _check_delta(delta: float) -> None:
    if not (0 < delta <= DELTA_MAX):
        raise DeltaOutOfRange(f"delta must lie in (0, {DELTA_MAX}], got {delta}")


def _tail(delta: float, T: float) -> float:
    """int_T^inf Re psi(1+it) (sin(d pi t)/(d pi t))^2 dt from the expansion of psi."""
    w = 2 * math.pi * delta
    lt = math.log(T)
    # sin^2 = (1 - cos(w t)) / 2; non-oscillating part
    smooth = (lt + 1) / T + 1 / (36 * T ** 3) + 1 / (600 * T ** 5)
    # oscillating part: h = (log t + 1/(12 t^2)) / t^2, integrated by parts
    h0 = lt / T ** 2 + 1 / (12 * T ** 4)
    h1 = (1 - 2 * lt) / T ** 3 - 1 / (3 * T ** 5)
    h2 = (6 * lt - 5) / T ** 4 + 5 / (3 * T ** 6)
    h3 = (26 - 24 * lt) / T ** 5 - 10 / T ** 7
    sn, cs = math.sin(w * T), math.cos(w * T)
    osc = -h0 * sn / w - h1 * cs / w ** 2 + h2 * sn / w ** 3 + h3 * cs / w ** 4
    return (smooth - osc) / (2 * (delta * math.pi) ** 2)


def digamma_integral(delta: float, step: float | None = None, T: float | None = None) -> float:
    """(1/pi) Re int_R psi(1+it) (sin(delta pi t)/(delta pi t))^2 dt.

    The integrand is even. [0, T] is covered by 16-point Gauss-Legendre panels
    of width ``step`` (default 1/(4 delta), a quarter period of the sinc^2
    factor); [T, inf) is done analytically.
    """
    _check_delta(delta)
    if T is None:
        T = 200.0 / delta
    if step is None:
        step = 0.25 / delta
    n_panels = max(1, math.ceil(T / step))
    h = T / n_panels
    left = np.arange(n_panels) * h
    t = (left[:, None] + (_GL_X[None, :] + 1) * (h / 2)).ravel()
    u = delta * math.pi * t
    sinc2 = (np.sin(u) / u) ** 2
    f = digamma_array(1 + 1j * t).real * sinc2
    body = _fsum(np.tile(_GL_W, n_panels) * f) * (h / 2)
    return 2 / math.pi * (body + _tail(delta, T))


def s6(rec: ApRecord, conductor: int, delta: float, step: float | None = None) -> float:
    _check_delta(delta)
    X = math.exp(2 * math.pi * delta)
    if not rec.covers(X):
        raise InsufficientApData(f"S6({delta}) needs a_p for p <= {X:.1f}; have p < {rec.bound}")
    two_pi_d = 2 * math.pi * delta
    ps, ms, _, cs = _powers(rec, X)
    p = np.asarray(ps, dtype=np.float64)
    m = np.asarray(ms, dtype=np.float64)
    c = np.asarray(cs, dtype=np.float64)
    lp = np.log(p)
    # c_{p^k} / p^{k/2} in the unitary normalisation |alpha_p| = 1, i.e. c_{p^k} / p^k here
    terms = lp * c / p ** m * (1 - m * lp / two_pi_d)
    prime_sum = _fsum(terms)
    return (math.log(conductor) / (2 * delta * math.pi)
            - math.log(2 * math.pi) / (delta * math.pi)
            - prime_sum / (delta * math.pi)
            + digamma_integral(delta, step))


def max_delta(bound: float) -> float:
    """Largest delta whose S6 needs only primes below ``bound``."""
    return math.log(bound) / (2 * math.pi)


def sum_vector(rec: ApRecord, conductor: int, B: int, delta: float) -> SumVector:
    try:
        v6 = s6(rec, conductor, delta)
    except InsufficientApData:
        v6 = None
    return SumVector(B, s0(rec, B), s1(rec, B), s2(rec, B), s3(rec, B), s4(rec, B),
                     s5(rec, B), delta, v6)


__all__ = [
    "CnTable", "SumVector", "cn_table", "s0", "s1", "s2", "s3", "s4", "s5", "s5_tilde",
    "s6", "digamma_integral", "partial_euler_product", "sum_vector", "max_delta",
    "EULER_GAMMA",
]
