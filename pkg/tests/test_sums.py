import cmath
import math
import random

import mpmath as mp
import numpy as np
import pytest

from ecrank.arith import sieve_primes
from ecrank.curve import ReductionType, WeierstrassCurve, ap_batch, ap_record
from ecrank.errors import DeltaOutOfRange, InsufficientApData, SingularCurve
from ecrank.sums import (cn_table, digamma_integral, max_delta, partial_euler_product, s0, s1, s2,
                         s3, s4, s5, s5_tilde, s6, sum_vector)

E11 = (0, -1, 1, -10, -20)
E37 = (0, 0, 1, -1, 0)


def random_records(n, bound, seed):
    rng = random.Random(seed)
    curves = []
    while len(curves) < n:
        a = (rng.randint(0, 1), rng.randint(-1, 1), rng.randint(0, 1),
             rng.randint(-500, 500), rng.randint(-500, 500))
        try:
            curves.append(WeierstrassCurve(*a))
        except SingularCurve:
            pass
    return ap_batch(curves, sieve_primes(bound))


def digamma_integral_closed_form(delta):
    """(1/(pi d)) [-gamma + int_0^{2 pi d} (u / 2 pi d) / (e^u - 1) du - log(1 - e^{-2 pi d})].

    Obtained from Re psi(1+it) = -gamma + sum_k t^2 / (k (k^2 + t^2)) and the
    Fourier transform of the sinc^2 window.
    """
    mp.mp.dps = 30
    w = 2 * mp.pi * delta
    inner = mp.quad(lambda u: (u / w) / mp.expm1(u) if u else 1 / w, [0, w])
    return float((-mp.euler + inner - mp.log(1 - mp.exp(-w))) / (mp.pi * delta))


def naive_sums(rec, B):
    """S0..S5 from plain loops over primes and prime powers."""
    good, split = [], []
    for p, a, red in zip(rec.primes.tolist(), rec.ap.tolist(), rec.reduction.tolist()):
        if p >= B:
            break
        if red == ReductionType.Good:
            good.append((p, a))
        elif red == ReductionType.SplitMultiplicative:
            split.append(p)
    lb = math.log(B)
    S0 = sum(a * math.log(p) / p for p, a in good) / lb
    plain = weighted = 0.0
    for p, a, red in zip(rec.primes.tolist(), rec.ap.tolist(), rec.reduction.tolist()):
        if p > B:
            break
        if red == ReductionType.Good:
            disc = cmath.sqrt(a * a - 4 * p)
            al, be = (a + disc) / 2, (a - disc) / 2
        m, q = 1, p
        while q <= B:
            c = (al ** m + be ** m).real if red == ReductionType.Good else float(a) ** m
            plain += c * math.log(p)
            weighted += c * math.log(p) / q
            m, q = m + 1, q * p
    S1 = S0 - plain / (B * lb)
    S2 = weighted / lb - plain / (B * lb)
    S3 = sum((2 - a) / (p + 1 - a) * math.log(p) for p, a in good)
    S4 = -sum(a * math.log(p) for p, a in good) / B
    S5 = sum(math.log((p + 1 - a) / p) for p, a in good) + sum(math.log(1.5 * (p - 1) / p) for p in split)
    return [S0, S1, S2, S3, S4, S5]


# ---------------------------------------------------------------------------
# c_n


def test_cn_examples_37a1():
    t = cn_table(ap_record(WeierstrassCurve(*E37), 100), 100)
    assert t.get(2) == -2
    assert t.get(4) == (-2) ** 2 - 2 * 2  # c_4 = a_2 c_2 - 2 c_1 with c_1 = 2
    assert t.get(8) == -2 * t.get(4) - 2 * t.get(2)
    assert t.get(37) == -1  # nonsplit multiplicative
    assert t.get(3) == -3
    with pytest.raises(KeyError):
        t.get(6)


def test_cn_power_sums_of_frobenius():
    for rec in random_records(20, 1100, 1):
        t = cn_table(rec, 1000)
        for n, p, m, c in zip(t.n.tolist(), t.p.tolist(), t.m.tolist(), t.c.tolist()):
            a = rec.ap_of(p)
            if rec.reduction[np.searchsorted(rec.primes, p)] == ReductionType.Good:
                d = cmath.sqrt(a * a - 4 * p)
                want = (((a + d) / 2) ** m + ((a - d) / 2) ** m).real
                assert abs(c - want) <= 1e-9 * max(1.0, abs(want))
            else:
                assert c == a ** m


def test_cn_needs_coverage():
    rec = ap_record(WeierstrassCurve(*E37), 100)
    with pytest.raises(InsufficientApData):
        cn_table(rec, 1000)


# ---------------------------------------------------------------------------
# S0..S5


@pytest.mark.parametrize("B", [100, 1000])
def test_sums_match_naive_loops(B):
    for rec in random_records(15, B + 50, 2):
        got = [f(rec, B) for f in (s0, s1, s2, s3, s4, s5)]
        want = naive_sums(rec, B)
        assert np.allclose(got, want, rtol=1e-10, atol=1e-10)


def test_sums_37a1_small_bound_by_hand():
    rec = ap_record(WeierstrassCurve(*E37), 20)
    # good primes below 10: a_2=-2, a_3=-3, a_5=-2, a_7=-1
    good = [(2, -2), (3, -3), (5, -2), (7, -1)]
    want = sum(a * math.log(p) / p for p, a in good) / math.log(10)
    assert s0(rec, 10) == pytest.approx(want, rel=1e-14)
    assert s3(rec, 10) == pytest.approx(sum((2 - a) / (p + 1 - a) * math.log(p) for p, a in good))


def test_sums_need_coverage():
    rec = ap_record(WeierstrassCurve(*E37), 1000)
    for f in (s0, s1, s2, s3, s4, s5):
        f(rec, 1000)
        with pytest.raises(InsufficientApData):
            f(rec, 2000)


def test_euler_product_identity():
    recs = random_records(100, 1000, 3)
    for rec in recs:
        lhs = math.exp(-s5_tilde(rec, 1000))
        rhs = partial_euler_product(rec, 1000, 1.0)
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_partial_euler_product_domain():
    rec = ap_record(WeierstrassCurve(*E37), 100)
    with pytest.raises(ValueError):
        partial_euler_product(rec, 100, 0.5)


# ---------------------------------------------------------------------------
# S6


@pytest.mark.parametrize("delta", [0.1, 0.5, 1.0, 2.0, 3.0])
def test_digamma_integral_closed_form(delta):
    assert digamma_integral(delta) == pytest.approx(digamma_integral_closed_form(delta), abs=1e-10)


def test_digamma_integral_refinement():
    assert abs(digamma_integral(1.0) - digamma_integral(1.0, step=0.025)) < 1e-9


def test_s6_empty_prime_sum():
    rec = ap_record(WeierstrassCurve(*E37), 10)
    want = math.log(37) / (0.2 * math.pi) - math.log(2 * math.pi) / (0.1 * math.pi) + digamma_integral(0.1)
    assert s6(rec, 37, 0.1) == pytest.approx(want, rel=1e-14)


def test_s6_37a1_in_range():
    rec = ap_record(WeierstrassCurve(*E37), 600)
    assert 0.6 < s6(rec, 37, 1.0) < 1.6


def test_s6_delta_range():
    rec = ap_record(WeierstrassCurve(*E37), 1000)
    for d in (0.0, -1.0, 3.01):
        with pytest.raises(DeltaOutOfRange):
            s6(rec, 37, d)


def test_s6_coverage():
    rec = ap_record(WeierstrassCurve(*E37), 1000)
    s6(rec, 37, 1.0)
    with pytest.raises(InsufficientApData):
        s6(rec, 37, 2.0)
    assert max_delta(10**4) == pytest.approx(1.4659, abs=1e-4)


def test_sum_vector():
    rec = ap_record(WeierstrassCurve(*E11), 10**4)
    v = sum_vector(rec, 11, 10**4, 1.4)
    assert v.s6 is not None and len(v.values()) == 7
    assert v.s0 == s0(rec, 10**4)
    assert sum_vector(rec, 11, 10**4, 2.0).s6 is None
