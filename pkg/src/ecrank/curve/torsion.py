"""Trivial-torsion test: reduction bound first, division polynomials if needed."""

from __future__ import annotations

import math

import sympy

from .counting import ap_good_prime
from .weierstrass import WeierstrassCurve

# good primes p > 3 whose group orders are combined
N_PRIMES = 30
_x = sympy.Symbol("x")


def _group_order_gcd(E: WeierstrassCurve, n: int = N_PRIMES) -> int:
    g = 0
    p = 5
    found = 0
    while found < n:
        if sympy.isprime(p) and E.disc % p:
            g = math.gcd(g, p + 1 - ap_good_prime(E, p))
            found += 1
            if g == 1:
                break
        p += 2
    return g


def _division_polynomial(ell: int, A: int, B: int):
    x = _x
    f = x ** 3 + A * x + B
    if ell == 2:
        return f
    psi3 = 3 * x ** 4 + 6 * A * x ** 2 + 12 * B * x - A ** 2
    if ell == 3:
        return psi3
    # psi4 = 4y * g
    g = x ** 6 + 5 * A * x ** 4 + 20 * B * x ** 3 - 5 * A ** 2 * x ** 2 - 4 * A * B * x - 8 * B ** 2 - A ** 3
    psi5 = 32 * f ** 2 * g - psi3 ** 3
    if ell == 5:
        return psi5
    if ell == 7:
        return psi5 * psi3 ** 3 - 128 * f ** 2 * g ** 3
    raise ValueError(ell)


def _integer_roots(poly) -> list[int]:
    P = sympy.Poly(sympy.expand(poly), _x)
    out = []
    for fac, _ in P.factor_list()[1]:
        if fac.degree() == 1:
            a, b = fac.all_coeffs()
            if b % a == 0:
                out.append(int(-b // a))
    return out


def _has_point_of_order(E: WeierstrassCurve, ell: int) -> bool:
    # torsion points of the integral model Y^2 = X^3 + A X + B are integral
    A, B = E.short_coefficients()
    for x0 in _integer_roots(_division_polynomial(ell, A, B)):
        fx = x0 ** 3 + A * x0 + B
        if fx >= 0 and math.isqrt(fx) ** 2 == fx:
            return True
    return False


def torsion_is_trivial(E: WeierstrassCurve) -> bool:
    """True iff E(Q) has trivial torsion.

    The gcd of #E(F_p) over good primes bounds the torsion order; when it
    is not 1 each prime order allowed by Mazur is searched for explicitly.
    """
    g = _group_order_gcd(E)
    if g == 1:
        return True
    for ell in (2, 3, 5, 7):
        if g % ell == 0 and _has_point_of_order(E, ell):
            return False
    return True
