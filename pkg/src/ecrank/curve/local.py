"""Local reduction data: Tate's algorithm, reduction types, conductor."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..arith import FactorMap, factorize, legendre_symbol, valuation
from ..errors import GoodReductionPrime, IncompleteFactorization
from .weierstrass import WeierstrassCurve, from_c4c6

# largest prime for which the brute-force root finding in tate() is used
TATE_MAX_PRIME = 1000


class ReductionType(enum.IntEnum):
    Good = 0
    SplitMultiplicative = 1
    NonsplitMultiplicative = 2
    Additive = 3

    @property
    def ap(self) -> int | None:
        return {1: 1, 2: -1, 3: 0}.get(int(self))


@dataclass(frozen=True)
class LocalData:
    p: int
    kodaira: str
    conductor_exponent: int
    tamagawa: int | None  # not computed for additive p >= 5
    reduction: ReductionType
    minimal_model: WeierstrassCurve  # p-minimal


def _v(n: int, p: int) -> int:
    return 10 ** 9 if n == 0 else valuation(n, p)


def _roots_mod(coeffs, p):
    """Roots in F_p of sum(coeffs[i] x^i), by enumeration (p small)."""
    return [x for x in range(p) if sum(c * x ** i for i, c in enumerate(coeffs)) % p == 0]


def _has_root(coeffs, p) -> bool:
    return bool(_roots_mod(coeffs, p))


def tate(E: WeierstrassCurve, p: int) -> LocalData:
    """Tate's algorithm at a prime p (p <= TATE_MAX_PRIME).

    Returns the Kodaira symbol, conductor exponent, Tamagawa number and a
    p-minimal model.
    """
    if p > TATE_MAX_PRIME:
        raise ValueError("tate() enumerates residues; use local_data() for large p")
    while True:
        n = _v(E.disc, p)
        if n == 0:
            return LocalData(p, "I0", 0, 1, ReductionType.Good, E)
        a1, a2, a3, a4, a6 = E.ainvs
        b2, b4, b6 = E.b2, E.b4, E.b6
        # move the singular point of the reduction to (0, 0)
        if p == 2:
            if b2 % 2 == 0:
                r = a4 % 2
                t = (r * (1 + a2 + a4) + a6) % 2
            else:
                r = a3 % 2
                t = (r + a4) % 2
        elif p == 3:
            r = (-b6) % 3 if b2 % 3 == 0 else (-b2 * b4) % 3
            t = (a1 * r + a3) % 3
        else:
            if E.c4 % p == 0:
                r = -b2 * pow(12, -1, p) % p
            else:
                r = -(E.c6 + b2 * E.c4) * pow(12 * E.c4, -1, p) % p
            t = -(a1 * r + a3) * pow(2, -1, p) % p
        E = E.rst(r, 0, t)
        a1, a2, a3, a4, a6 = E.ainvs
        assert a3 % p == 0 and a4 % p == 0 and a6 % p == 0

        if E.c4 % p != 0:
            split = _has_root([-a2, a1, 1], p)
            if split:
                c = n
            else:
                c = 2 if n % 2 == 0 else 1
            red = ReductionType.SplitMultiplicative if split else ReductionType.NonsplitMultiplicative
            return LocalData(p, f"I{n}", 1, c, red, E)
        add = ReductionType.Additive
        if _v(a6, p) < 2:
            return LocalData(p, "II", n, 1, add, E)
        if _v(E.b8, p) < 3:
            return LocalData(p, "III", n - 1, 2, add, E)
        if _v(E.b6, p) < 3:
            c = 3 if _has_root([-(a6 // p ** 2), a3 // p, 1], p) else 1
            return LocalData(p, "IV", n - 2, c, add, E)

        # make p | a1, a2; p^2 | a3, a4; p^3 | a6
        if p == 2:
            s = a2 % 2
            t = 2 * ((a6 // 4) % 2)
        else:
            s = -a1 * pow(2, -1, p) % p
            t = p * (-(a3 // p) * pow(2, -1, p) % p)
        E = E.rst(0, s, t)
        a1, a2, a3, a4, a6 = E.ainvs
        assert a1 % p == 0 and a2 % p == 0
        assert a3 % p ** 2 == 0 and a4 % p ** 2 == 0 and a6 % p ** 3 == 0

        b, c, d = a2 // p, a4 // p ** 2, a6 // p ** 3
        w = 27 * d * d - b * b * c * c + 4 * b ** 3 * d - 18 * b * c * d + 4 * c ** 3
        x = 3 * c - b * b
        if w % p != 0:
            nroots = len(_roots_mod([d, c, b, 1], p))
            return LocalData(p, "I0*", n - 4, 1 + nroots, add, E)

        if x % p != 0:
            # double root: move it to 0, then the I_m^* subprocedure
            roots = _roots_mod([d, c, b, 1], p)
            dbl = [r0 for r0 in roots if (3 * r0 * r0 + 2 * b * r0 + c) % p == 0][0]
            E = E.rst(p * dbl, 0, 0)
            ix = iy = 3
            mx = my = p * p
            while True:
                a1, a2, a3, a4, a6 = E.ainvs
                a2t, a3t, a4t, a6t = a2 // p, a3 // my, a4 // (p * mx), a6 // (mx * my)
                if (a3t * a3t + 4 * a6t) % p != 0:
                    cp = 4 if _has_root([-a6t, a3t, 1], p) else 2
                    break
                if p == 2:
                    tt = my * (a6t % 2)
                else:
                    tt = my * (-a3t * pow(2, -1, p) % p)
                E = E.rst(0, 0, tt)
                my *= p
                iy += 1
                a1, a2, a3, a4, a6 = E.ainvs
                a2t, a3t, a4t, a6t = a2 // p, a3 // my, a4 // (p * mx), a6 // (mx * my)
                if (a4t * a4t - 4 * a6t * a2t) % p != 0:
                    cp = 4 if _has_root([a6t, a4t, a2t], p) else 2
                    break
                if p == 2:
                    rr = mx * ((a6t * a2t) % 2)
                else:
                    rr = mx * (-a4t * pow(2 * a2t, -1, p) % p)
                E = E.rst(rr, 0, 0)
                mx *= p
                ix += 1
            m = ix + iy - 5
            return LocalData(p, f"I{m}*", n - m - 4, cp, add, E)

        # triple root: move it to 0
        r0 = _roots_mod([d, c, b, 1], p)[0]
        E = E.rst(p * r0, 0, 0)
        a1, a2, a3, a4, a6 = E.ainvs
        x3, x6 = a3 // p ** 2, a6 // p ** 4
        if (x3 * x3 + 4 * x6) % p != 0:
            c = 3 if _has_root([-x6, x3, 1], p) else 1
            return LocalData(p, "IV*", n - 6, c, add, E)
        if p == 2:
            t = p * p * (x6 % 2)
        else:
            t = p * p * (-x3 * pow(2, -1, p) % p)
        E = E.rst(0, 0, t)
        a1, a2, a3, a4, a6 = E.ainvs
        if _v(a4, p) < 4:
            return LocalData(p, "III*", n - 7, 2, add, E)
        if _v(a6, p) < 6:
            return LocalData(p, "II*", n - 8, 1, add, E)
        # not minimal at p
        E = E.scale_down(p)


def _minimal_c4c6_large_p(E: WeierstrassCurve, p: int):
    """p-minimal (c4, c6, disc) for p >= 5."""
    c4, c6, D = E.c4, E.c6, E.disc
    while _v(c4, p) >= 4 and _v(c6, p) >= 6 and _v(D, p) >= 12:
        c4 //= p ** 4
        c6 //= p ** 6
        D //= p ** 12
    return c4, c6, D


def _short_model(c4: int, c6: int) -> WeierstrassCurve:
    return WeierstrassCurve(0, 0, 0, -27 * c4, -54 * c6)


def local_data(E: WeierstrassCurve, p: int) -> LocalData:
    """Local data at p; Tate's algorithm for p in {2, 3}, invariants otherwise."""
    if p in (2, 3):
        return tate(E, p)
    c4, c6, D = _minimal_c4c6_large_p(E, p)
    vD = _v(D, p)
    if (c4, c6) == (E.c4, E.c6):
        model = E
    else:
        model = from_c4c6(c4, c6) or _short_model(c4, c6)
    if vD == 0:
        return LocalData(p, "I0", 0, 1, ReductionType.Good, model)
    if c4 % p != 0:
        # node of y^2 = x^3 - 27c4 x - 54c6 at x0 = -3 c6 / c4; split iff 3x0 is a square
        x0 = -3 * c6 * pow(c4, -1, p) % p
        split = legendre_symbol(3 * x0, p) == 1
        red = ReductionType.SplitMultiplicative if split else ReductionType.NonsplitMultiplicative
        cp = vD if split else (2 if vD % 2 == 0 else 1)
        return LocalData(p, f"I{vD}", 1, cp, red, model)
    # additive; Kodaira symbol from valuations of the minimal discriminant
    if _v(c4, p) == 2 and vD > 6:
        kod = f"I{vD - 6}*"
    else:
        kod = {2: "II", 3: "III", 4: "IV", 6: "I0*", 8: "IV*", 9: "III*", 10: "II*"}[vD]
    return LocalData(p, kod, 2, None, ReductionType.Additive, model)


def reduction_type(E: WeierstrassCurve, p: int) -> tuple[ReductionType, int]:
    """(type, a_p) at a prime of bad reduction of the p-minimal model."""
    ld = local_data(E, p)
    if ld.reduction is ReductionType.Good:
        raise GoodReductionPrime(f"{E} has good reduction at {p}")
    return ld.reduction, ld.reduction.ap


def conductor(E: WeierstrassCurve, factored_disc: FactorMap | None = None) -> int:
    if factored_disc is None:
        factored_disc = factorize(abs(E.disc))
    if factored_disc.cofactor != 1:
        raise IncompleteFactorization(f"discriminant of {E} not fully factored")
    N = 1
    for p in factored_disc.primes():
        N *= p ** local_data(E, p).conductor_exponent
    return N


def minimal_model(E: WeierstrassCurve, factored_disc: FactorMap | None = None) -> WeierstrassCurve:
    """Globally minimal reduced model, obtained prime by prime."""
    if factored_disc is None:
        factored_disc = factorize(abs(E.disc))
    if factored_disc.cofactor != 1:
        raise IncompleteFactorization(f"discriminant of {E} not fully factored")
    c4, c6 = E.c4, E.c6
    for p in factored_disc.primes():
        if factored_disc.factors[p] < 12:
            continue
        if p in (2, 3):
            m = tate(E, p).minimal_model
            e = (_v(E.disc, p) - _v(m.disc, p)) // 12
        else:
            e = (_v(E.disc, p) - _v(_minimal_c4c6_large_p(E, p)[2], p)) // 12
        c4 //= p ** (4 * e)
        c6 //= p ** (6 * e)
    out = from_c4c6(c4, c6)
    if out is None:  # pragma: no cover - Kraus conditions hold for minimal invariants
        raise ArithmeticError(f"no integral model for c4={c4}, c6={c6}")
    return out
