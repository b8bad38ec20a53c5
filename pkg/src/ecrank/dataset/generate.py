"""Curve generation: random Weierstrass models and specialisations of pencils of cubics."""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import sympy
from sympy.polys.matrices import DomainMatrix

from ..arith import factorize
from ..curve import (
    ProjectivePoint,
    WeierstrassCurve,
    conductor,
    from_c4c6,
    minimal_model,
    torsion_is_trivial,
)
from ..errors import (
    DegenerateConfiguration,
    EcrankError,
    PointAtSingularity,
    PointNotOnCurve,
    SingularCubic,
    SingularCurve,
)
from .records import CurveRecord

log = logging.getLogger(__name__)

# exponents (i, j, k) of X^i Y^j Z^k, the coordinate order of PlaneCubic.coeffs
MONOMIALS = ((3, 0, 0), (2, 1, 0), (2, 0, 1), (1, 2, 0), (1, 1, 1),
             (1, 0, 2), (0, 3, 0), (0, 2, 1), (0, 1, 2), (0, 0, 3))
_X, _Y, _Z, _t = sympy.symbols("X Y Z t")


def _monomial_row(P) -> list[int]:
    return [P[0] ** i * P[1] ** j * P[2] ** k for i, j, k in MONOMIALS]


@dataclass(frozen=True)
class PlaneCubic:
    coeffs: tuple[int, ...]
    points: tuple[tuple[int, int, int], ...] = ()

    def __call__(self, P) -> int:
        return sum(c * m for c, m in zip(self.coeffs, _monomial_row(P)))

    def expr(self):
        return sum(c * _X ** i * _Y ** j * _Z ** k for c, (i, j, k) in zip(self.coeffs, MONOMIALS))

    def gradient(self, P):
        e = self.expr()
        sub = dict(zip((_X, _Y, _Z), P))
        return tuple(sympy.Rational(sympy.diff(e, v).subs(sub)) for v in (_X, _Y, _Z))


def _random_point(rng: random.Random, bound: int) -> tuple[int, int, int]:
    x = Fraction(rng.randint(-bound, bound), rng.randint(1, bound))
    y = Fraction(rng.randint(-bound, bound), rng.randint(1, bound))
    P = (x.numerator * y.denominator, y.numerator * x.denominator, x.denominator * y.denominator)
    g = math.gcd(*P)
    return tuple(c // g for c in P)


def _primitive(v) -> list[int]:
    den = math.lcm(*(sympy.Rational(c).q for c in v))
    ints = [int(sympy.Rational(c) * den) for c in v]
    g = math.gcd(*ints)
    return [c // g for c in ints] if g else ints


def _short_kernel_basis(A: sympy.Matrix) -> list[list[int]]:
    """Integer basis of the cubics through the points, LLL-reduced to keep heights small."""
    basis = [_primitive(list(v)) for v in A.nullspace()]
    dm = DomainMatrix.from_Matrix(sympy.Matrix(basis)).convert_to(sympy.ZZ)
    red = dm.lll().to_Matrix()
    return [[int(c) for c in red.row(i)] for i in range(red.rows)]


def gen_pencil_cubic(k: int, coord_bound: int, rng_seed, retries: int = 20,
                     comb_bound: int = 2) -> PlaneCubic:
    """Random member of the linear system of cubics through k random rational points.

    Points have numerators and denominators bounded by ``coord_bound``; the
    member is a combination of a reduced basis with coefficients in
    [-comb_bound, comb_bound].
    """
    if not 2 <= k <= 8:
        raise ValueError("k must lie in 2..8")
    rng = random.Random(rng_seed)
    for _ in range(retries):
        pts: list = []
        while len(pts) < k:
            P = _random_point(rng, coord_bound)
            if P not in pts:
                pts.append(P)
        A = sympy.Matrix([_monomial_row(P) for P in pts])
        if A.rank() < k:
            log.debug("points in special position, redrawing")
            continue
        basis = _short_kernel_basis(A)
        coeffs = [0] * 10
        while not any(coeffs):
            lam = [rng.randint(-comb_bound, comb_bound) for _ in basis]
            coeffs = [sum(l * b[i] for l, b in zip(lam, basis)) for i in range(10)]
        g = math.gcd(*coeffs)
        cubic = PlaneCubic(tuple(c // g for c in coeffs), tuple(pts))
        assert all(cubic(P) == 0 for P in pts)
        return cubic
    raise DegenerateConfiguration(f"no {k}-point configuration of full rank in {retries} draws")


# ---------------------------------------------------------------------------
# reduction to Weierstrass form


def _frame(P):
    """Integer matrix with third column P and nonzero determinant."""
    p0, p1, p2 = P
    if p2 != 0:
        return sympy.Matrix([[1, 0, p0], [0, 1, p1], [0, 0, p2]])
    if p1 != 0:
        return sympy.Matrix([[1, 0, p0], [0, 0, p1], [0, 1, 0]])
    return sympy.Matrix([[0, 0, p0], [1, 0, 0], [0, 1, 0]])


def _fr(v) -> Fraction:
    v = sympy.Rational(v)
    return Fraction(int(v.p), int(v.q))


@dataclass
class CubicMap:
    """Birational map from the plane cubic to the Weierstrass model.

    Points on lines through the base point that the construction cannot see
    (the tangent line, the line x = 0 of the chart, the line at infinity of
    the chart) map to None.
    """

    M_inv: sympy.Matrix
    swap: bool
    G2: list = field(repr=False)
    G3: list = field(repr=False)
    t0: Fraction
    q: Fraction
    quartic: list = field(repr=False)  # D(t0 + s) coefficients, constant first
    u: int

    def __call__(self, Q) -> ProjectivePoint | None:
        x, y, z = (_fr(c) for c in self.M_inv * sympy.Matrix(Q))
        if z == 0:
            return None
        xa, ya = x / z, y / z
        if self.swap:
            xa, ya = ya, xa
        if xa == 0:
            return None
        t = ya / xa
        w = 2 * _horner(self.G3, t) * xa + _horner(self.G2, t)
        s = t - self.t0
        if s == 0:
            return None
        e = self.quartic
        if self.q != 0:
            q, c, d = self.q, e[2], e[1]
            X = (2 * q * (w + q) + d * s) / s ** 2
            Y = (4 * q * q * (w + q) + 2 * q * (d * s + c * s * s) - d * d * s * s / (2 * q)) / s ** 3
        else:
            xx = 1 / s
            X = e[1] * xx
            Y = e[1] * w * xx * xx
        return ProjectivePoint.from_affine(X * self.u ** 2, Y * self.u ** 3)


def _horner(coeffs, t):
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def _coeffs_in_t(expr) -> list[Fraction]:
    poly = sympy.Poly(sympy.expand(expr), _t)
    return [_fr(c) for c in reversed(poly.all_coeffs())]


def cubic_to_weierstrass(cubic: PlaneCubic, P) -> tuple[WeierstrassCurve, CubicMap]:
    """Weierstrass model birational to a smooth plane cubic with rational point P.

    The lines through P cut the cubic in pairs of further points; their
    discriminant is a quartic w^2 = D(t) with a rational point coming from the
    tangent at P, which is then sent to Weierstrass form (a flex needs one
    step less).
    """
    P = tuple(int(c) for c in P)
    if cubic(P) != 0:
        raise PointNotOnCurve(f"{P} does not lie on the cubic")
    if all(g == 0 for g in cubic.gradient(P)):
        raise PointAtSingularity(f"{P} is a singular point of the cubic")
    M = _frame(P)
    x, y = sympy.symbols("x y")
    new = M * sympy.Matrix([x, y, 1])
    g = sympy.Poly(sympy.expand(cubic.expr().subs({_X: new[0], _Y: new[1], _Z: new[2]},
                                                  simultaneous=True)), x, y)
    parts = {1: sympy.Integer(0), 2: sympy.Integer(0), 3: sympy.Integer(0)}
    for (i, j), c in g.terms():
        if i + j == 0:
            raise AssertionError("base point not at the origin")
        parts[i + j] += c * x ** i * y ** j
    alpha, beta = (sympy.Poly(parts[1], x, y).coeff_monomial(m) for m in (x, y))
    swap = beta == 0
    if swap:
        alpha, beta = beta, alpha
        parts = {d: e.subs({x: y, y: x}, simultaneous=True) for d, e in parts.items()}
    G1, G2, G3 = (sympy.expand(parts[d].subs({x: 1, y: _t})) for d in (1, 2, 3))
    D = sympy.expand(G2 ** 2 - 4 * G1 * G3)
    t0 = _fr(-alpha / beta)
    shifted = sympy.expand(D.subs(_t, sympy.Rational(t0.numerator, t0.denominator) + _t))
    e = _coeffs_in_t(shifted) if shifted != 0 else [Fraction(0)]
    e += [Fraction(0)] * (5 - len(e))
    if sympy.degree(D, _t) < 3:
        raise SingularCubic("discriminant quartic has degree < 3; the cubic is singular or reducible")
    q = _horner(_coeffs_in_t(G2) if G2 != 0 else [Fraction(0)], t0)
    if q != 0:
        a, b, c, d = e[4], e[3], e[2], e[1]
        a1 = d / q
        a2 = c - d * d / (4 * q * q)
        a3 = 2 * q * b
        a4 = -4 * q * q * a
        a6 = a2 * a4
    else:
        # P is a flex: substituting s = 1/x leaves a cubic in x
        if e[1] == 0:
            raise SingularCubic("degenerate cubic at the flex")
        a1, a2, a3, a4, a6 = Fraction(0), e[2], Fraction(0), e[3] * e[1], e[4] * e[1] ** 2
    ainv = (a1, a2, a3, a4, a6)
    u = math.lcm(*(a.denominator for a in ainv))
    ints = [int(a * u ** i) for a, i in zip(ainv, (1, 2, 3, 4, 6))]
    try:
        E = WeierstrassCurve(*ints)
    except SingularCurve:
        raise SingularCubic("Weierstrass model is singular; the cubic is not smooth") from None
    cmap = CubicMap(M.inv(), swap, _coeffs_in_t(G2) if G2 != 0 else [Fraction(0)],
                    _coeffs_in_t(G3) if G3 != 0 else [Fraction(0)], t0, q, e, u)
    return E, cmap


# ---------------------------------------------------------------------------
# random Weierstrass models and the combined generator


def gen_random_weierstrass(coeff_bound: int, count: int, rng_seed) -> list[CurveRecord]:
    """Nonsingular models with a1, a3 in {0,1}, a2 in {-1,0,1}, |a4|, |a6| <= coeff_bound."""
    if coeff_bound < 1:
        raise ValueError("coeff_bound must be >= 1")
    rng = random.Random(rng_seed)
    out = []
    while len(out) < count:
        a = (rng.randint(0, 1), rng.randint(-1, 1), rng.randint(0, 1),
             rng.randint(-coeff_bound, coeff_bound), rng.randint(-coeff_bound, coeff_bound))
        try:
            WeierstrassCurve(*a)
        except SingularCurve:
            continue
        out.append(CurveRecord(f"w{rng_seed}-{len(out)}", *a, source="weierstrass"))
    return out


@dataclass
class GenConfig:
    count: int = 1000  # random Weierstrass curves
    pencil: dict[int, int] = field(default_factory=dict)  # k -> number of pencil curves
    coeff_bound: int = 10 ** 4
    coord_bound: int = 3
    seed: int = 0
    attempts_per_curve: int = 50
    factor_budget: int = 200_000
    # reduced models with longer discriminants are dropped without trying to factor
    max_disc_digits: int = 80


def _coprime_base(nums: list[int]) -> list[int]:
    """Pairwise coprime integers > 1 whose products give every input (factor refinement)."""
    base = [n for n in nums if n > 1]
    changed = True
    while changed:
        changed = False
        for i in range(len(base)):
            for j in range(i + 1, len(base)):
                g = math.gcd(base[i], base[j])
                if g > 1:
                    x, y = base[i] // g, base[j] // g
                    base = [b for k, b in enumerate(base) if k not in (i, j)] + [g, x, y]
                    base = sorted({b for b in base if b > 1})
                    changed = True
                    break
            if changed:
                break
    out = []
    for b in base:
        pp = sympy.perfect_power(b)
        out.append(int(pp[0]) if pp else b)
    return out


def _vblock(n: int, e: int) -> int:
    v = 0
    while n and n % e == 0:
        n //= e
        v += 1
    return v


def strip_scaling(E: WeierstrassCurve) -> WeierstrassCurve:
    """Divide out every u with u^4 | c4, u^6 | c6 that still leaves an integral model.

    Works without factoring: the part prime to 6 comes from a coprime base of
    (c4, c6); powers of 2 and 3 are tried directly.
    """
    c4, c6 = E.c4, E.c6
    rest = []
    for n in (c4, c6):
        n = abs(n)
        for q in (2, 3):
            while n and n % q == 0:
                n //= q
        rest.append(n)
    u = 1
    for e in _coprime_base(rest):
        k4 = _vblock(c4, e) // 4 if c4 else 10 ** 9
        k6 = _vblock(c6, e) // 6 if c6 else 10 ** 9
        u *= e ** min(k4, k6)
    c4, c6 = c4 // u ** 4, c6 // u ** 6
    best = from_c4c6(c4, c6) or E
    i_max = min(_vblock(c4, 2) // 4 if c4 else 99, _vblock(c6, 2) // 6 if c6 else 99)
    j_max = min(_vblock(c4, 3) // 4 if c4 else 99, _vblock(c6, 3) // 6 if c6 else 99)
    for i in range(min(i_max, 60), -1, -1):
        for j in range(min(j_max, 60), -1, -1):
            w = 2 ** i * 3 ** j
            cand = from_c4c6(c4 // w ** 4, c6 // w ** 6)
            if cand is not None:
                return cand
    return best


def _finish(E: WeierstrassCurve, budget: int, max_digits: int = 80):
    """Minimal model and conductor, or None when the discriminant cannot be factored."""
    E = strip_scaling(E)
    if abs(E.disc).bit_length() > max_digits * 3.33:
        return None
    fac = factorize(abs(E.disc), budget)
    if not fac.complete:
        return None
    Em = minimal_model(E, fac)
    return Em, conductor(Em, factorize(abs(Em.disc), budget))


def generate_custom_dataset(config: GenConfig) -> list[CurveRecord]:
    """Random and pencil curves with trivial torsion, one per (c4, c6) of the minimal model."""
    seen: set = set()
    out: list[CurveRecord] = []

    def accept(E: WeierstrassCurve, cid: str, source: str) -> bool:
        try:
            done = _finish(E, config.factor_budget, config.max_disc_digits)
        except EcrankError as exc:
            log.info("%s: skipped (%s)", cid, exc)
            return False
        if done is None:
            log.info("%s: discriminant not fully factored, skipped", cid)
            return False
        Em, N = done
        if (Em.c4, Em.c6) in seen or not torsion_is_trivial(Em):
            return False
        seen.add((Em.c4, Em.c6))
        out.append(CurveRecord(cid, *Em.ainvs, conductor=N, source=source))
        return True

    rng = random.Random(config.seed)
    made = tries = 0
    while made < config.count:
        tries += 1
        if tries > config.attempts_per_curve * max(config.count, 1):
            log.warning("random Weierstrass: stopped after %d attempts with %d curves", tries, made)
            break
        (rec,) = gen_random_weierstrass(config.coeff_bound, 1, rng.getrandbits(64))
        if accept(rec.curve, f"w{config.seed}-{made}", "weierstrass"):
            made += 1

    for k in sorted(config.pencil):
        want = config.pencil[k]
        made = tries = 0
        while made < want and tries < config.attempts_per_curve * want:
            tries += 1
            try:
                cubic = gen_pencil_cubic(k, config.coord_bound, rng.getrandbits(64))
                E, _ = cubic_to_weierstrass(cubic, cubic.points[0])
            except EcrankError as exc:
                log.debug("pencil k=%d: %s", k, exc)
                continue
            if accept(E, f"k{k}-{config.seed}-{made}", f"pencil{k}"):
                made += 1
        if made < want:
            log.warning("pencil k=%d: only %d of %d curves", k, made, want)
    return out
