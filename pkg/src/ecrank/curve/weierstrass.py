"""Integral Weierstrass models and the chord-tangent group law."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import PointNotOnCurve, SingularCurve


@dataclass(frozen=True)
class WeierstrassCurve:
    """y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6 with integer a_i."""

    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    conductor: int | None = field(default=None, compare=False)
    b2: int = field(init=False, compare=False)
    b4: int = field(init=False, compare=False)
    b6: int = field(init=False, compare=False)
    b8: int = field(init=False, compare=False)
    c4: int = field(init=False, compare=False)
    c6: int = field(init=False, compare=False)
    disc: int = field(init=False, compare=False)

    def __post_init__(self):
        a1, a2, a3, a4, a6 = self.ainvs
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        c4 = b2 * b2 - 24 * b4
        c6 = -b2 ** 3 + 36 * b2 * b4 - 216 * b6
        disc = -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
        if disc == 0:
            raise SingularCurve(f"singular model {self.ainvs}")
        for name, val in zip(("b2", "b4", "b6", "b8", "c4", "c6", "disc"),
                             (b2, b4, b6, b8, c4, c6, disc)):
            object.__setattr__(self, name, val)

    @property
    def ainvs(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    def with_conductor(self, conductor: int) -> WeierstrassCurve:
        return WeierstrassCurve(*self.ainvs, conductor=conductor)

    def rst(self, r: int, s: int, t: int) -> WeierstrassCurve:
        """Substitute x = x' + r, y = y' + s x' + t (u = 1)."""
        a1, a2, a3, a4, a6 = self.ainvs
        return WeierstrassCurve(
            a1 + 2 * s,
            a2 - s * a1 + 3 * r - s * s,
            a3 + r * a1 + 2 * t,
            a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t,
            a6 + r * a4 + r * r * a2 + r ** 3 - t * a3 - t * t - r * t * a1,
            conductor=self.conductor,
        )

    def scale_down(self, u: int) -> WeierstrassCurve:
        """Model with a_i / u^i; the divisions must be exact."""
        out = []
        for i, a in zip((1, 2, 3, 4, 6), self.ainvs):
            q, rem = divmod(a, u ** i)
            if rem:
                raise ValueError(f"a{i} not divisible by {u}^{i}")
            out.append(q)
        return WeierstrassCurve(*out, conductor=self.conductor)

    def short_coefficients(self) -> tuple[int, int]:
        """(A, B) of the integral model y^2 = x^3 + A x + B isomorphic over Q."""
        return -27 * self.c4, -54 * self.c6

    def j_invariant(self) -> Fraction:
        return Fraction(self.c4 ** 3, self.disc)

    def __str__(self):
        return "[" + ",".join(str(a) for a in self.ainvs) + "]"


def compute_invariants(a1: int, a2: int, a3: int, a4: int, a6: int) -> WeierstrassCurve:
    return WeierstrassCurve(int(a1), int(a2), int(a3), int(a4), int(a6))


def from_c4c6(c4: int, c6: int) -> WeierstrassCurve | None:
    """Reduced integral model (a1, a3 in {0,1}, a2 in {-1,0,1}) with given c4, c6.

    Returns None when no integral model has these invariants.
    """
    b2 = -c6 % 12
    if b2 > 6:
        b2 -= 12
    num4 = b2 * b2 - c4
    if num4 % 24:
        return None
    b4 = num4 // 24
    num6 = -b2 ** 3 + 36 * b2 * b4 - c6
    if num6 % 216:
        return None
    b6 = num6 // 216
    a1 = b2 % 2
    a3 = b6 % 2
    if (b2 - a1) % 4 or (b4 - a1 * a3) % 2 or (b6 - a3) % 4:
        return None
    a2 = (b2 - a1) // 4
    a4 = (b4 - a1 * a3) // 2
    a6 = (b6 - a3) // 4
    try:
        E = WeierstrassCurve(a1, a2, a3, a4, a6)
    except SingularCurve:
        return None
    if E.c4 != c4 or E.c6 != c6:
        return None
    return E


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class ProjectivePoint:
    """Point (X : Y : Z) with coprime integer coordinates.

    Canonical scaling: Z > 0, or Y > 0 when Z = 0 (the point at infinity is
    (0 : 1 : 0)).
    """

    X: int
    Y: int
    Z: int

    def __post_init__(self):
        X, Y, Z = self.X, self.Y, self.Z
        if X == Y == Z == 0:
            raise ValueError("(0:0:0) is not a projective point")
        g = math.gcd(math.gcd(X, Y), Z)
        if Z < 0 or (Z == 0 and (Y < 0 or (Y == 0 and X < 0))):
            g = -g
        object.__setattr__(self, "X", X // g)
        object.__setattr__(self, "Y", Y // g)
        object.__setattr__(self, "Z", Z // g)

    @classmethod
    def infinity(cls) -> ProjectivePoint:
        return cls(0, 1, 0)

    @classmethod
    def from_affine(cls, x, y) -> ProjectivePoint:
        x, y = Fraction(x), Fraction(y)
        d = x.denominator * y.denominator // math.gcd(x.denominator, y.denominator)
        return cls(int(x * d), int(y * d), d)

    @property
    def is_infinity(self) -> bool:
        return self.Z == 0

    def xy(self) -> tuple[Fraction, Fraction]:
        if self.Z == 0:
            raise ValueError("point at infinity has no affine coordinates")
        return Fraction(self.X, self.Z), Fraction(self.Y, self.Z)


def point_on_curve(E: WeierstrassCurve, P: ProjectivePoint) -> bool:
    X, Y, Z = P.X, P.Y, P.Z
    a1, a2, a3, a4, a6 = E.ainvs
    lhs = Y * Y * Z + a1 * X * Y * Z + a3 * Y * Z * Z
    rhs = X ** 3 + a2 * X * X * Z + a4 * X * Z * Z + a6 * Z ** 3
    return lhs == rhs


def _check(E, P):
    if not point_on_curve(E, P):
        raise PointNotOnCurve(f"{P} is not on {E}")


def point_neg(E: WeierstrassCurve, P: ProjectivePoint) -> ProjectivePoint:
    _check(E, P)
    if P.is_infinity:
        return P
    x, y = P.xy()
    return ProjectivePoint.from_affine(x, -y - E.a1 * x - E.a3)


def point_add(E: WeierstrassCurve, P: ProjectivePoint, Q: ProjectivePoint) -> ProjectivePoint:
    _check(E, P)
    _check(E, Q)
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    a1, a2, a3, a4, a6 = E.ainvs
    x1, y1 = P.xy()
    x2, y2 = Q.xy()
    if x1 == x2 and y1 + y2 + a1 * x2 + a3 == 0:
        return ProjectivePoint.infinity()
    if x1 != x2:
        lam = (y2 - y1) / (x2 - x1)
        nu = (y1 * x2 - y2 * x1) / (x2 - x1)
    else:
        den = 2 * y1 + a1 * x1 + a3
        lam = (3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1) / den
        nu = (-x1 ** 3 + a4 * x1 + 2 * a6 - a3 * y1) / den
    x3 = lam * lam + a1 * lam - a2 - x1 - x2
    y3 = -(lam + a1) * x3 - nu - a3
    return ProjectivePoint.from_affine(x3, y3)


def scalar_mul(E: WeierstrassCurve, n: int, P: ProjectivePoint) -> ProjectivePoint:
    _check(E, P)
    if n < 0:
        return scalar_mul(E, -n, point_neg(E, P))
    result = ProjectivePoint.infinity()
    addend = P
    while n:
        if n & 1:
            result = point_add(E, result, addend)
        addend = point_add(E, addend, addend)
        n >>= 1
    return result
