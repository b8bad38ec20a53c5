"""Number-theoretic primitives: primes, Legendre symbols, factoring, digamma."""

from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class PrimeTable:
    """All primes strictly below ``bound``, in ascending order."""

    bound: int
    primes: np.ndarray = field(repr=False)

    @property
    def pi(self) -> int:
        return len(self.primes)

    def index(self, p: int) -> int:
        """1-based ordinal of the prime ``p`` in the table."""
        i = int(np.searchsorted(self.primes, p))
        if i >= len(self.primes) or self.primes[i] != p:
            raise KeyError(p)
        return i + 1

    def __contains__(self, p) -> bool:
        i = int(np.searchsorted(self.primes, p))
        return i < len(self.primes) and self.primes[i] == p

    def __len__(self):
        return len(self.primes)

    def __iter__(self):
        return iter(self.primes.tolist())


def sieve_primes(bound: int) -> PrimeTable:
    if bound < 2:
        raise ValueError("bound must be >= 2")
    is_p = np.ones(bound, dtype=bool)
    is_p[:2] = False
    for q in range(2, math.isqrt(bound - 1) + 1):
        if is_p[q]:
            is_p[q * q::q] = False
    primes = np.flatnonzero(is_p).astype(np.int64)
    primes.setflags(write=False)
    return PrimeTable(bound, primes)


def legendre_symbol(a: int, p: int) -> int:
    """Legendre symbol (a/p) by Euler's criterion."""
    if p == 2:
        raise ValueError("legendre_symbol needs an odd prime")
    r = pow(a % p, (p - 1) // 2, p)
    if r == 0:
        return 0
    return 1 if r == 1 else -1


def von_mangoldt(n: int) -> float:
    if n < 2:
        return 0.0
    p = _smallest_prime_factor(n)
    while n % p == 0:
        n //= p
    return math.log(p) if n == 1 else 0.0


def _smallest_prime_factor(n: int) -> int:
    if n % 2 == 0:
        return 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return d
        d += 2
    return n


def prime_powers_up_to(B: int) -> list[tuple[int, int, int]]:
    """All prime powers p^m <= B as (p, m, p^m), sorted by value."""
    if B < 2:
        return []
    out = []
    for p in sieve_primes(B + 1).primes.tolist():
        q, m = p, 1
        while q <= B:
            out.append((p, m, q))
            q *= p
            m += 1
    out.sort(key=lambda t: t[2])
    return out


def valuation(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


# ---------------------------------------------------------------------------
# primality and factoring

# deterministic Miller-Rabin witnesses for n < 3.317e24
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_MR_DETERMINISTIC_LIMIT = 3_317_044_064_679_887_385_961_981
_MR_RANDOM_ROUNDS = 30


def _mr_round(n: int, d: int, s: int, a: int) -> bool:
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        if not _mr_round(n, d, s, a):
            return False
    if n < _MR_DETERMINISTIC_LIMIT:
        return True
    rng = random.Random(n)  # reproducible per input
    for _ in range(_MR_RANDOM_ROUNDS):
        if not _mr_round(n, d, s, rng.randrange(2, n - 1)):
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    if n <= 2:
        return 2
    n |= 1
    while not is_probable_prime(n):
        n += 2
    return n


@dataclass
class FactorMap:
    factors: dict[int, int]
    cofactor: int = 1

    @property
    def complete(self) -> bool:
        return self.cofactor == 1

    def value(self) -> int:
        out = self.cofactor
        for p, e in self.factors.items():
            out *= p ** e
        return out

    def primes(self) -> list[int]:
        return sorted(self.factors)


TRIAL_LIMIT = 10 ** 6
_CHUNK = 512


@lru_cache(maxsize=1)
def _trial_chunks() -> list[tuple[int, list[int]]]:
    primes = sieve_primes(TRIAL_LIMIT).primes.tolist()
    chunks = []
    for i in range(0, len(primes), _CHUNK):
        part = primes[i:i + _CHUNK]
        chunks.append((math.prod(part), part))
    return chunks


def _brent_rho(n: int, budget: int, seed: int) -> tuple[int | None, int]:
    """One Pollard-Brent attempt; returns (factor or None, iterations used)."""
    rng = random.Random(seed)
    y, c = rng.randrange(1, n), rng.randrange(1, n)
    m = 128
    g = r = q = 1
    used = 0
    x = ys = y
    while g == 1:
        x = y
        for _ in range(r):
            y = (y * y + c) % n
        used += r
        k = 0
        while k < r and g == 1:
            ys = y
            steps = min(m, r - k)
            for _ in range(steps):
                y = (y * y + c) % n
                q = q * abs(x - y) % n
            used += steps
            g = math.gcd(q, n)
            k += steps
        if g == 1 and used >= budget:
            return None, used
        r *= 2
    if g == n:
        while True:
            ys = (ys * ys + c) % n
            g = math.gcd(abs(x - ys), n)
            used += 1
            if g > 1:
                break
    return (g if g != n else None), used


def factorize(n: int, effort_budget: int = 1_000_000) -> FactorMap:
    """Factor ``n`` by trial division below 10^6, then Pollard rho.

    Any part not split within ``effort_budget`` rho iterations is left in
    the cofactor; the cofactor is recorded as a prime factor only after it
    passes Miller-Rabin.
    """
    if n < 1:
        raise ValueError("factorize needs n >= 1")
    factors: dict[int, int] = {}
    for prod, part in _trial_chunks():
        if n == 1:
            break
        if math.gcd(n, prod) == 1:
            continue
        for p in part:
            if n % p == 0:
                e = 0
                while n % p == 0:
                    n //= p
                    e += 1
                factors[p] = e
    if n == 1:
        return FactorMap(factors, 1)

    stack = [n]
    leftover = 1
    budget = effort_budget
    seed = 1
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if is_probable_prime(m):
            factors[m] = factors.get(m, 0) + 1
            continue
        r = math.isqrt(m)
        if r * r == m:
            stack += [r, r]
            continue
        d = None
        while d is None and budget > 0:
            d, used = _brent_rho(m, budget, seed)
            budget -= used
            seed += 1
        if d is None:
            leftover *= m
        else:
            stack += [d, m // d]
    return FactorMap(dict(sorted(factors.items())), leftover)


# ---------------------------------------------------------------------------
# digamma

# B_{2k} / (2k) for k = 1..8
_BERN_OVER_2K = (
    1 / 12, -1 / 120, 1 / 252, -1 / 240, 1 / 132, -691 / 32760, 1 / 12, -3617 / 8160,
)
EULER_GAMMA = 0.57721566490153286061


def digamma_complex(z: complex) -> complex:
    """psi(z) for Re(z) >= 1: upward recurrence, then the asymptotic series."""
    z = complex(z)
    if z.real < 1:
        raise ValueError("digamma_complex requires Re(z) >= 1")
    shift = 0j
    while abs(z) < 10:
        shift += 1 / z
        z += 1
    w = 1 / (z * z)
    tail = 0j
    for c in reversed(_BERN_OVER_2K):
        tail = (tail + c) * w
    return cmath.log(z) - 0.5 / z - tail - shift


def digamma_array(z: np.ndarray) -> np.ndarray:
    """Vectorised digamma_complex for arrays with Re(z) >= 1."""
    z = np.asarray(z, dtype=np.complex128).copy()
    if np.any(z.real < 1):
        raise ValueError("digamma_array requires Re(z) >= 1")
    shift = np.zeros_like(z)
    small = np.abs(z) < 10
    while small.any():
        shift[small] += 1 / z[small]
        z[small] += 1
        small = np.abs(z) < 10
    w = 1 / (z * z)
    tail = np.zeros_like(z)
    for c in reversed(_BERN_OVER_2K):
        tail = (tail + c) * w
    return np.log(z) - 0.5 / z - tail - shift
