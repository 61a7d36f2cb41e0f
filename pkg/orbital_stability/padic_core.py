# orbital_stability/padic_core.py
"""
Exact rational arithmetic with p-adic valuations, unit residues and the
membership tests for the congruence subgroups K_p[m].

Everything here is exact (fractions.Fraction); no floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Union

from .errors import DomainError, InvalidArgument

# Rationals are plain Fractions; the alias names their role.
ValuedRational = Fraction
RationalLike = Union[int, Fraction, str]

INFINITY = math.inf


@lru_cache(maxsize=4096)
def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


def _require_prime(p: int) -> None:
    if not isinstance(p, int) or not is_prime(p):
        raise InvalidArgument(f"{p!r} is not a prime")


def prime_factors(n: int) -> Dict[int, int]:
    """Factor |n| by trial division; returns {prime: exponent}."""
    n = abs(int(n))
    if n == 0:
        raise InvalidArgument("cannot factor 0")
    out: Dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def parse_rational(text: RationalLike) -> Fraction:
    """Accept ``a/b`` or an integer; decimals are rejected to keep inputs exact."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    s = str(text).strip()
    if "." in s or "e" in s.lower():
        raise InvalidArgument(f"rational '{s}' must be written as a/b, not as a decimal")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidArgument(f"cannot parse rational '{s}'") from exc


def valuation(x: RationalLike, p: int) -> Union[int, float]:
    """e_p(x); ``math.inf`` for x = 0."""
    _require_prime(p)
    x = Fraction(x)
    if x == 0:
        return INFINITY
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


@dataclass(frozen=True)
class ResidueUnit:
    p: int
    exponent: int
    value: int

    def __post_init__(self):
        if self.value % self.p == 0:
            raise DomainError(f"{self.value} is not a unit mod {self.p}")

    def __int__(self) -> int:
        return self.value


def unit_residue(x: RationalLike, p: int, N: int) -> ResidueUnit:
    """Unit part of x reduced mod p^N: x = p^v * u * (1 + O(p^N))."""
    x = Fraction(x)
    if x == 0:
        raise DomainError("unit_residue of 0")
    if N <= 0:
        # (Z/1)^x has a single element; 1 represents it
        return ResidueUnit(p, 0, 1)
    v = valuation(x, p)
    u = x / Fraction(p) ** v
    mod = p ** N
    return ResidueUnit(p, N, u.numerator * pow(u.denominator, -1, mod) % mod)


def residue_mod(x: RationalLike, p: int, N: int) -> int:
    """Reduction of a p-integral rational mod p^N."""
    x = Fraction(x)
    if N <= 0:
        return 0
    if x.denominator % p == 0:
        raise DomainError(f"{x} is not {p}-integral")
    mod = p ** N
    return x.numerator * pow(x.denominator, -1, mod) % mod


def additive_turn(x: RationalLike, p: int) -> Fraction:
    """{x}_p as a turn in [0, 1): psi_p(x) = exp(2 pi i * turn)."""
    x = Fraction(x)
    if x == 0:
        return Fraction(0)
    v = valuation(x, p)
    if v >= 0:
        return Fraction(0)
    mod = p ** (-v)
    rest = x.denominator // mod
    r = x.numerator * pow(rest, -1, mod) % mod
    return Fraction(r, mod)


# ---------- 2x2 matrices ----------

@dataclass(frozen=True)
class Matrix2:
    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    @classmethod
    def of(cls, a: RationalLike, b: RationalLike, c: RationalLike, d: RationalLike) -> "Matrix2":
        return cls(Fraction(a), Fraction(b), Fraction(c), Fraction(d))

    @classmethod
    def identity(cls) -> "Matrix2":
        return cls.of(1, 0, 0, 1)

    @classmethod
    def upper_unipotent(cls, x: RationalLike) -> "Matrix2":
        return cls.of(1, x, 0, 1)

    @property
    def det(self) -> Fraction:
        return self.a * self.d - self.b * self.c

    def scale(self, s: RationalLike) -> "Matrix2":
        s = Fraction(s)
        return Matrix2(self.a * s, self.b * s, self.c * s, self.d * s)

    def __matmul__(self, other: "Matrix2") -> "Matrix2":
        return Matrix2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0 and self.c == 0 and self.d == 0


def in_K_m(g: Matrix2, p: int, m: int) -> bool:
    """g in K_p[m]: integral entries, c in p^m Z_p, unit determinant."""
    if m < 0:
        raise InvalidArgument(f"level exponent m={m} must be >= 0")
    for entry in (g.a, g.b, g.d):
        if valuation(entry, p) < 0:
            return False
    if valuation(g.c, p) < m:
        return False
    return valuation(g.det, p) == 0


def projective_K_m_shift(g: Matrix2, p: int, m: int):
    """The unique k with p^k * g in K_p[m], or None."""
    if g.is_zero():
        raise InvalidArgument("projective_K_m_shift of the zero matrix")
    det = g.det
    if det == 0:
        return None
    dv = valuation(det, p)
    if dv % 2:
        return None
    k = -dv // 2
    return k if in_K_m(g.scale(Fraction(p) ** k), p, m) else None


def vol_K_bar(p: int, m: int) -> Fraction:
    """Volume of the image of K_p[m] in PGL_2(Z_p), total mass 1."""
    _require_prime(p)
    if m < 0:
        raise InvalidArgument(f"level exponent m={m} must be >= 0")
    if m == 0:
        return Fraction(1)
    return Fraction(1, p ** (m - 1) * (p + 1))


def units_mod(p: int, n: int) -> range | list:
    """Representatives of (Z/p^n)^x in increasing order ([1] when n = 0)."""
    if n <= 0:
        return [1]
    return [a for a in range(1, p ** n) if a % p]
