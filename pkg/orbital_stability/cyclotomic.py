# orbital_stability/cyclotomic.py
"""
Exact elements of the group ring Z[zeta_L] with a rational prefactor.

A value is ``scalar * sum_j coeffs[j] * zeta_L**j``.  No reduction modulo the
cyclotomic polynomial is done; equality goes through a high-precision complex
embedding whose precision follows the coefficient size.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, Iterable, Union

import mpmath
import numpy as np

Scalar = Union[int, Fraction]


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


class CyclotomicSum:
    __slots__ = ("L", "coeffs", "scalar")
    __hash__ = None

    def __init__(self, L: int, coeffs, scalar: Scalar = 1):
        if L < 1:
            raise ValueError(f"root-of-unity order must be positive, got {L}")
        arr = np.array([int(c) for c in coeffs], dtype=object)
        if arr.shape != (L,):
            raise ValueError(f"expected {L} coefficients, got shape {arr.shape}")
        self.L = L
        self.coeffs = arr
        self.scalar = Fraction(scalar)

    # ---------- constructors ----------

    @classmethod
    def zero(cls) -> "CyclotomicSum":
        return cls(1, [0])

    @classmethod
    def one(cls) -> "CyclotomicSum":
        return cls(1, [1])

    @classmethod
    def constant(cls, value: Scalar) -> "CyclotomicSum":
        return cls(1, [1], value)

    @classmethod
    def root_of_unity(cls, turn: Fraction, coeff: int = 1) -> "CyclotomicSum":
        turn = Fraction(turn) % 1
        L = turn.denominator
        coeffs = [0] * L
        coeffs[turn.numerator] = coeff
        return cls(L, coeffs)

    @classmethod
    def from_turns(cls, turns: Iterable[Fraction]) -> "CyclotomicSum":
        """Sum of exp(2 pi i t) over the given turns (with multiplicity)."""
        counts: Dict[Fraction, int] = {}
        for t in turns:
            t = Fraction(t) % 1
            counts[t] = counts.get(t, 0) + 1
        if not counts:
            return cls.zero()
        L = 1
        for t in counts:
            L = _lcm(L, t.denominator)
        coeffs = np.zeros(L, dtype=object)
        coeffs[:] = 0
        for t, c in counts.items():
            coeffs[(t.numerator * (L // t.denominator)) % L] += c
        return cls(L, coeffs)

    # ---------- internal helpers ----------

    def _lifted(self, L: int) -> np.ndarray:
        if L == self.L:
            return self.coeffs.copy()
        out = np.zeros(L, dtype=object)
        out[:] = 0
        step = L // self.L
        np.add.at(out, np.arange(self.L) * step, self.coeffs)
        return out

    @staticmethod
    def _common_scalar(a: Fraction, b: Fraction) -> Fraction:
        if a == 0:
            return b if b != 0 else Fraction(1)
        if b == 0:
            return a
        return Fraction(math.gcd(a.numerator, b.numerator), _lcm(a.denominator, b.denominator))

    # ---------- arithmetic ----------

    def __add__(self, other) -> "CyclotomicSum":
        if isinstance(other, (int, Fraction)):
            other = CyclotomicSum.constant(other)
        if not isinstance(other, CyclotomicSum):
            return NotImplemented
        L = _lcm(self.L, other.L)
        s = self._common_scalar(self.scalar, other.scalar)
        left = self._lifted(L) * int(self.scalar / s)
        right = other._lifted(L) * int(other.scalar / s)
        return CyclotomicSum(L, left + right, s)

    __radd__ = __add__

    def __neg__(self) -> "CyclotomicSum":
        return CyclotomicSum(self.L, self.coeffs, -self.scalar)

    def __sub__(self, other) -> "CyclotomicSum":
        if isinstance(other, (int, Fraction)):
            other = CyclotomicSum.constant(other)
        return self + (-other)

    def __mul__(self, other) -> "CyclotomicSum":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, CyclotomicSum):
            return NotImplemented
        L = _lcm(self.L, other.L)
        a = self._lifted(L)
        b = other._lifted(L)
        out = np.zeros(L, dtype=object)
        out[:] = 0
        nz_a = np.nonzero(a)[0]
        nz_b = np.nonzero(b)[0]
        for i in nz_a:
            np.add.at(out, (i + nz_b) % L, a[i] * b[nz_b])
        return CyclotomicSum(L, out, self.scalar * other.scalar)

    __rmul__ = __mul__

    def scale(self, factor: Scalar) -> "CyclotomicSum":
        return CyclotomicSum(self.L, self.coeffs, self.scalar * Fraction(factor))

    def conj(self) -> "CyclotomicSum":
        idx = (-np.arange(self.L)) % self.L
        out = np.zeros(self.L, dtype=object)
        out[:] = 0
        out[idx] = self.coeffs
        return CyclotomicSum(self.L, out, self.scalar)

    # ---------- exactness / embedding ----------

    def is_exact_zero(self) -> bool:
        return self.scalar == 0 or not any(self.coeffs)

    def l1_norm(self) -> int:
        return int(sum(abs(c) for c in self.coeffs))

    def precision_bits(self) -> int:
        return 64 + self.l1_norm().bit_length() + 2 * self.L.bit_length()

    def _embed_unscaled(self) -> mpmath.mpc:
        total = mpmath.mpc(0)
        for j in np.nonzero(self.coeffs)[0]:
            total += int(self.coeffs[j]) * mpmath.expjpi(mpmath.mpf(2 * int(j)) / self.L)
        return total

    def embed(self, prec_bits: int | None = None) -> mpmath.mpc:
        P = max(self.precision_bits(), prec_bits or 0)
        with mpmath.workprec(P):
            return self._embed_unscaled() * mpmath.mpf(self.scalar.numerator) / self.scalar.denominator

    def to_complex(self) -> complex:
        return complex(self.embed())

    def __abs__(self) -> float:
        return abs(self.to_complex())

    def equals(self, other, prec_bits: int | None = None) -> bool:
        diff = self - other
        if diff.is_exact_zero():
            return True
        P = max(diff.precision_bits(), prec_bits or 0)
        with mpmath.workprec(P):
            return abs(diff._embed_unscaled()) < mpmath.mpf(2) ** (-(P // 2))

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = CyclotomicSum.constant(other)
        if not isinstance(other, CyclotomicSum):
            return NotImplemented
        return self.equals(other)

    def terms(self) -> Dict[int, int]:
        return {int(j): int(self.coeffs[j]) for j in np.nonzero(self.coeffs)[0]}

    def to_json(self) -> dict:
        z = self.to_complex()
        return {
            "L": self.L,
            "scalar": str(self.scalar),
            "terms": {str(j): c for j, c in self.terms().items()},
            "re": z.real,
            "im": z.imag,
        }

    def __repr__(self) -> str:
        return f"CyclotomicSum(L={self.L}, scalar={self.scalar}, terms={self.terms()})"
