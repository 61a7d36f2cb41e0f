# orbital_stability/characters.py
"""
Dirichlet characters, local characters of Q_p^x and the exact character sums
built from them (Gauss sums, Ramanujan sums, the dual sum G(m)).

Character values are stored as "turns": a Fraction t in [0, 1) standing for
exp(2 pi i t).
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import TYPE_CHECKING, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .cyclotomic import CyclotomicSum
from .errors import CharacterConstructionError, DomainError, InvalidArgument
from .padic_core import (
    RationalLike,
    is_prime,
    parse_rational,
    prime_factors,
    residue_mod,
    unit_residue,
    units_mod,
    valuation,
)

if TYPE_CHECKING:
    from .orbital_local import LocalPlaceData

logger = logging.getLogger(__name__)


# ---------- unit groups ----------

def primitive_root(p: int) -> int:
    if not is_prime(p):
        raise InvalidArgument(f"{p} is not a prime")
    if p == 2:
        return 1
    factors = prime_factors(p - 1)
    for g in range(2, p):
        if all(pow(g, (p - 1) // r, p) != 1 for r in factors):
            return g
    raise AssertionError(f"no primitive root mod {p}")


@lru_cache(maxsize=256)
def unit_group_generators(p: int, n: int) -> Tuple[Tuple[int, int], ...]:
    """Generators of (Z/p^n)^x with their orders; p = 2, n >= 3 uses <-1, 5>."""
    if n <= 0:
        return ()
    if p == 2:
        if n == 1:
            return ()
        if n == 2:
            return ((3, 2),)
        return ((2 ** n - 1, 2), (5, 2 ** (n - 2)))
    g = primitive_root(p)
    if n >= 2 and pow(g, p - 1, p * p) == 1:
        g += p
    return ((g % p ** n, p ** (n - 1) * (p - 1)),)


def _tabulate(p: int, n: int, gens, turns) -> Dict[int, Fraction]:
    mod = p ** n if n > 0 else 1
    table: Dict[int, Fraction] = {}
    for exps in itertools.product(*(range(order) for _, order in gens)):
        elem = 1
        turn = Fraction(0)
        for (g, _), e, t in zip(gens, exps, turns):
            elem = elem * pow(g, e, mod) % mod
            turn += e * t
        table[elem % mod] = turn % 1
    return table


@dataclass(frozen=True)
class UnitGroupCharacter:
    p: int
    n: int
    generator_turns: Tuple[Fraction, ...]
    table: Dict[int, Fraction] = field(compare=False, repr=False)
    conductor: int = field(compare=False)

    @property
    def modulus(self) -> int:
        return self.p ** self.n

    @property
    def generators(self) -> Tuple[Tuple[int, int], ...]:
        return unit_group_generators(self.p, self.n)

    @property
    def order(self) -> int:
        out = 1
        for t in self.generator_turns:
            out = out * t.denominator // math.gcd(out, t.denominator)
        return out

    @property
    def is_trivial(self) -> bool:
        return all(t == 0 for t in self.generator_turns)

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.n

    def turn(self, u: RationalLike) -> Fraction:
        if self.n == 0:
            return Fraction(0)
        r = residue_mod(u, self.p, self.n) if not isinstance(u, int) else u % self.modulus
        if r % self.p == 0:
            raise DomainError(f"{u} is not a unit mod {self.p}")
        return self.table[r]

    def inverse(self) -> "UnitGroupCharacter":
        return _from_generator_turns(self.p, self.n, tuple((-t) % 1 for t in self.generator_turns))

    def __mul__(self, other: "UnitGroupCharacter") -> "UnitGroupCharacter":
        if (self.p, self.n) != (other.p, other.n):
            raise InvalidArgument("characters live on different unit groups")
        return _from_generator_turns(
            self.p, self.n, tuple((a + b) % 1 for a, b in zip(self.generator_turns, other.generator_turns))
        )


def _conductor(p: int, n: int, table: Dict[int, Fraction]) -> int:
    mod = p ** n
    for c in range(n + 1):
        step = p ** c
        if all(table[u % mod] == 0 for u in range(1, mod + 1, step) if u % p):
            return c
    return n


def _from_generator_turns(p: int, n: int, turns: Tuple[Fraction, ...]) -> UnitGroupCharacter:
    gens = unit_group_generators(p, n)
    if n <= 0:
        return UnitGroupCharacter(p, 0, (), {0: Fraction(0)}, 0)
    table = _tabulate(p, n, gens, turns)
    return UnitGroupCharacter(p, n, turns, table, _conductor(p, n, table))


def trivial_unit_character(p: int, n: int = 0) -> UnitGroupCharacter:
    return _from_generator_turns(p, n, tuple(Fraction(0) for _ in unit_group_generators(p, n)))


def build_unit_character(
    p: int,
    n: int,
    generator_exponents: Sequence[int],
    order: Optional[int] = None,
) -> UnitGroupCharacter:
    """
    Character of (Z/p^n)^x sending the i-th generator g_i to zeta^(a_i).

    Parameters
    ----------
    generator_exponents : one integer a_i per generator of unit_group_generators(p, n)
    order : root-of-unity order of zeta; when omitted zeta has the order of g_i
    """
    if not is_prime(p):
        raise InvalidArgument(f"{p} is not a prime")
    gens = unit_group_generators(p, n)
    if len(generator_exponents) != len(gens):
        raise CharacterConstructionError(
            f"(Z/{p}^{n})^x has {len(gens)} generator(s), got {len(generator_exponents)} exponent(s)"
        )
    turns = []
    for (g, g_order), a in zip(gens, generator_exponents):
        turn = Fraction(int(a), order if order is not None else g_order) % 1
        if (turn * g_order).denominator != 1:
            raise CharacterConstructionError(
                f"exponent {a} of order {order} is incompatible with generator {g} of order {g_order}"
            )
        turns.append(turn)
    return _from_generator_turns(p, n, tuple(turns))


def unit_character_from_values(p: int, n: int, turn_of: Callable[[int], Fraction]) -> UnitGroupCharacter:
    """Tabulate from a function on units; checks that it is multiplicative."""
    gens = unit_group_generators(p, n)
    chi = _from_generator_turns(p, n, tuple(Fraction(turn_of(g)) % 1 for g, _ in gens))
    for u in units_mod(p, n):
        if n and chi.turn(u) != Fraction(turn_of(u)) % 1:
            raise CharacterConstructionError(f"values mod {p}^{n} are not multiplicative at {u}")
    return chi


# ---------- local characters of Q_p^x ----------

@dataclass(frozen=True)
class LocalCharacter:
    unit_part: UnitGroupCharacter
    uniformizer_turn: Fraction = Fraction(0)

    @property
    def p(self) -> int:
        return self.unit_part.p

    @property
    def n(self) -> int:
        return self.unit_part.conductor

    @classmethod
    def trivial(cls, p: int) -> "LocalCharacter":
        return cls(trivial_unit_character(p, 0), Fraction(0))

    def unit_turn(self, u: RationalLike) -> Fraction:
        return self.unit_part.turn(u)

    def turn(self, x: RationalLike) -> Fraction:
        x = Fraction(x)
        if x == 0:
            raise DomainError("local character evaluated at 0")
        v = valuation(x, self.p)
        u = unit_residue(x, self.p, self.unit_part.n).value
        return (self.uniformizer_turn * v + self.unit_part.turn(u)) % 1

    def value(self, x: RationalLike) -> complex:
        return complex(CyclotomicSum.root_of_unity(self.turn(x)).to_complex())

    def conj(self) -> "LocalCharacter":
        return LocalCharacter(self.unit_part.inverse(), (-self.uniformizer_turn) % 1)


# ---------- Dirichlet characters ----------

@dataclass(frozen=True)
class DirichletCharacter:
    modulus: int
    parts: Tuple[UnitGroupCharacter, ...]

    def part(self, p: int) -> Optional[UnitGroupCharacter]:
        for chi_p in self.parts:
            if chi_p.p == p:
                return chi_p
        return None

    def turn(self, a: int) -> Optional[Fraction]:
        a = int(a)
        if math.gcd(a, self.modulus) != 1:
            return None
        return sum((chi_p.turn(a % chi_p.modulus) for chi_p in self.parts), Fraction(0)) % 1

    def value(self, a: int) -> complex:
        t = self.turn(a)
        if t is None:
            return 0j
        if t == 0:
            return 1 + 0j
        if t == Fraction(1, 2):
            return -1 + 0j
        return CyclotomicSum.root_of_unity(t).to_complex()

    @property
    def conductor(self) -> int:
        out = 1
        for chi_p in self.parts:
            out *= chi_p.p ** chi_p.conductor
        return out

    @property
    def is_primitive(self) -> bool:
        return all(chi_p.is_primitive for chi_p in self.parts)

    @property
    def is_real(self) -> bool:
        return all(t in (0, Fraction(1, 2)) for chi_p in self.parts for t in chi_p.generator_turns)

    @property
    def parity(self) -> int:
        """chi(-1) as +1 / -1."""
        return 1 if self.turn(-1) in (None, 0) else -1


def trivial_character() -> DirichletCharacter:
    return DirichletCharacter(1, ())


def dirichlet_from_parts(parts: Iterable[UnitGroupCharacter]) -> DirichletCharacter:
    parts = tuple(sorted((c for c in parts if c.n > 0), key=lambda c: c.p))
    modulus = 1
    for chi_p in parts:
        modulus *= chi_p.modulus
    return DirichletCharacter(modulus, parts)


def kronecker_symbol(a: int, n: int) -> int:
    """Kronecker symbol (a|n)."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    acc = 1
    if n < 0:
        n = -n
        if a < 0:
            acc = -acc
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            acc = -acc
    # Jacobi symbol (a|n), n odd positive
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                acc = -acc
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            acc = -acc
        a %= n
    return acc if n == 1 else 0


def is_fundamental_discriminant(d: int) -> bool:
    if d == 1:
        return True
    if d == 0:
        return False

    def squarefree(x: int) -> bool:
        return all(e == 1 for e in prime_factors(x).values())

    if d % 4 == 1:
        return squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and squarefree(m)
    return False


def kronecker_character(d: int) -> DirichletCharacter:
    """The real primitive character a -> (d|a) of modulus |d|."""
    if not is_fundamental_discriminant(d):
        raise InvalidArgument(f"{d} is not a fundamental discriminant")
    q = abs(d)
    parts = []
    for p, k in sorted(prime_factors(q).items()):
        pk = p ** k
        rest = q // pk
        # CRT lift: u mod p^k, 1 mod the rest
        lift_factor = rest * pow(rest, -1, pk)

        def turn_of(u: int, pk=pk, rest=rest, lift_factor=lift_factor) -> Fraction:
            lifted = (u * lift_factor + (1 - lift_factor)) % (pk * rest)
            return Fraction(0) if kronecker_symbol(d, lifted) == 1 else Fraction(1, 2)

        parts.append(unit_character_from_values(p, k, turn_of))
    return dirichlet_from_parts(parts)


# ---------- character strings ----------

def _parse_factor(text: str) -> Tuple[int, int, List[int], Optional[Fraction]]:
    p = n = None
    gs: List[int] = []
    u = None
    for item in text.split(","):
        key, _, val = item.strip().partition(":")
        key = key.strip()
        if key == "p":
            p = int(val)
        elif key == "n":
            n = int(val)
        elif key == "g":
            gs.append(int(val))
        elif key == "u":
            u = parse_rational(val)
        else:
            raise InvalidArgument(f"unknown key '{key}' in character factor '{text}'")
    if p is None or n is None:
        raise InvalidArgument(f"character factor '{text}' needs both p: and n:")
    return p, n, gs, u


def character_from_spec(spec: str) -> DirichletCharacter:
    """``trivial`` | ``kronecker:<d>`` | ``p:<p>,n:<n>,g:<a>[;...]``."""
    spec = spec.strip()
    if spec in ("", "trivial", "1"):
        return trivial_character()
    if spec.startswith("kronecker:"):
        return kronecker_character(int(spec.split(":", 1)[1]))
    parts = []
    for factor in spec.split(";"):
        p, n, gs, _ = _parse_factor(factor)
        parts.append(build_unit_character(p, n, gs))
    return dirichlet_from_parts(parts)


def local_character_from_spec(spec: str) -> LocalCharacter:
    """Single factor ``p:<p>,n:<n>,g:<a>,u:<a/b>``; n may be 0."""
    p, n, gs, u = _parse_factor(spec)
    return LocalCharacter(build_unit_character(p, n, gs), u or Fraction(0))


# ---------- character sums ----------

def gauss_sum(chi: UnitGroupCharacter) -> CyclotomicSum:
    """tau(chi) = sum_a chi(a) psi(a / p^n) over units a mod p^n."""
    if chi.n < 1 or not chi.is_primitive:
        raise InvalidArgument(f"gauss_sum needs a primitive character mod {chi.p}^{chi.n}")
    mod = chi.modulus
    return CyclotomicSum.from_turns(Fraction(a, mod) + chi.turn(a) for a in units_mod(chi.p, chi.n))


def ramanujan_sum(p: int, m: int, e_x: int) -> Fraction:
    """Average of psi(gamma p^m x) over units gamma, with e_p(x) = e_x."""
    j = m + e_x
    if j >= 0:
        return Fraction(1)
    if j == -1:
        return Fraction(-1, p - 1)
    return Fraction(0)


def dual_char_sum_G(place: "LocalPlaceData", m: int) -> CyclotomicSum:
    """G(m) = sum over alpha of chi(1 + alpha p^(m - n)), alpha in [1, p^n) coprime to p."""
    p, n = place.p, place.n
    if n < 1:
        raise InvalidArgument("dual_char_sum_G needs a ramified place (n >= 1)")
    if m >= 2 * n:
        return CyclotomicSum.constant(p ** (n - 1) * (p - 1))
    shift = Fraction(p) ** (m - n)
    turns = []
    for alpha in units_mod(p, n):
        arg = 1 + alpha * shift
        turns.append(place.chi.turn(arg))
    return CyclotomicSum.from_turns(turns)


def local_components(
    chi: DirichletCharacter,
    primes: Optional[Iterable[int]] = None,
) -> Dict[int, LocalCharacter]:
    """
    Local components chi_p of the Hecke character attached to chi.

    For p | q the unit part is the inverse of the p-part of chi and the
    uniformizer value is the product of the other parts at p; for p not
    dividing q the unit part is trivial and chi_p(p) = chi(p).
    """
    if not chi.is_primitive:
        raise InvalidArgument(f"character of modulus {chi.modulus} is not primitive")
    wanted = sorted(set(primes) if primes is not None else {c.p for c in chi.parts})
    out: Dict[int, LocalCharacter] = {}
    for p in wanted:
        chi_p = chi.part(p)
        if chi_p is None:
            out[p] = LocalCharacter(trivial_unit_character(p, 0), chi.turn(p) or Fraction(0))
            continue
        uniformizer = Fraction(0)
        for other in chi.parts:
            if other.p != p:
                uniformizer += other.turn(p % other.modulus)
        out[p] = LocalCharacter(chi_p.inverse(), uniformizer % 1)
    return out


def sign_turn(chi: DirichletCharacter, sign: Optional[int] = None) -> Fraction:
    s = chi.parity if sign is None else sign
    return Fraction(0) if s == 1 else Fraction(1, 2)


def product_formula_turn(chi: DirichletCharacter, x: RationalLike, sign: Optional[int] = None) -> Fraction:
    """Sum of all local turns at x (archimedean sign included); 0 when the product formula holds."""
    x = Fraction(x)
    if x == 0:
        raise DomainError("product formula at 0")
    primes = set(c.p for c in chi.parts)
    for n in (x.numerator, x.denominator):
        if abs(n) > 1:
            primes |= set(prime_factors(n))
    comps = local_components(chi, primes)
    total = sign_turn(chi, sign) if x < 0 else Fraction(0)
    for p, comp in comps.items():
        total += comp.turn(x)
    return total % 1


def local_character_at(p: int, spec: Optional[str]) -> LocalCharacter:
    """Local character at p from any spec form: trivial, kronecker:<d>, or a single p-factor."""
    spec = (spec or "trivial").strip()
    if spec in ("trivial", "1", ""):
        return LocalCharacter.trivial(p)
    if spec.startswith("kronecker:"):
        return local_components(character_from_spec(spec), [p])[p]
    return local_character_from_spec(spec)
