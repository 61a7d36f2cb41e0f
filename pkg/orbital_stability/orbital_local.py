# orbital_stability/orbital_local.py
"""
Local regular orbital integrals E_p(t) at finite places.

Three evaluators share one normalisation: the value is the sum of the branch
partial sums times 1 / (p^n * Vol(K_bar[m])).

- ``eval_orbital_bruteforce`` enumerates shells (r1, r2), the centre shift k
  and alpha, beta mod p^n, testing p^k * Y in K_p[m] directly.
- ``eval_orbital_cases`` uses the reduced sums S(k), J1, J2 of the
  three regimes k < 0, k = 0 and k > 0.
- ``eval_orbital_unramified`` handles places with n = 0.

Y(alpha, beta, r1, r2, t) = N(alpha p^-n) [[p^r2, p^-r1 t], [p^(r1+r2), 1]] N(beta p^-n),
and the integrand carries conj(chi)(p)^r2 from chi(y) with y = p^r2 * unit.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

from .characters import LocalCharacter
from .cyclotomic import CyclotomicSum
from .errors import DomainError, InvalidArgument, RedirectError
from .padic_core import (
    Matrix2,
    RationalLike,
    is_prime,
    parse_rational,
    projective_K_m_shift,
    residue_mod,
    units_mod,
    valuation,
    vol_K_bar,
)

logger = logging.getLogger(__name__)

UNRAMIFIED = "unramified"
SIGMA_PLUS = "sigma_plus"
SIGMA_MINUS = "sigma_minus"


@dataclass(frozen=True)
class LocalPlaceData:
    p: int
    m: int
    n: int
    chi: LocalCharacter
    omega: Optional[LocalCharacter] = None

    def __post_init__(self):
        if not is_prime(self.p):
            raise InvalidArgument(f"{self.p} is not a prime")
        if self.m < 0 or self.n < 0:
            raise InvalidArgument(f"exponents must be >= 0 (m={self.m}, n={self.n})")
        if self.chi.p != self.p:
            raise InvalidArgument(f"local character at {self.chi.p} attached to place {self.p}")
        if self.n >= 1 and (self.chi.unit_part.n != self.n or not self.chi.unit_part.is_primitive):
            raise InvalidArgument(f"chi must be primitive mod {self.p}^{self.n}")
        if self.n == 0 and self.chi.unit_part.conductor != 0:
            raise InvalidArgument(f"chi is ramified at {self.p} but n = 0")
        if self.omega is not None and self.omega.unit_part.conductor > self.m:
            raise InvalidArgument(
                f"omega conductor exponent {self.omega.unit_part.conductor} exceeds m={self.m}"
            )

    @property
    def classification(self) -> str:
        if self.n == 0:
            return UNRAMIFIED
        return SIGMA_PLUS if self.m >= self.n else SIGMA_MINUS

    @property
    def prefactor(self) -> Fraction:
        """1 / (|tau(chi)|^2 * Vol(K_bar[m])) with |tau|^2 = p^n."""
        return 1 / (Fraction(self.p ** self.n) * vol_K_bar(self.p, self.m))


@dataclass
class BranchTerm:
    k: int
    r1: int
    r2: int
    label: str
    partial: CyclotomicSum

    def to_json(self) -> dict:
        return {"k": self.k, "r1": self.r1, "r2": self.r2, "label": self.label, "partial": self.partial.to_json()}


@dataclass
class OrbitalValue:
    value: CyclotomicSum
    support_hit: bool
    branch_trace: List[BranchTerm] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "value": self.value.to_json(),
            "support_hit": self.support_hit,
            "branch_trace": [b.to_json() for b in self.branch_trace],
        }


# ---------- shared helpers ----------

def _check_t(t: RationalLike) -> Fraction:
    t = parse_rational(t)
    if t in (0, 1):
        raise DomainError(f"orbital integral undefined at t={t}")
    return t


def omega_turn(place: LocalPlaceData, k: int, e22: Fraction) -> Fraction:
    """omega(p)^k * conj(omega)(E22(p^k Y)); zero turn for trivial omega."""
    omega = place.omega
    if omega is None:
        return Fraction(0)
    turn = k * omega.uniformizer_turn
    if omega.unit_part.conductor > 0:
        turn -= omega.unit_turn(e22)
    return turn % 1


def _uniformizer_factor(place: LocalPlaceData, r2: int) -> CyclotomicSum:
    return CyclotomicSum.root_of_unity(-r2 * place.chi.uniformizer_turn)


def _weight_turn(place: LocalPlaceData, alpha: int, beta: int, k: int, e22: Fraction) -> Fraction:
    chi = place.chi
    return chi.unit_turn(alpha) - chi.unit_turn(beta) + omega_turn(place, k, e22)


def _lone_negative_minimum(vals: List[int]) -> bool:
    lo = min(vals)
    return lo < 0 and vals.count(lo) == 1


def _may_be_integral(n: int, k: int, r1: int, r2: int, e: int) -> bool:
    """Ultrametric pre-test on the entries of p^k * Y (all term coefficients are units)."""
    entry_a = [k + r2, k + r1 + r2 - n]
    entry_d = [k, k + r1 + r2 - n]
    entry_b = [k + r2 - n, k + r1 + r2 - 2 * n, k - r1 + e, k - n]
    return not any(_lone_negative_minimum(v) for v in (entry_a, entry_d, entry_b))


def orbit_matrix(p: int, n: int, alpha: int, beta: int, r1: int, r2: int, t: Fraction) -> Matrix2:
    P = Fraction(p)
    core = Matrix2(P ** r2, t / P ** r1, P ** (r1 + r2), Fraction(1))
    return Matrix2.upper_unipotent(alpha / P ** n) @ core @ Matrix2.upper_unipotent(beta / P ** n)


def _branch_label(k: int) -> str:
    if k < 0:
        return "k<0"
    return "k=0" if k == 0 else "k>0"


def _assemble(place: LocalPlaceData, trace: List[BranchTerm], prefactor: Fraction) -> OrbitalValue:
    total = CyclotomicSum.zero()
    for term in trace:
        total = total + term.partial
    return OrbitalValue(total.scale(prefactor), bool(trace), trace)


# ---------- brute force ----------

def eval_orbital_bruteforce(place: LocalPlaceData, t: RationalLike, window_pad: int = 2) -> OrbitalValue:
    t = _check_t(t)
    if place.n == 0:
        raise RedirectError(f"place {place.p} has n = 0; use eval_orbital_unramified")
    p, m, n = place.p, place.m, place.n
    e = valuation(t, p)
    f = valuation(1 - t, p)
    W = m + n + abs(e) + abs(f) + window_pad
    units = units_mod(p, n)
    P = Fraction(p)
    trace: List[BranchTerm] = []
    for r2 in range(-W, W + 1):
        if (r2 + f) % 2:
            continue
        k = -(r2 + f) // 2
        for r1 in range(-W, W + 1):
            if k + r1 + r2 < m or not _may_be_integral(n, k, r1, r2, e):
                continue
            turns = []
            for alpha in units:
                for beta in units:
                    Y = orbit_matrix(p, n, alpha, beta, r1, r2, t)
                    shift = projective_K_m_shift(Y, p, m)
                    if shift is None:
                        continue
                    turns.append(_weight_turn(place, alpha, beta, shift, Y.d * P ** shift))
            if turns:
                partial = CyclotomicSum.from_turns(turns) * _uniformizer_factor(place, r2)
                trace.append(BranchTerm(k, r1, r2, _branch_label(k), partial))
    logger.debug("bruteforce p=%s t=%s window=%s: %d shells hit", p, t, W, len(trace))
    return _assemble(place, trace, place.prefactor)


# ---------- reduced character sums ----------

def charsum_S(place: LocalPlaceData, k: int, t: RationalLike) -> CyclotomicSum:
    """Sum over the hyperbola a'b' = -(t - 1) p^(2k) mod p^(n+k) (regime k <= -1)."""
    t = _check_t(t)
    p, m, n = place.p, place.m, place.n
    if not (max(m - n, 1 - n) <= k <= -1):
        raise InvalidArgument(f"k={k} outside [max(m-n, 1-n), -1] for m={m}, n={n}")
    if valuation(1 - t, p) != -2 * k:
        raise InvalidArgument(f"S(k) needs e_p(1-t) = {-2 * k}, got {valuation(1 - t, p)}")
    level = n + k
    mod_small = p ** level
    mod = p ** n
    lift = p ** (-k)
    gamma = residue_mod((t - 1) * Fraction(p) ** (2 * k), p, level)
    P = Fraction(p)
    turns = []
    for a1 in units_mod(p, level):
        b1 = (-gamma * pow(a1, -1, mod_small)) % mod_small
        alpha = (lift * a1 - 1) % mod
        beta = (lift * b1 - 1) % mod
        e22 = P ** k * (1 + beta)
        turns.append(_weight_turn(place, alpha, beta, k, e22))
    return CyclotomicSum.from_turns(turns)


def charsum_J1(place: LocalPlaceData, r1: int, t: RationalLike) -> CyclotomicSum:
    """k = 0 regime: r2 = -e_p(1-t) and the congruence (A beta + p^(n-r1) t + alpha) = 0 mod p^n."""
    t = _check_t(t)
    p, m, n = place.p, place.m, place.n
    e = valuation(t, p)
    f = valuation(1 - t, p)
    r2 = -f
    if r2 < 0 or not (max(n, m) + f <= r1 <= e + n):
        return CyclotomicSum.zero()
    mod = p ** n
    P = Fraction(p)
    t_term = residue_mod(P ** (n - r1) * t, p, n)
    d_shift = p ** (r1 + r2 - n)
    a_shift = p ** r2
    turns = []
    for beta in units_mod(p, n):
        D = 1 + beta * d_shift
        rhs = -(a_shift * beta + t_term) % mod
        if D % p:
            alpha = rhs * pow(D, -1, mod) % mod
            if alpha % p:
                turns.append(_weight_turn(place, alpha, beta, 0, Fraction(D)))
            continue
        for alpha in units_mod(p, n):
            if (alpha * D - rhs) % mod == 0:
                turns.append(_weight_turn(place, alpha, beta, 0, Fraction(D)))
    return CyclotomicSum.from_turns(turns)


def charsum_J2(place: LocalPlaceData, r1: int, r2: int, k: int, t: RationalLike) -> CyclotomicSum:
    """k >= 1 regime: (p^(k+r2) + alpha)(beta + p^k) = p^(2k+r2) - t p^(n+k-r1) mod p^n."""
    t = _check_t(t)
    p, m, n = place.p, place.m, place.n
    e = valuation(t, p)
    f = valuation(1 - t, p)
    admissible = (
        k >= 1
        and r2 == -2 * k - f
        and k + r2 >= 0
        and k + r1 + r2 == n
        and m <= n
        and r1 <= k + n + e
    )
    if not admissible:
        return CyclotomicSum.zero()
    mod = p ** n
    P = Fraction(p)
    target = (p ** (2 * k + r2) - residue_mod(t * P ** (n + k - r1), p, n)) % mod
    turns = []
    for beta in units_mod(p, n):
        s = (beta + p ** k) % mod
        alpha = (target * pow(s, -1, mod) - p ** (k + r2)) % mod
        if alpha % p == 0:
            continue
        turns.append(_weight_turn(place, alpha, beta, k, Fraction(p ** k + beta)))
    return CyclotomicSum.from_turns(turns)


# ---------- case analysis ----------

def _boundary_term(place: LocalPlaceData) -> CyclotomicSum:
    """k = -n, m = 0: the single pair alpha = beta = -1, where p^k * D = 1."""
    n = place.n
    minus_one = place.p ** n - 1
    return CyclotomicSum.root_of_unity(_weight_turn(place, minus_one, minus_one, -n, Fraction(1)))


def eval_orbital_cases(place: LocalPlaceData, t: RationalLike) -> OrbitalValue:
    t = _check_t(t)
    if place.n == 0:
        raise RedirectError(f"place {place.p} has n = 0; use eval_orbital_unramified")
    p, m, n = place.p, place.m, place.n
    e = valuation(t, p)
    f = valuation(1 - t, p)
    trace: List[BranchTerm] = []

    def record(k: int, r1: int, r2: int, label: str, partial: CyclotomicSum) -> None:
        if not partial.is_exact_zero():
            trace.append(BranchTerm(k, r1, r2, label, partial * _uniformizer_factor(place, r2)))

    # k <= -1: r1 = n, r2 = 0, e(1-t) = -2k
    for k in range(max(m - n, -n), 0):
        if f != -2 * k:
            continue
        if k == -n:
            record(k, n, 0, "k=-n", _boundary_term(place))
        else:
            record(k, n, 0, "k<0", charsum_S(place, k, t))

    # k = 0: r2 = -e(1-t) >= 0
    if f <= 0:
        for r1 in range(max(n, m) + f, e + n + 1):
            record(0, r1, -f, "k=0", charsum_J1(place, r1, t))

    # k >= 1: e(t) = e(1-t) <= -1, r1 forced to n + k + e
    if f <= -1 and m <= n:
        for k in range(1, -f + 1):
            r2 = -2 * k - f
            r1 = n + k + e
            record(k, r1, r2, "k>0", charsum_J2(place, r1, r2, k, t))

    logger.debug("cases p=%s t=%s (e=%s, f=%s): %d branch terms", p, t, e, f, len(trace))
    return _assemble(place, trace, place.prefactor)


# ---------- unramified places ----------

def eval_orbital_unramified(place: LocalPlaceData, t: RationalLike) -> OrbitalValue:
    t = _check_t(t)
    if place.n != 0:
        raise RedirectError(f"place {place.p} is ramified (n={place.n}); use eval_orbital_cases")
    p, m = place.p, place.m
    e = valuation(t, p)
    f = valuation(1 - t, p)
    W = m + abs(e) + abs(f) + 2
    P = Fraction(p)
    trace: List[BranchTerm] = []
    for r2 in range(-W, W + 1):
        if (r2 + f) % 2:
            continue
        k = -(r2 + f) // 2
        for r1 in range(-W, W + 1):
            shell = Matrix2(P ** r2, t / P ** r1, P ** (r1 + r2), Fraction(1))
            if projective_K_m_shift(shell, p, m) != k:
                continue
            turn = -r2 * place.chi.uniformizer_turn + omega_turn(place, k, P ** k)
            trace.append(BranchTerm(k, r1, r2, _branch_label(k), CyclotomicSum.root_of_unity(turn)))
    return _assemble(place, trace, 1 / vol_K_bar(p, m))


def vanishing_predicted(place: LocalPlaceData, t: RationalLike) -> bool:
    """True when t lies outside every nonvanishing case of the place's class."""
    t = _check_t(t)
    p, m, n = place.p, place.m, place.n
    e = valuation(t, p)
    f = valuation(1 - t, p)
    if place.classification == SIGMA_MINUS:
        hyperbola = any(f == -2 * k for k in range(m - n, 0))
        return not (hyperbola or e - f >= 0 or e <= -1)
    if place.classification == SIGMA_PLUS:
        return not ((e <= -1 and m == n) or e - f >= m - n)
    return not (f <= 0 and e - f >= m)


def make_place(
    p: int,
    m: int,
    chi: Optional[LocalCharacter] = None,
    omega: Optional[LocalCharacter] = None,
) -> LocalPlaceData:
    chi = chi or LocalCharacter.trivial(p)
    return LocalPlaceData(p, m, chi.unit_part.n if chi.unit_part.conductor else 0, chi, omega)


def derived_t_grid(p: int, n: int, size: int = 200) -> List[Fraction]:
    """
    Sorted sample of {a/b : |a|, |b| <= p^(2n+2), b | p^(2n+2)} minus {0, 1}.

    Points p^v * w and 1 - p^v * w for small units w come first so that every
    valuation pattern of t and 1 - t is hit; a strided sweep of the full grid
    tops the sample up to ``size``.
    """
    J = 2 * n + 2
    H = p ** J
    P = Fraction(p)

    def member(t: Fraction) -> bool:
        return t not in (0, 1) and abs(t.numerator) <= H and H % t.denominator == 0

    picked = set()
    for v in range(-J, J + 1):
        for w in (w for w in range(-6, 7) if w % p):
            for t in (P ** v * w, 1 - P ** v * w):
                if member(t):
                    picked.add(t)
    width = 2 * H + 1
    total = width * (J + 1)
    stride = max(1, total // size)
    idx = 0
    while len(picked) < size and idx < total:
        j, a = divmod(idx, width)
        t = Fraction(a - H, p ** j)
        if member(t):
            picked.add(t)
        idx += stride
    return sorted(picked)
