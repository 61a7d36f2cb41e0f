# orbital_stability/geometric_global.py
"""
Global assembly over Q: ramification profiles, the support lattice of
u = t / (t - 1), the finite part of the regular orbital sum and its
stability scan, plus the local small-cell and dual terms.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .characters import (
    DirichletCharacter,
    dual_char_sum_G,
    local_components,
    ramanujan_sum,
)
from .cyclotomic import CyclotomicSum
from .errors import InvalidArgument
from .orbital_local import (
    LocalPlaceData,
    OrbitalValue,
    eval_orbital_bruteforce,
    eval_orbital_cases,
    eval_orbital_unramified,
    omega_turn,
)
from .padic_core import (
    Matrix2,
    RationalLike,
    additive_turn,
    parse_rational,
    prime_factors,
    projective_K_m_shift,
    units_mod,
    valuation,
    vol_K_bar,
)
from .reports import Report
from .scan import ordered_map

logger = logging.getLogger(__name__)

SHARP = "sharp"
LATTICE = "lattice"


@dataclass(frozen=True)
class GlobalSetup:
    M: int
    chi: DirichletCharacter
    m_exp: Tuple[Tuple[int, int], ...]
    n_exp: Tuple[Tuple[int, int], ...]
    sigma_plus: FrozenSet[int]
    sigma_minus: FrozenSet[int]
    U_max: Fraction = Fraction(1)
    sigma_plus_rule: str = SHARP

    @property
    def q(self) -> int:
        return self.chi.modulus

    def m_at(self, p: int) -> int:
        return dict(self.m_exp).get(p, 0)

    def n_at(self, p: int) -> int:
        return dict(self.n_exp).get(p, 0)

    def place(self, p: int) -> LocalPlaceData:
        return _place_for(self, p)

    @property
    def places(self) -> List[LocalPlaceData]:
        primes = sorted(set(dict(self.m_exp)) | set(dict(self.n_exp)))
        return [self.place(p) for p in primes]

    @property
    def lattice_step(self) -> Fraction:
        """R / N^2 with R over primes of M away from q and N over the Sigma^- primes."""
        R = 1
        for p, m in self.m_exp:
            if self.n_at(p) == 0:
                R *= p ** m
        N = 1
        for p in self.sigma_minus:
            N *= p ** (self.n_at(p) - self.m_at(p))
        return Fraction(R, N * N)


def _place_for(setup: GlobalSetup, p: int) -> LocalPlaceData:
    chi_p = local_components(setup.chi, [p])[p]
    return LocalPlaceData(p, setup.m_at(p), setup.n_at(p), chi_p)


def ramification_profile(
    M: int,
    chi: DirichletCharacter,
    U_max: RationalLike = 1,
    sigma_plus_rule: str = SHARP,
) -> GlobalSetup:
    if M < 1:
        raise InvalidArgument(f"level M={M} must be >= 1")
    if not chi.is_primitive:
        raise InvalidArgument(f"character of modulus {chi.modulus} is not primitive")
    if sigma_plus_rule not in (SHARP, LATTICE):
        raise InvalidArgument(f"unknown Sigma+ rule '{sigma_plus_rule}'")
    U_max = parse_rational(U_max)
    if U_max <= 0:
        raise InvalidArgument(f"U_max={U_max} must be positive")
    m_exp = tuple(sorted(prime_factors(M).items())) if M > 1 else ()
    n_exp = tuple(sorted((c.p, c.n) for c in chi.parts))
    m_map = dict(m_exp)
    plus = frozenset(p for p, n in n_exp if m_map.get(p, 0) >= n)
    minus = frozenset(p for p, n in n_exp if m_map.get(p, 0) < n)
    return GlobalSetup(M, chi, m_exp, n_exp, plus, minus, U_max, sigma_plus_rule)


# ---------- support lattice ----------

@dataclass
class SupportElement:
    u: Fraction
    t: Fraction
    local_values: Dict[int, OrbitalValue] = field(default_factory=dict)


def _passes_sigma_plus(setup: GlobalSetup, u: Fraction) -> bool:
    for p in setup.sigma_plus:
        floor = setup.m_at(p) - setup.n_at(p) if setup.sigma_plus_rule == SHARP else 0
        if valuation(u, p) < floor:
            return False
    return True


def support_set(setup: GlobalSetup, U_max: Optional[RationalLike] = None) -> List[SupportElement]:
    """u = j * R / N^2 with 0 < |u| <= U_max, u != 1, filtered at Sigma^+; ordered by u."""
    U = setup.U_max if U_max is None else parse_rational(U_max)
    step = setup.lattice_step
    jmax = math.floor(U / step)
    out = []
    for j in range(-jmax, jmax + 1):
        u = j * step
        if u == 0 or u == 1 or not _passes_sigma_plus(setup, u):
            continue
        out.append(SupportElement(u, u / (u - 1)))
    return out


def relevant_primes(setup: GlobalSetup, t: Fraction) -> List[int]:
    primes = set(dict(setup.m_exp)) | set(dict(setup.n_exp))
    for value in (t.numerator, (1 - t).numerator, t.denominator):
        if abs(value) > 1:
            primes |= set(prime_factors(value))
    return sorted(primes)


def local_orbital(setup: GlobalSetup, p: int, t: Fraction, evaluator: str = "cases") -> OrbitalValue:
    place = setup.place(p)
    if place.n == 0:
        return eval_orbital_unramified(place, t)
    if evaluator == "bruteforce":
        return eval_orbital_bruteforce(place, t)
    return eval_orbital_cases(place, t)


def _element_product(setup: GlobalSetup, evaluator: str, element: SupportElement) -> SupportElement:
    for p in relevant_primes(setup, element.t):
        value = local_orbital(setup, p, element.t, evaluator)
        element.local_values[p] = value
        if value.value.is_exact_zero():
            break
    return element


def element_value(element: SupportElement) -> CyclotomicSum:
    product = CyclotomicSum.one()
    for p in sorted(element.local_values):
        product = product * element.local_values[p].value
        if product.is_exact_zero():
            return CyclotomicSum.zero()
    return product


@dataclass
class RegularOrbitalResult:
    total: CyclotomicSum
    total_complex: complex
    abs_sum: float
    support: List[SupportElement]
    row: Dict[str, object]


def regular_orbital_finite(
    setup: GlobalSetup,
    U_max: Optional[RationalLike] = None,
    evaluator: str = "cases",
    workers: int = 1,
) -> RegularOrbitalResult:
    """Finite part of the regular orbital sum: sum over the support of the product of local E_p(t)."""
    support = support_set(setup, U_max)
    support = ordered_map(partial(_element_product, setup, evaluator), support, workers)
    total = CyclotomicSum.zero()
    abs_sum = 0.0
    nonzero = 0
    for element in support:
        value = element_value(element)
        if not value.is_exact_zero():
            nonzero += 1
            abs_sum += abs(value)
            total = total + value
    z = total.to_complex() if not total.is_exact_zero() else 0j
    g = math.gcd(setup.M, setup.q)
    U = setup.U_max if U_max is None else parse_rational(U_max)
    row = {
        "M": setup.M,
        "q": setup.q,
        "gcd": g,
        "support_size": len(support),
        "nonzero_terms": nonzero,
        "empty": not support,
        "finite_part_re": z.real,
        "finite_part_im": z.imag,
        "finite_part_abs": abs_sum,
        "bound": float(setup.q ** 2 * g * U),
        "rule": setup.sigma_plus_rule,
    }
    return RegularOrbitalResult(total, z, abs_sum, support, row)


# ---------- stability scan ----------

STABILITY_COLUMNS = [
    "M", "q", "gcd", "support_size", "nonzero_terms", "empty",
    "finite_part_re", "finite_part_im", "finite_part_abs", "bound", "rule",
]
STABILITY_DTYPES = {
    "M": "int", "q": "int", "gcd": "int", "support_size": "int", "nonzero_terms": "int",
    "empty": "bool", "finite_part_re": "float", "finite_part_im": "float",
    "finite_part_abs": "float", "bound": "float", "rule": "str",
}


@dataclass
class StabilityReport:
    rows: List[Dict[str, object]]
    summary: Dict[str, object]

    def as_report(self) -> Report:
        return Report("stability", STABILITY_COLUMNS, self.rows, self.summary, STABILITY_DTYPES)


def _stability_row(chi: DirichletCharacter, U_max: Fraction, rule: str, evaluator: str, M: int) -> Dict[str, object]:
    setup = ramification_profile(M, chi, U_max, rule)
    return regular_orbital_finite(setup, evaluator=evaluator).row


def stability_threshold_scan(
    chi: DirichletCharacter,
    M_range: Iterable[int],
    U_max: RationalLike = 1,
    sigma_plus_rule: str = SHARP,
    evaluator: str = "cases",
    workers: int = 1,
) -> StabilityReport:
    U = parse_rational(U_max)
    Ms = list(M_range)
    logger.info("stability scan q=%s over %d levels, U_max=%s", chi.modulus, len(Ms), U)
    rows = ordered_map(partial(_stability_row, chi, U, sigma_plus_rule, evaluator), Ms, workers)
    return StabilityReport(rows, summarize_stability(rows, chi.modulus, U))


def summarize_stability(rows: Sequence[Dict[str, object]], q: int, U_max: Fraction) -> Dict[str, object]:
    classes: Dict[int, List[Dict[str, object]]] = {}
    for row in rows:
        classes.setdefault(int(row["gcd"]), []).append(row)
    summary: Dict[str, object] = {"q": q, "U_max": str(U_max), "classes": {}}
    for g, members in sorted(classes.items()):
        members = sorted(members, key=lambda r: r["M"])
        nonempty = [r["M"] for r in members if not r["empty"]]
        last_nonempty = max(nonempty) if nonempty else 0
        # monotone: no non-empty level after the first empty one
        monotone = True
        first_empty_seen = False
        for r in members:
            if r["empty"]:
                first_empty_seen = True
            elif first_empty_seen:
                monotone = False
        bound = q * q * g * U_max
        summary["classes"][str(g)] = {
            "levels": len(members),
            "empirical_threshold": last_nonempty,
            "bound": str(bound),
            "monotone": monotone,
            "bound_holds": all(r["empty"] for r in members if r["M"] > bound),
        }
    return summary


# ---------- small cell ----------

@dataclass(frozen=True)
class ScaledPower:
    """coefficient * base**exponent with exact cyclotomic coefficient."""
    coefficient: CyclotomicSum
    base: int
    exponent: Fraction

    def to_complex(self) -> complex:
        return self.coefficient.to_complex() * float(self.base) ** float(self.exponent)

    def equals(self, other: "ScaledPower") -> bool:
        zero = CyclotomicSum.zero()
        a_zero, b_zero = self.coefficient.equals(zero), other.coefficient.equals(zero)
        if a_zero or b_zero:
            return a_zero and b_zero
        return (
            self.base == other.base
            and self.exponent == other.exponent
            and self.coefficient.equals(other.coefficient)
        )

    def to_json(self) -> dict:
        return {"coefficient": self.coefficient.to_json(), "base": self.base, "exponent": str(self.exponent)}


def _chi_minus_one(place: LocalPlaceData) -> int:
    if place.n == 0:
        return 1
    return 1 if place.chi.unit_turn(-1) == 0 else -1


def small_cell_local_eval(place: LocalPlaceData, e_x: int, s: RationalLike) -> ScaledPower:
    s = parse_rational(s)
    if s <= 0:
        raise InvalidArgument(f"s={s} must be positive")
    inv_vol = 1 / vol_K_bar(place.p, place.m)
    if place.n >= 1:
        coeff = _chi_minus_one(place) * inv_vol if e_x == 0 else Fraction(0)
        return ScaledPower(CyclotomicSum.constant(coeff), place.p, Fraction(0))
    coeff = inv_vol if e_x >= 0 else Fraction(0)
    return ScaledPower(CyclotomicSum.constant(coeff), place.p, -e_x * (1 + 2 * s))


def small_cell_bruteforce(place: LocalPlaceData, e_x: int, s: RationalLike) -> ScaledPower:
    """Shell sum of the small-cell integrand at |x| = p^-e_x; the b-integral is done per coset."""
    s = parse_rational(s)
    p, m, n = place.p, place.m, place.n
    P = Fraction(p)
    x = P ** e_x
    W = m + n + abs(e_x) + 2
    units = units_mod(p, n)
    phi = len(units)
    weights: Dict[Fraction, Fraction] = {}
    base_weight = 1 / (Fraction(p ** n) * vol_K_bar(p, m) * phi)
    for r in range(-W, W + 1):
        k = projective_K_m_shift(Matrix2(P ** r, Fraction(0), Fraction(0), Fraction(1)), p, m)
        if k is None or e_x < k:
            continue
        w = base_weight * P ** k
        for u in units:
            y = P ** r * u
            y_turn = -(r * place.chi.uniformizer_turn + place.chi.unit_turn(u))
            for alpha in units:
                for beta in units:
                    c0 = -(y * beta + alpha) / P ** n
                    turn = (
                        place.chi.unit_turn(alpha) - place.chi.unit_turn(beta) + y_turn
                        + additive_turn(x * c0, p) + omega_turn(place, k, P ** k)
                    ) % 1
                    weights[turn] = weights.get(turn, Fraction(0)) + w
    total = CyclotomicSum.zero()
    for turn, w in sorted(weights.items()):
        total = total + CyclotomicSum.root_of_unity(turn).scale(w)
    return ScaledPower(total, p, -e_x * (1 + 2 * s))


# ---------- dual term ----------

def dual_kernel_eval(place: LocalPlaceData, e_x: int, cutoff: Optional[int] = None) -> CyclotomicSum:
    """
    J(x) = chi(-1) / (p^n Vol zeta_p(1)) * sum_{m >= m_v} p^-m G(m) R(m, x).

    Terms below max(m_v, -e_x - 1) vanish; from max(2n, -e_x, m_v) on G is
    phi(p^n) and R = 1, so that tail is summed in closed form.  ``cutoff``
    moves the start of the closed tail further out.
    """
    p, m_v, n = place.p, place.m, place.n
    if n < 1:
        raise InvalidArgument("dual_kernel_eval needs a ramified place (n >= 1)")
    P = Fraction(p)
    start = max(m_v, -e_x - 1)
    tail_start = max(2 * n, -e_x, m_v, start, cutoff or 0)
    total = CyclotomicSum.zero()
    for m in range(start, tail_start):
        r = ramanujan_sum(p, m, e_x)
        if r:
            total = total + dual_char_sum_G(place, m).scale(r / P ** m)
    phi = p ** (n - 1) * (p - 1)
    tail = Fraction(phi) / P ** tail_start / (1 - 1 / P)
    total = total + CyclotomicSum.constant(tail)
    zeta_inv = 1 - 1 / P
    return total.scale(Fraction(_chi_minus_one(place)) * zeta_inv / (P ** n * vol_K_bar(p, m_v)))


def dual_support_check(place: LocalPlaceData, grid: Iterable[Tuple[int, int]]) -> Dict[Tuple[int, int], bool]:
    """Whether some alpha, beta and units make z N(a p^-n) [[1,0],[b,1]] diag(y,1) N(b' p^-n) lie in K_p[m].

    Unit parts of y and b run over all residues mod p^n.
    """
    p, m, n = place.p, place.m, place.n
    P = Fraction(p)
    units = units_mod(p, n)
    residues = units_mod(p, max(n, 1))
    table: Dict[Tuple[int, int], bool] = {}
    for e_y, e_b in grid:
        member = False
        for gy in residues:
            y = P ** e_y * gy
            for gb in residues:
                lower = Matrix2(y, Fraction(0), P ** e_b * gb * y, Fraction(1))
                for alpha in units:
                    left = Matrix2.upper_unipotent(alpha / P ** n) @ lower
                    for beta in units:
                        X = left @ Matrix2.upper_unipotent(beta / P ** n)
                        if projective_K_m_shift(X, p, m) is not None:
                            member = True
                            break
                    if member:
                        break
                if member:
                    break
            if member:
                break
        table[(e_y, e_b)] = member
    return table


def dual_support_consistent(place: LocalPlaceData, table: Dict[Tuple[int, int], bool]) -> bool:
    return all(e_y == 0 and e_b >= place.m for (e_y, e_b), member in table.items() if member)


# ---------- global products of the irregular terms ----------

def global_small_cell(setup: GlobalSetup, x: RationalLike, s: RationalLike) -> Tuple[Dict[int, ScaledPower], complex]:
    """Local small-cell factors at p | M q num(x) den(x); other places contribute 1."""
    x = parse_rational(x)
    primes = set(dict(setup.m_exp)) | set(dict(setup.n_exp))
    for value in (x.numerator, x.denominator):
        if abs(value) > 1:
            primes |= set(prime_factors(value))
    factors = {p: small_cell_local_eval(setup.place(p), valuation(x, p), s) for p in sorted(primes)}
    product = 1 + 0j
    for value in factors.values():
        product *= value.to_complex()
    return factors, product


def global_dual_kernel(setup: GlobalSetup, x: RationalLike) -> Tuple[Dict[int, CyclotomicSum], complex]:
    """Dual kernel factors at the ramified primes p | q."""
    x = parse_rational(x)
    factors = {p: dual_kernel_eval(setup.place(p), valuation(x, p)) for p, _ in setup.n_exp}
    product = 1 + 0j
    for value in factors.values():
        product *= value.to_complex()
    return factors, product
