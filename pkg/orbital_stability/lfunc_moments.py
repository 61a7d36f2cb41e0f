# orbital_stability/lfunc_moments.py
"""
Central values L(1/2, f x chi) of twisted holomorphic newforms and their
second moment over a newform family.

With C = N q^2, A = sqrt(C) / (2 pi) and kappa = (k - 1) / 2 the completed
function is Lambda(s) = A^s Gamma(s + kappa) L(s), and Lambda(s) = eps * conj(Lambda)(1 - s).
Splitting its Mellin integral at y = rho gives

    Lambda(s) = sum b_n (A/n)^s Gamma(s + kappa, n rho / A)
              + eps * sum conj(b_n) (A/n)^(1-s) Gamma(1 - s + kappa, n / (A rho)),

with b_n = a_n chi(n) / n^kappa.  At s = 1/2 both incomplete gammas have the
integer parameter k/2.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from .characters import DirichletCharacter
from .errors import FitError, InvalidArgument, UnsupportedError
from .newforms import NewformData
from .reports import Report
from .scan import ordered_map

logger = logging.getLogger(__name__)

ROOT_FIT_POINTS = (0.5, 0.6)
ROOT_FIT_SPLITS = (1.0, 1.2)
ROOT_FIT_MIN_DET = 1e-12
ROOT_UNIT_TOL = 1e-8
ROOT_ROUND_TOL = 1e-6
DEFAULT_TOL = 1e-8

MOMENT_COLUMNS = ["N", "k", "q", "label", "L_re", "L_im", "absL2"]
MOMENT_DTYPES = {"N": "int", "k": "int", "q": "int", "label": "str", "L_re": "float", "L_im": "float", "absL2": "float"}


def upper_gamma(a: float, x: np.ndarray) -> np.ndarray:
    """Gamma(a, x); finite sum (a-1)! e^-x sum_{j<a} x^j / j! for integer a >= 1."""
    x = np.asarray(x, dtype=float)
    if float(a).is_integer() and a >= 1:
        a = int(a)
        term = np.ones_like(x)
        total = np.ones_like(x)
        for j in range(1, a):
            term = term * x / j
            total = total + term
        return math.factorial(a - 1) * np.exp(-x) * total
    return gammaincc(a, x) * gamma_fn(a)


@dataclass
class LValueResult:
    label: str
    q: int
    value: complex
    truncation: int
    afe_discrepancy: float
    root_number: complex
    flagged: bool = False

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "q": self.q,
            "L_re": self.value.real,
            "L_im": self.value.imag,
            "truncation": self.truncation,
            "afe_discrepancy": self.afe_discrepancy,
            "root_number_re": self.root_number.real,
            "root_number_im": self.root_number.imag,
            "flagged": self.flagged,
        }


# ---------- setup ----------

def _check_twist(f: NewformData, chi: DirichletCharacter) -> None:
    if f.weight % 2:
        raise UnsupportedError(f"{f.label}: odd weight {f.weight} is not supported")
    if math.gcd(chi.modulus, f.level) != 1:
        raise UnsupportedError(f"{f.label}: gcd(q={chi.modulus}, N={f.level}) > 1 is not supported")
    if not chi.is_primitive:
        raise InvalidArgument(f"character of modulus {chi.modulus} is not primitive")
    if not chi.is_real:
        raise UnsupportedError(f"only trivial or quadratic characters are supported (q={chi.modulus})")


def default_terms(f: NewformData, chi: DirichletCharacter) -> int:
    return int(math.ceil(10 * math.sqrt(f.level * chi.modulus ** 2))) + 25


def _require_terms(f: NewformData, needed: int) -> None:
    if f.K < needed:
        raise InvalidArgument(f"{f.label}: {needed} coefficients required (K >= {needed}), only {f.K} given")


def twisted_coefficients(f: NewformData, chi: DirichletCharacter, terms: int) -> np.ndarray:
    """b_n = a_n chi(n) n^-(k-1)/2 for n = 1..terms."""
    kappa = (f.weight - 1) / 2
    n = np.arange(1, terms + 1, dtype=float)
    a = np.array([float(f.a(i)) for i in range(1, terms + 1)])
    chi_vals = np.array([chi.value(i) for i in range(1, terms + 1)], dtype=complex)
    return a * chi_vals / n ** kappa


def _split_sums(b: np.ndarray, A: float, kappa: float, s: float, rho: float) -> Tuple[complex, complex]:
    n = np.arange(1, len(b) + 1, dtype=float)
    ratio = A / n
    direct = np.sum(b * ratio ** s * upper_gamma(s + kappa, n * rho / A))
    mirror = np.sum(np.conj(b) * ratio ** (1 - s) * upper_gamma(1 - s + kappa, n / (A * rho)))
    return complex(direct), complex(mirror)


def _geometry(f: NewformData, chi: DirichletCharacter) -> Tuple[float, float]:
    C = f.level * chi.modulus ** 2
    return math.sqrt(C) / (2 * math.pi), (f.weight - 1) / 2


# ---------- root number ----------

def root_number_fit(
    f: NewformData,
    chi: DirichletCharacter,
    terms: Optional[int] = None,
    points: Sequence[float] = ROOT_FIT_POINTS,
    splits: Sequence[float] = ROOT_FIT_SPLITS,
) -> complex:
    """
    eps from requiring the completed function to be independent of the split
    point, solved at each s in ``points``; the estimates must agree and have
    modulus one.
    """
    _check_twist(f, chi)
    terms = terms or default_terms(f, chi)
    _require_terms(f, terms)
    A, kappa = _geometry(f, chi)
    b = twisted_coefficients(f, chi, terms)
    rho1, rho2 = splits
    estimates = []
    for s in points:
        p1, q1 = _split_sums(b, A, kappa, s, rho1)
        p2, q2 = _split_sums(b, A, kappa, s, rho2)
        det = q1 - q2
        if abs(det) < ROOT_FIT_MIN_DET:
            raise FitError(
                f"{f.label} x q={chi.modulus}: root-number fit ill-conditioned at s={s} "
                f"(|det|={abs(det):.3g}); supply more coefficients"
            )
        estimates.append((p2 - p1) / det)
    eps = estimates[0]
    for other in estimates[1:]:
        if abs(other - eps) > ROOT_ROUND_TOL:
            raise FitError(f"{f.label} x q={chi.modulus}: root-number estimates disagree ({eps} vs {other})")
    if abs(abs(eps) - 1) > ROOT_UNIT_TOL:
        raise FitError(f"{f.label} x q={chi.modulus}: |eps| = {abs(eps):.12g} is not 1")
    for sign in (1, -1):
        if abs(eps - sign) < ROOT_ROUND_TOL:
            return complex(sign)
    return eps


# ---------- central value ----------

def _completed_central(b: np.ndarray, A: float, kappa: float, eps: complex) -> complex:
    direct, mirror = _split_sums(b, A, kappa, 0.5, 1.0)
    return direct + eps * mirror


def central_value_afe(
    f: NewformData,
    chi: DirichletCharacter,
    terms: Optional[int] = None,
    tol: float = DEFAULT_TOL,
    root_number: Optional[complex] = None,
) -> LValueResult:
    _check_twist(f, chi)
    terms = terms or default_terms(f, chi)
    _require_terms(f, 2 * terms)
    eps = root_number if root_number is not None else root_number_fit(f, chi, terms)
    A, kappa = _geometry(f, chi)
    b_long = twisted_coefficients(f, chi, 2 * terms)
    lam = _completed_central(b_long[:terms], A, kappa, eps)
    lam_long = _completed_central(b_long, A, kappa, eps)
    discrepancy = abs(lam - lam_long)
    value = lam / (math.sqrt(A) * math.gamma(f.weight / 2))
    flagged = discrepancy >= tol
    if flagged:
        logger.warning("%s x q=%s: AFE discrepancy %.3g above tolerance %.3g", f.label, chi.modulus, discrepancy, tol)
    return LValueResult(f.label, chi.modulus, complex(value), terms, float(discrepancy), complex(eps), flagged)


# ---------- second moment ----------

@dataclass
class MomentReport:
    N: int
    k: int
    q: int
    results: List[LValueResult] = field(default_factory=list)
    threshold_c: float = 1.0

    @property
    def S(self) -> float:
        return float(sum(abs(r.value) ** 2 for r in self.results))

    @property
    def kN(self) -> float:
        return float(self.k * self.N)

    @property
    def sqrt_k_q(self) -> float:
        return math.sqrt(self.k) * self.q

    @property
    def indicator(self) -> int:
        return int(self.N <= self.threshold_c * self.q ** 2 * math.gcd(self.N, self.q))

    @property
    def fitted_constant(self) -> float:
        scale = self.kN + self.sqrt_k_q * self.indicator
        return self.S / scale if scale else 0.0

    def rows(self) -> List[Dict[str, object]]:
        return [
            {
                "N": self.N,
                "k": self.k,
                "q": self.q,
                "label": r.label,
                "L_re": r.value.real,
                "L_im": r.value.imag,
                "absL2": abs(r.value) ** 2,
            }
            for r in self.results
        ]

    def summary(self) -> Dict[str, object]:
        return {
            "N": self.N,
            "k": self.k,
            "q": self.q,
            "forms": len(self.results),
            "S": self.S,
            "kN": self.kN,
            "sqrt_k_q": self.sqrt_k_q,
            "indicator": self.indicator,
            "threshold_c": self.threshold_c,
            "fitted_constant": self.fitted_constant,
            "max_afe_discrepancy": max((r.afe_discrepancy for r in self.results), default=0.0),
            "root_numbers": {r.label: [r.root_number.real, r.root_number.imag] for r in self.results},
        }

    def as_report(self) -> Report:
        return Report("moment", MOMENT_COLUMNS, self.rows(), self.summary(), MOMENT_DTYPES)


def _central_for(chi: DirichletCharacter, terms: Optional[int], tol: float, f: NewformData) -> LValueResult:
    return central_value_afe(f, chi, terms, tol)


def second_moment(
    forms: Sequence[NewformData],
    chi: DirichletCharacter,
    threshold_c: float = 1.0,
    terms: Optional[int] = None,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> MomentReport:
    """Sum of |L(1/2, f x chi)|^2 over ``forms`` (all of one level and weight); an empty family gives an empty report."""
    if not forms:
        return MomentReport(0, 0, chi.modulus)
    keys = {(f.level, f.weight) for f in forms}
    if len(keys) != 1:
        raise InvalidArgument(f"forms span several (level, weight) pairs: {sorted(keys)}")
    N, k = keys.pop()
    ordered = sorted(forms, key=lambda f: f.label)
    results = ordered_map(partial(_central_for, chi, terms, tol), ordered, workers)
    return MomentReport(N, k, chi.modulus, results, threshold_c)


def moment_scan(
    forms: Sequence[NewformData],
    characters: Sequence[Tuple[str, DirichletCharacter]],
    threshold_c: float = 1.0,
    terms: Optional[int] = None,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> Report:
    """Moment reports over every (level, weight) family and coprime character; one combined report."""
    families: Dict[Tuple[int, int], List[NewformData]] = {}
    for f in forms:
        families.setdefault((f.level, f.weight), []).append(f)
    rows: List[Dict[str, object]] = []
    per_key: Dict[str, object] = {}
    constants = []
    for (N, k), family in sorted(families.items()):
        for name, chi in characters:
            if math.gcd(N, chi.modulus) != 1:
                logger.info("skipping N=%s with %s: gcd(q, N) > 1", N, name)
                continue
            report = second_moment(family, chi, threshold_c, terms, tol, workers)
            rows.extend(report.rows())
            summary = report.summary()
            summary["character"] = name
            per_key[f"N={N},k={k},chi={name}"] = summary
            if report.fitted_constant > 0:
                constants.append(report.fitted_constant)
    spread = max(constants) / min(constants) if constants else None
    summary = {"families": per_key, "fitted_constant_spread": spread}
    return Report("moment", MOMENT_COLUMNS, rows, summary, MOMENT_DTYPES)
