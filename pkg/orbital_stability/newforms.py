# orbital_stability/newforms.py
"""
Newform coefficient data: line-delimited JSON ingestion, eta-product
q-expansions as an independent coefficient source, and Hecke relation checks.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import HeckeViolationError, InvalidArgument, NewformParseError
from .padic_core import is_prime, prime_factors

logger = logging.getLogger(__name__)

EtaSpec = Sequence[Tuple[int, int]]

# label -> (level, weight, eta spec); multiplicative eta quotients that are newforms
ETA_CATALOGUE: Dict[str, Tuple[int, int, Tuple[Tuple[int, int], ...]]] = {
    "1.12.a": (1, 12, ((1, 24),)),
    "2.8.a": (2, 8, ((1, 8), (2, 8))),
    "4.6.a": (4, 6, ((2, 12),)),
    "8.4.a": (8, 4, ((2, 4), (4, 4))),
    "11.2.a": (11, 2, ((1, 2), (11, 2))),
    "14.2.a": (14, 2, ((1, 1), (2, 1), (7, 1), (14, 1))),
    "15.2.a": (15, 2, ((1, 1), (3, 1), (5, 1), (15, 1))),
    "20.2.a": (20, 2, ((2, 2), (10, 2))),
    "24.2.a": (24, 2, ((2, 1), (4, 1), (6, 1), (12, 1))),
    "27.2.a": (27, 2, ((3, 2), (9, 2))),
    "32.2.a": (32, 2, ((4, 2), (8, 2))),
    "36.2.a": (36, 2, ((6, 4),)),
}
SCAN_LABELS = ("1.12.a", "11.2.a")


# ---------- exact truncated q-series ----------

class QSeries:
    """Truncated power series sum c_i q^i, i <= order, with Python-int coefficients."""

    def __init__(self, coeffs, order: int):
        arr = np.zeros(order + 1, dtype=object)
        arr[:] = 0
        head = list(coeffs)[: order + 1]
        arr[: len(head)] = [int(c) for c in head]
        self.coeffs = arr
        self.order = order

    @classmethod
    def one(cls, order: int) -> "QSeries":
        return cls([1], order)

    def __mul__(self, other: "QSeries") -> "QSeries":
        order = min(self.order, other.order)
        out = np.zeros(order + 1, dtype=object)
        out[:] = 0
        b = other.coeffs[: order + 1]
        for i in np.nonzero(self.coeffs[: order + 1])[0]:
            i = int(i)
            out[i:] += self.coeffs[i] * b[: order + 1 - i]
        return QSeries(out, order)

    def invert(self) -> "QSeries":
        if self.coeffs[0] not in (1, -1):
            raise InvalidArgument("only series with constant term +-1 are inverted exactly")
        a0 = int(self.coeffs[0])
        b = np.zeros(self.order + 1, dtype=object)
        b[:] = 0
        b[0] = a0
        for k in range(1, self.order + 1):
            b[k] = -a0 * sum(self.coeffs[1: k + 1] * b[k - 1:: -1])
        return QSeries(b, self.order)

    def __pow__(self, power: int) -> "QSeries":
        if power < 0:
            return self.invert() ** (-power)
        result = QSeries.one(self.order)
        base = self
        while power:
            if power & 1:
                result = result * base
            base = base * base
            power >>= 1
        return result

    def to_list(self) -> List[int]:
        return [int(c) for c in self.coeffs]


def euler_product_series(d: int, order: int) -> QSeries:
    """prod_{n>=1} (1 - q^(d n)) via the pentagonal number expansion."""
    coeffs = [0] * (order + 1)
    coeffs[0] = 1
    m = 1
    while d * m * (3 * m - 1) // 2 <= order:
        sign = -1 if m % 2 else 1
        for g in (m * (3 * m - 1) // 2, m * (3 * m + 1) // 2):
            if d * g <= order:
                coeffs[d * g] = sign
        m += 1
    return QSeries(coeffs, order)


def eta_product_coeffs(spec: EtaSpec, K: int) -> List[int]:
    """
    Coefficients c_0..c_K of prod eta(d z)^r = sum c_n q^n.

    The leading power sum(d r) / 24 must be a non-negative integer.
    """
    if K < 0:
        raise InvalidArgument(f"coefficient count K={K} must be >= 0")
    weight_sum = sum(d * r for d, r in spec)
    if weight_sum % 24:
        raise InvalidArgument(f"sum of d*r = {weight_sum} is not divisible by 24")
    shift = weight_sum // 24
    if shift < 0:
        raise InvalidArgument(f"eta quotient starts at q^{shift}; negative orders are not supported")
    for d, _ in spec:
        if d < 1:
            raise InvalidArgument(f"eta scale d={d} must be >= 1")
    if shift > K:
        return [0] * (K + 1)
    order = K - shift
    series = QSeries.one(order)
    for d, r in spec:
        if r:
            series = series * euler_product_series(d, order) ** r
    return [0] * shift + series.to_list()


# ---------- newform records ----------

class NewformData(BaseModel):
    """A normalised newform: coeffs[i] holds a_(i+1)."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    label: str
    level: int = Field(ge=1)
    weight: int = Field(ge=1)
    coeffs: List[int] = Field(alias="an", min_length=1)

    @field_validator("coeffs")
    @classmethod
    def _normalised(cls, value: List[int]) -> List[int]:
        if value[0] != 1:
            raise ValueError(f"a_1 = {value[0]}, expected 1")
        return value

    @property
    def K(self) -> int:
        return len(self.coeffs)

    def a(self, n: int) -> int:
        return self.coeffs[n - 1]

    def to_record(self) -> dict:
        return {"label": self.label, "level": self.level, "weight": self.weight, "an": list(self.coeffs)}


@dataclass(frozen=True)
class HeckeViolation:
    kind: str
    indices: Tuple[int, ...]
    prime: int
    exponent: int
    expected: int
    actual: int

    def describe(self) -> str:
        return (
            f"{self.kind} at p={self.prime}, exponent {self.exponent}: "
            f"a_{self.indices[-1]} = {self.actual}, expected {self.expected}"
        )


def hecke_verify(f: NewformData) -> List[HeckeViolation]:
    """Multiplicativity on coprime pairs and the prime-power recursions, over all indices <= K."""
    K, N, k = f.K, f.level, f.weight
    out: List[HeckeViolation] = []
    for m in range(2, K + 1):
        for n in range(m + 1, K // m + 1):
            if math.gcd(m, n) != 1:
                continue
            expected = f.a(m) * f.a(n)
            if f.a(m * n) != expected:
                p = min(prime_factors(m))
                out.append(HeckeViolation("multiplicativity", (m, n, m * n), p, 1, expected, f.a(m * n)))
    for p in range(2, K + 1):
        if not is_prime(p):
            continue
        r = 1
        while p ** (r + 1) <= K:
            if N % p:
                expected = f.a(p) * f.a(p ** r) - p ** (k - 1) * f.a(p ** (r - 1))
            else:
                expected = f.a(p) * f.a(p ** r)
            actual = f.a(p ** (r + 1))
            if actual != expected:
                indices = (p, p ** (r - 1), p ** r, p ** (r + 1))
                out.append(HeckeViolation("prime-power recursion", indices, p, r + 1, expected, actual))
            r += 1
    return out


def ingest_newforms(path: str) -> List[NewformData]:
    """Read a newform file (one JSON object per line); blank lines are skipped."""
    forms: List[NewformData] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise NewformParseError(exc.msg, lineno, exc.colno) from exc
            if not isinstance(record, dict):
                raise NewformParseError("record is not an object", lineno, 1)
            try:
                form = NewformData.model_validate(record)
            except ValidationError as exc:
                first = exc.errors()[0]
                where = ".".join(str(part) for part in first["loc"])
                raise NewformParseError(f"{where}: {first['msg']}", lineno, 1) from exc
            violations = hecke_verify(form)
            if violations:
                v = violations[0]
                raise HeckeViolationError(
                    f"{form.label} (line {lineno}): {v.describe()} ({len(violations)} violation(s))",
                    v.prime,
                    v.exponent,
                )
            forms.append(form)
    logger.info("ingested %d newform(s) from %s", len(forms), path)
    return forms


def newform_from_eta(label: str, K: int) -> NewformData:
    try:
        level, weight, spec = ETA_CATALOGUE[label]
    except KeyError:
        raise InvalidArgument(f"no eta product for '{label}' (known: {', '.join(ETA_CATALOGUE)})") from None
    coeffs = eta_product_coeffs(spec, K)
    return NewformData(label=label, level=level, weight=weight, an=coeffs[1:])


def newforms_from_eta(labels: Iterable[str], K: int, path: str) -> List[NewformData]:
    """Write a newform file built from eta products; returns the records written."""
    forms = [newform_from_eta(label, K) for label in labels]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for form in forms:
            fh.write(json.dumps(form.to_record(), separators=(",", ":")) + "\n")
    return forms
