"""Integer-relation search over ball enclosures by exact LLL.

A true relation c (height H) of values v_i is a lattice vector
(c, sum c_i round(S v_i)) of length at most H sqrt(n + E^2), where
E = sum (1/2 + S rad_i) per real/imaginary column.  Every nonzero lattice
vector is at least as long as the shortest Gram-Schmidt vector, which gives
the height bound reported when nothing is found.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Any, Callable, Optional, Sequence, Union

from .errors import DegenerateBasis, PrecisionTooLow, UsageError
from .numberfield import FieldElement, NumberField, embed
from .numerics import ComplexBall, DEFAULT_PREC, RealBall, ball_abs, check_prec
from .qseries import SeriesSpec, eval_series, field_from_text

DELTA = Fraction(99, 100)
GUARD_BITS = 16

Source = Union[ComplexBall, RealBall, SeriesSpec, Callable[[int], Any], int, Fraction, FieldElement]


def _lll(basis: Sequence[Sequence[int]], delta: Fraction = DELTA) -> tuple[list[list[int]], list[int]]:
    """Integral LLL.  Returns the reduced rows and the Gram determinants d_0..d_n.

    Only integer arithmetic: lam[k][j] = d_{j+1} mu_{kj} and d_i is the Gram
    determinant of the first i rows, so |b*_i|^2 = d_{i+1} / d_i (0-based rows).
    """
    b = [[int(x) for x in row] for row in basis]
    n = len(b)
    if n == 0:
        raise DegenerateBasis("empty basis")
    if len({len(r) for r in b}) != 1:
        raise DegenerateBasis("rows have different lengths")
    dot = lambda u, v: sum(x * y for x, y in zip(u, v))
    p, q = delta.numerator, delta.denominator
    d = [1] + [0] * n
    lam = [[0] * n for _ in range(n)]

    def gram_row(k: int):
        for j in range(k + 1):
            u = dot(b[k], b[j])
            for i in range(j):
                u = (d[i + 1] * u - lam[k][i] * lam[j][i]) // d[i]
            if j < k:
                lam[k][j] = u
            else:
                if u == 0:
                    raise DegenerateBasis("basis rows are linearly dependent")
                d[k + 1] = u

    def red(k: int, l: int):
        if 2 * abs(lam[k][l]) > d[l + 1]:
            r = (2 * lam[k][l] + d[l + 1]) // (2 * d[l + 1])
            b[k] = [x - r * y for x, y in zip(b[k], b[l])]
            lam[k][l] -= r * d[l + 1]
            for i in range(l):
                lam[k][i] -= r * lam[l][i]

    def swap(k: int, kmax: int):
        b[k], b[k - 1] = b[k - 1], b[k]
        for j in range(k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        mu = lam[k][k - 1]
        B = (d[k - 1] * d[k + 1] + mu * mu) // d[k]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k + 1] * lam[i][k - 1] - mu * t) // d[k]
            lam[i][k - 1] = (B * t + mu * lam[i][k]) // d[k + 1]
        d[k] = B

    gram_row(0)
    k, kmax = 1, 0
    while k < n:
        if k > kmax:
            kmax = k
            gram_row(k)
        red(k, k - 1)
        if q * d[k + 1] * d[k - 1] < p * d[k] * d[k] - q * lam[k][k - 1] ** 2:
            swap(k, kmax)
            k = max(1, k - 1)
        else:
            for l in range(k - 2, -1, -1):
                red(k, l)
            k += 1
    return b, d


def lll_reduce(basis: Sequence[Sequence[int]]) -> list[list[int]]:
    """LLL-reduced basis (size-reduced, Lovasz parameter 0.99) of the same lattice."""
    return _lll(basis)[0]


def gram_schmidt_sq(basis: Sequence[Sequence[int]]) -> list[Fraction]:
    """|b*_i|^2 as exact rationals."""
    out: list[list[Fraction]] = []
    norms = []
    for row in basis:
        v = [Fraction(x) for x in row]
        for u, nu in zip(out, norms):
            mu = sum(a * c for a, c in zip(row, u)) / nu
            v = [a - mu * c for a, c in zip(v, u)]
        nv = sum(a * a for a in v)
        if nv == 0:
            raise DegenerateBasis("basis rows are linearly dependent")
        out.append(v)
        norms.append(nv)
    return norms


@dataclass(frozen=True)
class RelationQuery:
    values: tuple[ComplexBall, ...]
    max_height: int
    precision: int = DEFAULT_PREC
    field: Optional[NumberField] = None
    sources: Optional[tuple[Source, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(_as_complex(v, self.precision) for v in self.values))
        if not self.values:
            raise UsageError("relation search needs at least one value")
        if self.max_height < 1:
            raise UsageError("max_height must be positive")
        check_prec(self.precision)
        if self.sources is not None and len(self.sources) != len(self.values):
            raise UsageError("sources and values differ in length")


@dataclass(frozen=True)
class RelationResult:
    status: str
    coefficients: Optional[list]
    residual: RealBall
    certified_height_bound: int
    covers_max_height: bool
    details: dict = field(default_factory=dict)

    @property
    def flat(self) -> Optional[list[int]]:
        if self.coefficients is None:
            return None
        if self.coefficients and isinstance(self.coefficients[0], list):
            return [c for row in self.coefficients for c in row]
        return list(self.coefficients)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "coefficients": self.coefficients,
            "residual": self.residual.to_json(),
            "certified_height_bound": str(self.certified_height_bound),
            "covers_max_height": self.covers_max_height,
            "certificate": (f"any integer relation among the values (within their enclosures) "
                            f"has height > {self.certified_height_bound}"),
            **self.details,
        }


def _as_complex(v, prec: int) -> ComplexBall:
    if isinstance(v, ComplexBall):
        return v
    if isinstance(v, FieldElement):
        return embed(v, 1, prec)
    return ComplexBall.from_value(v, prec)


def evaluate_source(src: Source, prec: int) -> ComplexBall:
    if isinstance(src, SeriesSpec):
        return eval_series(src, prec)
    if callable(src) and not isinstance(src, (ComplexBall, RealBall, FieldElement)):
        return _as_complex(src(prec), prec)
    return _as_complex(src, prec)


def _expand(values: Sequence[ComplexBall], F: Optional[NumberField], prec: int) -> list[ComplexBall]:
    if F is None or F.degree == 1:
        return list(values)
    qpow = [embed(F.q ** b, 1, prec + 32) for b in range(F.degree)]
    return [v * qb for v in values for qb in qpow]


def _shape(flat: list[int], F: Optional[NumberField]) -> list:
    if F is None:
        return flat
    n = F.degree
    return [flat[i:i + n] for i in range(0, len(flat), n)]


def _normalize_sign(c: list[int]) -> list[int]:
    first = next((x for x in c if x), 0)
    return [-x for x in c] if first < 0 else c


def _combine(values: Sequence[ComplexBall], c: Sequence[int], prec: int) -> RealBall:
    acc = ComplexBall.from_value(0, prec)
    for ci, v in zip(c, values):
        if ci:
            acc = acc + v * ci
    return ball_abs(acc, prec)


def _round(x: Fraction) -> int:
    return (2 * x.numerator + x.denominator) // (2 * x.denominator)


def _height_bound(min_gs_sq: Fraction, n: int, err_sq: Fraction) -> int:
    """Largest integer b with b < sqrt(min_gs_sq / (n + err_sq))."""
    L2 = min_gs_sq / (n + err_sq)
    r = isqrt(L2.numerator // L2.denominator)
    while (r + 1) ** 2 <= L2:
        r += 1
    return r - 1 if r * r == L2 else r


def find_relation(query: RelationQuery) -> RelationResult:
    """Search for a nonzero integer (or O_q power-basis) relation of bounded height."""
    prec = query.precision
    limit = Fraction(1, 2 ** (prec - GUARD_BITS))
    for v in query.values:
        if v.rad_upper() > limit:
            raise PrecisionTooLow(
                f"value radius {float(v.rad_upper()):.3g} exceeds 2^-{prec - GUARD_BITS}; "
                "re-evaluate the inputs at higher precision")
    w = _expand(query.values, query.field, prec)
    n = len(w)
    real = all(z.is_real() for z in w)
    S = 2 ** (prec - GUARD_BITS)
    basis = []
    err_re = err_im = Fraction(0)
    for i, z in enumerate(w):
        row = [0] * n
        row[i] = 1
        row.append(_round(S * z.re.mid))
        err_re += Fraction(1, 2) + S * z.re.rad
        if not real:
            row.append(_round(S * z.im.mid))
            err_im += Fraction(1, 2) + S * z.im.rad
        basis.append(row)
    reduced, d = _lll(basis)
    min_gs = min(Fraction(d[i + 1], d[i]) for i in range(n))
    bound = _height_bound(min_gs, n, err_re ** 2 + err_im ** 2)
    threshold = Fraction(1, 2 ** (prec // 2))
    best = None
    for row in reduced:
        c = _normalize_sign(row[:n])
        if not any(c) or max(abs(x) for x in c) > query.max_height:
            continue
        res = _combine(w, c, prec)
        if best is None or res.upper() < best[1].upper():
            best = (c, res)
        if res.upper() >= threshold:
            continue
        coeffs = _shape(c, query.field)
        if query.sources is not None:
            fresh = verify_relation(query.sources, coeffs, prec, query.field)
        else:
            fresh = res
        if fresh.upper() < threshold:
            return RelationResult("relation_found", coeffs, fresh, bound,
                                  bound >= query.max_height, {"lattice_dimension": n})
    residual = best[1] if best is not None else _combine(w, reduced[0][:n], prec)
    return RelationResult("none_below_height", None, residual, bound, bound >= query.max_height,
                          {"lattice_dimension": n})


def verify_relation(values: Sequence[Source], coefficients: Sequence, prec: int = DEFAULT_PREC,
                    field: Optional[NumberField] = None) -> RealBall:
    """|sum c_i v_i| with every source re-evaluated at prec + 32 bits.

    ``coefficients`` is an integer vector, or in field mode a matrix whose
    row i holds the power-basis coordinates of the coefficient of v_i.
    """
    if len(values) != len(coefficients):
        raise UsageError("values and coefficients differ in length")
    work = check_prec(prec) + 32
    acc = ComplexBall.from_value(0, work)
    qpow = None
    for src, c in zip(values, coefficients):
        if isinstance(c, (list, tuple)):
            if field is None:
                raise UsageError("matrix coefficients need a field")
            if not any(c):
                continue
            if qpow is None:
                qpow = [embed(field.q ** b, 1, work) for b in range(field.degree)]
            coef = ComplexBall.from_value(0, work)
            for cb, qb in zip(c, qpow):
                coef = coef + qb * int(cb)
        else:
            if not c:
                continue
            coef = ComplexBall.from_value(int(c), work)
        acc = acc + coef * evaluate_source(src, work)
    return ball_abs(acc, prec)


# -- values-spec files ---------------------------------------------------------


def source_from_record(rec: dict, prec: int) -> Source:
    kind = str(rec.get("kind", "")).lower()
    if kind == "const":
        text = str(rec.get("value", "1")).replace(" ", "")
        if "j" in text or "i" in text:
            z = complex(text.replace("i", "j"))
            return ComplexBall(RealBall.from_value(Fraction(z.real), prec),
                               RealBall.from_value(Fraction(z.imag), prec))
        return ComplexBall.from_value(Fraction(text), prec)
    return SeriesSpec.from_record(rec, prec)


def load_values_spec(obj: Union[str, dict], prec: int) -> tuple[list[Source], Optional[NumberField]]:
    """Parse {"values": [...], "field": {"poly": ..., "root": ...}} (field optional)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    recs = obj.get("values")
    if not isinstance(recs, list) or not recs:
        raise UsageError("values spec needs a nonempty 'values' list")
    F = None
    if obj.get("field"):
        fld = obj["field"]
        F = field_from_text(str(fld.get("poly")), fld.get("root", "max_real"), prec)
    return [source_from_record(r, prec) for r in recs], F


def query_from_sources(sources: Sequence[Source], max_height: int, precision: int,
                       field: Optional[NumberField] = None) -> RelationQuery:
    """Evaluate every source at ``precision`` and wrap the enclosures in a query."""
    vals = tuple(evaluate_source(s, precision) for s in sources)
    return RelationQuery(vals, max_height, precision, field, tuple(sources))
