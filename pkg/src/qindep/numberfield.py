"""Exact arithmetic in Q(q) and certified embeddings into C."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, Union

from .errors import (
    DivisionByZeroElement,
    FieldMismatch,
    PrecisionExhausted,
    Undecidable,
    UsageError,
)
from .numerics import DEFAULT_PREC, ComplexBall, RealBall, ball_abs, ball_max, check_prec
from .polynomials import (
    MAX_DOUBLINGS,
    degree,
    derivative,
    irreducibility_evidence,
    isolate_roots,
    make_monic,
    poly_divmod,
    poly_gcd,
    poly_str,
    primitive,
    trim,
)

Rat = Union[int, Fraction]


@dataclass(frozen=True, eq=False)
class NumberField:
    """Q(q) for ``q`` a root of an irreducible integer polynomial.

    ``roots[0]`` is the distinguished embedding (sigma_1, the identity); the
    remaining roots follow in a fixed order.
    """

    min_poly: tuple[int, ...]
    roots: tuple[ComplexBall, ...]
    prec: int
    irreducibility: str = ""
    root_selector: str = "max_real"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def degree(self) -> int:
        return len(self.min_poly) - 1

    @property
    def q(self) -> "FieldElement":
        if self.degree == 1:
            return FieldElement(self, (Fraction(-self.min_poly[0], self.min_poly[1]),))
        return self.element([0, 1])

    def element(self, coeffs: Union[Rat, Sequence[Rat]]) -> "FieldElement":
        if isinstance(coeffs, (int, Fraction)):
            coeffs = [coeffs]
        c = [Fraction(x) for x in coeffs]
        if len(c) > self.degree:
            return self.from_poly(c)
        c += [Fraction(0)] * (self.degree - len(c))
        return FieldElement(self, tuple(c))

    def from_poly(self, coeffs: Sequence[Rat]) -> "FieldElement":
        """Element given by a polynomial in q of any degree."""
        _, r = poly_divmod(coeffs, self.min_poly)
        r = list(r) + [Fraction(0)] * (self.degree - len(r))
        return FieldElement(self, tuple(r[: self.degree]))

    def zero(self) -> "FieldElement":
        return self.element(0)

    def one(self) -> "FieldElement":
        return self.element(1)

    def same_as(self, other: "NumberField") -> bool:
        return self is other or (
            self.min_poly == other.min_poly and self.roots[0].overlaps(other.roots[0])
        )

    def roots_at(self, prec: int) -> tuple[ComplexBall, ...]:
        """Root enclosures at ``prec`` bits, in this field's embedding order."""
        if prec <= self.prec:
            return self.roots
        if prec not in self._cache:
            fresh = isolate_roots(self.min_poly, prec)
            ordered = []
            for base in self.roots:
                match = [z for z in fresh if z.overlaps(base)]
                if len(match) != 1:
                    raise PrecisionExhausted("could not match refined roots to embeddings")
                ordered.append(match[0])
            self._cache[prec] = tuple(ordered)
        return self._cache[prec]

    def describe(self) -> dict:
        return {
            "min_poly": poly_str(self.min_poly),
            "degree": self.degree,
            "root_selector": self.root_selector,
            "irreducibility": self.irreducibility,
        }

    def __repr__(self) -> str:
        return f"NumberField({poly_str(self.min_poly)}, q ~ {complex(self.roots[0]):.10g})"


def _sort_key(z: ComplexBall):
    return (0 if z.is_real() else 1, -float(z.re), -float(z.im))


def field_create(min_poly: Sequence[int], root_selector: Union[str, int] = "max_real",
                 prec: int = DEFAULT_PREC) -> NumberField:
    """Build Q(q) for a root q of ``min_poly``.

    ``root_selector`` is ``"max_real"`` or a 1-based index into the roots
    ordered real-first, then by decreasing real and imaginary part.
    """
    prec = check_prec(prec)
    c = trim([int(x) for x in min_poly])
    if degree(c) < 1:
        raise UsageError("minimal polynomial must be nonconstant")
    c = primitive(c)
    evidence = irreducibility_evidence(c)
    roots = sorted(isolate_roots(c, prec), key=_sort_key)
    if root_selector in ("max_real", "max-real"):
        real = [i for i, z in enumerate(roots) if z.is_real()]
        if not real:
            raise UsageError(f"{poly_str(c)} has no real root")
        idx = real[0]
        selector = "max_real"
    else:
        idx = int(root_selector) - 1
        if not 0 <= idx < len(roots):
            raise UsageError(f"root index {root_selector} out of range 1..{len(roots)}")
        selector = str(idx + 1)
    ordered = [roots[idx]] + [z for i, z in enumerate(roots) if i != idx]
    return NumberField(tuple(c), tuple(ordered), prec, evidence, selector)


def rational_field(value: Rat, prec: int = DEFAULT_PREC) -> NumberField:
    """Degree-one field whose distinguished element is the rational ``value``."""
    v = Fraction(value)
    return field_create([-v.numerator, v.denominator], "max_real", prec)


# ---------------------------------------------------------------------------
# elements
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _reduction_table(min_poly: tuple[int, ...]) -> tuple[tuple[Fraction, ...], ...]:
    """Power-basis coordinates of q^n, ..., q^(2n-2)."""
    n = len(min_poly) - 1
    monic = make_monic(min_poly)
    cur = [-monic[i] for i in range(n)]
    table = [tuple(cur)]
    for _ in range(n - 2):
        top = cur[-1]
        nxt = [Fraction(0)] + cur[:-1]
        cur = [nxt[i] - top * monic[i] for i in range(n)]
        table.append(tuple(cur))
    return tuple(table)


@dataclass(frozen=True, eq=False)
class FieldElement:
    field: NumberField
    coeffs: tuple[Fraction, ...]

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.field is not self.field and not self.field.same_as(other.field):
                raise FieldMismatch("elements belong to different fields")
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.element(other)
        raise TypeError(f"cannot combine FieldElement with {type(other).__name__}")

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def __eq__(self, other) -> bool:
        try:
            other = self._coerce(other)
        except (TypeError, FieldMismatch):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other):
        other = self._coerce(other)
        return FieldElement(self.field, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return FieldElement(self.field, tuple(a * other for a in self.coeffs))
        other = self._coerce(other)
        n = self.field.degree
        if n == 1:
            return FieldElement(self.field, (self.coeffs[0] * other.coeffs[0],))
        prod = [Fraction(0)] * (2 * n - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    if b:
                        prod[i + j] += a * b
        out = prod[:n]
        table = _reduction_table(self.field.min_poly)
        for k in range(n, 2 * n - 1):
            c = prod[k]
            if c:
                row = table[k - n]
                for i in range(n):
                    out[i] += c * row[i]
        return FieldElement(self.field, tuple(out))

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self.is_zero():
            raise DivisionByZeroElement("division by the zero element")
        if self.is_rational():
            return self.field.element(1 / self.coeffs[0])
        # extended Euclid: s*a + t*m = 1
        m = [Fraction(x) for x in self.field.min_poly]
        r0, r1 = m, trim(list(self.coeffs))
        s0, s1 = [Fraction(0)], [Fraction(1)]
        while degree(r1) > 0:
            qt, r = poly_divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _psub(s0, _pmul(qt, s1))
        c = r1[0]
        return self.field.from_poly([x / c for x in s1])

    def __truediv__(self, other):
        other = self._coerce(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, n: int):
        n = int(n)
        if n < 0:
            return self.inverse() ** (-n)
        result = self.field.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def to_list(self) -> list[str]:
        return [str(c) for c in self.coeffs]

    def __repr__(self) -> str:
        return f"FieldElement([{', '.join(str(c) for c in self.coeffs)}])"

    def __str__(self) -> str:
        if self.is_rational():
            return str(self.coeffs[0])
        return "[" + ",".join(str(c) for c in self.coeffs) + "]"


def _pmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return trim(out)


def _psub(a, b):
    n = max(len(a), len(b))
    return trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)])


def element_arith(a: FieldElement, b: FieldElement, op: str) -> FieldElement:
    ops = {"add": a.__add__, "sub": a.__sub__, "mul": a.__mul__, "div": a.__truediv__}
    if op not in ops:
        raise ValueError(f"unknown operation {op!r}")
    return ops[op](b)


def parse_element(F: NumberField, text: str) -> FieldElement:
    """``"[a0,a1,...]"`` in the power basis, or a bare rational such as ``"3/2"``."""
    s = str(text).strip()
    try:
        if s.startswith("["):
            body = s.strip("[]").strip()
            parts = [Fraction(t.strip()) for t in body.split(",")] if body else [Fraction(0)]
            if len(parts) > F.degree:
                raise UsageError(f"element {text!r} has more than {F.degree} coordinates")
            return F.element(parts)
        return F.element(Fraction(s))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse field element {text!r}") from None


# ---------------------------------------------------------------------------
# linear algebra helpers
# ---------------------------------------------------------------------------

def multiplication_matrix(a: FieldElement) -> list[list[Fraction]]:
    """Matrix of x -> a*x in the power basis (columns are a*q^i)."""
    F = a.field
    n = F.degree
    cols = []
    cur = a
    qq = F.q
    for i in range(n):
        cols.append(cur.coeffs)
        if i + 1 < n:
            cur = cur * qq
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def _det(mat: list[list[Fraction]]) -> Fraction:
    m = [row[:] for row in mat]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        p = m[col][col]
        det *= p
        for r in range(col + 1, n):
            f = m[r][col] / p
            if f:
                for k in range(col, n):
                    m[r][k] -= f * m[col][k]
    return det


def characteristic_polynomial(a: FieldElement) -> list[Fraction]:
    """det(x I - M_a), low-to-high, via Faddeev-LeVerrier."""
    A = multiplication_matrix(a)
    n = len(A)
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    Mk = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{n-k+1} I
        prev = Mk
        Mk = [[sum(A[i][t] * prev[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        for i in range(n):
            Mk[i][i] += coeffs[n - k + 1]
        AM = [[sum(A[i][t] * Mk[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        coeffs[n - k] = -sum(AM[i][i] for i in range(n)) / k
    return coeffs


def minimal_polynomial(a: FieldElement) -> list[Fraction]:
    """Monic minimal polynomial of ``a`` over Q, low-to-high."""
    cp = characteristic_polynomial(a)
    g = poly_gcd(cp, derivative(cp))
    m, _ = poly_divmod(cp, g)
    return make_monic(m)


def is_algebraic_integer(a: FieldElement) -> bool:
    return all(c.denominator == 1 for c in minimal_polynomial(a))


def norm_exact(a: FieldElement) -> Fraction:
    """Exact field norm: the determinant of multiplication by ``a``."""
    if a.field.degree == 1:
        return a.coeffs[0]
    return _det(multiplication_matrix(a))


def trace_exact(a: FieldElement) -> Fraction:
    A = multiplication_matrix(a)
    return sum(A[i][i] for i in range(len(A)))


# ---------------------------------------------------------------------------
# embeddings, heights, PV test
# ---------------------------------------------------------------------------

def _embed_at(a: FieldElement, l: int, work: int) -> ComplexBall:
    z = a.field.roots_at(work)[l - 1]
    z = z.with_prec(work)
    acc = ComplexBall.from_value(0, work)
    for c in reversed(a.coeffs):
        acc = acc * z + RealBall.from_value(c, work)
    return acc


def embed(a: FieldElement, l: int, prec: int = DEFAULT_PREC) -> ComplexBall:
    """Enclosure of sigma_l(a) (1-based ``l``; sigma_1 is the identity).

    The working precision is doubled until the radius is at most
    ``2**-prec`` relative to ``max(1, |sigma_l(a)|)``.
    """
    prec = check_prec(prec)
    F = a.field
    if not 1 <= l <= F.degree:
        raise ValueError(f"embedding index {l} out of range 1..{F.degree}")
    if a.is_rational():
        return ComplexBall.from_value(a.coeffs[0], prec)
    size = max((abs(c.numerator).bit_length() - c.denominator.bit_length() for c in a.coeffs if c),
               default=0)
    work = prec + 16 + max(size, 0) + 4 * F.degree
    work = -(-work // 64) * 64
    for _ in range(MAX_DOUBLINGS + 1):
        val = _embed_at(a, l, work)
        scale = max(Fraction(1), abs(val.re.mid) + abs(val.im.mid))
        if val.rad_upper() <= scale / (1 << prec):
            return val
        work *= 2
    raise PrecisionExhausted(f"embedding did not reach {prec} bits")


def embeddings(a: FieldElement, prec: int = DEFAULT_PREC) -> list[ComplexBall]:
    return [embed(a, l, prec) for l in range(1, a.field.degree + 1)]


def q_height(a: FieldElement, prec: int = DEFAULT_PREC) -> RealBall:
    """Enclosure of the q-relative height prod_l max{1, |sigma_l(a)|}."""
    work = prec + 8
    h = RealBall.from_value(1, work)
    for z in embeddings(a, work):
        h = h * ball_max(ball_abs(z, work), 1, work)
    return h


@dataclass(frozen=True)
class PVReport:
    is_pv: bool
    dominant_root: ComplexBall
    conjugate_moduli: tuple[RealBall, ...]
    sign_convention: Optional[str]
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "is_pv": self.is_pv,
            "dominant_root": self.dominant_root.to_json(),
            "conjugate_moduli": [m.to_json() for m in self.conjugate_moduli],
            "sign_convention": self.sign_convention,
            "reason": self.reason,
        }


def _pv_once(F: NumberField, prec: int) -> PVReport:
    roots = F.roots_at(prec)
    q = roots[0]
    moduli = tuple(ball_abs(z, prec) for z in roots[1:])
    if abs(F.min_poly[-1]) != 1:
        return PVReport(False, q, moduli, None, "q is not an algebraic integer")
    if not q.is_real():
        if not q.im.contains_zero():
            return PVReport(False, q, moduli, None, "q is not real")
        raise Undecidable("cannot certify whether q is real")
    if q.re.certainly_gt(1):
        sign = "plus"
    elif q.re.certainly_lt(-1):
        sign = "minus"
    elif q.re.certainly_lt(1) and q.re.certainly_gt(-1):
        return PVReport(False, q, moduli, None, "|q| < 1")
    elif q.re.is_exact():
        return PVReport(False, q, moduli, None, "|q| = 1")
    else:
        raise Undecidable("|q| straddles 1")
    for m in moduli:
        if m.certainly_lt(1):
            continue
        if m.certainly_ge(1):
            return PVReport(False, q, moduli, sign, "a conjugate has modulus >= 1")
        raise Undecidable("a conjugate modulus straddles 1")
    return PVReport(True, q, moduli, sign, "all other conjugates lie inside the unit disk")


def pv_check(F: NumberField, prec: int = DEFAULT_PREC) -> PVReport:
    """Decide whether +q or -q is a Pisot-Vijayaraghavan number."""
    work = max(check_prec(prec), F.prec)
    for _ in range(MAX_DOUBLINGS + 1):
        try:
            return _pv_once(F, work)
        except Undecidable:
            work *= 2
    raise Undecidable(f"PV status of {poly_str(F.min_poly)} undecided up to {work // 2} bits")


# ---------------------------------------------------------------------------
# roots of unity
# ---------------------------------------------------------------------------

def euler_phi(n: int) -> int:
    result, m, p = n, n, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            result -= result // p
        p += 1
    if m > 1:
        result -= result // m
    return result


@lru_cache(maxsize=None)
def cyclotomic(n: int) -> tuple[int, ...]:
    """Coefficients of the n-th cyclotomic polynomial, low-to-high."""
    num = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            num, r = poly_divmod(num, cyclotomic(d))
            assert degree(r) < 0
    return tuple(int(c) for c in num)


def root_of_unity_orders(n_q: int) -> list[int]:
    """All n with phi(n) <= n_q (phi(n) >= sqrt(n/2) bounds the search)."""
    return [n for n in range(1, 2 * n_q * n_q + 3) if euler_phi(n) <= n_q]


def is_root_of_unity(a: FieldElement) -> bool:
    if a.is_zero():
        return False
    mp = minimal_polynomial(a)
    if any(c.denominator != 1 for c in mp):
        return False
    mp_int = tuple(int(c) for c in mp)
    d = len(mp_int) - 1
    return any(
        euler_phi(n) == d and cyclotomic(n) == mp_int for n in root_of_unity_orders(a.field.degree)
    )


def is_ratio_root_of_unity(a: FieldElement, b: FieldElement) -> bool:
    if a.is_zero() or b.is_zero():
        raise DivisionByZeroElement("root-of-unity test needs nonzero elements")
    return is_root_of_unity(a / b)
