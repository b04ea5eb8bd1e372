"""Univariate integer/rational polynomials: parsing, division, irreducibility, roots.

Coefficient lists are stored low-to-high: ``[c0, c1, ..., cn]``.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import reduce
from typing import Sequence

import mpmath
from sympy import Poly, symbols
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_ddf_zassenhaus, gf_from_int_poly, gf_monic, gf_sqf_p

from .errors import ReduciblePolynomial, RootIsolationFailed, UsageError
from .numerics import ComplexBall, RealBall, ball_abs, check_prec

MAX_DOUBLINGS = 8

_TERM = re.compile(
    r"""\s*(?P<sign>[+-])?\s*
        (?:(?P<coef>\d+)\s*\*?\s*)?
        (?:(?P<var>[xX])\s*(?:(?:\^|\*\*)\s*(?P<pow>\d+))?)?\s*""",
    re.VERBOSE,
)


def trim(coeffs: Sequence) -> list:
    c = list(coeffs)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def degree(coeffs: Sequence) -> int:
    c = trim(coeffs)
    if len(c) == 1 and c[0] == 0:
        return -1
    return len(c) - 1


def parse_poly(text: str) -> list[int]:
    """Parse ``"x^4-x^3-2*x^2+1"`` or ``"1,0,-2,-1,1"`` (low-to-high) into integers."""
    s = str(text).strip()
    if not s:
        raise UsageError("empty polynomial")
    if not re.search(r"[xX]", s):
        try:
            return trim([int(t) for t in s.strip("[]").split(",")])
        except ValueError:
            raise UsageError(f"cannot parse polynomial {text!r}") from None
    terms: dict[int, int] = {}
    pos = 0
    s = s.replace(" ", "")
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos or (m.group("coef") is None and m.group("var") is None):
            raise UsageError(f"cannot parse polynomial {text!r} near position {pos}")
        if pos > 0 and m.group("sign") is None:
            raise UsageError(f"missing operator in {text!r} near position {pos}")
        coef = int(m.group("coef")) if m.group("coef") is not None else 1
        if m.group("sign") == "-":
            coef = -coef
        if m.group("var") is None:
            k = 0
        else:
            k = int(m.group("pow")) if m.group("pow") is not None else 1
        terms[k] = terms.get(k, 0) + coef
        pos = m.end()
    n = max(terms)
    return trim([terms.get(i, 0) for i in range(n + 1)])


def poly_str(coeffs: Sequence, var: str = "x") -> str:
    parts = []
    for k in range(len(coeffs) - 1, -1, -1):
        c = coeffs[k]
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if k == 0:
            body = str(a)
        else:
            mon = var if k == 1 else f"{var}^{k}"
            body = mon if a == 1 else f"{a}*{mon}"
        parts.append((sign, body))
    if not parts:
        return "0"
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += sign + body
    return out


# ---------------------------------------------------------------------------
# arithmetic over Q
# ---------------------------------------------------------------------------

def poly_mul(a: Sequence, b: Sequence) -> list:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return trim(out)


def poly_add(a: Sequence, b: Sequence) -> list:
    n = max(len(a), len(b))
    return trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def poly_divmod(a: Sequence, b: Sequence) -> tuple[list, list]:
    """Division over Q."""
    b = trim([Fraction(x) for x in b])
    if degree(b) < 0:
        raise ZeroDivisionError("polynomial division by zero")
    r = trim([Fraction(x) for x in a])
    db = len(b) - 1
    if len(r) - 1 < db:
        return [Fraction(0)], r
    q = [Fraction(0)] * (len(r) - db)
    lead = b[-1]
    for k in range(len(r) - 1 - db, -1, -1):
        c = r[k + db] / lead
        q[k] = c
        if c:
            for i in range(db + 1):
                r[k + i] -= c * b[i]
    return trim(q), trim(r[:db] or [Fraction(0)])


def poly_gcd(a: Sequence, b: Sequence) -> list:
    a, b = trim([Fraction(x) for x in a]), trim([Fraction(x) for x in b])
    while degree(b) >= 0:
        a, b = b, poly_divmod(a, b)[1]
    if degree(a) < 0:
        return [Fraction(0)]
    return [x / a[-1] for x in a]


def derivative(a: Sequence) -> list:
    if len(a) <= 1:
        return [0]
    return trim([i * a[i] for i in range(1, len(a))])


def content(coeffs: Sequence[int]) -> int:
    return reduce(math.gcd, (abs(int(c)) for c in coeffs), 0)


def primitive(coeffs: Sequence[int]) -> list[int]:
    """Primitive integer polynomial with positive leading coefficient."""
    c = content(coeffs)
    out = [int(x) // c for x in coeffs]
    if out[-1] < 0:
        out = [-x for x in out]
    return out


def to_integer_primitive(coeffs: Sequence) -> list[int]:
    fr = [Fraction(x) for x in coeffs]
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (x.denominator for x in fr), 1)
    return primitive([int(x * den) for x in fr])


def make_monic(coeffs: Sequence) -> list[Fraction]:
    c = trim([Fraction(x) for x in coeffs])
    return [x / c[-1] for x in c]


def poly_eval(coeffs: Sequence, x):
    """Horner evaluation; ``x`` may be an int, Fraction or ball."""
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def is_squarefree(coeffs: Sequence[int]) -> bool:
    return degree(poly_gcd(coeffs, derivative(coeffs))) == 0


def _divisors(n: int) -> list[int]:
    n = abs(n)
    small, large = [], []
    i = 1
    while i * i <= n:
        if n % i == 0:
            small.append(i)
            if i * i != n:
                large.append(n // i)
        i += 1
    return small + large[::-1]


def rational_roots(coeffs: Sequence[int]) -> list[Fraction]:
    c = trim([int(x) for x in coeffs])
    roots = []
    if c[0] == 0:
        roots.append(Fraction(0))
        k = next(i for i, x in enumerate(c) if x)
        c = c[k:]
    if len(c) <= 1:
        return roots
    for p in _divisors(c[0]):
        for q in _divisors(c[-1]):
            for cand in (Fraction(p, q), Fraction(-p, q)):
                if cand not in roots and poly_eval(c, cand) == 0:
                    roots.append(cand)
    return roots


# ---------------------------------------------------------------------------
# irreducibility
# ---------------------------------------------------------------------------

_SMALL_PRIMES = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73]


def _mod_p_pattern(coeffs: Sequence[int], p: int) -> list[int] | None:
    """Degrees of irreducible factors mod ``p``; None if ``p`` is a bad prime."""
    if coeffs[-1] % p == 0:
        return None
    f = gf_from_int_poly([int(c) for c in reversed(coeffs)], p)
    _, f = gf_monic(f, p, ZZ)
    if not gf_sqf_p(f, p, ZZ):
        return None
    pattern = []
    for g, d in gf_ddf_zassenhaus(f, p, ZZ):
        pattern += [d] * ((len(g) - 1) // d)
    return pattern


def _subset_sums(parts: list[int]) -> set[int]:
    sums = {0}
    for d in parts:
        sums |= {s + d for s in sums}
    return sums


def irreducibility_evidence(coeffs: Sequence[int]) -> str:
    """Return how irreducibility over Q was established; raise if reducible."""
    c = primitive(trim([int(x) for x in coeffs]))
    n = degree(c)
    if n < 1:
        raise ReduciblePolynomial("constant polynomial")
    if n == 1:
        return "linear"
    if not is_squarefree(c):
        raise ReduciblePolynomial(f"{poly_str(c)} is not squarefree")
    rr = rational_roots(c)
    if rr:
        raise ReduciblePolynomial(f"{poly_str(c)} has the rational root {rr[0]}")
    if n <= 3:
        return "no rational roots (degree <= 3)"
    possible = set(range(1, n))
    for p in _SMALL_PRIMES:
        pat = _mod_p_pattern(c, p)
        if pat is None:
            continue
        possible &= _subset_sums(pat)
        if not possible:
            return f"mod-p factor degree patterns (up to p={p})"
    x = symbols("x")
    _, factors = Poly(list(reversed(c)), x, domain="ZZ").factor_list()
    if len(factors) == 1 and factors[0][1] == 1:
        return "complete factorization over Z"
    raise ReduciblePolynomial(
        f"{poly_str(c)} factors as "
        + " * ".join(f"({f.as_expr()})^{e}" if e > 1 else f"({f.as_expr()})" for f, e in factors)
    )


# ---------------------------------------------------------------------------
# certified root isolation
# ---------------------------------------------------------------------------

def _mpf_ball(x: "mpmath.mpf", prec: int) -> RealBall:
    sign, man, exp, _ = x._mpf_
    m = -int(man) if sign else int(man)
    if m == 0:
        return RealBall(0, 0, 0, 0, prec)
    return _dy(m, int(exp), prec)


def _dy(m: int, e: int, prec: int) -> RealBall:
    from .numerics import _round_mid

    m, e, _, _ = _round_mid(m, e, prec)  # truncation changes only the approximation point
    return RealBall(m, e, 0, 0, prec)


def _ball_eval(coeffs: Sequence[int], z: ComplexBall, prec: int) -> ComplexBall:
    acc = ComplexBall.from_value(0, prec)
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def isolate_roots(coeffs: Sequence[int], prec: int) -> list[ComplexBall]:
    """Certified enclosures of all complex roots of a squarefree integer polynomial.

    Approximations come from simultaneous (Durand-Kerner) iteration; each
    approximation ``z_i`` gets the inclusion disk of radius ``n |W_i|`` where
    ``W_i`` is its Weierstrass correction.  When the disks are pairwise
    disjoint each holds exactly one root.  A disk whose mirror image meets no
    other disk holds a real root and is returned with an exact zero imaginary
    part.
    """
    prec = check_prec(prec)
    c = trim([int(x) for x in coeffs])
    n = degree(c)
    if n < 1:
        raise ValueError("constant polynomial has no roots")
    if n == 1:
        return [ComplexBall.from_value(Fraction(-c[0], c[1]), prec)]
    work = prec
    for _ in range(MAX_DOUBLINGS + 1):
        try:
            return _isolate_once(c, work, prec)
        except RootIsolationFailed:
            work *= 2
    raise RootIsolationFailed(f"could not isolate roots of {poly_str(c)} up to {work // 2} bits")


def _isolate_once(c: list[int], work: int, prec: int) -> list[ComplexBall]:
    n = len(c) - 1
    bits = work + 2 * n + 16
    with mpmath.workprec(bits):
        try:
            approx = mpmath.polyroots(list(reversed(c)), maxsteps=200 + 20 * n,
                                      extraprec=2 * bits)
        except mpmath.libmp.libhyper.NoConvergence:
            raise RootIsolationFailed("no convergence") from None
        pts = []
        for z in approx:
            z = mpmath.mpc(z)
            pts.append((_mpf_ball(z.real, bits), _mpf_ball(z.imag, bits)))
    zs = [ComplexBall(re, im) for re, im in pts]
    lead = c[-1]
    radii: list[Fraction] = []
    for i, zi in enumerate(zs):
        denom = ComplexBall.from_value(lead, bits)
        for j, zj in enumerate(zs):
            if j != i:
                denom = denom * (zi - zj)
        try:
            w = _ball_eval(c, zi, bits) / denom
        except ZeroDivisionError:
            raise RootIsolationFailed("coincident approximations") from None
        radii.append(n * ball_abs(w, bits).upper())

    def dist2(a: ComplexBall, b: ComplexBall) -> Fraction:
        return (a.re.mid - b.re.mid) ** 2 + (a.im.mid - b.im.mid) ** 2

    for i in range(n):
        for j in range(i + 1, n):
            if dist2(zs[i], zs[j]) <= (radii[i] + radii[j]) ** 2:
                raise RootIsolationFailed("inclusion disks overlap")
    target = Fraction(1, 1 << max(prec - 4, 1))
    scale = max(Fraction(1), max(abs(z.re.mid) + abs(z.im.mid) for z in zs))
    if max(radii) > target * scale:
        raise RootIsolationFailed("inclusion disks too wide for requested precision")

    out = []
    for i, zi in enumerate(zs):
        mirror = zi.conjugate()
        real = all(
            dist2(mirror, zs[j]) > (radii[i] + radii[j]) ** 2 for j in range(n) if j != i
        )
        r = radii[i]
        if real:
            re = RealBall.from_endpoints(zi.re.mid - r, zi.re.mid + r, prec)
            out.append(ComplexBall(re, RealBall(0, 0, 0, 0, prec)))
        else:
            re = RealBall.from_endpoints(zi.re.mid - r, zi.re.mid + r, prec)
            im = RealBall.from_endpoints(zi.im.mid - r, zi.im.mid + r, prec)
            out.append(ComplexBall(re, im))
    return out
