"""Midpoint-radius ball arithmetic on binary (dyadic) numbers.

A :class:`RealBall` stores ``mid = man * 2**exp`` exactly as Python integers and
an upper bound ``rad = rman * 2**rexp`` on the distance to the true value.
Midpoints are rounded to ``prec`` bits after every operation and the rounding
error is folded into the radius, so every result is an enclosure of the exact
result of the same operation applied to any points of the operand balls.

Radii are kept at :data:`RAD_BITS` bits and always rounded upwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext, ROUND_CEILING, ROUND_HALF_EVEN
from fractions import Fraction
from numbers import Rational
from typing import Optional, Union

from .errors import AmbiguousEnclosure, DivisorMayBeZero, UsageError

RAD_BITS = 30
MIN_PREC = 32
DEFAULT_PREC = 128

Number = Union[int, Fraction, "RealBall", "ComplexBall"]


def check_prec(prec: int) -> int:
    prec = int(prec)
    if prec < MIN_PREC:
        raise UsageError(f"precision must be at least {MIN_PREC} bits, got {prec}")
    return prec


# ---------------------------------------------------------------------------
# dyadic helpers (pairs of ints: value = m * 2**e)
# ---------------------------------------------------------------------------

def _normalize(m: int, e: int) -> tuple[int, int]:
    if m == 0:
        return 0, 0
    tz = (m & -m).bit_length() - 1
    return m >> tz, e + tz


def _round_mid(m: int, e: int, prec: int) -> tuple[int, int, int, int]:
    """Round to nearest with ``prec`` bits; returns (m, e, err_m, err_e)."""
    m, e = _normalize(m, e)
    bl = abs(m).bit_length()
    if bl <= prec:
        return m, e, 0, 0
    s = bl - prec
    m = (m + (1 << (s - 1))) >> s
    m, e2 = _normalize(m, e + s)
    return m, e2, 1, e + s - 1


def _rad_up(r: int, f: int) -> tuple[int, int]:
    if r <= 0:
        return 0, 0
    bl = r.bit_length()
    if bl > RAD_BITS:
        s = bl - RAD_BITS
        r = -((-r) >> s)
        f += s
    return r, f


def _top(r: int, f: int) -> int:
    return r.bit_length() + f


def _rad_sum(*terms: tuple[int, int]) -> tuple[int, int]:
    """Upper bound for a sum of nonnegative dyadics."""
    terms = [(r, f) for r, f in terms if r > 0]
    if not terms:
        return 0, 0
    top = max(_top(r, f) for r, f in terms)
    floor_e = top - RAD_BITS - 34
    acc = 0
    for r, f in terms:
        if _top(r, f) < floor_e:
            r, f = 1, floor_e
        elif f < floor_e:
            s = floor_e - f
            r, f = -((-r) >> s), floor_e
        acc += r << (f - floor_e)
    return _rad_up(acc, floor_e)


def _rad_mul(r1: int, f1: int, r2: int, f2: int) -> tuple[int, int]:
    return _rad_up(abs(r1) * abs(r2), f1 + f2)


def _frac(m: int, e: int) -> Fraction:
    if e >= 0:
        return Fraction(m << e)
    return Fraction(m, 1 << -e)


def _up_from_fraction(x: Fraction) -> tuple[int, int]:
    """Dyadic upper bound of a nonnegative rational."""
    if x <= 0:
        return 0, 0
    n, d = x.numerator, x.denominator
    f = n.bit_length() - d.bit_length() - RAD_BITS
    if f >= 0:
        r = -((-n) // (d << f))
    else:
        r = -((-(n << -f)) // d)
    return _rad_up(r, f)


def _from_fraction(x: Fraction, prec: int) -> tuple[int, int, int, int]:
    n, d = x.numerator, x.denominator
    if d & (d - 1) == 0:
        return _round_mid(n, -(d.bit_length() - 1), prec)
    s = prec + 2 + d.bit_length() - n.bit_length()
    m = (n << s) // d if s >= 0 else n // (d << -s)
    m2, e2, em, ee = _round_mid(m, -s, prec)
    # floor error (< one unit at 2**-s) plus any further rounding
    r, f = _rad_sum((1, -s), (em, ee))
    return m2, e2, r, f


def _floor_sqrt(m: int, e: int, prec: int) -> tuple[int, int]:
    """floor-ish lower bound of sqrt(m * 2**e) as a dyadic (m >= 0)."""
    if m == 0:
        return 0, 0
    if e % 2:
        m <<= 1
        e -= 1
    k = max(0, prec + 2 - m.bit_length() // 2)
    s = math.isqrt(m << (2 * k))
    return s, e // 2 - k


# ---------------------------------------------------------------------------
# RealBall
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RealBall:
    man: int
    exp: int
    rman: int = 0
    rexp: int = 0
    prec: int = DEFAULT_PREC

    # -- construction -----------------------------------------------------
    @classmethod
    def from_value(cls, x, prec: int = DEFAULT_PREC) -> "RealBall":
        if isinstance(x, RealBall):
            return x
        if isinstance(x, bool):
            x = int(x)
        if isinstance(x, int):
            m, e, r, f = _round_mid(x, 0, prec)
            r, f = _rad_up(r, f)
            return cls(m, e, r, f, prec)
        if isinstance(x, float):
            if not math.isfinite(x):
                raise ValueError("non-finite float")
            x = Fraction(x)
        if isinstance(x, str):
            x = Fraction(x)
        if isinstance(x, Rational):
            x = Fraction(x)
            m, e, r, f = _from_fraction(x, prec)
            r, f = _rad_up(r, f)
            return cls(m, e, r, f, prec)
        raise TypeError(f"cannot convert {type(x).__name__} to RealBall")

    @classmethod
    def from_endpoints(cls, lo: Fraction, hi: Fraction, prec: int) -> "RealBall":
        """Smallest convenient ball containing [lo, hi]."""
        lo, hi = Fraction(lo), Fraction(hi)
        if lo > hi:
            lo, hi = hi, lo
        mid = (lo + hi) / 2
        m, e, r, f = _from_fraction(mid, prec)
        half = (hi - lo) / 2
        rr = _up_from_fraction(half + _frac(r, f))
        return cls(m, e, rr[0], rr[1], prec)

    # -- views --------------------------------------------------------------
    @property
    def mid(self) -> Fraction:
        return _frac(self.man, self.exp)

    @property
    def rad(self) -> Fraction:
        return _frac(self.rman, self.rexp)

    def lower(self) -> Fraction:
        return self.mid - self.rad

    def upper(self) -> Fraction:
        return self.mid + self.rad

    def is_exact(self) -> bool:
        return self.rman == 0

    def rad_log2(self) -> float:
        """log2 of the radius (``-inf`` for exact balls)."""
        if self.rman == 0:
            return float("-inf")
        return math.log2(self.rman) + self.rexp

    def mag_upper(self) -> Fraction:
        return abs(self.mid) + self.rad

    def mag_lower(self) -> Fraction:
        return max(Fraction(0), abs(self.mid) - self.rad)

    def __float__(self) -> float:
        return float(self.mid)

    def contains(self, x) -> bool:
        if isinstance(x, RealBall):
            return self.lower() <= x.lower() and x.upper() <= self.upper()
        return self.lower() <= Fraction(x) <= self.upper()

    def overlaps(self, other: "RealBall") -> bool:
        other = RealBall.from_value(other, self.prec)
        return self.lower() <= other.upper() and other.lower() <= self.upper()

    def contains_zero(self) -> bool:
        return abs(self.mid) <= self.rad

    def certainly_lt(self, other) -> bool:
        other = RealBall.from_value(other, self.prec)
        return self.upper() < other.lower()

    def certainly_le(self, other) -> bool:
        other = RealBall.from_value(other, self.prec)
        return self.upper() <= other.lower()

    def certainly_gt(self, other) -> bool:
        other = RealBall.from_value(other, self.prec)
        return self.lower() > other.upper()

    def certainly_ge(self, other) -> bool:
        other = RealBall.from_value(other, self.prec)
        return self.lower() >= other.upper()

    # -- arithmetic -----------------------------------------------------------
    def _p(self, other) -> int:
        return max(self.prec, getattr(other, "prec", 0))

    def __neg__(self) -> "RealBall":
        return RealBall(-self.man, self.exp, self.rman, self.rexp, self.prec)

    def __pos__(self) -> "RealBall":
        return self

    def __abs__(self) -> "RealBall":
        if self.contains_zero() and self.rman:
            return RealBall.from_endpoints(Fraction(0), self.mag_upper(), self.prec)
        return RealBall(abs(self.man), self.exp, self.rman, self.rexp, self.prec)

    def __add__(self, other):
        if isinstance(other, ComplexBall):
            return NotImplemented
        return ball_add(self, other, self._p(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ComplexBall):
            return NotImplemented
        return ball_sub(self, other, self._p(other))

    def __rsub__(self, other):
        return ball_sub(other, self, self._p(other))

    def __mul__(self, other):
        if isinstance(other, ComplexBall):
            return NotImplemented
        return ball_mul(self, other, self._p(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ComplexBall):
            return NotImplemented
        return ball_div(self, other, self._p(other))

    def __rtruediv__(self, other):
        return ball_div(other, self, self._p(other))

    def __pow__(self, n: int):
        return ball_pow(self, n, self.prec)

    def with_prec(self, prec: int) -> "RealBall":
        return RealBall(self.man, self.exp, self.rman, self.rexp, prec)

    def sqr(self) -> "RealBall":
        sq = _real_mul(self, self, self.prec)
        if sq.lower() < 0:
            return RealBall.from_endpoints(Fraction(0), sq.upper(), self.prec)
        return sq

    def sqrt(self) -> "RealBall":
        if self.upper() < 0:
            raise ValueError("sqrt of a negative enclosure")
        prec = self.prec
        lo = max(Fraction(0), self.lower())
        hi = self.upper()
        lo_b = _sqrt_lower(lo, prec)
        hi_b = _sqrt_upper(hi, prec)
        return RealBall.from_endpoints(lo_b, hi_b, prec)

    # -- serialization ----------------------------------------------------------
    def to_json(self) -> dict:
        mid, rad = decimal_strings(self)
        return {"mid": mid, "rad": rad}

    def __repr__(self) -> str:
        mid, rad = decimal_strings(self, digits=20)
        return f"RealBall({mid} +/- {rad})"

    def __str__(self) -> str:
        mid, rad = decimal_strings(self, digits=20)
        return f"[{mid} +/- {rad}]"


def _sqrt_lower(x: Fraction, prec: int) -> Fraction:
    if x <= 0:
        return Fraction(0)
    n, d = x.numerator, x.denominator
    k = max(0, prec + 4 - (n.bit_length() - d.bit_length()) // 2)
    # sqrt(n/d) = sqrt(n*d)/d
    s = math.isqrt((n * d) << (2 * k))
    return Fraction(s, d << k)


def _sqrt_upper(x: Fraction, prec: int) -> Fraction:
    if x <= 0:
        return Fraction(0)
    n, d = x.numerator, x.denominator
    k = max(0, prec + 4 - (n.bit_length() - d.bit_length()) // 2)
    s = math.isqrt((n * d) << (2 * k))
    if s * s != (n * d) << (2 * k):
        s += 1
    return Fraction(s, d << k)


# ---------------------------------------------------------------------------
# ComplexBall
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComplexBall:
    re: RealBall
    im: RealBall

    @classmethod
    def from_value(cls, x, prec: int = DEFAULT_PREC) -> "ComplexBall":
        if isinstance(x, ComplexBall):
            return x
        if isinstance(x, complex):
            return cls(RealBall.from_value(x.real, prec), RealBall.from_value(x.imag, prec))
        return cls(RealBall.from_value(x, prec), RealBall.from_value(0, prec))

    @property
    def prec(self) -> int:
        return max(self.re.prec, self.im.prec)

    def is_real(self) -> bool:
        return self.im.man == 0 and self.im.rman == 0

    def is_exact(self) -> bool:
        return self.re.is_exact() and self.im.is_exact()

    def contains_zero(self) -> bool:
        return self.re.contains_zero() and self.im.contains_zero()

    def contains(self, z) -> bool:
        if isinstance(z, ComplexBall):
            return self.re.contains(z.re) and self.im.contains(z.im)
        if isinstance(z, complex):
            return self.re.contains(Fraction(z.real)) and self.im.contains(Fraction(z.imag))
        return self.re.contains(z) and self.im.contains(0)

    def overlaps(self, other) -> bool:
        other = ComplexBall.from_value(other, self.prec)
        return self.re.overlaps(other.re) and self.im.overlaps(other.im)

    def rad_upper(self) -> Fraction:
        """Upper bound on the Euclidean radius of the enclosing rectangle."""
        return self.re.rad + self.im.rad

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def conjugate(self) -> "ComplexBall":
        return ComplexBall(self.re, -self.im)

    def with_prec(self, prec: int) -> "ComplexBall":
        return ComplexBall(self.re.with_prec(prec), self.im.with_prec(prec))

    def __neg__(self):
        return ComplexBall(-self.re, -self.im)

    def __add__(self, other):
        return ball_add(self, other, max(self.prec, getattr(other, "prec", 0)))

    __radd__ = __add__

    def __sub__(self, other):
        return ball_sub(self, other, max(self.prec, getattr(other, "prec", 0)))

    def __rsub__(self, other):
        return ball_sub(other, self, max(self.prec, getattr(other, "prec", 0)))

    def __mul__(self, other):
        return ball_mul(self, other, max(self.prec, getattr(other, "prec", 0)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ball_div(self, other, max(self.prec, getattr(other, "prec", 0)))

    def __rtruediv__(self, other):
        return ball_div(other, self, max(self.prec, getattr(other, "prec", 0)))

    def __pow__(self, n: int):
        return ball_pow(self, n, self.prec)

    def abs(self) -> RealBall:
        return ball_abs(self, self.prec)

    def to_json(self) -> dict:
        return {"re": self.re.to_json(), "im": self.im.to_json()}

    def __repr__(self) -> str:
        return f"ComplexBall({self.re}, {self.im})"


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def _is_complex(*xs) -> bool:
    return any(isinstance(x, (ComplexBall, complex)) for x in xs)


def _real_add(a: RealBall, b: RealBall, prec: int) -> RealBall:
    if a.exp >= b.exp:
        m, e = (a.man << (a.exp - b.exp)) + b.man, b.exp
    else:
        m, e = a.man + (b.man << (b.exp - a.exp)), a.exp
    m, e, em, ee = _round_mid(m, e, prec)
    r, f = _rad_sum((a.rman, a.rexp), (b.rman, b.rexp), (em, ee))
    return RealBall(m, e, r, f, prec)


def _real_mul(a: RealBall, b: RealBall, prec: int) -> RealBall:
    m, e, em, ee = _round_mid(a.man * b.man, a.exp + b.exp, prec)
    r, f = _rad_sum(
        _rad_mul(a.man, a.exp, b.rman, b.rexp),
        _rad_mul(b.man, b.exp, a.rman, a.rexp),
        _rad_mul(a.rman, a.rexp, b.rman, b.rexp),
        (em, ee),
    )
    return RealBall(m, e, r, f, prec)


def _real_div(a: RealBall, b: RealBall, prec: int) -> RealBall:
    if b.contains_zero():
        raise DivisorMayBeZero("divisor enclosure contains 0")
    if a.man == 0 and a.rman == 0:
        return RealBall(0, 0, 0, 0, prec)
    s = prec + 2 + b.man.bit_length() - a.man.bit_length()
    s = max(s, 0)
    num = a.man << s
    qm = num // b.man
    exact = qm * b.man == num
    e = a.exp - b.exp - s
    m, e2, em, ee = _round_mid(qm, e, prec)
    trunc = (0, 0) if exact else (1, e)
    if a.rman == 0 and b.rman == 0:
        r, f = _rad_sum(trunc, (em, ee))
        return RealBall(m, e2, r, f, prec)
    # |a/b - ma/mb| <= (ra + |ma/mb| rb) / (|mb| - rb)
    q_abs = abs(_frac(qm, e)) + _frac(1, e)
    denom = abs(b.mid) - b.rad
    prop = (a.rad + q_abs * b.rad) / denom
    r, f = _rad_sum(trunc, (em, ee), _up_from_fraction(prop))
    return RealBall(m, e2, r, f, prec)


def _real(x, prec: int) -> RealBall:
    return RealBall.from_value(x, prec)


def _cplx(x, prec: int) -> ComplexBall:
    return ComplexBall.from_value(x, prec)


def ball_add(a, b, prec: int):
    """Enclosure of ``a + b``."""
    if _is_complex(a, b):
        a, b = _cplx(a, prec), _cplx(b, prec)
        return ComplexBall(_real_add(a.re, b.re, prec), _real_add(a.im, b.im, prec))
    return _real_add(_real(a, prec), _real(b, prec), prec)


def ball_sub(a, b, prec: int):
    if _is_complex(a, b):
        return ball_add(a, -_cplx(b, prec), prec)
    return _real_add(_real(a, prec), -_real(b, prec), prec)


def ball_mul(a, b, prec: int):
    """Enclosure of ``a * b``."""
    if _is_complex(a, b):
        a, b = _cplx(a, prec), _cplx(b, prec)
        if b.is_real():
            return ComplexBall(_real_mul(a.re, b.re, prec), _real_mul(a.im, b.re, prec))
        if a.is_real():
            return ComplexBall(_real_mul(a.re, b.re, prec), _real_mul(a.re, b.im, prec))
        re = _real_add(_real_mul(a.re, b.re, prec), -_real_mul(a.im, b.im, prec), prec)
        im = _real_add(_real_mul(a.re, b.im, prec), _real_mul(a.im, b.re, prec), prec)
        return ComplexBall(re, im)
    return _real_mul(_real(a, prec), _real(b, prec), prec)


def ball_div(a, b, prec: int):
    """Enclosure of ``a / b``; raises DivisorMayBeZero if ``b`` may vanish."""
    if _is_complex(a, b):
        a, b = _cplx(a, prec), _cplx(b, prec)
        if b.is_real():
            return ComplexBall(_real_div(a.re, b.re, prec), _real_div(a.im, b.re, prec))
        n2 = _real_add(b.re.sqr(), b.im.sqr(), prec)
        if n2.contains_zero():
            raise DivisorMayBeZero("divisor enclosure contains 0")
        num = ball_mul(a, b.conjugate(), prec)
        return ComplexBall(_real_div(num.re, n2, prec), _real_div(num.im, n2, prec))
    return _real_div(_real(a, prec), _real(b, prec), prec)


def ball_pow(a, n: int, prec: int):
    """Enclosure of ``a**n`` for an integer exponent (binary powering)."""
    if isinstance(n, (RealBall, ComplexBall)):
        raise TypeError("only integer exponents are supported")
    n = int(n)
    is_c = _is_complex(a)
    one = _cplx(1, prec) if is_c else _real(1, prec)
    a = _cplx(a, prec) if is_c else _real(a, prec)
    if n < 0:
        return ball_div(one, ball_pow(a, -n, prec), prec)
    result = one
    base = a
    while n:
        if n & 1:
            result = ball_mul(result, base, prec)
        n >>= 1
        if n:
            base = base.sqr() if isinstance(base, RealBall) else ball_mul(base, base, prec)
    return result


def ball_abs(a, prec: int) -> RealBall:
    """Enclosure of ``|a|``."""
    if isinstance(a, ComplexBall):
        if a.is_real():
            return abs(a.re.with_prec(prec))
        if a.re.is_exact() and a.im.is_exact():
            n2 = a.re.mid ** 2 + a.im.mid ** 2
            lo, hi = _sqrt_lower(n2, prec), _sqrt_upper(n2, prec)
            if lo == hi:
                return RealBall.from_value(lo, prec)
            return RealBall.from_endpoints(lo, hi, prec)
        n2 = _real_add(a.re.with_prec(prec).sqr(), a.im.with_prec(prec).sqr(), prec)
        return n2.sqrt()
    return abs(_real(a, prec))


def ball_max(a: RealBall, b, prec: Optional[int] = None) -> RealBall:
    prec = prec or a.prec
    b = _real(b, prec)
    if a.lower() >= b.upper():
        return a
    if b.lower() >= a.upper():
        return b
    return RealBall.from_endpoints(max(a.lower(), b.lower()), max(a.upper(), b.upper()), prec)


def ball_min(a: RealBall, b, prec: Optional[int] = None) -> RealBall:
    prec = prec or a.prec
    b = _real(b, prec)
    if a.upper() <= b.lower():
        return a
    if b.upper() <= a.lower():
        return b
    return RealBall.from_endpoints(min(a.lower(), b.lower()), min(a.upper(), b.upper()), prec)


def enclosure_contains_integer(a: RealBall) -> Optional[int]:
    """The unique integer inside ``a``, ``None`` if there is none.

    Raises AmbiguousEnclosure when two or more integers fit.
    """
    lo, hi = a.lower(), a.upper()
    first = math.ceil(lo)
    last = math.floor(hi)
    if first > last:
        return None
    if first == last:
        return int(first)
    raise AmbiguousEnclosure(f"enclosure [{float(lo)}, {float(hi)}] contains several integers")


# ---------------------------------------------------------------------------
# decimal output
# ---------------------------------------------------------------------------

def _fraction_to_decimal_exact(x: Fraction, max_digits: int) -> Optional[Decimal]:
    """Exact decimal form of a dyadic rational, if it has at most ~max_digits digits."""
    d = x.denominator
    if d & (d - 1):
        return None
    k = d.bit_length() - 1
    if abs(x.numerator).bit_length() * 0.30103 + k * 0.69897 > max_digits + 2:
        return None
    with localcontext() as ctx:
        ctx.prec = max_digits + 8
        return Decimal(x.numerator * 5 ** k).scaleb(-k)


def _sig_digits(d: Decimal) -> int:
    return len("".join(map(str, d.as_tuple().digits)).strip("0")) or 1


def _fmt(d: Decimal) -> str:
    if d == 0:
        return "0"
    with localcontext() as ctx:
        ctx.prec = max(28, len(d.as_tuple().digits))
        d = d.normalize()
    adj = d.adjusted()
    if -30 <= adj <= 60:
        s = format(d, "f")
    else:
        s = format(d, "E").replace("E", "e")
    return s


def decimal_strings(b: RealBall, digits: Optional[int] = None) -> tuple[str, str]:
    """Decimal (mid, rad) strings; the printed radius covers conversion error."""
    mid = b.mid
    if digits is None:
        digits = int(b.prec * 0.30103) + 3
        if b.rad and mid:
            # enough digits to resolve the ball, not the whole working precision
            lg = math.log10(abs(mid.numerator)) - math.log10(mid.denominator)
            span = math.floor(lg) - math.floor(b.rad_log2() * 0.30103)
            digits = min(digits, max(6, span + 4))
    exact = _fraction_to_decimal_exact(mid, digits)
    extra = Fraction(0)
    if exact is not None and _sig_digits(exact) <= digits:
        dmid = exact
    else:
        with localcontext() as ctx:
            ctx.prec = digits
            ctx.rounding = ROUND_HALF_EVEN
            dmid = Decimal(mid.numerator) / Decimal(mid.denominator)
        extra = abs(Fraction(dmid) - mid)
    rad = b.rad + extra
    if rad == 0:
        return _fmt(dmid), "0"
    with localcontext() as ctx:
        ctx.prec = 3
        ctx.rounding = ROUND_CEILING
        drad = Decimal(rad.numerator) / Decimal(rad.denominator)
        drad = drad.normalize()
    return _fmt(dmid), format(drad, "E").replace("E", "e").replace("e+", "e")


def ball_from_json(obj: dict, prec: int = DEFAULT_PREC):
    """Inverse of ``to_json``; the decimal radius is widened to cover the midpoint."""
    if "re" in obj:
        return ComplexBall(ball_from_json(obj["re"], prec), ball_from_json(obj["im"], prec))
    mid = Fraction(Decimal(obj["mid"]))
    rad = Fraction(Decimal(obj["rad"]))
    if rad == 0:
        b = RealBall.from_value(mid, prec)
        return b
    return RealBall.from_endpoints(mid - rad, mid + rad, prec)
