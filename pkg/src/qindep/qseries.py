"""Certified evaluation of the q-exponential family.

Every series handled here has the shape

    sum_{n >= n0} r_j(n) x^(n - s) / D_n

with ``r_j`` the falling factorial and either cumulative denominators
``D_n = g(1) g(2) ... g(n)`` (E_q, T_q, E_{q,P}, E_{q,M}) or ``D_n = q^n - 1``
(L_q and its value at 1).  Sums are truncated adaptively and a geometric
majorant for the remainder is folded into the radius of the result.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Union

from .errors import (
    DenominatorVanishes,
    DivisorMayBeZero,
    DomainViolation,
    PrecisionExhausted,
    ThresholdNotReached,
    UsageError,
)
from .numberfield import FieldElement, NumberField, embed, field_create, parse_element
from .numerics import (
    DEFAULT_PREC,
    ComplexBall,
    RealBall,
    ball_abs,
    check_prec,
)
from .polynomials import MAX_DOUBLINGS, degree, parse_poly, poly_eval, poly_str, trim

KINDS = ("Eq", "Lq", "ZetaQ1", "EqP", "Tq", "EqM")
_KIND_ALIASES = {k.lower(): k for k in KINDS}
MAX_TERMS = 50_000

Argument = Union[FieldElement, ComplexBall, RealBall, int, Fraction, complex]


def normalize_kind(kind: str) -> str:
    k = _KIND_ALIASES.get(str(kind).lower().replace("_", "").replace("-", ""))
    if k is None:
        raise UsageError(f"unknown function kind {kind!r}; expected one of {', '.join(KINDS)}")
    return k


def falling_factorial(j: int, n: int) -> int:
    """r_j(n) = n (n-1) ... (n-j+1); r_0 = 1."""
    if j < 0:
        raise ValueError("order must be nonnegative")
    out = 1
    for i in range(j):
        out *= n - i
    return out


@dataclass(frozen=True)
class SeriesSpec:
    """Which function to evaluate, at which argument, over which q.

    ``M`` is the progression modulus of E_{q,M}; the derivative order is a
    separate field and the two are never conflated.
    """

    kind: str
    field: NumberField
    x: Argument = 1
    P: Optional[tuple[int, ...]] = None
    M: int = 1
    derivative_order: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", normalize_kind(self.kind))
        if self.kind == "EqP":
            if self.P is None or degree(self.P) < 1:
                raise UsageError("EqP needs a nonconstant integer polynomial P")
            object.__setattr__(self, "P", tuple(int(c) for c in trim(self.P)))
        if self.kind == "EqM" and int(self.M) < 1:
            raise UsageError("progression modulus M must be a positive integer")
        if self.derivative_order < 0:
            raise UsageError("derivative order must be nonnegative")
        if self.kind == "ZetaQ1":
            object.__setattr__(self, "x", 1)

    @property
    def denominator_poly(self) -> Optional[tuple[int, ...]]:
        """P with D_n = prod_{t<=n} P(q^t), or None for the other shapes."""
        if self.kind == "Eq":
            return (-1, 1)
        if self.kind == "Tq":
            return (0, 1)
        if self.kind == "EqP":
            return self.P
        return None

    @property
    def cumulative(self) -> bool:
        return self.kind not in ("Lq", "ZetaQ1")

    def to_record(self) -> dict:
        rec = {
            "kind": self.kind,
            "q_poly": poly_str(self.field.min_poly),
            "root": self.field.root_selector,
            "x": _arg_text(self.x),
            "j": self.derivative_order,
        }
        if self.kind == "EqP":
            rec["P"] = poly_str(self.P)
        if self.kind == "EqM":
            rec["M"] = self.M
        return rec

    def to_text(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)

    @classmethod
    def from_record(cls, rec: dict, prec: int = DEFAULT_PREC) -> "SeriesSpec":
        F = field_from_text(str(rec.get("q_poly", rec.get("q", "2"))), rec.get("root", "max_real"), prec)
        P = parse_poly(rec["P"]) if rec.get("P") is not None else None
        x = parse_argument(F, str(rec.get("x", "1")))
        return cls(rec["kind"], F, x, P, int(rec.get("M", 1)), int(rec.get("j", 0)))

    @classmethod
    def from_text(cls, text: str, prec: int = DEFAULT_PREC) -> "SeriesSpec":
        return cls.from_record(json.loads(text), prec)

    def evaluate(self, prec: int) -> ComplexBall:
        return eval_series(self, prec)


def _arg_text(x) -> str:
    if isinstance(x, FieldElement):
        return str(x)
    if isinstance(x, ComplexBall):
        if x.is_real():
            return str(x.re.mid) if x.re.is_exact() else json.dumps(x.to_json())
        return json.dumps(x.to_json())
    if isinstance(x, RealBall):
        return str(x.mid) if x.is_exact() else json.dumps(x.to_json())
    if isinstance(x, complex):
        return f"{x.real!r}{x.imag:+}j"
    return str(x)


def field_from_text(text: str, root="max_real", prec: int = DEFAULT_PREC) -> NumberField:
    """``"2"`` or ``"3/2"`` gives a rational q; anything with x is a polynomial."""
    s = str(text).strip()
    if "x" in s.lower() or "," in s:
        return field_create(parse_poly(s), root, prec)
    try:
        v = Fraction(s)
    except ValueError:
        raise UsageError(f"cannot parse q {text!r}") from None
    return field_create([-v.numerator, v.denominator], "max_real", prec)


def parse_argument(F: NumberField, text: str) -> Argument:
    s = str(text).strip()
    if s.endswith("j") or "i" in s.lower():
        try:
            z = complex(s.replace("i", "j").replace("I", "j"))
        except ValueError:
            raise UsageError(f"cannot parse argument {text!r}") from None
        return ComplexBall(RealBall.from_value(Fraction(z.real)), RealBall.from_value(Fraction(z.imag)))
    return parse_element(F, s)


# ---------------------------------------------------------------------------
# exact q-analogues
# ---------------------------------------------------------------------------

def q_bracket(F: NumberField, n: int) -> FieldElement:
    """[n]_q = q^n - 1 as an exact element of Q(q)."""
    if n < 1:
        raise ValueError("q-bracket needs n >= 1")
    return F.q ** n - 1


def q_factorial(F: NumberField, n: int) -> FieldElement:
    """[n]_q! = (q^n - 1) ... (q - 1); the empty product for n = 0."""
    if n < 0:
        raise ValueError("q-factorial needs n >= 0")
    out = F.one()
    qn = F.one()
    for _ in range(n):
        qn = qn * F.q
        out = out * (qn - 1)
    return out


def denominator_factor_exact(spec: SeriesSpec, n: int) -> FieldElement:
    """g(n) = D_n / D_{n-1} for cumulative kinds, exactly."""
    F = spec.field
    if spec.kind == "EqM":
        out = F.one()
        for t in range(spec.M * (n - 1) + 1, spec.M * n + 1):
            out = out * (F.q ** t - 1)
        return out
    P = spec.denominator_poly
    qt = F.q ** n
    acc = F.zero()
    for c in reversed(P):
        acc = acc * qt + c
    return acc


def _as_element(spec: SeriesSpec, x) -> FieldElement:
    if isinstance(x, FieldElement):
        return x
    if isinstance(x, (int, Fraction)):
        return spec.field.element(x)
    raise TypeError("exact evaluation needs a rational or field-element argument")


def partial_sum_exact(spec: SeriesSpec, N: int, shift: Optional[int] = None) -> FieldElement:
    """Exact sum of the terms with n <= N (``shift`` defaults to the derivative order)."""
    F = spec.field
    j = spec.derivative_order
    s = j if shift is None else shift
    x = _as_element(spec, spec.x)
    n0 = j if spec.cumulative else max(1, j)
    if not spec.cumulative:
        total = F.zero()
        for n in range(n0, N + 1):
            total = total + falling_factorial(j, n) * x ** (n - s) / q_bracket(F, n)
        return total
    # Horner form: A_N = A_{N-1} g(N) + r_j(N) x^(N-s); sum = A_N / D_N
    acc = F.one() if n0 == 0 else F.zero()
    D = F.one()
    for n in range(1, N + 1):
        g = denominator_factor_exact(spec, n)
        if g.is_zero():
            raise DenominatorVanishes(f"P(q^{n}) = 0")
        acc = acc * g
        D = D * g
        if n >= n0:
            acc = acc + falling_factorial(j, n) * x ** (n - s)
    return acc / D


# ---------------------------------------------------------------------------
# numeric evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeriesResult:
    value: ComplexBall
    terms: int
    tail: Fraction
    work_prec: int


def _q_ball(spec: SeriesSpec, work: int) -> ComplexBall:
    return embed(spec.field.q, 1, work).with_prec(work)


def _x_ball(spec: SeriesSpec, work: int) -> ComplexBall:
    x = spec.x
    if isinstance(x, FieldElement):
        return embed(x, 1, work).with_prec(work)
    if isinstance(x, RealBall):
        return ComplexBall(x.with_prec(work), RealBall(0, 0, 0, 0, work))
    if isinstance(x, ComplexBall):
        return x.with_prec(work)
    if isinstance(x, complex):
        return ComplexBall(RealBall.from_value(Fraction(x.real), work),
                           RealBall.from_value(Fraction(x.imag), work))
    return ComplexBall.from_value(Fraction(x), work)


def _lower_bound_poly_at_power(P: Sequence[int], qlo: Fraction, t: int) -> Fraction:
    """Lower bound of |P(q^t)| valid for every |q| >= qlo (<= 0 means no bound)."""
    D = len(P) - 1
    Q = RealBall.from_value(qlo, 64)
    Qt = Q ** t
    lead = RealBall.from_value(abs(P[-1]), 64) * Qt ** D
    rest = RealBall.from_value(0, 64)
    for i in range(D):
        if P[i]:
            rest = rest + abs(P[i]) * Qt ** i
    return (lead - rest).lower()


class _Evaluator:
    def __init__(self, spec: SeriesSpec, work: int, shift: int):
        self.spec = spec
        self.work = work
        self.j = spec.derivative_order
        self.s = shift
        self.q = _q_ball(spec, work)
        self.x = _x_ball(spec, work)
        self.real = self.q.is_real() and self.x.is_real()
        qabs = ball_abs(self.q, work)
        self.qlo = _trunc_down(qabs.lower(), 64)
        self.xhi = _trunc_up(ball_abs(self.x, work).upper(), 64)
        if self.qlo <= 1:
            if qabs.certainly_le(1):
                raise DomainViolation("the series need |q| > 1")
            raise DomainViolation("cannot certify |q| > 1")
        if spec.kind in ("Lq", "ZetaQ1"):
            if not ball_abs(self.x, work).certainly_lt(qabs):
                raise DomainViolation("L_q(x) needs |x| < |q|")
            self.limit_ratio = self.xhi / self.qlo
        else:
            self.limit_ratio = Fraction(0)
        self.tau = max(Fraction(1, 2), (1 + self.limit_ratio) / 2)
        if spec.kind == "EqP":
            self._check_denominators()

    def _check_denominators(self):
        """P(q^t) != 0 for every t >= 1: exact up to t0, none beyond."""
        spec = self.spec
        t0 = 1
        while _lower_bound_poly_at_power(spec.P, self.qlo, t0) <= 0:
            t0 += 1
            if t0 > 10_000:
                raise PrecisionExhausted("could not locate the P(q^t) != 0 threshold")
        for t in range(1, t0):
            if denominator_factor_exact(spec, t).is_zero():
                raise DenominatorVanishes(f"P(q^{t}) = 0")
        self.t0 = t0

    def factor(self, n: int, qpow: ComplexBall) -> ComplexBall:
        """g(n) given qpow = q^n (cumulative kinds)."""
        if self.spec.kind == "EqM":
            M = self.spec.M
            out = ComplexBall.from_value(1, self.work)
            qt = self.q ** (M * (n - 1) + 1)
            for _ in range(M):
                out = out * (qt - 1)
                qt = qt * self.q
            return out
        return poly_eval(self.spec.denominator_poly, qpow)

    def factor_lower(self, n: int) -> Fraction:
        """Lower bound on |g(m)| valid for all m >= n."""
        if self.spec.kind == "EqM":
            M = self.spec.M
            Q = RealBall.from_value(self.qlo, 64)
            out = RealBall.from_value(1, 64)
            for t in range(M * (n - 1) + 1, M * n + 1):
                out = out * (Q ** t - 1)
            return out.lower()
        return _lower_bound_poly_at_power(self.spec.denominator_poly, self.qlo, n)

    def ratio_bound(self, N: int) -> Optional[Fraction]:
        """Bound on |a_{m+1} / a_m| for every m >= N + 1, or None."""
        j = self.j
        w = Fraction(N + 2, N + 2 - j) if j else Fraction(1)
        if self.spec.cumulative:
            lo = self.factor_lower(N + 2)
            if lo <= 0:
                return None
            return w * self.xhi / lo
        Q = RealBall.from_value(self.qlo, 64)
        num = (Q ** (N + 1) + 1).upper()
        den = (Q ** (N + 2) - 1).lower()
        if den <= 0:
            return None
        return w * self.xhi * num / den

    def terms(self) -> Iterator[tuple[int, ComplexBall]]:
        work, j, s = self.work, self.j, self.s
        one = ComplexBall.from_value(1, work)
        if self.spec.cumulative:
            n0 = j
            D = one
            qpow = one
            for n in range(1, n0 + 1):
                qpow = qpow * self.q
                D = D * self.factor(n, qpow)
            try:
                u = self.x ** (n0 - s) / D
            except DivisorMayBeZero:
                raise DenominatorVanishes("a denominator enclosure contains 0") from None
            n = n0
            while True:
                yield n, falling_factorial(j, n) * u
                n += 1
                qpow = qpow * self.q
                try:
                    u = u * self.x / self.factor(n, qpow)
                except DivisorMayBeZero:
                    raise DenominatorVanishes(f"enclosure of the factor at n={n} contains 0") from None
        else:
            n = max(1, j)
            qpow = self.q ** n
            xp = self.x ** (n - s)
            while True:
                yield n, falling_factorial(j, n) * xp / (qpow - 1)
                n += 1
                qpow = qpow * self.q
                xp = xp * self.x

    def run(self, target: Fraction, N_fixed: Optional[int] = None) -> SeriesResult:
        it = self.terms()
        n, a = next(it)
        total = ComplexBall.from_value(0, self.work)
        while True:
            total = total + a
            n1, a1 = next(it)
            if n >= self.j:
                rho = self.ratio_bound(n)
                if N_fixed is not None and n >= N_fixed:
                    if rho is None or rho > self.tau:
                        raise ThresholdNotReached(
                            f"truncation N={N_fixed} is below the geometric-decay threshold")
                    tail = ball_abs(a1, self.work).upper() / (1 - rho)
                    return SeriesResult(_widen(total, tail, self.real), n, tail, self.work)
                if N_fixed is None and rho is not None and rho <= self.tau:
                    tail = ball_abs(a1, self.work).upper() / (1 - rho)
                    scale = max(Fraction(1), abs(total.re.mid) + abs(total.im.mid))
                    if tail <= target * scale:
                        return SeriesResult(_widen(total, tail, self.real), n, tail, self.work)
            if n > MAX_TERMS:
                raise PrecisionExhausted("series did not converge within the term budget")
            n, a = n1, a1


def _grid(x: Fraction, bits: int, up: bool) -> Fraction:
    """Round ``x`` to ``bits`` significant bits, downwards or upwards."""
    if x == 0:
        return x
    k = bits - (abs(x.numerator).bit_length() - x.denominator.bit_length())
    scale = Fraction(2) ** k
    v = x * scale
    r = -((-v.numerator) // v.denominator) if up else v.numerator // v.denominator
    return Fraction(r) / scale


def _trunc_down(x: Fraction, bits: int) -> Fraction:
    return _grid(x, bits, up=False)


def _trunc_up(x: Fraction, bits: int) -> Fraction:
    return _grid(x, bits, up=True)


def _widen(z: ComplexBall, t: Fraction, real: bool) -> ComplexBall:
    """Add the disk of radius ``t`` (a real segment for real series)."""
    if t == 0:
        return z
    tb = RealBall.from_endpoints(-t, t, z.prec)
    if real:
        return ComplexBall(z.re + tb, z.im)
    return ComplexBall(z.re + tb, z.im + tb)


def evaluate(spec: SeriesSpec, prec: int = DEFAULT_PREC, *, shift: Optional[int] = None,
             mode: str = "numeric") -> SeriesResult:
    """Evaluate with a tail bound; radius at most 2**-prec * max(1, |value|).

    ``shift`` selects the power of x in each term (default: the derivative
    order, i.e. the j-th derivative; 0 gives the f_j = x^j E^(j) form).
    ``mode="exact"`` sums the truncated series exactly in Q(q) first.
    """
    prec = check_prec(prec)
    s = spec.derivative_order if shift is None else shift
    work = prec + 32
    target = Fraction(1, 1 << (prec + 4))
    last_rad = None
    for _ in range(MAX_DOUBLINGS + 1):
        ev = _Evaluator(spec, work, s)
        res = ev.run(target)
        if mode == "exact":
            exact = partial_sum_exact(spec, res.terms, s)
            val = embed(exact, 1, work + 16).with_prec(work)
            res = SeriesResult(_widen(val, res.tail, ev.real), res.terms, res.tail, work)
        val = res.value
        rad = val.rad_upper()
        scale = max(Fraction(1), abs(val.re.mid) + abs(val.im.mid))
        if rad <= scale / (1 << prec):
            return res
        if last_rad is not None and rad * 2 > last_rad:
            # radius is dominated by the input enclosures
            return res
        last_rad = rad
        work *= 2
    raise PrecisionExhausted(f"could not reach {prec} bits for {spec.kind}")


def eval_series(spec: SeriesSpec, prec: int = DEFAULT_PREC, mode: str = "numeric") -> ComplexBall:
    """Enclosure of the function value (or its ``derivative_order``-th derivative)."""
    return evaluate(spec, prec, mode=mode).value


def f_j(spec: SeriesSpec, j: int, x: Argument = None, prec: int = DEFAULT_PREC) -> ComplexBall:
    """x^j times the j-th derivative, cross-checked against sum r_j(n) x^n / D_n."""
    if x is not None:
        spec = replace(spec, x=x)
    spec = replace(spec, derivative_order=j)
    weighted = evaluate(spec, prec, shift=0).value
    if j == 0:
        return weighted
    deriv = evaluate(spec, prec + 8).value
    xb = _x_ball(spec, prec + 40)
    direct = (xb ** j) * deriv
    if not direct.overlaps(weighted):
        raise AssertionError("f_j forms disagree; enclosure invariant violated")
    return weighted


def truncated(spec: SeriesSpec, N: int, prec: int = DEFAULT_PREC,
              shift: Optional[int] = None) -> SeriesResult:
    """Partial sum over n <= N widened by the certified tail bound for n > N.

    Raises ThresholdNotReached if at N the term ratios are not yet
    certified to stay below the geometric threshold (1/2 for the entire
    functions).  ``shift=0`` uses the terms r_j(n) x^n / D_n.
    """
    prec = check_prec(prec)
    s = spec.derivative_order if shift is None else shift
    ev = _Evaluator(spec, prec + 32, s)
    return ev.run(Fraction(0), N_fixed=max(N, s))


def tail_bound(spec: SeriesSpec, N: int, prec: int = DEFAULT_PREC,
               shift: Optional[int] = None) -> RealBall:
    """Exact-ball upper bound for |sum_{n > N}| of the series' terms."""
    res = truncated(spec, N, prec, shift)
    return RealBall.from_endpoints(res.tail, res.tail, prec) if res.tail else RealBall(0, 0, 0, 0, prec)


def decay_threshold(spec: SeriesSpec, prec: int = DEFAULT_PREC) -> int:
    """Smallest N at which tail_bound is available."""
    ev = _Evaluator(spec, check_prec(prec) + 32, spec.derivative_order)
    N = spec.derivative_order
    while True:
        rho = ev.ratio_bound(N)
        if rho is not None and rho <= ev.tau:
            return N
        N += 1
        if N > MAX_TERMS:
            raise PrecisionExhausted("no decay threshold found")
