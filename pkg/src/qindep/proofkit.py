"""Exact truncation quantities X_N from the independence proofs.

Everything that decides integrality or vanishing is exact field arithmetic;
balls only appear in the size comparisons against the bound shapes, which
are evaluated with implied constant 1 and reported next to the empirical
ratio |X_N| / bound.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from fractions import Fraction
from math import lcm
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .errors import DenominatorVanishes, FieldMismatch, ThresholdNotReached, UsageError
from .numberfield import (
    FieldElement,
    NumberField,
    embed,
    is_algebraic_integer,
    norm_exact,
    parse_element,
)
from .numerics import (
    ComplexBall,
    DEFAULT_PREC,
    RealBall,
    ball_abs,
    ball_div,
    ball_max,
    check_prec,
)
from .polynomials import degree, trim
from .qseries import SeriesSpec, f_j, falling_factorial, q_bracket, q_factorial, tail_bound
from .theorems import validate_a_list

__all__ = [
    "RelationCoeffs", "XNTrace", "ProgressionSetup", "EliminationTerm", "DichotomyReport",
    "falling_factorial", "A_poly", "parse_lambda", "xn_sequence_thm1", "compute_xn_thm1",
    "compute_xn_thm2", "factorial_quotient_identity", "elimination_terms",
    "norm_dichotomy_scan", "limit_check_thm1", "traces_thm1", "classify_norms",
    "DEFAULT_RANGE_THM1", "DEFAULT_RANGE_THM2",
]

DEFAULT_RANGE_THM1 = range(1, 31)
DEFAULT_RANGE_THM2 = range(1, 13)


@dataclass(frozen=True)
class RelationCoeffs:
    """lambda0 and the matrix lambdas[k][j] (point k, derivative order j).

    The progression machinery uses one-entry rows: lambdas[i] = (lambda_{i+1},).
    In both settings lambda0_tilde = lambda0 + sum_k lambdas[k][0].
    """

    lambda0: FieldElement
    lambdas: tuple[tuple[FieldElement, ...], ...]

    def __post_init__(self):
        F = self.lambda0.field
        for row in self.lambdas:
            if not row:
                raise UsageError("empty lambda row")
            for lam in row:
                if not lam.field.same_as(F):
                    raise FieldMismatch("lambda coefficients live in different fields")
        for lam in self.entries():
            if not is_algebraic_integer(lam):
                raise UsageError(f"lambda coefficient {lam} is not an algebraic integer; clear denominators first")

    @classmethod
    def build(cls, F: NumberField, lambda0, rows) -> "RelationCoeffs":
        conv = lambda v: v if isinstance(v, FieldElement) else F.element(v)
        return cls(conv(lambda0), tuple(tuple(conv(v) for v in row) for row in rows))

    @property
    def field(self) -> NumberField:
        return self.lambda0.field

    @property
    def m(self) -> int:
        return len(self.lambdas)

    @property
    def M(self) -> int:
        return max(len(r) for r in self.lambdas) - 1 if self.lambdas else 0

    @property
    def lambda0_tilde(self) -> FieldElement:
        out = self.lambda0
        for row in self.lambdas:
            out = out + row[0]
        return out

    def entries(self) -> list[FieldElement]:
        return [self.lambda0] + [lam for row in self.lambdas for lam in row]

    def is_zero(self) -> bool:
        return all(lam.is_zero() for lam in self.entries())

    def to_text(self) -> str:
        return ";".join([str(self.lambda0)] + [",".join(str(v) for v in row) for row in self.lambdas])


def _split_top(text: str, sep: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [s.strip() for s in out]


def parse_lambda(F: NumberField, text: str) -> RelationCoeffs:
    """'l0;l01,l11,...;l02,...' with entries rational or '[c0,c1,...]' in the power basis."""
    segs = _split_top(re.sub(r"\s+", "", text), ";")
    if len(segs) < 2 or any(s == "" for s in segs):
        raise UsageError(f"lambda spec {text!r} needs 'lambda0;row1[;row2...]'")
    l0 = parse_element(F, segs[0])
    rows = [[parse_element(F, e) for e in _split_top(seg, ",")] for seg in segs[1:]]
    return RelationCoeffs.build(F, l0, rows)


def A_poly(coeffs: RelationCoeffs, k: int, n: int) -> FieldElement:
    """A_k(n) = sum_j lambda_{j,k} r_j(n), with k 1-based."""
    if not 1 <= k <= coeffs.m:
        raise IndexError(f"point index {k} out of range 1..{coeffs.m}")
    out = coeffs.field.zero()
    for j, lam in enumerate(coeffs.lambdas[k - 1]):
        r = falling_factorial(j, n)
        if r and not lam.is_zero():
            out = out + lam * r
    return out


@dataclass(frozen=True)
class XNTrace:
    N: int
    xn_exact: FieldElement
    conj_enclosures: tuple[ComplexBall, ...]
    norm: Fraction
    bound_main: RealBall
    bound_conj: tuple[RealBall, ...]
    ratio_main: Optional[RealBall] = None
    ratio_conj: tuple[Optional[RealBall], ...] = ()

    @property
    def integral(self) -> bool:
        return is_algebraic_integer(self.xn_exact)

    @property
    def bound_product(self) -> RealBall:
        out = self.bound_main
        for b in self.bound_conj:
            out = out * b
        return out

    def to_row(self) -> dict:
        ratio = lambda r: r.to_json() if r is not None else None
        return {
            "N": self.N,
            "norm": str(self.norm),
            "xn": str(self.xn_exact),
            "abs_conj": [ball_abs(z, z.prec).to_json() for z in self.conj_enclosures],
            "bound_main": self.bound_main.to_json(),
            "bound_conj": [b.to_json() for b in self.bound_conj],
            "ratio_main": ratio(self.ratio_main),
            "ratio_conj": [ratio(r) for r in self.ratio_conj],
            "integral": self.integral,
        }


def _ratio(z: ComplexBall, bound: RealBall, prec: int) -> Optional[RealBall]:
    if bound.contains_zero():
        return None
    return ball_div(ball_abs(z, prec), bound, prec)


def _finish_trace(N: int, xn: FieldElement, main: RealBall, conj: Sequence[RealBall],
                  prec: int) -> XNTrace:
    zs = tuple(embed(xn, l, prec) for l in range(1, xn.field.degree + 1))
    return XNTrace(
        N, xn, zs, norm_exact(xn), main, tuple(conj),
        _ratio(zs[0], main, prec),
        tuple(_ratio(z, b, prec) for z, b in zip(zs[1:], conj)),
    )


def _poly_at(P: Sequence[int], z: FieldElement) -> FieldElement:
    out = z.field.zero()
    for c in reversed(P):
        out = out * z + c
    return out


def _check_inputs(F: NumberField, alphas: Sequence[FieldElement], coeffs: RelationCoeffs):
    if len(alphas) != coeffs.m:
        raise UsageError(f"{len(alphas)} alphas but {coeffs.m} lambda rows")
    for a in list(alphas) + [coeffs.lambda0]:
        if not a.field.same_as(F):
            raise FieldMismatch("inputs live in different fields")


def xn_sequence_thm1(F: NumberField, P: Sequence[int], alphas: Sequence[FieldElement],
                     coeffs: RelationCoeffs, N_max: int) -> Iterator[tuple[int, FieldElement, FieldElement]]:
    """Yield (N, X_N, prod_{t<=N} P(q^t)) for N = 0..N_max.

    X_N = X_{N-1} P(q^N) + sum_k A_k(N) alpha_k^N, X_0 = lambda0_tilde.
    """
    P = trim([int(c) for c in P])
    _check_inputs(F, alphas, coeffs)
    x = coeffs.lambda0_tilde
    den = F.one()
    qt = F.one()
    powers = [F.one() for _ in alphas]
    yield 0, x, den
    for n in range(1, N_max + 1):
        qt = qt * F.q
        pq = _poly_at(P, qt)
        if pq.is_zero():
            raise DenominatorVanishes(f"P(q^{n}) = 0")
        s = F.zero()
        for k, a in enumerate(alphas):
            powers[k] = powers[k] * a
            A = A_poly(coeffs, k + 1, n)
            if not A.is_zero():
                s = s + A * powers[k]
        x = x * pq + s
        den = den * pq
        yield n, x, den


def _bounds_thm1(F: NumberField, P: Sequence[int], alphas: Sequence[FieldElement], M: int,
                 N: int, prec: int) -> tuple[RealBall, list[RealBall]]:
    P = trim([int(c) for c in P])
    c_d = next(c for c in P if c)
    big = RealBall.from_value(0, prec)
    for a in alphas:
        big = ball_max(big, ball_abs(embed(a, 1, prec), prec), prec)
    pq = embed(_poly_at(P, F.q ** (N + 1)), 1, prec)
    main = ball_div(big ** (N + 1), ball_abs(pq, prec), prec) * RealBall.from_value(N ** M, prec)
    conj = []
    for l in range(2, F.degree + 1):
        mx = RealBall.from_value(1, prec)
        for a in alphas:
            mx = ball_max(mx, ball_abs(embed(a, l, prec), prec), prec)
        conj.append(RealBall.from_value(N ** (M + 2) * abs(c_d) ** N, prec) * mx ** N)
    return main, conj


def compute_xn_thm1(F: NumberField, P: Sequence[int], alphas: Sequence[FieldElement],
                    coeffs: RelationCoeffs, N: int, prec: int = DEFAULT_PREC) -> XNTrace:
    if N < 1:
        raise UsageError("N must be at least 1")
    prec = check_prec(prec)
    *_, (_, xn, _) = xn_sequence_thm1(F, P, alphas, coeffs, N)
    main, conj = _bounds_thm1(F, P, alphas, coeffs.M, N, prec)
    return _finish_trace(N, xn, main, conj, prec)


def traces_thm1(F: NumberField, P: Sequence[int], alphas: Sequence[FieldElement],
                coeffs: RelationCoeffs, N_range: Iterable[int], prec: int = DEFAULT_PREC) -> list[XNTrace]:
    """Traces for every N in N_range, sharing one pass of the recursion."""
    wanted = sorted(set(int(n) for n in N_range))
    if not wanted:
        return []
    if wanted[0] < 1:
        raise UsageError("N must be at least 1")
    prec = check_prec(prec)
    out = []
    for n, xn, _ in xn_sequence_thm1(F, P, alphas, coeffs, wanted[-1]):
        if n in wanted:
            main, conj = _bounds_thm1(F, P, alphas, coeffs.M, n, prec)
            out.append(_finish_trace(n, xn, main, conj, prec))
    return out


def limit_check_thm1(F: NumberField, P: Sequence[int], alphas: Sequence[FieldElement],
                     coeffs: RelationCoeffs, N: int, prec: int = DEFAULT_PREC) -> dict:
    """Compare X_N / prod P(q^t) with lambda0 + sum lambda_{j,k} f_j(alpha_k) from qseries.

    f_j(x) = sum_n r_j(n) x^n / prod_{t<=n} P(q^t) includes the n = 0 term,
    which is how lambda_{0,k} enters lambda0_tilde.
    """
    prec = check_prec(prec)
    *_, (_, xn, den) = xn_sequence_thm1(F, P, alphas, coeffs, N)
    partial = embed(xn / den, 1, prec)
    limit = embed(coeffs.lambda0, 1, prec)
    tail = RealBall.from_value(0, prec)
    for k, a in enumerate(alphas):
        spec = SeriesSpec("EqP", F, a, tuple(P))
        for j, lam in enumerate(coeffs.lambdas[k]):
            if lam.is_zero():
                continue
            limit = limit + embed(lam, 1, prec) * f_j(spec, j, prec=prec)
            try:
                tb = tail_bound(replace(spec, derivative_order=j), N, prec, shift=0)
            except ThresholdNotReached:
                tb = None
            if tb is None:
                tail = None
            elif tail is not None:
                tail = tail + ball_abs(embed(lam, 1, prec), prec) * tb
    gap = ball_abs(partial - limit, prec)
    consistent = None if tail is None else gap.lower() <= tail.upper()
    return {"N": N, "partial": partial, "limit": limit, "tail": tail, "gap": gap,
            "consistent": consistent}


# -- progression machinery ----------------------------------------------------


@dataclass(frozen=True)
class ProgressionSetup:
    a_list: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "a_list", tuple(validate_a_list(self.a_list)))

    @property
    def k(self) -> int:
        return len(self.a_list)

    @property
    def d(self) -> int:
        return lcm(*self.a_list)

    @property
    def d_i(self) -> tuple[int, ...]:
        return tuple(self.d // a for a in self.a_list)

    @property
    def delta(self) -> int:
        a = self.a_list
        return a[0] if len(a) == 1 else min(a[0], a[1] - a[0])

    def N_i(self, N: int) -> tuple[int, ...]:
        return tuple(N * di for di in self.d_i)


def _brackets(F: NumberField, top: int) -> list[FieldElement]:
    """[q^t - 1 for t = 0..top] (index 0 unused)."""
    out = [F.zero()]
    qt = F.one()
    for _ in range(top):
        qt = qt * F.q
        out.append(qt - 1)
    return out


def _xn_thm2_exact(F: NumberField, alpha: FieldElement, setup: ProgressionSetup,
                   coeffs: RelationCoeffs, N: int) -> FieldElement:
    """[dN]! (lambda0_tilde + sum_i lambda_i sum_{n<=N d_i} alpha^n / [a_i n]!) without division."""
    dN = setup.d * N
    B = _brackets(F, dN)
    fact = F.one()
    for t in range(1, dN + 1):
        fact = fact * B[t]
    total = coeffs.lambda0_tilde * fact
    for i, (a_i, Ni) in enumerate(zip(setup.a_list, setup.N_i(N))):
        lam = coeffs.lambdas[i][0]
        if lam.is_zero():
            continue
        # sum_n alpha^n prod_{m>n} block(m), block(m) = prod_{t=a_i(m-1)+1}^{a_i m} [t]
        acc = F.zero()
        power = F.one()
        for n in range(1, Ni + 1):
            block = F.one()
            for t in range(a_i * (n - 1) + 1, a_i * n + 1):
                block = block * B[t]
            power = power * alpha
            acc = acc * block + power
        total = total + lam * acc
    return total


def factorial_quotient_identity(F: NumberField, setup: ProgressionSetup, N: int) -> bool:
    """[dN]!/[a_i(N_i+1)]! == 1/((q^{Nd+a_i}-1)...(q^{Nd+1}-1)) for every i."""
    dN = setup.d * N
    left_top = q_factorial(F, dN)
    for a_i, Ni in zip(setup.a_list, setup.N_i(N)):
        if a_i * Ni != dN:
            return False
        lhs = left_top / q_factorial(F, a_i * (Ni + 1))
        prod = F.one()
        for t in range(dN + 1, dN + a_i + 1):
            prod = prod * q_bracket(F, t)
        if lhs != prod.inverse():
            return False
    return True


def compute_xn_thm2(F: NumberField, alpha: FieldElement, setup: ProgressionSetup,
                    coeffs: RelationCoeffs, N: int, prec: int = DEFAULT_PREC) -> XNTrace:
    if N < 1:
        raise UsageError("N must be at least 1")
    if coeffs.m != setup.k or any(len(r) != 1 for r in coeffs.lambdas):
        raise UsageError(f"progression relation needs lambda0 and {setup.k} single coefficients")
    prec = check_prec(prec)
    _check_inputs(F, [alpha] * setup.k, coeffs)
    if not factorial_quotient_identity(F, setup, N):
        raise AssertionError("factorial-quotient identity failed")
    xn = _xn_thm2_exact(F, alpha, setup, coeffs, N)
    a1, d1 = setup.a_list[0], setup.d_i[0]
    abs_a = ball_abs(embed(alpha, 1, prec), prec)
    abs_q = ball_abs(embed(F.q, 1, prec), prec)
    main = ball_div(abs_a ** d1, abs_q ** (a1 * setup.d), prec) ** N
    N1 = N * d1
    conj = []
    for l in range(2, F.degree + 1):
        mx = ball_max(ball_abs(embed(alpha, l, prec), prec), 1, prec)
        conj.append(RealBall.from_value(N1, prec) * mx ** N1)
    return _finish_trace(N, xn, main, conj, prec)


@dataclass(frozen=True)
class EliminationTerm:
    j: int
    l: int
    exact: FieldElement
    enclosure: ComplexBall
    abs_enclosure: RealBall
    weighted: ComplexBall
    envelope: RealBall
    leading: bool

    @property
    def within_envelope(self) -> Optional[bool]:
        if self.leading:
            return None
        return self.abs_enclosure.upper() <= self.envelope.lower()

    def to_json(self) -> dict:
        return {
            "j": self.j, "l": self.l, "leading": self.leading,
            "term": self.enclosure.to_json(), "abs": self.abs_enclosure.to_json(),
            "weighted": self.weighted.to_json(), "envelope": self.envelope.to_json(),
            "within_envelope": self.within_envelope,
        }


def elimination_terms(F: NumberField, alpha: FieldElement, setup: ProgressionSetup,
                      coeffs: Optional[RelationCoeffs], N: int,
                      prec: int = DEFAULT_PREC) -> list[EliminationTerm]:
    """Terms of the factored difference relation, j = 1..k, l = 0..d_j - 1.

    term(j, l) = alpha^{N(d_j - d_k) + l} / prod_{t = Nd + a_1 + 1}^{Nd + (l+1) a_j} (q^t - 1),
    envelope (|alpha|^{d_1 - d_k} / |q|^{delta d})^N; (1, 0) is the leading term.
    """
    if N < 1:
        raise UsageError("N must be at least 1")
    prec = check_prec(prec)
    a, di, d = setup.a_list, setup.d_i, setup.d
    dk = di[-1]
    Nd = N * d
    B = {t: q_bracket(F, t) for t in range(Nd + a[0] + 1, Nd + d + 1)}
    abs_a = ball_abs(embed(alpha, 1, prec), prec)
    abs_q = ball_abs(embed(F.q, 1, prec), prec)
    envelope = ball_div(abs_a ** (di[0] - dk), abs_q ** (setup.delta * d), prec) ** N
    out = []
    for j in range(1, setup.k + 1):
        lam = coeffs.lambdas[j - 1][0] if coeffs is not None else F.one()
        power = alpha ** (N * (di[j - 1] - dk))
        den = F.one()
        for l in range(di[j - 1]):
            for t in range(Nd + l * a[j - 1] + 1, Nd + (l + 1) * a[j - 1] + 1):
                if t > Nd + a[0]:
                    den = den * B[t]
            term = power / den
            z = embed(term, 1, prec)
            out.append(EliminationTerm(j, l, term, z, ball_abs(z, prec),
                                       embed(lam, 1, prec) * z, envelope, j == 1 and l == 0))
            power = power * alpha
    return out


# -- dichotomy -----------------------------------------------------------------


@dataclass(frozen=True)
class DichotomyReport:
    traces: tuple[XNTrace, ...]
    classification: str

    def rows(self) -> list[dict]:
        out = []
        for t in self.traces:
            row = t.to_row()
            row["forces_zero"] = abs(t.norm) < 1
            row["bound_product"] = t.bound_product.to_json()
            out.append(row)
        return out

    def to_json(self) -> dict:
        return {"classification": self.classification, "rows": self.rows()}


def classify_norms(norms: Sequence[Fraction]) -> str:
    """Judge the second half of the range: all zero, or nonzero and strictly growing."""
    if not norms:
        return "inconclusive"
    tail = [abs(n) for n in norms[len(norms) // 2:]]
    if all(n == 0 for n in tail):
        return "identically-zero-tail"
    if all(n != 0 for n in tail) and all(x < y for x, y in zip(tail, tail[1:])):
        return "growing"
    return "inconclusive"


def norm_dichotomy_scan(source: Callable[[int], XNTrace] | Callable[[Iterable[int]], list[XNTrace]],
                        N_range: Iterable[int], batch: bool = False) -> DichotomyReport:
    """Exact norms over N_range and the trajectory class.

    ``source`` maps N to a trace, or (``batch=True``) maps the whole range to
    a list of traces.
    """
    Ns = list(N_range)
    traces = list(source(Ns)) if batch else [source(n) for n in Ns]
    return DichotomyReport(tuple(traces), classify_norms([t.norm for t in traces]))
