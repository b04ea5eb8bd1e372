"""Certified hypothesis checks for the linear-independence theorems.

A check passes only when a strict inequality is certified by disjoint
enclosures.  Enclosures that still straddle after the precision ladder give
``undecided``; they never count as a pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Optional, Sequence

from .errors import NonIncreasingA, Undecidable
from .numberfield import (
    FieldElement,
    NumberField,
    embed,
    is_algebraic_integer,
    is_ratio_root_of_unity,
    pv_check,
    q_height,
)
from .numerics import DEFAULT_PREC, RealBall, ball_abs, ball_max, ball_min, check_prec
from .polynomials import MAX_DOUBLINGS, degree, poly_str, trim
from .qseries import _lower_bound_poly_at_power

PASS, FAIL, UNDECIDED = "pass", "fail", "undecided"
THEOREM_IDS = ("Thm1", "Cor1_2", "Cor1_3", "Cor1_5", "Thm1_6")


@dataclass(frozen=True)
class Check:
    name: str
    status: str
    evidence: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "status": self.status, "evidence": self.evidence}


@dataclass(frozen=True)
class HypothesisVerdict:
    theorem_id: str
    checks: tuple[Check, ...]
    margin: Optional[RealBall] = None

    @property
    def satisfied(self) -> bool:
        return all(c.status == PASS for c in self.checks)

    @property
    def undecided(self) -> bool:
        return not self.satisfied and not any(c.status == FAIL for c in self.checks)

    def status(self, name: str) -> str:
        return next(c.status for c in self.checks if c.name == name)

    def to_json(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "satisfied": self.satisfied,
            "checks": [c.to_json() for c in self.checks],
            "margin": self.margin.to_json() if self.margin is not None else None,
        }


def _strict_less(lhs_rhs: Callable[[int], tuple[RealBall, RealBall]], prec: int,
                 name: str) -> tuple[Check, RealBall]:
    """Certify lhs < rhs, doubling precision while the enclosures overlap."""
    work = prec
    for _ in range(MAX_DOUBLINGS + 1):
        lhs, rhs = lhs_rhs(work)
        margin = rhs - lhs
        evidence = {"lhs": lhs.to_json(), "rhs": rhs.to_json(), "precision": work}
        if lhs.certainly_lt(rhs):
            return Check(name, PASS, evidence), margin
        if lhs.certainly_ge(rhs):
            return Check(name, FAIL, evidence), margin
        work *= 2
    evidence["note"] = "enclosures straddle equality at the top of the precision ladder"
    return Check(name, UNDECIDED, evidence), margin


def _pv_check(F: NumberField, prec: int) -> Check:
    try:
        rep = pv_check(F, prec)
    except Undecidable as exc:
        return Check("pm_q_is_pv", UNDECIDED, {"reason": str(exc)})
    return Check("pm_q_is_pv", PASS if rep.is_pv else FAIL, rep.to_json())


def _abs1(a: FieldElement, prec: int) -> RealBall:
    return ball_abs(embed(a, 1, prec), prec)


def _q_abs(F: NumberField, prec: int) -> RealBall:
    return _abs1(F.q, prec)


def _integer_check(name: str, alphas: Sequence[FieldElement], allow_zero: bool = False) -> Check:
    bad = []
    for i, a in enumerate(alphas, 1):
        if a.is_zero() and not allow_zero:
            bad.append(f"alpha_{i} = 0")
        elif not is_algebraic_integer(a):
            bad.append(f"alpha_{i} = {a} is not an algebraic integer")
    return Check(name, FAIL if bad else PASS, {"problems": bad})


def nonvanishing_check(F: NumberField, P: Sequence[int], prec: int) -> Check:
    """P nonconstant and P(q^t) != 0 for every t >= 1 (exact below the growth threshold)."""
    P = trim([int(c) for c in P])
    if degree(P) < 1:
        return Check("P_nonconstant_nonvanishing", FAIL, {"reason": "P is constant"})
    qlo = _q_abs(F, prec).lower()
    if qlo <= 1:
        return Check("P_nonconstant_nonvanishing", UNDECIDED,
                     {"reason": "no growth threshold without |q| > 1"})
    t0 = 1
    while _lower_bound_poly_at_power(P, qlo, t0) <= 0:
        t0 += 1
        if t0 > 10_000:
            return Check("P_nonconstant_nonvanishing", UNDECIDED, {"reason": "threshold not found"})
    qt = F.one()
    for t in range(1, t0):
        qt = qt * F.q
        val = F.zero()
        for c in reversed(P):
            val = val * qt + c
        if val.is_zero():
            return Check("P_nonconstant_nonvanishing", FAIL, {"vanishes_at_t": t})
    return Check("P_nonconstant_nonvanishing", PASS, {"exact_checks_up_to_t": t0 - 1})


def _low_coeff(P: Sequence[int]) -> tuple[int, int]:
    """(d, c_d): index and value of the lowest nonzero coefficient."""
    d = next(i for i, c in enumerate(P) if c)
    return d, P[d]


def check_thm1(F: NumberField, P: Sequence[int], alphas: Sequence[FieldElement], M: int = 0,
               prec: int = DEFAULT_PREC, theorem_id: str = "Thm1") -> HypothesisVerdict:
    """Hypotheses of the derivative-values theorem for E_{q,P}.

    ``M`` (top derivative order) does not enter the hypotheses; it is echoed
    in the evidence only.
    """
    prec = check_prec(prec)
    if not alphas:
        raise ValueError("need at least one alpha")
    P = trim([int(c) for c in P])
    checks = [_pv_check(F, prec), _integer_check("alphas_nonzero_algebraic_integers", alphas),
              nonvanishing_check(F, P, prec)]
    n_q = F.degree
    D = degree(P)
    if D >= 1:
        d, c_d = _low_coeff(P)

        def sides(work: int):
            conj_max = [RealBall.from_value(1, work) for _ in range(n_q)]
            top = RealBall.from_value(0, work)
            for a in alphas:
                for l in range(1, n_q + 1):
                    m = ball_abs(embed(a, l, work), work)
                    if l == 1:
                        top = ball_max(top, m, work)
                    else:
                        conj_max[l - 1] = ball_max(conj_max[l - 1], m, work)
            lhs = RealBall.from_value(abs(c_d), work) ** (n_q - 1) * top
            for l in range(2, n_q + 1):
                lhs = lhs * conj_max[l - 1]
            rhs = _q_abs(F, work) ** D
            return lhs, rhs

        ineq, margin = _strict_less(sides, prec, "inequality_growth_condition")
        ineq.evidence.update({"d": d, "c_d": c_d, "D": D, "M": M})
    else:
        ineq, margin = Check("inequality_growth_condition", FAIL, {"reason": "P is constant"}), None
    checks.append(ineq)
    bad_pairs = []
    for (i, a), (k, b) in combinations(enumerate(alphas, 1), 2):
        if a.is_zero() or b.is_zero() or is_ratio_root_of_unity(a, b):
            bad_pairs.append([i, k])
    checks.append(Check("ratios_not_roots_of_unity", FAIL if bad_pairs else PASS,
                        {"offending_pairs": bad_pairs}))
    return HypothesisVerdict(theorem_id, tuple(checks), margin)


def check_cor_q_exp(F: NumberField, alphas: Sequence[FieldElement], M: int = 0,
                    prec: int = DEFAULT_PREC) -> HypothesisVerdict:
    """E_q case: the general check with P = X - 1 (D = 1, c_d = -1)."""
    return check_thm1(F, (-1, 1), alphas, M, prec, theorem_id="Cor1_2")


def check_cor_irrational(F: NumberField, alpha: FieldElement, prec: int = DEFAULT_PREC,
                         theorem_id: str = "Cor1_3") -> HypothesisVerdict:
    """0 < min{1, |alpha|} H_q(alpha) < |q| with +-q PV and alpha integral.

    The Tschakaloff corollary has the same hypothesis; pass
    ``theorem_id="Cor1_5"`` to label it as such.
    """
    prec = check_prec(prec)
    checks = [_pv_check(F, prec), _integer_check("alpha_algebraic_integer", [alpha], allow_zero=True)]
    checks.append(Check("strict_positivity", FAIL if alpha.is_zero() else PASS,
                        {"alpha_is_zero": alpha.is_zero()}))
    if alpha.is_zero():
        return HypothesisVerdict(theorem_id, tuple(checks), None)

    def sides(work: int):
        lhs = ball_min(_abs1(alpha, work), 1, work) * q_height(alpha, work)
        return lhs, _q_abs(F, work)

    ineq, margin = _strict_less(sides, prec, "height_inequality")
    checks.append(ineq)
    return HypothesisVerdict(theorem_id, tuple(checks), margin)


def validate_a_list(a_list: Sequence[int]) -> list[int]:
    a = [int(x) for x in a_list]
    if not a or any(x < 1 for x in a) or any(x >= y for x, y in zip(a, a[1:])):
        raise NonIncreasingA(f"a_list must be strictly increasing positive integers, got {a}")
    return a


def check_thm2(F: NumberField, alpha: FieldElement, a_list: Sequence[int],
               prec: int = DEFAULT_PREC) -> HypothesisVerdict:
    """Hypotheses of the progression theorem: |alpha| >= 1 and H_q(alpha) < |q|^{a_1}."""
    prec = check_prec(prec)
    a = validate_a_list(a_list)
    checks = [_pv_check(F, prec), _integer_check("alpha_algebraic_integer", [alpha])]
    if alpha.is_zero():
        checks.append(Check("abs_alpha_at_least_1", FAIL, {"alpha_is_zero": True}))
    else:
        work = prec
        for _ in range(MAX_DOUBLINGS + 1):
            m = _abs1(alpha, work)
            if m.lower() >= 1:
                st = PASS
                break
            if m.certainly_lt(1):
                st = FAIL
                break
            work *= 2
        else:
            st = UNDECIDED
        checks.append(Check("abs_alpha_at_least_1", st, {"abs_alpha": m.to_json()}))

    def sides(work: int):
        return q_height(alpha, work), _q_abs(F, work) ** a[0]

    ineq, margin = _strict_less(sides, prec, "height_inequality")
    ineq.evidence["a_1"] = a[0]
    checks.append(ineq)
    return HypothesisVerdict("Thm1_6", tuple(checks), margin)


def normalize_theorem_id(text: str) -> str:
    key = str(text).lower().replace("_", "").replace(".", "").replace("-", "")
    table = {"thm1": "Thm1", "1": "Thm1", "thm11": "Thm1", "cor12": "Cor1_2", "cor13": "Cor1_3",
             "cor15": "Cor1_5", "thm16": "Thm1_6", "thm2": "Thm1_6", "2": "Thm1_6"}
    if key not in table:
        raise ValueError(f"unknown theorem id {text!r}")
    return table[key]
