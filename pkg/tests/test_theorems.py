import json
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from qindep.errors import NonIncreasingA
from qindep.numberfield import field_create, rational_field
from qindep.theorems import (
    FAIL,
    PASS,
    UNDECIDED,
    check_cor_irrational,
    check_cor_q_exp,
    check_thm1,
    check_thm2,
    normalize_theorem_id,
)

Q2 = rational_field(2)
GOLDEN = field_create([-1, -1, 1])
X_MINUS_1 = (-1, 1)


def els(F, *vals):
    return [F.element(v) for v in vals]


def test_thm1_examples():
    v = check_thm1(Q2, X_MINUS_1, els(Q2, 1), 0)
    assert v.satisfied and v.margin.contains(1)
    v = check_thm1(Q2, X_MINUS_1, els(Q2, 1, -1), 0)
    assert not v.satisfied and v.status("ratios_not_roots_of_unity") == FAIL
    v = check_thm1(Q2, X_MINUS_1, els(Q2, 3))
    assert not v.satisfied and v.status("inequality_growth_condition") == FAIL


def test_thm1_check_order_and_shape():
    v = check_thm1(Q2, X_MINUS_1, els(Q2, 1))
    assert [c.name for c in v.checks] == [
        "pm_q_is_pv", "alphas_nonzero_algebraic_integers", "P_nonconstant_nonvanishing",
        "inequality_growth_condition", "ratios_not_roots_of_unity"]
    doc = json.loads(json.dumps(v.to_json()))
    assert set(doc) == {"theorem_id", "satisfied", "checks", "margin"}
    assert set(doc["margin"]) == {"mid", "rad"}


def test_thm1_other_failures():
    assert check_thm1(Q2, X_MINUS_1, els(Q2, 0)).status("alphas_nonzero_algebraic_integers") == FAIL
    assert check_thm1(Q2, X_MINUS_1, els(Q2, Fraction(1, 2))).status("alphas_nonzero_algebraic_integers") == FAIL
    assert check_thm1(Q2, (-2, 1), els(Q2, 1)).status("P_nonconstant_nonvanishing") == FAIL
    assert check_thm1(Q2, (3,), els(Q2, 1)).status("P_nonconstant_nonvanishing") == FAIL
    v = check_thm1(field_create([-3, 0, 1]), X_MINUS_1, [field_create([-3, 0, 1]).one()])
    assert v.status("pm_q_is_pv") == FAIL and not v.satisfied


def test_thm1_golden_equality_is_undecided():
    v = check_thm1(GOLDEN, X_MINUS_1, [GOLDEN.q])
    assert v.status("inequality_growth_condition") == UNDECIDED
    assert not v.satisfied and v.undecided
    # the same alpha with D = 2 passes: phi < phi^2
    w = check_thm1(GOLDEN, (-1, 0, 1), [GOLDEN.q])
    assert w.satisfied


def test_golden_conjugate_factor():
    # alpha = q - 2 has |alpha| < 1 but conjugate -(phi + 1) of modulus 2.618...; LHS ~ 0.382 * 2.618 = 1
    v = check_thm1(GOLDEN, X_MINUS_1, [GOLDEN.q - 2])
    assert v.satisfied
    ev = next(c for c in v.checks if c.name == "inequality_growth_condition").evidence
    assert abs(float(Fraction(ev["lhs"]["mid"])) - 0.3819660112501051 * 2.618033988749895) < 1e-12


def test_cor_q_exp_is_thm1_with_x_minus_1():
    a = check_cor_q_exp(GOLDEN, [GOLDEN.one(), GOLDEN.element(-1)])
    assert a.theorem_id == "Cor1_2" and not a.satisfied
    b = check_thm1(GOLDEN, X_MINUS_1, [GOLDEN.one(), GOLDEN.element(-1)])
    assert [c.status for c in a.checks] == [c.status for c in b.checks]


def test_cor_irrational_examples():
    v = check_cor_irrational(Q2, Q2.one())
    assert v.satisfied and v.theorem_id == "Cor1_3"
    v = check_cor_irrational(Q2, Q2.zero())
    assert not v.satisfied and v.status("strict_positivity") == FAIL
    v = check_cor_irrational(GOLDEN, GOLDEN.q)
    assert not v.satisfied and v.status("height_inequality") in (FAIL, UNDECIDED)
    assert v.status("height_inequality") == UNDECIDED
    assert check_cor_irrational(Q2, Q2.one(), theorem_id="Cor1_5").theorem_id == "Cor1_5"


def test_thm2_examples():
    F3 = rational_field(3)
    assert check_thm2(F3, F3.element(2), [1, 2]).satisfied
    assert check_thm2(Q2, Q2.one(), [1, 3]).satisfied
    v = check_thm2(Q2, Q2.element(3), [1, 2])
    assert not v.satisfied and v.status("height_inequality") == FAIL
    assert check_thm2(Q2, Q2.element(Fraction(1, 1)), [2, 5]).satisfied
    w = check_thm2(F3, F3.element(-1), [1])
    assert w.satisfied
    assert check_thm2(GOLDEN, GOLDEN.q - 2, [1]).status("abs_alpha_at_least_1") == FAIL


@pytest.mark.parametrize("bad", [[2, 1], [1, 1], [], [0, 3], [-1, 2]])
def test_thm2_rejects_bad_a_list(bad):
    with pytest.raises(NonIncreasingA):
        check_thm2(Q2, Q2.one(), bad)


def test_monotonicity_under_subsets():
    F = rational_field(5)
    full = els(F, 1, 2, 3, 4)
    assert check_thm1(F, X_MINUS_1, full).satisfied
    for r in range(1, 4):
        for sub in combinations(full, r):
            assert check_thm1(F, X_MINUS_1, list(sub)).satisfied


@given(st.integers(1, 6), st.integers(2, 9))
def test_scaling_forces_cor_failure(a, q):
    F = rational_field(q)
    for m in (q, q + 1, 2 * q):
        v = check_cor_irrational(F, F.element(a * m))
        assert not v.satisfied


@given(st.integers(2, 20), st.integers(-45, 45).filter(lambda a: a != 0))
def test_degree_one_closed_form(q, a):
    F = rational_field(q)
    v = check_thm1(F, X_MINUS_1, [F.element(a)])
    assert v.satisfied == (abs(a) < q)


def test_negative_q_uses_minus_convention():
    F = rational_field(-3)
    v = check_thm1(F, X_MINUS_1, els(F, 2))
    assert v.satisfied
    pv = next(c for c in v.checks if c.name == "pm_q_is_pv")
    assert pv.evidence["sign_convention"] == "minus"


def test_theorem_id_aliases():
    assert normalize_theorem_id("thm1.6") == "Thm1_6"
    assert normalize_theorem_id("cor1_3") == "Cor1_3"
    assert normalize_theorem_id("1") == "Thm1"
    with pytest.raises(ValueError):
        normalize_theorem_id("lemma")


def test_verdict_statuses_are_closed():
    for v in (check_thm1(Q2, X_MINUS_1, els(Q2, 1, 3)), check_cor_irrational(GOLDEN, GOLDEN.q)):
        assert all(c.status in (PASS, FAIL, UNDECIDED) for c in v.checks)
        assert v.satisfied == all(c.status == PASS for c in v.checks)
