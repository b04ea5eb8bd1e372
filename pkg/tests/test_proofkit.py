import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oracles import q_fact, xn_thm1, xn_thm2
from qindep.errors import DenominatorVanishes, NonIncreasingA, UsageError
from qindep.numberfield import field_create, is_algebraic_integer, norm_exact, rational_field
from qindep.proofkit import (
    A_poly,
    ProgressionSetup,
    RelationCoeffs,
    classify_norms,
    compute_xn_thm1,
    compute_xn_thm2,
    elimination_terms,
    factorial_quotient_identity,
    falling_factorial,
    limit_check_thm1,
    norm_dichotomy_scan,
    parse_lambda,
    traces_thm1,
    xn_sequence_thm1,
)

Q2 = rational_field(2)
Q3 = rational_field(3)
GOLDEN = field_create([-1, -1, 1])
X_MINUS_1 = (-1, 1)
E2_NORMS = [2, 7, 50, 751, 23282, 1466767, 186279410, 47501249551]


def test_falling_factorial_examples():
    assert falling_factorial(0, 17) == 1
    assert falling_factorial(2, 5) == 20
    assert falling_factorial(3, 2) == 0


def test_A_poly_examples():
    zero = RelationCoeffs.build(Q2, 0, [[0, 0]])
    assert A_poly(zero, 1, 9).is_zero()
    c0 = RelationCoeffs.build(Q2, 0, [[5]])
    assert all(A_poly(c0, 1, n) == 5 for n in range(6))
    c = RelationCoeffs.build(Q2, 0, [[1, 2]])
    assert A_poly(c, 1, 3) == 7


def test_relation_coeffs_validation():
    with pytest.raises(UsageError):
        RelationCoeffs.build(Q2, Fraction(1, 2), [[1]])
    c = parse_lambda(GOLDEN, "[1,1];2,[0,-1];3")
    assert c.m == 2 and c.M == 1
    assert c.lambda0_tilde == GOLDEN.element([6, 1])
    assert parse_lambda(GOLDEN, c.to_text()).entries() == c.entries()
    with pytest.raises(UsageError):
        parse_lambda(GOLDEN, "1")


def test_xn_thm1_examples():
    zero = RelationCoeffs.build(Q2, 0, [[0]])
    for N in (1, 5, 9):
        t = compute_xn_thm1(Q2, X_MINUS_1, [Q2.one()], zero, N)
        assert t.xn_exact.is_zero() and t.norm == 0
    neg = RelationCoeffs.build(Q2, -1, [[0]])
    for N in range(1, 12):
        t = compute_xn_thm1(Q2, X_MINUS_1, [Q2.one()], neg, N)
        assert t.xn_exact == -q_fact(Fraction(2), N) and abs(t.norm) == q_fact(Fraction(2), N)
    e = RelationCoeffs.build(Q2, 0, [[1]])
    traces = traces_thm1(Q2, X_MINUS_1, [Q2.one()], e, range(1, 9))
    assert [int(t.norm) for t in traces] == E2_NORMS
    for t in traces:
        ratio = t.xn_exact.coeffs[0] / q_fact(Fraction(2), t.N)
        assert abs(ratio - Fraction("2.3842310290313717")) < Fraction(2, 2 ** t.N)


@settings(max_examples=20)
@given(st.integers(2, 5), st.lists(st.integers(-3, 3).filter(bool), min_size=1, max_size=2),
       st.lists(st.integers(-3, 3), min_size=7, max_size=7), st.integers(1, 2))
def test_xn_thm1_matches_definition_oracle(q, alphas, lam, width):
    F = rational_field(q)
    P = (1, -2, 1) if q == 2 else (-1, 0, 1)
    rows = [lam[1 + k * width: 1 + (k + 1) * width] or [1] for k in range(len(alphas))]
    c = RelationCoeffs.build(F, lam[0], rows)
    al = [F.element(a) for a in alphas]
    for n, xn, _ in xn_sequence_thm1(F, P, al, c, 12):
        assert xn.coeffs[0] == xn_thm1(q, P, alphas, lam[0], rows, n)


def _golden_instance():
    q = GOLDEN.q
    alphas = [GOLDEN.one(), q - 1]
    c = RelationCoeffs.build(GOLDEN, q + 2, [[1, q, -1], [q * q, 0, 3]])
    return (-1, 0, 1), alphas, c


def test_partial_sum_identity_exact():
    P, alphas, c = _golden_instance()
    F = GOLDEN
    running = c.lambda0_tilde
    den = F.one()
    qt = F.one()
    for n, xn, prod in xn_sequence_thm1(F, P, alphas, c, 30):
        if n:
            qt = qt * F.q
            den = den * (qt * qt - 1)
            for k, a in enumerate(alphas):
                running = running + A_poly(c, k + 1, n) * a ** n / den
        assert prod == den
        assert xn == den * running


def test_telescoping_identity_exact():
    P, alphas, c = _golden_instance()
    seq = list(xn_sequence_thm1(GOLDEN, P, alphas, c, 31))
    for (n, x0, d0), (n1, x1, d1) in zip(seq, seq[1:]):
        rhs = GOLDEN.zero()
        for k, a in enumerate(alphas):
            rhs = rhs + A_poly(c, k + 1, n1) * a ** n1
        assert x1 / d1 - x0 / d0 == rhs / d1
        pq = d1 / d0
        assert x1 - pq * x0 == rhs


def test_integrality_of_traces():
    P, alphas, c = _golden_instance()
    for t in traces_thm1(GOLDEN, P, alphas, c, range(1, 16)):
        assert t.integral and is_algebraic_integer(t.xn_exact)
        assert t.norm.denominator == 1 and t.norm == norm_exact(t.xn_exact)
    beta = field_create([1, 0, -2, -1, 1])
    rng = random.Random(5)
    cb = RelationCoeffs.build(beta, beta.element([rng.randint(-3, 3) for _ in range(4)]),
                              [[beta.element([rng.randint(-3, 3) for _ in range(4)])]])
    for t in traces_thm1(beta, X_MINUS_1, [beta.q], cb, range(1, 10)):
        assert t.integral and t.norm.denominator == 1


def test_denominator_vanishes():
    with pytest.raises(DenominatorVanishes):
        compute_xn_thm1(Q2, (-4, 1), [Q2.one()], RelationCoeffs.build(Q2, 0, [[1]]), 3)


def test_bound_soundness_on_true_relation():
    # E_q(qx) = (1 + x) E_q(x): a genuine relation, so X_N stays bounded by C * bound, C = 1
    C = 1
    c = RelationCoeffs.build(Q2, 0, [[1], [-2]])
    traces = traces_thm1(Q2, X_MINUS_1, [Q2.element(2), Q2.one()], c, range(1, 31))
    for t in traces:
        assert t.ratio_main.upper() <= C
    q = GOLDEN.q
    cg = RelationCoeffs.build(GOLDEN, 0, [[1], [-(1 + q)]])
    for t in traces_thm1(GOLDEN, X_MINUS_1, [q * q, q], cg, range(1, 31)):
        assert t.ratio_main.upper() <= C
        assert all(r.upper() <= C for r in t.ratio_conj)
        assert abs(t.norm) == 1


def test_limit_consistency_with_qseries():
    P, alphas, c = _golden_instance()
    for N in (10, 20, 30):
        rep = limit_check_thm1(GOLDEN, P, alphas, c, N, 128)
        assert rep["consistent"] is True
    rep = limit_check_thm1(Q2, X_MINUS_1, [Q2.one()], RelationCoeffs.build(Q2, 0, [[1]]), 40, 128)
    assert abs(rep["limit"].re.mid - Fraction("2.3842310290313717241")) < Fraction(1, 10 ** 18)
    assert rep["consistent"] is True


def test_progression_setup():
    s = ProgressionSetup((2, 3, 4))
    assert s.d == 12 and s.d_i == (6, 4, 3) and s.delta == 1
    for N in range(1, 6):
        assert len({a * n for a, n in zip(s.a_list, s.N_i(N))}) == 1
    assert ProgressionSetup((3,)).delta == 3
    assert ProgressionSetup((2, 7)).delta == 2
    with pytest.raises(NonIncreasingA):
        ProgressionSetup((3, 3))


def test_xn_thm2_examples():
    s = ProgressionSetup((1, 2))
    zero = RelationCoeffs.build(Q2, 0, [[0], [0]])
    assert compute_xn_thm2(Q2, Q2.one(), s, zero, 3).xn_exact.is_zero()
    c = RelationCoeffs.build(Q2, 0, [[1], [0]])
    t = compute_xn_thm2(Q2, Q2.one(), s, c, 2)
    assert t.xn_exact == 751 and t.norm == 751


def test_xn_thm2_collapses_to_thm1():
    s = ProgressionSetup((1,))
    for F, alpha in ((Q3, Q3.element(2)), (GOLDEN, GOLDEN.q)):
        c = RelationCoeffs.build(F, 1, [[2]])
        for N in range(1, 8):
            a = compute_xn_thm2(F, alpha, s, c, N).xn_exact
            b = compute_xn_thm1(F, X_MINUS_1, [alpha], c, N).xn_exact
            assert a == b


@settings(max_examples=15)
@given(st.sampled_from([(1, 2), (1, 3), (2, 3), (1, 2, 4)]), st.integers(2, 4), st.integers(-3, 3),
       st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_xn_thm2_matches_definition_oracle(a_list, q, alpha, lam):
    F = rational_field(q)
    s = ProgressionSetup(a_list)
    lams = lam[1:1 + len(a_list)]
    c = RelationCoeffs.build(F, lam[0], [[x] for x in lams])
    for N in (1, 2, 3):
        got = compute_xn_thm2(F, F.element(alpha), s, c, N).xn_exact
        assert got.coeffs[0] == xn_thm2(q, alpha, a_list, lam[0], lams, N)


def test_factorial_quotient_identity():
    for a_list in ((1, 2), (2, 3), (1, 3, 4)):
        s = ProgressionSetup(a_list)
        for N in range(1, 21):
            assert factorial_quotient_identity(Q3, s, N)
    s = ProgressionSetup((1, 2))
    for N in range(1, 11):
        assert factorial_quotient_identity(GOLDEN, s, N)


def test_elimination_examples():
    single = elimination_terms(Q3, Q3.element(2), ProgressionSetup((1,)), None, 4)
    assert len(single) == 1 and single[0].leading
    s = ProgressionSetup((1, 2))
    terms = elimination_terms(Q3, Q3.element(2), s, RelationCoeffs.build(Q3, 0, [[1], [1]]), 5)
    assert s.delta == 1 and s.d == 2
    lead = [t for t in terms if t.leading]
    assert len(lead) == 1 and lead[0].exact == 2 ** 5
    assert all(t.within_envelope for t in terms if not t.leading)
    env = Fraction(2 ** (2 - 1), 3 ** 2) ** 5
    assert terms[0].envelope.contains(env)
    for N in range(1, 8):
        ones = elimination_terms(Q3, Q3.one(), s, None, N)
        assert next(t for t in ones if t.leading).exact == 1


def test_elimination_terms_match_formula():
    s = ProgressionSetup((1, 2, 3))
    q, alpha, N = Fraction(3), Fraction(2), 2
    terms = elimination_terms(Q3, Q3.element(2), s, None, N)
    a, di, d = s.a_list, s.d_i, s.d
    for t in terms:
        den = Fraction(1)
        for u in range(N * d + a[0] + 1, N * d + (t.l + 1) * a[t.j - 1] + 1):
            den *= q ** u - 1
        expect = alpha ** (N * (di[t.j - 1] - di[-1]) + t.l) / den
        assert t.exact == expect


def test_dichotomy_scan():
    zero = RelationCoeffs.build(Q2, 0, [[0]])
    rep = norm_dichotomy_scan(lambda n: compute_xn_thm1(Q2, X_MINUS_1, [Q2.one()], zero, n), range(1, 11))
    assert rep.classification == "identically-zero-tail"
    assert all(r["forces_zero"] for r in rep.rows())
    e = RelationCoeffs.build(Q2, 0, [[1]])
    rep = norm_dichotomy_scan(lambda ns: traces_thm1(Q2, X_MINUS_1, [Q2.one()], e, ns), range(1, 31),
                              batch=True)
    assert rep.classification == "growing"
    assert [int(r["norm"]) for r in rep.rows()[:8]] == E2_NORMS
    neg = RelationCoeffs.build(Q2, -1, [[0]])
    rep = norm_dichotomy_scan(lambda n: compute_xn_thm1(Q2, X_MINUS_1, [Q2.one()], neg, n), range(1, 13))
    assert rep.classification == "growing"
    assert [abs(t.norm) for t in rep.traces] == [q_fact(Fraction(2), n) for n in range(1, 13)]


def test_classify_norms():
    assert classify_norms([]) == "inconclusive"
    assert classify_norms([5, 3, 0, 0, 0]) == "identically-zero-tail"
    assert classify_norms([1, 1, 1, 1]) == "inconclusive"
    assert classify_norms([1, 2, 3, 4]) == "growing"
