"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line through the ``acceptance`` fixture; the
lines are printed in the pytest terminal summary.
"""

import json
import random
import time
from fractions import Fraction

from oracles import oracle, series_terms
from test_relations import _planted, _proportional
from qindep.cli import parse_args, report_write, run
from qindep.numberfield import embed, field_create, is_algebraic_integer, pv_check, q_height, rational_field
from qindep.numerics import ComplexBall, RealBall
from qindep.proofkit import (
    A_poly,
    ProgressionSetup,
    RelationCoeffs,
    elimination_terms,
    factorial_quotient_identity,
    limit_check_thm1,
    traces_thm1,
    xn_sequence_thm1,
)
from qindep.qseries import SeriesSpec, eval_series, tail_bound
from qindep.relations import find_relation, query_from_sources, verify_relation
from qindep.theorems import PASS, check_cor_irrational, check_thm1

Q2 = rational_field(2)
GOLDEN = field_create([-1, -1, 1])
BETA_POLY = [1, 0, -2, -1, 1]
X_MINUS_1 = (-1, 1)


def digits(v: Fraction, n: int) -> str:
    """First n significant decimal digits of a positive rational, truncated."""
    s = ""
    ip, rest = divmod(v.numerator, v.denominator)
    s = str(ip)
    while len(s) < n:
        rest *= 10
        d, rest = divmod(rest, v.denominator)
        s += str(d)
    return s[:n]


def test_ac1_zeta_q1(acceptance):
    t0 = time.perf_counter()
    cfg = parse_args(["eval", "--fn", "zetaq1", "--q", "2", "--prec", "512", "--output", "json"])
    code, rep = run(cfg)
    doc = json.loads(report_write(rep, "json"))
    elapsed = time.perf_counter() - t0
    mid, rad = Fraction(doc["result"]["value"]["re"]["mid"]), Fraction(doc["result"]["value"]["re"]["rad"])
    ref, err = oracle("ZetaQ1", 2, 1, N=500, K=700)
    ok = (code == 0 and rad <= Fraction(1, 10 ** 100) and abs(mid - ref) <= rad + err
          and digits(mid - rad, 50) == digits(ref, 50) == digits(mid + rad, 50) and elapsed < 5)
    acceptance("AC1", ok, f"zeta_2(1) 50 digits {digits(ref, 50)}, rad {float(rad):.1e}, {elapsed:.2f}s")


def test_ac2_e2(acceptance):
    t0 = time.perf_counter()
    v = eval_series(SeriesSpec("Eq", Q2, Q2.one()), 256)
    elapsed = time.perf_counter() - t0
    ref, err = oracle("Eq", 2, 1, N=120, K=400)
    rad = v.rad_upper()
    ok = (abs(v.re.mid - ref) <= v.re.rad + err and rad <= Fraction(1, 10 ** 50)
          and digits(v.re.mid, 8) == "23842310" and elapsed < 1)
    acceptance("AC2", ok, f"E_2(1) = {digits(v.re.mid, 8)[0]}.{digits(v.re.mid, 8)[1:]}..., "
                          f"rad {float(rad):.1e}, {elapsed:.3f}s")


def test_ac3_pv(acceptance):
    worst, results = 0.0, []
    for poly in [BETA_POLY] + [[-m, 1] for m in range(2, 11)] + [[-3, 0, 1]]:
        t0 = time.perf_counter()
        rep = pv_check(field_create(poly))
        worst = max(worst, time.perf_counter() - t0)
        results.append(rep.is_pv)
    ok = all(results[:-1]) and not results[-1] and worst < 1
    acceptance("AC3", ok, f"beta and 2..10 PV, x^2-3 rejected: {results}; slowest {worst:.3f}s")


def test_ac4_height_of_q(acceptance):
    bad = []
    for poly in [BETA_POLY] + [[-m, 1] for m in range(2, 11)]:
        F = field_create(poly)
        h = q_height(F.q, 128)
        q = embed(F.q, 1, 256).re
        inside = h.lower() <= q.lower() and q.upper() <= h.upper()
        if not (inside and 2 * h.rad <= Fraction(1, 10 ** 30)):
            bad.append(poly)
    acceptance("AC4", not bad, f"H_q(q) encloses q with radius <= 1e-30 for 10 fields; failures {bad}")


def _identity_points(rng, n=10):
    pts = []
    for _ in range(n):
        q = rng.choice([Fraction(2), Fraction(3), Fraction(5, 2), Fraction(4)])
        x = Fraction(rng.randint(-12, 12), rng.randint(1, 8))
        pts.append((q, x))
    return pts


def test_ac5_identities(acceptance):
    prec = 128
    tol = Fraction(1, 2 ** (prec - 8))
    rng = random.Random(55)
    t0 = time.perf_counter()
    failures = []

    def sp(kind, q, x, **kw):
        F = rational_field(q)
        return SeriesSpec(kind, F, F.element(x), **kw)

    def check(name, a, b):
        if not (a.overlaps(b) and a.rad_upper() <= tol and b.rad_upper() <= tol):
            failures.append(name)

    for q, x in _identity_points(rng):
        e = eval_series(sp("Eq", q, x), prec)
        check("EqP(X-1)", eval_series(sp("EqP", q, x, P=X_MINUS_1), prec), e)
        check("Tq", eval_series(sp("Tq", q, x), prec), eval_series(sp("EqP", q, x, P=(0, 1)), prec))
        check("EqM(1)", eval_series(sp("EqM", q, x, M=1), prec), e)
    for q, x in _identity_points(rng):
        M = rng.randint(2, 3)
        ball = eval_series(sp("EqM", q, x ** M, M=M), prec)
        terms = series_terms("Eq", q, x, 60 * M)
        filtered = sum(t for n, t in enumerate(terms) if n % M == 0)
        # the omitted terms of the oracle sum are below 2^-300 for these q, x
        r = Fraction(1, 2 ** 300)
        exact = ComplexBall(RealBall.from_endpoints(filtered - r, filtered + r, 400), RealBall.from_value(0))
        check("EqM filtered", ball, exact)
    for q, _ in _identity_points(rng):
        x = Fraction(rng.randint(-int(q) * 8 + 1, int(q) * 8 - 1), 8)
        L = eval_series(sp("Lq", q, x), prec)
        Em = eval_series(sp("Eq", q, -x), prec)
        dE = eval_series(sp("Eq", q, -x, derivative_order=1), prec)
        lhs, rhs = L * Em, RealBall.from_value(x) * dE
        if not (lhs.overlaps(rhs) and L.rad_upper() <= tol and dE.rad_upper() <= tol):
            failures.append("L*E = x*E'")
    for F in (rational_field(2), rational_field(3), rational_field(Fraction(5, 2)), GOLDEN,
              field_create(BETA_POLY), rational_field(7), rational_field(4), rational_field(10),
              rational_field(Fraction(7, 3)), rational_field(-3)):
        check("Lq(1)", eval_series(SeriesSpec("Lq", F, F.one()), prec),
              eval_series(SeriesSpec("ZetaQ1", F, F.one()), prec))
    elapsed = time.perf_counter() - t0
    acceptance("AC5", not failures and elapsed < 30,
               f"6 identities x 10 points at {prec} bits, radii <= 2^-{prec - 8}; failures {failures}; "
               f"{elapsed:.1f}s")


def _random_instance(rng):
    F = rng.choice([Q2, GOLDEN])
    m = rng.randint(1, 2)
    M = rng.randint(0, 2)
    P = rng.choice([X_MINUS_1, (-1, 0, 1)])

    def el():
        return F.element([rng.randint(-3, 3) for _ in range(F.degree)])

    alphas = []
    while len(alphas) < m:
        a = el()
        if not a.is_zero():
            alphas.append(a)
    c = RelationCoeffs.build(F, el(), [[el() for _ in range(M + 1)] for _ in range(m)])
    return F, P, alphas, c


def test_ac6_proofkit_exactness(acceptance):
    rng = random.Random(66)
    t0 = time.perf_counter()
    problems = []
    for inst in range(5):
        F, P, alphas, c = _random_instance(rng)
        seq = list(xn_sequence_thm1(F, P, alphas, c, 30))
        running, den = c.lambda0_tilde, F.one()
        for n, xn, prod in seq:
            if n:
                qn = F.q ** n
                pv = F.zero()
                for k, coef in enumerate(P):
                    pv = pv + qn ** k * coef
                den = den * pv
                for k, a in enumerate(alphas):
                    running = running + A_poly(c, k + 1, n) * a ** n / den
            if prod != den or xn != den * running:
                problems.append((inst, n, "partial sum"))
        for (_, x0, d0), (n1, x1, d1) in zip(seq, seq[1:]):
            rhs = F.zero()
            for k, a in enumerate(alphas):
                rhs = rhs + A_poly(c, k + 1, n1) * a ** n1
            if x1 - (d1 / d0) * x0 != rhs:
                problems.append((inst, n1, "telescoping"))
        for t in traces_thm1(F, P, alphas, c, range(1, 31)):
            if not (is_algebraic_integer(t.xn_exact) and t.norm.denominator == 1):
                problems.append((inst, t.N, "integrality"))
    elapsed = time.perf_counter() - t0
    acceptance("AC6", not problems and elapsed < 120,
               f"5 instances, N <= 30: identities and integrality; problems {problems[:3]}; {elapsed:.1f}s")


def test_ac7_norm_growth(acceptance):
    coeffs = RelationCoeffs.build(Q2, 0, [[1]])
    traces = traces_thm1(Q2, X_MINUS_1, [Q2.one()], coeffs, range(1, 21))
    norms = [abs(t.norm) for t in traces if t.N >= 5]
    growing = all(n != 0 for n in norms) and all(a < b for a, b in zip(norms, norms[1:]))
    spec = SeriesSpec("Eq", Q2, Q2.one())
    value = eval_series(spec, 256)
    den = Fraction(1)
    converges = True
    for t in traces:
        den *= 2 ** t.N - 1
        ratio = t.xn_exact.coeffs[0] / den
        gap = abs(ratio - value.re.mid)
        if gap > value.re.rad + tail_bound(spec, t.N, 256).upper():
            converges = False
    lc = limit_check_thm1(Q2, X_MINUS_1, [Q2.one()], coeffs, 20, 256)
    ok = growing and converges and lc["consistent"] is True
    acceptance("AC7", ok, f"|X_N| strictly increasing for 5 <= N <= 20 ({norms[0]} .. {norms[-1]}); "
                          f"X_N/[N]! within tail of E_2(1): {converges}")


def test_ac8_progression_machinery(acceptance):
    F = rational_field(3)
    alpha = F.element(2)
    setup = ProgressionSetup((1, 2))
    t0 = time.perf_counter()
    quotient = all(factorial_quotient_identity(F, setup, N) for N in range(1, 13))
    envelope, leading = True, True
    for N in range(1, 13):
        terms = elimination_terms(F, alpha, setup, None, N)
        lead = [t for t in terms if t.leading]
        leading &= len(lead) == 1 and lead[0].exact == Fraction(2) ** (N * (setup.d_i[0] - setup.d_i[-1]))
        env = (Fraction(2) ** (setup.d_i[0] - setup.d_i[-1]) / Fraction(3) ** (setup.delta * setup.d)) ** N
        for t in terms:
            if not t.leading and not (t.within_envelope and abs(t.exact.coeffs[0]) <= env):
                envelope = False
    elapsed = time.perf_counter() - t0
    ok = setup.delta == 1 and quotient and envelope and leading and elapsed < 120
    acceptance("AC8", ok, f"q=3, alpha=2, a=(1,2), N <= 12: quotient {quotient}, envelope {envelope}, "
                          f"leading {leading}; {elapsed:.1f}s")


def test_ac9_relation_search(acceptance):
    t0 = time.perf_counter()
    rng = random.Random(2024)
    H, prec = 10 ** 4, 256
    recovered = 0
    for _ in range(50):
        sources, c = _planted(rng, H, prec)
        res = find_relation(query_from_sources(sources, H, prec))
        if (res.status == "relation_found" and _proportional(res.coefficients, c)
                and verify_relation(sources, res.coefficients, prec).upper() < Fraction(1, 2 ** (prec // 2))):
            recovered += 1
    e2 = [SeriesSpec("Eq", Q2, Q2.one(), derivative_order=j) for j in range(3)]
    res = find_relation(query_from_sources([1] + e2, 10 ** 8, 997))
    elapsed = time.perf_counter() - t0
    ok = recovered == 50 and res.status == "none_below_height" and res.covers_max_height and elapsed < 60
    acceptance("AC9", ok, f"planted {recovered}/50; {{1, E_2, E_2', E_2''}} at 997 bits: {res.status}, "
                          f"bound {res.certified_height_bound}; {elapsed:.1f}s")


def test_ac10_hypothesis_checkers(acceptance):
    t0 = time.perf_counter()
    rng = random.Random(10)
    agree = 0
    for _ in range(50):
        q = rng.randint(2, 30)
        a = rng.choice([-1, 1]) * rng.randint(1, 2 * q)
        F = rational_field(q)
        if check_thm1(F, X_MINUS_1, [F.element(a)]).satisfied == (abs(a) < q):
            agree += 1
    v = check_cor_irrational(GOLDEN, GOLDEN.q)
    status = v.status("height_inequality")
    elapsed = time.perf_counter() - t0
    ok = agree == 50 and not v.satisfied and status != PASS and elapsed < 10
    acceptance("AC10", ok, f"closed form agrees on {agree}/50; golden alpha = q boundary reported "
                           f"{status}; {elapsed:.1f}s")
