"""Independent reference computations used by the tests.

Nothing here imports qindep: these are deliberately naive routines over
exact rationals and Python integers.
"""

from fractions import Fraction
from math import factorial, lcm


def falling(j: int, n: int) -> int:
    return factorial(n) // factorial(n - j) if n >= j else 0


def poly_at(P, t: Fraction) -> Fraction:
    return sum(Fraction(c) * t ** i for i, c in enumerate(P))


def series_terms(kind: str, q: Fraction, x: Fraction, N: int, P=None, M: int = 1, j: int = 0,
                 shift=None):
    """Exact terms t_n (n = 0..N) of the j-th derivative series.

    ``shift`` is the power offset: x^(n - shift); default j (derivative),
    0 gives the f_j = x^j E^(j) form.
    """
    s = j if shift is None else shift
    q, x = Fraction(q), Fraction(x)
    out = []
    D = Fraction(1)
    for n in range(0, N + 1):
        if kind in ("Lq", "ZetaQ1"):
            if n == 0 or n < j:
                out.append(Fraction(0))
                continue
            D = q ** n - 1
        elif n >= 1:
            if kind == "Eq":
                g = q ** n - 1
            elif kind == "Tq":
                g = q ** n
            elif kind == "EqP":
                g = poly_at(P, q ** n)
            elif kind == "EqM":
                g = Fraction(1)
                for t in range(M * (n - 1) + 1, M * n + 1):
                    g *= q ** t - 1
            D *= g
        if n < j:
            out.append(Fraction(0))
            continue
        out.append(falling(j, n) * x ** (n - s) / D)
    return out


def fixed_point_value(terms, K: int):
    """Sum of terms in K-bit fixed point: returns (value, error bound)."""
    scale = 1 << K
    acc = 0
    for t in terms:
        acc += (t.numerator * scale) // t.denominator
    return Fraction(acc, scale), Fraction(len(terms), scale)


def oracle(kind, q, x, N=400, K=400, P=None, M=1, j=0, shift=None):
    """(value, err) with |true - value| <= err.

    Tail bound |t_{N+1}| / (1 - rho) with rho bounding every later term
    ratio: for cumulative denominators the ratios decrease, so the last
    observed one works; for L_q they increase towards |x/q| and rho is the
    limit times the falling-factorial growth.
    """
    terms = series_terms(kind, q, x, N + 2, P, M, j, shift)
    head, nxt, nxt2 = terms[: N + 1], terms[N + 1], terms[N + 2]
    v, e = fixed_point_value(head, K)
    if nxt == 0:
        return v, e
    rho = abs(nxt2 / nxt)
    if kind in ("Lq", "ZetaQ1"):
        rho = abs(Fraction(x) / Fraction(q)) * Fraction(N + 2, N + 2 - j)
    assert rho < 1, "oracle truncation too short"
    return v, e + abs(nxt) / (1 - rho)


def q_fact(q: Fraction, n: int) -> Fraction:
    out = Fraction(1)
    for t in range(1, n + 1):
        out *= q ** t - 1
    return out


def xn_thm1(q, P, alphas, lambda0, rows, N) -> Fraction:
    """X_N from its definition: prod P(q^t) times the truncated relation."""
    q = Fraction(q)
    lt = Fraction(lambda0) + sum(Fraction(r[0]) for r in rows)
    total = lt
    den = Fraction(1)
    for n in range(1, N + 1):
        den *= poly_at(P, q ** n)
        for a, row in zip(alphas, rows):
            A = sum(Fraction(lam) * falling(j, n) for j, lam in enumerate(row))
            total += A * Fraction(a) ** n / den
    return total * den


def xn_thm2(q, alpha, a_list, lambda0, lams, N) -> Fraction:
    """[dN]! (lambda0~ + sum_i lambda_i sum_{n <= N d_i} alpha^n / [a_i n]!)."""
    q, alpha = Fraction(q), Fraction(alpha)
    d = lcm(*a_list)
    total = Fraction(lambda0) + sum(Fraction(x) for x in lams)
    for a_i, lam in zip(a_list, lams):
        for n in range(1, N * (d // a_i) + 1):
            total += Fraction(lam) * alpha ** n / q_fact(q, a_i * n)
    return total * q_fact(q, d * N)


def gram_schmidt(rows):
    """Exact (|b*_i|^2 list, mu matrix) for integer rows."""
    bstar, norms, mu = [], [], []
    for i, row in enumerate(rows):
        v = [Fraction(x) for x in row]
        mrow = []
        for u, nu in zip(bstar, norms):
            m = sum(Fraction(a) * c for a, c in zip(row, u)) / nu if nu else Fraction(0)
            mrow.append(m)
            v = [a - m * c for a, c in zip(v, u)]
        bstar.append(v)
        norms.append(sum(a * a for a in v))
        mu.append(mrow)
    return norms, mu


def gram_det(rows) -> Fraction:
    """det(B B^T) as the product of the Gram-Schmidt norms."""
    out = Fraction(1)
    for n in gram_schmidt(rows)[0]:
        out *= n
    return out
