"""Independent exact oracles used by the test-suite."""
from __future__ import annotations

import math
from fractions import Fraction


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _laguerre_poly(alpha, k):
    return [Fraction((-1) ** u * math.comb(k + alpha, k - u), math.factorial(u)) for u in range(k + 1)]


def amplitude_poly(m, s):
    """<m|D(r)|s> for real r >= 0 as (rational c, power of r, poly in x) with
    <m|D(r)|s> = sqrt(c) * sign-folded r^power e^{-x/2} P(x); returns (c, sign, power, P)."""
    if m >= s:
        c, sign, power, lag = Fraction(math.factorial(s), math.factorial(m)), 1, m - s, _laguerre_poly(m - s, s)
    else:
        c, sign, power, lag = Fraction(math.factorial(m), math.factorial(s)), (-1) ** (s - m), s - m, _laguerre_poly(s - m, m)
    return c, sign, power, lag


def aux_poly_scaled(s, l, n):
    """Exact monomial coefficients of e^x r^{-(l mod 2)} f^s_{n,n+l}(r) as a polynomial
    in x = r^2, divided by sqrt(n!(n+l)!)."""
    c1, g1, p1, a = amplitude_poly(n, s)
    c2, g2, p2, b = amplitude_poly(n + l, s)
    # sqrt(c1 c2) / sqrt(n!(n+l)!) is rational: c1 c2 n! (n+l)! is a perfect square of a rational
    ratio = c1 * c2 / (math.factorial(n) * math.factorial(n + l))
    num, den = math.isqrt(ratio.numerator), math.isqrt(ratio.denominator)
    assert num * num == ratio.numerator and den * den == ratio.denominator
    pref = Fraction(num, den) * g1 * g2
    rp = p1 + p2 - l % 2
    assert rp % 2 == 0
    poly = [Fraction(0)] * (rp // 2) + _poly_mul(a, b)
    return [pref * c for c in poly]


def h_scaled_oracle(s, l, t, n):
    """t-th x-derivative at 0 of the auxiliary function for rho = |n+l><n|, over sqrt(n!(n+l)!)."""
    poly = aux_poly_scaled(s, l, n)
    return poly[t] * math.factorial(t) if t < len(poly) else Fraction(0)


def interpolate_exact(xs, ys):
    """Monomial coefficients of the polynomial through (xs, ys), exact (Gauss-Jordan)."""
    n = len(xs)
    rows = [[Fraction(x) ** j for j in range(n)] + [Fraction(y)] for x, y in zip(xs, ys)]
    for col in range(n):
        piv = next(i for i in range(col, n) if rows[i][col] != 0)
        rows[col], rows[piv] = rows[piv], rows[col]
        pv = rows[col][col]
        rows[col] = [v / pv for v in rows[col]]
        for i in range(n):
            if i != col and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[col])]
    return [rows[i][n] for i in range(n)]


def h_scaled_lambda(s, l, t, n, taylor_coeff):
    """H^s_l(t, n) / sqrt(n!(n+l)!) from the lambda-derivative definition.

    (1-lam)^{-1} K^lam_{n,n+l}(r) = sqrt(n!(n+l)!) r^l e^{-x}
        sum_u (1-lam)^{2u+l} lam^{n-u} e^{lam x} x^u / ((n-u)! (l+u)! u!),
    and the s-th lambda-Taylor coefficient at 0 of each term is
    taylor_coeff(2u+l, n-u, s, x).  Multiply by e^x r^{-(l mod 2)}, which leaves
    x^{l//2} times a polynomial, and read off t! times the x^t coefficient.
    """
    h = l // 2
    degree = n + s + h + 1

    def poly_value(x):
        total = Fraction(0)
        for u in range(n + 1):
            c = Fraction(1, math.factorial(n - u) * math.factorial(l + u) * math.factorial(u))
            total += c * Fraction(x) ** u * taylor_coeff(2 * u + l, n - u, s, Fraction(x))
        return Fraction(x) ** h * total

    xs = list(range(degree + 1))
    coeffs = interpolate_exact(xs, [poly_value(x) for x in xs])
    return coeffs[t] * math.factorial(t) if t < len(coeffs) else Fraction(0)
