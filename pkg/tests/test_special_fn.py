import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasetomo.errors import DomainError
from phasetomo.special_fn import (
    PhasePoint,
    binomial,
    displacement_element,
    displacement_real,
    laguerre,
    laguerre_sum,
    log_sqrt_factorial_ratio,
    sqrt_factorial_ratio,
)


def test_phase_point_normalisation():
    p = PhasePoint(1.0, -math.pi / 2)
    assert p.theta == pytest.approx(3 * math.pi / 2)
    q = PhasePoint(-2.0, 0.0)
    assert q.r == 2.0 and q.theta == pytest.approx(math.pi)
    assert PhasePoint(1.0, 2 * math.pi).theta == 0.0
    z = 0.3 - 0.4j
    assert PhasePoint.from_complex(z).z == pytest.approx(z)


@given(st.floats(-50, 50), st.floats(-100, 100))
def test_phase_point_invariants(r, theta):
    p = PhasePoint(r, theta)
    assert p.r >= 0 and 0 <= p.theta < 2 * math.pi
    assert p.z == pytest.approx(r * complex(math.cos(theta), math.sin(theta)), abs=1e-9)


def test_binomial_examples():
    assert binomial(4, 2) == 6
    k = 3
    assert binomial(k - 1, k) == 0
    u, l = 2, 3
    assert binomial(u + l - 1, l - 1) == math.factorial(4) // (math.factorial(2) * math.factorial(2))
    assert binomial(5, -1) == 0 and binomial(3, 4) == 0


def test_binomial_negative_upper_index():
    with pytest.raises(DomainError):
        binomial(-2, 1)
    # C(-1, k) = (-1)^k
    assert [binomial(-1, k, generalized=True) for k in range(4)] == [1, -1, 1, -1]


@given(st.integers(0, 60), st.integers(-3, 63))
def test_binomial_pascal(n, k):
    assert binomial(n + 1, k) == binomial(n, k) + binomial(n, k - 1)


def test_laguerre_examples():
    for alpha in range(5):
        for m in range(6):
            assert laguerre(alpha, m, 0.0) == pytest.approx(math.comb(m + alpha, m))
    for x in (-1.0, 0.0, 0.7, 3.0):
        assert laguerre(1, 1, x) == pytest.approx(2 - x)
        assert laguerre(0, 0, x) == 1.0


def test_laguerre_recurrence_matches_exact_sum():
    for alpha in range(6):
        for s in range(13):
            for x in (Fraction(1, 3), Fraction(7, 2), Fraction(11)):
                exact = laguerre_sum(alpha, s, x)
                assert laguerre(alpha, s, x) == exact
                assert float(laguerre(alpha, s, float(x))) == pytest.approx(float(exact), rel=1e-11, abs=1e-11)


def test_laguerre_large_x_stability():
    # alternating sums lose everything here; the recurrence must not
    x = 40.0
    exact = float(laguerre_sum(0, 30, Fraction(40)))
    assert laguerre(0, 30, x) == pytest.approx(exact, rel=1e-9)


def test_laguerre_bound():
    for n in range(12):
        for s in range(n + 1):
            r = np.linspace(0, 5, 41)
            lhs = np.abs(laguerre(n - s, s, r * r))
            assert np.all(lhs <= math.comb(n, s) * np.exp(r * r / 2) * (1 + 1e-12))


def test_sqrt_factorial_ratio_examples():
    assert sqrt_factorial_ratio(0, 0) == 1.0
    assert sqrt_factorial_ratio(4, 2) == pytest.approx(math.sqrt(12), rel=1e-15)
    assert sqrt_factorial_ratio(200, 198) == pytest.approx(math.sqrt(200 * 199), rel=1e-14)


@given(st.integers(0, 1000), st.integers(0, 1000))
def test_sqrt_factorial_ratio_accuracy(p, q):
    log_true = 0.5 * (math.lgamma(p + 1) - math.lgamma(q + 1))
    assert log_sqrt_factorial_ratio(p, q) == pytest.approx(log_true, rel=1e-12, abs=1e-12)
    if abs(log_true) < 700:
        # exact big-integer reference
        num, den = (math.factorial(p), math.factorial(q))
        ref = math.exp(0.5 * (math.log(num) - math.log(den)))
        assert sqrt_factorial_ratio(p, q) == pytest.approx(ref, rel=1e-12)


def test_displacement_examples():
    for r in (0.0, 0.4, 1.3, 2.5):
        for th in (0.0, 1.1):
            z = PhasePoint(r, th)
            assert displacement_element(0, 0, z) == pytest.approx(math.exp(-r * r / 2))
        assert displacement_element(1, 0, PhasePoint(r, 0)) == pytest.approx(r * math.exp(-r * r / 2))
    for m in range(5):
        for n in range(5):
            assert displacement_element(m, n, PhasePoint(0.0, 0.3)) == (1.0 if m == n else 0.0)


def test_displacement_large_indices_finite():
    v = displacement_real(500, 480, 3.0)
    assert np.isfinite(v)
    assert displacement_real(500, 0, 1.0) == 0.0 or np.isfinite(displacement_real(500, 0, 1.0))


@pytest.mark.parametrize("n", [0, 3, 10])
@pytest.mark.parametrize("r", [0.5, 2.0, 4.0])
def test_unitarity_rows(n, r):
    m = np.arange(201)
    col = np.array([displacement_real(int(k), n, r) for k in m])
    assert abs(np.sum(col**2) - 1.0) <= 1e-10


@given(st.integers(0, 20), st.integers(0, 20), st.floats(0, 3), st.floats(0, 6.28))
def test_displacement_adjoint_symmetry(m, n, r, th):
    z = PhasePoint(r, th)
    assert displacement_element(m, n, z) == pytest.approx(np.conj(displacement_element(n, m, -z)), abs=1e-12)


def test_displacement_matches_matrix_exponential():
    from scipy.linalg import expm

    dim = 60
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    z = 0.7 * np.exp(0.4j)
    d = expm(z * a.conj().T - np.conj(z) * a)
    for m in range(8):
        for n in range(8):
            assert displacement_element(m, n, z) == pytest.approx(d[m, n], abs=1e-12)
