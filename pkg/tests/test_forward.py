import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasetomo.errors import ConsistencyError, DomainError
from phasetomo.forward import (
    RadialProfile,
    SampleSet,
    cahill_glauber_K,
    cahill_glauber_K_sum,
    density,
    disk_mass,
    efficiency_to_lambda,
    f_coeff,
    fourier_component,
    sample,
    w_lambda_density,
    w_lambda_density_closed,
)
from phasetomo.forward import _cg_closed_poly, _cg_sum_poly
from phasetomo.special_fn import PhasePoint, displacement_element
from phasetomo.states import DensityMatrix, fock_state, pure_state, random_density_matrix

R = np.linspace(0, 3, 13)


def test_f_coeff_examples():
    assert np.allclose(f_coeff(0, 0, 0, R), np.exp(-R**2))
    assert np.allclose(f_coeff(1, 0, 1, R), -np.exp(-R**2) * R * (1 - R**2))


@given(st.integers(0, 8), st.integers(0, 8), st.integers(0, 8), st.floats(0, 5))
def test_f_coeff_symmetry(s, n, m, r):
    assert f_coeff(s, n, m, r) == f_coeff(s, m, n, r)


def test_density_examples(example_state):
    for s in range(3):
        assert density(s, example_state, PhasePoint(0.0, 0.7)) == pytest.approx(example_state[s, s].real)
    r, th = np.meshgrid(R, [0.0, 1.0, 4.0])
    assert np.allclose(density(1, fock_state(0), (r, th)), r**2 * np.exp(-(r**2)))
    assert np.allclose(density(0, fock_state(0), (r, th)), np.exp(-(r**2)))


def test_density_rejects_non_hermitian():
    a = np.array([[0.5, 0.4], [0.0, 0.5]])
    with pytest.raises(ConsistencyError):
        density(0, DensityMatrix(a), (np.array([0.8]), np.array([0.3])))


def test_density_nonnegative():
    rng = np.random.default_rng(1)
    for k in range(100):
        rho = random_density_matrix(int(rng.integers(1, 7)), seed=k)
        s = int(rng.integers(0, 5))
        r = rng.uniform(0, 6, 100)
        th = rng.uniform(0, 2 * np.pi, 100)
        assert np.all(density(s, rho, (r, th)) >= -1e-10)


@pytest.mark.parametrize("dim", [1, 2, 3, 4])
@pytest.mark.parametrize("s", [0, 1, 2, 3])
def test_normalisation(dim, s):
    rho = random_density_matrix(dim, seed=10 * dim + s)
    assert disk_mass(s, rho, 8.0) == pytest.approx(1.0, abs=1e-6)


def test_fourier_component_examples(example_state):
    p = fourier_component(1, example_state, 0, [0.0, 0.5])
    assert p.values[0] == pytest.approx(0.3)
    plus = pure_state([1, 1])
    p = fourier_component(1, plus, 1, R)
    assert np.allclose(p.values, -0.5 * np.exp(-R**2) * R * (1 - R**2))
    rho = random_density_matrix(4, seed=3)
    p = fourier_component(2, rho, 3, R)
    assert np.allclose(p.values, rho[3, 0] * f_coeff(2, 0, 3, R))
    with pytest.raises(DomainError):
        fourier_component(0, rho, 4, R)


def test_fourier_component_is_angular_average():
    rho = random_density_matrix(4, seed=9)
    th = np.arange(64) * 2 * np.pi / 64
    rr, tt = np.meshgrid(R, th, indexing="ij")
    g = density(2, rho, (rr, tt))
    for l in range(4):
        num = (g * np.exp(1j * l * tt)).mean(axis=1)
        assert np.allclose(num, fourier_component(2, rho, l, R).values, atol=1e-13)


def test_fourier_component_hermiticity():
    rho = random_density_matrix(4, seed=4).entries
    for l in range(1, 4):
        minus = sum(rho[n, n + l] * f_coeff(1, n + l, n, R) for n in range(4 - l))
        assert np.allclose(np.conj(minus), fourier_component(1, rho, l, R).values)


def test_radial_profile_invariants():
    with pytest.raises(DomainError):
        RadialProfile(0, 0, "analytic", [0.2, 0.1], [1.0, 1.0])
    with pytest.raises(DomainError):
        RadialProfile(0, 0, "sampled", [0.1, 0.2], [1.0, 1.0])
    with pytest.raises(DomainError):
        RadialProfile(0, 0, "analytic", [0.1, 0.2], [1.0, 1.0j])


def test_covariance_under_displacement():
    trunc = 40
    alpha = 0.4 * np.exp(0.9j)
    d = np.array([[displacement_element(m, n, alpha) for n in range(trunc)] for m in range(trunc)])
    rho = np.zeros((trunc, trunc), complex)
    rho[:3, :3] = random_density_matrix(3, seed=12).entries
    shifted = d @ rho @ d.conj().T
    rng = np.random.default_rng(0)
    for _ in range(10):
        z = complex(*rng.uniform(-1.5, 1.5, 2))
        for s in range(3):
            lhs = density(s, shifted, (np.array([abs(z)]), np.array([np.angle(z)])))[0]
            w = z - alpha
            rhs = density(s, rho[:3, :3], (np.array([abs(w)]), np.array([np.angle(w)])))[0]
            assert lhs == pytest.approx(rhs, abs=1e-8)


def test_cahill_glauber_examples():
    rr = np.linspace(0, 2.5, 11)
    for n in range(4):
        for l in range(3):
            assert np.allclose(cahill_glauber_K(0.0, n, l, rr), f_coeff(0, n, n + l, rr), atol=1e-15)
    for lam in (0.0, 0.2, 0.7):
        assert np.allclose(cahill_glauber_K(lam, 0, 0, rr), (1 - lam) * np.exp(-(1 - lam) * rr**2))
    a = cahill_glauber_K(0.3, 2, 1, 1.7)
    b = cahill_glauber_K_sum(0.3, 2, 1, 1.7)
    assert a == pytest.approx(b, abs=1e-12)


def test_cahill_glauber_forms_agree_exactly():
    for lam in (Fraction(1, 3), Fraction(3, 4), Fraction(1, 10)):
        for x in (Fraction(0), Fraction(2, 7), Fraction(5)):
            for n in range(5):
                for l in range(4):
                    assert _cg_closed_poly(lam, n, l, x) == _cg_sum_poly(lam, n, l, x)


def test_w_lambda_examples():
    rho = random_density_matrix(3, seed=1)
    z = PhasePoint(0.8, 1.2)
    assert w_lambda_density(0.0, rho, z) == pytest.approx(density(0, rho, z))
    for lam in (0.1, 0.5, 0.9):
        assert w_lambda_density(lam, fock_state(0), PhasePoint(0.0)) == pytest.approx(1 - lam)


@given(st.floats(0.0, 0.95), st.integers(0, 10**4), st.floats(0, 3), st.floats(0, 6.28))
def test_w_lambda_series_matches_closed_form(lam, seed, r, th):
    rho = random_density_matrix(3, seed=seed)
    z = PhasePoint(r, th)
    assert w_lambda_density(lam, rho, z) == pytest.approx(w_lambda_density_closed(lam, rho, z), abs=1e-10)


def test_lambda_derivatives_reproduce_number_state_densities():
    rng = np.random.default_rng(3)
    npts, radius = 64, 0.5
    lam = radius * np.exp(2j * np.pi * np.arange(npts) / npts)
    for k in range(10):
        rho = random_density_matrix(int(rng.integers(1, 5)), seed=k)
        z = PhasePoint(rng.uniform(0, 2.5), rng.uniform(0, 2 * np.pi))
        vals = np.array([w_lambda_density_closed(x, rho, z) / (1 - x) for x in lam])
        coeffs = np.fft.fft(vals) / npts / radius ** np.arange(npts)
        for s in range(4):
            assert coeffs[s] == pytest.approx(density(s, rho, z), abs=1e-8)


def test_efficiency_to_lambda():
    assert efficiency_to_lambda(1.0) == 0.0
    assert efficiency_to_lambda(0.9) == pytest.approx(0.1)
    assert efficiency_to_lambda(0.75) == 0.25
    for bad in (0.0, 1.5, -0.1):
        with pytest.raises(DomainError):
            efficiency_to_lambda(bad)


def test_sample_empty_and_deterministic():
    assert sample(0, fock_state(0), 0, seed=1).count == 0
    a = sample(1, random_density_matrix(3, seed=2), 2000, seed=5)
    b = sample(1, random_density_matrix(3, seed=2), 2000, seed=5)
    assert np.array_equal(a.r, b.r) and np.array_equal(a.theta, b.theta)
    assert np.all(a.r <= a.r_max)
    assert a.metadata()["count"] == 2000


@pytest.mark.parametrize("n", [0, 1, 3])
def test_sample_moments_number_states(n):
    count = 200_000
    ss = sample(0, fock_state(n), count, seed=n)
    mean = np.mean(ss.r**2)
    assert abs(mean - (n + 1)) <= 3 * math.sqrt(n + 1) / math.sqrt(count)


def test_sample_phase_uniform_for_diagonal_state(example_state):
    ss = sample(1, example_state, 100_000, seed=4)
    assert abs(np.mean(np.exp(1j * ss.theta))) < 5 / math.sqrt(ss.count)


def test_sample_warns_on_small_disk():
    with pytest.warns(RuntimeWarning):
        ss = sample(0, fock_state(0), 10, seed=0, r_max=1.0)
    assert ss.truncated_mass == pytest.approx(math.exp(-1), rel=1e-6)
    assert ss.warnings


def test_sample_set_invariants():
    with pytest.raises(DomainError):
        SampleSet(0, [2.0], [0.0], 0, 1.0, 0.0)
    with pytest.raises(DomainError):
        SampleSet(0, [0.5], [0.0], 0, 1.0, 1.0)
