import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasetomo.errors import DegenerateTruncationError, DomainError
from phasetomo.special_fn import PhasePoint
from phasetomo.states import (
    DensityMatrix,
    characteristic_weight,
    completeness_diagnostic,
    fock_state,
    pure_state,
    random_density_matrix,
    truncate_normalize,
    validate,
)


def test_validate_examples(example_state):
    assert validate(DensityMatrix([[1.0]])).passed
    assert validate(example_state).passed
    bad = DensityMatrix([[0.5, 1.0], [0.0, 0.5]])
    rep = validate(bad)
    assert not rep.passed and rep.hermiticity_defect == 1.0
    assert any("Hermitian" in m for m in rep.messages)


def test_validate_trace_and_positivity():
    assert not validate(DensityMatrix(np.diag([0.6, 0.6]))).passed
    rep = validate(DensityMatrix(np.diag([1.2, -0.2])))
    assert not rep.passed and rep.min_eigenvalue == pytest.approx(-0.2)


def test_density_matrix_rejects_bad_shapes():
    with pytest.raises(DomainError):
        DensityMatrix(np.zeros((2, 3)))
    with pytest.raises(DomainError):
        DensityMatrix([[np.nan]])
    rho = DensityMatrix(np.eye(2) / 2)
    with pytest.raises(ValueError):
        rho.entries[0, 0] = 1


def test_random_density_matrix_examples():
    assert np.allclose(random_density_matrix(1, 1, seed=3).entries, [[1.0]])
    a = random_density_matrix(4, 4, seed=7)
    b = random_density_matrix(4, 4, seed=7)
    assert np.array_equal(a.entries, b.entries)
    ev = np.linalg.eigvalsh(random_density_matrix(5, 2, seed=1).entries)
    assert int(np.sum(ev > 1e-9)) == 2
    with pytest.raises(DomainError):
        random_density_matrix(3, 4)


@given(st.integers(1, 8), st.integers(0, 10**6), st.data())
def test_random_states_are_valid_and_purity_bounded(dim, seed, data):
    rank = data.draw(st.integers(1, dim))
    rho = random_density_matrix(dim, rank, seed)
    assert validate(rho).passed
    p = rho.purity()
    assert p <= 1 + 1e-10
    if rank == 1:
        assert p == pytest.approx(1.0, abs=1e-10)
    elif dim > 1:
        assert p < 1 - 1e-10


def test_truncate_normalize_examples():
    q = 0.5
    k = DensityMatrix(np.diag([(1 - q) * q**j for j in range(30)]))
    assert np.allclose(truncate_normalize(k, 2).entries, np.diag([2 / 3, 1 / 3]))
    rho = random_density_matrix(4, seed=2)
    assert np.allclose(truncate_normalize(rho, 4).entries, rho.entries)
    with pytest.raises(DegenerateTruncationError):
        truncate_normalize(fock_state(1, 3), 1)


@given(st.integers(1, 7), st.integers(0, 1000), st.data())
def test_truncate_normalize_preserves_invariants(dim, seed, data):
    n = data.draw(st.integers(1, dim))
    assert validate(truncate_normalize(random_density_matrix(dim, seed=seed), n)).passed


def test_truncation_trace_norm_converges_monotonically():
    for q in (0.3, 0.5, 0.8):
        size = 60
        k = np.diag([(1 - q) * q**j for j in range(size)])
        k /= np.trace(k)
        dists = []
        for n in range(1, 30):
            kn = np.zeros_like(k)
            kn[:n, :n] = truncate_normalize(DensityMatrix(k), n).entries.real
            dists.append(np.abs(np.linalg.eigvalsh(kn - k)).sum())
        assert all(b < a for a, b in zip(dists, dists[1:]))


def test_characteristic_weight_examples():
    for r in (0.0, 0.5, 2.0):
        assert characteristic_weight(fock_state(0), PhasePoint(r, 0.4)) == pytest.approx(math.exp(-r * r / 2))
    rho = random_density_matrix(4, seed=5)
    assert characteristic_weight(rho, PhasePoint(0.0, 1.0)) == pytest.approx(1.0)
    # tr[|1><1| D(r)] = e^{-r^2/2} (1 - r^2) has its only positive root at r = 1
    from scipy.optimize import brentq

    f = lambda r: characteristic_weight(fock_state(1), PhasePoint(r, 0.0)).real  # noqa: E731
    rs = np.linspace(0.013, 6.1, 600)  # avoid hitting r = 1 exactly
    vals = np.array([f(r) for r in rs])
    sign_changes = np.flatnonzero(np.diff(np.sign(vals)))
    assert sign_changes.size == 1
    assert brentq(f, rs[sign_changes[0]], rs[sign_changes[0] + 1]) == pytest.approx(1.0, abs=1e-12)


def test_completeness_diagnostic_examples():
    rng = np.random.default_rng(0)
    r = rng.uniform(0, 4, 300)
    th = rng.uniform(0, 2 * np.pi, 300)
    rep = completeness_diagnostic(fock_state(0), (r, th))
    assert rep.fraction_below == 0.0 and rep.verdict == "nonzero almost everywhere"
    grid = [PhasePoint(rr, t) for rr in (0.5, 1.0, 1.5) for t in (0.0, 1.0, 2.0)]
    rep = completeness_diagnostic(fock_state(1), grid)
    assert sorted({p.r for p in rep.flagged}) == [1.0]
    assert len(rep.flagged) == 3
    rep = completeness_diagnostic(DensityMatrix(np.eye(2) / 2), (r, th))
    assert rep.flagged == []


def test_pure_state_helper():
    rho = pure_state([1, 1])
    assert np.allclose(rho.entries, 0.5 * np.ones((2, 2)))
    assert rho.band(1)[0] == pytest.approx(0.5)
