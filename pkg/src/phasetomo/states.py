"""Density matrices in the Fock basis: validation, test states, truncation and
the informational-completeness diagnostic for covariant phase-space observables."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTruncationError, DomainError
from .special_fn import PhasePoint, displacement_real

__all__ = [
    "DensityMatrix",
    "GeneratorOperator",
    "ValidationReport",
    "CompletenessReport",
    "validate",
    "random_density_matrix",
    "truncate_normalize",
    "characteristic_weight",
    "completeness_diagnostic",
    "fock_state",
    "pure_state",
]

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = -1e-10


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Dense N x N complex matrix rho[m, n] = <m|rho|n>.

    Construction only checks shape and finiteness; use :func:`validate` for the
    physical invariants.  The stored array is read-only.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DomainError(f"density matrix must be square and non-empty, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("density matrix has non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, idx):
        return self.entries[idx]

    def band(self, l: int) -> np.ndarray:
        """The l-th lower diagonal rho_{n+l, n}, n = 0..dim-1-l."""
        return np.diagonal(self.entries, offset=-l).copy()

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


# Generator operators K obey the same invariants as states.
GeneratorOperator = DensityMatrix


def fock_state(n: int, dim: int | None = None) -> DensityMatrix:
    dim = n + 1 if dim is None else dim
    a = np.zeros((dim, dim), complex)
    a[n, n] = 1.0
    return DensityMatrix(a)


def pure_state(amplitudes) -> DensityMatrix:
    psi = np.asarray(amplitudes, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return DensityMatrix(np.outer(psi, psi.conj()))


@dataclass
class ValidationReport:
    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float
    passed: bool
    messages: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "hermiticity_defect": self.hermiticity_defect,
            "trace_defect": self.trace_defect,
            "min_eigenvalue": self.min_eigenvalue,
            "passed": self.passed,
            "messages": list(self.messages),
        }


def validate(m: DensityMatrix, *, trace_tol: float = TRACE_TOL) -> ValidationReport:
    a = np.asarray(m.entries if isinstance(m, DensityMatrix) else m, dtype=complex)
    herm = float(np.max(np.abs(a - a.conj().T)))
    tr = complex(np.trace(a))
    trace_defect = abs(tr - 1.0)
    # eigenvalues of the Hermitian part: the anti-Hermitian part is reported separately
    eigmin = float(np.min(np.linalg.eigvalsh(0.5 * (a + a.conj().T))))
    msgs = []
    if herm > HERMITICITY_TOL:
        msgs.append(f"not Hermitian (max defect {herm:.3e})")
    if trace_defect > trace_tol:
        msgs.append(f"trace {tr:.6g} differs from 1 by {trace_defect:.3e}")
    if eigmin < POSITIVITY_TOL:
        msgs.append(f"negative eigenvalue {eigmin:.3e}")
    return ValidationReport(herm, trace_defect, eigmin, not msgs, msgs)


def random_density_matrix(dim: int, rank: int | None = None, seed: int = 0) -> DensityMatrix:
    """Ginibre state G G^dagger / tr(G G^dagger) with G of shape (dim, rank)."""
    rank = dim if rank is None else rank
    if dim < 1 or not 1 <= rank <= dim:
        raise DomainError(f"need 1 <= rank <= dim, got rank={rank}, dim={dim}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def truncate_normalize(k: DensityMatrix, n: int) -> DensityMatrix:
    """P_n K P_n / tr(P_n K P_n) as an n x n operator."""
    if not 1 <= n <= k.dim:
        raise DomainError(f"truncation size {n} outside 1..{k.dim}")
    block = np.array(k.entries[:n, :n])
    tr = np.trace(block).real
    if abs(tr) <= 1e-300:
        raise DegenerateTruncationError(
            f"leading {n}x{n} block has zero trace; choose n at least the first index "
            "with non-zero block trace"
        )
    return DensityMatrix(block / tr)


def _as_points(grid):
    if isinstance(grid, PhasePoint):
        return np.array([grid.r]), np.array([grid.theta])
    if isinstance(grid, tuple) and len(grid) == 2:
        r, th = np.broadcast_arrays(np.asarray(grid[0], float), np.asarray(grid[1], float))
        return r.ravel(), th.ravel()
    pts = list(grid)
    return np.array([p.r for p in pts], float), np.array([p.theta for p in pts], float)


def characteristic_weight(k: DensityMatrix, z):
    """tr[K D(z)] = sum_{m,n} K_{mn} <n|D(z)|m>.

    ``z`` is a PhasePoint (returns a complex scalar) or a pair of arrays (r, theta).
    """
    scalar = isinstance(z, PhasePoint)
    r, th = _as_points(z)
    a = k.entries
    out = np.zeros(r.shape, complex)
    for m in range(k.dim):
        for n in range(k.dim):
            if a[m, n] != 0:
                out += a[m, n] * np.exp(1j * th * (n - m)) * displacement_real(n, m, r)
    return complex(out[0]) if scalar else out


@dataclass
class CompletenessReport:
    minimum: float
    fraction_below: float
    threshold: float
    flagged: list[PhasePoint]
    verdict: str

    def to_dict(self) -> dict:
        return {
            "minimum": self.minimum,
            "fraction_below": self.fraction_below,
            "threshold": self.threshold,
            "flagged": [[p.r, p.theta] for p in self.flagged],
            "verdict": self.verdict,
        }


def completeness_diagnostic(k: DensityMatrix, grid, threshold: float = 1e-12) -> CompletenessReport:
    """Evaluate |tr[K D(z)]| on a grid of phase points and flag (near-)zeros.

    For a finite K the zeros of tr[K D(z)] lie on finitely many circles, so the
    observable generated by K is informationally complete; the verdict reports
    whether the flagged points are confined to a few radii.
    """
    r, th = _as_points(grid)
    if r.size == 0:
        raise DomainError("empty grid")
    w = np.abs(characteristic_weight(k, (r, th)))
    mask = w < threshold
    flagged = [PhasePoint(ri, ti) for ri, ti in zip(r[mask], th[mask])]
    radii = np.unique(np.round(r[mask], 9))
    # a polynomial in |z| of degree <= 2(dim-1) has at most that many positive roots
    if radii.size <= 2 * (k.dim - 1) or not mask.any():
        verdict = "nonzero almost everywhere"
    else:
        verdict = "zeros not confined to finitely many radii"
    return CompletenessReport(float(w.min()), float(mask.mean()), threshold, flagged, verdict)
