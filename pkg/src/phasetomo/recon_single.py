"""Reconstruction from a single covariant observable generated by |s><s|.

With h = floor(l/2) and q = l mod 2, the auxiliary function

    F_l(x) = e^x x^{-q/2} G^{|s>}_{rho,l}(sqrt(x))

is a polynomial in x whose derivatives at the origin satisfy

    F_l^{(p+s+h)}(0) = sum_n H^s_l(p+s+h, n) rho_{n+l,n},

an upper-triangular system (A^{s,l}_{pn} = H^s_l(p+s+h, n), band width 2s).
H^s_l(t, n) = Q^s_l(t, n) sqrt(n!(n+l)!) with Q rational, so A is inverted
exactly on the rational part and the irrational column scale is divided out
afterwards.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CoverageError, DomainError, EstimationError, SingularSystemError
from .fitting import fit_profile
from .forward import RadialProfile, fourier_component
from .recon_tomogram import ReconstructionReport, Tomogram, default_radii
from .special_fn import binomial, inv_factorial, log_sqrt_factorial_ratio
from .states import DensityMatrix, validate
from .triinv import TriangularOperator, inverse

__all__ = [
    "lambda_taylor_coeff",
    "h_coeff_scaled",
    "h_coeff",
    "moment_degree",
    "CoefficientMatrix",
    "build_coefficient_matrix",
    "MomentVector",
    "moments_from_profile",
    "analytic_profiles",
    "reconstruct_band",
    "reconstruct_band_exact",
    "reconstruct",
    "ANALYTIC_FIT_RMAX",
]

# fit window for exact profiles; high-order derivatives are poorly
# conditioned on short x ranges
ANALYTIC_FIT_RMAX = 2.5


def lambda_taylor_coeff(p: int, q: int, s: int, x):
    """(1/s!) d^s/dlam^s [(1-lam)^p lam^q e^{lam x}] at lam = 0."""
    if min(p, q, s) < 0:
        raise DomainError("p, q, s must be non-negative")
    total = 0
    for k in range(q, min(s, p + q) + 1):
        term = (-1) ** (k + q) * binomial(p, k - q) * x ** (s - k)
        if isinstance(x, (int, Fraction)):
            total += Fraction(term, math.factorial(s - k))
        else:
            total += term / math.factorial(s - k)
    return total


def h_coeff_scaled(s: int, l: int, t: int, n: int) -> Fraction:
    """Q^s_l(t, n) = H^s_l(t, n) / sqrt(n! (n+l)!), exact."""
    if min(s, l, t, n) < 0:
        raise DomainError("s, l, t, n must be non-negative")
    h, odd = divmod(l, 2)
    # zero regions: t - h < 0, t - h < n - s, n < t - h - s
    if t - h < 0 or t - h < n - s or n < t - h - s:
        return Fraction(0)
    total = Fraction(0)
    for u in range(max(0, n - s), min(n, t - h) + 1):
        total += Fraction(
            binomial(2 * (u + h) + odd, u) * binomial(s - n + u, t - h - u),
            math.factorial(n - u) * math.factorial(u - n + s),
        )
    sign = (-1) ** (s + h + t + n)
    # 1/k! = 0 for k < 0 covers the remaining vanishing entries
    return sign * math.factorial(t) * inv_factorial(h + t + n - s + odd) * total


def _exact_column_scale(n: int, l: int) -> int | None:
    """sqrt(n! (n+l)!) as an integer when it is one (always for l = 0)."""
    prod = math.factorial(n) * math.factorial(n + l)
    root = math.isqrt(prod)
    return root if root * root == prod else None


def _column_scale(n: int, l: int) -> float:
    """sqrt(n! (n+l)!) as a float (may overflow to inf for very large n)."""
    exact = _exact_column_scale(n, l) if n < 100 else None
    if exact is not None:
        return float(exact)
    return math.exp(log_sqrt_factorial_ratio(n, 0) + log_sqrt_factorial_ratio(n + l, 0))


def h_coeff(s: int, l: int, t: int, n: int) -> float:
    """H^s_l(t, n) in floating point."""
    q = h_coeff_scaled(s, l, t, n)
    return 0.0 if q == 0 else float(q) * _column_scale(n, l)


def moment_degree(s: int, l: int, dim: int) -> int:
    """Degree in x of the auxiliary polynomial for a dim x dim state."""
    return dim - 1 + s - (l + 1) // 2


@dataclass
class CoefficientMatrix:
    """Finite window of A^{s,l}; ``scaled[p][n]`` holds Q^s_l(p+s+h, n) exactly."""

    s: int
    l: int
    size: int
    scaled: list
    _inverse: TriangularOperator = field(repr=False, default=None)

    @property
    def h(self) -> int:
        return self.l // 2

    def column_scales(self) -> np.ndarray:
        return np.array([_column_scale(n, self.l) for n in range(self.size)])

    def exact_array(self) -> list | None:
        """A_{pn} as Fractions when every column scale is an integer (e.g. l = 0)."""
        scales = [_exact_column_scale(n, self.l) for n in range(self.size)]
        if any(c is None for c in scales):
            return None
        return [[Fraction(v) * c for v, c in zip(row, scales)] for row in self.scaled]

    def exact_inverse(self) -> list | None:
        """B_{np} as Fractions when every column scale is an integer."""
        scales = [_exact_column_scale(n, self.l) for n in range(self.size)]
        if any(c is None for c in scales):
            return None
        return [[Fraction(v) / scales[n] for v in row] for n, row in enumerate(self.inverse_scaled())]

    def to_array(self) -> np.ndarray:
        """A_{pn} in floating point."""
        exact = self.exact_array()
        if exact is not None:
            return np.array([[float(v) for v in row] for row in exact])
        q = np.array([[float(v) for v in row] for row in self.scaled])
        return q * self.column_scales()[None, :]

    def inverse_scaled(self) -> list:
        """Exact (Q^{-1})_{np} on the window."""
        return self._inverse.window(self.size)

    def inverse_array(self) -> np.ndarray:
        """B = A^{-1} in floating point: B_{np} = (Q^{-1})_{np} / sqrt(n!(n+l)!)."""
        exact = self.exact_inverse()
        if exact is not None:
            return np.array([[float(v) for v in row] for row in exact])
        qi = np.array([[float(v) for v in row] for row in self.inverse_scaled()])
        return qi / self.column_scales()[:, None]


_cache: dict[tuple[int, int, int], CoefficientMatrix] = {}
_cache_lock = threading.Lock()


def build_coefficient_matrix(s: int, l: int, size: int) -> CoefficientMatrix:
    """A^{s,l} on the window p, n < size, with the triangular structure checked."""
    if size < 1:
        raise DomainError("size must be at least 1")
    if s < 0 or l < 0:
        raise DomainError("s and l must be non-negative")
    key = (s, l, size)
    with _cache_lock:
        if key in _cache:
            return _cache[key]
    h = l // 2
    scaled = [[h_coeff_scaled(s, l, p + s + h, n) for n in range(size)] for p in range(size)]
    for p in range(size):
        for n in range(size):
            if n < p and scaled[p][n] != 0:
                raise AssertionError(f"A^{{{s},{l}}} not upper triangular at ({p}, {n})")
            if n > p + 2 * s and scaled[p][n] != 0:
                raise AssertionError(f"A^{{{s},{l}}} exceeds band 2s at ({p}, {n})")
        if scaled[p][p] == 0:
            raise SingularSystemError(f"A^{{{s},{l}}} has a zero diagonal at p = {p}", row=p)
    op = TriangularOperator(lambda m, n: scaled[m][n] if n < size else 0, band=2 * s, name=f"Q^{s},{l}")
    cm = CoefficientMatrix(s, l, size, scaled, inverse(op))
    with _cache_lock:
        return _cache.setdefault(key, cm)


@dataclass
class MomentVector:
    """Derivatives F_l^{(t)}(0) for t = s+h .. s+h+len-1, indexed by p = t-s-h."""

    s: int
    l: int
    entries: np.ndarray
    cov: np.ndarray | None = None
    residual: float = 0.0

    def __post_init__(self):
        self.entries = np.asarray(self.entries, complex)
        if not np.all(np.isfinite(self.entries)):
            raise DomainError("moments must be finite")
        if self.cov is not None and self.cov.shape != (self.entries.size,) * 2:
            raise DomainError("moment covariance has the wrong shape")

    @property
    def h(self) -> int:
        return self.l // 2

    @property
    def parity(self) -> str:
        return "odd" if self.l % 2 else "even"

    def __len__(self):
        return self.entries.size


def moments_from_profile(profile: RadialProfile, dim: int, r_max: float | None = None,
                         degree: int | None = None) -> MomentVector:
    """Fit F_l as a polynomial and return its derivatives t!·c_t at the needed orders.

    ``degree`` overrides the fitted degree (never below the exact model degree).
    """
    s, l = profile.s, profile.l
    count = dim - l
    if count < 1:
        raise DomainError(f"band l={l} is empty for dim={dim}")
    auto = moment_degree(s, l, dim)
    if degree is None:
        degree = auto
    elif degree < auto:
        raise EstimationError(f"polynomial degree {degree} is below the model degree {auto}")
    if profile.kind == "analytic" and r_max is None:
        r_max = ANALYTIC_FIT_RMAX
    fit = fit_profile(profile, l % 2, degree, r_max)
    t0 = s + l // 2
    ts = np.arange(t0, t0 + count)
    facts = np.array([float(math.factorial(int(t))) for t in ts])
    entries = facts * fit.coeffs[ts]
    cov = None if fit.cov is None else fit.cov[np.ix_(ts, ts)] * np.outer(facts, facts)
    return MomentVector(s, l, entries, cov, fit.residual)


def analytic_profiles(rho, s: int, radii=None) -> dict:
    """Exact profiles {l: G^{|s>}_{rho,l}} for l = 0..dim-1."""
    a = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, complex)
    dim = a.shape[0]
    rr = default_radii(dim, s, ANALYTIC_FIT_RMAX) if radii is None else np.asarray(radii, float)
    return {l: fourier_component(s, a, l, rr) for l in range(dim)}


def reconstruct_band(s: int, l: int, m: MomentVector, band_len: int, *, with_variance: bool = False):
    """rho_{n+l,n} = sum_{p >= n} B^{s,l}_{np} m_p for n < band_len."""
    if band_len < 1:
        raise DomainError("band_len must be positive")
    if len(m) < band_len:
        raise DomainError(f"need {band_len} moments, got {len(m)}")
    if (m.s, m.l) != (s, l):
        raise DomainError(f"moments are for (s={m.s}, l={m.l}), not (s={s}, l={l})")
    b = build_coefficient_matrix(s, l, band_len).inverse_array()
    mp = m.entries[:band_len]
    band = b @ mp
    if not with_variance:
        return band
    var = np.zeros(band_len) if m.cov is None else np.einsum("ij,jk,ik->i", b, m.cov[:band_len, :band_len], b)
    return band, var


def reconstruct_band_exact(s: int, l: int, moments) -> list:
    """Rational band from rational moments: returns c_n with
    rho_{n+l,n} = c_n / sqrt(n!(n+l)!), i.e. c_n = (Q^{-1} m)_n.  For l = 0 divide by n!."""
    size = len(moments)
    qi = build_coefficient_matrix(s, l, size).inverse_scaled()
    m = [Fraction(v) for v in moments]
    return [sum((qi[n][p] * m[p] for p in range(n, size)), Fraction(0)) for n in range(size)]


def _profiles_by_l(profiles, s: int) -> dict:
    if isinstance(profiles, Tomogram):
        return {l: p for (ss, l), p in profiles.profiles.items() if ss == s}
    if isinstance(profiles, dict):
        return dict(profiles)
    return {p.l: p for p in profiles}


def reconstruct(s: int, profiles, dim: int, r_max: float | None = None, degree: int | None = None):
    """Full dim x dim reconstruction from the profiles of one observable."""
    by_l = _profiles_by_l(profiles, s)
    missing = [(s, l) for l in range(dim) if l not in by_l]
    if missing:
        raise CoverageError(f"single-observable data lacks profiles {missing}", missing)
    rho = np.zeros((dim, dim), complex)
    var = np.zeros((dim, dim))
    residuals = {}
    for l in range(dim):
        prof = by_l[l]
        if prof.s != s:
            raise DomainError(f"profile for l={l} belongs to s={prof.s}, expected s={s}")
        m = moments_from_profile(prof, dim, r_max, degree)
        band, v = reconstruct_band(s, l, m, dim - l, with_variance=True)
        idx = np.arange(dim - l)
        rho[idx + l, idx] = band
        var[idx + l, idx] = v
        if l:
            rho[idx, idx + l] = band.conj()
            var[idx, idx + l] = v
        residuals[l] = m.residual
    stderr = np.sqrt(var) if np.any(var > 0) else None
    report = ReconstructionReport("single", dim, s, validate(rho), residuals, stderr)
    if not report.validation.passed:
        report.warnings.extend(report.validation.messages)
    return DensityMatrix(rho), report
