"""Reconstruction from the whole tomogram {G^{|s>}_rho : s = 0, 1, ...}.

Diagonal entries are the values of the l = 0 components at the origin.  For the
l-th lower diagonal (l >= 1) the small-r limits

    d^l_s = lim_{r -> 0} e^{r^2} r^{-l} G^{|s>}_{rho,l}(r),   s >= l,

are related to rho_{n+l,n} by the binomial Toeplitz matrix a^l_u = (-1)^u C(l, u),
whose formal inverse has b^l_u = C(u+l-1, l-1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CoverageError, DomainError, EstimationError
from .fitting import PolyFit, fit_profile
from .forward import RadialProfile, fourier_component
from .special_fn import binomial, sqrt_factorial_ratio
from .states import DensityMatrix, ValidationReport, validate
from .triinv import ToeplitzBand, toeplitz_inverse_sequence

__all__ = [
    "Tomogram",
    "DVector",
    "ConditionReport",
    "ReconstructionReport",
    "default_radii",
    "analytic_tomogram",
    "t_limit_coeff",
    "limit_band",
    "binomial_band",
    "diagonal_from_origin",
    "extract_d",
    "reconstruct_offdiagonal",
    "condition_check",
    "reconstruct",
]

# radius cut for the small-r limit fits
LIMIT_FIT_RMAX = 1.0


@dataclass
class Tomogram:
    """Radial profiles keyed by (s, l) plus the assumed matrix size."""

    profiles: dict
    dim_hint: int

    def __post_init__(self):
        if self.dim_hint < 1:
            raise DomainError("dim_hint must be positive")
        for key, prof in self.profiles.items():
            if key != (prof.s, prof.l):
                raise DomainError(f"profile stored under {key} has indices ({prof.s}, {prof.l})")

    def get(self, s: int, l: int) -> RadialProfile:
        try:
            return self.profiles[(s, l)]
        except KeyError:
            raise CoverageError(f"tomogram has no profile for (s={s}, l={l})", [(s, l)]) from None

    def required(self, method: str = "tomogram", s: int | None = None) -> list[tuple[int, int]]:
        n = self.dim_hint
        if method == "single":
            return [(s, l) for l in range(n)]
        need = [(k, 0) for k in range(n)]
        need += [(k, l) for l in range(1, n) for k in range(l, n)]
        return need

    def check_coverage(self, method: str = "tomogram", s: int | None = None):
        missing = [key for key in self.required(method, s) if key not in self.profiles]
        if missing:
            raise CoverageError(f"tomogram lacks profiles {missing}", missing)

    @property
    def s_values(self) -> list[int]:
        return sorted({k[0] for k in self.profiles})


def default_radii(dim: int, s: int = 0, rmax: float = LIMIT_FIT_RMAX) -> np.ndarray:
    """Chebyshev nodes in x = r^2 on (0, rmax^2), at least 4 (dim + s) of them."""
    count = max(32, 4 * (dim + s))
    k = np.arange(count)
    x = 0.5 * rmax**2 * (1 - np.cos((2 * k + 1) * np.pi / (2 * count)))
    return np.sqrt(x)


def analytic_tomogram(rho, s_values=None, radii=None) -> Tomogram:
    """Exact profiles (s, l) for every s in ``s_values`` and l = 0..dim-1."""
    a = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, complex)
    dim = a.shape[0]
    s_values = range(dim) if s_values is None else s_values
    profiles = {}
    for s in s_values:
        rr = default_radii(dim, s) if radii is None else np.asarray(radii, float)
        for l in range(dim):
            profiles[(s, l)] = fourier_component(s, a, l, rr)
    return Tomogram(profiles, dim)


def t_limit_coeff(l: int, s: int, n: int) -> float:
    """T^l_{sn} = lim_{r->0} e^{r^2} r^{-l} f^s_{n,n+l}(r), l >= 1.

    The formula holds for every s >= 0; the reconstruction only uses s >= l.
    """
    if l < 1 or s < 0:
        raise DomainError("need l >= 1 and s >= 0")
    if n < s - l or n > s:
        return 0.0
    return (-1) ** (s - n) * sqrt_factorial_ratio(n + l, n) / (math.factorial(s - n) * math.factorial(n + l - s))


def binomial_band(l: int) -> ToeplitzBand:
    """Toeplitz band a^l_u = (-1)^u C(l, u)."""
    return ToeplitzBand(tuple((-1) ** u * binomial(l, u) for u in range(l + 1)))


@dataclass
class DVector:
    """Small-r limits d^l_s for s = l..l+len(entries)-1."""

    l: int
    entries: np.ndarray
    provenance: str = "analytic"
    variance: np.ndarray | None = None

    def __post_init__(self):
        if self.l < 1:
            raise DomainError("d-vectors exist for l >= 1")
        self.entries = np.asarray(self.entries, complex)
        if self.entries.size < 1 or not np.all(np.isfinite(self.entries)):
            raise DomainError("d-vector entries must be finite and non-empty")

    @property
    def s_max(self) -> int:
        return self.l + self.entries.size - 1

    def __getitem__(self, s: int) -> complex:
        return self.entries[s - self.l]


def limit_band(rho, l: int, s_max: int | None = None) -> DVector:
    """d^l_s = sum_n T^l_{sn} rho_{n+l,n} computed directly from a known state."""
    a = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, complex)
    dim = a.shape[0]
    s_max = dim - 1 if s_max is None else s_max
    out = []
    for s in range(l, s_max + 1):
        acc = 0j
        for n in range(max(0, s - l), min(s, dim - 1 - l) + 1):
            acc += t_limit_coeff(l, s, n) * a[n + l, n]
        out.append(acc)
    return DVector(l, np.array(out))


def _degree(auto: int, degree: int | None) -> int:
    if degree is None:
        return auto
    if degree < auto:
        raise EstimationError(f"polynomial degree {degree} is below the model degree {auto}")
    return degree


def _origin_value(profile: RadialProfile, dim: int, r_max: float | None,
                  degree: int | None = None) -> tuple[float, float, float]:
    """(value, variance, residual) of G_{rho,0}(0) from a profile."""
    if profile.kind == "analytic" and profile.radii[0] == 0:
        return float(profile.values[0].real), 0.0, 0.0
    fit = fit_profile(profile, 0, _degree(dim - 1 + profile.s, degree), r_max)
    var = 0.0 if fit.cov is None else float(fit.cov[0, 0])
    return float(fit.coeffs[0].real), var, fit.residual


def diagonal_from_origin(t: Tomogram, r_max: float | None = None) -> np.ndarray:
    """rho_ss = G^{|s>}_{rho,0}(0), s = 0..dim_hint-1."""
    return np.array([_origin_value(t.get(s, 0), t.dim_hint, r_max)[0] for s in range(t.dim_hint)])


def _extract_d_fit(t: Tomogram, l: int, s: int, r_max: float | None, degree: int | None = None) -> PolyFit:
    prof = t.get(s, l)
    if prof.kind == "analytic" and r_max is None:
        r_max = LIMIT_FIT_RMAX
    return fit_profile(prof, l, _degree(t.dim_hint - 1 + s - l, degree), r_max)


def extract_d(t: Tomogram, l: int, s: int, r_max: float | None = None) -> complex:
    """d^l_s read off as the constant term of the polynomial e^{x} r^{-l} G^{|s>}_{rho,l}."""
    if l < 1 or s < l:
        raise DomainError("need s >= l >= 1")
    return complex(_extract_d_fit(t, l, s, r_max).coeffs[0])


def _offdiag_weights(l: int, n: int, s_max: int) -> np.ndarray:
    """Coefficients w_s (s = l..s_max) with rho_{n+l,n} = sum_s w_s d^l_s."""
    b = toeplitz_inverse_sequence(binomial_band(l), max(0, s_max))
    pref = (-1) ** l * math.factorial(l) * sqrt_factorial_ratio(n, n + l)
    w = np.zeros(s_max - l + 1)
    for s in range(n + l, s_max + 1):
        # b^l_{s-n-l} = C(s-n-1, l-1)
        w[s - l] = pref * float(b[s - n - l])
    return w


def reconstruct_offdiagonal(l: int, d: DVector) -> np.ndarray:
    """rho_{n+l,n} = (-1)^l l! sqrt(n!/(n+l)!) sum_{s >= n+l} C(s-n-1, l-1) d^l_s.

    Returns the band for n = 0..s_max-l.  The sum is finite because d^l_s
    vanishes for s >= N on N-dimensional states.
    """
    if d.l != l:
        raise DomainError(f"d-vector is for l={d.l}, not l={l}")
    s_max = d.s_max
    return np.array([_offdiag_weights(l, n, s_max) @ d.entries for n in range(s_max - l + 1)])


@dataclass
class ConditionReport:
    l: int
    passed: bool
    slope: float | None
    last_weighted: float
    note: str

    def to_dict(self) -> dict:
        return {"l": self.l, "passed": self.passed, "slope": self.slope,
                "last_weighted": self.last_weighted, "note": self.note}


def condition_check(band_tail, l: int, start: int | None = None, slope_tol: float = -0.05) -> ConditionReport:
    """Test whether m^{3l/2 - 1} rho_{m,m-l} -> 0 along the supplied tail.

    ``band_tail[i]`` is rho_{m,m-l} with m = start + i (default start = l).  A tail
    that is eventually zero passes.  Otherwise the decay is judged from the
    log-log slope of the weighted sequence over the second half of the tail: a
    slope below ``slope_tol`` passes.  The condition is sufficient, not necessary,
    so a failure only means the reconstruction is not certified.
    """
    vals = np.abs(np.asarray(band_tail, complex))
    start = l if start is None else start
    m = np.arange(start, start + vals.size, dtype=float)
    if vals.size == 0 or not np.any(vals):
        return ConditionReport(l, True, None, 0.0, "tail is zero (finite matrix)")
    nz = np.flatnonzero(vals)
    if nz[-1] < vals.size - 1 and vals.size - 1 - nz[-1] >= 1 and np.all(vals[nz[-1] + 1:] == 0):
        return ConditionReport(l, True, None, 0.0, "tail vanishes beyond m = %d" % int(m[nz[-1]]))
    weighted = m ** (1.5 * l - 1) * vals
    half = slice(vals.size // 2, None)
    mm, ww = m[half], weighted[half]
    good = (ww > 0) & (mm > 0)
    if good.sum() < 2:
        return ConditionReport(l, False, None, float(weighted[-1]), "tail too short to judge")
    slope = float(np.polyfit(np.log(mm[good]), np.log(ww[good]), 1)[0])
    passed = slope < slope_tol
    note = "weighted tail decays" if passed else "weighted tail does not decay"
    return ConditionReport(l, passed, slope, float(weighted[-1]), note)


@dataclass
class ReconstructionReport:
    method: str
    dim: int
    s: int | None
    validation: ValidationReport
    band_residuals: dict = field(default_factory=dict)
    stderr: np.ndarray | None = None
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "dim": self.dim,
            "s": self.s,
            "validation": self.validation.to_dict(),
            "band_residuals": {str(k): v for k, v in self.band_residuals.items()},
            "warnings": list(self.warnings),
        }
        if self.stderr is not None:
            out["stderr"] = [[float(v) for v in row] for row in self.stderr]
        return out


def _complete(dim: int, bands: dict) -> np.ndarray:
    rho = np.zeros((dim, dim), complex)
    for l, band in bands.items():
        for n, v in enumerate(band):
            rho[n + l, n] = v
            if l:
                rho[n, n + l] = np.conj(v)
    return rho


def reconstruct(t: Tomogram, r_max: float | None = None,
                degree: int | None = None) -> tuple[DensityMatrix, ReconstructionReport]:
    """Full reconstruction: diagonal from origin values, bands l >= 1 from small-r limits.

    ``degree`` overrides the polynomial degree of every fit; it must not be
    below the exact model degree.
    """
    t.check_coverage("tomogram")
    dim = t.dim_hint
    bands, residuals, variances = {}, {}, {}
    diag, dvar, dres = [], [], []
    for s in range(dim):
        v, var, res = _origin_value(t.get(s, 0), dim, r_max, degree)
        diag.append(v)
        dvar.append(var)
        dres.append(res)
    bands[0] = np.array(diag, complex)
    variances[0] = np.array(dvar)
    residuals[0] = float(max(dres))
    for l in range(1, dim):
        fits = [_extract_d_fit(t, l, s, r_max, degree) for s in range(l, dim)]
        dv = DVector(l, np.array([f.coeffs[0] for f in fits]),
                     "analytic" if all(f.cov is None for f in fits) else "fitted",
                     np.array([0.0 if f.cov is None else f.cov[0, 0] for f in fits]))
        bands[l] = reconstruct_offdiagonal(l, dv)
        w = np.array([_offdiag_weights(l, n, dim - 1) for n in range(dim - l)])
        variances[l] = (w**2) @ dv.variance
        residuals[l] = float(max(f.residual for f in fits))
    rho = _complete(dim, bands)
    stderr = None
    if any(np.any(v > 0) for v in variances.values()):
        stderr = np.sqrt(np.abs(_complete(dim, {l: v.astype(complex) for l, v in variances.items()})))
    report = ReconstructionReport("tomogram", dim, None, validate(rho), residuals, stderr)
    if not report.validation.passed:
        report.warnings.extend(report.validation.messages)
    return DensityMatrix(rho), report
