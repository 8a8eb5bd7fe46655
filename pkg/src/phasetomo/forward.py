"""Forward model: displaced photon number densities G^{|s>}_rho(r, theta), their
angular Fourier components, the lambda-parameterised (Cahill-Glauber) family and
Monte Carlo sampling of measurement outcomes.

All densities are with respect to the measure d^2z / pi = r dr dtheta / pi.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConsistencyError, DomainError
from .special_fn import (
    PhasePoint,
    _is_exact,
    displacement_real,
    laguerre,
    sqrt_factorial_ratio,
)
from .states import DensityMatrix

__all__ = [
    "RadialProfile",
    "SampleSet",
    "f_coeff",
    "displaced_amplitudes",
    "density",
    "fourier_component",
    "cahill_glauber_K",
    "cahill_glauber_K_sum",
    "w_lambda_density",
    "w_lambda_density_closed",
    "efficiency_to_lambda",
    "disk_mass",
    "sample",
    "default_r_max",
    "TRUNCATED_MASS_WARNING",
]

IMAG_TOL = 1e-8
TRUNCATED_MASS_WARNING = 0.01
ANGULAR_NODES = 256


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """G^{|s>}_{rho,l}(r) sampled on increasing radii.

    ``kind`` is "analytic" (exact forward-model values) or "sampled" (estimates,
    with ``stderr``).  Sampled profiles produced by binning also carry the bin
    ``edges`` in r; their values are bin averages against dx with x = r^2.
    """

    s: int
    l: int
    kind: str
    radii: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None
    edges: np.ndarray | None = None

    def __post_init__(self):
        radii = np.asarray(self.radii, float)
        values = np.asarray(self.values, complex)
        if self.kind not in ("analytic", "sampled"):
            raise DomainError(f"unknown profile kind {self.kind!r}")
        if self.s < 0 or self.l < 0:
            raise DomainError("profile indices must be non-negative")
        if radii.ndim != 1 or values.shape != radii.shape:
            raise DomainError("radii and values must be 1-D of equal length")
        if np.any(radii < 0) or np.any(np.diff(radii) <= 0):
            raise DomainError("radii must be non-negative and strictly increasing")
        if (self.stderr is None) != (self.kind == "analytic"):
            raise DomainError("stderr must be given exactly for sampled profiles")
        if self.l == 0 and self.kind == "analytic" and np.any(np.abs(values.imag) > 1e-10):
            raise DomainError("l = 0 profile must be real")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)
        if self.stderr is not None:
            se = np.asarray(self.stderr, float)
            if se.shape != radii.shape or np.any(se < 0):
                raise DomainError("stderr must be non-negative, one per radius")
            object.__setattr__(self, "stderr", se)
        if self.edges is not None:
            e = np.asarray(self.edges, float)
            if e.shape != (radii.size + 1,) or np.any(np.diff(e) <= 0):
                raise DomainError("edges must be increasing with one more entry than radii")
            object.__setattr__(self, "edges", e)

    def scaled(self, factor: float) -> "RadialProfile":
        se = None if self.stderr is None else abs(factor) * self.stderr
        return RadialProfile(self.s, self.l, self.kind, self.radii, factor * self.values, se, self.edges)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Simulated outcomes (r_i, theta_i) of the observable generated by |s><s|."""

    s: int
    r: np.ndarray
    theta: np.ndarray
    seed: int
    r_max: float
    truncated_mass: float
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        r = np.asarray(self.r, float)
        th = np.asarray(self.theta, float)
        if r.shape != th.shape or r.ndim != 1:
            raise DomainError("r and theta must be 1-D arrays of equal length")
        if np.any(r > self.r_max * (1 + 1e-12)):
            raise DomainError("sample outside the sampling disk")
        if not 0.0 <= self.truncated_mass < 1.0:
            raise DomainError("truncated_mass must lie in [0, 1)")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", th)

    @property
    def count(self) -> int:
        return int(self.r.size)

    @property
    def points(self) -> list[PhasePoint]:
        return [PhasePoint(a, b) for a, b in zip(self.r, self.theta)]

    def metadata(self) -> dict:
        return {
            "s": int(self.s),
            "count": self.count,
            "seed": int(self.seed),
            "r_max": float(self.r_max),
            "truncated_mass": float(self.truncated_mass),
        }


def f_coeff(s: int, n: int, m: int, r):
    """f^s_{nm}(r) = <n|D(r)|s><s|D(r)^*|m>, real and symmetric in (n, m)."""
    if min(s, n, m) < 0:
        raise DomainError("indices must be non-negative")
    return displacement_real(n, s, r) * displacement_real(m, s, r)


def displaced_amplitudes(s: int, dim: int, r) -> np.ndarray:
    """Array of shape (dim, *r.shape) with entries <n|D(r)|s>, n < dim."""
    r = np.asarray(r, float)
    return np.stack([np.asarray(displacement_real(n, s, r)) for n in range(dim)])


def _rho_array(rho) -> np.ndarray:
    return rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, complex)


def _fast_amplitudes(s: int, dim: int, r: np.ndarray) -> np.ndarray:
    """<n|D(r)|s> for n < dim by direct products; safe while r^dim and the
    Laguerre values stay far from overflow (dim, s <= 60, r <= 12)."""
    x = r * r
    g = np.exp(-0.5 * x)
    out = np.empty((dim, r.size))
    pw = {0: np.ones_like(r)}
    for n in range(dim):
        lo, d = min(n, s), abs(n - s)
        if d not in pw:
            pw[d] = r**d
        sign = -1.0 if (s > n and d % 2) else 1.0
        out[n] = (sign * sqrt_factorial_ratio(lo, lo + d)) * pw[d] * laguerre(d, lo, x) * g
    return out


def _density_arrays(s, a, r, th):
    """Real-arithmetic evaluation of G on flat arrays; skips zero entries of rho."""
    dim = a.shape[0]
    if dim <= 60 and s <= 60 and (r.size == 0 or r.max() <= 12.0):
        v = _fast_amplitudes(s, dim, r)
    else:
        v = displaced_amplitudes(s, dim, r)
    out = np.zeros(r.shape)
    for m in range(dim):
        if a[m, m].real != 0:
            out += a[m, m].real * v[m] * v[m]
    trig = {}
    for m in range(dim):
        for n in range(m + 1, dim):
            c = a[m, n]
            if c == 0:
                continue
            k = n - m
            if k not in trig:
                trig[k] = (np.cos(k * th), np.sin(k * th))
            cs, sn = trig[k]
            # rho_mn e^{ik th} + rho_nm e^{-ik th} = 2 Re(rho_mn e^{ik th}) for Hermitian rho
            out += 2.0 * (v[m] * v[n]) * (c.real * cs - c.imag * sn)
    return out


def _density_arrays_complex(s, a, r, th):
    v = displaced_amplitudes(s, a.shape[0], r)
    c = v * np.exp(1j * np.outer(np.arange(a.shape[0]), th))
    return np.einsum("mb,mn,nb->b", c.conj(), a, c, optimize=True)


def density(s: int, rho, z):
    """G^{|s>}_rho(r, theta) = sum_{m,n} rho_{mn} e^{i theta (n-m)} f^s_{nm}(r).

    ``z`` is a PhasePoint (returns float) or a pair of arrays (r, theta).
    """
    a = _rho_array(rho)
    if isinstance(z, PhasePoint):
        r, th = np.array([z.r]), np.array([z.theta])
    else:
        r, th = np.broadcast_arrays(np.asarray(z[0], float), np.asarray(z[1], float))
    shape = r.shape
    if np.max(np.abs(a - a.conj().T)) > 1e-12:
        g = _density_arrays_complex(s, a, r.ravel(), th.ravel())
        scale = max(1.0, float(np.max(np.abs(a))))
        if np.any(np.abs(g.imag) > IMAG_TOL * scale):
            raise ConsistencyError(
                f"density has imaginary part {np.max(np.abs(g.imag)):.3e}; is rho Hermitian?"
            )
        g = g.real
    else:
        g = _density_arrays(s, a, r.ravel(), th.ravel())
    out = g.reshape(shape)
    return float(out[0]) if isinstance(z, PhasePoint) else out


def fourier_component(s: int, rho, l: int, radii) -> RadialProfile:
    """Analytic G^{|s>}_{rho,l}(r) = sum_n rho_{n+l,n} f^s_{n,n+l}(r)."""
    a = _rho_array(rho)
    dim = a.shape[0]
    if not 0 <= l < dim:
        raise DomainError(f"Fourier index l={l} outside 0..{dim - 1}")
    radii = np.asarray(radii, float)
    vals = np.zeros(radii.shape, complex)
    for n in range(dim - l):
        vals += a[n + l, n] * f_coeff(s, n, n + l, radii)
    if l == 0:
        vals = vals.real.astype(complex)
    return RadialProfile(s, l, "analytic", radii, vals)


# -- lambda family -------------------------------------------------------------------


def _scaled_laguerre(lam, l: int, n: int, y):
    """lam^n L^l_n(y / lam) by the three-term recurrence multiplied through by lam^k.

    No division by lam occurs, so the value is stable for small |lam| and equals
    (-y)^n / n! at lam = 0.
    """
    prev, cur = 0, 1
    for k in range(n):
        prev, cur = cur, (((2 * k + 1 + l) * lam - y) * cur - (k + l) * lam * lam * prev) / (k + 1)
    return cur


def _cg_closed_poly(lam, n: int, l: int, x):
    """(1-lam)^{l+1} lam^n L^l_n((2-lam-1/lam) x) / (n+l)!; exact for rational input."""
    exact = _is_exact(lam) and _is_exact(x)
    if exact:
        lam, x = Fraction(lam), Fraction(x)
    # (2 - lam - 1/lam) x = y / lam with y = -(1-lam)^2 x
    lead = _scaled_laguerre(lam, l, n, -((1 - lam) ** 2) * x)
    fact = Fraction(1, math.factorial(n + l)) if exact else 1.0 / math.factorial(n + l)
    return (1 - lam) ** (l + 1) * lead * fact


def _cg_sum_poly(lam, n: int, l: int, x):
    """sum_u (1-lam)^{2u+l+1} lam^{n-u} x^u / ((n-u)! (l+u)! u!); exact for rational input."""
    exact = _is_exact(lam) and _is_exact(x)
    if exact:
        lam, x = Fraction(lam), Fraction(x)
    total = 0
    for u in range(n + 1):
        den = math.factorial(n - u) * math.factorial(l + u) * math.factorial(u)
        c = Fraction(1, den) if exact else 1.0 / den
        total = total + c * (1 - lam) ** (2 * u + l + 1) * lam ** (n - u) * x**u
    return total


def _cg_prefactor(lam, n, l, r):
    # sqrt(n!/(n+l)!) (n+l)! = sqrt(n! (n+l)!)
    return sqrt_factorial_ratio(n, n + l) * math.factorial(n + l) * r**l * np.exp(-(1 - lam) * r * r)


def cahill_glauber_K(lam, n: int, l: int, r):
    """K^lambda_{n,n+l}(r) by the closed Laguerre form.

    ``lam`` may be complex with |lam| < 1; the public contract is real lam in [0, 1).
    """
    if abs(lam) >= 1:
        raise DomainError("need |lambda| < 1")
    r = np.asarray(r, float)
    out = _cg_prefactor(lam, n, l, r) * _cg_closed_poly(lam, n, l, r * r)
    return out if np.ndim(out) else out[()]


def cahill_glauber_K_sum(lam, n: int, l: int, r):
    """K^lambda_{n,n+l}(r) by the finite sum over u (second displayed form)."""
    if abs(lam) >= 1:
        raise DomainError("need |lambda| < 1")
    r = np.asarray(r, float)
    out = _cg_prefactor(lam, n, l, r) * _cg_sum_poly(lam, n, l, r * r)
    return out if np.ndim(out) else out[()]


def _lambda_cutoff(lam: float, tail: float = 1e-12) -> int:
    if lam == 0:
        return 0
    # lam^{K+1} <= tail
    return max(0, math.ceil(math.log(tail) / math.log(abs(lam))) - 1)


def w_lambda_density(lam: float, rho, z):
    """W^lambda_rho(z) = (1-lam) sum_k lam^k G^{|k>}_rho(z), truncated so the tail is <= 1e-12."""
    if not 0 <= lam < 1:
        raise DomainError("lambda must lie in [0, 1)")
    kmax = _lambda_cutoff(lam)
    total = 0.0
    weight = 1.0
    for k in range(kmax + 1):
        total = total + weight * density(k, rho, z)
        weight *= lam
    return (1 - lam) * total


def w_lambda_density_closed(lam, rho, z):
    """W^lambda_rho(z) from the closed-form kernel K^lambda (no series in k).

    Accepts complex ``lam``; then the result is the analytic continuation.
    """
    a = _rho_array(rho)
    dim = a.shape[0]
    if isinstance(z, PhasePoint):
        r, th = np.array([z.r]), np.array([z.theta])
    else:
        r, th = np.broadcast_arrays(np.asarray(z[0], float), np.asarray(z[1], float))
        r, th = r.ravel(), th.ravel()
    total = np.zeros(r.shape, complex)
    for m in range(dim):
        for n in range(dim):
            if a[m, n] == 0:
                continue
            lo, l = min(m, n), abs(m - n)
            total += a[m, n] * np.exp(1j * th * (n - m)) * cahill_glauber_K(lam, lo, l, r)
    real_lam = not isinstance(lam, complex) and not np.iscomplexobj(lam)
    out = total.real if real_lam else total
    return out[0].item() if isinstance(z, PhasePoint) else out


def efficiency_to_lambda(eta: float) -> float:
    """Detector efficiency eta in (0, 1] to the smoothing parameter lambda = 1 - eta."""
    if not 0 < eta <= 1:
        raise DomainError(f"efficiency must lie in (0, 1], got {eta}")
    return 1.0 - eta


# -- quadrature and sampling -----------------------------------------------------------


def default_r_max(dim: int, s: int) -> float:
    return 4.0 + math.sqrt(dim) + math.sqrt(s)


def disk_mass(s: int, rho, r_max: float, radial_nodes: int = 160, angular_nodes: int = ANGULAR_NODES) -> float:
    """Probability of r <= r_max: Gauss-Legendre in x = r^2 times trapezoid in theta.

    With d^2z/pi = dx dtheta / (2 pi) the trapezoid rule reduces to an angular mean.
    """
    xg, wg = np.polynomial.legendre.leggauss(radial_nodes)
    xmax = r_max * r_max
    x = 0.5 * xmax * (xg + 1.0)
    w = 0.5 * xmax * wg
    th = np.arange(angular_nodes) * (2 * math.pi / angular_nodes)
    rr, tt = np.meshgrid(np.sqrt(x), th, indexing="ij")
    g = density(s, rho, (rr, tt))
    return float(np.sum(w * g.mean(axis=1)))


def sample(s: int, rho, count: int, seed: int, r_max: float | None = None, *, batch: int = 1 << 20) -> SampleSet:
    """Rejection sampling on the disk r <= r_max.

    Proposals are uniform in (r^2, theta), i.e. uniform for d^2z/pi on the disk,
    and are accepted with probability G^{|s>}_rho(z) <= ||rho||_1 <= 1.
    """
    a = _rho_array(rho)
    if count < 0:
        raise DomainError("count must be non-negative")
    if r_max is None:
        r_max = default_r_max(a.shape[0], s)
    if r_max <= 0:
        raise DomainError("r_max must be positive")
    mass = min(1.0, disk_mass(s, a, r_max))
    truncated = max(0.0, 1.0 - mass)
    notes = []
    if truncated > TRUNCATED_MASS_WARNING:
        notes.append(f"truncated mass {truncated:.3g} exceeds {TRUNCATED_MASS_WARNING}")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    rng = np.random.default_rng(seed)
    rs, ths = [], []
    have = 0
    xmax = r_max * r_max
    accept_rate = max(mass / xmax, 1e-6)
    while have < count:
        n = min(batch, int(1.2 * (count - have) / accept_rate) + 64)
        x = rng.uniform(0.0, xmax, n)
        th = rng.uniform(0.0, 2 * math.pi, n)
        u = rng.uniform(0.0, 1.0, n)
        r = np.sqrt(x)
        g = _density_arrays(s, a, r, th)
        keep = u < g
        rs.append(r[keep])
        ths.append(th[keep])
        have += int(keep.sum())
    r = np.concatenate(rs)[:count] if rs else np.zeros(0)
    th = np.concatenate(ths)[:count] if ths else np.zeros(0)
    return SampleSet(s, r, th, seed, float(r_max), truncated, tuple(notes))
