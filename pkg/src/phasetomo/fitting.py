"""Polynomial models for radial profiles.

For a finite N x N state every Fourier component has the form

    G_l(r) = e^{-x} r^q Q(x),   x = r^2,

with Q a polynomial and q >= 0 the power of r stripped off (q = l for the
small-r limits, q = l mod 2 for the derivative moments).  Analytic profiles are
fitted by least squares in a Chebyshev basis; sampled profiles by weighted
least squares against the exact bin-averaged model when bin edges are known.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from scipy.special import gamma, gammainc, gammaincc

from .errors import EstimationError, IllConditionedFitError
from .forward import RadialProfile

__all__ = ["PolyFit", "fit_profile", "ANALYTIC_RESIDUAL_TOL", "SAMPLED_RESIDUAL_FACTOR"]

ANALYTIC_RESIDUAL_TOL = 1e-8
SAMPLED_RESIDUAL_FACTOR = 10.0


@dataclass
class PolyFit:
    """Monomial coefficients of Q (complex) and their covariance.

    ``cov`` applies to the real and to the imaginary parts separately; it is None
    for analytic profiles.  ``residual`` is the relative RMS misfit (analytic) or
    the RMS of normalised residuals (sampled).
    """

    coeffs: np.ndarray
    cov: np.ndarray | None
    residual: float
    power: int
    npoints: int

    def derivative(self, t: int) -> complex:
        """t-th derivative of Q at x = 0."""
        return complex(math.factorial(t) * self.coeffs[t]) if t < self.coeffs.size else 0j


def _fit_analytic(profile: RadialProfile, power: int, degree: int, r_max: float | None) -> PolyFit:
    r = profile.radii
    keep = r > 0
    if r_max is not None:
        keep &= r <= r_max
    r = r[keep]
    if r.size < degree + 1:
        raise EstimationError(
            f"profile (s={profile.s}, l={profile.l}) has {r.size} usable radii, need {degree + 1}"
        )
    x = r * r
    y = profile.values[keep] * np.exp(x) / r**power
    dom = [0.0, float(x.max())]
    coeffs = np.zeros(degree + 1, complex)
    fitted = np.zeros_like(y)
    for part, unit in ((y.real, 1.0), (y.imag, 1j)):
        if not np.any(part):
            continue
        cheb = Chebyshev.fit(x, part, degree, domain=dom)
        mono = cheb.convert(kind=Polynomial, domain=[-1, 1], window=[-1, 1]).coef
        coeffs[: mono.size] += unit * mono
        fitted = fitted + unit * cheb(x)
    scale = max(float(np.max(np.abs(y))), 1e-300)
    residual = float(np.sqrt(np.mean(np.abs(y - fitted) ** 2)) / scale)
    if residual > ANALYTIC_RESIDUAL_TOL:
        raise IllConditionedFitError(
            f"analytic profile (s={profile.s}, l={profile.l}) is not a degree-{degree} "
            f"polynomial model (relative residual {residual:.2e}); is dim_hint too small?"
        )
    return PolyFit(coeffs, None, residual, power, int(r.size))


def _bin_design(edges: np.ndarray, power: int, degree: int) -> np.ndarray:
    """(1/dx) * integral over each bin of e^{-x} x^{j + power/2} dx, j = 0..degree."""
    x = edges**2
    dx = np.diff(x)
    cols = []
    for j in range(degree + 1):
        a = j + 0.5 * power + 1.0
        # difference the regularised gamma on the side where it is small
        lower = np.diff(gammainc(a, x))
        upper = -np.diff(gammaincc(a, x))
        cols.append(gamma(a) * np.where(x[:-1] > a, upper, lower) / dx)
    return np.stack(cols, axis=1)


def _fit_sampled(profile: RadialProfile, power: int, degree: int, r_max: float | None) -> PolyFit:
    se = profile.stderr
    ok = se > 0
    if profile.edges is not None:
        hi = profile.edges[1:]
        if r_max is not None:
            ok &= hi <= r_max * (1 + 1e-12)
    else:
        hi = profile.radii
        if r_max is not None:
            ok &= hi <= r_max
    idx = np.flatnonzero(ok)
    if idx.size < degree + 2:
        raise EstimationError(
            f"sampled profile (s={profile.s}, l={profile.l}) has {idx.size} usable bins, "
            f"need at least {degree + 2}"
        )
    if profile.edges is not None:
        design = _bin_design(profile.edges, power, degree)[idx]
    else:
        x = profile.radii[idx] ** 2
        design = np.exp(-x)[:, None] * (profile.radii[idx] ** power)[:, None] * x[:, None] ** np.arange(degree + 1)
    w = 1.0 / se[idx]
    xw = design * w[:, None]
    norms = np.linalg.norm(xw, axis=0)
    norms[norms == 0] = 1.0
    xs = xw / norms
    y = profile.values[idx]
    q, rmat = np.linalg.qr(xs)
    rinv = np.linalg.inv(rmat)
    sol = lambda v: rinv @ (q.T @ (v * w))  # noqa: E731
    coeffs_scaled = sol(y.real) + 1j * sol(y.imag)
    coeffs = coeffs_scaled / norms
    cov = (rinv @ rinv.T) / np.outer(norms, norms)
    res = (y - design @ coeffs) * w
    n_par = degree + 1
    if profile.l == 0:
        chi2, dof = float(np.sum(res.real**2)), idx.size - n_par
    else:
        chi2, dof = float(np.sum(res.real**2 + res.imag**2)), 2 * (idx.size - n_par)
    rms = float(np.sqrt(chi2 / max(dof, 1)))
    if rms > SAMPLED_RESIDUAL_FACTOR:
        raise IllConditionedFitError(
            f"sampled profile (s={profile.s}, l={profile.l}): residuals {rms:.1f}x the "
            "propagated noise; model degree or binning inadequate"
        )
    return PolyFit(coeffs, cov, rms, power, int(idx.size))


def fit_profile(profile: RadialProfile, power: int, degree: int, r_max: float | None = None) -> PolyFit:
    """Fit G(r) = e^{-x} r^power Q(x) with deg Q = degree; see module docstring."""
    if degree < 0:
        raise EstimationError("negative polynomial degree")
    if profile.kind == "analytic":
        return _fit_analytic(profile, power, degree, r_max)
    return _fit_sampled(profile, power, degree, r_max)
