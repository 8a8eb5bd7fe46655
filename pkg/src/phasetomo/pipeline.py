"""Estimation of radial profiles from samples and end-to-end workflows."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import recon_single, recon_tomogram
from .errors import DomainError, EstimationError
from .forward import RadialProfile, SampleSet, sample
from .recon_single import analytic_profiles
from .recon_tomogram import Tomogram, analytic_tomogram
from .states import DensityMatrix, random_density_matrix

__all__ = [
    "EstimationConfig",
    "RunReport",
    "estimate_profile",
    "estimate_tomogram",
    "derived_seed",
    "simulate_samples",
    "reconstruct_tomogram",
    "ERROR_BOUND_SIGMAS",
    "roundtrip",
    "build_report",
    "profile_mass",
]

ERROR_BOUND_SIGMAS = 3.0
ANALYTIC_GATE = 1e-9
STAT_GATE_SIGMAS = 5.0


@dataclass(frozen=True)
class EstimationConfig:
    """Binning and fitting settings for sampled data.

    ``r_fit_max`` None uses the sampling disk radius; ``poly_degree`` None picks
    the exact model degree for every fit.
    """

    radial_bins: int = 32
    r_fit_max: float | None = None
    poly_degree: int | None = None
    min_count_per_bin: int = 10

    def __post_init__(self):
        if self.radial_bins < 4:
            raise DomainError("radial_bins must be at least 4")
        if self.r_fit_max is not None and not self.r_fit_max > 0:
            raise DomainError("r_fit_max must be positive")
        if self.poly_degree is not None and self.poly_degree < 0:
            raise DomainError("poly_degree must be non-negative")
        if self.min_count_per_bin < 1:
            raise DomainError("min_count_per_bin must be positive")


def estimate_profile(samples: SampleSet, l: int, cfg: EstimationConfig = EstimationConfig(),
                     notes: list | None = None) -> RadialProfile:
    """Binned estimate of G^{|s>}_{rho,l} averaged over each radial bin.

    With x = r^2 the measure is dx dtheta / (2 pi), so the mean of e^{il theta}
    1[r in bin] over all samples, divided by the bin width in x, is unbiased for
    the bin average of G_l in x.  Samples come from the disk r <= r_max; the
    estimate is rescaled by the disk mass 1 - truncated_mass.  Bins with fewer
    than ``min_count_per_bin`` samples get zero stderr, which excludes them from
    the fits, and are listed in ``notes``.
    """
    if l < 0:
        raise DomainError("l must be non-negative")
    total = samples.count
    if total < cfg.radial_bins * cfg.min_count_per_bin:
        raise EstimationError(
            f"{total} samples are too few for {cfg.radial_bins} bins x {cfg.min_count_per_bin} per bin"
        )
    r_hi = samples.r_max if cfg.r_fit_max is None else min(cfg.r_fit_max, samples.r_max)
    edges = np.linspace(0.0, r_hi, cfg.radial_bins + 1)
    dx = np.diff(edges**2)
    idx = np.searchsorted(edges, samples.r, side="right") - 1
    inside = (idx >= 0) & (idx < cfg.radial_bins)
    idx = idx[inside]
    phase = l * samples.theta[inside]
    cos, sin = np.cos(phase), np.sin(phase)
    nb = cfg.radial_bins
    counts = np.bincount(idx, minlength=nb).astype(float)
    sum_c = np.bincount(idx, weights=cos, minlength=nb)
    sum_s = np.bincount(idx, weights=sin, minlength=nb)
    sum_c2 = np.bincount(idx, weights=cos * cos, minlength=nb)
    mean = (sum_c + 1j * sum_s) / total
    if l == 0:
        var = sum_c2 / total - mean.real**2
    else:
        # total complex variance bounds the variance of either component
        var = counts / total - np.abs(mean) ** 2
    scale = 1.0 - samples.truncated_mass
    values = scale * mean / dx
    stderr = scale * np.sqrt(np.maximum(var, 0.0) / total) / dx
    low = counts < cfg.min_count_per_bin
    if np.any(low):
        stderr = np.where(low, 0.0, stderr)
        if notes is not None and l == 0:
            notes.append(f"s={samples.s}: {int(low.sum())} bins below {cfg.min_count_per_bin} samples excluded")
    centers = 0.5 * (edges[1:] + edges[:-1])
    return RadialProfile(samples.s, l, "sampled", centers, values, stderr, edges)


def estimate_tomogram(sample_sets, dim: int, cfg: EstimationConfig = EstimationConfig(),
                      notes: list | None = None) -> Tomogram:
    """Profiles (s, l), l = 0..dim-1, for every supplied sample set."""
    profiles = {}
    for ss in sample_sets:
        if (ss.s, 0) in profiles:
            raise DomainError(f"two sample sets for s={ss.s}")
        for l in range(dim):
            profiles[(ss.s, l)] = estimate_profile(ss, l, cfg, notes)
    return Tomogram(profiles, dim)


def derived_seed(seed: int, s: int) -> int:
    """Independent seed for the shard belonging to observable s."""
    return int(np.random.SeedSequence([seed, s]).generate_state(1)[0])


def simulate_samples(rho, s_values, count: int, seed: int, r_max: float | None = None) -> list[SampleSet]:
    return [sample(s, rho, count, derived_seed(seed, s), r_max) for s in s_values]


@dataclass
class RunReport:
    """Serializable summary of one reconstruction run."""

    command: str
    method: str
    dim: int
    s: int | None = None
    input_hashes: dict = field(default_factory=dict)
    band_residuals: dict = field(default_factory=dict)
    validation: dict = field(default_factory=dict)
    truncated_mass: dict = field(default_factory=dict)
    error_bounds: list | None = None
    max_error: float | None = None
    gate: dict | None = None
    timing: dict | None = None
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["band_residuals"] = {str(k): v for k, v in self.band_residuals.items()}
        d["truncated_mass"] = {str(k): v for k, v in self.truncated_mass.items()}
        return d


def reconstruct_tomogram(t: Tomogram, method: str, s: int | None = None, r_max: float | None = None,
                         degree: int | None = None):
    """Dispatch to Method 1 (``tomogram``) or Method 2 (``single``)."""
    if method == "tomogram":
        return recon_tomogram.reconstruct(t, r_max, degree)
    if method == "single":
        if s is None:
            ss = t.s_values
            if len(ss) != 1:
                raise DomainError(f"method 'single' needs --s; tomogram holds s = {ss}")
            s = ss[0]
        t.check_coverage("single", s)
        return recon_single.reconstruct(s, t, t.dim_hint, r_max, degree)
    raise DomainError(f"unknown method {method!r}")


def build_report(rec, command: str, timing: dict | None) -> RunReport:
    report = RunReport(command, rec.method, rec.dim, rec.s)
    report.band_residuals = dict(rec.band_residuals)
    report.validation = rec.validation.to_dict()
    report.warnings = list(rec.warnings)
    if rec.stderr is not None:
        report.error_bounds = (ERROR_BOUND_SIGMAS * rec.stderr).tolist()
    report.timing = timing
    return report


def roundtrip(dim: int, seed: int, method: str = "tomogram", s: int | None = None,
              count: int | None = None, cfg: EstimationConfig = EstimationConfig(),
              r_max: float | None = None, timing: bool = False):
    """Random state -> simulated data -> reconstruction, with a pass/fail gate.

    ``count`` None uses analytic profiles and gates the maximum elementwise
    error at 1e-9.  Otherwise each observable gets ``count`` samples and the
    gate requires every diagonal error to be within 5 propagated standard errors.
    Returns (truth, estimate, RunReport).
    """
    t0 = time.perf_counter()
    truth = random_density_matrix(dim, seed=seed)
    if method == "single" and s is None:
        s = 0
    s_values = [s] if method == "single" else list(range(dim))
    notes: list[str] = []
    trunc = {}
    if count is None:
        if method == "single":
            t = Tomogram({(s, l): p for l, p in analytic_profiles(truth, s).items()}, dim)
        else:
            t = analytic_tomogram(truth)
    else:
        sets = simulate_samples(truth, s_values, count, seed, r_max)
        for ss in sets:
            trunc[ss.s] = ss.truncated_mass
            notes.extend(ss.warnings)
        t = estimate_tomogram(sets, dim, cfg, notes)
    t1 = time.perf_counter()
    est, rec = reconstruct_tomogram(t, method, s, None, cfg.poly_degree if count is not None else None)
    t2 = time.perf_counter()
    report = build_report(rec, "roundtrip", {"simulate": t1 - t0, "reconstruct": t2 - t1} if timing else None)
    report.truncated_mass = trunc
    report.warnings = notes + report.warnings
    err = np.abs(est.entries - truth.entries)
    report.max_error = float(err.max())
    if count is None:
        report.gate = {"kind": "analytic", "tolerance": ANALYTIC_GATE, "passed": bool(err.max() <= ANALYTIC_GATE)}
    else:
        se = rec.stderr if rec.stderr is not None else np.zeros_like(err)
        diag_ok = np.diagonal(err) <= STAT_GATE_SIGMAS * np.diagonal(se)
        report.gate = {
            "kind": "statistical",
            "sigmas": STAT_GATE_SIGMAS,
            "diagonal_error": np.diagonal(err).tolist(),
            "diagonal_stderr": np.diagonal(se).tolist(),
            "passed": bool(np.all(diag_ok)),
        }
    return truth, est, report


def profile_mass(p: RadialProfile) -> float:
    """Integral of a binned l = 0 profile against dx (total probability seen)."""
    if p.edges is None:
        raise DomainError("profile has no bin edges")
    return float(np.sum(p.values.real * np.diff(p.edges**2)))
