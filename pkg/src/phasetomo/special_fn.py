"""Combinatorial and special-function kernels.

Two scalar flavours are supported throughout: exact (``int`` / ``fractions.Fraction``)
and floating point (``float``, ``complex`` or numpy arrays of them).  Exact inputs
never round; float inputs go through numerically stable paths.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Integral

import numpy as np

from .errors import DomainError

__all__ = [
    "PhasePoint",
    "binomial",
    "laguerre",
    "laguerre_sum",
    "sqrt_factorial_ratio",
    "log_sqrt_factorial_ratio",
    "displacement_real",
    "displacement_element",
    "inv_factorial",
]

TWO_PI = 2.0 * math.pi
_DIRECT_FACTORIAL_LIMIT = 20


@dataclass(frozen=True)
class PhasePoint:
    """A point z = r e^{i theta} of the phase plane with r >= 0 and theta in [0, 2pi)."""

    r: float
    theta: float = 0.0

    def __post_init__(self):
        r, theta = float(self.r), float(self.theta)
        if not (math.isfinite(r) and math.isfinite(theta)):
            raise DomainError("phase point must be finite")
        if r < 0:
            # (-r, theta) is the same point as (r, theta + pi)
            r, theta = -r, theta + math.pi
        theta = math.fmod(theta, TWO_PI)
        if theta < 0:
            theta += TWO_PI
        if theta >= TWO_PI:
            theta = 0.0
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_complex(cls, z: complex) -> "PhasePoint":
        return cls(abs(z), cmath.phase(z))

    @property
    def z(self) -> complex:
        return cmath.rect(self.r, self.theta)

    def __neg__(self) -> "PhasePoint":
        return PhasePoint(self.r, self.theta + math.pi)


def _is_exact(x) -> bool:
    return isinstance(x, (Integral, Fraction)) and not isinstance(x, bool)


def binomial(n: int, k: int, *, generalized: bool = False) -> int:
    """Binomial coefficient C(n, k) as an exact integer.

    Zero outside 0 <= k <= n.  Negative ``n`` is rejected unless ``generalized``
    is set, in which case C(n, k) = (-1)^k C(k - n - 1, k).
    """
    n, k = int(n), int(k)
    if n < 0:
        if not generalized:
            raise DomainError(f"binomial: negative upper index n={n}")
        if k < 0:
            return 0
        return (-1) ** k * math.comb(k - n - 1, k)
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def inv_factorial(k: int) -> Fraction:
    """1/k! with the convention 1/k! = 0 for negative k."""
    if k < 0:
        return Fraction(0)
    return Fraction(1, math.factorial(k))


def laguerre_sum(alpha: int, s: int, x):
    """Associated Laguerre polynomial by its defining finite sum.

    Exact for rational ``x``.  Used as the reference route for the recurrence.
    """
    if alpha < 0 or s < 0:
        raise DomainError("laguerre: alpha and s must be non-negative")
    total = Fraction(0) if _is_exact(x) else 0.0
    for u in range(s + 1):
        coeff = Fraction((-1) ** u * math.comb(s + alpha, s - u), math.factorial(u))
        if _is_exact(x):
            total += coeff * Fraction(x) ** u
        else:
            total = total + float(coeff) * x**u
    return total


def laguerre(alpha: int, s: int, x):
    """L^alpha_s(x).

    Rational ``x`` goes through the exact defining sum.  Floats, complex values and
    arrays use the three-term recurrence in ``s``
    (k+1) L_{k+1} = (2k+1+alpha-x) L_k - (k+alpha) L_{k-1}.
    """
    alpha, s = int(alpha), int(s)
    if alpha < 0 or s < 0:
        raise DomainError("laguerre: alpha and s must be non-negative")
    if _is_exact(x):
        return laguerre_sum(alpha, s, x)
    x = np.asarray(x) if not np.isscalar(x) else x
    prev = np.ones_like(x, dtype=np.result_type(x, float)) if not np.isscalar(x) else 1.0
    if s == 0:
        return prev
    cur = 1.0 + alpha - x
    for k in range(1, s):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur


@lru_cache(maxsize=65536)
def log_sqrt_factorial_ratio(p: int, q: int) -> float:
    """log sqrt(p!/q!), accurate to a few ulp of the result."""
    if p < 0 or q < 0:
        raise DomainError("factorial ratio needs non-negative arguments")
    if p == q:
        return 0.0
    if p > q:
        # math.log on a big int is correctly rounded up to one ulp
        return 0.5 * math.log(math.factorial(p) // math.factorial(q))
    return -0.5 * math.log(math.factorial(q) // math.factorial(p))


@lru_cache(maxsize=65536)
def sqrt_factorial_ratio(p: int, q: int) -> float:
    """sqrt(p!/q!) as a float.

    Small arguments are evaluated directly; larger ones from the exact integer
    ratio, so the result is correctly rounded whenever it is representable.
    Raises ``OverflowError`` when the value exceeds the double range; use
    :func:`log_sqrt_factorial_ratio` there.
    """
    if p < 0 or q < 0:
        raise DomainError("factorial ratio needs non-negative arguments")
    if p <= _DIRECT_FACTORIAL_LIMIT and q <= _DIRECT_FACTORIAL_LIMIT:
        return math.sqrt(math.factorial(p) / math.factorial(q))
    if p == q:
        return 1.0
    lo, hi = (q, p) if p > q else (p, q)
    big = math.factorial(hi) // math.factorial(lo)
    # isqrt of the integer rescaled to ~128 bits keeps ~64 significant bits
    k = (128 - big.bit_length()) // 2
    if k >= 0:
        root = Fraction(math.isqrt(big << (2 * k)), 1 << k)
    else:
        root = Fraction(math.isqrt(big >> (-2 * k)) << -k)
    return float(root) if p > q else float(1 / root)


def displacement_real(m: int, n: int, r):
    """<m|D(r)|n> for real r >= 0 (theta = 0).  Accepts scalars or arrays.

    The factorial ratio, the power of r and the Gaussian are combined in log
    space before multiplying by the Laguerre factor, so large m, n do not
    overflow.
    """
    if m < 0 or n < 0:
        raise DomainError("Fock indices must be non-negative")
    lo, d = min(m, n), abs(m - n)
    sign = -1.0 if (n > m and (n - m) % 2) else 1.0
    r = np.asarray(r, dtype=float)
    x = r * r
    logmag = log_sqrt_factorial_ratio(lo, lo + d) - 0.5 * x
    if d:
        with np.errstate(divide="ignore"):
            logmag = logmag + d * np.log(r)
    lag = laguerre(d, lo, x)
    with np.errstate(divide="ignore"):
        out = sign * np.sign(lag) * np.exp(logmag + np.log(np.abs(lag)))
    return out if out.ndim else float(out)


def displacement_element(m: int, n: int, z) -> complex:
    """Fock-basis matrix element <m|D(z)|n>; ``z`` is a PhasePoint or a complex number."""
    if not isinstance(z, PhasePoint):
        z = PhasePoint.from_complex(complex(z))
    phase = cmath.exp(1j * z.theta * (m - n))
    return phase * displacement_real(m, n, z.r)
