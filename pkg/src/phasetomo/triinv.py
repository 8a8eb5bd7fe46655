"""Formal inverses of infinite upper-triangular matrices.

An operator is described by an element function (m, n) -> scalar that is only
ever queried on or above the diagonal.  Scalars may be exact (int, Fraction) or
floating point; the arithmetic never converts between the two.

Elements of an inverse are produced by back substitution on the finite window
[0, n] x [0, n], which by the finite cut-off argument equals the formal series
sum_k (I - UA)^k scaled by the diagonal.  :func:`inverse_series_element` evaluates
that series literally so the two routes can be compared exactly.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, DomainError, SingularSystemError

__all__ = [
    "TriangularOperator",
    "ToeplitzBand",
    "inverse",
    "inverse_unit_diagonal",
    "inverse_series_element",
    "toeplitz_inverse_sequence",
    "apply_toeplitz",
    "recover_sequence",
    "remainder_term",
    "window_product",
    "FLOAT_SINGULAR_TOL",
]

FLOAT_SINGULAR_TOL = 1e-14


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def _is_zero_diag(x) -> bool:
    if _is_exact(x):
        return x == 0
    return abs(x) <= FLOAT_SINGULAR_TOL


class TriangularOperator:
    """Lazily evaluated infinite upper-triangular matrix with a per-operator cache.

    ``band`` (optional) declares a_{mn} = 0 for n > m + band.  Cached element
    queries are safe from multiple threads.
    """

    def __init__(self, element: Callable[[int, int], Number], band: int | None = None, name: str = ""):
        self._element = element
        self.band = band
        self.name = name
        self._cache: dict[tuple[int, int], Number] = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"TriangularOperator({self.name or 'anonymous'}, band={self.band})"

    def element(self, m: int, n: int):
        if m < 0 or n < 0:
            raise DomainError("indices must be non-negative")
        if n < m or (self.band is not None and n > m + self.band):
            return 0
        key = (m, n)
        try:
            return self._cache[key]
        except KeyError:
            pass
        value = self._element(m, n)
        with self._lock:
            return self._cache.setdefault(key, value)

    def __getitem__(self, mn):
        return self.element(*mn)

    def window(self, size: int, start: int = 0) -> list[list]:
        """Leading (size x size) block starting at (start, start) as nested lists."""
        idx = range(start, start + size)
        return [[self.element(m, n) for n in idx] for m in idx]

    def to_array(self, size: int, dtype=float) -> np.ndarray:
        return np.array(self.window(size), dtype=dtype)

    @classmethod
    def from_matrix(cls, a, name: str = "finite") -> "TriangularOperator":
        """Embed a finite upper-triangular matrix (zero outside) as an operator."""
        rows = [list(r) for r in a]
        size = len(rows)
        for m in range(size):
            for n in range(m):
                if rows[m][n] != 0:
                    raise DomainError(f"matrix is not upper triangular at ({m}, {n})")

        def element(m, n):
            if m < size and n < size:
                return rows[m][n]
            return 0

        return cls(element, name=name)

    @classmethod
    def toeplitz(cls, t: "ToeplitzBand") -> "TriangularOperator":
        coeffs = t.coefficients
        return cls(lambda m, n: coeffs[n - m], band=t.band, name=f"toeplitz{tuple(coeffs)}")


@dataclass(frozen=True)
class ToeplitzBand:
    """Banded upper-triangular Toeplitz symbol a_0 + a_1 x + ... + a_L x^L, a_0 != 0, L >= 1."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(self.coefficients)
        if len(coeffs) < 2:
            raise DomainError("a Toeplitz band needs L >= 1 (at least two coefficients)")
        if _is_zero_diag(coeffs[0]):
            raise SingularSystemError("Toeplitz band has a_0 = 0", row=0)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def band(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, j):
        return self.coefficients[j] if 0 <= j <= self.band else 0


class _InverseOperator(TriangularOperator):
    """Formal inverse computed column by column with back substitution."""

    def __init__(self, a: TriangularOperator, unit: bool):
        super().__init__(self._compute, band=None, name=f"inverse({a.name})")
        self.source = a
        self.unit = unit
        self._columns: dict[int, list] = {}
        self._col_lock = threading.Lock()

    def _diag(self, m):
        d = self.source.element(m, m)
        if self.unit:
            if d != 1 and not (not _is_exact(d) and abs(d - 1) <= FLOAT_SINGULAR_TOL):
                raise ContractError(f"unit-diagonal inverse requested but a[{m},{m}] = {d}")
            return d
        if _is_zero_diag(d):
            raise SingularSystemError(f"zero diagonal element a[{m},{m}] = {d}", row=m)
        return d

    def _column(self, n: int) -> list:
        col = self._columns.get(n)
        if col is not None:
            return col
        a = self.source
        band = a.band
        col = [0] * (n + 1)
        col[n] = 1 if self.unit else _reciprocal(self._diag(n))
        for m in range(n - 1, -1, -1):
            top = n if band is None else min(n, m + band)
            acc = 0
            for k in range(m + 1, top + 1):
                akk = a.element(m, k)
                if akk != 0 and col[k] != 0:
                    acc = acc + akk * col[k]
            if self.unit:
                self._diag(m)
                col[m] = -acc
            else:
                col[m] = -_divide(acc, self._diag(m))
        with self._col_lock:
            return self._columns.setdefault(n, col)

    def _compute(self, m: int, n: int):
        return self._column(n)[m]


def _reciprocal(d):
    return Fraction(1) / d if _is_exact(d) else 1.0 / d


def _divide(x, d):
    if _is_exact(x) and _is_exact(d):
        return Fraction(x) / d
    return x / d


def inverse_unit_diagonal(a: TriangularOperator) -> TriangularOperator:
    """Formal inverse of an upper-triangular operator whose diagonal is 1."""
    return _InverseOperator(a, unit=True)


def inverse(a: TriangularOperator) -> TriangularOperator:
    """Formal inverse of an upper-triangular operator with non-zero diagonal.

    Singular (zero, or for floats |a_mm| <= 1e-14) diagonals raise
    SingularSystemError naming the row when the offending element is reached.
    """
    return _InverseOperator(a, unit=False)


def inverse_series_element(a: TriangularOperator, m: int, n: int):
    """b_{m,n} = (1/a_{nn}) sum_{k=0}^{n-m} [(I - U A)^k]_{m,n}, U = diag(1/a_kk).

    Literal evaluation of the series on the index window [m, n]; cost O((n-m)^4),
    intended as an independent check of :func:`inverse`.
    """
    if n < m:
        return 0
    size = n - m + 1
    diag = []
    for k in range(m, n + 1):
        d = a.element(k, k)
        if _is_zero_diag(d):
            raise SingularSystemError(f"zero diagonal element a[{k},{k}]", row=k)
        diag.append(_reciprocal(d))
    # C = I - U A restricted to [m, n]; strictly upper triangular
    c = [[0] * size for _ in range(size)]
    for i in range(size):
        for j in range(i + 1, size):
            c[i][j] = -diag[i] * a.element(m + i, m + j)
    # row vector e_0 C^k, accumulated
    row = [1] + [0] * (size - 1)
    total = row[-1]
    for _ in range(size - 1):
        row = [sum((row[i] * c[i][j] for i in range(j)), 0) for j in range(size)]
        total = total + row[-1]
    return total * diag[-1]


def window_product(a: TriangularOperator, b: TriangularOperator, size: int) -> list[list]:
    """Leading size x size block of the (formal) product AB; exact for exact scalars."""
    out = [[0] * size for _ in range(size)]
    for m in range(size):
        for n in range(m, size):
            acc = 0
            for k in range(m, n + 1):
                acc = acc + a.element(m, k) * b.element(k, n)
            out[m][n] = acc
    return out


def toeplitz_inverse_sequence(t: ToeplitzBand, count: int) -> list:
    """b_0..b_count of the power-series reciprocal of the band symbol.

    b_0 = 1/a_0 and sum_{j=0}^{min(u,L)} a_j b_{u-j} = 0 for u >= 1.
    """
    if count < 0:
        raise DomainError("count must be non-negative")
    a = t.coefficients
    inv_a0 = _reciprocal(a[0])
    b = [inv_a0]
    for u in range(1, count + 1):
        acc = 0
        for j in range(1, min(u, t.band) + 1):
            acc = acc + a[j] * b[u - j]
        b.append(-acc * inv_a0)
    return b


def apply_toeplitz(t: ToeplitzBand, c: Sequence) -> list:
    """d_s = sum_{j=0}^{L} a_j c_{s+j} for a finite sequence c (zero beyond its end)."""
    c = list(c)
    out = []
    for s in range(len(c)):
        acc = 0
        for j in range(t.band + 1):
            if s + j < len(c):
                acc = acc + t.coefficients[j] * c[s + j]
        out.append(acc)
    return out


def recover_sequence(t: ToeplitzBand, d: Sequence) -> list:
    """Invert d = A c for finite d: c_n = sum_{s=n}^{len-1} b_{s-n} d_s.

    Exact on finite sequences.  For data from an infinite sequence this is only a
    truncation; check :func:`remainder_term` before trusting it.
    """
    d = list(d)
    if not d:
        return []
    b = toeplitz_inverse_sequence(t, len(d) - 1)
    return [sum((b[s - n] * d[s] for s in range(n, len(d))), 0) for n in range(len(d))]


def remainder_term(t: ToeplitzBand, c: Sequence, n: int, k: int):
    """R^n_k = sum_{n'=1}^{L} sum_{s=n'}^{L} b_{n'+k-s} a_s c_{n'+n+k}.

    ``c`` is indexed absolutely (c[j] = c_j) and must reach index n + k + L.
    The partial sum sum_{s=n}^{n+k} b_{s-n} d_s equals c_n + R^n_k, so the
    series for c_n converges iff R^n_k -> 0 as k grows.
    """
    L = t.band
    if n < 0 or k < 0:
        raise DomainError("n and k must be non-negative")
    if len(c) <= n + k + L:
        raise DomainError(f"need c up to index {n + k + L}, got {len(c)} entries")
    b = toeplitz_inverse_sequence(t, k + L)
    total = 0
    for n1 in range(1, L + 1):
        inner = 0
        for s in range(n1, L + 1):
            j = n1 + k - s
            if j >= 0:
                inner = inner + b[j] * t.coefficients[s]
        total = total + inner * c[n1 + n + k]
    return total
