"""Extended-precision building blocks.

Error-free transformations (two-sum, two-product), a small double-double
number type used by the Laguerre tail sums, a scalar compensated accumulator and
a vectorised compensated prefix sum for long running sums.
"""
from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np

from config import COMPENSATED_THRESHOLD, SUMMATION_MODE


EPS = np.finfo(np.float64).eps
DD_EPS = EPS * EPS
_SPLITTER = 134217729.0  # 2^27 + 1


# ============================================================================
# Error-free transformations
# ============================================================================


def two_sum(a, b):
    """Return ``(s, e)`` with ``s + e == a + b`` exactly (works on arrays)."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def quick_two_sum(a: float, b: float) -> Tuple[float, float]:
    """Two-sum assuming ``|a| >= |b|``."""
    s = a + b
    return s, b - (s - a)


def _split(a: float) -> Tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a: float, b: float) -> Tuple[float, float]:
    """Return ``(p, e)`` with ``p + e == a * b`` exactly."""
    p = a * b
    if hasattr(math, "fma"):
        return p, math.fma(a, b, -p)
    ahi, alo = _split(a)
    bhi, blo = _split(b)
    e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, e


# ============================================================================
# Double-double numbers
# ============================================================================


class DoubleDouble:
    """Unevaluated sum ``hi + lo`` with ``|lo| <= ulp(hi) / 2``."""

    __slots__ = ("hi", "lo")

    def __init__(self, hi: float, lo: float = 0.0):
        self.hi = float(hi)
        self.lo = float(lo)

    @classmethod
    def from_int(cls, value: int) -> DoubleDouble:
        """Exact conversion for integers below 2**106."""
        hi = float(value)
        lo = float(value - int(hi))
        s, e = quick_two_sum(hi, lo)
        return cls(s, e)

    @staticmethod
    def _coerce(other) -> DoubleDouble:
        if isinstance(other, DoubleDouble):
            return other
        if isinstance(other, int):
            return DoubleDouble.from_int(other)
        return DoubleDouble(float(other))

    def __add__(self, other) -> DoubleDouble:
        other = self._coerce(other)
        s, e = two_sum(self.hi, other.hi)
        t, f = two_sum(self.lo, other.lo)
        e += t
        s, e = quick_two_sum(s, e)
        e += f
        s, e = quick_two_sum(s, e)
        return DoubleDouble(s, e)

    __radd__ = __add__

    def __neg__(self) -> DoubleDouble:
        return DoubleDouble(-self.hi, -self.lo)

    def __sub__(self, other) -> DoubleDouble:
        return self + (-self._coerce(other))

    def __mul__(self, other) -> DoubleDouble:
        other = self._coerce(other)
        p, e = two_prod(self.hi, other.hi)
        e += self.hi * other.lo + self.lo * other.hi
        s, e = quick_two_sum(p, e)
        return DoubleDouble(s, e)

    __rmul__ = __mul__

    def __truediv__(self, other) -> DoubleDouble:
        other = self._coerce(other)
        q1 = self.hi / other.hi
        r = self - other * q1
        q2 = r.hi / other.hi
        r = r - other * q2
        q3 = r.hi / other.hi
        s, e = quick_two_sum(q1, q2)
        return DoubleDouble(s, e) + q3

    def __abs__(self) -> DoubleDouble:
        return -self if self.hi < 0 else self

    def __float__(self) -> float:
        return self.hi + self.lo

    def __repr__(self) -> str:
        return f"DoubleDouble(hi={self.hi!r}, lo={self.lo!r})"


class CompensatedSum:
    """Double-double accumulator with a running magnitude for error estimates."""

    def __init__(self):
        self.total = DoubleDouble(0.0)
        self.magnitude = 0.0

    def add(self, term) -> None:
        """Add a float or a double-double term."""
        term = DoubleDouble._coerce(term)
        self.total = self.total + term
        self.magnitude += abs(float(term))

    @property
    def value(self) -> float:
        return float(self.total)

    def error_estimate(self, term_rel_error: float = 0.0) -> float:
        """Bound on the absolute error of the sum.

        Args:
            term_rel_error: Relative error carried by each term on entry.
        """
        return (term_rel_error + 4.0 * DD_EPS) * self.magnitude


# ============================================================================
# Prefix sums
# ============================================================================


def _compensated_cumsum_real(values: np.ndarray) -> np.ndarray:
    size = values.size
    block = max(1, int(math.isqrt(size)))
    rows = -(-size // block)
    padded = np.zeros(rows * block)
    padded[:size] = values
    grid = padded.reshape(rows, block)

    hi = np.empty_like(grid)
    lo = np.empty_like(grid)
    s = np.zeros(rows)
    c = np.zeros(rows)
    for j in range(block):
        s, e = two_sum(s, grid[:, j])
        c = c + e
        hi[:, j] = s
        lo[:, j] = c

    off_hi = np.empty(rows)
    off_lo = np.empty(rows)
    acc_hi, acc_lo = 0.0, 0.0
    for i in range(rows):
        off_hi[i] = acc_hi
        off_lo[i] = acc_lo
        acc_hi, e = two_sum(acc_hi, float(s[i]))
        acc_lo += e + float(c[i])

    r, e = two_sum(hi, off_hi[:, None])
    result = r + (e + lo + off_lo[:, None])
    return result.reshape(-1)[:size]


def compensated_cumsum(values: np.ndarray) -> np.ndarray:
    """Running sums with double-double accumulation.

    Args:
        values: Real or complex 1-D array.

    Returns:
        np.ndarray: Prefix sums rounded once to double precision.
    """
    values = np.asarray(values)
    if values.size == 0:
        return values.copy()
    if np.iscomplexobj(values):
        return (
            _compensated_cumsum_real(values.real.astype(np.float64))
            + 1j * _compensated_cumsum_real(values.imag.astype(np.float64))
        )
    return _compensated_cumsum_real(values.astype(np.float64))


def prefix_sums(values: np.ndarray, mode: Optional[str] = None) -> np.ndarray:
    """Running sums using the configured summation mode.

    Args:
        values: 1-D array.
        mode: ``"naive"``, ``"compensated"`` or ``"auto"`` (default from config).

    Returns:
        np.ndarray: Array of prefix sums of the same length.
    """
    mode = (mode or SUMMATION_MODE).lower()
    if mode not in ("auto", "naive", "compensated"):
        raise ValueError(f"Unknown summation mode: {mode}")
    if mode == "compensated" or (mode == "auto" and values.size > COMPENSATED_THRESHOLD):
        return compensated_cumsum(values)
    return np.cumsum(values)
