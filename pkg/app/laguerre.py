"""Generalized Laguerre polynomials of order one and their weighted integrals.

``L_n(t) = sum_k C(n+1, k+1) (-1)^k t^k / k!`` is evaluated with the three-term
recurrence; the alternating sum is kept as an exact-rational reference for
small degrees. All roots lie in ``(0, 4(n+1))``, past which the sign is
``(-1)^n``.
"""
import logging
import math
from fractions import Fraction
from typing import Callable, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import brentq
from scipy.special import gammaincc

from app.exceptions import CancellationError, InvalidInputError, NumericalError
from app.models import QuadratureConfig
from app.precision import DD_EPS, CompensatedSum, DoubleDouble, two_prod
from app.quadrature import QuadratureResult, integrate

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class LaguerrePoly(BaseModel):
    """Degree-n generalized Laguerre polynomial of order one."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=0, description="Degree")

    def __call__(self, t: ArrayLike) -> ArrayLike:
        return laguerre_eval(self.n, t)

    @property
    def root_bound(self) -> float:
        """Right end ``4(n+1)`` of the interval holding every root."""
        return 4.0 * (self.n + 1)

    def coefficients(self) -> List[Fraction]:
        """Exact power-basis coefficients."""
        return [
            Fraction(math.comb(self.n + 1, k + 1) * (-1) ** k, math.factorial(k))
            for k in range(self.n + 1)
        ]

    def roots(self) -> np.ndarray:
        return laguerre_roots(self.n)


def _check_alpha(alpha: float, upper: float = 1.0) -> None:
    if not 0.0 < alpha < upper:
        raise InvalidInputError(f"alpha must lie in (0, {upper:g}), got {alpha}.")


# ============================================================================
# Evaluation
# ============================================================================


def laguerre_eval(n: int, t: ArrayLike) -> ArrayLike:
    """Evaluate ``L_n^(1)(t)`` by the three-term recurrence.

    ``(k+1) L_{k+1} = (2k + 2 - t) L_k - (k+1) L_{k-1}`` from ``L_0 = 1`` and
    ``L_1 = 2 - t``.

    Args:
        n: Degree (>= 0).
        t: Non-negative point(s).

    Returns:
        Value(s) of the polynomial, same shape as ``t``.
    """
    if n < 0:
        raise InvalidInputError("Degree must be non-negative.")
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0):
        raise InvalidInputError("Laguerre polynomials are evaluated for t >= 0.")
    prev = np.ones_like(t_arr)
    if n == 0:
        result = prev
    else:
        cur = 2.0 - t_arr
        for k in range(1, n):
            prev, cur = cur, ((2 * k + 2 - t_arr) * cur - (k + 1) * prev) / (k + 1)
        result = cur
    return float(result) if t_arr.ndim == 0 else result


def laguerre_direct_sum(n: int, t: Union[int, float, Fraction]) -> Fraction:
    """Exact value of the alternating binomial sum at a rational point."""
    t = Fraction(t)
    return sum(
        (c * t ** k for k, c in enumerate(LaguerrePoly(n=n).coefficients())),
        Fraction(0),
    )


def laguerre_roots(n: int, max_refinements: int = 4) -> np.ndarray:
    """All n roots, bracketed by a sign scan and refined with Brent's method.

    The scan grid ``t_i = 4(n+1) (i/M)^2`` with ``M = 8(n+1)`` is quadratic so
    that it resolves the clustering of roots near the origin.

    Raises:
        NumericalError: If fewer than n sign changes are found.
    """
    if n == 0:
        return np.empty(0)
    t_star = 4.0 * (n + 1)
    points = 8 * (n + 1)
    for _ in range(max_refinements + 1):
        grid = t_star * (np.arange(points + 1) / points) ** 2
        values = laguerre_eval(n, grid)
        roots: List[float] = []
        for i in range(points):
            a, b = values[i], values[i + 1]
            if a == 0.0:
                roots.append(float(grid[i]))
            elif a * b < 0.0:
                roots.append(brentq(lambda s: laguerre_eval(n, s), grid[i], grid[i + 1],
                                    xtol=1e-15, rtol=4 * np.finfo(float).eps))
        if len(roots) == n:
            return np.array(roots)
        logger.debug("Found %d of %d roots on %d points; refining", len(roots), n, points)
        points *= 2
    raise NumericalError(f"Could not bracket all {n} roots of L_{n}^(1)")


# ============================================================================
# Integrals
# ============================================================================


def signed_integral(n: int, alpha: float) -> float:
    """Closed form of ``int_0^inf e^(-alpha t) (-1)^n L_n(t) dt``.

    Equals ``((1 - alpha)/alpha)^(n+1) + (-1)^n``.
    """
    if n < 0:
        raise InvalidInputError("Degree must be non-negative.")
    _check_alpha(alpha)
    return ((1.0 - alpha) / alpha) ** (n + 1) + (-1.0) ** n


def _abs_tail_bound(n: int, alpha: float, T: float) -> float:
    """Bound on ``int_T^inf e^(-alpha t) |L_n(t)| dt`` from ``|L_n| <= sum |c_k| t^k``."""
    k = np.arange(n + 1)
    binom = np.array([float(math.comb(n + 1, j + 1)) for j in k])
    return float(np.sum(binom * alpha ** (-(k + 1.0)) * gammaincc(k + 1.0, alpha * T)))


def _horizon(n: int, alpha: float, target: float) -> float:
    T = 4.0 * (n + 1)
    while _abs_tail_bound(n, alpha, T) > target:
        T *= 1.5
    return T


def weighted_integral(
    n: int,
    alpha: float,
    g: Callable[[np.ndarray], np.ndarray],
    cfg: Optional[QuadratureConfig] = None,
    g_bound: float = 1.0,
) -> QuadratureResult:
    """``int_0^inf e^(-alpha t) L_n(t) g(t) dt`` for a bounded function g.

    The range is cut where the tail bound times ``g_bound`` falls below the
    tolerance measured against ``((1-alpha)/alpha)^(n+1)``.

    Args:
        n: Degree.
        alpha: Exponential rate in (0, 1).
        g: Vectorised function with ``|g| <= g_bound``.
        cfg: Quadrature configuration.
        g_bound: Bound on ``|g|``.

    Returns:
        QuadratureResult: Integral with error estimate (truncation included).
    """
    cfg = cfg or QuadratureConfig()
    _check_alpha(alpha)
    scale = ((1.0 - alpha) / alpha) ** (n + 1) * max(g_bound, 1e-300)
    target = max(cfg.abs_tol, cfg.rel_tol * scale) / max(g_bound, 1e-300)
    T = _horizon(n, alpha, target)
    t_star = 4.0 * (n + 1)
    edges = list(np.linspace(0.0, t_star, n + 2)) + list(np.geomspace(t_star, T, 8))

    def integrand(t: np.ndarray) -> np.ndarray:
        return np.exp(-alpha * t) * laguerre_eval(n, t) * g(t)

    result = integrate(integrand, 0.0, T, cfg, edges)
    truncation = _abs_tail_bound(n, alpha, T) * g_bound
    return result._replace(error=result.error + truncation)


def signed_integral_quadrature(
    n: int, alpha: float, cfg: Optional[QuadratureConfig] = None
) -> float:
    """Quadrature of the signed integrand, for comparison with the closed form."""
    sign = (-1.0) ** n
    result = weighted_integral(n, alpha, lambda t: np.full_like(t, sign), cfg)
    return float(np.real(result.value))


def _tail_double_double(n: int, alpha: float, t_star: float, rel_tol: float) -> float:
    """``int_{t*}^inf e^(-alpha t) |L_n(t)| dt`` via incomplete-gamma sums.

    With ``x = alpha t*`` and ``Q(k+1, x) = e^-x P_k``, ``P_k = sum_{j<=k} x^j/j!``,
    the tail is ``e^-x sum_k (-1)^(n+k) C(n+1, k+1) P_k / alpha^(k+1)``. The
    sum is carried out in double-double arithmetic.

    Raises:
        CancellationError: If the compensated error estimate exceeds ``rel_tol``.
    """
    x = DoubleDouble(*two_prod(alpha, t_star))
    inv_alpha = DoubleDouble(1.0) / DoubleDouble(alpha)
    power = inv_alpha
    ratio = DoubleDouble(1.0)
    partial = DoubleDouble(1.0)
    acc = CompensatedSum()
    for k in range(n + 1):
        if k > 0:
            ratio = ratio * x / k
            partial = partial + ratio
            power = power * inv_alpha
        term = DoubleDouble.from_int(math.comb(n + 1, k + 1)) * power * partial
        acc.add(term if (n + k) % 2 == 0 else -term)
    total = acc.value
    error = acc.error_estimate(term_rel_error=(3 * n + 16) * DD_EPS)
    if error > rel_tol * abs(total):
        raise CancellationError(
            f"Laguerre tail sum for n={n}, alpha={alpha} lost too many digits",
            achieved_error=error / abs(total) if total else math.inf,
        )
    return total * math.exp(-x.hi) * (1.0 - x.lo)


def abs_integral(n: int, alpha: float, cfg: Optional[QuadratureConfig] = None) -> float:
    """``int_0^inf e^(-alpha t) |L_n(t)| dt``.

    On ``[0, 4(n+1)]`` the integrand is integrated between consecutive roots,
    where it has constant sign; the tail is summed in closed form.

    Args:
        n: Degree.
        alpha: Rate in (0, 1).
        cfg: Quadrature configuration.

    Returns:
        float: The absolute integral.
    """
    cfg = cfg or QuadratureConfig()
    if n < 0:
        raise InvalidInputError("Degree must be non-negative.")
    _check_alpha(alpha)
    if n == 0:
        return 1.0 / alpha
    t_star = 4.0 * (n + 1)
    edges = np.concatenate(([0.0], laguerre_roots(n), [t_star]))

    def integrand(t: np.ndarray) -> np.ndarray:
        return np.abs(np.exp(-alpha * t) * laguerre_eval(n, t))

    acc = CompensatedSum()
    for lo, hi in zip(edges[:-1], edges[1:]):
        acc.add(float(integrate(integrand, float(lo), float(hi), cfg).value))
    return acc.value + _tail_double_double(n, alpha, t_star, cfg.rel_tol)


def asymptotic_ratio(n: int, alpha: float, cfg: Optional[QuadratureConfig] = None) -> float:
    """``abs_integral(n, alpha) / ((1 - alpha)/alpha)^(n+1)`` for alpha in (0, 1/2)."""
    _check_alpha(alpha, 0.5)
    return abs_integral(n, alpha, cfg) / ((1.0 - alpha) / alpha) ** (n + 1)
