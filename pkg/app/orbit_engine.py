"""Orbits ``T^n x`` and their distance to ``Px``.

Powers are computed by direct iteration (exact on prefixes). Two integral
representations serve as cross-checks: the moment integral of the Bernstein
polynomial ``G_x^(k)`` against a Gamma(n) weight, and the Laguerre kernel of
the shifted operator ``T_alpha = (T - alpha I) / (1 - alpha)``.

Past the stored prefix the orbit is followed on a log-index grid: for large k,
``pi_k(T^n x) - lim x`` is the Gamma(n) average of the Poisson transform of
``x - lim x`` at mean ``k e^-u``, which turns into a convolution in ``log k``.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gammainccinv, gammaln

from app.borel_tauber import poisson_transform
from app.exceptions import InvalidInputError
from app.laguerre import abs_integral, weighted_integral
from app.models import ConvergentSeq, NormHistory, NormSample, QuadratureConfig, RateFit
from app.quadrature import gamma_weighted_integral
from app.seq_core import cesaro_apply_prefix, project_P, sup_distance
from app.utils import default_rate_window, is_strictly_increasing
from config import (
    FAR_FIELD_LAMBDA_SWITCH,
    FAR_FIELD_STEP,
    FAR_FIELD_W_MIN,
    QUAD_TAIL_MASS_TOL,
    WORKERS,
)

logger = logging.getLogger(__name__)


def _check_schedule(schedule: Sequence[int]) -> List[int]:
    schedule = [int(n) for n in schedule]
    if not schedule:
        raise InvalidInputError("Schedule must not be empty.")
    if not is_strictly_increasing(schedule) or schedule[0] < 0:
        raise InvalidInputError("Schedule must be strictly increasing and non-negative.")
    return schedule


def _check_index(x: ConvergentSeq, k: int) -> None:
    if not 0 <= k < x.size:
        raise InvalidInputError(f"Index {k} is outside the stored prefix of length {x.size}.")


# ============================================================================
# Direct iteration
# ============================================================================


def power_entry(x: ConvergentSeq, k: int, n: int) -> complex:
    """``pi_k(T^n x)`` by iterating the first k+1 entries."""
    _check_index(x, k)
    if n < 0:
        raise InvalidInputError("Power must be non-negative.")
    prefix = x.prefix[: k + 1]
    for _ in range(n):
        prefix = cesaro_apply_prefix(prefix)
    return complex(prefix[k])


def orbit_norms(
    x: ConvergentSeq,
    schedule: Sequence[int],
    far_field: bool = False,
    mode: Optional[str] = None,
) -> NormHistory:
    """Distances ``||T^n x - Px||`` over a schedule.

    Each power reuses the previous one, so the cost is ``O(N * n_max)``.

    Args:
        x: Sequence.
        schedule: Strictly increasing non-negative powers.
        far_field: Also scan indices beyond the prefix on the log-index grid.
        mode: Prefix summation mode override.

    Returns:
        NormHistory: One sample per scheduled power.
    """
    schedule = _check_schedule(schedule)
    target = project_P(x)
    model = FarFieldModel(x, max(schedule)) if far_field else None
    prefix = x.prefix
    done = 0
    samples: List[NormSample] = []
    for n in schedule:
        for _ in range(n - done):
            prefix = cesaro_apply_prefix(prefix, mode)
        done = n
        estimate = sup_distance(x.with_prefix(prefix), target)
        value = estimate.value
        saturated = estimate.boundary_saturated
        peak = math.log(max(estimate.argmax_index, 1))
        if model is not None:
            far_value, far_peak, far_edge = model.sup_distance(n)
            if far_value > value:
                value, peak, saturated = far_value, far_peak, far_edge
            else:
                saturated = False
        elif saturated:
            logger.warning("Orbit sup at n=%d sits on the prefix boundary (N=%d)", n, x.size)
        samples.append(
            NormSample(n=n, value=value, boundary_saturated=saturated, peak_log_index=peak)
        )
    return NormHistory(samples=samples, truncation=x.size)


# ============================================================================
# Far field
# ============================================================================


class FarFieldModel:
    """Orbit of a sequence at indices ``k = e^L`` beyond the prefix.

    ``h(w)`` is the Poisson transform of ``d = x - lim x`` at mean ``e^w``,
    sampled once on a uniform grid. For each power the Gamma(n) density in
    ``u`` is convolved with h, giving ``pi_k(T^n x) - lim x`` at ``L = log k``
    up to the binomial-to-Poisson error ``2^-n sup |d|``.
    """

    def __init__(self, x: ConvergentSeq, n_max: int, step: float = FAR_FIELD_STEP):
        self.x = x
        self.step = step
        self.w_min = FAR_FIELD_W_MIN
        self.offset = complex(x.limit - x.prefix[0])
        self.log_n = math.log(x.size)

        profile = x.tail_profile
        if profile is not None:
            lam_switch = max(FAR_FIELD_LAMBDA_SWITCH, 4.0 * x.size)
        else:
            lam_switch = 4.0 * x.size + 64.0
        w_switch = math.log(lam_switch)
        w_max = max(self.log_n, w_switch) + n_max + 10.0 * math.sqrt(n_max) + 20.0
        self.grid = self.w_min + step * np.arange(int(math.ceil((w_max - self.w_min) / step)) + 1)

        d = x.prefix - x.limit
        near = self.grid <= w_switch
        tail: Optional[Callable[[np.ndarray], np.ndarray]] = None
        if profile is not None:
            def tail(k: np.ndarray) -> np.ndarray:
                return np.asarray(profile(np.log(k.astype(np.float64))), dtype=np.complex128)

        h = np.zeros(self.grid.size, dtype=np.complex128)
        h[near] = poisson_transform(d, np.exp(self.grid[near]), tail)
        if profile is not None:
            h[~near] = profile(self.grid[~near])
        self.h = h
        logger.debug(
            "Far-field grid: %d points on [%g, %g], Poisson below w=%g",
            self.grid.size, self.w_min, self.grid[-1], w_switch,
        )

    def gamma_weights(self, n: int) -> np.ndarray:
        """Trapezoid weights of the Gamma(n, 1) density on ``u = m * step``."""
        horizon = float(gammainccinv(n, QUAD_TAIL_MASS_TOL)) if n > 0 else 0.0
        M = int(math.ceil(horizon / self.step))
        u = self.step * np.arange(M + 1)
        if n == 1:
            density = np.exp(-u)
        else:
            density = np.zeros(M + 1)
            density[1:] = np.exp((n - 1) * np.log(u[1:]) - u[1:] - gammaln(n))
        weights = self.step * density
        weights[0] *= 0.5
        weights[-1] *= 0.5
        return weights

    def profile(self, n: int) -> np.ndarray:
        """``pi_k(T^n x) - x_0`` on the whole grid (``L = grid``)."""
        if n == 0:
            return self.offset + self.h
        weights = self.gamma_weights(n)
        M = weights.size - 1
        padded = np.concatenate((np.full(M, self.h[0]), self.h))
        smoothed = fftconvolve(padded, weights)[M : M + self.h.size]
        return self.offset + smoothed

    def sup_distance(self, n: int) -> Tuple[float, float, bool]:
        """Largest ``|pi_k(T^n x) - x_0|`` over ``k >= N``.

        Returns:
            Tuple of the value, its ``log k`` and whether it sits on the grid end.
        """
        far = self.grid >= self.log_n
        values = np.abs(self.profile(n)[far])
        i = int(np.argmax(values))
        edge = i == values.size - 1
        if edge:
            logger.warning("Far-field sup at n=%d reached the end of the log-index grid", n)
        return float(values[i]), float(self.grid[far][i]), edge


def far_field_orbit_norms(x: ConvergentSeq, schedule: Sequence[int]) -> NormHistory:
    """Orbit distances including indices beyond the prefix."""
    return orbit_norms(x, schedule, far_field=True)


# ============================================================================
# Moment and Laguerre representations
# ============================================================================


def bernstein_values(coeffs: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``G(s) = sum_j C(k, j) c_j s^j (1-s)^(k-j)`` by repeated convex averaging.

    Args:
        coeffs: Control values ``c_0 .. c_k``.
        s: Points in [0, 1].

    Returns:
        np.ndarray: One value per point.
    """
    s = np.asarray(s, dtype=np.float64)
    flat = s.ravel()[:, None]
    level = np.broadcast_to(np.asarray(coeffs, dtype=np.complex128), (flat.shape[0], len(coeffs)))
    for _ in range(len(coeffs) - 1):
        level = (1.0 - flat) * level[:, :-1] + flat * level[:, 1:]
    return level[:, 0].reshape(s.shape)


def moment_entry(
    x: ConvergentSeq, k: int, n: int, cfg: Optional[QuadratureConfig] = None
) -> complex:
    """``pi_k(T^n x)`` from the Gamma-weighted Bernstein moment.

    ``(1/Gamma(n)) int_0^inf e^-u u^(n-1) G_x^(k)(e^-u) du``.

    Raises:
        QuadratureError: If the adaptive quadrature does not converge.
    """
    _check_index(x, k)
    if n < 1:
        raise InvalidInputError("The moment representation needs n >= 1.")
    if k == 0:
        return complex(x.prefix[0])
    coeffs = x.prefix[: k + 1]
    result = gamma_weighted_integral(lambda u: bernstein_values(coeffs, np.exp(-u)), n, cfg)
    return complex(result.value)


def talpha_entry(
    x: ConvergentSeq,
    k: int,
    n: int,
    alpha: float,
    cfg: Optional[QuadratureConfig] = None,
) -> complex:
    """``pi_k(T_alpha^n x)`` through the Laguerre kernel.

    ``(-alpha/(1-alpha))^n (x_k - int_0^inf e^(-alpha t) L_(n-1)(t) G_x^(k)(e^(-alpha t)) dt)``.
    """
    _check_index(x, k)
    if n < 1:
        raise InvalidInputError("The Laguerre representation needs n >= 1.")
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}.")
    coeffs = x.prefix[: k + 1]
    bound = float(np.max(np.abs(coeffs)))
    result = weighted_integral(
        n - 1,
        alpha,
        lambda t: bernstein_values(coeffs, np.exp(-alpha * t)),
        cfg,
        g_bound=max(bound, 1e-300),
    )
    factor = (-alpha / (1.0 - alpha)) ** n
    return complex(factor * (coeffs[k] - result.value))


def talpha_binomial_entry(x: ConvergentSeq, k: int, n: int, alpha: float) -> complex:
    """``(1-alpha)^-n sum_j C(n, j) (-alpha)^(n-j) pi_k(T^j x)``."""
    _check_index(x, k)
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}.")
    prefix = x.prefix[: k + 1]
    total = 0j
    for j in range(n + 1):
        total += math.comb(n, j) * (-alpha) ** (n - j) * prefix[k]
        prefix = cesaro_apply_prefix(prefix)
    return complex(total / (1.0 - alpha) ** n)


def talpha_norm_bound(alpha: float, n: int, cfg: Optional[QuadratureConfig] = None) -> float:
    """Bound ``(alpha/(1-alpha))^n (1 + int_0^inf e^(-alpha t)|L_(n-1)(t)| dt)`` on ``||T_alpha^n||``.

    Raises:
        InvalidInputError: If alpha is outside (0, 1/2) or n < 1.
    """
    if not 0.0 < alpha < 0.5:
        raise InvalidInputError(f"alpha must lie in (0, 1/2), got {alpha}.")
    if n < 1:
        raise InvalidInputError("n must be at least 1.")
    return (alpha / (1.0 - alpha)) ** n * (1.0 + abs_integral(n - 1, alpha, cfg))


def talpha_norm_bounds(
    alpha: float,
    n_list: Sequence[int],
    cfg: Optional[QuadratureConfig] = None,
    workers: int = WORKERS,
) -> List[float]:
    """``talpha_norm_bound`` for several n, evaluated concurrently (order kept)."""
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda n: talpha_norm_bound(alpha, n, cfg), n_list))


# ============================================================================
# Rate fitting
# ============================================================================


def fit_rate(history: NormHistory, window: Optional[Tuple[int, int]] = None) -> RateFit:
    """Least-squares slope of ``log value`` against ``log n``.

    Args:
        history: Orbit history.
        window: ``(n_lo, n_hi)``; defaults to ``[n_max/8, n_max]``.

    Returns:
        RateFit: Slope, intercept and RMS residual; zero values are excluded.

    Raises:
        InvalidInputError: If fewer than three positive samples fall in the window.
    """
    if not history.samples:
        raise InvalidInputError("Cannot fit an empty history.")
    if window is None:
        window = default_rate_window(int(history.powers.max()))
    lo, hi = window
    if lo >= hi:
        raise InvalidInputError("Window must satisfy n_lo < n_hi.")
    powers = history.powers
    values = history.values
    inside = (powers >= max(lo, 1)) & (powers <= hi)
    excluded = [int(n) for n in powers[inside & (values <= 0.0)]]
    use = inside & (values > 0.0)
    if excluded:
        logger.warning("Excluding zero norms at n=%s from the rate fit", excluded)
    if np.count_nonzero(use) < 3:
        raise InvalidInputError(
            f"Need at least 3 positive samples in [{lo}, {hi}], got {int(np.count_nonzero(use))}."
        )
    log_n = np.log(powers[use].astype(np.float64))
    log_v = np.log(values[use])
    slope, intercept = np.polyfit(log_n, log_v, 1)
    residual = float(np.sqrt(np.mean((log_v - (slope * log_n + intercept)) ** 2)))
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        window=(lo, hi),
        residual=residual,
        samples_used=int(np.count_nonzero(use)),
        excluded=excluded,
    )


# ============================================================================
# Sequence catalog
# ============================================================================


def _step(N: int) -> ConvergentSeq:
    prefix = np.ones(N)
    prefix[0] = 0.0
    return ConvergentSeq(prefix=prefix, limit=1.0)


def _log_slow(N: int) -> ConvergentSeq:
    k = np.arange(N, dtype=np.float64)
    prefix = 1.0 / np.log(k + 2.0)
    prefix[0] = 0.0
    return ConvergentSeq(
        prefix=prefix,
        limit=0.0,
        tail_profile=lambda w: 1.0 / np.logaddexp(w, math.log(2.0)),
    )


def _inv_square(N: int) -> ConvergentSeq:
    k = np.arange(N, dtype=np.float64)
    return ConvergentSeq(
        prefix=1.0 / (k + 1.0) ** 2,
        limit=0.0,
        tail_profile=lambda w: np.exp(-2.0 * np.logaddexp(w, 0.0)),
    )


SEQUENCE_CATALOG: Dict[str, Callable[[int], ConvergentSeq]] = {
    "step": _step,
    "log-slow": _log_slow,
    "inv-square": _inv_square,
}


def sequence_catalog_entry(name: str, N: int) -> ConvergentSeq:
    """Build a catalog sequence with prefix length N."""
    if N < 2:
        raise InvalidInputError("Catalog sequences need N >= 2.")
    try:
        return SEQUENCE_CATALOG[name](N)
    except KeyError as exc:
        raise InvalidInputError(
            f"Unknown sequence '{name}'. Choose from {sorted(SEQUENCE_CATALOG)}."
        ) from exc
