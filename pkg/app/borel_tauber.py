"""Borel transforms, Abel means and the absolute-integrability probe.

For a coefficient sequence a the Borel transform is
``f(t) = e^-t sum_k a_k t^k / k!``, a Poisson average of the coefficients.
Under the Tauberian bound ``a_k = O(1/k)`` its integral over [0, inf) equals
the series sum; this module measures both sides.
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.special import digamma, exp1, gammaln, gammaincc, pdtr, pdtrc, zeta

from app.exceptions import InvalidInputError, QuadratureError
from app.models import (
    BorelIntegral,
    CoeffSeq,
    ConvergentSeq,
    Diagnostic,
    QuadratureConfig,
    TailKind,
    TailRule,
    Verdict,
    VerdictStatus,
)
from app.quadrature import integrate
from config import (
    GEOMETRIC_TAIL_TOL,
    POISSON_TAIL_TOL,
    PROBE_HORIZON_SPREAD,
    PROBE_TOL_DIV,
    STABILIZATION_TOL,
)

logger = logging.getLogger(__name__)

CoefficientRule = Callable[[np.ndarray], np.ndarray]

MAX_HORIZON = 1e8
MAX_ABEL_TERMS = 50_000_000
_RECURRENCE_LIMIT = 600.0


# ============================================================================
# Coefficients and tail rules
# ============================================================================


def tail_coefficients(rule: TailRule, k: np.ndarray) -> np.ndarray:
    """Closed-form coefficients ``a_k`` of a tail rule.

    Args:
        rule: Tail rule.
        k: Integer indices.

    Returns:
        np.ndarray: Complex coefficients.
    """
    k = np.asarray(k, dtype=np.float64)
    sign = np.where(np.mod(k, 2) == 0, 1.0, -1.0)
    c = rule.c
    if rule.kind is TailKind.ZERO:
        values = np.zeros_like(k)
    elif rule.kind is TailKind.CONSTANT:
        values = np.ones_like(k)
    elif rule.kind is TailKind.ALTERNATING_SIGN:
        values = sign
    elif rule.kind is TailKind.RECIPROCAL_POWER:
        values = (k + 1.0) ** (-rule.p)
    elif rule.kind is TailKind.ALTERNATING_RECIPROCAL:
        values = sign / (k + 1.0)
    else:
        values = 1.0 / ((k + 1.0) * np.log(k + 2.0))
    return c * values.astype(np.complex128)


def coefficients(a: CoeffSeq, k: np.ndarray) -> np.ndarray:
    """``a_k`` for arbitrary indices: stored values first, then the tail rule."""
    k = np.asarray(k, dtype=np.int64)
    out = tail_coefficients(a.tail_rule, k)
    stored = k < a.stored
    out[stored] = a.coeffs[k[stored]]
    return out


def sup_abs_bound(a: CoeffSeq) -> float:
    """Analytic bound on ``sup_k |a_k|``.

    Raises:
        InvalidInputError: If the bound is not finite.
    """
    K = a.stored
    c = abs(a.tail_rule.c)
    kind = a.tail_rule.kind
    if kind is TailKind.ZERO:
        tail = 0.0
    elif kind in (TailKind.CONSTANT, TailKind.ALTERNATING_SIGN):
        tail = c
    elif kind is TailKind.RECIPROCAL_POWER:
        tail = c / (K + 1.0) ** a.tail_rule.p
    elif kind is TailKind.ALTERNATING_RECIPROCAL:
        tail = c / (K + 1.0)
    else:
        tail = c / ((K + 1.0) * math.log(K + 2.0))
    stored = float(np.max(np.abs(a.coeffs))) if K else 0.0
    bound = max(stored, tail)
    if not math.isfinite(bound):
        raise InvalidInputError("Unable to bound sup |a_k| for this coefficient sequence.")
    return bound


def tauberian_constant(a: CoeffSeq) -> Optional[float]:
    """``sup_k (k+1)|a_k|``, or None when the tail rule makes it unbounded."""
    K = a.stored
    c = abs(a.tail_rule.c)
    kind = a.tail_rule.kind
    if kind is TailKind.ZERO or c == 0.0:
        tail = 0.0
    elif kind in (TailKind.CONSTANT, TailKind.ALTERNATING_SIGN):
        return None
    elif kind is TailKind.RECIPROCAL_POWER:
        if a.tail_rule.p < 1.0:
            return None
        tail = c * (K + 1.0) ** (1.0 - a.tail_rule.p)
    elif kind is TailKind.ALTERNATING_RECIPROCAL:
        tail = c
    else:
        tail = c / math.log(K + 2.0)
    stored = np.abs(a.coeffs) * np.arange(1, K + 1)
    return max(float(np.max(stored)) if K else 0.0, tail)


def satisfies_tauberian(a: CoeffSeq) -> bool:
    """Check the hypothesis ``a_k = O(1/k)``."""
    return tauberian_constant(a) is not None


def series_sum(a: CoeffSeq) -> Optional[complex]:
    """Sum of the series: stored partial sum plus the closed-form tail.

    Returns:
        Optional[complex]: None when the series diverges.
    """
    K = a.stored
    partial = complex(math.fsum(a.coeffs.real), math.fsum(a.coeffs.imag))
    rule = a.tail_rule
    if rule.kind is TailKind.ZERO or rule.c == 0:
        return partial
    if rule.kind is TailKind.RECIPROCAL_POWER:
        if rule.p <= 1.0:
            return None
        return partial + rule.c * float(zeta(rule.p, K + 1.0))
    if rule.kind is TailKind.ALTERNATING_RECIPROCAL:
        half = 0.5 * (digamma((K + 2.0) / 2.0) - digamma((K + 1.0) / 2.0))
        return partial + rule.c * (-1.0) ** K * float(half)
    return None


# ============================================================================
# Poisson (Borel) transform
# ============================================================================


def poisson_window(lam: float, tol: float = POISSON_TAIL_TOL) -> Tuple[int, np.ndarray]:
    """Poisson(lam) probabilities on a window holding all but ``tol`` of the mass.

    Below ``lam = 600`` the weights come from ``w_{k+1} = w_k * lam / (k+1)``
    started at ``e^-lam``; above, each weight is evaluated in log space.

    Args:
        lam: Poisson mean (>= 0).
        tol: Mass allowed outside the window.

    Returns:
        Tuple of the first index of the window and the weights.
    """
    if lam < 0:
        raise InvalidInputError("Poisson mean must be non-negative.")
    if lam == 0.0:
        return 0, np.ones(1)
    spread = math.sqrt(lam)
    z = 8.0
    while True:
        hi = int(math.ceil(lam + z * spread + 10.0))
        lo = 0 if lam <= _RECURRENCE_LIMIT else max(0, int(math.floor(lam - z * spread - 10.0)))
        outside = float(pdtrc(hi, lam)) + (float(pdtr(lo - 1, lam)) if lo > 0 else 0.0)
        if outside <= tol:
            break
        z *= 1.5
    if lo == 0 and lam <= _RECURRENCE_LIMIT:
        ratios = lam / np.arange(1, hi + 1, dtype=np.float64)
        weights = math.exp(-lam) * np.concatenate(([1.0], np.cumprod(ratios)))
    else:
        k = np.arange(lo, hi + 1, dtype=np.float64)
        weights = np.exp(k * math.log(lam) - lam - gammaln(k + 1.0))
    return lo, weights


def poisson_transform(
    coeffs: np.ndarray,
    lam: Union[float, np.ndarray],
    tail: Optional[CoefficientRule] = None,
    sup_bound: Optional[float] = None,
) -> np.ndarray:
    """Poisson averages ``sum_k d_k e^-lam lam^k / k!``.

    Args:
        coeffs: Stored coefficients ``d_0 .. d_{K-1}``.
        lam: Mean(s) at which to evaluate.
        tail: Generator for ``d_k`` with ``k >= K`` (zero when omitted).
        sup_bound: Bound on ``sup |d_k|`` used to certify the truncation.

    Returns:
        np.ndarray: Complex values, one per mean.
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    K = coeffs.size
    if sup_bound is None:
        sup_bound = float(np.max(np.abs(coeffs))) if K else 0.0
    if sup_bound == 0.0 and tail is None:
        return np.zeros(lam_arr.shape, dtype=np.complex128)
    tol = POISSON_TAIL_TOL / max(sup_bound, 1e-300)
    out = np.empty(lam_arr.shape, dtype=np.complex128)
    for i, value in enumerate(lam_arr.ravel()):
        lo, weights = poisson_window(float(value), min(tol, 0.5))
        k = np.arange(lo, lo + weights.size)
        d = np.zeros(k.size, dtype=np.complex128)
        stored = k < K
        d[stored] = coeffs[k[stored]]
        if tail is not None and not np.all(stored):
            d[~stored] = tail(k[~stored])
        out.flat[i] = np.dot(weights, d)
    return out


def borel_eval(a: CoeffSeq, t: Union[float, np.ndarray]) -> Union[complex, np.ndarray]:
    """Borel transform ``f(t) = e^-t sum_k a_k t^k / k!``.

    Args:
        a: Coefficient sequence.
        t: Non-negative point or array of points.

    Returns:
        Complex value (scalar input) or array.
    """
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0):
        raise InvalidInputError("Borel transform is evaluated for t >= 0 only.")
    bound = sup_abs_bound(a)
    rule = a.tail_rule
    tail = None if rule.kind is TailKind.ZERO else (lambda k: tail_coefficients(rule, k))
    values = poisson_transform(a.coeffs, t_arr, tail, bound)
    if t_arr.ndim == 0:
        return complex(values[0])
    return values.reshape(t_arr.shape)


# ============================================================================
# Borel integral
# ============================================================================


def _rule_integral_tail(rule: TailRule, T: float) -> Tuple[complex, float]:
    """Integral over [T, inf) of the Borel transform of the pure rule.

    Returns:
        Tuple of the tail value and a bound on the model remainder.

    Raises:
        QuadratureError: If the integral diverges.
    """
    c = rule.c
    if rule.kind is TailKind.ZERO or c == 0:
        return 0.0, 0.0
    if rule.kind is TailKind.ALTERNATING_SIGN:
        return c * math.exp(-2.0 * T) / 2.0, 0.0
    if rule.kind is TailKind.ALTERNATING_RECIPROCAL:
        return c * float(exp1(T) - exp1(2.0 * T)), 0.0
    if rule.kind is TailKind.RECIPROCAL_POWER and rule.p > 1.0:
        p = rule.p
        s = T + 1.0
        value = s ** (1.0 - p) / (p - 1.0) + 0.5 * p * (p + 1.0) * (
            s ** (-p) / p - s ** (-p - 1.0) / (p + 1.0)
        )
        const = p * (p + 1.0) * (p + 2.0) * ((p + 3.0) / 8.0 + 1.0 / 6.0)
        return c * value, abs(c) * const * T ** (-p - 1.0)
    raise QuadratureError(f"Borel integral diverges for tail rule {rule.kind.value}")


def _integral_tail(a: CoeffSeq, T: float) -> Tuple[complex, float, float]:
    """Signed tail integral, a bound on the tail of ``|f|`` and the model remainder.

    Every convergent rule has a Borel transform of constant sign on [T, inf),
    so its ``|value|`` is the integral of its modulus; stored corrections add
    at most ``sum |d_k| Q(k + 1, T)``.
    """
    value, remainder = _rule_integral_tail(a.tail_rule, T)
    abs_bound = abs(value)
    K = a.stored
    if K:
        k = np.arange(K)
        diff = a.coeffs - tail_coefficients(a.tail_rule, k)
        masses = gammaincc(k + 1.0, T)
        value = value + complex(np.dot(diff, masses))
        abs_bound += float(np.dot(np.abs(diff), masses))
    return value, abs_bound, remainder


def borel_integral(a: CoeffSeq, cfg: Optional[QuadratureConfig] = None) -> BorelIntegral:
    """Integrate the Borel transform over [0, inf).

    The horizon T doubles until the remainder of the analytic tail model drops
    below ``cfg.abs_tol``; the tail beyond T is then added in closed form.

    Args:
        a: Coefficient sequence.
        cfg: Quadrature configuration.

    Returns:
        BorelIntegral: Signed and absolute integrals next to the series sum.

    Raises:
        QuadratureError: If the integral diverges or quadrature fails.
    """
    cfg = cfg or QuadratureConfig()
    K = a.stored
    T = max(16.0, 2.0 * K + 12.0 * math.sqrt(K) + 20.0)
    while True:
        tail_value, tail_abs, remainder = _integral_tail(a, T)
        if remainder <= cfg.abs_tol:
            break
        T *= 2.0
        if T > MAX_HORIZON:
            raise QuadratureError(
                "Borel integral horizon exceeded without certifying the tail",
                achieved_error=remainder,
            )
    logger.debug("Borel integral horizon T=%g (tail %.3e)", T, abs(tail_value))

    edges = [2.0 ** j for j in range(int(math.log2(T)) + 1)]
    result = integrate(lambda t: borel_eval(a, t), 0.0, T, cfg, edges)
    hypothesis_ok = satisfies_tauberian(a)
    if not hypothesis_ok:
        logger.warning("Coefficients of %s violate a_k = O(1/k)", a.name)
    return BorelIntegral(
        value=complex(result.value) + complex(tail_value),
        abs_value=result.magnitude + tail_abs,
        horizon=T,
        error=result.error + remainder,
        hypothesis_ok=hypothesis_ok,
        series_value=series_sum(a),
    )


# ============================================================================
# Abel means
# ============================================================================


def abel_mean(a: CoeffSeq, r: float) -> complex:
    """Geometric mean ``sum_k a_k / r^(k+1)`` for ``r > 1``.

    Raises:
        InvalidInputError: If r <= 1 or r is too close to 1 to truncate.
    """
    if not r > 1.0:
        raise InvalidInputError("Abel parameter must satisfy r > 1.")
    bound = sup_abs_bound(a)
    log_r = math.log(r)
    if bound == 0.0:
        return 0j
    # sup|a| r^-(k+1) / (1 - 1/r) < tol
    needed = math.log(bound / (GEOMETRIC_TAIL_TOL * (1.0 - 1.0 / r))) / log_r
    terms = max(a.stored, int(math.ceil(needed)))
    if terms > MAX_ABEL_TERMS:
        raise InvalidInputError(f"r = {r} is too close to 1 for geometric truncation.")
    k = np.arange(terms)
    weights = np.exp(-(k + 1.0) * log_r)
    return complex(np.sum(coefficients(a, k) * weights))


# ============================================================================
# Absolute-integrability probe
# ============================================================================


def adell_lekuona_probe(x: ConvergentSeq, cfg: Optional[QuadratureConfig] = None) -> Verdict:
    """Probe finiteness of ``int_0^inf e^-t |sum_k (x_k - x_0) t^(k-1) / k!| dt``.

    Uses ``a_k = (x_{k+1} - x_0) / (k + 1)`` from the stored prefix and the
    integral of ``|f|`` over a doubling ladder of horizons up to
    ``K - 6 sqrt(K)``, where the Poisson weights of f still sit on stored
    indices. The endpoint condition ``x_0 = lim x`` is
    reported as a separate diagnostic and does not change the status.

    Args:
        x: Sequence.
        cfg: Quadrature configuration.

    Returns:
        Verdict: member (stabilized), non_member (sustained growth) or inconclusive.
    """
    cfg = cfg or QuadratureConfig()
    if x.size < 2:
        raise InvalidInputError("The probe needs at least two stored entries.")
    k = np.arange(x.size - 1)
    a = CoeffSeq(coeffs=(x.prefix[1:] - x.prefix[0]) / (k + 1.0), name="adell-lekuona")
    K = a.stored
    # Poisson(t) must keep its mass on stored indices.
    horizon = K - PROBE_HORIZON_SPREAD * math.sqrt(K)
    ladder = [0.0] + [2.0 ** j for j in range(int(math.floor(math.log2(max(horizon, 2.0)))) + 1)]

    def abs_f(t: np.ndarray) -> np.ndarray:
        return np.abs(borel_eval(a, t))

    increments: List[float] = []
    for lo, hi in zip(ladder, ladder[1:]):
        increments.append(float(integrate(abs_f, lo, hi, cfg).value))
    partial = np.cumsum(increments)
    total = float(partial[-1])
    gap = float(abs(x.limit - x.prefix[0]))

    diagnostics = [
        Diagnostic(condition="abs_integral", value=total, threshold=float("inf")),
        Diagnostic(condition="endpoint_gap", value=gap, threshold=1e-12),
    ]
    warnings: List[str] = []
    if gap > 1e-12:
        warnings.append("x_0 differs from lim x; the rate theorem also needs x_0 = lim x")

    if total == 0.0:
        return Verdict(status=VerdictStatus.MEMBER, diagnostics=diagnostics, warnings=warnings)
    if len(increments) < 4:
        warnings.append("horizon ladder too short to decide")
        return Verdict(status=VerdictStatus.INCONCLUSIVE, diagnostics=diagnostics, warnings=warnings)

    change = increments[-1] / total
    diagnostics.append(
        Diagnostic(condition="relative_change_last_doubling", value=change, threshold=STABILIZATION_TOL)
    )
    last = increments[-3:]
    ratios = [b / a_ for a_, b in zip(last, last[1:]) if a_ > 0]
    min_ratio = min(ratios) if len(ratios) == 2 else 0.0
    diagnostics.append(
        Diagnostic(condition="min_increment_ratio", value=min_ratio, threshold=1.0 - PROBE_TOL_DIV)
    )
    logger.debug("Probe ladder increments %s", increments)

    if change < STABILIZATION_TOL:
        status = VerdictStatus.MEMBER
    elif min(last) / total >= STABILIZATION_TOL and min_ratio >= 1.0 - PROBE_TOL_DIV:
        status = VerdictStatus.NON_MEMBER
    else:
        status = VerdictStatus.INCONCLUSIVE
    return Verdict(status=status, diagnostics=diagnostics, warnings=warnings)


# ============================================================================
# Catalog
# ============================================================================


def _catalog() -> Dict[str, CoeffSeq]:
    def rule(kind: TailKind, **kwargs) -> TailRule:
        return TailRule(kind=kind, **kwargs)

    return {
        "unit0": CoeffSeq(coeffs=[1.0], name="unit0"),
        "ones": CoeffSeq(coeffs=[], tail_rule=rule(TailKind.CONSTANT), name="ones"),
        "alternating": CoeffSeq(
            coeffs=[], tail_rule=rule(TailKind.ALTERNATING_SIGN), name="alternating"
        ),
        "alt-harmonic": CoeffSeq(
            coeffs=[], tail_rule=rule(TailKind.ALTERNATING_RECIPROCAL), name="alt-harmonic"
        ),
        "inv-square": CoeffSeq(
            coeffs=[], tail_rule=rule(TailKind.RECIPROCAL_POWER, p=2.0), name="inv-square"
        ),
        "log-slow": CoeffSeq(
            coeffs=[], tail_rule=rule(TailKind.RECIPROCAL_LOG), name="log-slow"
        ),
    }


CATALOG: Dict[str, CoeffSeq] = _catalog()


def catalog_entry(name: str) -> CoeffSeq:
    """Look up a named coefficient sequence."""
    try:
        return CATALOG[name]
    except KeyError as exc:
        raise InvalidInputError(
            f"Unknown coefficient sequence '{name}'. Choose from {sorted(CATALOG)}."
        ) from exc
