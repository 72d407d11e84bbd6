"""Membership in ``Ran(I - T)`` and ``Ran(I - T)^2`` and explicit preimages.

``x`` lies in ``Ran(I - T)`` exactly when ``x_0 = lim x = 0`` and
``sum_k x_k / k`` converges. Convergence of a series cannot be decided from
finitely many terms, so ``series_probe`` reports a heuristic verdict together
with every quantity it measured.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np

from app.exceptions import InvalidInputError
from app.models import ConvergentSeq, Diagnostic, PreimageResult, Verdict, VerdictStatus
from app.precision import prefix_sums
from config import EXACT_TOL, PROBE_MIN_TERMS, PROBE_REL_TOL_CONV, PROBE_TOL_DIV

logger = logging.getLogger(__name__)


def _spread(values: np.ndarray) -> float:
    """Diameter of a set of complex numbers, measured per component."""
    return float(np.hypot(np.ptp(values.real), np.ptp(values.imag)))


# ============================================================================
# Series probe
# ============================================================================


def series_probe(
    terms: Sequence[complex],
    tol_conv: Optional[float] = None,
    tol_div: float = PROBE_TOL_DIV,
) -> Verdict:
    """Guess whether ``sum_k terms[k]`` converges.

    With M terms the dyadic windows end at ``M, M/2, M/4, M/8``. The series is
    a member (convergent) when the partial sums over the last window vary by
    less than ``tol_conv``; it is a non-member when ``|S|`` grew by more than
    ``tol_conv`` over each of the last three windows without any increment
    falling below ``1 - tol_div`` of the previous one.

    Args:
        terms: At least 64 terms.
        tol_conv: Oscillation tolerance; default ``1e-6 * (1 + max |S|)``.
        tol_div: Allowed relative shrinkage between window increments.

    Returns:
        Verdict: Status with the measured oscillation, increments and ratios.

    Raises:
        InvalidInputError: If fewer than 64 terms are supplied.
    """
    values = np.asarray(terms, dtype=np.complex128)
    M = values.size
    if M < PROBE_MIN_TERMS:
        raise InvalidInputError(f"series_probe needs at least {PROBE_MIN_TERMS} terms, got {M}.")
    partial = prefix_sums(values)
    magnitude = np.abs(partial)
    if tol_conv is None:
        tol_conv = PROBE_REL_TOL_CONV * (1.0 + float(magnitude.max()))

    oscillation = _spread(partial[M // 2 :])
    ends = [M // 8, M // 4, M // 2, M]
    increments = [float(magnitude[b - 1] - magnitude[a - 1]) for a, b in zip(ends, ends[1:])]
    ratios = [b / a for a, b in zip(increments, increments[1:]) if a > 0]
    min_ratio = min(ratios) if len(ratios) == 2 else 0.0

    diagnostics = [
        Diagnostic(condition="terms", value=float(M), threshold=float(PROBE_MIN_TERMS)),
        Diagnostic(condition="partial_sum_abs", value=float(magnitude[-1]), threshold=0.0),
        Diagnostic(condition="oscillation_last_window", value=oscillation, threshold=tol_conv),
        Diagnostic(condition="min_window_increment", value=min(increments), threshold=tol_conv),
        Diagnostic(condition="min_increment_ratio", value=min_ratio, threshold=1.0 - tol_div),
    ]
    logger.debug("series_probe: M=%d oscillation=%.3e increments=%s", M, oscillation, increments)

    if oscillation < tol_conv:
        status = VerdictStatus.MEMBER
    elif min(increments) > tol_conv and min_ratio >= 1.0 - tol_div:
        status = VerdictStatus.NON_MEMBER
    else:
        status = VerdictStatus.INCONCLUSIVE
    return Verdict(status=status, diagnostics=diagnostics)


# ============================================================================
# Range membership
# ============================================================================


def _endpoint_diagnostics(x: ConvergentSeq) -> List[Diagnostic]:
    return [
        Diagnostic(condition="x0_zero", value=float(abs(x.prefix[0])), threshold=EXACT_TOL),
        Diagnostic(condition="limit_zero", value=float(abs(x.limit)), threshold=EXACT_TOL),
    ]


def _prefixed(verdict: Verdict, prefix: str) -> List[Diagnostic]:
    return [
        d.model_copy(update={"condition": f"{prefix}:{d.condition}"}) for d in verdict.diagnostics
    ]


def _probe_or_inconclusive(terms: np.ndarray, warnings: List[str]) -> Optional[Verdict]:
    try:
        return series_probe(terms)
    except InvalidInputError as exc:
        warnings.append(str(exc))
        return None


def log_weighted_sums(x: ConvergentSeq) -> np.ndarray:
    """``sum_{k=1}^{n} log(n/k) x_k / k`` for ``n = 1 .. N-1``."""
    k = np.arange(1, x.size, dtype=np.float64)
    weighted = x.prefix[1:] / k
    plain = prefix_sums(weighted)
    logged = prefix_sums(np.log(k) * weighted)
    return np.log(k) * plain - logged


def range_membership(x: ConvergentSeq, order: int = 1) -> Verdict:
    """Test ``x in Ran(I - T)`` (order 1) or ``x in Ran(I - T)^2`` (order 2).

    Order 1 checks ``x_0 = 0`` and ``lim x = 0`` exactly, then probes
    ``sum x_k / k``. Order 2 also needs that sum to vanish and the limit of
    ``sum_{k<=n} log(n/k) x_k / k`` to exist.

    Args:
        x: Sequence.
        order: 1 or 2.

    Returns:
        Verdict: Never raises for undecidable input; reports inconclusive instead.
    """
    if order not in (1, 2):
        raise InvalidInputError("Only orders 1 and 2 are supported.")
    diagnostics = _endpoint_diagnostics(x)
    warnings: List[str] = []
    exact_ok = all(d.value <= d.threshold for d in diagnostics)

    k = np.arange(1, x.size, dtype=np.float64)
    series = _probe_or_inconclusive(x.prefix[1:] / k, warnings)
    if series is not None:
        diagnostics += _prefixed(series, "series")

    if not exact_ok:
        return Verdict(status=VerdictStatus.NON_MEMBER, diagnostics=diagnostics, warnings=warnings)
    if series is None:
        return Verdict(status=VerdictStatus.INCONCLUSIVE, diagnostics=diagnostics, warnings=warnings)
    if order == 1 or series.status is not VerdictStatus.MEMBER:
        return Verdict(status=series.status, diagnostics=diagnostics, warnings=warnings)

    tol = next(d.threshold for d in series.diagnostics if d.condition == "oscillation_last_window")
    total = float(abs(np.sum(x.prefix[1:] / k)))
    diagnostics.append(Diagnostic(condition="series_sum_zero", value=total, threshold=tol))
    if total > tol:
        return Verdict(status=VerdictStatus.NON_MEMBER, diagnostics=diagnostics, warnings=warnings)

    sums = log_weighted_sums(x)
    log_probe = series_probe(np.diff(sums, prepend=0.0))
    diagnostics += _prefixed(log_probe, "log_weighted")
    return Verdict(status=log_probe.status, diagnostics=diagnostics, warnings=warnings)


# ============================================================================
# Preimages
# ============================================================================


def construct_preimage(x: ConvergentSeq, y0: complex = 0.0) -> PreimageResult:
    """Solve ``(I - T) y = x`` with ``y_0 = y0``.

    ``y_k = y0 + x_k + sum_{j=1}^{k} x_j / j`` for ``k >= 1``. The limit is the
    partial sum of the series; its uncertainty is the spread of the partial
    sums over the last dyadic window.

    Args:
        x: Sequence to invert.
        y0: Free value of the preimage at index 0.

    Returns:
        PreimageResult: The preimage, its limit uncertainty and the order-1 verdict.
    """
    y0 = complex(y0)
    membership = range_membership(x, 1)
    if membership.status is not VerdictStatus.MEMBER:
        logger.warning("Preimage requested for a sequence whose verdict is %s", membership.status.value)
        membership = membership.model_copy(
            update={"warnings": membership.warnings + ["preimage of a non-member: y need not converge"]}
        )
    k = np.arange(1, x.size, dtype=np.float64)
    partial = prefix_sums(x.prefix[1:] / k)
    prefix = np.empty(x.size, dtype=np.complex128)
    prefix[0] = y0
    prefix[1:] = y0 + x.prefix[1:] + partial
    if partial.size:
        limit = y0 + x.limit + partial[-1]
        uncertainty = _spread(partial[partial.size // 2 :])
    else:
        limit = y0 + x.limit
        uncertainty = 0.0
    return PreimageResult(
        sequence=ConvergentSeq(prefix=prefix, limit=limit),
        limit_uncertainty=uncertainty,
        membership=membership,
    )
