"""Spectral geometry of T and finite-section norms of ``T^n (I - T)``.

On c and on C[0, 1] the spectrum of T is the closed disc ``|z - 1/2| <= 1/2``;
on the half-line space it is the circle ``|z - 1/2| = 1/2``. The norm of
``C^n (I - C)`` for the lower-triangular Cesàro matrix C is the largest
absolute row sum. Rows are exact under truncation and are computed without
forming the matrix: a row of ``C^n (I - C)`` is ``(I - C)^T (C^T)^n e_k`` and
each application of ``C^T`` is a suffix sum.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.special import gammaln, xlogy

from app.exceptions import InvalidInputError
from app.models import FunctionSpace, KTRow, NormEstimate, SpectrumLocation, SpectrumVerdict
from app.utils import is_boundary_index, is_strictly_increasing
from config import KT_FULL_SWEEP_N, KT_REFINE_RADIUS, KT_ROW_STRIDE, SPECTRUM_TOL, WORKERS

logger = logging.getLogger(__name__)

ROW_BLOCK = 64

SEQUENCE_SPACE = "sequence"
SPACES = (SEQUENCE_SPACE, FunctionSpace.INTERVAL.value, FunctionSpace.HALFLINE.value)


# ============================================================================
# Spectrum and resolvent
# ============================================================================


def spectrum_classify(z: complex, space: str = SEQUENCE_SPACE) -> SpectrumVerdict:
    """Locate z relative to the spectrum of T on the given space.

    Args:
        z: Complex point.
        space: ``"sequence"``, ``"interval"`` (disc) or ``"halfline"`` (circle).

    Returns:
        SpectrumVerdict: Location and distance to the circle ``|z - 1/2| = 1/2``.
    """
    if space not in SPACES:
        raise InvalidInputError(f"Unknown space '{space}'. Choose from {list(SPACES)}.")
    radius = abs(complex(z) - 0.5)
    gap = radius - 0.5
    if abs(gap) <= SPECTRUM_TOL:
        return SpectrumVerdict(location=SpectrumLocation.BOUNDARY, distance_to_boundary=0.0)
    if gap > 0:
        return SpectrumVerdict(location=SpectrumLocation.EXTERIOR, distance_to_boundary=gap)
    if space == FunctionSpace.HALFLINE.value:
        # the open disc lies in the resolvent set on the half-line
        return SpectrumVerdict(location=SpectrumLocation.EXTERIOR, distance_to_boundary=-gap)
    return SpectrumVerdict(location=SpectrumLocation.INTERIOR, distance_to_boundary=-gap)


def resolvent_lower_bound(theta: float) -> float:
    """Lower bound ``1 / (1 - cos theta)`` on ``||(e^(i theta) - T)^-1||``.

    Evaluated as ``1 / (2 sin^2(theta/2))``.

    Raises:
        InvalidInputError: If theta is 0 or outside ``[-pi, pi]``.
    """
    if theta == 0.0 or abs(theta) > math.pi or not math.isfinite(theta):
        raise InvalidInputError("theta must satisfy 0 < |theta| <= pi.")
    return 1.0 / (2.0 * math.sin(0.5 * theta) ** 2)


def resolvent_table(thetas: Sequence[float]) -> List[Dict[str, float]]:
    """Rows ``theta, bound, two_over_theta_sq``."""
    return [
        {
            "theta": float(theta),
            "bound": resolvent_lower_bound(theta),
            "two_over_theta_sq": 2.0 / theta ** 2,
        }
        for theta in thetas
    ]


# ============================================================================
# Finite-section norms
# ============================================================================


def continuum_kt_norm(n: int) -> float:
    """``2 n^n e^-n / n!``, the row sum of ``T^n (I - T)`` as ``k -> inf``."""
    if n < 0:
        raise InvalidInputError("n must be non-negative.")
    return 2.0 * math.exp(float(xlogy(n, n)) - n - float(gammaln(n + 1.0)))


def _apply_transpose(block: np.ndarray, weights: np.ndarray) -> np.ndarray:
    scaled = block * weights
    return np.cumsum(scaled[:, ::-1], axis=1)[:, ::-1]


def _row_block_sums(rows: np.ndarray, powers: Sequence[int]) -> np.ndarray:
    """Absolute row sums of ``C^n (I - C)`` for a block of rows and sorted powers."""
    width = int(rows.max()) + 1
    weights = 1.0 / np.arange(1, width + 1, dtype=np.float64)
    block = np.zeros((rows.size, width))
    block[np.arange(rows.size), rows] = 1.0
    out = np.empty((len(powers), rows.size))
    done = 0
    for i, n in enumerate(powers):
        for _ in range(n - done):
            block = _apply_transpose(block, weights)
        done = n
        out[i] = np.abs(block - _apply_transpose(block, weights)).sum(axis=1)
    return out


def _row_sums(rows: np.ndarray, powers: Sequence[int], workers: int) -> np.ndarray:
    blocks = [rows[i : i + ROW_BLOCK] for i in range(0, rows.size, ROW_BLOCK)]
    if len(blocks) == 1 or workers <= 1:
        parts = [_row_block_sums(b, powers) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _row_block_sums(b, powers), blocks))
    return np.concatenate(parts, axis=1)


def _kt_estimates(
    n_list: Sequence[int], N: int, full_sweep: Optional[bool], workers: int
) -> List[NormEstimate]:
    n_list = [int(n) for n in n_list]
    if not n_list or not is_strictly_increasing(n_list) or n_list[0] < 0:
        raise InvalidInputError("Powers must be a non-empty, strictly increasing list of n >= 0.")
    if N < 2:
        raise InvalidInputError("Truncation N must be at least 2.")
    if full_sweep is None:
        full_sweep = N <= KT_FULL_SWEEP_N
    if full_sweep:
        rows = np.arange(N)
    else:
        rows = np.unique(np.append(np.arange(0, N, KT_ROW_STRIDE), N - 1))
    sums = _row_sums(rows, n_list, workers)

    estimates = []
    for i, n in enumerate(n_list):
        candidates, values = rows, sums[i]
        if not full_sweep:
            center = int(rows[int(np.argmax(values))])
            local = np.arange(max(0, center - KT_REFINE_RADIUS), min(N, center + KT_REFINE_RADIUS + 1))
            local = np.setdiff1d(local, rows)
            if local.size:
                extra = _row_sums(local, [n], 1)[0]
                candidates = np.concatenate((rows, local))
                values = np.concatenate((values, extra))
                order = np.argsort(candidates, kind="stable")
                candidates, values = candidates[order], values[order]
        j = int(np.argmax(values))
        argmax = int(candidates[j])
        saturated = is_boundary_index(argmax, N)
        if saturated:
            logger.warning("KT norm for n=%d peaks at row %d of N=%d; double N", n, argmax, N)
        estimates.append(
            NormEstimate(
                value=float(values[j]),
                argmax_index=argmax,
                boundary_saturated=saturated,
                truncation=N,
            )
        )
    return estimates


def finite_section_kt_norm(
    n: int, N: int, full_sweep: Optional[bool] = None, workers: int = WORKERS
) -> NormEstimate:
    """Largest absolute row sum of ``C^n (I - C)`` over rows ``k < N``.

    Up to ``KT_FULL_SWEEP_N`` rows every row is evaluated, so the value is the
    exact section norm and never decreases with N. Above that every fourth row
    is evaluated and the rows within ``KT_REFINE_RADIUS`` of the best one are
    added. The strided value is a lower bound that can miss a narrow peak, so
    it is not guaranteed to be monotone in N.

    Args:
        n: Power (>= 0).
        N: Truncation (>= 2).
        full_sweep: Force (True) or skip (False) the full sweep; None decides by N.
        workers: Threads for the row sweep.

    Returns:
        NormEstimate: A lower bound for ``||T^n (I - T)||`` with its argmax row.
    """
    return _kt_estimates([n], N, full_sweep, workers)[0]


def kt_decay_table(
    n_list: Sequence[int], N: int, full_sweep: Optional[bool] = None, workers: int = WORKERS
) -> List[KTRow]:
    """Finite-section norms for several powers, sharing the row iterations.

    Args:
        n_list: Strictly increasing powers.
        N: Truncation.
        full_sweep: Row selection, as in ``finite_section_kt_norm``.
        workers: Threads for the row sweep.

    Returns:
        List[KTRow]: One row per power with the scaled and comparison columns.
    """
    table = []
    for n, estimate in zip(n_list, _kt_estimates(n_list, N, full_sweep, workers)):
        table.append(
            KTRow(
                n=n,
                N=N,
                value=estimate.value,
                sqrt_scaled=math.sqrt(n) * estimate.value,
                argmax_row=estimate.argmax_index,
                boundary_flag=estimate.boundary_saturated,
                log_comparison=math.sqrt(math.log(n) / n) if n >= 2 else 0.0,
                continuum_limit=continuum_kt_norm(n),
            )
        )
    return table
