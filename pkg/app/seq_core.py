"""The sequence space c, the Cesàro operator and its dual.

``T`` maps x to its running means; it is lower triangular, so every prefix
operation here is exact. ``P`` projects onto the constants through ``x_0``.
On finitely supported functionals the dual operator ``S`` acts by a suffix sum
and ``Q`` keeps the ``pi_0`` and ``pi_inf`` components.
"""
import logging
from typing import List, Literal, Optional, Sequence, Union

import numpy as np

from app.exceptions import InvalidInputError
from app.models import ConvergentSeq, DualFunctional, NormEstimate, NormHistory, NormSample
from app.precision import prefix_sums
from app.utils import is_boundary_index, is_strictly_increasing

logger = logging.getLogger(__name__)

INF: Literal["inf"] = "inf"
Index = Union[int, Literal["inf"]]


# ============================================================================
# Operator on c
# ============================================================================


def cesaro_apply_prefix(prefix: np.ndarray, mode: Optional[str] = None) -> np.ndarray:
    """Running means of a prefix array."""
    counts = np.arange(1, prefix.size + 1, dtype=np.float64)
    return prefix_sums(prefix, mode) / counts


def cesaro_apply(x: ConvergentSeq, mode: Optional[str] = None) -> ConvergentSeq:
    """Apply the Cesàro operator.

    Args:
        x: Input sequence.
        mode: Prefix summation mode override.

    Returns:
        ConvergentSeq: Sequence of running means with the same limit.
    """
    return x.with_prefix(cesaro_apply_prefix(x.prefix, mode))


def power_iterate(x: ConvergentSeq, n: int, mode: Optional[str] = None) -> ConvergentSeq:
    """Compute ``T^n x`` by repeated application."""
    if n < 0:
        raise InvalidInputError("Power must be non-negative.")
    prefix = x.prefix
    for _ in range(n):
        prefix = cesaro_apply_prefix(prefix, mode)
    return x.with_prefix(prefix)


def identity_minus_cesaro(x: ConvergentSeq, order: int = 1) -> ConvergentSeq:
    """Apply ``I - T`` ``order`` times; the limit becomes 0."""
    if order < 0:
        raise InvalidInputError("Order must be non-negative.")
    prefix = x.prefix
    limit = x.limit
    for _ in range(order):
        prefix = prefix - cesaro_apply_prefix(prefix)
        limit = 0.0
    return ConvergentSeq(prefix=prefix, limit=limit)


def project_P(x: ConvergentSeq) -> ConvergentSeq:
    """Project onto the constants: ``Px = x_0 * e_inf``."""
    return ConvergentSeq.constant(x.prefix[0], x.size)


# ============================================================================
# Functionals and norms
# ============================================================================


def functional_eval(x: ConvergentSeq, index: Index) -> complex:
    """Evaluate ``pi_index(x)``.

    Args:
        x: Sequence.
        index: Coordinate index or ``INF`` for the limit functional.

    Returns:
        complex: The coordinate or the stored limit.

    Raises:
        InvalidInputError: If the index lies outside the stored prefix.
    """
    if index == INF:
        return complex(x.limit)
    if not isinstance(index, (int, np.integer)) or index < 0:
        raise InvalidInputError(f"Invalid functional index: {index!r}")
    if index >= x.size:
        raise InvalidInputError(
            f"Index {index} is outside the stored prefix of length {x.size}."
        )
    return complex(x.prefix[index])


def apply_functional(phi: DualFunctional, x: ConvergentSeq) -> complex:
    """Action ``a_inf * lim x + sum_k a_k x_k``."""
    if phi.coeffs.size > x.size:
        raise InvalidInputError("Functional support exceeds the stored prefix.")
    return complex(phi.a_inf * x.limit + np.dot(phi.coeffs, x.prefix[: phi.coeffs.size]))


def sup_distance(x: ConvergentSeq, y: ConvergentSeq) -> NormEstimate:
    """Truncated sup-norm distance with tail accounting.

    The limit difference stands in for the supremum over the unstored tail.

    Args:
        x: First sequence.
        y: Second sequence with the same prefix length.

    Returns:
        NormEstimate: ``max(max_k |x_k - y_k|, |lim x - lim y|)``.

    Raises:
        InvalidInputError: If the prefix lengths differ.
    """
    if x.size != y.size:
        raise InvalidInputError(
            f"Prefix lengths differ: {x.size} != {y.size}."
        )
    diff = np.abs(x.prefix - y.prefix)
    argmax = int(np.argmax(diff))
    prefix_max = float(diff[argmax])
    limit_term = float(abs(x.limit - y.limit))
    value = max(prefix_max, limit_term)
    saturated = prefix_max > 0 and prefix_max >= limit_term and is_boundary_index(argmax, x.size)
    if saturated:
        logger.debug("sup_distance argmax %d sits in the last 5%% of N=%d", argmax, x.size)
    return NormEstimate(
        value=value,
        argmax_index=argmax,
        boundary_saturated=saturated,
        truncation=x.size,
        limit_dominated=limit_term > prefix_max,
    )


def sup_norm(x: ConvergentSeq) -> NormEstimate:
    """Truncated sup norm of a sequence."""
    return sup_distance(x, ConvergentSeq.constant(0.0, x.size))


# ============================================================================
# Dual operator
# ============================================================================


def dual_apply(phi: DualFunctional) -> DualFunctional:
    """Apply the dual operator S: ``b_j = sum_{k >= j} a_k / (k + 1)``."""
    a = phi.coeffs
    weighted = a / np.arange(1, a.size + 1, dtype=np.float64)
    b = np.cumsum(weighted[::-1])[::-1]
    return DualFunctional(a_inf=phi.a_inf, coeffs=b)


def dual_project_Q(phi: DualFunctional) -> DualFunctional:
    """Project onto ``span{pi_0, pi_inf}``: ``Q phi = xi_0 pi_0 + xi_inf pi_inf``."""
    return DualFunctional(a_inf=phi.a_inf, coeffs=[complex(np.sum(phi.coeffs))])


def dual_distance(phi: DualFunctional, psi: DualFunctional) -> float:
    """Representation norm of ``phi - psi``."""
    size = max(phi.coeffs.size, psi.coeffs.size)
    a = np.zeros(size, dtype=np.complex128)
    b = np.zeros(size, dtype=np.complex128)
    a[: phi.coeffs.size] = phi.coeffs
    b[: psi.coeffs.size] = psi.coeffs
    return float(abs(phi.a_inf - psi.a_inf) + np.sum(np.abs(a - b)))


def dual_orbit(phi: DualFunctional, schedule: Sequence[int]) -> NormHistory:
    """Distances ``||S^n phi - Q phi||`` over a schedule.

    Args:
        phi: Finitely supported functional.
        schedule: Strictly increasing non-negative powers.

    Returns:
        NormHistory: One sample per scheduled power.
    """
    if not is_strictly_increasing(list(schedule)) or (schedule and schedule[0] < 0):
        raise InvalidInputError("Schedule must be strictly increasing and non-negative.")
    target = dual_project_Q(phi)
    current = phi
    done = 0
    samples: List[NormSample] = []
    for n in schedule:
        for _ in range(n - done):
            current = dual_apply(current)
        done = n
        samples.append(NormSample(n=n, value=dual_distance(current, target)))
    return NormHistory(samples=samples, truncation=max(1, phi.coeffs.size))
