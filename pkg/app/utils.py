"""Utility functions for validation, scalar codecs and schedules.

This module provides the validators used by the value types, the JSON codec for
complex scalars, deterministic float formatting for reports and the dyadic
schedules shared by the orbit experiments.
"""
import math
from typing import List, Sequence, Tuple, Union

import numpy as np

from config import BOUNDARY_FRACTION

JsonScalar = Union[float, List[float]]


def is_finite_array(values: np.ndarray) -> bool:
    """Validate that every entry of an array is finite.

    Args:
        values: Real or complex array.

    Returns:
        bool: True if no entry is NaN or infinite, False otherwise.
    """
    return bool(np.all(np.isfinite(values)))


def is_valid_tolerance(value: float) -> bool:
    """Validate that a tolerance lies in the open interval (0, 1).

    Args:
        value: The tolerance to validate.

    Returns:
        bool: True if 0 < value < 1, False otherwise.
    """
    return 0.0 < value < 1.0


def is_strictly_increasing(values: Sequence[int]) -> bool:
    """Validate that a schedule is strictly increasing."""
    return all(b > a for a, b in zip(values, values[1:]))


def parse_scalar(value) -> complex:
    """Convert a JSON scalar into a complex number.

    Accepts a real number, a Python complex, or a two-element ``[re, im]`` list.

    Args:
        value: The raw scalar.

    Returns:
        complex: The parsed value.

    Raises:
        ValueError: If the value has the wrong shape or is not finite.
    """
    if isinstance(value, bool):
        raise ValueError("Booleans are not valid scalars.")
    if isinstance(value, (int, float, complex, np.number)):
        z = complex(value)
    elif isinstance(value, (list, tuple)) and len(value) == 2:
        re, im = value
        if isinstance(re, bool) or isinstance(im, bool):
            raise ValueError("Booleans are not valid scalars.")
        z = complex(float(re), float(im))
    else:
        raise ValueError(f"Scalar must be a number or [re, im], got {value!r}.")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError("Scalars must be finite.")
    return z


def parse_scalar_array(values) -> np.ndarray:
    """Convert a list of JSON scalars (or an array) into a complex128 array."""
    if isinstance(values, np.ndarray):
        return np.asarray(values, dtype=np.complex128)
    return np.array([parse_scalar(v) for v in values], dtype=np.complex128)


def encode_scalar(z: complex) -> JsonScalar:
    """Encode a scalar for JSON: a bare float when real, ``[re, im]`` otherwise."""
    z = complex(z)
    if z.imag == 0.0:
        return float(z.real)
    return [float(z.real), float(z.imag)]


def format_float(value: Union[int, float]) -> str:
    """Format a number with the shortest decimal that round-trips.

    Args:
        value: Integer or float.

    Returns:
        str: ``repr`` of the float (integers are printed as integers).
    """
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def dyadic_schedule(n_max: int, start: int = 1) -> List[int]:
    """Build the dyadic schedule ``start, 2*start, ...`` closed at ``n_max``.

    Args:
        n_max: Largest power to include (appended if not a power of two).
        start: First entry; 0 is allowed and is followed by 1.

    Returns:
        List[int]: Strictly increasing schedule.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative.")
    schedule: List[int] = []
    if start == 0:
        schedule.append(0)
        start = 1
    n = start
    while n <= n_max:
        schedule.append(n)
        n *= 2
    if n_max > 0 and (not schedule or schedule[-1] != n_max):
        schedule.append(n_max)
    return schedule


def default_rate_window(n_max: int) -> Tuple[int, int]:
    """Default fitting window ``[n_max/8, n_max]``."""
    return max(1, n_max // 8), n_max


def is_boundary_index(index: int, truncation: int) -> bool:
    """Check whether an index falls in the last 5% of a prefix.

    The last entry always counts as boundary.
    """
    width = max(1, math.ceil(BOUNDARY_FRACTION * truncation))
    return index >= truncation - width
