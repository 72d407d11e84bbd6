import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.precision import (
    CompensatedSum,
    DoubleDouble,
    compensated_cumsum,
    prefix_sums,
    two_prod,
    two_sum,
)

moderate = st.floats(min_value=-1e100, max_value=1e100, allow_nan=False, allow_infinity=False)


class TestErrorFreeTransforms:
    """Tests para two_sum y two_prod."""

    @settings(max_examples=200)
    @given(moderate, moderate)
    def test_two_sum_is_exact(self, a, b):
        """Test: s + e == a + b en aritmética exacta."""
        s, e = two_sum(a, b)
        assert Fraction(s) + Fraction(e) == Fraction(a) + Fraction(b)

    @settings(max_examples=200)
    @given(st.floats(min_value=-1e50, max_value=1e50, allow_nan=False),
           st.floats(min_value=-1e50, max_value=1e50, allow_nan=False))
    def test_two_prod_is_exact(self, a, b):
        """Test: p + e == a * b en aritmética exacta."""
        p, e = two_prod(a, b)
        if abs(a * b) > 1e-250:
            assert Fraction(p) + Fraction(e) == Fraction(a) * Fraction(b)


class TestDoubleDouble:
    """Tests para la aritmética double-double."""

    def test_from_int_is_exact(self):
        """Test: enteros grandes se representan exactamente."""
        value = 2 ** 80 + 12345
        dd = DoubleDouble.from_int(value)
        assert Fraction(dd.hi) + Fraction(dd.lo) == value

    def test_division_precision(self):
        """Test: 1/3 con ~32 dígitos."""
        third = DoubleDouble(1.0) / DoubleDouble(3.0)
        error = Fraction(third.hi) + Fraction(third.lo) - Fraction(1, 3)
        assert abs(error) < Fraction(1, 10 ** 30)

    def test_cancellation_survives(self):
        """Test: (1 + 1e-20) - 1 recupera 1e-20."""
        x = DoubleDouble(1.0) + DoubleDouble(1e-20)
        assert float(x - 1.0) == pytest.approx(1e-20, rel=1e-12)

    def test_compensated_sum(self):
        """Test: suma compensada de términos alternantes grandes."""
        acc = CompensatedSum()
        for term in (1e16, 1.0, -1e16, 1.0):
            acc.add(term)
        assert acc.value == 2.0
        assert acc.error_estimate() < 1e-14


class TestPrefixSums:
    """Tests para las sumas prefijas."""

    def test_compensated_matches_fsum(self):
        """Test: cada suma prefija coincide con math.fsum."""
        rng = np.random.default_rng(3)
        values = rng.standard_normal(5000) * 10.0 ** rng.integers(-8, 8, 5000)
        sums = compensated_cumsum(values)
        for i in (0, 10, 999, 4999):
            assert sums[i] == pytest.approx(math.fsum(values[: i + 1]), rel=1e-15, abs=1e-300)

    def test_complex_input(self):
        """Test: partes real e imaginaria por separado."""
        values = np.array([1 + 2j, 3 - 1j, -4 + 0.5j])
        assert np.allclose(compensated_cumsum(values), np.cumsum(values))

    def test_modes(self):
        """Test: los modos naive y compensated coinciden en datos simples."""
        values = np.arange(10, dtype=np.float64)
        assert np.array_equal(prefix_sums(values, "naive"), prefix_sums(values, "compensated"))

    def test_unknown_mode(self):
        """Test: modo desconocido."""
        with pytest.raises(ValueError):
            prefix_sums(np.ones(3), "kahan")
