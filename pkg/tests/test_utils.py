import numpy as np
import pytest

from app.utils import (
    dyadic_schedule,
    encode_scalar,
    format_float,
    is_boundary_index,
    parse_scalar,
    parse_scalar_array,
)


class TestScalars:
    """Tests para el códec de escalares."""

    def test_parse(self):
        """Test: real, complejo y par [re, im]."""
        assert parse_scalar(2) == 2 + 0j
        assert parse_scalar([1.0, -2.0]) == 1 - 2j
        assert parse_scalar(0.5j) == 0.5j

    @pytest.mark.parametrize("value", [True, [1.0], "1", float("inf"), [0.0, float("nan")]])
    def test_parse_rejects(self, value):
        """Test: booleanos, formas erróneas y no finitos."""
        with pytest.raises(ValueError):
            parse_scalar(value)

    def test_encode(self):
        """Test: real como float, complejo como par."""
        assert encode_scalar(3.0) == 3.0
        assert encode_scalar(1 + 2j) == [1.0, 2.0]

    def test_array(self):
        """Test: lista mixta a complex128."""
        values = parse_scalar_array([1, [0, 1]])
        assert values.dtype == np.complex128
        assert values.tolist() == [1 + 0j, 1j]

    def test_format_float(self):
        """Test: repr de ida y vuelta, enteros y booleanos."""
        assert format_float(0.1) == "0.1"
        assert format_float(np.int64(7)) == "7"
        assert format_float(True) == "1"
        assert float(format_float(1 / 3)) == 1 / 3


class TestSchedules:
    """Tests para los programas diádicos."""

    def test_powers_of_two(self):
        """Test: 1, 2, 4, ..., n_max."""
        assert dyadic_schedule(16) == [1, 2, 4, 8, 16]

    def test_closed_at_n_max(self):
        """Test: n_max no potencia de dos se agrega."""
        assert dyadic_schedule(12) == [1, 2, 4, 8, 12]

    def test_start_at_zero(self):
        """Test: comienzo en 0."""
        assert dyadic_schedule(4, start=0) == [0, 1, 2, 4]

    def test_negative(self):
        """Test: n_max negativo."""
        with pytest.raises(ValueError):
            dyadic_schedule(-1)

    def test_boundary_index(self):
        """Test: último 5% del prefijo."""
        assert is_boundary_index(99, 100)
        assert is_boundary_index(95, 100)
        assert not is_boundary_index(94, 100)
        assert is_boundary_index(0, 1)
