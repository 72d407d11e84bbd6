import math

import numpy as np
import pytest

from app.exceptions import QuadratureError
from app.models import QuadratureConfig
from app.quadrature import (
    gamma_density,
    gamma_horizon,
    gamma_weighted_integral,
    gauss_legendre_rule,
    integrate,
)


class TestIntegrate:
    """Tests para la cuadratura adaptiva de Gauss–Legendre."""

    def test_rule_is_read_only(self):
        """Test: la regla en caché no se puede modificar."""
        nodes, weights = gauss_legendre_rule(20)
        assert weights.sum() == pytest.approx(2.0)
        with pytest.raises(ValueError):
            nodes[0] = 0.0

    def test_polynomial(self):
        """Test: polinomio integrado exactamente."""
        result = integrate(lambda t: 3 * t ** 2 - t, 0.0, 2.0)
        assert result.value == pytest.approx(6.0, rel=1e-14)
        assert result.error <= 1e-10

    def test_complex_integrand(self):
        """Test: integrando complejo."""
        result = integrate(lambda t: np.exp(1j * t), 0.0, math.pi)
        assert abs(result.value - 2j) < 1e-12

    def test_breakpoints_for_kinks(self):
        """Test: |t - 0.3| con punto de quiebre."""
        result = integrate(lambda t: np.abs(t - 0.3), 0.0, 1.0, breakpoints=[0.3])
        assert result.value == pytest.approx(0.5 * 0.3 ** 2 + 0.5 * 0.7 ** 2, rel=1e-13)

    def test_magnitude(self):
        """Test: magnitude integra el valor absoluto."""
        result = integrate(np.sin, 0.0, 2.0 * math.pi)
        assert abs(result.value) < 1e-12
        assert result.magnitude == pytest.approx(4.0, rel=1e-10)

    def test_empty_interval(self):
        """Test: a == b devuelve 0."""
        assert integrate(np.exp, 1.0, 1.0).value == 0.0

    def test_reversed_limits(self):
        """Test: b < a rechazado."""
        with pytest.raises(ValueError):
            integrate(np.exp, 1.0, 0.0)

    def test_panel_budget(self):
        """Test: presupuesto agotado con singularidad."""
        cfg = QuadratureConfig(max_panels=8)
        with pytest.raises(QuadratureError) as info:
            integrate(lambda t: 1.0 / np.sqrt(np.abs(t - 0.123456)), 0.0, 1.0, cfg)
        assert info.value.achieved_error is not None


class TestGammaWeights:
    """Tests para las integrales con densidad Gamma."""

    def test_density_normalised(self):
        """Test: la densidad integra 1."""
        for n in (1, 2, 10, 100):
            result = integrate(lambda u: gamma_density(u, n), 0.0, gamma_horizon(n, 1e-14))
            assert result.value == pytest.approx(1.0, abs=1e-12)

    def test_density_at_zero(self):
        """Test: gamma_n(0) = 0 para n >= 2 y 1 para n = 1."""
        assert gamma_density(np.array([0.0]), 1)[0] == 1.0
        assert gamma_density(np.array([0.0]), 3)[0] == 0.0

    def test_laplace_transform(self):
        """Test: E[e^-u] = 2^-n."""
        for n in (1, 5, 20):
            result = gamma_weighted_integral(lambda u: np.exp(-u), n)
            assert result.value == pytest.approx(2.0 ** -n, rel=1e-10)

    def test_monomial_moment(self):
        """Test: E[e^(-m u)] = (m+1)^-n, autovalores de T."""
        for m in range(6):
            for n in (1, 7, 20):
                result = gamma_weighted_integral(lambda u: np.exp(-m * u), n)
                assert abs(result.value - (m + 1.0) ** -n) <= 1e-10

    def test_shape_validation(self):
        """Test: n = 0 rechazado."""
        with pytest.raises(ValueError):
            gamma_weighted_integral(np.ones_like, 0)
