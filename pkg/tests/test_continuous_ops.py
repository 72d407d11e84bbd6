import math

import numpy as np
import pytest

from app.continuous_ops import (
    build_function,
    cesaro_apply_fn,
    construct_preimage_fn,
    ladder_edges,
    orbit_norms_fn,
    power_eval_fn,
    power_eval_log,
    range_membership_fn,
    sine_integral_by_parts,
    talpha_power_fn,
)
from app.exceptions import InvalidInputError
from app.models import FunctionSpec, VerdictStatus
from app.orbit_engine import fit_rate
from app.quadrature import integrate
from config import OSCILLATION_CUTOFF


def make(space: str, kind: str, **payload):
    """Atajo para construir un handle desde su especificación."""
    return build_function(FunctionSpec(space=space, kind=kind, **payload))


RATE_SCHEDULE = [64, 128, 256, 512, 1024]


@pytest.fixture(name="rng")
def rng_fixture():
    """Generador con semilla fija."""
    return np.random.default_rng(11)


@pytest.fixture(name="monomial")
def monomial_fixture():
    """f(t) = t en [0, 1]."""
    return make("interval", "poly", coeffs=[0.0, 1.0])


class TestBuildFunction:
    """Tests para el catálogo de funciones."""

    def test_poly_on_halfline_needs_constant(self):
        """Test: polinomio no constante en la semirrecta."""
        with pytest.raises(InvalidInputError):
            make("halfline", "poly", coeffs=[0.0, 1.0])

    @pytest.mark.parametrize(
        "space,kind", [("halfline", "loginv"), ("interval", "sinlog"), ("interval", "rational")]
    )
    def test_wrong_space(self, space, kind):
        """Test: expresión fuera de su espacio."""
        with pytest.raises(InvalidInputError):
            make(space, kind)

    def test_samples_must_start_at_zero(self):
        """Test: muestras sin t = 0."""
        with pytest.raises(InvalidInputError):
            make("interval", "samples", points=[[0.5, 1.0], [1.0, 0.0]])

    def test_empty_poly_rejected(self):
        """Test: polinomio sin coeficientes."""
        with pytest.raises(ValueError):
            FunctionSpec(space="interval", kind="poly")

    def test_boundary_data(self):
        """Test: f(0) y límite declarados."""
        f = make("halfline", "expdecay", scale=2.0)
        assert f.value_at_0 == 2.0
        assert f.limit_at_inf == 0
        assert f(np.array([1.0]))[0] == pytest.approx(2.0 / math.e)


class TestPowers:
    """Tests para T^n sobre funciones."""

    @pytest.mark.parametrize("m", [0, 1, 2, 3, 4, 5])
    def test_monomials_are_eigenfunctions(self, m):
        """Test: T^n t^m = t^m / (m+1)^n para n <= 20 sobre una grilla."""
        f = make("interval", "poly", coeffs=[0.0] * m + [1.0])
        grid = np.linspace(0.0, 1.0, 17)
        for n in range(1, 21):
            errors = [abs(power_eval_fn(f, n, t) - t ** m / (m + 1) ** n) for t in grid]
            assert max(errors) <= 1e-8

    @pytest.mark.parametrize(
        "space,kind,payload,upper",
        [
            ("interval", "poly", {"coeffs": [0.3, -1.0, 2.0, 0.5]}, 1.0),
            ("halfline", "rational", {}, 200.0),
            ("halfline", "sinlog", {}, 600.0),
        ],
    )
    def test_single_power_matches_mean(self, rng, space, kind, payload, upper):
        """Test: T^1 f coincide con el handle Tf y con (1/t) int_0^t f."""
        f = make(space, kind, **payload)
        Tf = cesaro_apply_fn(f)
        for t in rng.uniform(0.05, upper, size=6):
            value = power_eval_fn(f, 1, t)
            assert abs(value - Tf(np.array([t]))[0]) <= 1e-8
            breaks = math.pi * np.arange(1, int(t / math.pi) + 1)
            direct = integrate(f, 0.0, t, breakpoints=breaks).value / t
            assert abs(value - direct) <= 1e-8

    def test_value_at_zero_is_kept(self, monomial):
        """Test: (T^n f)(0) = f(0)."""
        f = make("halfline", "expdecay")
        assert power_eval_fn(f, 5, 0.0) == 1.0
        assert power_eval_fn(monomial, 0, 0.3) == pytest.approx(0.3)

    def test_outside_interval(self, monomial):
        """Test: t > 1 en [0, 1]."""
        with pytest.raises(InvalidInputError):
            power_eval_fn(monomial, 1, 1.5)

    def test_piecewise_linear_samples(self):
        """Test: (Tf)(1) = int_0^1 f con quiebre en 1/2."""
        f = make("interval", "samples", points=[[0.0, 0.0], [0.5, 1.0], [1.0, 0.0]])
        assert abs(power_eval_fn(f, 1, 1.0) - 0.5) <= 1e-12

    def test_cesaro_handle(self, monomial):
        """Test: Tf como handle con caché."""
        g = cesaro_apply_fn(monomial)
        assert g(np.array([0.0, 0.5]))[1] == pytest.approx(0.25, abs=1e-12)
        assert g.value_at_0 == 0

    def test_halfline_mean(self):
        """Test: (Tf)(t) = (1/t) int_0^t f sin y con la rama oscilatoria."""
        f = make("halfline", "sinlog")
        for t in (50.0, 2.0 * OSCILLATION_CUTOFF * math.e):
            breaks = math.pi * np.arange(1, int(t / math.pi) + 1)
            direct = integrate(f, 0.0, t, breakpoints=breaks).value / t
            assert abs(power_eval_log(f, 1, math.log(t)) - direct) <= 1e-8

    def test_sine_by_parts(self):
        """Test: int_a^inf sin(s)/s^2 por partes frente a la cuadratura."""
        a = 800.0
        value = sine_integral_by_parts(lambda s: s ** -2.0, a, None)
        breaks = math.pi * np.arange(math.ceil(a / math.pi), math.floor(20000.0 / math.pi) + 1)
        direct = integrate(lambda s: np.sin(s) / s ** 2, a, 20000.0, breakpoints=breaks).value
        direct += sine_integral_by_parts(lambda s: s ** -2.0, 20000.0, None)
        assert abs(value - direct) <= 1e-12


class TestRangeMembership:
    """Tests para Ran(I - T) sobre funciones."""

    def test_ladder(self):
        """Test: 0, 1, 2, 4, ... en la variable logarítmica."""
        edges = ladder_edges()
        assert edges[:4].tolist() == [0.0, 1.0, 2.0, 4.0]

    def test_monomial_member(self, monomial):
        """Test: t está en el rango."""
        assert range_membership_fn(monomial).status is VerdictStatus.MEMBER

    def test_constant_excluded(self):
        """Test: f(0) != 0 en modo directo."""
        f = make("interval", "poly", coeffs=[1.0])
        verdict = range_membership_fn(f)
        assert verdict.status is VerdictStatus.NON_MEMBER
        assert range_membership_fn(f, mode="centered").status is VerdictStatus.MEMBER

    def test_loginv_excluded(self):
        """Test: 1/(1 + log(1/t)) diverge en log."""
        verdict = range_membership_fn(make("interval", "loginv"))
        assert verdict.status is VerdictStatus.NON_MEMBER

    def test_loginv2_member(self):
        """Test: 1/(1 + log(1/t))^2 converge."""
        assert range_membership_fn(make("interval", "loginv2")).status is VerdictStatus.MEMBER

    def test_sinlog_member(self):
        """Test: sin(t)/log(2+t) en modo centrado."""
        verdict = range_membership_fn(make("halfline", "sinlog"), mode="centered")
        assert verdict.status is VerdictStatus.MEMBER
        assert any(d.condition.startswith("infinity:") for d in verdict.diagnostics)

    def test_bad_mode(self, monomial):
        """Test: modo desconocido."""
        with pytest.raises(InvalidInputError):
            range_membership_fn(monomial, mode="shifted")


class TestPreimage:
    """Tests para las preimágenes de funciones."""

    def test_linear(self, monomial):
        """Test: h = 2t - 1 resuelve (I - T) h = t."""
        h = construct_preimage_fn(monomial)
        t = np.array([0.0, 0.2, 0.5, 1.0])
        assert np.allclose(h(t), 2.0 * t - 1.0, atol=1e-12)
        assert h.value_at_0 == pytest.approx(-1.0)

    def test_round_trip_random_polynomial(self, rng):
        """Test: (I - T) h = f en 64 puntos para un polinomio con f(0) = 0."""
        coeffs = [0.0] + rng.uniform(-1.0, 1.0, size=4).tolist()
        f = make("interval", "poly", coeffs=coeffs)
        assert range_membership_fn(f).status is VerdictStatus.MEMBER
        h = construct_preimage_fn(f)
        Th = cesaro_apply_fn(h)
        t = np.linspace(0.0, 1.0, 64)
        residual = h(t) - Th(t) - f(t)
        assert np.max(np.abs(residual)) <= 1e-8

    def test_round_trip_halfline(self):
        """Test: (I - T) h = f para t/(1+t)^2."""
        f = make("halfline", "rational")
        h = construct_preimage_fn(f)
        assert h.value_at_0 == pytest.approx(-0.5, abs=1e-10)
        assert h.limit_at_inf == pytest.approx(0.5, abs=1e-10)
        Th = cesaro_apply_fn(h)
        for t in (0.5, 3.0):
            residual = h(np.array([t]))[0] - Th(np.array([t]))[0] - f(np.array([t]))[0]
            assert abs(residual) <= 1e-8

    def test_non_member_refused(self):
        """Test: no perteneciente sin force."""
        f = make("interval", "loginv")
        with pytest.raises(InvalidInputError):
            construct_preimage_fn(f)
        h = construct_preimage_fn(f, force=True)
        assert h.label == "preimage(loginv)"


class TestOrbits:
    """Tests para las órbitas sobre funciones."""

    def test_linear_orbit(self, monomial):
        """Test: sup |T^n t| = 2^-n en t = 1."""
        history = orbit_norms_fn(monomial, [0, 1, 2, 5], grid_size=17, workers=1)
        assert np.allclose(history.values, [1.0, 0.5, 0.25, 1.0 / 32.0], atol=1e-10)
        assert history.samples[-1].peak_log_index == pytest.approx(0.0)

    def test_limit_term(self):
        """Test: |lim f - f(0)| = 1 domina para e^-t."""
        f = make("halfline", "expdecay")
        history = orbit_norms_fn(f, [1, 4], grid_size=16, workers=2)
        assert np.allclose(history.values, 1.0)

    def test_bad_schedule(self, monomial):
        """Test: programa decreciente."""
        with pytest.raises(InvalidInputError):
            orbit_norms_fn(monomial, [3, 1])


class TestRate:
    """Tests para la tasa n^(-1/2) de las órbitas sobre funciones."""

    def test_interval_member(self):
        """Test: 1/(1 + log(1/t))^2 decae con pendiente <= -0.45."""
        f = make("interval", "loginv2")
        assert range_membership_fn(f, mode="centered").status is VerdictStatus.MEMBER
        history = orbit_norms_fn(f, RATE_SCHEDULE, 64, workers=2)
        assert np.all(np.diff(history.values) < 0.0)
        assert fit_rate(history, (64, 1024)).slope <= -0.45

    def test_halfline_sinlog(self):
        """Test: sin(t)/log(2+t) decae con pendiente <= -0.45."""
        f = make("halfline", "sinlog")
        assert range_membership_fn(f, mode="centered").status is VerdictStatus.MEMBER
        history = orbit_norms_fn(f, RATE_SCHEDULE, 64, workers=2)
        assert np.all(np.diff(history.values) < 0.0)
        assert not any(s.boundary_saturated for s in history.samples)
        assert fit_rate(history, (64, 1024)).slope <= -0.45


class TestTalpha:
    """Tests para T_alpha sobre funciones."""

    @pytest.mark.parametrize("alpha", [0.1, 0.25, 0.4])
    def test_monomials(self, alpha):
        """Test: T_alpha^n t^m = ((1/(m+1) - alpha)/(1 - alpha))^n t^m."""
        for m in (1, 2):
            f = make("interval", "poly", coeffs=[0.0] * m + [1.0])
            for n in (1, 4):
                t = 0.8
                expected = ((1.0 / (m + 1) - alpha) / (1.0 - alpha)) ** n * t ** m
                assert abs(talpha_power_fn(f, n, t, alpha) - expected) <= 1e-9

    def test_alpha_range(self, monomial):
        """Test: alpha fuera de (0, 1)."""
        with pytest.raises(InvalidInputError):
            talpha_power_fn(monomial, 2, 0.5, 1.0)
