import numpy as np
import pytest

from app.exceptions import InvalidInputError
from app.models import ConvergentSeq, VerdictStatus
from app.orbit_engine import sequence_catalog_entry
from app.range_analysis import (
    construct_preimage,
    log_weighted_sums,
    range_membership,
    series_probe,
)
from app.seq_core import identity_minus_cesaro

MEMBER_TERMS = 2 ** 21


def reciprocal_shift(N: int, first: float = 0.5) -> ConvergentSeq:
    """x_0 = 0, x_1 = first, x_k = 1/(k+1) para k >= 2."""
    k = np.arange(N, dtype=np.float64)
    prefix = 1.0 / (k + 1.0)
    prefix[0] = 0.0
    prefix[1] = first
    return ConvergentSeq(prefix=prefix, limit=0.0)


def balanced_perturbation(rng, support: int, order: int) -> np.ndarray:
    """Perturbación aleatoria en los índices 1..support que anula los momentos necesarios.

    Con orden 1 sólo impone sum d = 0; con orden 2 también
    sum_j d_j (H_{support+1} - H_j) = 0, de modo que (I - T)^2 (L + d) tiene soporte finito.
    """
    d = rng.standard_normal(support)
    j = np.arange(1, support + 1, dtype=np.float64)
    harmonic = np.cumsum(1.0 / j)
    constraints = [np.ones(support)]
    if order == 2:
        constraints.append(harmonic[-1] + 1.0 / (support + 1.0) - harmonic)
    A = np.vstack(constraints)
    d -= A.T @ np.linalg.solve(A @ A.T, A @ d)
    return d


def perturbed_constant(rng, N: int, support: int, order: int) -> ConvergentSeq:
    """y = L + d con y_0 = L = lim y."""
    level = rng.uniform(-2.0, 2.0)
    prefix = np.full(N, level)
    prefix[1 : support + 1] += balanced_perturbation(rng, support, order)
    return ConvergentSeq(prefix=prefix, limit=level)


def condition(verdict, name):
    return next(d for d in verdict.diagnostics if d.condition == name)


class TestSeriesConvergence:
    """Tests para la sonda de convergencia de series."""

    def test_too_few_terms(self):
        """Test: menos de 64 términos."""
        with pytest.raises(InvalidInputError):
            series_probe(np.ones(63))

    def test_telescoping_member(self):
        """Test: sum 1/(k(k+1)) converge."""
        k = np.arange(1, MEMBER_TERMS + 1, dtype=np.float64)
        verdict = series_probe(1.0 / (k * (k + 1.0)))
        assert verdict.status is VerdictStatus.MEMBER
        assert condition(verdict, "partial_sum_abs").value == pytest.approx(1.0, abs=1e-6)

    def test_harmonic_non_member(self):
        """Test: la serie armónica diverge."""
        k = np.arange(1, 4097, dtype=np.float64)
        verdict = series_probe(1.0 / k)
        assert verdict.status is VerdictStatus.NON_MEMBER
        assert condition(verdict, "min_window_increment").value == pytest.approx(np.log(2.0), abs=2e-3)

    def test_alternating_inconclusive(self):
        """Test: (-1)^k no converge ni crece."""
        verdict = series_probe((-1.0) ** np.arange(4096))
        assert verdict.status is VerdictStatus.INCONCLUSIVE

    def test_diagnostics_present(self):
        """Test: el veredicto lleva todas las condiciones medidas."""
        verdict = series_probe(np.zeros(64))
        names = {d.condition for d in verdict.diagnostics}
        assert {"terms", "oscillation_last_window", "min_increment_ratio"} <= names
        assert verdict.status is VerdictStatus.MEMBER


class TestRangeMembership:
    """Tests para la pertenencia a Ran(I - T)."""

    def test_unit_vector_excluded(self):
        """Test: e_0 no está en el rango."""
        verdict = range_membership(ConvergentSeq.unit(0, 128))
        assert verdict.status is VerdictStatus.NON_MEMBER
        assert condition(verdict, "x0_zero").value == 1.0

    def test_nonzero_limit_excluded(self):
        """Test: límite distinto de cero."""
        verdict = range_membership(sequence_catalog_entry("step", 128))
        assert verdict.status is VerdictStatus.NON_MEMBER

    def test_too_short_is_inconclusive(self):
        """Test: prefijo corto produce advertencia, no excepción."""
        verdict = range_membership(ConvergentSeq(prefix=np.zeros(10), limit=0.0))
        assert verdict.status is VerdictStatus.INCONCLUSIVE
        assert verdict.warnings

    def test_member(self):
        """Test: x_k = 1/(k+1) está en Ran(I - T)."""
        verdict = range_membership(reciprocal_shift(MEMBER_TERMS + 1, first=0.5))
        assert verdict.status is VerdictStatus.MEMBER

    def test_slow_sequence_excluded(self):
        """Test: x_k = 1/log(k+2) no está en el rango."""
        verdict = range_membership(sequence_catalog_entry("log-slow", 2 ** 16))
        assert verdict.status is VerdictStatus.NON_MEMBER

    def test_order_two_member(self):
        """Test: (I - T)^2 (e_0 - e_1) = (0, -1/2, 1/3, 1/4, ...)."""
        y = np.zeros(64)
        y[:2] = [1.0, -1.0]
        x = identity_minus_cesaro(ConvergentSeq(prefix=y, limit=0.0), order=2)
        assert np.allclose(x.prefix[:4], [0.0, -0.5, 1.0 / 3.0, 0.25])
        verdict = range_membership(reciprocal_shift(MEMBER_TERMS + 1, first=-0.5), order=2)
        assert verdict.status is VerdictStatus.MEMBER

    def test_order_two_needs_zero_sum(self):
        """Test: sum x_k / k = 1 excluye Ran(I - T)^2."""
        verdict = range_membership(reciprocal_shift(MEMBER_TERMS + 1, first=0.5), order=2)
        assert verdict.status is VerdictStatus.NON_MEMBER
        assert condition(verdict, "series_sum_zero").value == pytest.approx(1.0, abs=1e-5)

    @pytest.mark.parametrize("seed", [1, 2, 3, 4])
    def test_image_of_random_sequence(self, seed):
        """Test: x = (I - T) y con y_0 = lim y pertenece a Ran(I - T)."""
        rng = np.random.default_rng(seed)
        y = perturbed_constant(rng, 512, 40, order=1)
        x = identity_minus_cesaro(y)
        assert abs(x.prefix[0]) <= 1e-12
        assert range_membership(x).status is VerdictStatus.MEMBER

    @pytest.mark.parametrize("seed", [5, 6, 7])
    def test_square_image_of_random_sequence(self, seed):
        """Test: x = (I - T)^2 y pertenece a Ran(I - T)^2."""
        rng = np.random.default_rng(seed)
        y = perturbed_constant(rng, 1024, 40, order=2)
        x = identity_minus_cesaro(y, order=2)
        verdict = range_membership(x, order=2)
        assert verdict.status is VerdictStatus.MEMBER
        assert condition(verdict, "series_sum_zero").value < 1e-9
        assert range_membership(x, order=1).status is VerdictStatus.MEMBER

    def test_verdict_stable_under_extension(self):
        """Test: alargar el prefijo no cambia el veredicto."""
        rng = np.random.default_rng(8)
        d = balanced_perturbation(rng, 40, order=1)
        for N in (256, 1024, 4096):
            prefix = np.zeros(N)
            prefix[1:41] = d
            x = identity_minus_cesaro(ConvergentSeq(prefix=prefix, limit=0.0))
            assert range_membership(x).status is VerdictStatus.MEMBER
        for N in (2 ** 16, 2 ** 17, 2 ** 18):
            verdict = range_membership(sequence_catalog_entry("log-slow", N))
            assert verdict.status is VerdictStatus.NON_MEMBER

    def test_bad_order(self):
        """Test: orden 3 rechazado."""
        with pytest.raises(InvalidInputError):
            range_membership(ConvergentSeq.constant(0.0, 64), order=3)

    def test_log_weighted_sums(self):
        """Test: sum log(n/k) x_k / k en un caso pequeño."""
        x = ConvergentSeq(prefix=[0.0, 1.0, 2.0], limit=0.0)
        sums = log_weighted_sums(x)
        assert sums[0] == pytest.approx(0.0)
        assert sums[1] == pytest.approx(np.log(2.0))


class TestConstructPreimage:
    """Tests para las preimágenes explícitas."""

    def test_recovers_step(self):
        """Test: la preimagen de x_k = 1/(k+1) es el escalón."""
        result = construct_preimage(reciprocal_shift(4096, first=0.5))
        assert result.sequence.prefix[0] == 0
        assert np.allclose(result.sequence.prefix[1:], 1.0, atol=1e-12)
        assert abs(result.sequence.limit - 1.0) < 1e-3
        assert 0.0 < result.limit_uncertainty < 1e-3

    def test_round_trip(self):
        """Test: (I - T) y = x en el prefijo hasta 1e-12."""
        rng = np.random.default_rng(11)
        prefix = rng.standard_normal(2048) / (1.0 + np.arange(2048)) ** 2
        prefix[0] = 0.0
        x = ConvergentSeq(prefix=prefix, limit=0.0)
        result = construct_preimage(x, y0=0.75)
        back = identity_minus_cesaro(result.sequence)
        assert result.sequence.prefix[0] == 0.75
        assert np.max(np.abs(back.prefix - x.prefix)) <= 1e-12

    def test_non_member_warns(self):
        """Test: una no perteneciente lleva advertencia."""
        result = construct_preimage(ConvergentSeq.unit(0, 128))
        assert result.membership.status is VerdictStatus.NON_MEMBER
        assert any("need not converge" in w for w in result.membership.warnings)
