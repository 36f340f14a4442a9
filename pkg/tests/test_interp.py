"""Interpolation generator tests."""
from math import comb, factorial

import numpy as np
import pytest

from collint.exceptions import BranchFailure, InsufficientOrderError, InvalidArgumentError, InvalidMatrixError
from collint.interp import (
    UpdateMapSeries,
    convergence_order_fit,
    generator_exact,
    generator_series,
    generator_sweep,
    interrupted_trajectory,
    locate_divergence,
    propagate,
    stroboscopic_residual,
    taylor_from_evaluator,
    truncated_generator,
    weak_compositions,
)
from collint.numkit import expm
from collint.scenarios import scalar_toy, unitary_map

TOY_ROOT = (np.sqrt(41.0) - 1.0) / 20.0


def exponential_family(a: np.ndarray) -> UpdateMapSeries:
    """M(dt) = exp(dt A) with its exact Taylor data."""
    taylor = tuple(np.linalg.matrix_power(a, k) / factorial(k) for k in range(1, 6))
    return UpdateMapSeries(dim=a.shape[0], evaluator=lambda dt: expm(dt * a), taylor=taylor, label="exp")


class TestUpdateMapSeries:
    """Tests for update map families."""

    def test_needs_a_view(self):
        """Test a family with neither evaluator nor Taylor data is rejected."""
        with pytest.raises(InvalidArgumentError):
            UpdateMapSeries(dim=1)

    def test_taylor_only_has_no_evaluator(self):
        """Test evaluating a Taylor-only family raises."""
        family = UpdateMapSeries(dim=1, taylor=(np.array([[1.0]]),))
        with pytest.raises(InvalidArgumentError):
            family.at(0.1)

    def test_evaluator_at_zero(self):
        """Test nothing happens in no time."""
        assert scalar_toy(10, 1).at(0.0)[0, 0] == 1.0

    def test_insufficient_order(self):
        """Test short Taylor data without an evaluator raises."""
        family = UpdateMapSeries(dim=1, taylor=(np.array([[-1.0]]),))
        with pytest.raises(InsufficientOrderError):
            generator_series(family, 1)


class TestGeneratorExact:
    """Tests for the exact interpolation generator."""

    def test_toy(self):
        """Test L = ln(0.8)/0.1 for the toy map at dt = 0.1."""
        toy = scalar_toy(10, 1)
        assert generator_exact(toy.at(0.1), 0.1)[0, 0] == pytest.approx(np.log(0.8) / 0.1, abs=1e-12)

    def test_identity(self):
        """Test M = 1 gives L = 0."""
        assert np.abs(generator_exact(np.eye(3), 0.2)).max() < 1e-14

    def test_unitary(self, hermitian_factory):
        """Test exp(-iH dt) gives -iH inside the principal strip."""
        h = hermitian_factory(3)
        dt = 0.5 / np.linalg.norm(h, 2)
        assert np.abs(generator_exact(expm(-1j * h * dt), dt) + 1j * h).max() < 1e-10

    def test_matching_condition(self, rng):
        """Test exp(dt L) = M."""
        m = np.eye(3) + 0.2 * rng.normal(size=(3, 3))
        dt = 0.3
        assert np.abs(expm(dt * generator_exact(m, dt)) - m).max() <= 1e-10 * (1 + np.linalg.norm(m))

    def test_non_positive_dt(self):
        """Test dt must be positive."""
        with pytest.raises(InvalidArgumentError):
            generator_exact(np.eye(2), 0.0)

    def test_beyond_branch_cut(self):
        """Test the toy map past its root is a branch failure."""
        toy = scalar_toy(10, 1)
        with pytest.raises(BranchFailure):
            generator_exact(toy.at(0.3), 0.3)

    def test_continuum_limit(self):
        """Test L_dt approaches M_1 linearly in dt."""
        toy = scalar_toy(10, 1)
        errors = [abs(generator_exact(toy.at(dt), dt)[0, 0] + 1.0) for dt in (1e-3, 2e-3)]
        assert errors[1] / errors[0] == pytest.approx(2.0, rel=0.01)


class TestWeakCompositions:
    """Tests for weak compositions."""

    def test_three_into_two(self):
        """Test C_w(3, 2)."""
        assert set(weak_compositions(3, 2)) == {(3, 0), (0, 3), (2, 1), (1, 2)}

    def test_two_into_three(self):
        """Test C_w(2, 3)."""
        expected = {(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1)}
        result = weak_compositions(2, 3)
        assert len(result) == 6 and set(result) == expected

    def test_zero(self):
        """Test C_w(0, N) is the zero tuple."""
        assert weak_compositions(0, 4) == [(0, 0, 0, 0)]

    def test_lexicographic(self):
        """Test the order is deterministic and lexicographic."""
        result = weak_compositions(4, 3)
        assert result == sorted(result)

    @pytest.mark.parametrize("total, parts", [(0, 1), (5, 1), (3, 3), (6, 4)])
    def test_count(self, total, parts):
        """Test the binomial count and the sums."""
        result = weak_compositions(total, parts)
        assert len(result) == comb(total + parts - 1, parts - 1)
        assert all(sum(beta) == total and len(beta) == parts for beta in result)

    def test_invalid(self):
        """Test negative totals are rejected."""
        with pytest.raises(InvalidArgumentError):
            weak_compositions(-1, 2)


class TestGeneratorSeries:
    """Tests for the series recursion."""

    def test_toy_golden(self):
        """Test the toy coefficients (-1, -10.5, -31/3, -60.25)."""
        series = generator_series(scalar_toy(10, 1), 3)
        values = [c[0, 0] for c in series.coefficients]
        assert series.order == 3
        for value, expected in zip(values, [-1.0, -10.5, -31.0 / 3.0, -60.25]):
            assert value == pytest.approx(expected, abs=1e-12)

    def test_toy_log_taylor(self):
        """Test against the Taylor series of log(1 + x) with x = -dt - 10 dt^2."""
        # coefficients of dt^1..dt^5 of log(1 - dt - 10 dt^2), by polynomial powers
        x = np.polynomial.Polynomial([0.0, -1.0, -10.0])
        log = sum(((-1) ** (k + 1) / k) * x ** k for k in range(1, 7))
        expected = log.coef[1:5]
        values = [c[0, 0] for c in generator_series(scalar_toy(10, 1), 3).coefficients]
        assert np.abs(np.array(values) - expected).max() < 1e-12

    def test_l0_is_m1(self, rng):
        """Test L_0 = M_1 exactly."""
        m1, m2 = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
        series = generator_series(UpdateMapSeries(dim=3, taylor=(m1, m2)), 1)
        assert np.array_equal(series.coefficients[0], m1)

    def test_l1_formula(self, rng):
        """Test L_1 = M_2 - L_0^2 / 2 for non-commuting data."""
        m1, m2, m3 = (rng.normal(size=(3, 3)) for _ in range(3))
        series = generator_series(UpdateMapSeries(dim=3, taylor=(m1, m2, m3)), 2)
        assert np.abs(series.coefficients[1] - (m2 - 0.5 * m1 @ m1)).max() < 1e-13
        l0, l1 = m1, m2 - 0.5 * m1 @ m1
        l2 = m3 - 0.5 * (l0 @ l1 + l1 @ l0) - l0 @ l0 @ l0 / 6
        assert np.abs(series.coefficients[2] - l2).max() < 1e-12

    def test_exponential_family(self, rng):
        """Test Log(exp(dt A)) gives L_0 = A and vanishing higher orders."""
        a = 0.5 * rng.normal(size=(3, 3))
        series = generator_series(exponential_family(a), 4)
        assert np.abs(series.coefficients[0] - a).max() < 1e-14
        for lm in series.coefficients[1:]:
            assert np.abs(lm).max() < 1e-12

    def test_finite_difference_family(self, rng):
        """Test the series from an evaluator-only family exp(dt A + dt^2 B)."""
        a, b = 0.3 * rng.normal(size=(3, 3)), 0.3 * rng.normal(size=(3, 3))
        family = UpdateMapSeries(dim=3, evaluator=lambda dt: expm(dt * a + dt * dt * b))
        series = generator_series(family, 2)
        assert np.abs(series.coefficients[0] - a).max() < 1e-6
        assert np.abs(series.coefficients[1] - b).max() < 1e-6
        assert np.abs(series.coefficients[2]).max() < 1e-6

    def test_negative_order(self):
        """Test negative orders are rejected."""
        with pytest.raises(InvalidArgumentError):
            generator_series(scalar_toy(1, 1), -1)

    def test_truncated(self):
        """Test the truncated generator sums dt^m L_m."""
        series = generator_series(scalar_toy(10, 1), 3)
        assert truncated_generator(series, 0.1, 1)[0, 0] == pytest.approx(-1.0 - 1.05)
        assert series.truncated(0.1)[0, 0] == pytest.approx(-1.0 - 1.05 - 31.0 / 300.0 - 0.06025)
        with pytest.raises(InsufficientOrderError):
            series.truncated(0.1, 4)


class TestTaylorFromEvaluator:
    """Tests for finite-difference Taylor extraction."""

    def test_toy_polynomial(self):
        """Test the toy evaluator gives M_1 = -1, M_2 = -10, M_3 = 0."""
        toy = scalar_toy(10, 1)
        coefficients = taylor_from_evaluator(toy.evaluator, 3)
        assert [c[0, 0] for c in coefficients] == pytest.approx([-1.0, -10.0, 0.0], abs=1e-6)

    def test_exponential(self, rng):
        """Test exp(dt A) gives A^k / k!."""
        a = 0.5 * rng.normal(size=(2, 2))
        coefficients = taylor_from_evaluator(lambda dt: expm(dt * a), 3)
        for k, c in enumerate(coefficients, start=1):
            assert np.abs(c - np.linalg.matrix_power(a, k) / factorial(k)).max() < 1e-6

    def test_series_from_evaluator_only(self):
        """Test the toy golden values survive finite-difference extraction."""
        toy = scalar_toy(10, 1)
        family = UpdateMapSeries(dim=1, evaluator=toy.evaluator)
        values = [c[0, 0] for c in generator_series(family, 2).coefficients]
        assert values == pytest.approx([-1.0, -10.5, -31.0 / 3.0], abs=1e-5)


class TestPropagation:
    """Tests for propagation and stroboscopic matching."""

    def test_zero_generator(self):
        """Test L = 0 keeps the state constant."""
        trajectory = propagate(np.zeros((2, 2)), np.array([0.3, 0.7]), [0.0, 1.0, 2.0])
        assert np.allclose(trajectory, [[0.3, 0.7]] * 3)

    def test_toy_powers(self):
        """Test v(n dt) = 0.8^n for the toy at dt = 0.1."""
        toy = scalar_toy(10, 1)
        generator = generator_exact(toy.at(0.1), 0.1)
        trajectory = propagate(generator, np.array([1.0]), [0.1 * n for n in range(6)])
        assert np.abs(trajectory[:, 0] - 0.8 ** np.arange(6)).max() < 1e-12

    def test_unitary_norm(self, hermitian_factory):
        """Test an eigenvector of H only picks up a phase."""
        h = hermitian_factory(3)
        _, vectors = np.linalg.eigh(h)
        trajectory = propagate(-1j * h, vectors[:, 0], np.linspace(0, 2, 5))
        assert np.abs(np.linalg.norm(trajectory, axis=1) - 1).max() < 1e-12
        overlaps = np.abs(trajectory @ vectors[:, 0].conj())
        assert np.abs(overlaps - 1).max() < 1e-12

    def test_dimension_mismatch(self):
        """Test a wrong-size initial vector raises."""
        with pytest.raises(InvalidMatrixError):
            propagate(np.eye(2), np.ones(3), [0.0])

    def test_stroboscopic_toy(self):
        """Test the toy map matches at every step."""
        assert stroboscopic_residual(scalar_toy(10, 1), 0.15, 20, np.array([1.0])) <= 1e-10

    def test_stroboscopic_unitary(self, hermitian_factory):
        """Test the unitary map matches at small dt."""
        family = unitary_map(hermitian_factory(3))
        assert stroboscopic_residual(family, 0.05, 50) <= 1e-10

    def test_truncated_does_not_match(self):
        """Test the first-order truncation misses the discrete dynamics."""
        toy = scalar_toy(10, 1)
        series = generator_series(toy, 1)
        residual = stroboscopic_residual(toy, 0.15, 20, np.array([1.0]), generator=series.truncated(0.15))
        assert residual > 1e-4

    def test_interrupted_bounce(self):
        """Test interrupted and interpolated toy dynamics agree only at the steps."""
        toy = scalar_toy(10, 1)
        dt = 0.1
        t_grid = [0.0, 0.05, 0.1, 0.15, 0.2]
        exact = interrupted_trajectory(toy.at, dt, np.array([1.0]), t_grid)[:, 0]
        interpolated = propagate(generator_exact(toy.at(dt), dt), np.array([1.0]), t_grid)[:, 0]
        assert exact[1] == pytest.approx(0.925)
        assert exact[2] == pytest.approx(0.8) and exact[4] == pytest.approx(0.64)
        assert np.abs(exact[[0, 2, 4]] - interpolated[[0, 2, 4]]).max() < 1e-12
        assert abs(exact[1] - interpolated[1]) > 1e-2


class TestConvergenceOrderFit:
    """Tests for truncation-order fits."""

    GRID = [0.001, 0.002, 0.004, 0.008, 0.016]

    @pytest.mark.parametrize("order, tolerance", [(0, 0.15), (1, 0.2), (2, 0.2)])
    def test_toy_slopes(self, order, tolerance):
        """Test the residual slope is K + 1."""
        fit = convergence_order_fit(scalar_toy(10, 1), order, self.GRID)
        assert not fit.degenerate
        assert fit.slope == pytest.approx(order + 1, abs=tolerance)

    def test_exponential_degenerate(self, rng):
        """Test an exactly exponential family gives a degenerate fit."""
        a = 0.5 * rng.normal(size=(2, 2))
        fit = convergence_order_fit(exponential_family(a), 1, [0.05, 0.1, 0.2])
        assert fit.degenerate
        assert np.isnan(fit.slope)

    def test_exact_zero_error_is_skipped(self, mocker):
        """Test a grid point with zero truncation error does not poison the slope."""
        mocker.patch(
            "collint.interp.generator_exact",
            side_effect=lambda m, dt: np.array([[-1.0 - (0.0 if dt == 0.001 else dt ** 2)]]),
        )
        fit = convergence_order_fit(scalar_toy(10, 1), 0, [0.001, 0.002, 0.004])
        assert fit.errors[0] == 0.0
        assert not fit.degenerate
        assert fit.slope == pytest.approx(2.0, abs=1e-6)

    def test_single_nonzero_error_is_degenerate(self, mocker):
        """Test one nonzero error is not enough for a slope."""
        mocker.patch(
            "collint.interp.generator_exact",
            side_effect=lambda m, dt: np.array([[-1.0 - (0.01 if dt == 0.004 else 0.0)]]),
        )
        fit = convergence_order_fit(scalar_toy(10, 1), 0, [0.001, 0.002, 0.004])
        assert fit.degenerate
        assert np.isnan(fit.slope)


class TestDivergence:
    """Tests for branch-cut location."""

    def test_locate_toy_root(self):
        """Test the toy divergence sits at the root of 1 - dt - 10 dt^2."""
        toy = scalar_toy(10, 1)
        assert locate_divergence(toy.at, 0.2, 0.3) == pytest.approx(TOY_ROOT, abs=1e-6)
        assert TOY_ROOT == pytest.approx(0.2702, abs=1e-4)

    def test_sweep_stops_at_failure(self):
        """Test the sweep keeps grid order and records the divergence."""
        toy = scalar_toy(10, 1)
        sweep = generator_sweep(toy, [0.1, 0.2, 0.3, 0.4])
        assert sweep.dts == [0.1, 0.2]
        assert sweep.divergence == pytest.approx(TOY_ROOT, abs=1e-6)
        assert sweep.failure.dt == sweep.divergence
        assert sweep.generators[0][0, 0] == pytest.approx(np.log(0.8) / 0.1)

    def test_sweep_without_failure(self):
        """Test a clean sweep has no divergence."""
        sweep = generator_sweep(scalar_toy(10, 1), [0.05, 0.1])
        assert sweep.divergence is None and sweep.failure is None
        assert len(sweep.generators) == 2
