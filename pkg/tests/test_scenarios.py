"""Worked collision model tests."""
import numpy as np
import pytest

from collint.exceptions import InvalidArgumentError, InvalidMatrixError
from collint.interp import generator_exact, generator_series, stroboscopic_residual, taylor_from_evaluator
from collint.numkit import dagger, expm, hermitian_report, vec
from collint.scenarios import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    BombardmentSpec,
    EnsembleSpec,
    ancillary_bombardment,
    bombardment_d_matrix,
    bombardment_h1,
    bombardment_l0_hamiltonian,
    bombardment_l1_superop,
    caves_milburn,
    converge_fock,
    dyson_effective_hamiltonian,
    duration_scaled_first_order,
    fock_operators,
    fock_state,
    isotropic_spin,
    mixed_unitary,
    scalar_toy,
    thermal_state,
    time_dependent_unitary,
    unitary_generator,
    unitary_map,
    wrap_phase,
    zeno_transfer,
)
from collint.superop import (
    ChannelOnStates,
    commutator_superop,
    cptp_check,
    dissipator,
    lindblad_decompose,
)
from tests.conftest import random_density, random_hermitian


def seeded_spec(seed: int) -> BombardmentSpec:
    """Qubit system, qutrit ancilla, one or two interaction terms."""
    rng = np.random.default_rng(seed)
    terms = tuple(
        (random_hermitian(rng, 2, 0.5), random_hermitian(rng, 3, 0.5))
        for _ in range(int(rng.integers(1, 3)))
    )
    return BombardmentSpec(
        h_s=random_hermitian(rng, 2, 0.5),
        h_a=random_hermitian(rng, 3, 0.5),
        terms=terms,
        rho_a=random_density(rng, 3),
    )


@pytest.fixture
def random_spec(hermitian_factory, density_factory):
    """Qubit system, qutrit ancilla, two interaction terms."""
    return BombardmentSpec(
        h_s=hermitian_factory(2, 0.5),
        h_a=hermitian_factory(3, 0.5),
        terms=(
            (hermitian_factory(2, 0.5), hermitian_factory(3, 0.5)),
            (hermitian_factory(2, 0.5), hermitian_factory(3, 0.5)),
        ),
        rho_a=density_factory(3),
    )


class TestScalarToy:
    """Tests for the scalar toy family."""

    def test_evaluator(self):
        """Test M(dt) = 1 - b dt - a dt^2."""
        assert scalar_toy(10.0, 1.0).at(0.1)[0, 0] == pytest.approx(1 - 0.1 - 0.1)

    def test_rejects_negative(self):
        """Test negative coefficients raise."""
        with pytest.raises(InvalidArgumentError):
            scalar_toy(-1.0, 1.0)


class TestUnitary:
    """Tests for unitary families and phase wrapping."""

    def test_wrap_phase(self):
        """Test values land in [-pi, pi)."""
        assert wrap_phase(np.pi) == pytest.approx(-np.pi)
        assert wrap_phase(1.5 * np.pi) == pytest.approx(-0.5 * np.pi)
        assert wrap_phase(0.3) == pytest.approx(0.3)

    def test_small_step_is_exact(self, hermitian_factory):
        """Test the generator is -iH while the spectrum stays inside the branch."""
        h = hermitian_factory(3, 0.5)
        dt = 0.5 / np.linalg.norm(h, 2)
        assert np.abs(unitary_generator(h, dt) + 1j * h).max() < 1e-12

    def test_winding_is_invisible(self):
        """Test phases beyond pi wrap but still reproduce the unitary."""
        dt = 4.0
        generator = unitary_generator(SIGMA_Z, dt)
        expected = -1j * np.diag([4.0 - 2 * np.pi, 2 * np.pi - 4.0]) / dt
        assert np.abs(generator - expected).max() < 1e-12
        assert np.abs(expm(generator * dt) - expm(-1j * SIGMA_Z * dt)).max() < 1e-12

    def test_rejects_non_positive_step(self):
        """Test dt <= 0 raises."""
        with pytest.raises(InvalidArgumentError):
            unitary_generator(SIGMA_Z, 0.0)

    def test_series_has_only_leading_term(self, hermitian_factory):
        """Test L_0 = -iH and the corrections vanish."""
        h = hermitian_factory(2)
        l0, l1, l2 = generator_series(unitary_map(h), 2).coefficients
        assert np.abs(l0 + 1j * h).max() < 1e-12
        assert np.abs(l1).max() < 1e-12 and np.abs(l2).max() < 1e-12

    def test_rejects_non_hermitian(self):
        """Test a non-Hermitian Hamiltonian raises."""
        with pytest.raises(InvalidMatrixError):
            unitary_map(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestDyson:
    """Tests for time-dependent Hamiltonians."""

    def test_clock_reset_correction(self):
        """Test H_0 = sigma_z, H_1 = sigma_x gives the -sigma_y/6 second-order correction."""
        zero = np.zeros((2, 2))
        series = dyson_effective_hamiltonian(SIGMA_Z, SIGMA_X, zero, order=2)
        assert np.abs(series.effective[0] - SIGMA_Z).max() < 1e-12
        assert np.abs(series.effective[1] - series.averaged[1]).max() < 1e-12
        assert np.abs(series.effective[2] - series.averaged[2] + SIGMA_Y / 6).max() < 1e-12

    def test_commuting_terms_average(self):
        """Test commuting H_j leave only the time average."""
        series = dyson_effective_hamiltonian(SIGMA_Z, 0.4 * SIGMA_Z, 0.2 * SIGMA_Z, order=2)
        for effective, averaged in zip(series.effective, series.averaged):
            assert np.abs(effective - averaged).max() < 1e-12

    def test_duration_scaled_first_order(self):
        """Test the first correction of H(t/dt) against its closed form."""
        h0, h1, h2 = SIGMA_Z, SIGMA_X, 0.5 * SIGMA_Y
        series = dyson_effective_hamiltonian(h0, h1, h2, order=1, duration_scaled=True)
        assert np.abs(series.effective[0] - (h0 + h1 / 2 + h2 / 3)).max() < 1e-12
        assert np.abs(series.effective[1] - duration_scaled_first_order(h0, h1, h2)).max() < 1e-12
        assert series.duration_scaled

    def test_evaluator_matches_taylor(self):
        """Test the ODE solution against the truncated Taylor sum."""
        family = time_dependent_unitary(SIGMA_Z, SIGMA_X, 0.3 * SIGMA_Y)
        dt = 0.05
        taylor = np.eye(2, dtype=complex) + sum(
            dt ** k * m for k, m in enumerate(family.taylor_coefficients(8), start=1)
        )
        assert np.abs(family.at(dt) - taylor).max() < 1e-11

    def test_shape_mismatch(self):
        """Test H_j of different shapes raise."""
        with pytest.raises(InvalidMatrixError):
            dyson_effective_hamiltonian(SIGMA_Z, np.eye(3), SIGMA_X)


class TestMixedUnitary:
    """Tests for mixed unitary collisions."""

    MU, DELTA = 0.8, 0.5

    def magnetic(self):
        half = 0.5 * self.MU * self.DELTA
        return mixed_unitary(EnsembleSpec([0.5, 0.5], (half * SIGMA_Z, -half * SIGMA_Z)))

    def test_dephasing_rate(self):
        """Test L_1 = -(mu^2 Delta^2 / 8)[sigma_z, [sigma_z, .]]."""
        model = self.magnetic()
        strength = (self.MU * self.DELTA) ** 2
        c = commutator_superop(SIGMA_Z)
        assert np.abs(model.l1 - strength / 8 * c @ c).max() < 1e-12
        assert lindblad_decompose(model.l1).rate_along(SIGMA_Z) == pytest.approx(strength / 4, abs=1e-12)
        assert np.abs(model.mean_hamiltonian).max() < 1e-15

    def test_series_matches_closed_form(self):
        """Test the assembled L_0, L_1 against the model."""
        model = self.magnetic()
        l0, l1 = generator_series(model.family, 1).coefficients
        assert np.abs(l0 - model.l0).max() < 1e-12
        assert np.abs(l1 - model.l1).max() < 1e-12

    def test_q_matrix(self, rng):
        """Test Q is PSD with trace 1 - |p|^2."""
        p = rng.dirichlet(np.ones(4))
        hamiltonians = tuple(rng.normal() * s for s in (SIGMA_X, SIGMA_Y, SIGMA_Z, SIGMA_X + SIGMA_Z))
        model = mixed_unitary(EnsembleSpec(p, hamiltonians))
        assert hermitian_report(model.q_matrix).is_psd
        assert np.trace(model.q_matrix) == pytest.approx(1 - p @ p, abs=1e-14)
        assert list(model.rates) == sorted(model.rates, reverse=True)

    def test_q_matrix_random_ensembles(self):
        """Test Q is PSD for fifty random ensembles."""
        for seed in range(50):
            rng = np.random.default_rng(seed)
            size = int(rng.integers(2, 6))
            hamiltonians = tuple(random_hermitian(rng, 2) for _ in range(size))
            model = mixed_unitary(EnsembleSpec(rng.dirichlet(np.ones(size)), hamiltonians))
            assert hermitian_report(model.q_matrix).is_psd, f"seed {seed}"
            assert min(model.rates) >= -1e-14

    def test_rejects_bad_probabilities(self):
        """Test probabilities must sum to one."""
        with pytest.raises(InvalidArgumentError):
            EnsembleSpec([0.5, 0.6], (SIGMA_X, SIGMA_Z))


class TestZeno:
    """Tests for the measured transfer model."""

    OMEGA = 0.7

    def plus_minus(self):
        return np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)

    def test_closed_form(self):
        """Test sigma_z dynamics measured in |+>, |->."""
        family = zeno_transfer(self.OMEGA * SIGMA_Z, self.plus_minus())
        dt = 0.3
        c2, s2 = np.cos(self.OMEGA * dt) ** 2, np.sin(self.OMEGA * dt) ** 2
        assert np.abs(family.at(dt) - np.array([[c2, s2], [s2, c2]])).max() < 1e-14

    def test_column_stochastic(self, hermitian_factory):
        """Test every column sums to one."""
        q, _ = np.linalg.qr(hermitian_factory(3) + 1j * hermitian_factory(3))
        family = zeno_transfer(hermitian_factory(3), q)
        assert np.allclose(family.at(0.4).sum(axis=0), 1.0)

    def test_no_leading_generator(self):
        """Test Lambda_0 = 0 and Lambda_1 carries the transfer rates."""
        l0, l1 = generator_series(zeno_transfer(self.OMEGA * SIGMA_Z, self.plus_minus()), 1).coefficients
        rate = self.OMEGA ** 2
        assert not np.abs(l0).any()
        assert np.abs(l1 - rate * np.array([[-1.0, 1.0], [1.0, -1.0]])).max() < 1e-14

    def test_exact_generator_small_step(self):
        """Test the exact generator approaches dt Lambda_1."""
        family = zeno_transfer(self.OMEGA * SIGMA_Z, self.plus_minus())
        dt = 1e-3
        generator = generator_exact(family.at(dt), dt)
        assert generator[0, 1] == pytest.approx(self.OMEGA ** 2 * dt, rel=1e-3)

    def test_rejects_non_orthonormal_basis(self):
        """Test the measured states must be orthonormal."""
        with pytest.raises(InvalidArgumentError):
            zeno_transfer(SIGMA_Z, np.array([[1.0, 1.0], [0.0, 1.0]]))


class TestBombardment:
    """Tests for ancillary bombardment."""

    def test_leading_hamiltonian(self, random_spec):
        """Test L_0 = -i[H_S + Tr_A(H_SA rho_A), .]."""
        model = ancillary_bombardment(random_spec)
        expected = commutator_superop(bombardment_l0_hamiltonian(random_spec))
        assert np.abs(model.generators.coefficients[0] - expected).max() < 1e-12

    def test_first_order_from_phi(self, random_spec):
        """Test L_1 = phi_2 - phi_1^2 / 2."""
        model = ancillary_bombardment(random_spec)
        phi1, phi2 = model.phi[0], model.phi[1]
        assert np.abs(model.generators.coefficients[1] - (phi2 - 0.5 * phi1 @ phi1)).max() < 1e-12

    def test_first_order_closed_form(self, random_spec):
        """Test the H^(1) plus D-matrix form of L_1."""
        model = ancillary_bombardment(random_spec)
        assert np.abs(model.generators.coefficients[1] - bombardment_l1_superop(random_spec)).max() < 1e-10

    def test_d_matrix_psd(self, random_spec):
        """Test D is a positive semidefinite covariance."""
        report = hermitian_report(bombardment_d_matrix(random_spec))
        assert report.is_hermitian and report.is_psd

    def test_channel_is_cptp(self, random_spec):
        """Test M(dt) is CPTP."""
        model = ancillary_bombardment(random_spec)
        report = cptp_check(ChannelOnStates(2, model.family.at(0.3)))
        assert report.is_cp and report.is_tp

    def test_random_specs_are_cptp(self):
        """Test D is PSD and M(dt) is CPTP over twenty random specs."""
        for seed in range(20):
            spec = seeded_spec(seed)
            assert hermitian_report(bombardment_d_matrix(spec)).is_psd, f"seed {seed}"
            family = ancillary_bombardment(spec).family
            for dt in (0.1, 0.5):
                report = cptp_check(ChannelOnStates(spec.d_s, family.at(dt)))
                assert report.is_cp and report.is_tp, f"seed {seed}, dt {dt}"

    def test_no_ancilla_hamiltonian(self, random_spec):
        """Test H^(1) vanishes when H_A = 0."""
        spec = random_spec.with_ancilla(h_a=np.zeros((3, 3)))
        assert np.abs(bombardment_h1(spec)).max() < 1e-15

    def test_caves_milburn(self):
        """Test vacuum ancillas give D = 1/2 and pure measurement dephasing."""
        g = 0.6
        spec = caves_milburn(g, n_system=4, n_ancilla=8)
        _, q_s, _ = fock_operators(4)
        assert np.abs(bombardment_d_matrix(spec) - 0.5).max() < 1e-14
        assert np.abs(bombardment_l0_hamiltonian(spec)).max() < 1e-14
        assert np.abs(bombardment_l1_superop(spec) - 0.5 * dissipator(g * q_s)).max() < 1e-12

    def test_isotropic_spin_leading_hamiltonian(self):
        """Test J sigma . sigma with ancillas at a gives H^(0) = J a . sigma."""
        j, a = 0.4, np.array([0.2, -0.1, 0.5])
        spec = isotropic_spin(j, a)
        expected = j * (a[0] * SIGMA_X + a[1] * SIGMA_Y + a[2] * SIGMA_Z)
        assert np.abs(bombardment_l0_hamiltonian(spec) - expected).max() < 1e-14

    def test_isotropic_rejects_long_vector(self):
        """Test a Bloch vector outside the ball raises."""
        with pytest.raises(InvalidArgumentError):
            isotropic_spin(1.0, [1.0, 1.0, 0.0])

    def test_rejects_bad_ancilla_state(self):
        """Test rho_A must be a density matrix."""
        with pytest.raises(InvalidMatrixError):
            BombardmentSpec(
                h_s=np.zeros((2, 2)),
                h_a=np.zeros((2, 2)),
                terms=((SIGMA_X, SIGMA_X),),
                rho_a=np.diag([1.5, -0.5]),
            )


class TestOscillators:
    """Tests for Fock-space helpers."""

    def test_operators(self):
        """Test [q, p] = i away from the truncation edge."""
        _, q, p = fock_operators(6)
        commutator = q @ p - p @ q
        assert np.allclose(np.diag(commutator)[:-1], 1j)
        assert np.allclose(q, dagger(q)) and np.allclose(p, dagger(p))

    def test_too_small(self):
        """Test a single level raises."""
        with pytest.raises(InvalidArgumentError):
            fock_operators(1)

    def test_fock_state(self):
        """Test |n><n| is a unit-trace projector."""
        rho = fock_state(4, 2)
        assert rho[2, 2] == 1 and np.trace(rho) == 1

    def test_thermal_state(self):
        """Test Boltzmann weights and the infinite temperature limit."""
        h = np.diag([0.0, 1.0, 2.0])
        rho = thermal_state(h, 0.7)
        assert np.trace(rho).real == pytest.approx(1.0)
        assert rho[1, 1].real / rho[0, 0].real == pytest.approx(np.exp(-0.7))
        assert np.allclose(thermal_state(h, 0.0), np.eye(3) / 3)

    def test_converge_fock(self):
        """Test doubling stops once the vacuum weight settles."""
        def vacuum_weight(n):
            return np.array([thermal_state(np.diag(np.arange(n, dtype=float)), 2.0)[0, 0].real])

        n, value = converge_fock(vacuum_weight, n_max=8, tol=1e-8)
        assert n == 16
        assert value[0] == pytest.approx(1 - np.exp(-2.0), abs=1e-12)

    def test_converge_fock_gives_up(self):
        """Test a quantity that never settles returns the last truncation."""
        n, value = converge_fock(lambda n: np.array([float(n)]), n_max=4, max_doublings=2)
        assert n == 16 and value[0] == 16.0


def family_case(name: str):
    """(family, initial vector, number of Taylor coefficients to cross-check)."""
    ground = vec(np.diag([1.0, 0.0]).astype(complex))
    if name == "mixed_unitary":
        spec = EnsembleSpec([0.2, 0.3, 0.5], (0.6 * SIGMA_X, 0.4 * SIGMA_Z, 0.3 * (SIGMA_X + SIGMA_Y)))
        return mixed_unitary(spec).family, ground, 3
    if name == "zeno":
        plus_minus = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
        return zeno_transfer(0.7 * SIGMA_Z, plus_minus), np.array([1.0, 0.0]), 2
    if name == "bombardment":
        return ancillary_bombardment(seeded_spec(3)).family, ground, 3
    duration_scaled = name == "duration_scaled"
    family = time_dependent_unitary(SIGMA_Z, SIGMA_X, 0.3 * SIGMA_Y, duration_scaled=duration_scaled)
    return family, np.array([1.0, 0.0], dtype=complex), 2


FAMILY_NAMES = ["mixed_unitary", "zeno", "bombardment", "clock_reset", "duration_scaled"]


class TestFamilyConsistency:
    """Tests shared by every scenario family."""

    @pytest.mark.parametrize("name", FAMILY_NAMES)
    def test_stroboscopic_matching(self, name):
        """Test exp(n dt L) v0 = M(dt)^n v0 for n up to 50."""
        family, v0, _ = family_case(name)
        assert stroboscopic_residual(family, 0.2, 50, v0) <= 1e-9

    @pytest.mark.parametrize("name", FAMILY_NAMES)
    def test_evaluator_matches_taylor(self, name):
        """Test finite differences of the evaluator reproduce the Taylor data."""
        family, _, count = family_case(name)
        numeric = taylor_from_evaluator(family.evaluator, count, family.time_scale)
        for k, (fd, exact) in enumerate(zip(numeric, family.taylor_coefficients(count)), start=1):
            assert np.abs(fd - exact).max() < 1e-6, f"M_{k}"
