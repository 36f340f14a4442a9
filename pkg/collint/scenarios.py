"""Update-map families for the worked collision models.

Every constructor returns an UpdateMapSeries (or a small model object that
holds one) together with whatever closed-form coefficients are known, so
the numerically assembled generator series can be checked against them.
"""
from dataclasses import dataclass, replace
from functools import cached_property
from math import factorial
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy.integrate import solve_ivp

from collint.affine import AffineMap, augment
from collint.config import settings
from collint.exceptions import InvalidArgumentError, InvalidMatrixError
from collint.interp import GeneratorSeries, UpdateMapSeries, generator_series
from collint.numkit import as_square, dagger, expm, hermitian_report, is_hermitian, vec
from collint.superop import (
    ChannelOnStates,
    commutator_superop,
    matrix_units,
    partial_trace,
    sandwich,
    superop_from_linear_map,
)

logger = logging.getLogger(__name__)

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def _hermitian(m, name: str) -> np.ndarray:
    m = as_square(m, name)
    if not is_hermitian(m, settings.TOL * max(1.0, float(np.abs(m).max(initial=0.0)))):
        raise InvalidMatrixError(f"{name} must be Hermitian", m.shape)
    return m.astype(complex)


def _density(rho, name: str) -> np.ndarray:
    rho = _hermitian(rho, name)
    report = hermitian_report(rho)
    if not report.is_psd or abs(np.trace(rho) - 1) > settings.TOL:
        raise InvalidMatrixError(f"{name} must be positive with unit trace", rho.shape)
    return rho


# ---------------------------------------------------------------------------
# Specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BombardmentSpec:
    """System S repeatedly colliding with fresh ancillas A in the state rho_a.

    H = H_S kron 1 + 1 kron H_A + sum_k Q_k kron R_k.
    """
    h_s: np.ndarray
    h_a: np.ndarray
    terms: Tuple[Tuple[np.ndarray, np.ndarray], ...]
    rho_a: np.ndarray

    def __post_init__(self):
        h_s = _hermitian(self.h_s, "H_S")
        h_a = _hermitian(self.h_a, "H_A")
        rho_a = _density(self.rho_a, "rho_A")
        if rho_a.shape != h_a.shape:
            raise InvalidMatrixError("rho_A and H_A dimensions differ", rho_a.shape)

        terms = []
        for k, (q, r) in enumerate(self.terms):
            q, r = _hermitian(q, f"Q_{k}"), _hermitian(r, f"R_{k}")
            if q.shape != h_s.shape or r.shape != h_a.shape:
                raise InvalidMatrixError(f"interaction term {k} has mismatched dimensions", q.shape + r.shape)
            terms.append((q, r))

        object.__setattr__(self, "h_s", h_s)
        object.__setattr__(self, "h_a", h_a)
        object.__setattr__(self, "rho_a", rho_a)
        object.__setattr__(self, "terms", tuple(terms))

    @property
    def d_s(self) -> int:
        return self.h_s.shape[0]

    @property
    def d_a(self) -> int:
        return self.h_a.shape[0]

    def interaction(self) -> np.ndarray:
        total = np.zeros((self.d_s * self.d_a,) * 2, dtype=complex)
        for q, r in self.terms:
            total += np.kron(q, r)
        return total

    def hamiltonian(self) -> np.ndarray:
        return (
            np.kron(self.h_s, np.eye(self.d_a))
            + np.kron(np.eye(self.d_s), self.h_a)
            + self.interaction()
        )

    def expectation(self, op) -> complex:
        """<op> in the ancilla state."""
        return complex(np.trace(np.asarray(op) @ self.rho_a))

    def with_ancilla(self, h_a=None, rho_a=None) -> "BombardmentSpec":
        return replace(
            self,
            h_a=self.h_a if h_a is None else h_a,
            rho_a=self.rho_a if rho_a is None else rho_a,
        )


@dataclass(frozen=True)
class EnsembleSpec:
    """Unitary collisions with Hamiltonian H_k drawn with probability p_k."""
    probabilities: np.ndarray
    hamiltonians: Tuple[np.ndarray, ...]

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or len(p) != len(self.hamiltonians) or len(p) == 0:
            raise InvalidArgumentError("probabilities", p.tolist(), "need one probability per Hamiltonian")
        if np.any(p < -settings.TOL) or abs(p.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError("probabilities", p.tolist(), "must be non-negative and sum to 1")
        hamiltonians = tuple(_hermitian(h, f"H_{k}") for k, h in enumerate(self.hamiltonians))
        if len({h.shape for h in hamiltonians}) != 1:
            raise InvalidMatrixError("ensemble Hamiltonians must share one dimension")
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "hamiltonians", hamiltonians)

    @property
    def dim(self) -> int:
        return self.hamiltonians[0].shape[0]


# ---------------------------------------------------------------------------
# Scalar and unitary families
# ---------------------------------------------------------------------------

def scalar_toy(a: float, b: float) -> UpdateMapSeries:
    """M(dt) = 1 - b dt - a dt^2 on a one-dimensional space."""
    if a < 0 or b < 0:
        raise InvalidArgumentError("scalar toy", (a, b), "a and b must be non-negative")
    m1 = np.array([[-float(b)]])
    m2 = np.array([[-float(a)]])
    zero = np.zeros((1, 1))

    def evaluator(dt: float) -> np.ndarray:
        return np.array([[1.0 - b * dt - a * dt * dt]])

    def taylor_fn(k: int) -> np.ndarray:
        return {1: m1, 2: m2}.get(k, zero)

    return UpdateMapSeries(
        dim=1,
        evaluator=evaluator,
        taylor=(m1, m2),
        label=f"scalar_toy(a={a}, b={b})",
        time_scale=1.0 / max(1.0, b, np.sqrt(a)),
        taylor_fn=taylor_fn,
    )


def _spectral_time_scale(*hamiltonians: np.ndarray) -> float:
    norm = max((float(np.linalg.norm(h, 2)) for h in hamiltonians), default=0.0)
    return 1.0 / max(1.0, norm)


def unitary_map(h) -> UpdateMapSeries:
    """psi -> exp(-i H dt) psi."""
    h = _hermitian(h, "H")
    minus_ih = -1j * h

    def evaluator(dt: float) -> np.ndarray:
        return expm(minus_ih * dt)

    def taylor_fn(k: int) -> np.ndarray:
        return np.linalg.matrix_power(minus_ih, k) / factorial(k)

    return UpdateMapSeries(
        dim=h.shape[0],
        evaluator=evaluator,
        label="unitary",
        time_scale=_spectral_time_scale(h),
        taylor_fn=taylor_fn,
    )


def wrap_phase(x):
    """x modulo 2 pi, into [-pi, pi)."""
    return np.mod(np.asarray(x) + np.pi, 2 * np.pi) - np.pi


def unitary_generator(h, dt: float) -> np.ndarray:
    """Principal interpolation generator of exp(-i H dt).

    Equals -i H exactly when H dt has its spectrum in [-pi, pi); otherwise
    the phases wrap and full windings are invisible.
    """
    if not dt > 0:
        raise InvalidArgumentError("dt", dt, "must be positive")
    h = _hermitian(h, "H")
    eigenvalues, vectors = np.linalg.eigh(h)
    phases = wrap_phase(eigenvalues * dt)
    return -1j * (vectors * phases) @ dagger(vectors) / dt


# ---------------------------------------------------------------------------
# Time-dependent Hamiltonians
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DysonSeries:
    """Effective (H_eff = i L) and time-averaged Hamiltonian series."""
    effective: Tuple[np.ndarray, ...]
    averaged: Tuple[np.ndarray, ...]
    duration_scaled: bool


def _poly_hamiltonian(h0, h1, h2) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    h0 = _hermitian(h0, "H_0")
    h1 = _hermitian(h1, "H_1")
    h2 = _hermitian(h2, "H_2")
    if not h0.shape == h1.shape == h2.shape:
        raise InvalidMatrixError("H_0, H_1, H_2 must share one shape", h0.shape)
    return h0, h1, h2


def _clock_reset_taylor(coefficients: Sequence[np.ndarray], count: int) -> List[np.ndarray]:
    """U_k from k U_k = -i sum_j H_j U_{k-1-j}, for H(t) = sum_j t^j H_j."""
    n = coefficients[0].shape[0]
    u = [np.eye(n, dtype=complex)]
    for k in range(1, count + 1):
        total = np.zeros((n, n), dtype=complex)
        for j, h in enumerate(coefficients):
            if k - 1 - j >= 0:
                total += h @ u[k - 1 - j]
        u.append(-1j * total / k)
    return u[1:]


def _duration_scaled_taylor(coefficients: Sequence[np.ndarray], count: int) -> List[np.ndarray]:
    """U_n = P_n(1) with P_n(s) = -i int_0^s H(s') P_{n-1}(s') ds'.

    Each P_n is held as its list of matrix coefficients in s.
    """
    n = coefficients[0].shape[0]
    poly = [np.eye(n, dtype=complex)]
    out = []
    for _ in range(count):
        product = [np.zeros((n, n), dtype=complex) for _ in range(len(poly) + len(coefficients) - 1)]
        for j, h in enumerate(coefficients):
            for i, c in enumerate(poly):
                product[i + j] += h @ c
        poly = [np.zeros((n, n), dtype=complex)] + [-1j * c / (p + 1) for p, c in enumerate(product)]
        out.append(sum(poly))
    return out


def time_dependent_unitary(h0, h1, h2, duration_scaled: bool = False) -> UpdateMapSeries:
    """Time-ordered exponential of H(t) = H_0 + t H_1 + t^2 H_2 over one collision.

    Clock reset: the Hamiltonian restarts at t = 0 each collision.
    Duration scaled: the collision runs through H(t/dt), so the same
    Hamiltonian profile is squeezed into every dt.
    """
    coefficients = _poly_hamiltonian(h0, h1, h2)
    n = coefficients[0].shape[0]
    builder = _duration_scaled_taylor if duration_scaled else _clock_reset_taylor
    cache: Dict[int, np.ndarray] = {}

    def hamiltonian(s: float) -> np.ndarray:
        return coefficients[0] + s * coefficients[1] + s * s * coefficients[2]

    def evaluator(dt: float) -> np.ndarray:
        if dt == 0:
            return np.eye(n, dtype=complex)

        def rhs(t, y):
            s = t / dt if duration_scaled else t
            return (-1j * hamiltonian(s) @ y.reshape(n, n)).reshape(-1)

        solution = solve_ivp(
            rhs, (0.0, dt), np.eye(n, dtype=complex).reshape(-1),
            method="DOP853", rtol=1e-12, atol=1e-14,
        )
        return solution.y[:, -1].reshape(n, n)

    def taylor_fn(k: int) -> np.ndarray:
        if k not in cache:
            cache.update(enumerate(builder(coefficients, max(k, 4)), start=1))
        return cache[k]

    return UpdateMapSeries(
        dim=n,
        evaluator=evaluator,
        label="duration_scaled" if duration_scaled else "clock_reset",
        time_scale=_spectral_time_scale(*coefficients),
        taylor_fn=taylor_fn,
    )


def dyson_effective_hamiltonian(h0, h1, h2, order: int = 2, duration_scaled: bool = False) -> DysonSeries:
    """H_eff series next to the time-averaged Hamiltonian series."""
    h0, h1, h2 = _poly_hamiltonian(h0, h1, h2)
    family = time_dependent_unitary(h0, h1, h2, duration_scaled)
    series = generator_series(family, order)
    effective = tuple(1j * lm for lm in series.coefficients)

    zero = np.zeros_like(h0)
    if duration_scaled:
        averaged = [h0 + h1 / 2 + h2 / 3] + [zero] * order
    else:
        averaged = [h0, h1 / 2, h2 / 3] + [zero] * max(0, order - 2)
    return DysonSeries(effective=effective, averaged=tuple(averaged[: order + 1]), duration_scaled=duration_scaled)


def duration_scaled_first_order(h0, h1, h2) -> np.ndarray:
    """H^(1) = -(i/2) sum_{j,k} [H_j, H_k] / ((k + 1)(j + k + 2)) for H(t/dt)."""
    coefficients = _poly_hamiltonian(h0, h1, h2)
    total = np.zeros_like(coefficients[0])
    for j, hj in enumerate(coefficients):
        for k, hk in enumerate(coefficients):
            total += (hj @ hk - hk @ hj) / ((k + 1) * (j + k + 2))
    return -0.5j * total


# ---------------------------------------------------------------------------
# Mixed unitary
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixedUnitaryModel:
    family: UpdateMapSeries
    mean_hamiltonian: np.ndarray
    q_matrix: np.ndarray
    rates: np.ndarray
    modes: Tuple[np.ndarray, ...]
    l0: np.ndarray
    l1: np.ndarray


def mixed_unitary(spec: EnsembleSpec) -> MixedUnitaryModel:
    """rho -> sum_k p_k U_k rho U_k^+ with U_k = exp(-i H_k dt).

    L_1 = 1/2 sum_{kl} Q_kl S_k S_l with S_k = -i[H_k, .] and
    Q = diag(p) - p p^T, which diagonalizes into dissipators with rates
    gamma_j and modes sum_k v_jk H_k.
    """
    p = spec.probabilities
    generators = [commutator_superop(h) for h in spec.hamiltonians]

    def evaluator(dt: float) -> np.ndarray:
        return sum(pk * expm(dt * s) for pk, s in zip(p, generators))

    def taylor_fn(k: int) -> np.ndarray:
        return sum(pk * np.linalg.matrix_power(s, k) for pk, s in zip(p, generators)) / factorial(k)

    q = np.diag(p) - np.outer(p, p)
    gammas, vectors = np.linalg.eigh(q)
    order = np.argsort(gammas)[::-1]
    rates = gammas[order]
    modes = tuple(sum(vectors[k, j] * h for k, h in enumerate(spec.hamiltonians)) for j in order)

    mean = sum(pk * h for pk, h in zip(p, spec.hamiltonians))
    l1 = 0.5 * sum(
        q[k, l] * generators[k] @ generators[l]
        for k in range(len(p)) for l in range(len(p))
    )
    family = UpdateMapSeries(
        dim=spec.dim ** 2,
        evaluator=evaluator,
        label="mixed_unitary",
        time_scale=_spectral_time_scale(*spec.hamiltonians),
        taylor_fn=taylor_fn,
    )
    return MixedUnitaryModel(
        family=family,
        mean_hamiltonian=mean,
        q_matrix=q,
        rates=rates,
        modes=modes,
        l0=commutator_superop(mean),
        l1=l1,
    )


# ---------------------------------------------------------------------------
# Partial swap on the Bloch ball
# ---------------------------------------------------------------------------

def _cos2_coefficient(k: int) -> float:
    return 0.5 * (-1) ** (k // 2) * 2.0 ** k / factorial(k) if k % 2 == 0 else 0.0


def _sincos_coefficient(k: int) -> float:
    return 0.5 * (-1) ** ((k - 1) // 2) * 2.0 ** k / factorial(k) if k % 2 == 1 else 0.0


@dataclass(frozen=True)
class PartialSwap:
    """Qubit colliding through exp(-i omega dt SWAP) with ancillas polarized to r along z.

    The free dynamics of system and ancilla is left out.
    """
    omega: float
    r: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise InvalidArgumentError("r", self.r, "ancilla polarization must lie in [0, 1]")

    def map(self, dt: float) -> AffineMap:
        c, s = np.cos(self.omega * dt), np.sin(self.omega * dt)
        transfer = np.array([
            [c * c, self.r * c * s, 0.0],
            [-self.r * c * s, c * c, 0.0],
            [0.0, 0.0, c * c],
        ])
        return AffineMap(T=transfer, d=np.array([0.0, 0.0, self.r * s * s]))

    def taylor(self, k: int) -> np.ndarray:
        """Exact k-th Taylor coefficient of the augmented map."""
        w = self.omega ** k
        c2 = _cos2_coefficient(k) * w
        cs = _sincos_coefficient(k) * w
        out = np.zeros((4, 4))
        out[1, 1] = out[2, 2] = out[3, 3] = c2
        out[1, 2], out[2, 1] = self.r * cs, -self.r * cs
        out[3, 0] = -self.r * c2
        return out

    def family(self) -> UpdateMapSeries:
        return UpdateMapSeries(
            dim=4,
            evaluator=lambda dt: augment(self.map(dt)),
            label=f"partial_swap(omega={self.omega}, r={self.r})",
            time_scale=1.0 / max(1.0, abs(self.omega)),
            taylor_fn=self.taylor,
        )

    def golden_generator(self) -> Tuple[Tuple[np.ndarray, ...], Tuple[np.ndarray, ...]]:
        """Closed forms (A_0, A_1, A_2) and (b_0, b_1, b_2)."""
        w, r = self.omega, self.r
        a0 = np.array([[0.0, w * r, 0.0], [-w * r, 0.0, 0.0], [0.0, 0.0, 0.0]])
        a1 = np.diag([-w ** 2 * (1 - r ** 2 / 2), -w ** 2 * (1 - r ** 2 / 2), -w ** 2])
        third = w ** 3 * r * (1 - r ** 2) / 3
        a2 = np.array([[0.0, third, 0.0], [-third, 0.0, 0.0], [0.0, 0.0, 0.0]])
        zero = np.zeros(3)
        return (a0, a1, a2), (zero, np.array([0.0, 0.0, w ** 2 * r]), zero)

    def bombardment_spec(self) -> BombardmentSpec:
        """The same collision on density matrices: H = omega SWAP."""
        half = 0.5 * self.omega
        return BombardmentSpec(
            h_s=half * IDENTITY,
            h_a=np.zeros((2, 2)),
            terms=tuple((sigma, half * sigma) for sigma in PAULIS),
            rho_a=0.5 * (IDENTITY + self.r * SIGMA_Z),
        )

    def channel(self, dt: float) -> ChannelOnStates:
        return ChannelOnStates(2, ancillary_bombardment(self.bombardment_spec()).family.at(dt))


def partial_swap(omega: float, r: float) -> PartialSwap:
    return PartialSwap(omega=float(omega), r=float(r))


# ---------------------------------------------------------------------------
# Zeno-type transfer between basis states
# ---------------------------------------------------------------------------

def zeno_transfer(h, basis) -> UpdateMapSeries:
    """Lambda(dt)_kl = |<k| exp(-i H dt) |l>|^2 for a measurement after every collision.

    `basis` holds the measured states as columns.
    """
    h = _hermitian(h, "H")
    basis = as_square(basis, "basis").astype(complex)
    if basis.shape != h.shape or not np.allclose(dagger(basis) @ basis, np.eye(h.shape[0]), atol=1e-10):
        raise InvalidArgumentError("basis", basis.shape, "must be a complete orthonormal set of states")

    h_basis = dagger(basis) @ h @ basis
    rates = np.abs(h_basis) ** 2
    np.fill_diagonal(rates, 0.0)
    lambda2 = rates - np.diag(rates.sum(axis=0))

    def evaluator(dt: float) -> np.ndarray:
        return np.abs(dagger(basis) @ expm(-1j * h * dt) @ basis) ** 2

    return UpdateMapSeries(
        dim=h.shape[0],
        evaluator=evaluator,
        taylor=(np.zeros_like(lambda2), lambda2),
        label="zeno_transfer",
        time_scale=_spectral_time_scale(h),
    )


# ---------------------------------------------------------------------------
# Ancillary bombardment
# ---------------------------------------------------------------------------

def phi_superops(spec: BombardmentSpec, count: int) -> List[np.ndarray]:
    """phi_n = (-i)^n / n! Tr_A([H, [H, ... [H, . kron rho_A]]]) for n = 1..count."""
    h = spec.hamiltonian()
    dims = (spec.d_s, spec.d_a)
    columns: List[List[np.ndarray]] = [[] for _ in range(count)]
    for unit in matrix_units(spec.d_s):
        x = np.kron(unit, spec.rho_a)
        for n in range(1, count + 1):
            x = h @ x - x @ h
            columns[n - 1].append(vec((-1j) ** n / factorial(n) * partial_trace(x, dims)))
    return [np.column_stack(c) for c in columns]


@dataclass
class BombardmentModel:
    spec: BombardmentSpec
    family: UpdateMapSeries

    @cached_property
    def phi(self) -> Tuple[np.ndarray, ...]:
        return tuple(self.family.taylor_coefficients(4))

    @cached_property
    def generators(self) -> GeneratorSeries:
        """L_0, L_1, L_2 assembled from the phi series."""
        return generator_series(self.family, 2)


def ancillary_bombardment(spec: BombardmentSpec) -> BombardmentModel:
    """rho -> Tr_A(U (rho kron rho_A) U^+) with U = exp(-i H dt)."""
    h = spec.hamiltonian()
    dims = (spec.d_s, spec.d_a)
    cache: Dict[int, np.ndarray] = {}

    def evaluator(dt: float) -> np.ndarray:
        u = expm(-1j * h * dt)
        u_dag = dagger(u)
        return superop_from_linear_map(
            lambda rho: partial_trace(u @ np.kron(rho, spec.rho_a) @ u_dag, dims), spec.d_s
        )

    def taylor_fn(k: int) -> np.ndarray:
        if k not in cache:
            cache.update(enumerate(phi_superops(spec, max(k, 4)), start=1))
        return cache[k]

    logger.debug(f"Bombardment model d_S={spec.d_s}, d_A={spec.d_a}, {len(spec.terms)} terms")
    family = UpdateMapSeries(
        dim=spec.d_s ** 2,
        evaluator=evaluator,
        label="ancillary_bombardment",
        time_scale=_spectral_time_scale(h),
        taylor_fn=taylor_fn,
    )
    return BombardmentModel(spec=spec, family=family)


def bombardment_l0_hamiltonian(spec: BombardmentSpec) -> np.ndarray:
    """H^(0) = H_S + Tr_A(H_SA rho_A)."""
    return spec.h_s + sum((spec.expectation(r) * q for q, r in spec.terms), np.zeros_like(spec.h_s))


def bombardment_h1(spec: BombardmentSpec) -> np.ndarray:
    """H^(1) = 1/2 Tr_A(i [H_A, H_SA] rho_A) = (i/2) sum_k <[H_A, R_k]> Q_k."""
    total = np.zeros_like(spec.h_s)
    for q, r in spec.terms:
        total += 0.5j * spec.expectation(spec.h_a @ r - r @ spec.h_a) * q
    return total


def bombardment_d_matrix(spec: BombardmentSpec) -> np.ndarray:
    """D_nm = <R_n R_m> - <R_n><R_m>, positive semidefinite."""
    rs = [r for _, r in spec.terms]
    means = np.array([spec.expectation(r) for r in rs])
    second = np.array([[spec.expectation(rn @ rm) for rm in rs] for rn in rs])
    return second - np.outer(means, means)


def bombardment_l1_superop(spec: BombardmentSpec) -> np.ndarray:
    """L_1[rho] = -i[H^(1), rho] + sum_nm D_mn (Q_n rho Q_m - 1/2 {Q_m Q_n, rho})."""
    d = bombardment_d_matrix(spec)
    identity = np.eye(spec.d_s)
    total = commutator_superop(bombardment_h1(spec))
    qs = [q for q, _ in spec.terms]
    for n, qn in enumerate(qs):
        for m, qm in enumerate(qs):
            anti = qm @ qn
            total = total + d[m, n] * (
                sandwich(qn, qm) - 0.5 * (sandwich(anti, identity) + sandwich(identity, anti))
            )
    return total


# ---------------------------------------------------------------------------
# Oscillators, thermal states and named bombardment specs
# ---------------------------------------------------------------------------

def fock_operators(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(a, q, p) truncated to n Fock levels, with q = (a + a^+)/sqrt 2 and p = i(a^+ - a)/sqrt 2."""
    if n < 2:
        raise InvalidArgumentError("n_max", n, "need at least two Fock levels")
    a = np.diag(np.sqrt(np.arange(1, n)), k=1).astype(complex)
    q = (a + dagger(a)) / np.sqrt(2)
    p = 1j * (dagger(a) - a) / np.sqrt(2)
    return a, q, p


def fock_state(n: int, level: int = 0) -> np.ndarray:
    rho = np.zeros((n, n), dtype=complex)
    rho[level, level] = 1.0
    return rho


def thermal_state(h, beta: float) -> np.ndarray:
    """exp(-beta H) / Z."""
    h = _hermitian(h, "H")
    energies, vectors = np.linalg.eigh(h)
    weights = np.exp(-beta * (energies - energies.min()))
    weights /= weights.sum()
    return (vectors * weights) @ dagger(vectors)


def caves_milburn(
    g: float,
    n_system: int = 4,
    n_ancilla: Optional[int] = None,
    omega_a: float = 0.0,
    rho_a=None
) -> BombardmentSpec:
    """Oscillator bombarded by oscillator ancillas through g q_S kron p_A."""
    n_ancilla = settings.FOCK_DIM if n_ancilla is None else n_ancilla
    _, q_s, _ = fock_operators(n_system)
    a_a, _, p_a = fock_operators(n_ancilla)
    return BombardmentSpec(
        h_s=np.zeros((n_system, n_system)),
        h_a=omega_a * dagger(a_a) @ a_a,
        terms=((g * q_s, p_a),),
        rho_a=fock_state(n_ancilla) if rho_a is None else rho_a,
    )


def purifying_oscillator(omega: float, n_ancilla: Optional[int] = None) -> BombardmentSpec:
    """Qubit coupled through sigma_x kron omega q + sigma_y kron omega p to vacuum ancillas."""
    n_ancilla = settings.FOCK_DIM if n_ancilla is None else n_ancilla
    _, q, p = fock_operators(n_ancilla)
    return BombardmentSpec(
        h_s=np.zeros((2, 2)),
        h_a=np.zeros((n_ancilla, n_ancilla)),
        terms=((SIGMA_X, omega * q), (SIGMA_Y, omega * p)),
        rho_a=fock_state(n_ancilla),
    )


def isotropic_spin(j: float, bloch, h_s=None, h_a=None) -> BombardmentSpec:
    """J sigma_S . sigma_A with ancillas at Bloch vector `bloch`."""
    bloch = np.asarray(bloch, dtype=float)
    if bloch.shape != (3,) or np.linalg.norm(bloch) > 1 + 1e-12:
        raise InvalidArgumentError("ancilla Bloch vector", bloch.tolist(), "must be a 3-vector of norm <= 1")
    return BombardmentSpec(
        h_s=np.zeros((2, 2)) if h_s is None else h_s,
        h_a=np.zeros((2, 2)) if h_a is None else h_a,
        terms=tuple((sigma, j * sigma) for sigma in PAULIS),
        rho_a=0.5 * (IDENTITY + sum(c * s for c, s in zip(bloch, PAULIS))),
    )


def converge_fock(
    quantity: Callable[[int], np.ndarray],
    n_max: Optional[int] = None,
    tol: Optional[float] = None,
    max_doublings: int = 3
) -> Tuple[int, np.ndarray]:
    """Double the Fock truncation until `quantity` stops changing.

    Returns the truncation at which two successive values agreed and the
    value there; logs a warning and returns the last value otherwise.
    """
    n = settings.FOCK_DIM if n_max is None else n_max
    tol = 1e-8 if tol is None else tol
    current = np.asarray(quantity(n))
    for _ in range(max_doublings):
        following = np.asarray(quantity(2 * n))
        change = float(np.abs(following - current).max(initial=0.0))
        logger.debug(f"Fock truncation {n} -> {2 * n}: change {change:.3e}")
        if change <= tol * max(1.0, float(np.abs(following).max(initial=0.0))):
            return n, current
        n, current = 2 * n, following
    logger.warning(f"Fock truncation did not converge up to n_max={n}")
    return n, current
