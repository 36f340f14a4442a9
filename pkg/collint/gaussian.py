"""Gaussian collision models on N bosonic modes.

Phase-space vectors are mode-adjacent, x = (q_1, p_1, q_2, p_2, ...), the
symplectic form is Omega = (+) [[0, 1], [-1, 0]] and covariances follow the
convention in which the vacuum has sigma = 1.

Channels act as X -> T X + d, sigma -> T sigma T^T + R. Generators act as
dX/dt = Omega A X + Omega b, d sigma/dt = Omega A sigma + sigma (Omega A)^T + C.
"""
from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Dict, List, Optional, Tuple, Union
import logging

import numpy as np

from collint.config import settings
from collint.exceptions import InvalidArgumentError, InvalidMatrixError
from collint.interp import UpdateMapSeries, generator_series
from collint.numkit import HermitianReport, expm, hermitian_report, log_over_xm1, logm_principal

logger = logging.getLogger(__name__)

OMEGA_2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
PAULI_X_2 = np.array([[0.0, 1.0], [1.0, 0.0]])
PAULI_Z_2 = np.array([[1.0, 0.0], [0.0, -1.0]])
BLOCK_BASIS = {"I": np.eye(2), "w": OMEGA_2, "x": PAULI_X_2, "z": PAULI_Z_2}


def symplectic_form(modes: int) -> np.ndarray:
    if modes < 1:
        raise InvalidArgumentError("modes", modes, "need at least one mode")
    return np.kron(np.eye(modes), OMEGA_2)


def _modes_of(m: np.ndarray, name: str) -> int:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] % 2 or m.shape[0] != m.shape[1]:
        raise InvalidMatrixError(f"{name} must be 2N x 2N", m.shape)
    return m.shape[0] // 2


def _symmetric(m, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    _modes_of(m, name)
    if not np.allclose(m, m.T, atol=settings.TOL * max(1.0, float(np.abs(m).max(initial=0.0)))):
        raise InvalidMatrixError(f"{name} must be symmetric", m.shape)
    return 0.5 * (m + m.T)


# ---------------------------------------------------------------------------
# States and conventions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    @property
    def modes(self) -> int:
        return _modes_of(self.cov, "covariance")

    def uncertainty_report(self, tol: Optional[float] = None) -> HermitianReport:
        """Smallest eigenvalue of sigma + i Omega."""
        tol = settings.CP_TOL if tol is None else tol
        return hermitian_report(np.asarray(self.cov) + 1j * symplectic_form(self.modes), tol)

    def is_valid(self, tol: Optional[float] = None) -> bool:
        cov = np.asarray(self.cov)
        return bool(
            np.asarray(self.mean).shape == (cov.shape[0],)
            and np.allclose(cov, cov.T, atol=1e-12)
            and self.uncertainty_report(tol).is_psd
        )


def vacuum_state(modes: int = 1) -> GaussianState:
    return GaussianState(mean=np.zeros(2 * modes), cov=np.eye(2 * modes))


def thermal_gaussian_state(nbar: float, modes: int = 1) -> GaussianState:
    """sigma = (2 nbar + 1) 1."""
    if nbar < 0:
        raise InvalidArgumentError("nbar", nbar, "mean occupation must be non-negative")
    return GaussianState(mean=np.zeros(2 * modes), cov=(2 * nbar + 1) * np.eye(2 * modes))


def coherent_state(mean) -> GaussianState:
    mean = np.asarray(mean, dtype=float)
    return GaussianState(mean=mean, cov=np.eye(mean.shape[0]))


def squeezed_state(r: float, phi: float = 0.0) -> GaussianState:
    """Single-mode squeezed vacuum, q squeezed by exp(-2r) before rotating by phi."""
    rotation = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    cov = rotation @ np.diag([np.exp(-2 * r), np.exp(2 * r)]) @ rotation.T
    return GaussianState(mean=np.zeros(2), cov=cov)


def to_half_convention(cov) -> np.ndarray:
    """Covariance in the convention where the vacuum has sigma = 1/2."""
    return 0.5 * np.asarray(cov)


def from_half_convention(cov) -> np.ndarray:
    return 2.0 * np.asarray(cov)


def ordering_permutation(modes: int) -> np.ndarray:
    """P with P (q_1, p_1, q_2, p_2, ...) = (q_1, q_2, ..., p_1, p_2, ...)."""
    order = [2 * k for k in range(modes)] + [2 * k + 1 for k in range(modes)]
    return np.eye(2 * modes)[order]


def to_block_ordering(x) -> np.ndarray:
    """Reorder a phase-space vector or matrix from mode-adjacent to all-q-then-all-p."""
    x = np.asarray(x)
    p = ordering_permutation(x.shape[0] // 2)
    return p @ x if x.ndim == 1 else p @ x @ p.T


def from_block_ordering(x) -> np.ndarray:
    x = np.asarray(x)
    p = ordering_permutation(x.shape[0] // 2)
    return p.T @ x if x.ndim == 1 else p.T @ x @ p


# ---------------------------------------------------------------------------
# Hamiltonians, channels, generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticHamiltonian:
    """H = 1/2 x^T F x + alpha^T x."""
    F: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        f = _symmetric(self.F, "F")
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.shape != (f.shape[0],):
            raise InvalidMatrixError("alpha must have length 2N", alpha.shape)
        object.__setattr__(self, "F", f)
        object.__setattr__(self, "alpha", alpha)


@dataclass(frozen=True)
class GaussianChannel:
    T: np.ndarray
    d: np.ndarray
    R: np.ndarray

    @property
    def modes(self) -> int:
        return _modes_of(self.T, "T")


@dataclass(frozen=True)
class GaussianGenerator:
    A: np.ndarray
    b: np.ndarray
    C: np.ndarray

    @property
    def modes(self) -> int:
        return _modes_of(self.A, "A")

    def omega_a(self) -> np.ndarray:
        return symplectic_form(self.modes) @ self.A

    def omega_b(self) -> np.ndarray:
        return symplectic_form(self.modes) @ self.b


@dataclass(frozen=True)
class GaussianSeries:
    A: Tuple[np.ndarray, ...]
    b: Tuple[np.ndarray, ...]
    C: Tuple[np.ndarray, ...]

    @property
    def order(self) -> int:
        return len(self.A) - 1

    def generator(self, m: int) -> GaussianGenerator:
        return GaussianGenerator(self.A[m], self.b[m], self.C[m])


@dataclass(frozen=True)
class GaussianCollisionSpec:
    """System modes S colliding with fresh ancilla modes A.

    The joint Hamiltonian has F_SA = [[F_S, G], [G^T, F_A]] and linear part
    (alpha_S, alpha_A); every ancilla starts in `ancilla`.
    """
    f_s: np.ndarray
    f_a: np.ndarray
    g: np.ndarray
    alpha_s: np.ndarray
    alpha_a: np.ndarray
    ancilla: GaussianState

    def __post_init__(self):
        f_s = _symmetric(self.f_s, "F_S")
        f_a = _symmetric(self.f_a, "F_A")
        g = np.asarray(self.g, dtype=float)
        if g.shape != (f_s.shape[0], f_a.shape[0]):
            raise InvalidMatrixError("G must be 2N_S x 2N_A", g.shape)
        alpha_s = np.asarray(self.alpha_s, dtype=float)
        alpha_a = np.asarray(self.alpha_a, dtype=float)
        if alpha_s.shape != (f_s.shape[0],) or alpha_a.shape != (f_a.shape[0],):
            raise InvalidMatrixError("alpha_S and alpha_A must match F_S and F_A", alpha_s.shape + alpha_a.shape)
        if np.asarray(self.ancilla.cov).shape != f_a.shape or not self.ancilla.is_valid():
            raise InvalidMatrixError("ancilla state is not a valid Gaussian state on the ancilla modes")
        for name, value in (("f_s", f_s), ("f_a", f_a), ("g", g), ("alpha_s", alpha_s), ("alpha_a", alpha_a)):
            object.__setattr__(self, name, value)

    @property
    def n_s(self) -> int:
        return self.f_s.shape[0] // 2

    @property
    def n_a(self) -> int:
        return self.f_a.shape[0] // 2

    def joint_hamiltonian(self) -> QuadraticHamiltonian:
        return QuadraticHamiltonian(
            F=np.block([[self.f_s, self.g], [self.g.T, self.f_a]]),
            alpha=np.concatenate([self.alpha_s, self.alpha_a]),
        )


def symplectic_evolve(h: QuadraticHamiltonian, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """(S, d) of x -> S x + d for the Hamiltonian flow over time t.

    S = exp(Omega F t) and d = (exp(Omega F t) - 1)/(Omega F) Omega alpha, both
    read off the exponential of the augmented generator [[Omega F, Omega alpha], [0, 0]].
    """
    n = h.F.shape[0]
    omega = symplectic_form(n // 2)
    augmented = np.zeros((n + 1, n + 1))
    augmented[:n, :n] = omega @ h.F
    augmented[:n, n] = omega @ h.alpha
    flow = expm(t * augmented)
    return flow[:n, :n], flow[:n, n]


def apply_channel(state: GaussianState, channel: GaussianChannel) -> GaussianState:
    t = np.asarray(channel.T)
    return GaussianState(
        mean=t @ np.asarray(state.mean) + channel.d,
        cov=t @ np.asarray(state.cov) @ t.T + channel.R,
    )


def dilate_reduce(spec: GaussianCollisionSpec, dt: float) -> GaussianChannel:
    """Reduced channel on S after one joint Gaussian collision of duration dt."""
    n = 2 * spec.n_s
    s, shift = symplectic_evolve(spec.joint_hamiltonian(), dt)
    m_sa = s[:n, n:]
    return GaussianChannel(
        T=s[:n, :n],
        d=m_sa @ spec.ancilla.mean + shift[:n],
        R=m_sa @ spec.ancilla.cov @ m_sa.T,
    )


def gaussian_cp_check(ch: GaussianChannel, tol: Optional[float] = None) -> HermitianReport:
    """Smallest eigenvalue of R - i(T Omega T^T - Omega); CP iff >= -tol."""
    tol = settings.CP_TOL if tol is None else tol
    omega = symplectic_form(ch.modes)
    t = np.asarray(ch.T)
    return hermitian_report(np.asarray(ch.R) - 1j * (t @ omega @ t.T - omega), tol)


def generator_cp_check(g: GaussianGenerator, tol: Optional[float] = None) -> HermitianReport:
    """Smallest eigenvalue of C - i Omega (A - A^T) Omega; CP iff >= -tol."""
    tol = settings.CP_TOL if tol is None else tol
    omega = symplectic_form(g.modes)
    a = np.asarray(g.A)
    return hermitian_report(np.asarray(g.C) - 1j * omega @ (a - a.T) @ omega, tol)


ChannelFamily = Callable[[float], GaussianChannel]


def gaussian_generator_exact(family: Union[ChannelFamily, GaussianChannel], dt: float) -> GaussianGenerator:
    """Interpolation generator of the channel reached after one step dt.

    Omega A = Log(T)/dt, Omega b = Log(T)/(T - 1) d/dt and
    vec C = Log(T kron T)/(T kron T - 1) vec R/dt.
    """
    if not dt > 0:
        raise InvalidArgumentError("dt", dt, "must be positive")
    ch = family(dt) if callable(family) else family
    t = np.asarray(ch.T, dtype=float)
    n = t.shape[0]
    omega = symplectic_form(n // 2)

    omega_a = logm_principal(t) / dt
    omega_b = log_over_xm1(t) @ np.asarray(ch.d) / dt
    c = (log_over_xm1(np.kron(t, t)) @ np.asarray(ch.R).reshape(-1)).reshape(n, n) / dt
    c = np.real_if_close(0.5 * (c + c.T), tol=1e6)

    # Omega^-1 = -Omega
    return GaussianGenerator(
        A=np.real(-omega @ omega_a),
        b=np.real(-omega @ omega_b),
        C=np.real(c),
    )


def _embedding_generator(g: GaussianGenerator) -> np.ndarray:
    """Generator on (1, X, vec sigma)."""
    n = 2 * g.modes
    omega_a = g.omega_a()
    out = np.zeros((1 + n + n * n, 1 + n + n * n))
    out[1:1 + n, 0] = g.omega_b()
    out[1:1 + n, 1:1 + n] = omega_a
    out[1 + n:, 0] = np.asarray(g.C).reshape(-1)
    out[1 + n:, 1 + n:] = np.kron(omega_a, np.eye(n)) + np.kron(np.eye(n), omega_a)
    return out


def _embedding_map(ch: GaussianChannel) -> np.ndarray:
    """Update map on (1, X, vec sigma)."""
    t = np.asarray(ch.T)
    n = t.shape[0]
    out = np.zeros((1 + n + n * n, 1 + n + n * n))
    out[0, 0] = 1.0
    out[1:1 + n, 0] = ch.d
    out[1:1 + n, 1:1 + n] = t
    out[1 + n:, 0] = np.asarray(ch.R).reshape(-1)
    out[1 + n:, 1 + n:] = np.kron(t, t)
    return out


def gaussian_channel_from_generator(g: GaussianGenerator, t: float) -> GaussianChannel:
    """Exact channel generated by g over a time t."""
    n = 2 * g.modes
    flow = expm(t * _embedding_generator(g))
    r = flow[1 + n:, 0].reshape(n, n)
    return GaussianChannel(T=flow[1:1 + n, 1:1 + n], d=flow[1:1 + n, 0], R=0.5 * (r + r.T))


# ---------------------------------------------------------------------------
# Generator series
# ---------------------------------------------------------------------------

def gaussian_generator_series(spec: GaussianCollisionSpec, order: int = 2) -> GaussianSeries:
    """Closed-form A_m, b_m, C_m for m <= 2."""
    if not 0 <= order <= 2:
        raise InvalidArgumentError("order", order, "closed forms are available up to second order")
    o_s, o_a = symplectic_form(spec.n_s), symplectic_form(spec.n_a)
    f_s, f_a, g = spec.f_s, spec.f_a, spec.g
    a_s, a_a = spec.alpha_s, spec.alpha_a
    x_a, s_a = np.asarray(spec.ancilla.mean), np.asarray(spec.ancilla.cov)

    g_oa_gt = g @ o_a @ g.T
    g_oa_fa = g @ o_a @ f_a
    a = (
        f_s,
        0.5 * g_oa_gt,
        -g_oa_gt @ o_s @ f_s / 12 - f_s @ o_s @ g_oa_gt / 12 + g_oa_fa @ o_a @ g.T / 6,
    )
    b = (
        a_s + g @ x_a,
        0.5 * g_oa_fa @ x_a + 0.5 * g @ o_a @ a_a,
        (
            -f_s @ o_s @ g @ o_a @ a_a / 12
            + g_oa_fa @ o_a @ a_a / 6
            - f_s @ o_s @ g_oa_fa @ x_a / 12
            + g_oa_fa @ o_a @ f_a @ x_a / 6
            - g_oa_gt @ o_s @ a_s / 12
            - g_oa_gt @ o_s @ g @ x_a / 12
        ),
    )
    o_s_g = o_s @ g
    o_a_f_a = o_a @ f_a
    c = (
        np.zeros_like(f_s),
        o_s_g @ s_a @ o_s_g.T,
        0.5 * o_s_g @ (o_a_f_a @ s_a + s_a @ o_a_f_a.T) @ o_s_g.T,
    )
    return GaussianSeries(A=a[: order + 1], b=b[: order + 1], C=c[: order + 1])


def _collision_taylor(spec: GaussianCollisionSpec) -> Callable[[int], np.ndarray]:
    """Exact Taylor coefficients of the (1, X, vec sigma) update map."""
    h = spec.joint_hamiltonian()
    n = 2 * spec.n_s
    omega = symplectic_form(spec.n_s + spec.n_a)
    k_joint, v = omega @ h.F, omega @ h.alpha
    x_a, s_a = np.asarray(spec.ancilla.mean), np.asarray(spec.ancilla.cov)

    powers = [np.eye(k_joint.shape[0])]
    transfer: List[np.ndarray] = [np.eye(n)]
    coupling: List[np.ndarray] = [np.zeros((n, k_joint.shape[0] - n))]
    cache: Dict[int, np.ndarray] = {}

    def grow(k: int) -> None:
        while len(powers) <= k:
            powers.append(powers[-1] @ k_joint)
            j = len(powers) - 1
            transfer.append(powers[j][:n, :n] / factorial(j))
            coupling.append(powers[j][:n, n:] / factorial(j))

    def taylor_fn(k: int) -> np.ndarray:
        if k in cache:
            return cache[k]
        grow(k)
        d_k = coupling[k] @ x_a + (powers[k - 1] @ v)[:n] / factorial(k)
        r_k = sum((coupling[i] @ s_a @ coupling[k - i].T for i in range(1, k)), np.zeros((n, n)))
        tt_k = sum(np.kron(transfer[i], transfer[k - i]) for i in range(k + 1))

        out = np.zeros((1 + n + n * n,) * 2)
        out[1:1 + n, 0] = d_k
        out[1:1 + n, 1:1 + n] = transfer[k]
        out[1 + n:, 0] = r_k.reshape(-1)
        out[1 + n:, 1 + n:] = tt_k
        cache[k] = out
        return out

    return taylor_fn


def gaussian_collision_family(spec: GaussianCollisionSpec) -> UpdateMapSeries:
    """The collision channel as a linear family on (1, X, vec sigma)."""
    n = 2 * spec.n_s
    scale = max(1.0, float(np.linalg.norm(spec.joint_hamiltonian().F, 2)))
    return UpdateMapSeries(
        dim=1 + n + n * n,
        evaluator=lambda dt: _embedding_map(dilate_reduce(spec, dt)),
        label="gaussian_collision",
        time_scale=1.0 / scale,
        taylor_fn=_collision_taylor(spec),
    )


def gaussian_generator_series_numeric(spec: GaussianCollisionSpec, order: int) -> GaussianSeries:
    """A_m, b_m, C_m to any order from the generator series of the embedded family."""
    n = 2 * spec.n_s
    omega = symplectic_form(spec.n_s)
    series = generator_series(gaussian_collision_family(spec), order)
    a, b, c = [], [], []
    for lm in series.coefficients:
        a.append(-omega @ lm[1:1 + n, 1:1 + n])
        b.append(-omega @ lm[1:1 + n, 0])
        c_m = lm[1 + n:, 0].reshape(n, n)
        c.append(0.5 * (c_m + c_m.T))
    return GaussianSeries(A=tuple(a), b=tuple(b), C=tuple(c))


def order_parity_check(series: GaussianSeries, tol: float = 1e-10) -> bool:
    """A_m is symmetric for even m and antisymmetric for odd m."""
    for m, a in enumerate(series.A):
        sign = 1 if m % 2 == 0 else -1
        if np.abs(a - sign * a.T).max(initial=0.0) > tol * max(1.0, float(np.abs(a).max(initial=0.0))):
            logger.warning(f"A_{m} breaks the order parity")
            return False
    return True


# ---------------------------------------------------------------------------
# Classification and rates
# ---------------------------------------------------------------------------

NAME_ROTATION = "Rotation"
NAME_SQUEEZING = "Squeezing"
NAME_AMPLIFICATION = "Amplification/Relaxation"
NAME_COUNTER_SQUEEZING = "Counter-Squeezing"
NAME_COUNTER_ROTATION = "Counter-Rotation"
NAME_DISPLACEMENT = "Displacement"
NAME_THERMAL_NOISE = "Free Thermal Noise"
NAME_SINGLE_SQUEEZED_NOISE = "Single-mode Squeezed Noise"
NAME_MULTI_SQUEEZED_NOISE = "Multi-mode Squeezed Noise"


@dataclass(frozen=True)
class DynamicsComponent:
    """One nonzero basis coefficient of a block of A_P, A_A, C or of b."""
    source: str
    block: Tuple[int, int]
    basis: str
    coefficient: float
    symplectic: bool
    active: bool
    state_dependent: bool
    single_mode: bool
    name: str


@dataclass(frozen=True)
class DynamicsClassification:
    passive: np.ndarray
    active: np.ndarray
    a_coefficients: np.ndarray
    c_coefficients: np.ndarray
    components: Tuple[DynamicsComponent, ...] = field(default_factory=tuple)

    def names(self) -> set:
        return {c.name for c in self.components}

    def reassemble(self) -> Tuple[np.ndarray, np.ndarray]:
        return _from_block_coefficients(self.a_coefficients), _from_block_coefficients(self.c_coefficients)


def block_coefficients(m) -> np.ndarray:
    """Coefficients of every 2x2 block on (1, omega, X, Z); shape (N, N, 4)."""
    m = np.asarray(m, dtype=float)
    n = _modes_of(m, "matrix")
    out = np.zeros((n, n, 4))
    for i in range(n):
        for j in range(n):
            blk = m[2 * i:2 * i + 2, 2 * j:2 * j + 2]
            out[i, j] = [
                0.5 * (blk[0, 0] + blk[1, 1]),
                0.5 * (blk[0, 1] - blk[1, 0]),
                0.5 * (blk[0, 1] + blk[1, 0]),
                0.5 * (blk[0, 0] - blk[1, 1]),
            ]
    return out


def _from_block_coefficients(coefficients: np.ndarray) -> np.ndarray:
    n = coefficients.shape[0]
    out = np.zeros((2 * n, 2 * n))
    basis = list(BLOCK_BASIS.values())
    for i in range(n):
        for j in range(n):
            out[2 * i:2 * i + 2, 2 * j:2 * j + 2] = sum(c * b for c, b in zip(coefficients[i, j], basis))
    return out


def passive_active_split(a) -> Tuple[np.ndarray, np.ndarray]:
    """A = A_P + A_A with (Omega A_P)^T = -Omega A_P and (Omega A_A)^T = Omega A_A."""
    a = np.asarray(a, dtype=float)
    omega = symplectic_form(_modes_of(a, "A"))
    conjugated = omega @ a.T @ omega
    return 0.5 * (a - conjugated), 0.5 * (a + conjugated)


def _a_component_name(basis: str, active: bool, single_mode: bool) -> Tuple[bool, str]:
    """(symplectic, name) for a component of A_P or A_A."""
    if basis in ("I", "w"):
        if not active:
            return True, NAME_ROTATION
        return False, NAME_AMPLIFICATION if single_mode else NAME_COUNTER_SQUEEZING
    if active:
        return True, NAME_SQUEEZING
    return False, NAME_COUNTER_ROTATION


def classify_dynamics(g: GaussianGenerator, tol: float = 1e-12) -> DynamicsClassification:
    """Split a generator into named components over four dichotomies."""
    passive, active = passive_active_split(g.A)
    scale = max(1.0, float(np.abs(g.A).max(initial=0.0)), float(np.abs(g.C).max(initial=0.0)))
    cutoff = tol * scale
    labels = list(BLOCK_BASIS)
    components: List[DynamicsComponent] = []

    for part, is_active in ((passive, False), (active, True)):
        coefficients = block_coefficients(part)
        for (i, j, k), value in np.ndenumerate(coefficients):
            if abs(value) <= cutoff:
                continue
            single = i == j
            symplectic, name = _a_component_name(labels[k], is_active, single)
            components.append(DynamicsComponent(
                source="A_A" if is_active else "A_P", block=(i, j), basis=labels[k],
                coefficient=float(value), symplectic=symplectic, active=is_active,
                state_dependent=True, single_mode=single, name=name,
            ))

    c_coefficients = block_coefficients(g.C)
    for (i, j, k), value in np.ndenumerate(c_coefficients):
        if abs(value) <= cutoff:
            continue
        single = i == j
        traceful = single and labels[k] == "I"
        if traceful:
            name = NAME_THERMAL_NOISE
        elif single:
            name = NAME_SINGLE_SQUEEZED_NOISE
        else:
            name = NAME_MULTI_SQUEEZED_NOISE
        components.append(DynamicsComponent(
            source="C", block=(i, j), basis=labels[k], coefficient=float(value),
            symplectic=False, active=traceful, state_dependent=False, single_mode=single, name=name,
        ))

    b = np.asarray(g.b, dtype=float)
    for mode in range(len(b) // 2):
        for offset, basis in ((0, "q"), (1, "p")):
            value = b[2 * mode + offset]
            if abs(value) > cutoff:
                components.append(DynamicsComponent(
                    source="b", block=(mode, mode), basis=basis, coefficient=float(value),
                    symplectic=True, active=True, state_dependent=False, single_mode=True,
                    name=NAME_DISPLACEMENT,
                ))

    return DynamicsClassification(
        passive=passive,
        active=active,
        a_coefficients=block_coefficients(g.A),
        c_coefficients=c_coefficients,
        components=tuple(components),
    )


def purity_rate(state: GaussianState, g: GaussianGenerator) -> float:
    """d/dt det sigma = det sigma Tr(2 Omega A + sigma^-1 C)."""
    cov = np.asarray(state.cov, dtype=float)
    det = float(np.linalg.det(cov))
    if abs(det) <= 1e-300 or np.linalg.cond(cov) > 1e14:
        raise InvalidMatrixError("covariance is singular", cov.shape)
    return det * float(np.trace(2 * g.omega_a() + np.linalg.solve(cov, g.C)))


def purification_possible(g: GaussianGenerator) -> bool:
    """Some state gains purity iff Tr(Omega A) < 0."""
    return bool(np.trace(g.omega_a()) < -settings.TOL)


def excitation_rate(state: GaussianState, g: GaussianGenerator) -> float:
    """Rate of Tr(sigma/2 + X X^T): Tr((Omega A + (Omega A)^T)(sigma/2 + X X^T)) + 2 X^T Omega b + Tr C."""
    x = np.asarray(state.mean, dtype=float)
    omega_a = g.omega_a()
    second = 0.5 * np.asarray(state.cov) + np.outer(x, x)
    return float(np.trace((omega_a + omega_a.T) @ second) + 2 * x @ g.omega_b() + np.trace(g.C))
