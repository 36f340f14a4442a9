"""Channel algebra on d-dimensional density matrices.

Superoperators act on row-major vec(rho), so the Kraus map rho -> A rho B
has matrix A kron B^T and a Kraus set {A_k} has superoperator
sum_k A_k kron conj(A_k).
"""
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple
import logging

import numpy as np

from collint.config import settings
from collint.exceptions import InvalidMatrixError, NotCPError, NotTraceAnnihilatingError
from collint.numkit import HermitianReport, as_square, dagger, hermitian_report, unvec, vec

logger = logging.getLogger(__name__)

MAX_DIM = 64


@dataclass(frozen=True)
class ChannelOnStates:
    """Linear map on d x d matrices, stored as its d^2 x d^2 superoperator."""
    dim: int
    superoperator: np.ndarray

    def apply(self, rho) -> np.ndarray:
        return unvec(self.superoperator @ vec(rho), self.dim, self.dim)

    def compose(self, other: "ChannelOnStates") -> "ChannelOnStates":
        """self after other."""
        return ChannelOnStates(self.dim, self.superoperator @ other.superoperator)


@dataclass(frozen=True)
class KrausSet:
    operators: Tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def completeness_residual(self) -> float:
        total = sum(dagger(a) @ a for a in self.operators)
        return float(np.abs(total - np.eye(self.dim)).max())


@dataclass(frozen=True)
class LindbladForm:
    """L[rho] = -i[H, rho] + sum_j rate_j (F_j rho F_j^+ - 1/2 {F_j^+ F_j, rho})."""
    hamiltonian: np.ndarray
    rates: np.ndarray
    modes: Tuple[np.ndarray, ...]
    is_cp: bool = True
    residual: float = 0.0

    def superoperator(self) -> np.ndarray:
        return lindblad_superop(self.hamiltonian, self.rates, self.modes)

    def rate_along(self, operator) -> float:
        """Rate expressed in the normalization of an unnormalized mode operator.

        For a single mode parallel to `operator` this is the coefficient g in
        g (O rho O^+ - 1/2 {O^+ O, rho}).
        """
        operator = np.asarray(operator)
        norm2 = float(np.real(np.trace(dagger(operator) @ operator)))
        total = 0.0
        for rate, mode in zip(self.rates, self.modes):
            overlap = np.trace(dagger(mode) @ operator) / np.sqrt(norm2)
            total += float(rate) * abs(overlap) ** 2
        return total / norm2


@dataclass(frozen=True)
class ChannelReport:
    """Complete positivity and trace preservation residuals."""
    choi: HermitianReport
    tp_residual: float
    tolerance: float

    @property
    def is_cp(self) -> bool:
        return self.choi.min_eigenvalue >= -self.tolerance

    @property
    def is_tp(self) -> bool:
        return self.tp_residual <= self.tolerance


def _check_dim(d: int) -> None:
    if d < 1 or d > MAX_DIM:
        raise InvalidMatrixError(f"dimension {d} outside 1..{MAX_DIM}")


def matrix_units(d: int) -> List[np.ndarray]:
    """|i><j| in row-major order."""
    units = []
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            units.append(e)
    return units


def superop_from_linear_map(f: Callable[[np.ndarray], np.ndarray], d: int) -> np.ndarray:
    """Superoperator of an arbitrary linear map on d x d matrices."""
    return np.column_stack([vec(f(e)) for e in matrix_units(d)])


def sandwich(a, b) -> np.ndarray:
    """Superoperator of rho -> a rho b."""
    return np.kron(np.asarray(a), np.asarray(b).T)


def commutator_superop(h) -> np.ndarray:
    """Superoperator of rho -> -i[h, rho]."""
    h = as_square(h)
    identity = np.eye(h.shape[0])
    return -1j * (sandwich(h, identity) - sandwich(identity, h))


def dissipator(f) -> np.ndarray:
    """Superoperator of rho -> f rho f^+ - 1/2 {f^+ f, rho}."""
    f = as_square(f)
    identity = np.eye(f.shape[0])
    ff = dagger(f) @ f
    return sandwich(f, dagger(f)) - 0.5 * (sandwich(ff, identity) + sandwich(identity, ff))


def lindblad_superop(h, rates: Sequence[float], modes: Sequence[np.ndarray]) -> np.ndarray:
    total = commutator_superop(h)
    for rate, mode in zip(rates, modes):
        total = total + rate * dissipator(mode)
    return total


def transpose_superop(d: int) -> np.ndarray:
    """rho -> rho^T, positive but not completely positive."""
    return superop_from_linear_map(lambda rho: rho.T, d)


def partial_trace(x, dims: Tuple[int, int], keep: int = 0) -> np.ndarray:
    """Trace out one factor of a bipartite operator."""
    d_s, d_a = dims
    x = np.asarray(x).reshape(d_s, d_a, d_s, d_a)
    if keep == 0:
        return np.einsum("iaja->ij", x)
    return np.einsum("iaib->ab", x)


def ancilla_embedding(rho_a, d_s: int) -> np.ndarray:
    """Superoperator rho -> rho kron rho_a, from d_s^2 to (d_s d_a)^2."""
    rho_a = np.asarray(rho_a)
    d_a = rho_a.shape[0]
    eye_s = np.eye(d_s)
    return np.einsum("ik,jl,ab->iajbkl", eye_s, eye_s, rho_a).reshape((d_s * d_a) ** 2, d_s * d_s)


def partial_trace_superop(d_s: int, d_a: int) -> np.ndarray:
    """Superoperator of Tr_A, from (d_s d_a)^2 to d_s^2."""
    eye_s, eye_a = np.eye(d_s), np.eye(d_a)
    return np.einsum("ik,jl,ab->ijkalb", eye_s, eye_s, eye_a).reshape(d_s * d_s, (d_s * d_a) ** 2)


def trace_residual(superoperator: np.ndarray, d: int) -> float:
    """max over matrix units of |Tr(L[e])| - Tr(e)| for a map (or |Tr(L[e])| for a generator)."""
    return float(np.abs(vec(np.eye(d)) @ superoperator).max())


def channel_from_kraus(ops) -> ChannelOnStates:
    """Channel rho -> sum_k A_k rho A_k^+."""
    operators = ops.operators if isinstance(ops, KrausSet) else tuple(np.asarray(a) for a in ops)
    d = operators[0].shape[0]
    _check_dim(d)
    for a in operators:
        if a.shape != (d, d):
            raise InvalidMatrixError("Kraus operators must share one square shape", a.shape)

    superoperator = sum(np.kron(a, np.conj(a)) for a in operators)
    residual = KrausSet(tuple(operators)).completeness_residual()
    if residual > settings.TOL:
        logger.warning(f"Kraus set is not trace preserving (residual {residual:.3e})")
    return ChannelOnStates(d, superoperator)


def channel_from_superop(superoperator) -> ChannelOnStates:
    superoperator = as_square(superoperator, "superoperator")
    d = int(round(np.sqrt(superoperator.shape[0])))
    if d * d != superoperator.shape[0]:
        raise InvalidMatrixError("superoperator size is not a perfect square", superoperator.shape)
    _check_dim(d)
    return ChannelOnStates(d, superoperator)


def _reshuffle(m: np.ndarray, d: int) -> np.ndarray:
    return m.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)


def choi(ch: ChannelOnStates) -> np.ndarray:
    """J = sum_ij ch(|i><j|) kron |i><j|."""
    return _reshuffle(ch.superoperator, ch.dim)


def superop_from_choi(j) -> np.ndarray:
    j = as_square(j, "Choi matrix")
    d = int(round(np.sqrt(j.shape[0])))
    return _reshuffle(j, d)


def kraus_from_choi(j, tol: Optional[float] = None) -> KrausSet:
    """Kraus operators sqrt(lambda_k) unvec(u_k) from the Choi eigendecomposition."""
    j = as_square(j, "Choi matrix")
    d = int(round(np.sqrt(j.shape[0])))
    j = 0.5 * (j + dagger(j))
    if tol is None:
        tol = 1e-12 * max(float(np.real(np.trace(j))), 1e-300)

    eigenvalues, eigenvectors = np.linalg.eigh(j)
    if eigenvalues.min() < -tol:
        raise NotCPError(float(eigenvalues.min()), tol)

    operators = []
    for k in np.argsort(eigenvalues)[::-1]:
        if eigenvalues[k] <= tol:
            continue
        operators.append(np.sqrt(eigenvalues[k]) * unvec(eigenvectors[:, k], d, d))
    return KrausSet(tuple(operators))


def cptp_check(ch: ChannelOnStates, tol: Optional[float] = None) -> ChannelReport:
    """Minimum Choi eigenvalue and trace-preservation residual."""
    tol = settings.TOL if tol is None else tol
    report = hermitian_report(choi(ch), tol)
    tp = float(np.abs(vec(np.eye(ch.dim)) @ ch.superoperator - vec(np.eye(ch.dim))).max())
    return ChannelReport(choi=report, tp_residual=tp, tolerance=tol)


def gell_mann_basis(d: int) -> List[np.ndarray]:
    """Traceless Hermitian basis, orthonormal under Tr(A^+ B)."""
    basis = []
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1 / np.sqrt(2)
            basis.append(sym)
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k], anti[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            basis.append(anti)
    for l in range(1, d):
        diag = np.zeros(d, dtype=complex)
        diag[:l] = 1.0
        diag[l] = -l
        basis.append(np.diag(diag) / np.sqrt(l * (l + 1)))
    return basis


def lindblad_decompose(generator, tol: Optional[float] = None) -> LindbladForm:
    """Canonical (H, rates, modes) of a Hermiticity preserving, trace annihilating generator.

    H is traceless. Modes are traceless, orthonormal under the trace inner
    product and ordered by descending rate.
    """
    tol = settings.TOL if tol is None else tol
    generator = as_square(generator, "generator")
    d = int(round(np.sqrt(generator.shape[0])))
    _check_dim(d)

    scale = max(1.0, float(np.abs(generator).max()))
    residual = trace_residual(generator, d)
    if residual > tol * scale:
        raise NotTraceAnnihilatingError(residual)

    basis = [np.eye(d, dtype=complex) / np.sqrt(d)] + gell_mann_basis(d)
    frame = np.column_stack([vec(b) for b in basis])
    coefficients = dagger(frame) @ choi(ChannelOnStates(d, generator)) @ frame
    coefficients = 0.5 * (coefficients + dagger(coefficients))

    f_op = sum(coefficients[i, 0] * basis[i] for i in range(1, d * d)) / np.sqrt(d) if d > 1 else np.zeros((1, 1))
    hamiltonian = 0.5j * (f_op - dagger(f_op))

    rates, vectors = np.linalg.eigh(coefficients[1:, 1:]) if d > 1 else (np.zeros(0), np.zeros((0, 0)))
    order = np.argsort(rates)[::-1]
    rates = rates[order]
    modes = tuple(
        sum(vectors[i, k] * basis[i + 1] for i in range(d * d - 1)) for k in order
    )

    form = LindbladForm(
        hamiltonian=hamiltonian,
        rates=rates,
        modes=modes,
        is_cp=bool(np.all(rates >= -tol * scale)),
    )
    reconstruction = float(np.abs(form.superoperator() - generator).max())
    logger.debug(f"Lindblad decomposition d={d}: reconstruction residual {reconstruction:.2e}")
    return LindbladForm(form.hamiltonian, form.rates, form.modes, form.is_cp, reconstruction)
