"""Linear-affine update maps x -> T x + d and their interpolation generators.

An affine map is linearized by the augmentation (1, x) -> [[1, 0], [d, T]] (1, x),
whose principal logarithm is [[0, 0], [Log(T)/(T - 1) d, Log(T)]].
"""
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Optional, Tuple
import logging

import numpy as np

from collint.exceptions import InvalidMatrixError, NoIsolatedFixedPointError
from collint.numkit import expm, log_over_xm1, logm_principal
from collint.superop import ChannelOnStates

logger = logging.getLogger(__name__)

# Bloch basis; Y = [[0, i], [-i, 0]] fixes the orientation of the y axis.
PAULI_BASIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, 1j], [-1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class AffineMap:
    T: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.T).shape[0]
        if np.asarray(self.T).shape != (n, n) or np.asarray(self.d).shape != (n,):
            raise InvalidMatrixError("affine map needs an n x n T and length-n d", np.asarray(self.T).shape)

    def __call__(self, x) -> np.ndarray:
        return self.T @ np.asarray(x) + self.d


@dataclass(frozen=True)
class AffineGenerator:
    """dx/dt = A x + b."""
    A: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class FixedPoint:
    point: np.ndarray
    stable: bool
    eigenvalues: np.ndarray


def augment(m: AffineMap) -> np.ndarray:
    """[[1, 0^T], [d, T]]."""
    n = m.T.shape[0]
    out = np.zeros((n + 1, n + 1), dtype=np.result_type(m.T, m.d, float))
    out[0, 0] = 1.0
    out[1:, 0] = m.d
    out[1:, 1:] = m.T
    return out


def from_augmented(matrix) -> AffineMap:
    matrix = np.asarray(matrix)
    return AffineMap(T=matrix[1:, 1:], d=matrix[1:, 0])


def compose(second: AffineMap, first: AffineMap) -> AffineMap:
    """second after first."""
    return AffineMap(T=second.T @ first.T, d=second.T @ first.d + second.d)


def affine_generator(m: AffineMap, dt: float) -> AffineGenerator:
    """A = Log(T)/dt, b = Log(T)/(T - 1) d / dt."""
    a = logm_principal(m.T) / dt
    b = log_over_xm1(m.T) @ m.d / dt
    return AffineGenerator(A=np.real_if_close(a), b=np.real_if_close(b))


def augmented_generator(g: AffineGenerator) -> np.ndarray:
    n = g.A.shape[0]
    out = np.zeros((n + 1, n + 1), dtype=np.result_type(g.A, g.b, float))
    out[1:, 0] = g.b
    out[1:, 1:] = g.A
    return out


def affine_flow(g: AffineGenerator, t: float) -> AffineMap:
    """The affine map generated by g over a time t."""
    return from_augmented(expm(t * augmented_generator(g)))


def affine_propagate(g: AffineGenerator, x0, t_grid: Iterable[float]) -> np.ndarray:
    x0 = np.asarray(x0)
    return np.array([affine_flow(g, t)(x0) for t in t_grid])


def fixed_point(g: AffineGenerator, rtol: float = 1e-10) -> FixedPoint:
    """Solve A x* = -b and classify stability by the real parts of A's spectrum."""
    a = np.asarray(g.A)
    singular_values = np.linalg.svd(a, compute_uv=False)
    if singular_values.min() <= rtol * singular_values.max():
        raise NoIsolatedFixedPointError(float(singular_values.min()))

    point = np.linalg.solve(a, -np.asarray(g.b))
    eigenvalues = np.linalg.eigvals(a)
    return FixedPoint(point=np.real_if_close(point), stable=bool(np.all(eigenvalues.real < 0)), eigenvalues=eigenvalues)


def bloch_affine_map(channel: ChannelOnStates) -> AffineMap:
    """(T, d) of a qubit channel acting on the 3-Bloch vector."""
    if channel.dim != 2:
        raise InvalidMatrixError("Bloch representation needs a qubit channel", (channel.dim,))
    transfer = np.array([
        [0.5 * np.trace(p_i @ channel.apply(p_j)) for p_j in PAULI_BASIS]
        for p_i in PAULI_BASIS
    ])
    transfer = np.real_if_close(transfer, tol=1e6)
    return from_augmented(np.real(transfer))


def bloch_vector(rho) -> np.ndarray:
    rho = np.asarray(rho)
    return np.real(np.array([np.trace(p @ rho) for p in PAULI_BASIS[1:]]))


def density_from_bloch(a) -> np.ndarray:
    a = np.asarray(a)
    return 0.5 * (PAULI_BASIS[0] + sum(c * p for c, p in zip(a, PAULI_BASIS[1:])))


def sample_directions() -> np.ndarray:
    """The 26 normalized directions of the unit cube's neighbours."""
    dirs = [np.array(v, dtype=float) for v in product((-1, 0, 1), repeat=3) if any(v)]
    return np.array([v / np.linalg.norm(v) for v in dirs])


def is_physical_qubit_map(m: AffineMap, tol: float = 1e-9) -> bool:
    """|T a + d| <= 1 on the sampled unit sphere and at the origin."""
    points = np.vstack([sample_directions(), np.zeros(3)])
    return bool(all(np.linalg.norm(m(a)) <= 1 + tol for a in points))


def is_physical_qubit_generator(g: AffineGenerator, tol: float = 1e-9) -> bool:
    """a^T A a + a^T b <= 0 on the sampled unit sphere."""
    return bool(all(a @ g.A @ a + a @ g.b <= tol for a in sample_directions()))


def trajectory_in_ball(
    g: AffineGenerator,
    t_grid: Iterable[float],
    starts: Optional[np.ndarray] = None,
    tol: float = 1e-9
) -> Tuple[bool, float]:
    """Largest Bloch radius reached from the sampled pure states along t_grid."""
    starts = sample_directions() if starts is None else starts
    worst = 0.0
    for t in t_grid:
        flow = affine_flow(g, t)
        worst = max(worst, max(float(np.linalg.norm(flow(a))) for a in starts))
    return worst <= 1 + tol, worst
