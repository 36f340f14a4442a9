"""Dense matrix kernels: exponential, principal logarithm, vectorization.

All matrix-valued quantities in collint are numpy arrays. Vectorization is
row-major, so that vec(X Y Z^T) = (X kron Z) vec(Y).
"""
from dataclasses import dataclass
from typing import Optional
import logging

import numpy as np
from scipy import linalg

from collint.config import settings
from collint.exceptions import BranchFailure, InvalidMatrixError, SingularMatrixError

logger = logging.getLogger(__name__)

_SINGULAR_RTOL = 1e-14
_SERIES_TERM_TOL = 1e-17
_SERIES_MAX_TERMS = 400


@dataclass(frozen=True)
class HermitianReport:
    """Positivity summary of a (nearly) Hermitian matrix."""
    is_hermitian: bool
    min_eigenvalue: float
    tolerance: float

    @property
    def is_psd(self) -> bool:
        return self.min_eigenvalue >= -self.tolerance


def as_square(m, name: str = "matrix") -> np.ndarray:
    """Validate a square matrix with finite entries and return it as an array."""
    arr = np.asarray(m)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidMatrixError(f"{name} must be square", arr.shape)
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrixError(f"{name} has non-finite entries", arr.shape)
    return arr


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(m)).T


def expm(a) -> np.ndarray:
    """Matrix exponential (scaling and squaring)."""
    return linalg.expm(as_square(a))


def check_branch(m: np.ndarray) -> np.ndarray:
    """Raise if the principal logarithm of m is undefined; return eigenvalues."""
    m = as_square(m)
    eigenvalues = linalg.eigvals(m)
    scale = max(1.0, float(np.abs(eigenvalues).max(initial=0.0)))
    smallest = eigenvalues[np.argmin(np.abs(eigenvalues))]
    if abs(smallest) <= _SINGULAR_RTOL * scale:
        raise SingularMatrixError(smallest)

    on_cut = (eigenvalues.real <= 0) & (
        np.abs(eigenvalues.imag) <= settings.BRANCH_RTOL * np.abs(eigenvalues)
    )
    if np.any(on_cut):
        raise BranchFailure(eigenvalues[on_cut][0])
    return eigenvalues


def _keep_real(result: np.ndarray, source: np.ndarray) -> np.ndarray:
    if np.isrealobj(source):
        return np.real_if_close(result, tol=1e6)
    return result


def logm_principal(m) -> np.ndarray:
    """Principal matrix logarithm, Log(1) = 0.

    Uses scipy's Schur-based inverse scaling and squaring. Raises
    BranchFailure when an eigenvalue lies on the closed negative real axis
    and SingularMatrixError when m is not invertible.
    """
    m = as_square(m)
    check_branch(m)
    result = linalg.logm(m)
    if isinstance(result, tuple):
        result = result[0]
    return _keep_real(np.asarray(result), m)


def log_over_xm1(m) -> np.ndarray:
    """Log(M)/(M - 1), understood through its power series about M = 1.

    M - 1 need not be invertible. Near the identity the series
    sum_k (-1)^k (M-1)^k/(k+1) is summed directly; further out the function
    is read off the principal logarithm of the block matrix [[M, 1], [0, 1]],
    whose upper-right block is the divided difference (Log M - Log 1)/(M - 1).
    """
    m = as_square(m)
    n = m.shape[0]
    identity = np.eye(n, dtype=m.dtype)
    x = m - identity

    if np.linalg.norm(x, 2) < settings.SERIES_SWITCH:
        result = np.eye(n, dtype=np.result_type(m, float))
        power = np.eye(n, dtype=result.dtype)
        for k in range(1, _SERIES_MAX_TERMS):
            power = power @ x
            term = ((-1) ** k / (k + 1)) * power
            result = result + term
            if np.abs(term).max(initial=0.0) < _SERIES_TERM_TOL:
                break
        return result

    logger.debug(f"log_over_xm1: |M - 1| above {settings.SERIES_SWITCH}, using the block logarithm")
    block = np.block([[m, identity], [np.zeros_like(m), identity]])
    return logm_principal(block)[:n, n:]


def vec(m) -> np.ndarray:
    """Stack matrix entries row by row."""
    return np.asarray(m).reshape(-1)


def unvec(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of vec."""
    v = np.asarray(v)
    if v.size != rows * cols:
        raise InvalidMatrixError(f"cannot reshape {v.size} entries into {rows}x{cols}", v.shape)
    return v.reshape(rows, cols)


def kron(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise InvalidMatrixError("kron expects two matrices")
    return np.kron(a, b)


def hermitian_report(m, tol: Optional[float] = None) -> HermitianReport:
    """Smallest eigenvalue of the Hermitian part of m."""
    tol = settings.TOL if tol is None else tol
    m = as_square(m)
    herm = 0.5 * (m + dagger(m))
    is_herm = bool(np.abs(m - herm).max(initial=0.0) <= tol * max(1.0, np.abs(m).max(initial=0.0)))
    min_eig = float(np.linalg.eigvalsh(herm).min())
    return HermitianReport(is_hermitian=is_herm, min_eigenvalue=min_eig, tolerance=tol)


def is_hermitian(m, tol: float = 1e-10) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.allclose(m, dagger(m), atol=tol, rtol=0))
