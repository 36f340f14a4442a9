"""Pydantic models for scenario configs and run reports."""
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, ValidationInfo, field_validator, model_validator

from collint.numkit import is_hermitian

# Matrix entries are plain numbers or [re, im] pairs.
Entry = Union[float, Tuple[float, float]]
Matrix = List[List[Entry]]
Vector = List[Entry]


class ScenarioName(str, Enum):
    SCALAR_TOY = "scalar_toy"
    UNITARY = "unitary"
    DYSON = "dyson"
    MIXED_UNITARY = "mixed_unitary"
    PARTIAL_SWAP = "partial_swap"
    ZENO = "zeno"
    BOMBARDMENT = "bombardment"
    GAUSSIAN_BOMBARDMENT = "gaussian_bombardment"


class OutputKind(str, Enum):
    TRAJECTORY = "trajectory"
    GENERATOR = "generator"
    SERIES = "series"
    LINDBLAD = "lindblad"
    DIAGNOSTICS = "diagnostics"
    CLASSIFICATION = "classification"


def _entry(value: Entry) -> complex:
    if isinstance(value, (tuple, list)):
        return complex(value[0], value[1])
    return complex(value)


def _real_if_exact(arr: np.ndarray) -> np.ndarray:
    return np.real(arr) if np.all(arr.imag == 0) else arr


def matrix_array(matrix: Matrix) -> np.ndarray:
    return _real_if_exact(np.array([[_entry(v) for v in row] for row in matrix], dtype=complex))


def vector_array(vector: Vector) -> np.ndarray:
    return _real_if_exact(np.array([_entry(v) for v in vector], dtype=complex))


def _square(matrix: Matrix, name: str) -> np.ndarray:
    rows = {len(row) for row in matrix}
    if not matrix or rows != {len(matrix)}:
        raise ValueError(f"{name} must be a non-empty square matrix")
    return matrix_array(matrix)


def _hermitian(matrix: Matrix, name: str) -> Matrix:
    if not is_hermitian(_square(matrix, name)):
        raise ValueError(f"{name} must be Hermitian")
    return matrix


def _real_symmetric(matrix: Matrix, name: str) -> Matrix:
    arr = _square(matrix, name)
    if np.iscomplexobj(arr) or not np.allclose(arr, arr.T, atol=1e-12):
        raise ValueError(f"{name} must be real symmetric")
    if arr.shape[0] % 2:
        raise ValueError(f"{name} must be 2N x 2N")
    return matrix


# ---------------------------------------------------------------------------
# Scenario parameters
# ---------------------------------------------------------------------------

class ScalarToyParams(BaseModel):
    """M(dt) = 1 - b dt - a dt^2."""
    a: float = Field(ge=0)
    b: float = Field(ge=0)


class UnitaryParams(BaseModel):
    hamiltonian: Matrix

    @field_validator("hamiltonian")
    @classmethod
    def check_hamiltonian(cls, v: Matrix) -> Matrix:
        return _hermitian(v, "hamiltonian")


class DysonParams(BaseModel):
    """H(t) = h0 + t h1 + t^2 h2, clock reset or duration scaled."""
    h0: Matrix
    h1: Matrix
    h2: Optional[Matrix] = None
    duration_scaled: bool = False

    @field_validator("h0", "h1", "h2")
    @classmethod
    def check_hermitian(cls, v: Optional[Matrix], info: ValidationInfo) -> Optional[Matrix]:
        return v if v is None else _hermitian(v, info.field_name)


class MixedUnitaryParams(BaseModel):
    probabilities: List[float] = Field(min_length=1)
    hamiltonians: List[Matrix] = Field(min_length=1)

    @field_validator("probabilities")
    @classmethod
    def check_probabilities(cls, v: List[float]) -> List[float]:
        if any(p < 0 for p in v) or abs(sum(v) - 1.0) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to 1")
        return v

    @field_validator("hamiltonians")
    @classmethod
    def check_hamiltonians(cls, v: List[Matrix]) -> List[Matrix]:
        return [_hermitian(h, f"hamiltonians[{k}]") for k, h in enumerate(v)]

    @model_validator(mode="after")
    def check_lengths(self) -> "MixedUnitaryParams":
        if len(self.probabilities) != len(self.hamiltonians):
            raise ValueError("need one probability per Hamiltonian")
        return self


class PartialSwapParams(BaseModel):
    omega: float
    r: float = Field(ge=0, le=1)


class ZenoParams(BaseModel):
    """Measured basis as columns; the computational basis when omitted."""
    hamiltonian: Matrix
    basis: Optional[Matrix] = None

    @field_validator("hamiltonian")
    @classmethod
    def check_hamiltonian(cls, v: Matrix) -> Matrix:
        return _hermitian(v, "hamiltonian")


class InteractionTerm(BaseModel):
    q: Matrix
    r: Matrix

    @field_validator("q", "r")
    @classmethod
    def check_hermitian(cls, v: Matrix, info: ValidationInfo) -> Matrix:
        return _hermitian(v, info.field_name)


class BombardmentParams(BaseModel):
    """H = h_s + h_a + sum_k q_k kron r_k with fresh ancillas in rho_a.

    Setting beta declares rho_a thermal and enables the energy-scale
    sensitivity diagnostic.
    """
    h_s: Matrix
    h_a: Matrix
    terms: List[InteractionTerm] = Field(default_factory=list)
    rho_a: Matrix
    beta: Optional[float] = None

    @field_validator("h_s", "h_a", "rho_a")
    @classmethod
    def check_hermitian(cls, v: Matrix, info: ValidationInfo) -> Matrix:
        return _hermitian(v, info.field_name)

    @field_validator("rho_a")
    @classmethod
    def check_density(cls, v: Matrix) -> Matrix:
        rho = matrix_array(v)
        if abs(np.trace(rho) - 1) > 1e-10 or np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("rho_a must be positive with unit trace")
        return v


class GaussianBombardmentParams(BaseModel):
    f_s: Matrix
    f_a: Matrix
    g: Matrix
    alpha_s: Optional[List[float]] = None
    alpha_a: Optional[List[float]] = None
    ancilla_mean: Optional[List[float]] = None
    ancilla_cov: Optional[Matrix] = None

    @field_validator("f_s", "f_a")
    @classmethod
    def check_symmetric(cls, v: Matrix, info: ValidationInfo) -> Matrix:
        return _real_symmetric(v, info.field_name)

    @field_validator("ancilla_cov")
    @classmethod
    def check_cov(cls, v: Optional[Matrix]) -> Optional[Matrix]:
        return v if v is None else _real_symmetric(v, "ancilla_cov")


PARAMETER_MODELS = {
    ScenarioName.SCALAR_TOY: ScalarToyParams,
    ScenarioName.UNITARY: UnitaryParams,
    ScenarioName.DYSON: DysonParams,
    ScenarioName.MIXED_UNITARY: MixedUnitaryParams,
    ScenarioName.PARTIAL_SWAP: PartialSwapParams,
    ScenarioName.ZENO: ZenoParams,
    ScenarioName.BOMBARDMENT: BombardmentParams,
    ScenarioName.GAUSSIAN_BOMBARDMENT: GaussianBombardmentParams,
}

ScenarioParameters = Union[
    ScalarToyParams,
    UnitaryParams,
    DysonParams,
    MixedUnitaryParams,
    PartialSwapParams,
    ZenoParams,
    BombardmentParams,
    GaussianBombardmentParams,
]


class ScenarioConfig(BaseModel):
    """One run: a scenario, its parameters, the dt grid and the requested outputs."""
    scenario: ScenarioName
    parameters: ScenarioParameters
    dt_grid: List[float] = Field(min_length=1)
    orders: List[int] = Field(default_factory=lambda: [0, 1, 2, 3])
    initial_state: Optional[Vector] = None
    t_max: float = Field(default=1.0, gt=0)
    samples_per_step: int = Field(default=10, ge=1)
    outputs: List[OutputKind] = Field(default_factory=lambda: [OutputKind.GENERATOR])

    @field_validator("parameters", mode="before")
    @classmethod
    def parse_parameters(cls, v: Any, info: ValidationInfo) -> Any:
        scenario = info.data.get("scenario")
        if scenario is None or not isinstance(v, dict):
            return v
        try:
            return PARAMETER_MODELS[scenario].model_validate(v)
        except ValidationError as exc:
            first = exc.errors()[0]
            where = ".".join(str(part) for part in first["loc"]) or scenario.value
            raise ValueError(f"{where}: {first['msg'].removeprefix('Value error, ')}") from None

    @field_validator("dt_grid")
    @classmethod
    def check_dt_grid(cls, v: List[float]) -> List[float]:
        if any(dt <= 0 for dt in v):
            raise ValueError("dt_grid must be strictly positive")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("dt_grid must be strictly ascending")
        return v

    @field_validator("orders")
    @classmethod
    def check_orders(cls, v: List[int]) -> List[int]:
        if not v or any(k < 0 for k in v):
            raise ValueError("orders must be non-negative")
        return sorted(set(v))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

class Provenance(BaseModel):
    """Everything needed to reproduce a run."""
    config: Dict[str, Any]
    tolerances: Dict[str, float]
    versions: Dict[str, str]


class RunReport(BaseModel):
    scenario: str
    status: Literal["ok", "branch_failure"] = "ok"
    divergence_dt: Optional[float] = None
    files: Dict[str, str] = Field(default_factory=dict)
    results: Dict[str, Any] = Field(default_factory=dict)
    provenance: Provenance
