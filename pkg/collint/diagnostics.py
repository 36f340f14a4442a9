"""Analysis of interpolated collision dynamics.

Unitality and purification tests, the Kraus first/second-kind
classification with the continuum limit it implies, and the sensitivity of
the generator series to the energy scale of a thermal ancilla.
"""
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple
import logging

import numpy as np

from collint.config import settings
from collint.exceptions import BranchMatchingFailure, InvalidArgumentError
from collint.numkit import dagger, unvec, vec
from collint.scenarios import BombardmentSpec, ancillary_bombardment, thermal_state
from collint.superop import ChannelOnStates, LindbladForm, choi, kraus_from_choi, lindblad_decompose, sandwich

logger = logging.getLogger(__name__)

FIRST_KIND = "first"
SECOND_KIND = "second"
INDETERMINATE = "indeterminate"

_KIND_WINDOW = 0.1
_MIN_OVERLAP = 0.5
_MIN_GRID = 6
_SENSITIVE_TOL = 1e-8


def _identity_image(generator) -> np.ndarray:
    generator = np.asarray(generator)
    d = int(round(np.sqrt(generator.shape[0])))
    return unvec(generator @ vec(np.eye(d)), d, d)


def unitality_defect(generator) -> float:
    """Trace norm of L[1]; zero means the dynamics cannot purify any state."""
    return float(np.linalg.svd(_identity_image(generator), compute_uv=False).sum())


def _all_terms(spec: BombardmentSpec) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Interaction terms plus the free-Hamiltonian slots H_S kron 1 and 1 kron H_A."""
    return list(spec.terms) + [
        (spec.h_s, np.eye(spec.d_a)),
        (np.eye(spec.d_s), spec.h_a),
    ]


def purification_first_order(spec: BombardmentSpec) -> np.ndarray:
    """L_1[1] = -1/2 sum_nm <[R_n, R_m]> [Q_n, Q_m].

    Nonzero exactly when the collisions can purify at first order in dt.
    """
    total = np.zeros((spec.d_s, spec.d_s), dtype=complex)
    for qn, rn in _all_terms(spec):
        for qm, rm in _all_terms(spec):
            weight = spec.expectation(rn @ rm - rm @ rn)
            if weight != 0:
                total += -0.5 * weight * (qn @ qm - qm @ qn)
    return total


def second_order_unitality(spec: BombardmentSpec) -> np.ndarray:
    """L_2[1] from the assembled phi series."""
    return _identity_image(ancillary_bombardment(spec).generators.coefficients[2])


# ---------------------------------------------------------------------------
# Kraus kinds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KrausBranch:
    """One Kraus operator tracked across the time-step grid.

    `leading` is the dt -> 0 limit of A(dt) / dt^power, with power the exponent
    rounded to the nearest half integer: A_{m,0} for exponent 0 and A_{n,1/2}
    for second-kind operators. `first_order` is A_{m,1} for exponent 0.
    """
    exponent: float
    kind: str
    power: float
    leading: np.ndarray
    first_order: Optional[np.ndarray] = None


@dataclass(frozen=True)
class KrausKindReport:
    dts: Tuple[float, ...]
    branches: Tuple[KrausBranch, ...]

    @property
    def first_kind(self) -> Tuple[KrausBranch, ...]:
        return tuple(b for b in self.branches if b.kind == FIRST_KIND)

    @property
    def second_kind(self) -> Tuple[KrausBranch, ...]:
        return tuple(b for b in self.branches if b.kind == SECOND_KIND)


def classify_exponent(exponent: float) -> str:
    """Near a non-negative integer: first kind; near a half integer: second kind."""
    if exponent < -_KIND_WINDOW:
        return INDETERMINATE
    if abs(exponent - round(exponent)) <= _KIND_WINDOW:
        return FIRST_KIND
    if abs(exponent - (np.floor(exponent) + 0.5)) <= _KIND_WINDOW:
        return SECOND_KIND
    return INDETERMINATE


def _overlap(a: np.ndarray, b: np.ndarray) -> complex:
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    return complex(np.trace(dagger(a) @ b) / norm) if norm > 0 else 0.0


def _match(previous: Sequence[np.ndarray], current: Sequence[np.ndarray], dt: float) -> List[np.ndarray]:
    """Reorder and rephase `current` to follow `previous` by maximal overlap."""
    if len(previous) != len(current):
        raise BranchMatchingFailure(dt, 0.0, f"Kraus rank changed from {len(previous)} to {len(current)}")

    matched: List[np.ndarray] = []
    used = set()
    for prev in previous:
        overlaps = [abs(_overlap(prev, op)) if k not in used else -1.0 for k, op in enumerate(current)]
        best = int(np.argmax(overlaps))
        if overlaps[best] < _MIN_OVERLAP:
            raise BranchMatchingFailure(dt, overlaps[best])
        used.add(best)
        phase = _overlap(prev, current[best])
        matched.append(current[best] * np.conj(phase) / abs(phase))
    return matched


def _extrapolate(dts: np.ndarray, values: Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """Value and slope at dt = 0 of the quadratic through the first three points."""
    x0, x1, x2 = dts[:3]
    y0, y1, y2 = values[:3]
    value = (
        y0 * x1 * x2 / ((x0 - x1) * (x0 - x2))
        + y1 * x0 * x2 / ((x1 - x0) * (x1 - x2))
        + y2 * x0 * x1 / ((x2 - x0) * (x2 - x1))
    )
    slope = (
        -y0 * (x1 + x2) / ((x0 - x1) * (x0 - x2))
        - y1 * (x0 + x2) / ((x1 - x0) * (x1 - x2))
        - y2 * (x0 + x1) / ((x2 - x0) * (x2 - x1))
    )
    return value, slope


def _kraus_operators(channel: ChannelOnStates) -> List[np.ndarray]:
    return list(kraus_from_choi(choi(channel)).operators)


def kraus_kind_classify(
    family: Callable[[float], ChannelOnStates],
    dt_grid: Sequence[float]
) -> KrausKindReport:
    """Track Kraus operators over an ascending dt grid and fit their scaling exponents.

    The exponent is the log-log slope of the leading singular value against dt.
    """
    dts = np.sort(np.asarray(dt_grid, dtype=float))
    if len(dts) < _MIN_GRID or dts[0] <= 0:
        raise InvalidArgumentError("dt_grid", list(dts), f"need at least {_MIN_GRID} positive time steps")

    tracks = [_kraus_operators(family(dts[0]))]
    for dt in dts[1:]:
        tracks.append(_match(tracks[-1], _kraus_operators(family(dt)), float(dt)))

    log_dt = np.log(dts)
    branches = []
    for k in range(len(tracks[0])):
        ops = [track[k] for track in tracks]
        leading_sv = np.array([np.linalg.svd(op, compute_uv=False)[0] for op in ops])
        exponent = float(np.polyfit(log_dt, np.log(leading_sv), 1)[0])
        kind = classify_exponent(exponent)
        power = round(2 * exponent) / 2
        leading, slope = _extrapolate(dts, [op / dt ** power for op, dt in zip(ops, dts)])
        first_order = slope if kind == FIRST_KIND and power == 0 else None
        logger.debug(f"Kraus branch {k}: exponent {exponent:.4f} ({kind})")
        branches.append(KrausBranch(exponent, kind, power, leading, first_order))

    if any(b.kind == INDETERMINATE for b in branches):
        logger.warning("Some Kraus operators do not scale with an integer or half-integer exponent")
    return KrausKindReport(dts=tuple(float(dt) for dt in dts), branches=tuple(branches))


def continuum_lindblad(report: KrausKindReport, tol: float = 1e-6) -> LindbladForm:
    """Continuum-limit generator from the first- and second-kind operators.

    L_0[rho] = K rho + rho K^+ + sum_n A_n rho A_n^+, with A_n the second-kind
    limits and K = sum_m conj(c_m) A_{m,1} over first-kind operators whose
    limit is c_m times the identity.
    """
    d = report.branches[0].leading.shape[0]
    identity = np.eye(d)
    k_op = np.zeros((d, d), dtype=complex)
    for branch in report.first_kind:
        if branch.first_order is None:
            continue
        c_m = np.trace(branch.leading) / d
        k_op += np.conj(c_m) * branch.first_order

    generator = sandwich(k_op, identity) + sandwich(identity, dagger(k_op))
    for branch in report.second_kind:
        generator = generator + sandwich(branch.leading, dagger(branch.leading))
    return lindblad_decompose(generator, tol=tol)


# ---------------------------------------------------------------------------
# Energy-scale sensitivity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SensitivityReport:
    """Norms of d L_m / d lambda at lambda = 1 under H_A -> lambda H_A, beta -> beta / lambda."""
    derivatives: Tuple[float, ...]
    first_sensitive_order: Optional[int]
    degenerate: bool
    step: float


def energy_scale_sensitivity(
    spec: BombardmentSpec,
    beta: float,
    order: int = 2,
    step: Optional[float] = None
) -> SensitivityReport:
    """Central-difference sensitivity of L_0 .. L_order to the ancilla energy scale.

    The co-transformation leaves the thermal ancilla state fixed, so only
    the ancilla Hamiltonian entering the collision changes.
    """
    if order < 0 or order > 2:
        raise InvalidArgumentError("order", order, "sensitivity is computed up to second order")
    if not np.allclose(spec.rho_a, thermal_state(spec.h_a, beta), atol=1e-10):
        raise InvalidArgumentError("rho_A", "non-thermal", f"must equal exp(-beta H_A)/Z at beta={beta}")
    step = settings.SENSITIVITY_STEP if step is None else step

    def series(scale: float):
        scaled = spec.with_ancilla(h_a=scale * spec.h_a)
        return ancillary_bombardment(scaled).generators.coefficients

    upper, lower = series(1 + step), series(1 - step)
    derivatives = tuple(
        float(np.linalg.norm((upper[m] - lower[m]) / (2 * step), 2)) for m in range(order + 1)
    )

    first = next((m for m, value in enumerate(derivatives) if value > _SENSITIVE_TOL), None)

    interaction = spec.interaction()
    free_a = np.kron(np.eye(spec.d_s), spec.h_a)
    degenerate = bool(np.abs(interaction @ free_a - free_a @ interaction).max(initial=0.0) <= settings.TOL)
    if degenerate:
        logger.info("Interaction commutes with the ancilla Hamiltonian; no order is sensitive")
    return SensitivityReport(derivatives=derivatives, first_sensitive_order=first, degenerate=degenerate, step=step)
