"""Interpolation generators of discrete update maps.

Given an update map M(dt) applied once per collision, the interpolation
generator L_dt = Log(M(dt))/dt is the unique time-independent generator on
the principal branch with exp(dt L_dt) = M(dt). Expanding
M(dt) = 1 + dt M_1 + dt^2 M_2 + ... gives L_dt = L_0 + dt L_1 + ... with

    L_m = M_{m+1} - sum_{n=1}^{m} 1/(n+1)! sum_{b in C_w(m-n, n+1)} L_{b_1} ... L_{b_{n+1}}

where C_w(M, N) are the weak compositions of M into N parts.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial
from typing import Callable, Iterable, List, Optional, Sequence, Tuple
import logging

import numpy as np

from collint.config import settings
from collint.exceptions import (
    BranchFailure,
    InsufficientOrderError,
    InvalidArgumentError,
    InvalidMatrixError,
)
from collint.numkit import as_square, expm, logm_principal

logger = logging.getLogger(__name__)

Evaluator = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class UpdateMapSeries:
    """A family M(dt) given by an evaluator, Taylor data [M_1, M_2, ...], or both."""
    dim: int
    evaluator: Optional[Evaluator] = None
    taylor: Optional[Tuple[np.ndarray, ...]] = None
    label: str = ""
    time_scale: float = 1.0
    taylor_fn: Optional[Callable[[int], np.ndarray]] = None

    def __post_init__(self):
        if self.evaluator is None and self.taylor is None and self.taylor_fn is None:
            raise InvalidArgumentError("UpdateMapSeries", self.label, "needs an evaluator or Taylor data")

    def at(self, dt: float) -> np.ndarray:
        if self.evaluator is None:
            raise InvalidArgumentError("evaluator", None, f"{self.label or 'family'} has Taylor data only")
        return np.asarray(self.evaluator(dt))

    def taylor_coefficients(self, count: int) -> List[np.ndarray]:
        """[M_1, ..., M_count], falling back to finite differences of the evaluator."""
        if self.taylor_fn is not None:
            return [np.asarray(self.taylor_fn(k)) for k in range(1, count + 1)]
        if self.taylor is not None and len(self.taylor) >= count:
            return [np.asarray(m) for m in self.taylor[:count]]
        if self.evaluator is None:
            raise InsufficientOrderError(len(self.taylor or ()), count)
        logger.debug(f"Extracting {count} Taylor coefficients of {self.label!r} by finite differences")
        return taylor_from_evaluator(self.evaluator, count, self.time_scale)


@dataclass(frozen=True)
class GeneratorSeries:
    """Coefficients [L_0, ..., L_K] of the generator expansion in dt."""
    coefficients: Tuple[np.ndarray, ...]

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def truncated(self, dt: float, order: Optional[int] = None) -> np.ndarray:
        return truncated_generator(self, dt, order)


@dataclass(frozen=True)
class OrderFit:
    slope: float
    intercept: float
    errors: Tuple[float, ...]
    degenerate: bool = False


@dataclass
class SweepResult:
    """Exact generators over a dt grid, cut at the first branch failure."""
    dts: List[float] = field(default_factory=list)
    generators: List[np.ndarray] = field(default_factory=list)
    divergence: Optional[float] = None
    failure: Optional[BranchFailure] = None


def generator_exact(m, dt: float) -> np.ndarray:
    """L = Log(M)/dt on the principal branch."""
    if not dt > 0:
        raise InvalidArgumentError("dt", dt, "must be positive")
    return logm_principal(m) / dt


@lru_cache(maxsize=None)
def _weak_compositions(total: int, parts: int) -> Tuple[Tuple[int, ...], ...]:
    if parts == 1:
        return ((total,),)
    out = []
    for first in range(total + 1):
        for rest in _weak_compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return tuple(out)


def weak_compositions(total: int, parts: int) -> List[Tuple[int, ...]]:
    """All length-`parts` tuples of non-negative integers summing to `total`, lexicographic."""
    if total < 0 or parts < 1:
        raise InvalidArgumentError("weak composition", (total, parts), "need total >= 0 and parts >= 1")
    return list(_weak_compositions(total, parts))


def generator_series(family: UpdateMapSeries, order: int) -> GeneratorSeries:
    """L_0 .. L_order from M_1 .. M_{order+1}.

    Products are taken left to right exactly as the composition lists them;
    no commutation between different L_m is assumed.
    """
    if order < 0:
        raise InvalidArgumentError("order", order, "must be non-negative")
    taylor = _taylor_or_raise(family, order + 1)

    coefficients: List[np.ndarray] = []
    for m in range(order + 1):
        lm = np.array(taylor[m], dtype=np.result_type(*taylor, float), copy=True)
        for n in range(1, m + 1):
            weight = 1.0 / factorial(n + 1)
            for beta in weak_compositions(m - n, n + 1):
                product = coefficients[beta[0]]
                for index in beta[1:]:
                    product = product @ coefficients[index]
                lm = lm - weight * product
        coefficients.append(lm)
        logger.debug(f"L_{m} norm {np.linalg.norm(lm):.6g}")
    return GeneratorSeries(tuple(coefficients))


def _taylor_or_raise(family: UpdateMapSeries, count: int) -> List[np.ndarray]:
    taylor = family.taylor_coefficients(count)
    if len(taylor) < count:
        raise InsufficientOrderError(len(taylor), count)
    return [np.atleast_2d(np.asarray(t)) for t in taylor]


def truncated_generator(series: GeneratorSeries, dt: float, order: Optional[int] = None) -> np.ndarray:
    """sum_{m <= order} dt^m L_m."""
    order = series.order if order is None else order
    if order > series.order:
        raise InsufficientOrderError(series.order + 1, order + 1)
    total = np.zeros_like(series.coefficients[0])
    for m in range(order, -1, -1):
        total = total * dt + series.coefficients[m]
    return total


def propagate(generator, v0, t_grid: Iterable[float]) -> np.ndarray:
    """Rows v(t) = expm(t L) v0 for each t in the grid."""
    generator = as_square(generator, "generator")
    v0 = np.asarray(v0)
    if v0.shape[0] != generator.shape[0]:
        raise InvalidMatrixError("initial vector does not match generator", v0.shape)
    return np.array([expm(t * generator) @ v0 for t in t_grid])


def interrupted_trajectory(evaluator: Evaluator, dt: float, v0, t_grid: Iterable[float]) -> np.ndarray:
    """Exact interrupted dynamics v(n dt + r) = M(r) M(dt)^n v0, 0 <= r < dt."""
    v0 = np.asarray(v0)
    step = np.asarray(evaluator(dt))
    rows = []
    for t in t_grid:
        n = int(np.floor(t / dt + 1e-12))
        r = max(t - n * dt, 0.0)
        v = np.linalg.matrix_power(step, n) @ v0
        rows.append(np.asarray(evaluator(r)) @ v)
    return np.array(rows)


def stroboscopic_residual(
    family: UpdateMapSeries,
    dt: float,
    n_max: int,
    v0=None,
    generator=None
) -> float:
    """max_{n <= n_max} |expm(n dt L) v0 - M(dt)^n v0|.

    Uses the exact generator unless one is supplied (e.g. a truncated series).
    """
    step = family.at(dt)
    if generator is None:
        generator = generator_exact(step, dt)
    if v0 is None:
        v0 = np.ones(step.shape[0]) / np.sqrt(step.shape[0])
    v0 = np.asarray(v0)

    one_step = expm(dt * np.asarray(generator))
    discrete = v0.astype(np.result_type(step, v0, complex))
    interpolated = discrete.copy()
    worst = 0.0
    for _ in range(n_max):
        discrete = step @ discrete
        interpolated = one_step @ interpolated
        worst = max(worst, float(np.linalg.norm(interpolated - discrete)))
    return worst


def taylor_from_evaluator(
    evaluator: Evaluator,
    count: int,
    time_scale: float = 1.0,
    levels: int = 5
) -> List[np.ndarray]:
    """M_1 .. M_count by Richardson-extrapolated central differences at dt = 0.

    The evaluator is sampled at small negative and positive dt, so it must be
    the analytic continuation of the family through zero.
    """
    h0 = 0.1 * time_scale
    coefficients = []
    for k in range(1, count + 1):
        table = [_central_difference(evaluator, k, h0 / 2 ** level) for level in range(levels)]
        # Richardson in h^2
        for level in range(1, levels):
            factor = 4.0 ** level
            table = [(factor * table[i + 1] - table[i]) / (factor - 1) for i in range(len(table) - 1)]
        coefficients.append(table[0] / factorial(k))
    return coefficients


def _central_difference(evaluator: Evaluator, k: int, h: float) -> np.ndarray:
    """k-th central difference quotient at 0 (half-integer nodes for odd k)."""
    total = None
    for j in range(k + 1):
        weight = (-1) ** j * comb(k, j)
        value = weight * np.asarray(evaluator((k / 2 - j) * h))
        total = value if total is None else total + value
    return total / h ** k


def convergence_order_fit(family: UpdateMapSeries, order: int, dt_grid: Sequence[float]) -> OrderFit:
    """Least-squares slope of log|L_dt - sum_{m<=K} dt^m L_m| against log dt (expected K+1)."""
    series = generator_series(family, order)
    errors = []
    for dt in dt_grid:
        exact = generator_exact(family.at(dt), dt)
        errors.append(float(np.linalg.norm(exact - series.truncated(dt))))

    scale = max(1.0, float(np.linalg.norm(series.coefficients[0])))
    if max(errors) < 1e-12 * scale:
        logger.info(f"Order fit for {family.label!r}: truncation error at machine precision")
        return OrderFit(float("nan"), float("nan"), tuple(errors), degenerate=True)

    # exact zeros carry no slope information
    points = [(dt, err) for dt, err in zip(dt_grid, errors) if err > 0.0]
    if len(points) < 2:
        logger.info(f"Order fit for {family.label!r}: fewer than two nonzero truncation errors")
        return OrderFit(float("nan"), float("nan"), tuple(errors), degenerate=True)
    dts, nonzero = zip(*points)
    slope, intercept = np.polyfit(np.log(dts), np.log(nonzero), 1)
    return OrderFit(float(slope), float(intercept), tuple(errors))


def locate_divergence(
    evaluator: Evaluator,
    dt_ok: float,
    dt_bad: float,
    rtol: Optional[float] = None
) -> float:
    """Smallest failing dt between a working and a failing step, by bisection."""
    rtol = settings.DIVERGENCE_RTOL if rtol is None else rtol
    lo, hi = dt_ok, dt_bad
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        try:
            logm_principal(evaluator(mid))
            lo = mid
        except BranchFailure:
            hi = mid
        logger.debug(f"Divergence bracket [{lo:.9g}, {hi:.9g}]")
    return hi


def generator_sweep(
    family: UpdateMapSeries,
    dt_grid: Sequence[float],
    map_fn: Callable = map
) -> SweepResult:
    """Exact generators over an ascending grid, stopping at the first branch failure.

    Grid points are evaluated through `map_fn` (e.g. an executor's map);
    results are kept in grid order.
    """
    def evaluate(dt: float):
        try:
            return generator_exact(family.at(dt), dt)
        except BranchFailure as exc:
            return exc

    result = SweepResult()
    last_ok = 0.0
    for dt, value in zip(dt_grid, map_fn(evaluate, dt_grid)):
        if isinstance(value, BranchFailure):
            divergence = locate_divergence(family.at, last_ok, dt)
            logger.warning(f"Generator of {family.label!r} diverges at dt={divergence:.9g}")
            result.divergence = divergence
            result.failure = value.located_at(divergence)
            break
        result.dts.append(float(dt))
        result.generators.append(value)
        last_ok = float(dt)
    return result
