"""Scenario execution: build the update-map family, evaluate outputs, write files."""
import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

import collint
from collint import diagnostics, gaussian, scenarios
from collint.affine import AffineGenerator, fixed_point
from collint.config import settings
from collint.exceptions import (
    BranchFailure,
    CollintError,
    ConfigParseError,
    ConfigValidationError,
    InvalidArgumentError,
    NoIsolatedFixedPointError,
)
from collint.interp import (
    SweepResult,
    UpdateMapSeries,
    convergence_order_fit,
    generator_exact,
    generator_series,
    generator_sweep,
    interrupted_trajectory,
    propagate,
    stroboscopic_residual,
)
from collint.models.schemas import (
    OutputKind,
    Provenance,
    RunReport,
    ScenarioConfig,
    ScenarioName,
    matrix_array,
    vector_array,
)
from collint.numkit import vec
from collint.superop import lindblad_decompose

logger = logging.getLogger(__name__)

SCENARIO_DESCRIPTIONS = {
    ScenarioName.SCALAR_TOY: "scalar map M(dt) = 1 - b dt - a dt^2",
    ScenarioName.UNITARY: "unitary collisions exp(-i H dt) on state vectors",
    ScenarioName.DYSON: "polynomial time-dependent Hamiltonian, clock reset or duration scaled",
    ScenarioName.MIXED_UNITARY: "randomly drawn unitary collisions on density matrices",
    ScenarioName.PARTIAL_SWAP: "qubit partial swap with polarized ancillas, affine Bloch dynamics",
    ScenarioName.ZENO: "unitary evolution interrupted by projective measurements",
    ScenarioName.BOMBARDMENT: "system bombarded by fresh finite-dimensional ancillas",
    ScenarioName.GAUSSIAN_BOMBARDMENT: "bosonic modes bombarded by Gaussian ancillas",
}


@dataclass
class ScenarioRun:
    """Everything a run needs about one configured scenario."""
    family: UpdateMapSeries
    initial: np.ndarray
    density_dim: Optional[int] = None
    extras: Dict[str, Any] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

def parse_config(path: str) -> ScenarioConfig:
    """Read and validate a JSON scenario config."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigParseError(path, 0, 0, exc.strerror or str(exc))

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(path, exc.lineno, exc.colno, exc.msg)

    try:
        config = ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigValidationError.from_pydantic(exc)

    logger.info(f"Loaded {config.scenario.value} config from {path}")
    return config


# ---------------------------------------------------------------------------
# Scenario construction
# ---------------------------------------------------------------------------

def _density_initial(config: ScenarioConfig, d: int) -> np.ndarray:
    if config.initial_state is not None:
        return vector_array(config.initial_state).astype(complex)
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    return vec(rho)


def _vector_initial(config: ScenarioConfig, d: int) -> np.ndarray:
    if config.initial_state is not None:
        return vector_array(config.initial_state)
    v = np.zeros(d)
    v[0] = 1.0
    return v


def build_scenario(config: ScenarioConfig) -> ScenarioRun:
    """Instantiate the update-map family named by the config."""
    p = config.parameters
    name = config.scenario

    if name == ScenarioName.SCALAR_TOY:
        family = scenarios.scalar_toy(p.a, p.b)
        return ScenarioRun(family, _vector_initial(config, 1))

    if name == ScenarioName.UNITARY:
        h = matrix_array(p.hamiltonian)
        return ScenarioRun(scenarios.unitary_map(h), _vector_initial(config, h.shape[0]), extras={"hamiltonian": h})

    if name == ScenarioName.DYSON:
        h0, h1 = matrix_array(p.h0), matrix_array(p.h1)
        h2 = np.zeros_like(h0) if p.h2 is None else matrix_array(p.h2)
        family = scenarios.time_dependent_unitary(h0, h1, h2, p.duration_scaled)
        return ScenarioRun(family, _vector_initial(config, h0.shape[0]), extras={"hamiltonians": (h0, h1, h2)})

    if name == ScenarioName.MIXED_UNITARY:
        spec = scenarios.EnsembleSpec(np.array(p.probabilities), tuple(matrix_array(h) for h in p.hamiltonians))
        model = scenarios.mixed_unitary(spec)
        return ScenarioRun(model.family, _density_initial(config, spec.dim), spec.dim, {"model": model})

    if name == ScenarioName.PARTIAL_SWAP:
        swap = scenarios.partial_swap(p.omega, p.r)
        initial = np.concatenate([[1.0], vector_array(config.initial_state)]) if config.initial_state else np.array([1.0, 0, 0, 1.0])
        return ScenarioRun(swap.family(), initial, extras={"swap": swap})

    if name == ScenarioName.ZENO:
        h = matrix_array(p.hamiltonian)
        basis = np.eye(h.shape[0]) if p.basis is None else matrix_array(p.basis)
        return ScenarioRun(scenarios.zeno_transfer(h, basis), _vector_initial(config, h.shape[0]))

    if name == ScenarioName.BOMBARDMENT:
        spec = scenarios.BombardmentSpec(
            h_s=matrix_array(p.h_s),
            h_a=matrix_array(p.h_a),
            terms=tuple((matrix_array(t.q), matrix_array(t.r)) for t in p.terms),
            rho_a=matrix_array(p.rho_a),
        )
        model = scenarios.ancillary_bombardment(spec)
        return ScenarioRun(model.family, _density_initial(config, spec.d_s), spec.d_s, {"model": model, "beta": p.beta})

    if name == ScenarioName.GAUSSIAN_BOMBARDMENT:
        f_s, f_a = matrix_array(p.f_s), matrix_array(p.f_a)
        n_s, n_a = f_s.shape[0], f_a.shape[0]
        ancilla = gaussian.GaussianState(
            mean=np.zeros(n_a) if p.ancilla_mean is None else np.array(p.ancilla_mean),
            cov=np.eye(n_a) if p.ancilla_cov is None else matrix_array(p.ancilla_cov),
        )
        spec = gaussian.GaussianCollisionSpec(
            f_s=f_s,
            f_a=f_a,
            g=matrix_array(p.g),
            alpha_s=np.zeros(n_s) if p.alpha_s is None else np.array(p.alpha_s),
            alpha_a=np.zeros(n_a) if p.alpha_a is None else np.array(p.alpha_a),
            ancilla=ancilla,
        )
        mean = np.zeros(n_s) if config.initial_state is None else vector_array(config.initial_state)
        initial = np.concatenate([[1.0], mean, np.eye(n_s).reshape(-1)])
        return ScenarioRun(gaussian.gaussian_collision_family(spec), initial, extras={"spec": spec})

    raise InvalidArgumentError("scenario", name, "unknown scenario")


# ---------------------------------------------------------------------------
# Table writers
# ---------------------------------------------------------------------------

def _format(value: Any) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return settings.FLOAT_FORMAT.format(float(value))


def _entry_columns(prefix: str, shape: Sequence[int]) -> List[str]:
    if len(shape) == 1:
        return [f"{prefix}_{i}_{part}" for i in range(shape[0]) for part in ("re", "im")]
    return [f"{prefix}_{i}{j}_{part}" for i in range(shape[0]) for j in range(shape[1]) for part in ("re", "im")]


def _entry_values(x: np.ndarray) -> List[float]:
    flat = np.asarray(x, dtype=complex).reshape(-1)
    return [v for z in flat for v in (z.real, z.imag)]


def write_table(out_dir: str, name: str, header: List[str], rows: List[List[Any]], fmt: str) -> str:
    """Write a column-labelled table as csv (17 significant digits) or json."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{name}.{fmt}")
    formatted = [[_format(v) for v in row] for row in rows]
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(formatted)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump({"columns": header, "rows": formatted}, handle, indent=2)
            handle.write("\n")
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def _jsonable(value: Any) -> Any:
    """Numbers and arrays as fixed-format strings so reports are byte-stable."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value) and np.any(value.imag != 0):
            return _jsonable([[z.real, z.imag] for z in value.reshape(-1)]) if value.ndim == 1 else [
                _jsonable(row) for row in value
            ]
        return _jsonable(np.real(value).tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return settings.FLOAT_FORMAT.format(float(value))
    if isinstance(value, (complex, np.complexfloating)):
        return [settings.FLOAT_FORMAT.format(value.real), settings.FLOAT_FORMAT.format(value.imag)]
    return value


# ---------------------------------------------------------------------------
# Outputs
# ---------------------------------------------------------------------------

@dataclass
class RunContext:
    config: ScenarioConfig
    run: ScenarioRun
    out_dir: str
    fmt: str
    orders: List[int]
    tol: float
    map_fn: Callable
    report: RunReport
    sweep: Optional[SweepResult] = None


def _valid_dts(ctx: RunContext) -> List[float]:
    if ctx.report.divergence_dt is None:
        return list(ctx.config.dt_grid)
    return [dt for dt in ctx.config.dt_grid if dt < ctx.report.divergence_dt]


def sweep_generators(ctx: RunContext) -> SweepResult:
    """Exact generators over the grid, recording the located divergence once per run."""
    if ctx.sweep is None:
        ctx.sweep = generator_sweep(ctx.run.family, ctx.config.dt_grid, map_fn=ctx.map_fn)
        if ctx.sweep.failure is not None:
            ctx.report.status = "branch_failure"
            ctx.report.divergence_dt = ctx.sweep.divergence
            ctx.report.results["branch_failure"] = {
                "dt": ctx.sweep.divergence,
                "eigenvalue": ctx.sweep.failure.eigenvalue,
                "message": ctx.sweep.failure.message,
            }
    return ctx.sweep


def output_generator(ctx: RunContext) -> None:
    family = ctx.run.family
    sweep = sweep_generators(ctx)
    rows = [[dt] + _entry_values(g) for dt, g in zip(sweep.dts, sweep.generators)]
    header = ["dt"] + _entry_columns("L", (family.dim, family.dim))
    ctx.report.files["generator"] = write_table(ctx.out_dir, "generator", header, rows, ctx.fmt)


def output_series(ctx: RunContext) -> None:
    family = ctx.run.family
    series = generator_series(family, max(ctx.orders))
    rows = [[m] + _entry_values(lm) for m, lm in enumerate(series.coefficients)]
    header = ["order"] + _entry_columns("L", (family.dim, family.dim))
    ctx.report.files["series"] = write_table(ctx.out_dir, "series", header, rows, ctx.fmt)

    dts = _valid_dts(ctx)
    fits = {}
    if len(dts) >= 2:
        for order in ctx.orders:
            fit = convergence_order_fit(family, order, dts)
            fits[str(order)] = {"slope": fit.slope, "degenerate": fit.degenerate, "errors": list(fit.errors)}
    ctx.report.results["order_fits"] = fits


def _time_grid(ctx: RunContext, dt: float) -> np.ndarray:
    steps = int(np.floor(ctx.config.t_max / dt + 1e-12))
    count = steps * ctx.config.samples_per_step + 1
    return np.linspace(0.0, steps * dt, count)


def output_trajectory(ctx: RunContext) -> None:
    family, v0 = ctx.run.family, ctx.run.initial
    series = generator_series(family, max(ctx.orders))
    dims = v0.shape[0]
    header = ["dt", "t", "kind"] + _entry_columns("v", (dims,))

    def rows_for(dt: float) -> List[List[Any]]:
        t_grid = _time_grid(ctx, dt)
        rows = []
        exact = propagate(generator_exact(family.at(dt), dt), v0, t_grid)
        rows += [[dt, t, "interpolated"] + _entry_values(v) for t, v in zip(t_grid, exact)]
        for order in ctx.orders:
            truncated = propagate(series.truncated(dt, order), v0, t_grid)
            rows += [[dt, t, f"truncated_{order}"] + _entry_values(v) for t, v in zip(t_grid, truncated)]
        interrupted = interrupted_trajectory(family.at, dt, v0, t_grid)
        rows += [[dt, t, "interrupted"] + _entry_values(v) for t, v in zip(t_grid, interrupted)]
        step = family.at(dt)
        v = v0.astype(complex)
        for n in range(int(round(t_grid[-1] / dt)) + 1):
            rows.append([dt, n * dt, "discrete"] + _entry_values(v))
            v = step @ v
        return rows

    rows = [row for block in ctx.map_fn(rows_for, _valid_dts(ctx)) for row in block]
    ctx.report.files["trajectory"] = write_table(ctx.out_dir, "trajectory", header, rows, ctx.fmt)


def output_lindblad(ctx: RunContext) -> None:
    d = ctx.run.density_dim
    if d is None:
        raise InvalidArgumentError("outputs", "lindblad", f"{ctx.config.scenario.value} does not act on density matrices")
    family = ctx.run.family

    def decompose(dt: float):
        return dt, lindblad_decompose(generator_exact(family.at(dt), dt), tol=ctx.tol)

    rows, summary = [], {}
    for dt, form in ctx.map_fn(decompose, _valid_dts(ctx)):
        rows += [[dt, j, rate] for j, rate in enumerate(form.rates)]
        summary[settings.FLOAT_FORMAT.format(dt)] = {
            "hamiltonian": form.hamiltonian,
            "is_cp": form.is_cp,
            "residual": form.residual,
        }
    ctx.report.files["lindblad"] = write_table(ctx.out_dir, "lindblad", ["dt", "mode", "rate"], rows, ctx.fmt)
    ctx.report.results["lindblad"] = summary


def _scenario_diagnostics(ctx: RunContext) -> Dict[str, Any]:
    name = ctx.config.scenario
    extras = ctx.run.extras
    out: Dict[str, Any] = {}

    if name == ScenarioName.MIXED_UNITARY:
        model = extras["model"]
        out.update(q_matrix=model.q_matrix, rates=model.rates, mean_hamiltonian=model.mean_hamiltonian)
    elif name == ScenarioName.PARTIAL_SWAP:
        swap = extras["swap"]
        (a0, a1, a2), (b0, b1, b2) = swap.golden_generator()
        out["golden"] = {"A": [a0, a1, a2], "b": [b0, b1, b2]}
        points = {}
        for dt in _valid_dts(ctx):
            generator = generator_exact(ctx.run.family.at(dt), dt)
            try:
                point = fixed_point(AffineGenerator(A=generator[1:, 1:], b=generator[1:, 0]))
                points[settings.FLOAT_FORMAT.format(dt)] = {"point": point.point, "stable": point.stable}
            except NoIsolatedFixedPointError as exc:
                points[settings.FLOAT_FORMAT.format(dt)] = {"error": exc.message}
        out["fixed_point"] = points
    elif name == ScenarioName.BOMBARDMENT:
        model = extras["model"]
        spec = model.spec
        generators = model.generators.coefficients
        out.update(
            l0_hamiltonian=scenarios.bombardment_l0_hamiltonian(spec),
            h1=scenarios.bombardment_h1(spec),
            d_matrix=scenarios.bombardment_d_matrix(spec),
            purification_first_order=diagnostics.purification_first_order(spec),
            unitality_defects=[diagnostics.unitality_defect(lm) for lm in generators],
        )
        if extras.get("beta") is not None:
            report = diagnostics.energy_scale_sensitivity(spec, extras["beta"])
            out["energy_scale_sensitivity"] = {
                "derivatives": list(report.derivatives),
                "first_sensitive_order": report.first_sensitive_order,
                "degenerate": report.degenerate,
            }
    elif name == ScenarioName.GAUSSIAN_BOMBARDMENT:
        spec = extras["spec"]
        closed = gaussian.gaussian_generator_series(spec, 2)
        out["series"] = {"A": list(closed.A), "b": list(closed.b), "C": list(closed.C)}
        out["order_parity"] = gaussian.order_parity_check(closed)
        out["purification_possible"] = [gaussian.purification_possible(closed.generator(m)) for m in range(3)]
    elif name == ScenarioName.DYSON:
        h0, h1, h2 = extras["hamiltonians"]
        duration_scaled = ctx.config.parameters.duration_scaled
        dyson = scenarios.dyson_effective_hamiltonian(h0, h1, h2, max(ctx.orders), duration_scaled)
        out.update(effective=list(dyson.effective), averaged=list(dyson.averaged))

    residuals = {}
    for dt in _valid_dts(ctx):
        residuals[settings.FLOAT_FORMAT.format(dt)] = stroboscopic_residual(ctx.run.family, dt, 50, ctx.run.initial)
    out["stroboscopic_residual"] = residuals
    return out


def output_diagnostics(ctx: RunContext) -> None:
    results = _jsonable(_scenario_diagnostics(ctx))
    os.makedirs(ctx.out_dir, exist_ok=True)
    path = os.path.join(ctx.out_dir, "diagnostics.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(results, handle, indent=2, sort_keys=True)
        handle.write("\n")
    ctx.report.files["diagnostics"] = path
    ctx.report.results["diagnostics"] = results


def output_classification(ctx: RunContext) -> None:
    spec = ctx.run.extras.get("spec")
    if spec is None:
        raise InvalidArgumentError("outputs", "classification", "classification needs a gaussian_bombardment scenario")

    def classify(dt: float):
        g = gaussian.gaussian_generator_exact(lambda step: gaussian.dilate_reduce(spec, step), dt)
        return dt, gaussian.classify_dynamics(g, tol=ctx.tol)

    table = {}
    for dt, result in ctx.map_fn(classify, _valid_dts(ctx)):
        table[settings.FLOAT_FORMAT.format(dt)] = [
            {
                "name": c.name,
                "source": c.source,
                "block": list(c.block),
                "basis": c.basis,
                "coefficient": c.coefficient,
                "symplectic": c.symplectic,
                "active": c.active,
                "state_dependent": c.state_dependent,
                "single_mode": c.single_mode,
            }
            for c in result.components
        ]
    results = _jsonable(table)
    os.makedirs(ctx.out_dir, exist_ok=True)
    path = os.path.join(ctx.out_dir, "classification.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(results, handle, indent=2, sort_keys=True)
        handle.write("\n")
    ctx.report.files["classification"] = path
    ctx.report.results["classification"] = results


OUTPUT_HANDLERS = {
    OutputKind.GENERATOR: output_generator,
    OutputKind.SERIES: output_series,
    OutputKind.TRAJECTORY: output_trajectory,
    OutputKind.LINDBLAD: output_lindblad,
    OutputKind.DIAGNOSTICS: output_diagnostics,
    OutputKind.CLASSIFICATION: output_classification,
}


# ---------------------------------------------------------------------------
# Run
# ---------------------------------------------------------------------------

def _versions() -> Dict[str, str]:
    versions = {"collint": collint.__version__}
    for package in ("numpy", "scipy", "pydantic"):
        try:
            versions[package] = version(package)
        except PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def provenance(config: ScenarioConfig, tol: float) -> Provenance:
    return Provenance(
        config=config.model_dump(mode="json"),
        tolerances={
            "tol": tol,
            "cp_tol": settings.CP_TOL,
            "branch_rtol": settings.BRANCH_RTOL,
            "series_switch": settings.SERIES_SWITCH,
            "divergence_rtol": settings.DIVERGENCE_RTOL,
        },
        versions=_versions(),
    )


def write_report(report: RunReport, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "report.json")
    payload = report.model_dump(mode="json", exclude={"results"})
    payload["results"] = _jsonable(report.results)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    logger.info(f"Report written to {path}")
    return path


def run(
    config: ScenarioConfig,
    out_dir: Optional[str] = None,
    fmt: str = "csv",
    orders: Optional[List[int]] = None,
    tol: Optional[float] = None,
    threads: Optional[int] = None
) -> RunReport:
    """Execute every requested output and write report.json.

    The generator sweep runs first whatever the outputs are. A branch failure
    there is recorded in the report with the located divergence, and every
    output runs on the dt values below it; the caller maps the report status
    to the exit code.
    """
    out_dir = out_dir or settings.OUT_DIR
    if fmt not in ("csv", "json"):
        raise InvalidArgumentError("format", fmt, "must be csv or json")
    orders = sorted(set(orders if orders is not None else config.orders))
    tol = settings.TOL if tol is None else tol
    threads = max(1, threads or settings.THREADS)

    logger.info(f"Running {config.scenario.value} with outputs {[o.value for o in config.outputs]} on {threads} threads")
    scenario_run = build_scenario(config)
    report = RunReport(scenario=config.scenario.value, provenance=provenance(config, tol))

    with ThreadPoolExecutor(max_workers=threads) as pool:
        ctx = RunContext(config, scenario_run, out_dir, fmt, orders, tol, pool.map, report)
        # every output is restricted to the dt values below a located divergence
        try:
            sweep_generators(ctx)
        except CollintError:
            write_report(report, out_dir)
            raise
        for kind in config.outputs:
            logger.info(f"Output {kind.value}...")
            try:
                OUTPUT_HANDLERS[kind](ctx)
            except BranchFailure as exc:
                logger.error(f"Output {kind.value} hit the branch cut: {exc.message}", exc_info=True)
                report.status = "branch_failure"
                report.results.setdefault("branch_failure", {"message": exc.message, "dt": exc.dt})
                if report.divergence_dt is None:
                    report.divergence_dt = exc.dt
            except CollintError:
                write_report(report, out_dir)
                raise

    report.files["report"] = write_report(report, out_dir)
    logger.info(f"Run finished with status {report.status}")
    return report
