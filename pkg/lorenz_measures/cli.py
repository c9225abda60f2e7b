"""Config-driven experiment runner and the ``lorenz-measures`` command line."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple, Union

import click
import numpy as np
import orjson
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .config import (
    DELTA,
    DEPTH_MAX,
    MAX_SAMPLE_LEVEL,
    MAX_WORD_LEN,
    N_DEPTH,
    R_MAX,
    get_settings,
    setup_logging,
)
from .cylinder_entropy import compare_with_abramov
from .errors import ConfigSchemaError, LorenzMeasuresError
from .induced_markov import (
    check_rc_exactness,
    check_theorem_a_hypotheses,
    cylinder_tower,
    enumerate_return_branches,
    find_nice_interval,
    tower_markov_residual,
)
from .lorenz_map import LEFT, RIGHT, LorenzMap, Side, describe, load_map, nonflat_bounds, sandwich_violations
from .measures import (
    MassDistribution,
    base_measure,
    mass_distribution,
    measure_report,
    project_measure,
    sample_superexpanding,
)
from .orbit_engine import iterate, shadow_orbit, singular_orbit
from .perturbation import shoot_for_connection, tune_periodic_singularity, tune_singular_orbit
from .recurrence import (
    birkhoff_recurrence,
    distortion_sweep,
    lyapunov_sandwich_violations,
    recurrence_constants,
    srb_basin_diagnostic,
    verify_bound_period_corollaries,
)
from .reports import envelope, write_csv, write_json

logger = logging.getLogger(__name__)

Pipeline = Literal["orbit", "theorem-b-certify", "induce", "measure", "theorem-a-construct", "tune-to-D", "srb-diagnostic"]
SAMPLING_PIPELINES = {"theorem-b-certify", "measure", "theorem-a-construct", "srb-diagnostic"}


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ConnectParams(_Block):
    """Shoot a singular value before running the pipeline."""

    side: Side = RIGHT
    t_target: int = Field(ge=2)
    bracket: Optional[Tuple[float, float]] = None


class OrbitParams(_Block):
    x0: Optional[float] = None
    side: Optional[Side] = None
    n: int = Field(default=100, ge=1)
    c_tol: Optional[float] = Field(default=None, gt=0)


class CertifyParams(_Block):
    delta: float = DELTA
    horizon: int = Field(default=10_000, ge=1)
    starts: int = Field(default=20, ge=1)
    n_max: int = Field(default=4, ge=1)
    samples: int = Field(default=100, ge=1)
    distortion_pairs: int = Field(default=1000, ge=0)


class InduceParams(_Block):
    r_cap: float = Field(default=0.25, gt=0.0)
    r_max: int = Field(default=R_MAX, ge=1)
    n_depth: int = Field(default=N_DEPTH, ge=1)
    max_word_len: int = Field(default=MAX_WORD_LEN, ge=1)


class MeasureParams(_Block):
    ell: int = Field(default=3, ge=0)
    alpha_mass: float = 0.5
    weighting: Literal["bernoulli", "geometric"] = "bernoulli"
    leftmost_weight: Optional[float] = 0.5
    weights_file: Optional[str] = None
    n_partial: Optional[int] = None
    segments: int = Field(default=10_000, ge=1)
    max_level: int = Field(default=MAX_SAMPLE_LEVEL, ge=1)
    entropy_block_len: Optional[int] = Field(default=None, ge=2)


class TuneParams(_Block):
    mode: Literal["chain", "periodic", "shoot"] = "chain"
    side: Side = LEFT
    eps: float = 0.1
    eps_right: float = 0.02
    depth_max: int = Field(default=DEPTH_MAX, ge=0)
    t_target: Optional[int] = Field(default=None, ge=2)
    bracket: Optional[Tuple[float, float]] = None

    @model_validator(mode="after")
    def _shoot_needs_target(self) -> "TuneParams":
        if self.mode == "shoot" and self.t_target is None:
            raise ValueError("mode 'shoot' needs t_target")
        return self


class SRBParams(_Block):
    n: int = Field(default=2000, ge=1)
    samples: int = Field(default=50, ge=1)


class ExperimentConfig(_Block):
    """One experiment: a map, a pipeline and its parameter block."""

    pipeline: Pipeline
    map: Optional[LorenzMap] = None
    map_file: Optional[str] = None
    connect: Optional[ConnectParams] = None
    seed: Optional[int] = None
    precision: Union[Literal["double", "shadow"], int] = "shadow"
    out_dir: Optional[str] = None
    orbit: OrbitParams = Field(default_factory=OrbitParams)
    certify: CertifyParams = Field(default_factory=CertifyParams)
    induce: InduceParams = Field(default_factory=InduceParams)
    measure: MeasureParams = Field(default_factory=MeasureParams)
    tune: TuneParams = Field(default_factory=TuneParams)
    srb: SRBParams = Field(default_factory=SRBParams)

    @model_validator(mode="after")
    def _check_inputs(self) -> "ExperimentConfig":
        if (self.map is None) == (self.map_file is None):
            raise ValueError("give exactly one of map and map_file")
        if self.pipeline in SAMPLING_PIPELINES and self.seed is None:
            raise ValueError(f"pipeline {self.pipeline!r} samples and needs a seed")
        return self

    def resolve_map(self) -> LorenzMap:
        lmap = self.map
        if lmap is None:
            try:
                lmap = load_map(Path(self.map_file).read_text())
            except OSError as e:
                raise ConfigSchemaError("map_file", f"cannot read {self.map_file}: {e}") from e
            except ValidationError as e:
                raise ConfigSchemaError(f"map_file.{_error_path(e)}", e.errors()[0]["msg"]) from e
        if self.connect is not None:
            lmap = shoot_for_connection(lmap, self.connect.side, self.connect.t_target, self.connect.bracket).map
        return lmap


def _error_path(error: ValidationError) -> str:
    first = error.errors()[0]
    return ".".join(str(part) for part in first["loc"]) or "<root>"


def parse_config(document: Any) -> ExperimentConfig:
    """Validate a config document.

    Raises:
        ConfigSchemaError: With the dotted path of the first invalid field.
    """
    if not document:
        raise ConfigSchemaError("<root>", "config is empty")
    if not isinstance(document, dict):
        raise ConfigSchemaError("<root>", "config must be a mapping")
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigSchemaError(_error_path(e), e.errors()[0]["msg"]) from e


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read a JSON or YAML config; the suffix decides the format."""
    path = Path(path)
    text = path.read_text()
    try:
        if path.suffix in (".yaml", ".yml"):
            document = yaml.safe_load(text)
        else:
            document = orjson.loads(text) if text.strip() else None
    except (yaml.YAMLError, orjson.JSONDecodeError) as e:
        raise ConfigSchemaError("<root>", f"cannot parse {path.name}: {e}") from e
    return parse_config(document)


@dataclass
class Series:
    name: str
    header: List[str]
    rows: List[List[Any]]


@dataclass
class PipelineResult:
    result: Dict[str, Any]
    violations: List[str] = field(default_factory=list)
    series: List[Series] = field(default_factory=list)
    extra_files: Dict[str, Any] = field(default_factory=dict)


@dataclass
class RunOutcome:
    status: int
    report: Dict[str, Any]
    artifacts: List[Path]


def _orbit(config: ExperimentConfig, lmap: LorenzMap) -> PipelineResult:
    p = config.orbit
    c_tol = p.c_tol or get_settings().c_tol
    if p.side is not None:
        orbit = singular_orbit(lmap, p.side, p.n, c_tol=c_tol)
    elif p.x0 is None:
        raise ConfigSchemaError("orbit.x0", "give x0 or a side for a singular orbit")
    elif config.precision == "shadow":
        orbit = shadow_orbit(lmap, p.x0, p.n, c_tol=c_tol)
    elif config.precision == "double":
        orbit = iterate(lmap, p.x0, p.n, c_tol=c_tol)
    else:
        orbit = iterate(lmap, p.x0, p.n, c_tol=c_tol, precision=int(config.precision))
    result = {
        "itinerary": orbit.symbols,
        "points": orbit.points,
        "error_budget": orbit.error_budget,
        "hit_c_at": orbit.hit_c_at,
        "singular_period": orbit.singular_period if p.side is not None else None,
        "truncated": orbit.truncated,
    }
    log_deriv = orbit.log_derivatives(lmap)
    cumulative = np.cumsum(log_deriv)
    rows = []
    for j, x in enumerate(orbit.points):
        if j < len(orbit.symbols):
            rows.append([j, float(x), orbit.symbols[j], float(np.exp(log_deriv[j])), float(cumulative[j])])
        else:
            # a point that hit c has no branch
            rows.append([j, float(x), "", "", ""])
    header = ["step", "x", "symbol", "f'", "cumulative_log_derivative"]
    return PipelineResult(result=result, series=[Series("orbit", header, rows)])


def _certify(config: ExperimentConfig, lmap: LorenzMap) -> PipelineResult:
    p = config.certify
    bounds = nonflat_bounds(lmap)
    constants = recurrence_constants(lmap, p.delta, bounds=bounds)
    corollaries = verify_bound_period_corollaries(lmap, constants, p.n_max, p.samples, seed=config.seed)
    rng = np.random.default_rng(config.seed)
    violations = list(constants.violations())
    starts = []
    rows = []
    for k, x0 in enumerate(rng.uniform(0.0, 1.0, p.starts)):
        avg = birkhoff_recurrence(lmap, float(x0), p.horizon, p.delta, config.precision, constants)
        worst = float(avg.running_min_log_distance.max())
        sandwich = lyapunov_sandwich_violations(avg, bounds)
        starts.append(
            {
                "x0": float(x0),
                "steps": avg.steps,
                "lyapunov": avg.lyapunov_average,
                "log_distance": avg.log_distance_average,
                "max_running_min": worst,
                "sandwich_violations": sandwich,
            }
        )
        if worst > constants.Upsilon:
            violations.append(f"start {k}: running minimum {worst:.4f} exceeds Upsilon")
        if sandwich:
            violations.append(f"start {k}: {sandwich} prefixes leave the Lyapunov sandwich")
        stride = max(1, avg.steps // 200)
        rows.extend(
            [k, j + 1, float(avg.running_min_log_distance[j]), float(avg.prefix_lyapunov[j])]
            for j in range(0, avg.steps, stride)
        )
    sweep = distortion_sweep(lmap, p.distortion_pairs, seed=config.seed, bounds=bounds)
    if not corollaries.passed:
        violations.append(f"{len(corollaries.violations)} bound-period corollary violations")
    if sweep.violations:
        violations.append(f"{sweep.violations} distortion violations")
    grid_fail = sandwich_violations(lmap, bounds)
    if grid_fail:
        violations.append(f"derivative sandwich fails at {grid_fail} grid points")
    result = {
        "map": describe(lmap),
        "bounds": bounds,
        "constants": constants,
        "corollaries": corollaries,
        "starts": starts,
        "distortion": sweep,
    }
    header = ["start", "n", "running_min_log_distance", "lyapunov_average"]
    return PipelineResult(result=result, violations=violations, series=[Series("running_minima", header, rows)])


def _induce_pieces(config: ExperimentConfig, lmap: LorenzMap):
    p = config.induce
    gate = check_theorem_a_hypotheses(lmap, p.r_cap)
    J = find_nice_interval(lmap, p.r_cap, p.max_word_len, gate)
    branches = enumerate_return_branches(lmap, J, p.r_max, piece_cap=get_settings().piece_cap)
    tower = cylinder_tower(lmap, J, branches, p.n_depth)
    return gate, J, branches, tower


def _induce(config: ExperimentConfig, lmap: LorenzMap) -> PipelineResult:
    gate, J, branches, tower = _induce_pieces(config, lmap)
    rc_bad = check_rc_exactness(tower, seed=config.seed or 0)
    residual = tower_markov_residual(tower)
    violations = []
    if rc_bad:
        violations.append(f"R_c exactness fails on {rc_bad} sampled atoms")
    result = {
        "t0": gate.t0,
        "nice_interval": J.as_dict(),
        "branches": {
            "count": len(branches),
            "total_length": branches.total_length(),
            "pruned_length": branches.pruned_length,
            "piece_cap_hit": branches.piece_cap_hit,
            "max_markov_residual": max((b.markov_residual for b in branches.branches), default=0.0),
        },
        "tower": tower.summary(),
        "tower_markov_residual": residual,
    }
    rows = [[b.word, b.R, b.lo, b.hi, b.markov_residual] for b in branches.branches]
    series = Series("branches", ["word", "R", "lo", "hi", "markov_residual"], rows)
    return PipelineResult(result=result, violations=violations, series=[series])


def _measure_pieces(config: ExperimentConfig, lmap: LorenzMap):
    p = config.measure
    _, J, _, tower = _induce_pieces(config, lmap)
    weights = None
    try:
        if p.weights_file is not None:
            weights = np.loadtxt(p.weights_file, delimiter=",", ndmin=1)
        base = base_measure(tower, p.weighting, p.leftmost_weight, weights)
    except (OSError, ValueError) as e:
        raise ConfigSchemaError("measure", str(e)) from e
    m = mass_distribution(base, tower, p.ell, p.alpha_mass)
    return J, tower, m


def _measure_run(config: ExperimentConfig, lmap: LorenzMap) -> Tuple[PipelineResult, MassDistribution]:
    p = config.measure
    J, tower, m = _measure_pieces(config, lmap)
    report = measure_report(m, p.n_partial)
    projection = project_measure(m, "F")
    sample = sample_superexpanding(m, config.seed, p.segments, p.max_level)
    bounds = nonflat_bounds(lmap)
    result = {
        "t0": tower.t0,
        "nice_interval": J.as_dict(),
        "report": report,
        "projection_F": projection,
        "sample": {
            "segments": p.segments,
            "max_level_drawn": sample.max_level_drawn,
            "levels_clipped": sample.levels_clipped,
            "support_coverage": sample.support_coverage,
            "final_lyapunov_average": float(sample.prefix_lyapunov[-1]),
            "final_log_distance_average": float(sample.prefix_log_distance[-1]),
            "lyapunov_floor": -math.log(bounds.a) + bounds.expo_low * float(sample.prefix_log_distance[-1]),
        },
    }
    stride = max(1, p.segments // 1000)
    rows = [
        [k + 1, int(sample.prefix_steps[k]), float(sample.prefix_lyapunov[k]), float(sample.prefix_log_distance[k])]
        for k in range(0, p.segments, stride)
    ]
    header = ["segments", "steps", "lyapunov_average", "log_distance_average"]
    return PipelineResult(result=result, series=[Series("prefix_averages", header, rows)]), m


def _measure(config: ExperimentConfig, lmap: LorenzMap) -> PipelineResult:
    return _measure_run(config, lmap)[0]


def _construct(config: ExperimentConfig, lmap: LorenzMap) -> PipelineResult:
    out, m = _measure_run(config, lmap)
    report = out.result["report"]
    if report.entropy_Fc > report.entropy_bound + report.entropy_Fc_error:
        out.violations.append("entropy exceeds the head-plus-tail bound")
    if not math.isfinite(report.int_Rc):
        out.violations.append("int R_c is not finite")
    if not report.int_Rc_sq_divergent:
        out.violations.append("int R_c^2 partial sums do not show divergence")
    if abs(report.total_mass - 1.0) > 1e-12 + report.total_mass_error:
        out.violations.append(f"total mass {report.total_mass!r} differs from 1")
    block = config.measure.entropy_block_len
    if block is not None:
        comparison = compare_with_abramov(m, block, block)
        out.result["entropy_oracle"] = comparison.as_dict()
        if not comparison.lower * 0.98 <= comparison.abramov <= comparison.upper * 1.02:
            out.violations.append("Abramov value outside the block-entropy bracket")
    return out


def _tune(config: ExperimentConfig, lmap: LorenzMap) -> PipelineResult:
    p = config.tune
    if p.mode == "chain":
        tuned = tune_singular_orbit(lmap, p.side, p.eps, p.depth_max)
    elif p.mode == "periodic":
        tuned = tune_periodic_singularity(lmap, p.eps, p.eps_right, p.depth_max)
    else:
        tuned = shoot_for_connection(lmap, p.side, p.t_target, p.bracket)
    result = {"map": tuned.map, "certificate": tuned.certificate(), "depths": tuned.depths}
    return PipelineResult(result=result, extra_files={"tuned_map.json": tuned.map.model_dump()})


def _srb(config: ExperimentConfig, lmap: LorenzMap) -> PipelineResult:
    diag = srb_basin_diagnostic(lmap, config.srb.n, config.srb.samples, seed=config.seed)
    return PipelineResult(result={"diagnostic": diag})


PIPELINES: Dict[str, Callable[[ExperimentConfig, LorenzMap], PipelineResult]] = {
    "orbit": _orbit,
    "theorem-b-certify": _certify,
    "induce": _induce,
    "measure": _measure,
    "theorem-a-construct": _construct,
    "tune-to-D": _tune,
    "srb-diagnostic": _srb,
}


def run_experiment(config: Union[ExperimentConfig, Dict[str, Any]], out_dir: Optional[Union[str, Path]] = None) -> RunOutcome:
    """Run one pipeline and write its JSON report and CSV series.

    Returns:
        The outcome with status 0 on success, 1 on a module error or invariant
        violation and 2 on a schema error.
    """
    pipeline = config.get("pipeline", "unknown") if isinstance(config, dict) else config.pipeline
    try:
        if not isinstance(config, ExperimentConfig):
            config = parse_config(config)
    except ConfigSchemaError as e:
        logger.error(f"Invalid config: {e}")
        return RunOutcome(status=2, report=envelope(str(pipeline), error=str(e)), artifacts=[])
    target = Path(out_dir or config.out_dir or get_settings().out_dir)
    artifacts: List[Path] = []
    try:
        lmap = config.resolve_map()
        logger.info(f"Running {config.pipeline} on map c={lmap.c} d0={lmap.d0} d1={lmap.d1}")
        out = PIPELINES[config.pipeline](config, lmap)
    except ConfigSchemaError as e:
        logger.error(f"Invalid config: {e}")
        report = envelope(config.pipeline, error=str(e))
        artifacts.append(write_json(target / f"{config.pipeline}.json", report))
        return RunOutcome(status=2, report=report, artifacts=artifacts)
    except LorenzMeasuresError as e:
        logger.error(f"Pipeline {config.pipeline} failed: {e}")
        report = envelope(config.pipeline, error=f"{type(e).__name__}: {e}")
        artifacts.append(write_json(target / f"{config.pipeline}.json", report))
        return RunOutcome(status=1, report=report, artifacts=artifacts)
    error = "; ".join(out.violations) if out.violations else None
    result = dict(out.result, violations=out.violations)
    report = envelope(config.pipeline, result, error)
    artifacts.append(write_json(target / f"{config.pipeline}.json", report))
    for series in out.series:
        artifacts.append(write_csv(target / f"{config.pipeline}_{series.name}.csv", series.header, series.rows))
    for name, document in out.extra_files.items():
        artifacts.append(write_json(target / name, document))
    status = 1 if out.violations else 0
    if status:
        logger.error(f"Pipeline {config.pipeline} finished with violations: {error}")
    return RunOutcome(status=status, report=report, artifacts=artifacts)


# command line


def _finish(ctx: click.Context, document: Dict[str, Any], out: Optional[str]) -> None:
    outcome = run_experiment(document, out)
    for path in outcome.artifacts:
        click.echo(str(path))
    if outcome.report.get("error"):
        click.echo(f"error: {outcome.report['error']}", err=True)
    ctx.exit(outcome.status)


_map_option = click.option("--map", "map_file", required=True, type=click.Path(exists=True, dir_okay=False), help="Map document (JSON).")
_out_option = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")


@click.group()
@click.option("--log-level", default=None, help="Logging level; defaults to LORENZ_LOG_LEVEL.")
def cli(log_level: Optional[str]) -> None:
    """Super-expanding measures for expanding Lorenz maps."""
    setup_logging(log_level)


@cli.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@_out_option
@click.pass_context
def run(ctx: click.Context, config_path: str, out: Optional[str]) -> None:
    """Run the pipeline described by a JSON or YAML config."""
    try:
        config = load_config(config_path)
    except ConfigSchemaError as e:
        click.echo(f"error: {e}", err=True)
        ctx.exit(2)
    outcome = run_experiment(config, out)
    for path in outcome.artifacts:
        click.echo(str(path))
    ctx.exit(outcome.status)


@cli.command()
@_map_option
@click.option("--x0", type=float, default=None)
@click.option("--side", type=click.Choice([LEFT, RIGHT]), default=None, help="Start at f(c-) or f(c+).")
@click.option("--steps", "n", type=int, default=100, help="Number of forward steps.")
@click.option("--ctol", "c_tol", type=float, default=None, help="Distance to c counted as a hit; defaults to LORENZ_C_TOL.")
@click.option("--precision", default="shadow", help="double, shadow or a mantissa in bits.")
@_out_option
@click.pass_context
def orbit(ctx, map_file, x0, side, n, c_tol, precision, out) -> None:
    """Forward orbit with itinerary and error budget."""
    prec: Union[str, int] = int(precision) if precision.isdigit() else precision
    params = {"x0": x0, "side": side, "n": n, "c_tol": c_tol}
    document = {"pipeline": "orbit", "map_file": map_file, "precision": prec, "orbit": params}
    _finish(ctx, document, out)


@cli.command()
@_map_option
@click.option("--delta", type=float, default=DELTA)
@click.option("--horizon", type=int, default=10_000)
@click.option("--starts", type=int, default=20)
@click.option("--nmax", "n_max", type=int, default=4, help="Deepest corollary level.")
@click.option("--samples", type=int, default=100, help="Offsets sampled per corollary level.")
@click.option("--seed", type=int, required=True)
@_out_option
@click.pass_context
def recurrence(ctx, map_file, delta, horizon, starts, n_max, samples, seed, out) -> None:
    """Certify slow recurrence: constants, corollaries, Birkhoff bounds."""
    document = {
        "pipeline": "theorem-b-certify",
        "map_file": map_file,
        "seed": seed,
        "certify": {"delta": delta, "horizon": horizon, "starts": starts, "n_max": n_max, "samples": samples},
    }
    _finish(ctx, document, out)


@cli.command()
@_map_option
@click.option("--rcap", "--r-cap", "r_cap", type=float, default=0.25, help="Upper end of the nice-interval search.")
@click.option("--rmax", "--r-max", "r_max", type=int, default=R_MAX, help="Largest return time enumerated.")
@click.option("--depth", type=int, default=N_DEPTH)
@_out_option
@click.pass_context
def induce(ctx, map_file, r_cap, r_max, depth, out) -> None:
    """Nice interval, first-return branches and the cylinder tower."""
    document = {
        "pipeline": "induce",
        "map_file": map_file,
        "induce": {"r_cap": r_cap, "r_max": r_max, "n_depth": depth},
    }
    _finish(ctx, document, out)


@cli.command()
@_map_option
@click.option("--ell", type=int, default=3)
@click.option("--alpha-mass", type=float, default=0.5)
@click.option("--depth", type=int, default=N_DEPTH)
@click.option("--segments", type=int, default=10_000)
@click.option("--seed", type=int, required=True)
@click.option("--r-cap", type=float, default=0.25)
@click.option("--leftmost-weight", type=float, default=0.5)
@click.option("--entropy-check", type=int, default=None, help="Block length of the brute-force entropy check.")
@_out_option
@click.pass_context
def measure(ctx, map_file, ell, alpha_mass, depth, segments, seed, r_cap, leftmost_weight, entropy_check, out) -> None:
    """Zeta-tailed measure report and sampled super-expanding orbit."""
    document = {
        "pipeline": "theorem-a-construct",
        "map_file": map_file,
        "seed": seed,
        "induce": {"r_cap": r_cap, "n_depth": depth},
        "measure": {
            "ell": ell,
            "alpha_mass": alpha_mass,
            "segments": segments,
            "leftmost_weight": leftmost_weight,
            "entropy_block_len": entropy_check,
        },
    }
    _finish(ctx, document, out)


@cli.command()
@_map_option
@click.option("--side", type=click.Choice([LEFT, RIGHT]), default=LEFT)
@click.option("--eps", type=float, default=0.1)
@click.option("--eps-right", type=float, default=0.02, help="Right tolerance with --periodic.")
@click.option("--depth", type=int, default=DEPTH_MAX)
@click.option("--periodic", is_flag=True, help="Tune both singular values.")
@click.option("--shoot-t", type=int, default=None, help="Shoot for a connection at this time.")
@click.option("--bracket", type=(float, float), default=None, help="Singular-value bracket for shooting.")
@_out_option
@click.pass_context
def tune(ctx, map_file, side, eps, eps_right, depth, periodic, shoot_t, bracket, out) -> None:
    """Move singular values onto preimages of c."""
    mode = "shoot" if shoot_t is not None else ("periodic" if periodic else "chain")
    document = {
        "pipeline": "tune-to-D",
        "map_file": map_file,
        "tune": {
            "mode": mode,
            "side": side,
            "eps": eps,
            "eps_right": eps_right,
            "depth_max": depth,
            "t_target": shoot_t,
            "bracket": list(bracket) if bracket else None,
        },
    }
    _finish(ctx, document, out)


@cli.command()
@_map_option
@click.option("--n", type=int, default=2000)
@click.option("--samples", type=int, default=50)
@click.option("--seed", type=int, required=True)
@_out_option
@click.pass_context
def srb(ctx, map_file, n, samples, seed, out) -> None:
    """Compare singular-value starts with random starts."""
    document = {"pipeline": "srb-diagnostic", "map_file": map_file, "seed": seed, "srb": {"n": n, "samples": samples}}
    _finish(ctx, document, out)


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
