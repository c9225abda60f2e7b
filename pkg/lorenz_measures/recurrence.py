"""Slow recurrence to the singularity: truncated distances, bound periods,
the certificate constants and the Birkhoff diagnostics built on them.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Tuple, Union

import mpmath
import numpy as np
from pydantic import BaseModel
from tqdm import tqdm

from .config import BOUND_BUDGET_FRACTION, C_TOL, DELTA, HORIZON, get_settings
from .errors import BudgetExhaustedError, FastRecurrenceError, PreconditionError
from .lorenz_map import LEFT, RIGHT, SIDES, LorenzMap, NonFlatBounds, Side, nonflat_bounds
from .orbit_engine import (
    OrbitRecord,
    iterate,
    run_with_precision_escalation,
    shadow_orbit,
    singular_orbit,
    step_rounding,
)

logger = logging.getLogger(__name__)

Precision = Union[Literal["double", "shadow"], int]

_FAST_RECURRENCE_OFFSET = 1e-14
_LOG_FLOOR = math.log(1e-300)


def truncated_dist(x: float, c: float, delta: float) -> float:
    """|x - c| when it is at most delta, otherwise 1."""
    d = abs(x - c)
    return d if d <= delta else 1.0


class RecurrenceConstants(BaseModel):
    delta: float
    M: float
    M_exact: bool
    a: float
    expo_high: float
    kappa: float
    b: float
    gamma: float
    t: float
    A: float
    B: float
    Gamma: float
    r: float
    Upsilon: float
    caveats: List[str] = []

    def violations(self) -> List[str]:
        out = []
        if not 0 < self.A <= self.delta * self.kappa / self.a**2 * (1 + 1e-12):
            out.append("A out of range")
        if self.B < (2 * self.gamma * self.delta**self.t + 2 * self.M + self.b) * (1 - 1e-12):
            out.append("B below its lower bound")
        if not 0 < self.r < 1:
            out.append("r outside (0, 1)")
        if not self.Upsilon > self.Gamma > self.M > 0:
            out.append("Upsilon > Gamma > M > 0 fails")
        return out


@dataclass(frozen=True)
class BoundPeriod:
    m: int
    lower_bound: bool = False


def _eventual_cycle(points: np.ndarray, tol: float = 1e-12) -> Optional[Tuple[int, int]]:
    """(preperiod, period) when the orbit visibly closes up, else None."""
    n = len(points)
    if n < 2:
        return None
    last = points[-1]
    for k in range(n - 2, -1, -1):
        if abs(points[k] - last) <= tol:
            q = n - 1 - k
            for i in range(n - q):
                if abs(points[i] - points[i + q]) <= tol:
                    return i, q
    return None


def singular_log_average_sup(
    lmap: LorenzMap, horizon: int = HORIZON, c_tol: float = C_TOL
) -> Tuple[float, bool, List[str]]:
    """sup_n of (1/n) sum |log|f^j(c_+-) - c|| over both singular orbits.

    Returns:
        (M, exact, caveats); M is exact when both orbits are eventually periodic.

    Raises:
        FastRecurrenceError: If a singular orbit falls into c.
    """
    sups = []
    exact = True
    caveats: List[str] = []
    for side in SIDES:
        orbit = singular_orbit(lmap, side, horizon, c_tol=c_tol)
        if orbit.hit_c_at is not None or (orbit.offsets.size and float(orbit.offsets.min()) < _FAST_RECURRENCE_OFFSET):
            raise FastRecurrenceError(f"singular orbit of c{'-' if side == LEFT else '+'} reaches c; M is unbounded")
        values = orbit.log_distances()
        cycle = _eventual_cycle(orbit.points)
        if cycle is not None:
            pre, q = cycle
            reps = max(10, (10 * len(values)) // q)
            values = np.concatenate([values[:pre], np.tile(values[pre : pre + q], reps)])
            prefix = np.cumsum(values) / np.arange(1, len(values) + 1)
            sups.append(max(float(prefix.max()), float(values[pre : pre + q].mean())))
        else:
            exact = False
            prefix = np.cumsum(values) / np.arange(1, len(values) + 1)
            sups.append(float(prefix.max()))
            note = f"M for the {side} singular orbit is a sup over {len(values)} steps, not a cycle value"
            caveats.append(note)
            logger.warning(note)
    return max(sups), exact, caveats


def recurrence_constants(
    lmap: LorenzMap,
    delta: float = DELTA,
    horizon: int = HORIZON,
    bounds: Optional[NonFlatBounds] = None,
) -> RecurrenceConstants:
    """Assemble M, b, gamma, A, B, Gamma, r and Upsilon with A maximal and B minimal."""
    if not 0.0 < delta <= 0.5:
        raise ValueError(f"delta = {delta} must lie in (0, 1/2]")
    bounds = bounds or nonflat_bounds(lmap)
    M, exact, caveats = singular_log_average_sup(lmap, horizon)
    eh = bounds.expo_high
    kappa = min(eh, 1.0 - eh)
    b = math.log(bounds.a) + eh * M
    gamma = bounds.holder_C + 2.0 * eh
    t = bounds.holder_t
    A = delta * kappa / bounds.a**2
    B = 2.0 * gamma * delta**t + 2.0 * M + b
    Gamma = abs(math.log(A)) / kappa + 2.0 * B / kappa + math.log(1.0 / (1.0 - delta)) + M
    r = (A * math.exp(-B)) ** (1.0 / kappa)
    Upsilon = math.log(1.0 / r) + Gamma
    constants = RecurrenceConstants(
        delta=delta,
        M=M,
        M_exact=exact,
        a=bounds.a,
        expo_high=eh,
        kappa=kappa,
        b=b,
        gamma=gamma,
        t=t,
        A=A,
        B=B,
        Gamma=Gamma,
        r=r,
        Upsilon=Upsilon,
        caveats=caveats,
    )
    logger.info(f"Recurrence constants: M={M:.6f} Gamma={Gamma:.4f} r={r:.4e} Upsilon={Upsilon:.4f}")
    return constants


def _bound_period_offset(
    lmap: LorenzMap,
    side: Side,
    u: float,
    delta: float,
    horizon: int,
    c_tol: float,
    precision: Optional[int],
) -> BoundPeriod:
    if precision is None:
        return _bound_period_loop(lmap, side, u, delta, horizon, c_tol, None)
    with mpmath.workprec(precision):
        return _bound_period_loop(lmap, side, mpmath.mpf(u), delta, horizon, c_tol, precision)


def _bound_period_loop(lmap, side, u, delta, horizon, c_tol, precision) -> BoundPeriod:
    c = lmap.c
    x = lmap.eval_offset(side, u)
    s = lmap.eval_offset(side, u * 0)
    err_x = step_rounding(lmap, side, c, x, 0.0, precision)
    err_s = step_rounding(lmap, side, c, s, 0.0, precision)
    for j in range(1, horizon + 1):
        sep = abs(x - s)
        thr = delta * abs(s - c)
        err = err_x + err_s
        if err >= BOUND_BUDGET_FRACTION * thr and thr > 0:
            raise BudgetExhaustedError(j, float(err))
        if sep >= thr:
            return BoundPeriod(m=j - 1)
        ux, us = abs(x - c), abs(s - c)
        side_s = LEFT if s < c else RIGHT
        side_x = side_s if ux <= c_tol else (LEFT if x < c else RIGHT)
        dx = lmap.deriv_offset(side_x, ux) if ux > 0 else 0
        ds = lmap.deriv_offset(side_s, us)
        x_next = lmap.eval_offset(side_x, ux)
        s_next = lmap.eval_offset(side_s, us)
        err_x = dx * err_x + step_rounding(lmap, side_x, x, x_next, dx, precision)
        err_s = ds * err_s + step_rounding(lmap, side_s, s, s_next, ds, precision)
        x, s = x_next, s_next
    return BoundPeriod(m=horizon, lower_bound=True)


def bound_period(
    lmap: LorenzMap,
    p: float,
    delta: float = DELTA,
    horizon: int = HORIZON,
    c_tol: float = C_TOL,
    precision: Optional[int] = None,
) -> BoundPeriod:
    """delta-bound period of p against the singular orbit on p's side.

    Raises:
        SingularityError: If p = c.
        BudgetExhaustedError: If the error budget cannot settle the comparison.
    """
    side = lmap.side_of(p)
    return _bound_period_offset(lmap, side, abs(p - lmap.c), delta, horizon, c_tol, precision)


def bound_period_at_offset(
    lmap: LorenzMap,
    side: Side,
    u: float,
    delta: float = DELTA,
    horizon: int = HORIZON,
    c_tol: float = C_TOL,
) -> BoundPeriod:
    """Bound period at c -/+ u, escalating precision on budget errors."""
    return run_with_precision_escalation(_bound_period_offset, lmap, side, u, delta, horizon, c_tol)


@dataclass(frozen=True)
class RecurrenceTrace:
    """Entry decomposition (l_j, r_j, n_j) of an orbit with respect to V_r."""

    radius: float
    entries: List[Tuple[int, int, int]]
    lower_bounds: List[bool]
    running_sums: np.ndarray
    running_minima: np.ndarray


@dataclass(frozen=True)
class BirkhoffAverages:
    steps: int
    recurrence_average: float
    lyapunov_average: float
    log_distance_average: float
    prefix_recurrence: np.ndarray
    prefix_lyapunov: np.ndarray
    prefix_log_distance: np.ndarray
    running_min_recurrence: np.ndarray
    running_min_log_distance: np.ndarray
    truncated: Optional[str] = None
    trace: Optional[RecurrenceTrace] = None


def _orbit_for(lmap: LorenzMap, x0: float, n: int, precision: Precision) -> OrbitRecord:
    if precision == "shadow":
        return shadow_orbit(lmap, x0, n)
    if precision == "double":
        return iterate(lmap, x0, n)
    return iterate(lmap, x0, n, precision=int(precision))


def _entry_trace(lmap: LorenzMap, orbit: OrbitRecord, constants: RecurrenceConstants, steps: int) -> RecurrenceTrace:
    offsets = orbit.offsets[:steps]
    sides = [LEFT if s == "L" else RIGHT for s in orbit.symbols[:steps]]
    inside = np.flatnonzero(offsets < constants.r)
    entries: List[Tuple[int, int, int]] = []
    lower: List[bool] = []
    ell = 0
    while True:
        later = inside[inside > ell]
        if later.size == 0:
            break
        k = int(later[0])
        try:
            bp = bound_period_at_offset(lmap, sides[k], float(offsets[k]), constants.delta)
        except BudgetExhaustedError as e:
            logger.warning(f"Bound period at step {k} unresolved: {e}")
            bp = BoundPeriod(m=0, lower_bound=True)
        entries.append((ell, k - ell, bp.m))
        lower.append(bp.lower_bound)
        ell = k + bp.m
        if ell >= steps:
            break
    sums = np.cumsum(np.abs(np.log(offsets)))
    averages = sums / np.arange(1, steps + 1)
    return RecurrenceTrace(
        radius=constants.r,
        entries=entries,
        lower_bounds=lower,
        running_sums=sums,
        running_minima=np.minimum.accumulate(averages),
    )


def birkhoff_recurrence(
    lmap: LorenzMap,
    x0: float,
    n: int,
    delta: float = DELTA,
    precision: Precision = "shadow",
    constants: Optional[RecurrenceConstants] = None,
) -> BirkhoffAverages:
    """Birkhoff averages of -log dist_delta, log f' and |log|x - c|| along the orbit of x0.

    Args:
        precision: "shadow" (default) rebuilds the orbit through inverse
            branches, "double" iterates forward within the error budget, an
            integer iterates in mpmath with that mantissa.
        constants: When given, the entry decomposition trace is attached.
    """
    orbit = _orbit_for(lmap, x0, n, precision)
    steps = min(n, len(orbit.symbols))
    if steps == 0:
        raise ValueError(f"orbit of {x0} has no points off c")
    if orbit.truncated and steps < n:
        logger.warning(f"Orbit of {x0} truncated ({orbit.truncated}) after {steps} of {n} steps")
    offsets = orbit.offsets[:steps]
    counts = np.arange(1, steps + 1)
    truncated_logs = np.where(offsets <= delta, -np.log(offsets), 0.0)
    log_dist = np.abs(np.log(offsets))
    log_deriv = orbit.log_derivatives(lmap)[:steps]
    prefix_rec = np.cumsum(truncated_logs) / counts
    prefix_lyap = np.cumsum(log_deriv) / counts
    prefix_dist = np.cumsum(log_dist) / counts
    trace = _entry_trace(lmap, orbit, constants, steps) if constants is not None else None
    return BirkhoffAverages(
        steps=steps,
        recurrence_average=float(prefix_rec[-1]),
        lyapunov_average=float(prefix_lyap[-1]),
        log_distance_average=float(prefix_dist[-1]),
        prefix_recurrence=prefix_rec,
        prefix_lyapunov=prefix_lyap,
        prefix_log_distance=prefix_dist,
        running_min_recurrence=np.minimum.accumulate(prefix_rec),
        running_min_log_distance=np.minimum.accumulate(prefix_dist),
        truncated=orbit.truncated if steps < n else None,
        trace=trace,
    )


def lyapunov_sandwich_violations(averages: BirkhoffAverages, bounds: NonFlatBounds, tol: float = 1e-9) -> int:
    """Prefixes whose Lyapunov average leaves [log(1/a) + lo*I, log a + hi*I]."""
    log_a = math.log(bounds.a)
    lower = -log_a + bounds.expo_low * averages.prefix_log_distance
    upper = log_a + bounds.expo_high * averages.prefix_log_distance
    lyap = averages.prefix_lyapunov
    return int(np.sum((lyap < lower - tol) | (lyap > upper + tol)))


class DistortionCheck(BaseModel):
    ratio: float
    bound: float
    log_ratio: float
    log_bound: float


def distortion_check(
    lmap: LorenzMap, x: float, y: float, n: int, bounds: Optional[NonFlatBounds] = None
) -> DistortionCheck:
    """Compare |(f^n)'(y)| / |(f^n)'(x)| with exp(gamma sum (|x_j - y_j| / |x_j - c|)^t).

    Raises:
        PreconditionError: At the first step where x_j, y_j are on different
            sides of c or further apart than |x_j - c| / 2.
    """
    bounds = bounds or nonflat_bounds(lmap)
    gamma = bounds.holder_C + 2.0 * bounds.expo_high
    t = bounds.holder_t
    c = lmap.c
    log_ratio = 0.0
    log_bound = 0.0
    for j in range(n):
        ux, uy = abs(x - c), abs(y - c)
        if ux == 0.0:
            raise PreconditionError(j, "x_j sits at c")
        side_x = LEFT if x < c else RIGHT
        side_y = LEFT if y < c else RIGHT
        if uy == 0.0 or side_x != side_y:
            raise PreconditionError(j, "x_j and y_j lie on different sides of c")
        gap = abs(x - y)
        if gap > ux / 2.0:
            raise PreconditionError(j, f"|x_j - y_j| = {gap:.3e} exceeds |x_j - c|/2 = {ux / 2:.3e}")
        log_ratio += math.log(lmap.deriv_offset(side_y, uy)) - math.log(lmap.deriv_offset(side_x, ux))
        log_bound += gamma * (gap / ux) ** t
        x = lmap.eval_offset(side_x, ux)
        y = lmap.eval_offset(side_y, uy)
    return DistortionCheck(ratio=math.exp(log_ratio), bound=math.exp(log_bound), log_ratio=log_ratio, log_bound=log_bound)


class DistortionSweep(BaseModel):
    pairs: int
    admissible: int
    violations: int
    max_log_excess: float


def distortion_sweep(
    lmap: LorenzMap, pairs: int, seed: int = 0, n_max: int = 20, bounds: Optional[NonFlatBounds] = None
) -> DistortionSweep:
    """Random pairs (x, y, n) checked against the distortion bound; inadmissible pairs are skipped."""
    bounds = bounds or nonflat_bounds(lmap)
    rng = np.random.default_rng(seed)
    admissible = 0
    violations = 0
    worst = -math.inf
    for _ in range(pairs):
        x = float(rng.uniform(0.0, 1.0))
        ux = abs(x - lmap.c)
        if ux == 0.0:
            continue
        gap = ux * 10.0 ** (-rng.uniform(2.0, 8.0))
        y = x + gap if x < lmap.c else x - gap
        n = int(rng.integers(1, n_max + 1))
        try:
            check = distortion_check(lmap, x, y, n, bounds)
        except PreconditionError:
            continue
        admissible += 1
        excess = check.log_ratio - check.log_bound
        worst = max(worst, excess)
        if excess > 1e-12:
            violations += 1
    if violations:
        logger.error(f"Distortion bound fails on {violations} of {admissible} admissible pairs")
    return DistortionSweep(pairs=pairs, admissible=admissible, violations=violations, max_log_excess=worst)


class CorollaryLevel(BaseModel):
    n: int
    radius: float
    samples: int
    skipped: Optional[str] = None
    min_bound_margin: Optional[int] = None
    max_sum_ratio: Optional[float] = None


class CorollaryReport(BaseModel):
    levels: List[CorollaryLevel]
    violations: List[Dict[str, float]]
    passed: bool


def _offset_orbit(lmap: LorenzMap, side: Side, u: float, steps: int) -> np.ndarray:
    c = lmap.c
    out = [u]
    x = None
    for _ in range(steps):
        x = lmap.eval_offset(side, u)
        u = abs(x - c)
        if u == 0.0:
            out.append(0.0)
            break
        side = LEFT if x < c else RIGHT
        out.append(u)
    return np.array(out)


def verify_bound_period_corollaries(
    lmap: LorenzMap,
    constants: RecurrenceConstants,
    n_max: int = 4,
    samples: int = 100,
    seed: int = 0,
    horizon: int = HORIZON,
) -> CorollaryReport:
    """Sample p with |p - c|^kappa <= A e^{-Bn} and check m(p) >= n and the Gamma sum bound.

    A level whose bound periods exhaust every precision escalation, and each
    deeper level, is reported as skipped with a note instead of raising.
    """
    rng = np.random.default_rng(seed)
    levels: List[CorollaryLevel] = []
    violations: List[Dict[str, float]] = []
    out_of_reach: Optional[str] = None
    for n in tqdm(range(1, n_max + 1), desc="corollary levels", disable=not get_settings().progress):
        log_radius = (math.log(constants.A) - constants.B * n) / constants.kappa
        radius = math.exp(log_radius) if log_radius > _LOG_FLOOR else 0.0
        if out_of_reach is None and log_radius <= _LOG_FLOOR:
            out_of_reach = f"threshold radius e^{log_radius:.1f} is below double range"
        if out_of_reach is not None:
            logger.warning(f"Skipping n={n}: {out_of_reach}")
            levels.append(CorollaryLevel(n=n, radius=radius, samples=0, skipped=out_of_reach))
            continue
        margins = []
        ratios = []
        for k in range(samples):
            if k == 0:
                side, u = RIGHT, radius
            else:
                side = LEFT if rng.random() < 0.5 else RIGHT
                u = radius * (1.0 - rng.random())
            try:
                bp = bound_period_at_offset(lmap, side, u, constants.delta, horizon)
            except BudgetExhaustedError as e:
                out_of_reach = f"beyond precision reach from n={n}: {e}"
                logger.warning(f"Skipping n={n} after {k} samples: {e}")
                break
            offsets = _offset_orbit(lmap, side, u, bp.m)
            total = float(np.sum(np.abs(np.log(offsets[offsets > 0]))))
            margins.append(bp.m - n)
            ratio = total / (constants.Gamma * bp.m) if bp.m > 0 else math.inf
            ratios.append(ratio)
            if bp.m < n or not ratio < 1.0:
                violations.append({"n": n, "side": 0.0 if side == LEFT else 1.0, "offset": u, "m": bp.m, "sum": total})
        levels.append(
            CorollaryLevel(
                n=n,
                radius=radius,
                samples=len(margins),
                skipped=out_of_reach,
                min_bound_margin=int(min(margins)) if margins else None,
                max_sum_ratio=float(max(ratios)) if ratios else None,
            )
        )
    if violations:
        logger.error(f"Bound-period corollaries fail on {len(violations)} samples")
    return CorollaryReport(levels=levels, violations=violations, passed=not violations)


class SingularStart(BaseModel):
    side: Side
    hit_c: bool
    lyapunov: Optional[float]
    log_distance: Optional[float]
    typical: bool


class SRBDiagnostic(BaseModel):
    steps: int
    sample_count: int
    random_lyapunov_mean: float
    random_lyapunov_spread: float
    random_log_distance_mean: float
    random_log_distance_spread: float
    singular: List[SingularStart]
    singular_values_typical: bool
    caveats: List[str] = []


def _within(value: float, mean: float, spread: float) -> bool:
    return abs(value - mean) <= 3.0 * spread + 1e-12


def srb_basin_diagnostic(lmap: LorenzMap, n: int, sample_count: int, seed: int = 0) -> SRBDiagnostic:
    """Compare Birkhoff averages started at f(c-+) with Lebesgue-random starts."""
    if sample_count <= 0:
        raise ValueError("sample_count must be positive")
    rng = np.random.default_rng(seed)
    caveats: List[str] = []
    lyap, dist = [], []
    for x0 in tqdm(rng.uniform(0.0, 1.0, sample_count), desc="random starts", disable=not get_settings().progress):
        avg = birkhoff_recurrence(lmap, float(x0), n)
        lyap.append(avg.lyapunov_average)
        dist.append(avg.log_distance_average)
    ddof = 1 if sample_count > 1 else 0
    lyap_mean, lyap_spread = float(np.mean(lyap)), float(np.std(lyap, ddof=ddof))
    dist_mean, dist_spread = float(np.mean(dist)), float(np.std(dist, ddof=ddof))
    singular: List[SingularStart] = []
    for side in SIDES:
        orbit = singular_orbit(lmap, side, min(n, HORIZON))
        if orbit.hit_c_at is not None:
            caveats.append(f"f^{orbit.singular_period}(c{'-' if side == LEFT else '+'}) = c: averages are infinite")
            singular.append(SingularStart(side=side, hit_c=True, lyapunov=None, log_distance=None, typical=False))
            continue
        avg = birkhoff_recurrence(lmap, lmap.eval_side(side), n)
        if avg.truncated:
            caveats.append(f"{side} singular orbit truncated after {avg.steps} steps")
        typical = _within(avg.lyapunov_average, lyap_mean, lyap_spread) and _within(
            avg.log_distance_average, dist_mean, dist_spread
        )
        singular.append(
            SingularStart(
                side=side,
                hit_c=False,
                lyapunov=avg.lyapunov_average,
                log_distance=avg.log_distance_average,
                typical=typical,
            )
        )
    return SRBDiagnostic(
        steps=n,
        sample_count=sample_count,
        random_lyapunov_mean=lyap_mean,
        random_lyapunov_spread=lyap_spread,
        random_log_distance_mean=dist_mean,
        random_log_distance_spread=dist_spread,
        singular=singular,
        singular_values_typical=all(s.typical for s in singular),
        caveats=caveats,
    )
