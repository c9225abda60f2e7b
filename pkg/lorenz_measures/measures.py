"""Measures on the cylinder tower and their f-level functionals.

A base measure puts weight on every atom g^n(P) of the partition P*.  A mass
distribution keeps the base weights on levels n <= ell and replaces the rest
by a zeta-weighted power-law tail, w_n = Z (n - ell)^(-s) with s = 2 + alpha.
With s in (2, 3) the induced time R_c stays integrable while R_c^2 does not,
which is what drives the measures towards infinite Lyapunov exponent.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from .config import (
    DIVERGENCE_FACTOR,
    DIVERGENCE_MAX_DECADE,
    MAX_SAMPLE_LEVEL,
    N_LEVELS_SQ,
    SUPPORT_NET,
    SURROGATE_ALPHA,
)
from .errors import EmptyTowerError, MassDistributionError
from .induced_markov import CylinderTower
from .lorenz_map import LEFT, RIGHT
from .orbit_engine import pullback
from .zeta_sums import power_sum, tail_bound_constant, zeta, zeta_log_moment

logger = logging.getLogger(__name__)

Weighting = Literal["bernoulli", "geometric"]

# Bernoulli levels beyond the tower are summed until their mass drops below this
_BEYOND_CUTOFF = 1e-18


def _entropy_terms(weights: np.ndarray) -> float:
    w = weights[weights > 0]
    return float(-np.sum(w * np.log(w)))


def _normalized_lengths(log_widths: np.ndarray) -> np.ndarray:
    w = np.exp(log_widths - np.max(log_widths))
    return w / w.sum()


@dataclass(frozen=True)
class BaseMeasure:
    """Atom weights on the explicit tower levels plus the analytic remainder.

    For the Bernoulli lift the weight of g^n(P_i) is pi0^n pi_i and the mass
    of levels beyond the tower is pi0^(depth + 1).
    """

    weights: np.ndarray
    conditional: np.ndarray
    beyond: float
    weighting: str
    pi0: Optional[float] = None

    @property
    def level_mass(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def mass_above(self, ell: int) -> float:
        """Mass of the levels n > ell, i.e. of P_{ell+1}(c)."""
        return float(self.weights[ell + 1 :].sum()) + self.beyond

    def level_weight(self, n: int) -> float:
        depth = self.weights.shape[0] - 1
        if n <= depth:
            return float(self.level_mass[n])
        if self.pi0 is None:
            return 0.0
        return float(self.pi0**n * (1.0 - self.pi0))


def base_measure(
    tower: CylinderTower,
    weighting: Weighting = "bernoulli",
    leftmost_weight: Optional[float] = None,
    weights: Optional[np.ndarray] = None,
) -> BaseMeasure:
    """Base measure on P*.

    Args:
        tower: The cylinder tower.
        weighting: "bernoulli" lifts the Bernoulli measure with branch
            weights proportional to length; "geometric" uses the atom lengths.
        leftmost_weight: Fixes the Bernoulli weight of (c, q).
        weights: Explicit atom weights, shape (depth + 1, K); overrides
            ``weighting``.

    Raises:
        EmptyTowerError: If the tower has no atoms.
    """
    depth, K = tower.depth, len(tower.base)
    if K == 0:
        raise EmptyTowerError("tower has no atoms")
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.ndim == 1:
            w = np.vstack([w, np.zeros((depth, K))]) if depth else w[None, :]
        if w.shape != (depth + 1, K):
            raise ValueError(f"weights must have shape {(depth + 1, K)}, got {w.shape}")
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative with positive total")
        w = w / w.sum()
        lengths = _normalized_lengths(tower.atom_log_widths[0])
        rows = w.sum(axis=1, keepdims=True)
        cond = np.where(rows > 0, w / np.where(rows > 0, rows, 1.0), lengths[None, :])
        return BaseMeasure(weights=w, conditional=cond, beyond=0.0, weighting="user")
    if weighting == "geometric":
        log_w = tower.atom_log_widths
        w = np.exp(log_w - np.max(log_w))
        w = w / w.sum()
        # rows normalised in log form, deep levels underflow in w
        cond = np.exp(log_w - np.max(log_w, axis=1, keepdims=True))
        cond = cond / cond.sum(axis=1, keepdims=True)
        return BaseMeasure(weights=w, conditional=cond, beyond=0.0, weighting="geometric")
    if weighting != "bernoulli":
        raise ValueError(f"unknown weighting {weighting!r}")
    base_lengths = np.array([b.length for b in tower.base])
    left_length = tower.leftmost.length
    if leftmost_weight is None:
        total = left_length + base_lengths.sum()
        pi0 = left_length / total
        pi = base_lengths / total
    else:
        if not 0.0 <= leftmost_weight < 1.0:
            raise ValueError("leftmost_weight must lie in [0, 1)")
        pi0 = leftmost_weight
        pi = (1.0 - pi0) * base_lengths / base_lengths.sum()
    levels = pi0 ** np.arange(depth + 1)
    w = levels[:, None] * pi[None, :]
    cond = np.tile(pi / pi.sum(), (depth + 1, 1))
    return BaseMeasure(weights=w, conditional=cond, beyond=float(pi0 ** (depth + 1)), weighting="bernoulli", pi0=pi0)


@dataclass(frozen=True)
class MassDistribution:
    """Head of a base measure on levels <= ell plus a power-law tail."""

    base: BaseMeasure
    tower: CylinderTower
    ell: int
    alpha_mass: float
    exponent: float
    tail_mass: float
    Z: float

    @property
    def head(self) -> np.ndarray:
        return self.base.weights[: self.ell + 1]

    def level_weight(self, n: int) -> float:
        if n <= self.ell:
            return float(self.head[n].sum())
        return self.Z * (n - self.ell) ** (-self.exponent)

    def level_weights(self, n_max: int) -> np.ndarray:
        n = np.arange(n_max + 1)
        out = np.zeros(n_max + 1)
        head_levels = min(self.ell, n_max) + 1
        out[:head_levels] = self.head[:head_levels].sum(axis=1)
        k = n[n > self.ell] - self.ell
        out[self.ell + 1 :] = self.Z * k.astype(float) ** (-self.exponent)
        return out

    def conditional(self, n: int) -> np.ndarray:
        return self.base.conditional[min(n, self.base.conditional.shape[0] - 1)]

    def atom_weights(self, n_max: int) -> np.ndarray:
        """Weights of atoms on levels 0..n_max, shape (n_max + 1, K)."""
        out = self.level_weights(n_max)[:, None] * np.array([self.conditional(n) for n in range(n_max + 1)])
        out[: self.ell + 1] = self.head[: n_max + 1]
        return out

    def total_mass(self) -> Tuple[float, float]:
        """Total mass and its analytic error bound."""
        z = zeta(self.exponent)
        return float(self.head.sum()) + self.Z * z["value"], self.Z * z["error_bound"] + 1e-15


def mass_distribution(base: BaseMeasure, tower: CylinderTower, ell: int, alpha_mass: float) -> MassDistribution:
    """Mass distribution with head depth ell and tail exponent 2 + alpha_mass.

    Raises:
        MassDistributionError: If alpha_mass is outside (0, 1), ell < 0, or the
            tower does not reach level ell + 1.
    """
    if not 0.0 < alpha_mass < 1.0:
        raise MassDistributionError(f"alpha_mass = {alpha_mass} must lie in (0, 1)")
    if ell < 0:
        raise MassDistributionError("ell must be nonnegative")
    if tower.depth < ell + 1:
        raise MassDistributionError(f"tower depth {tower.depth} does not cover level ell + 1 = {ell + 1}")
    return _with_exponent(base, tower, ell, alpha_mass, 2.0 + alpha_mass)


def _with_exponent(base: BaseMeasure, tower: CylinderTower, ell: int, alpha_mass: float, exponent: float) -> MassDistribution:
    mu = base.mass_above(ell)
    return MassDistribution(
        base=base,
        tower=tower,
        ell=ell,
        alpha_mass=alpha_mass,
        exponent=exponent,
        tail_mass=mu,
        Z=mu / zeta(exponent)["value"],
    )


def tail_surrogate(m: MassDistribution, exponent: float) -> MassDistribution:
    """Same head and tail mass, different tail exponent (> 1)."""
    if exponent <= 1.0:
        raise MassDistributionError("tail exponent must exceed 1 for finite mass")
    return _with_exponent(m.base, m.tower, m.ell, exponent - 2.0, exponent)


def tail_weight_ratio(m0: MassDistribution, m1: MassDistribution, n: int) -> float:
    """Ratio of atom weights at level n > ell between two mass distributions."""
    if m0.ell != m1.ell or n <= m0.ell:
        raise ValueError("ratio is taken at a tail level of two distributions with the same ell")
    return m0.level_weight(n) / m1.level_weight(n)


class SecondMomentBounds(BaseModel):
    int_R_nu: float
    int_R_sq_nu: float
    int_R_mu: float
    lower: float
    upper: float
    ratio: float
    holds: bool


class ProjectionSummary(BaseModel):
    level: str
    total_mass: Optional[float]
    infinite: bool
    segment_masses: List[float]
    second_moment: Optional[SecondMomentBounds] = None


class MeasureReport(BaseModel):
    ell: int
    alpha_mass: float
    exponent: float
    t0: int
    head_atoms: int
    total_mass: float
    total_mass_error: float
    entropy_Fc: float
    entropy_Fc_error: float
    entropy_head: float
    entropy_tail_classes: float
    entropy_tail_within: float
    entropy_bound: float
    tail_bound_C: float
    int_Rc: float
    int_Rc_error: float
    int_Rc_tail: float
    int_Rc_sq_levels: List[int]
    int_Rc_sq_partials: List[float]
    int_Rc_sq_growth_exponent: Optional[float]
    int_Rc_sq_divergent: bool
    divergence_horizon: Optional[int]
    surrogate_tail_value: float
    int_Rtilde: float
    int_R_eta: float
    int_R_eta_chain: float
    eta_leftmost: float
    h_nu: float
    h_eta: float
    h_mu: float
    n_partial: int
    lyapunov_partials: List[float]
    recurrence_partials: List[float]


def _second_moment_tail(m: MassDistribution, levels: int) -> float:
    """Z * sum over tail levels ell < n <= levels of (n + 1)^2 (n - ell)^(-s)."""
    M = levels - m.ell
    if M <= 0 or m.Z == 0:
        return 0.0
    s, l1 = m.exponent, m.ell + 1
    return m.Z * (power_sum(s - 2.0, M) + 2 * l1 * power_sum(s - 1.0, M) + l1 * l1 * power_sum(s, M))


def rc_square_partial_sums(m: MassDistribution, n_levels: int = N_LEVELS_SQ) -> np.ndarray:
    """Partial sums of the R_c^2 integral through levels 0..n_levels."""
    n = np.arange(n_levels + 1)
    terms = (n + 1.0) ** 2 * m.level_weights(n_levels)
    return np.cumsum(terms)


def _growth_exponent(m: MassDistribution, n_levels: int) -> Optional[float]:
    lo = max(m.ell + 1, n_levels // 100)
    n = np.arange(lo, n_levels + 1)
    if m.Z == 0 or n.size < 2:
        return None
    k = (n - m.ell).astype(float)
    log_terms = 2.0 * np.log(n + 1.0) - m.exponent * np.log(k)
    slope = np.polyfit(np.log(n), log_terms, 1)[0]
    return float(1.0 + slope)


def divergence_horizon(m: MassDistribution) -> Tuple[Optional[int], float]:
    """First decade N where the R_c^2 tail sum exceeds the factor times the surrogate tail."""
    s_sur = 2.0 + SURROGATE_ALPHA
    l1 = m.ell + 1
    z_sur = m.tail_mass / zeta(s_sur)["value"]
    surrogate = z_sur * (
        zeta(s_sur - 2.0)["value"] + 2 * l1 * zeta(s_sur - 1.0)["value"] + l1 * l1 * zeta(s_sur)["value"]
    )
    if m.Z == 0:
        return None, surrogate
    for decade in range(1, DIVERGENCE_MAX_DECADE + 1):
        N = 10**decade
        if _second_moment_tail(m, N) >= DIVERGENCE_FACTOR * surrogate:
            return N, surrogate
    return None, surrogate


def _tail_level_sum(m: MassDistribution, values: np.ndarray, limit_value: float) -> float:
    """sum_{n > ell} w_n v_n with v_n explicit up to the tower depth and constant beyond."""
    depth = m.tower.depth
    total = 0.0
    for n in range(m.ell + 1, depth + 1):
        total += m.level_weight(n) * values[n]
    if m.Z > 0:
        remaining = m.Z * (zeta(m.exponent)["value"] - power_sum(m.exponent, depth - m.ell))
        total += remaining * limit_value
    return total


def _segment_tables(tower: CylinderTower, max_level: int) -> Tuple[np.ndarray, np.ndarray]:
    """Cumulative log f' and |log|x - c|| sums of the F-steps of g^n(rep_i)."""
    reps = tower.deep_rep_log_offsets(max_level)
    K = reps.shape[1]
    sig = np.zeros((max_level + 1, K))
    rho = np.zeros((max_level + 1, K))
    if max_level >= 1:
        lyap, dist = tower.segment_sums(reps[1:].ravel())
        sig[1:] = np.cumsum(lyap.reshape(max_level, K), axis=0)
        rho[1:] = np.cumsum(dist.reshape(max_level, K), axis=0)
    return sig, rho


def measure_report(m: MassDistribution, n_partial: Optional[int] = None, n_levels_sq: int = N_LEVELS_SQ) -> MeasureReport:
    """Entropy, return-time integrals, the Abramov chain and per-level partial sums."""
    tower = m.tower
    depth = tower.depth
    n_partial = depth if n_partial is None else n_partial
    if n_partial > depth:
        raise ValueError(f"n_partial = {n_partial} exceeds tower depth {depth}")
    s, Z, ell, t0 = m.exponent, m.Z, m.ell, tower.t0
    R = tower.base_R.astype(float)
    head = m.head
    head_levels = head.sum(axis=1)

    # entropy
    entropy_head = _entropy_terms(head.ravel())
    if Z > 0:
        zs, zl = zeta(s), zeta_log_moment(s)
        classes = -Z * zs["value"] * math.log(Z) + Z * s * zl["value"]
        class_error = Z * (zs["error_bound"] * abs(math.log(Z)) + s * zl["error_bound"])
    else:
        classes, class_error = 0.0, 0.0
    cond_entropy = np.array([_entropy_terms(row) for row in m.base.conditional])
    within = _tail_level_sum(m, cond_entropy, float(cond_entropy[-1]))
    entropy = entropy_head + classes + within
    C = tail_bound_constant(ell, m.alpha_mass) if 0 < m.alpha_mass < 1 else math.inf

    # induced times
    n_head = np.arange(ell + 1)
    head_rc = float(np.sum((n_head + 1) * head_levels))
    if Z > 0 and s > 2.0:
        zs1 = zeta(s - 1.0)
        rc_tail = Z * (zs1["value"] + (ell + 1) * zeta(s)["value"])
        rc_error = Z * (zs1["error_bound"] + (ell + 1) * zeta(s)["error_bound"])
        n_tail = Z * (zs1["value"] + ell * zeta(s)["value"])
    elif Z > 0:
        rc_tail, rc_error, n_tail = math.inf, 0.0, math.inf
    else:
        rc_tail, rc_error, n_tail = 0.0, 0.0, 0.0
    int_rc = head_rc + rc_tail
    mean_R = np.array([row @ R for row in m.base.conditional])
    base_R_head = float(np.sum(head @ R))
    base_R_tail = _tail_level_sum(m, mean_R, float(mean_R[-1]))
    base_R_total = base_R_head + base_R_tail
    int_rtilde = t0 * float(np.sum(n_head * head_levels)) + t0 * n_tail + base_R_total
    int_r_eta = int_rtilde / int_rc
    eta_left = (int_rc - 1.0) / int_rc
    chain = t0 * eta_left + base_R_total / int_rc

    # second moment
    partials = rc_square_partial_sums(m, n_levels_sq)
    checkpoints = np.unique(np.geomspace(1, n_levels_sq, 40).astype(int))
    growth = _growth_exponent(m, n_levels_sq)
    horizon, surrogate = divergence_horizon(m)
    divergent = growth is not None and horizon is not None and growth >= (1.0 - m.alpha_mass) / 2.0

    # Lyapunov and recurrence functionals per level
    sig, rho = _segment_tables(tower, n_partial)
    weights = m.atom_weights(n_partial)
    lyap_atoms = weights * (sig + tower.base_lyapunov[None, :])
    rec_atoms = weights * (rho + tower.base_log_distance[None, :])
    lyap_partials = np.cumsum(lyap_atoms.sum(axis=1))
    rec_partials = np.cumsum(rec_atoms.sum(axis=1))

    total, total_error = m.total_mass()
    h_eta = entropy / int_rc
    report = MeasureReport(
        ell=ell,
        alpha_mass=m.alpha_mass,
        exponent=s,
        t0=t0,
        head_atoms=int(np.count_nonzero(head)),
        total_mass=total,
        total_mass_error=total_error,
        entropy_Fc=entropy,
        entropy_Fc_error=class_error + 1e-12,
        entropy_head=entropy_head,
        entropy_tail_classes=classes,
        entropy_tail_within=within,
        entropy_bound=entropy_head + C,
        tail_bound_C=C,
        int_Rc=int_rc,
        int_Rc_error=rc_error,
        int_Rc_tail=rc_tail,
        int_Rc_sq_levels=[int(n) for n in checkpoints],
        int_Rc_sq_partials=[float(partials[n]) for n in checkpoints],
        int_Rc_sq_growth_exponent=growth,
        int_Rc_sq_divergent=bool(divergent),
        divergence_horizon=horizon,
        surrogate_tail_value=surrogate,
        int_Rtilde=int_rtilde,
        int_R_eta=int_r_eta,
        int_R_eta_chain=chain,
        eta_leftmost=eta_left,
        h_nu=entropy,
        h_eta=h_eta,
        h_mu=h_eta / int_r_eta,
        n_partial=n_partial,
        lyapunov_partials=lyap_partials.tolist(),
        recurrence_partials=rec_partials.tolist(),
    )
    logger.info(
        f"Measure report ell={ell} alpha={m.alpha_mass}: entropy={entropy:.6f} int_Rc={int_rc:.6f} "
        f"h_mu={report.h_mu:.6f} divergent={divergent}"
    )
    return report


def base_functionals(base: BaseMeasure, tower: CylinderTower) -> Dict[str, float]:
    """Entropy, int R_c and int R-tilde of the base measure itself."""
    depth = tower.depth
    R = tower.base_R.astype(float)
    levels = [base.level_weight(n) for n in range(depth + 1)]
    n = depth
    while base.pi0 is not None and base.level_weight(n + 1) > _BEYOND_CUTOFF:
        n += 1
        levels.append(base.level_weight(n))
    levels_arr = np.array(levels)
    cond = np.array([base.conditional[min(k, depth)] for k in range(len(levels_arr))])
    atoms = levels_arr[:, None] * cond
    atoms[: depth + 1] = base.weights
    idx = np.arange(len(levels_arr))
    return {
        "entropy": _entropy_terms(atoms.ravel()),
        "int_Rc": float(np.sum((idx + 1) * atoms.sum(axis=1))),
        "int_Rtilde": float(np.sum(atoms * (tower.t0 * idx[:, None] + R[None, :]))),
    }


def _second_moment_bounds(level_weights: np.ndarray) -> SecondMomentBounds:
    w = level_weights / level_weights.sum()
    n = np.arange(len(w))
    r = n + 1.0
    int_r = float(np.sum(w * r))
    int_r_sq = float(np.sum(w * r * r))
    int_r_mu = float(np.sum(w * r * (r + 1.0) / 2.0)) / int_r
    product = int_r * int_r_mu
    return SecondMomentBounds(
        int_R_nu=int_r,
        int_R_sq_nu=int_r_sq,
        int_R_mu=int_r_mu,
        lower=0.5 * product,
        upper=2.0 * product,
        ratio=int_r_sq / product,
        holds=0.5 * product <= int_r_sq <= 2.0 * product,
    )


def project_atoms(atoms: Sequence[Tuple[float, int]]) -> ProjectionSummary:
    """Spread explicit (weight, induced time) atoms along their orbit segments."""
    if not atoms:
        raise ValueError("no atoms to project")
    weights = np.array([w for w, _ in atoms], dtype=float)
    times = np.array([r for _, r in atoms], dtype=int)
    if np.any(times < 1) or np.any(weights < 0):
        raise ValueError("induced times must be >= 1 and weights nonnegative")
    total = float(np.sum(weights * times))
    segments = [float(np.sum(weights[times > j])) / total for j in range(int(times.max()))]
    return ProjectionSummary(level="explicit", total_mass=total, infinite=False, segment_masses=segments)


def project_measure(
    m: MassDistribution, level: Literal["F", "f"] = "F", n_trunc: int = 50, segments: int = 20
) -> ProjectionSummary:
    """Kac projection of m to the first return map F or to f.

    Divergent total mass is reported, not raised.
    """
    tower = m.tower
    infinite = m.Z > 0 and m.exponent <= 2.0
    if level == "F":
        report_total = None
        if not infinite:
            head = m.head.sum(axis=1)
            report_total = float(np.sum((np.arange(m.ell + 1) + 1) * head))
            if m.Z > 0:
                report_total += m.Z * (zeta(m.exponent - 1.0)["value"] + (m.ell + 1) * zeta(m.exponent)["value"])
        lw = m.level_weights(segments)
        tails = [1.0 - float(np.sum(lw[:j])) for j in range(segments)]
    elif level == "f":
        report_total = None
        if not infinite:
            report_total = measure_report(m, n_partial=0, n_levels_sq=100).int_Rtilde
        depth = tower.depth
        atoms = m.atom_weights(depth)
        rt = tower.R_tilde()
        beyond = 1.0 - float(atoms.sum())
        tails = [float(atoms[rt > j].sum()) + (beyond if tower.t0 * (depth + 1) > j else 0.0) for j in range(segments)]
    else:
        raise ValueError("level must be 'F' or 'f'")
    masses = [t / report_total for t in tails] if report_total else tails
    bounds = _second_moment_bounds(m.level_weights(n_trunc))
    if infinite:
        logger.warning(f"Projected mass at level {level} is infinite (tail exponent {m.exponent})")
    return ProjectionSummary(
        level=level, total_mass=report_total, infinite=infinite, segment_masses=masses, second_moment=bounds
    )


@dataclass(frozen=True)
class SampleStatistics:
    levels: np.ndarray
    branches: np.ndarray
    prefix_steps: np.ndarray
    prefix_lyapunov: np.ndarray
    prefix_log_distance: np.ndarray
    max_level_drawn: int
    levels_clipped: int
    support_coverage: float


def _segment_points(tower: CylinderTower, i: int) -> List[float]:
    branch = tower.base[i]
    mid = 0.5 * (tower.J.c + tower.J.p)
    return [pullback(tower.lmap, branch.word[k:], mid) for k in range(branch.R)]


def sample_superexpanding(
    m: MassDistribution, seed: int, segments: int, max_level: int = MAX_SAMPLE_LEVEL
) -> SampleStatistics:
    """Concatenate f-orbit segments of i.i.d. atoms drawn from m.

    Levels are drawn by inverse CDF over 0..max_level, with the tail mass
    beyond max_level lumped onto max_level.
    """
    tower = m.tower
    lmap = tower.lmap
    rng = np.random.default_rng(seed)
    weights = m.level_weights(max_level)
    weights[-1] += max(0.0, 1.0 - weights.sum())
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    levels = np.minimum(np.searchsorted(cdf, rng.random(segments), side="right"), max_level)
    K = len(tower.base)
    branches = np.empty(segments, dtype=int)
    for n in np.unique(levels):
        idx = np.flatnonzero(levels == n)
        branches[idx] = rng.choice(K, size=idx.size, p=m.conditional(int(n)))
    top = int(levels.max())
    sig, rho = _segment_tables(tower, top)
    lyap = sig[levels, branches] + tower.base_lyapunov[branches]
    dist = rho[levels, branches] + tower.base_log_distance[branches]
    steps = tower.t0 * levels + tower.base_R[branches]
    cum_steps = np.cumsum(steps)

    lo, hi = lmap.eval_side(RIGHT), lmap.eval_side(LEFT)
    bins = max(1, int(math.ceil((hi - lo) / SUPPORT_NET)))
    hit = np.zeros(bins, dtype=bool)

    def mark(points: Sequence[float]) -> None:
        idx = np.clip(((np.asarray(points) - lo) / SUPPORT_NET).astype(int), 0, bins - 1)
        inside = (np.asarray(points) >= lo) & (np.asarray(points) <= hi)
        hit[idx[inside]] = True

    for i in np.unique(branches):
        mark(_segment_points(tower, int(i)))
    if top >= 1:
        connection = [pullback(lmap, tower.leftmost.word[j:], lmap.c) for j in range(1, tower.t0)]
        mark(connection + [lmap.c])
    return SampleStatistics(
        levels=levels,
        branches=branches,
        prefix_steps=cum_steps,
        prefix_lyapunov=np.cumsum(lyap) / cum_steps,
        prefix_log_distance=np.cumsum(dist) / cum_steps,
        max_level_drawn=top,
        levels_clipped=int(np.sum(levels == max_level)),
        support_coverage=float(hit.mean()),
    )
