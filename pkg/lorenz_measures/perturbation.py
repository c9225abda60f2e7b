"""Tuning singular values onto preimages of c.

Moving f(c-) onto a preimage chain of c that lives in the right branch (or
f(c+) onto one in the left branch) makes the singular orbit hit c while the
chain itself is left untouched, since it only uses the other branch.
"""

from __future__ import annotations

import logging
import math
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ValidationError

from .config import DEPTH_MAX, JOINT_ROUNDS, JOINT_TOL, SHOOT_TOL
from .errors import BracketError, ChainNotFoundError, InfeasibleTuningError
from .lorenz_map import LEFT, RIGHT, SYMBOL, LorenzMap, Side, expansion_floor, metric_dist
from .orbit_engine import pullback, push_forward, singular_orbit

logger = logging.getLogger(__name__)

_VERIFY_TOL = 1e-9
_BISECT_STEPS = 200


class TuningResult(BaseModel):
    """A tuned map and its connection certificate."""

    map: LorenzMap
    hits: Dict[str, int]
    depths: Dict[str, int]
    residuals: Dict[str, float]
    metric_dist: float
    expansion_floor: float
    eps: Optional[float] = None

    @property
    def t(self) -> int:
        """Hit time of the single tuned side."""
        if len(self.hits) != 1:
            raise ValueError("result carries hit times for both sides")
        return next(iter(self.hits.values()))

    def certificate(self) -> Dict[str, object]:
        return {
            "t": dict(self.hits),
            "residual": dict(self.residuals),
            "metric_dist": self.metric_dist,
            "expansion_floor": self.expansion_floor,
        }


def _other(side: Side) -> Side:
    return RIGHT if side == LEFT else LEFT


def singular_value(lmap: LorenzMap, side: Side) -> float:
    return lmap.eval_side(side)


def _with_singular_value(lmap: LorenzMap, side: Side, value: float) -> LorenzMap:
    if side == LEFT:
        return lmap.with_singular_values(d0=value)
    return lmap.with_singular_values(d1=1.0 - value)


def nearest_preimage_chain(
    lmap: LorenzMap, target: float, side: Side, depth_max: int = DEPTH_MAX
) -> List[Tuple[int, float]]:
    """Preimages y_k of c along the constant word of ``side``, k = 0..depth_max.

    Raises:
        ChainNotFoundError: If the distance to ``target`` stops decreasing or a
            preimage fails to return to c.
    """
    if depth_max < 0:
        raise ValueError("depth_max must be nonnegative")
    symbol = SYMBOL[side]
    chain = [(0, lmap.c)]
    y = lmap.c
    for k in range(1, depth_max + 1):
        y = lmap.inverse_branch(side, y)
        if abs(y - target) >= abs(chain[-1][1] - target):
            raise ChainNotFoundError(
                f"{symbol}-chain stops approaching {target} at depth {k} (y = {y:.12g})"
            )
        back = push_forward(lmap, y, symbol * k)
        if abs(back - lmap.c) > 1e-10:
            raise ChainNotFoundError(f"preimage at depth {k} returns to {back!r}, not c")
        chain.append((k, y))
    return chain


def _connection_residual(lmap: LorenzMap, side: Side, k: int) -> float:
    """|f^{k+1}(c_side) - c| following the chain word of the other branch."""
    return abs(push_forward(lmap, singular_value(lmap, side), SYMBOL[_other(side)] * k) - lmap.c)


def _shallowest(
    lmap: LorenzMap, side: Side, target: float, eps: float, depth_max: int
) -> Tuple[int, float, LorenzMap, float]:
    chain = nearest_preimage_chain(lmap, target, _other(side), depth_max)
    for k, y in chain:
        if abs(y - target) >= eps:
            continue
        try:
            candidate = _with_singular_value(lmap, side, y)
        except ValidationError:
            continue
        floor = expansion_floor(candidate)
        if floor > 1.0:
            return k, y, candidate, floor
        logger.debug(f"Depth {k} candidate {y:.12g} loses expansion ({floor:.6f})")
    raise InfeasibleTuningError(
        f"no preimage of c within eps = {eps} of {target} keeps expansion up to depth {depth_max}"
    )


def tune_singular_orbit(lmap: LorenzMap, side: Side, eps: float, depth_max: int = DEPTH_MAX) -> TuningResult:
    """Move the singular value on ``side`` by less than eps so its orbit hits c.

    Args:
        lmap: The map to tune.
        side: LEFT tunes d0, RIGHT tunes d1.
        eps: Largest admissible change of the singular value.
        depth_max: Deepest chain preimage considered.

    Raises:
        InfeasibleTuningError: If no chain point within eps keeps f' > 1.
    """
    if eps <= 0.0:
        raise InfeasibleTuningError(f"eps = {eps} admits no change of the singular value")
    k, y, tuned, floor = _shallowest(lmap, side, singular_value(lmap, side), eps, depth_max)
    tuned.check_invariants()
    t = k + 1
    orbit = singular_orbit(tuned, side, t + 1)
    residual = _connection_residual(tuned, side, k)
    if orbit.singular_period != t or residual > _VERIFY_TOL:
        raise InfeasibleTuningError(f"tuned {side} orbit does not reach c at time {t} (residual {residual:.3e})")
    dist = metric_dist(lmap, tuned)
    logger.info(
        f"Tuned {side} singular value {singular_value(lmap, side):.6f} -> {y:.6f}: t = {t}, "
        f"expansion {floor:.6f}, metric distance {dist:.6f}"
    )
    return TuningResult(
        map=tuned,
        hits={side: t},
        depths={side: k},
        residuals={side: residual},
        metric_dist=dist,
        expansion_floor=floor,
        eps=eps,
    )


def tune_periodic_singularity(
    lmap: LorenzMap, eps_left: float = 0.1, eps_right: float = 0.02, depth_max: int = DEPTH_MAX
) -> TuningResult:
    """Tune both singular values so that both singular orbits hit c.

    The left chain lives in the right branch and depends on d1, the right
    chain on d0, so the two selections are alternated until they settle.
    """
    if eps_left <= 0.0 or eps_right <= 0.0:
        raise InfeasibleTuningError("both eps values must be positive")
    targets = {LEFT: singular_value(lmap, LEFT), RIGHT: singular_value(lmap, RIGHT)}
    eps = {LEFT: eps_left, RIGHT: eps_right}
    current = previous = lmap
    depths: Dict[str, int] = {}
    for rnd in range(1, JOINT_ROUNDS + 1):
        new_depths: Dict[str, int] = {}
        for side in (LEFT, RIGHT):
            k, _, current, _ = _shallowest(current, side, targets[side], eps[side], depth_max)
            new_depths[side] = k
        moved = max(abs(singular_value(current, s) - singular_value(previous, s)) for s in (LEFT, RIGHT))
        previous = current
        logger.debug(f"Joint tuning round {rnd}: depths {new_depths}, largest move {moved:.3e}")
        if new_depths == depths and moved < JOINT_TOL:
            break
        depths = new_depths
    else:
        raise InfeasibleTuningError(f"joint tuning did not settle within {JOINT_ROUNDS} rounds")
    floor = current.check_invariants()
    residuals = {side: _connection_residual(current, side, depths[side]) for side in (LEFT, RIGHT)}
    for side, res in residuals.items():
        if res > _VERIFY_TOL:
            raise InfeasibleTuningError(f"{side} connection residual {res:.3e} after joint tuning")
    hits = {side: depths[side] + 1 for side in (LEFT, RIGHT)}
    dist = metric_dist(lmap, current)
    logger.info(f"Periodic singularity: hits {hits}, metric distance {dist:.6f}, expansion {floor:.6f}")
    return TuningResult(
        map=current,
        hits=hits,
        depths=depths,
        residuals=residuals,
        metric_dist=dist,
        expansion_floor=floor,
        eps=max(eps_left, eps_right),
    )


def _sign(x: float) -> int:
    if x < 0:
        return -1
    elif x > 0:
        return +1
    return 0


def _itinerary_after(lmap: LorenzMap, side: Side, steps: int) -> Tuple[str, float]:
    """Symbols of f^1..f^{steps-1}(c_side) and the signed offset of f^steps(c_side) from c."""
    x = singular_value(lmap, side)
    symbols = []
    for _ in range(steps - 1):
        if x == lmap.c:
            break
        s = LEFT if x < lmap.c else RIGHT
        symbols.append(SYMBOL[s])
        x = push_forward(lmap, x, SYMBOL[s])
    return "".join(symbols), x - lmap.c


def _feasible_bracket(lmap: LorenzMap, side: Side) -> Tuple[float, float]:
    """Singular values whose branch slope stays above 1."""
    um = lmap.u_max(side)
    least = um / lmap.exponent(side) * (1.0 + 1e-9)
    if least >= 1.0:
        raise BracketError(f"no {side} singular value keeps the branch expanding")
    if side == LEFT:
        return least, 1.0
    return 0.0, 1.0 - least


def shoot_for_connection(
    lmap: LorenzMap,
    side: Side,
    t_target: int,
    bracket: Optional[Tuple[float, float]] = None,
    tol: float = SHOOT_TOL,
) -> TuningResult:
    """Bisect the singular value on ``side`` until f^t_target(c_side) = c.

    Args:
        lmap: Starting map; the other singular value is kept.
        side: Which singular value to shoot.
        t_target: Requested hit time, at least 2.
        bracket: Singular-value interval; defaults to the values keeping the
            tuned branch expanding.
        tol: Required |f^t(c_side) - c|.

    Raises:
        BracketError: If the bracket ends share a sign or the itinerary
            changes inside the bracket.
    """
    if t_target < 2:
        raise ValueError("t_target must be at least 2")
    word, offset = _itinerary_after(lmap, side, t_target)
    if len(word) == t_target - 1 and abs(offset) < tol:
        logger.info(f"Map already connects c_{side} at time {t_target}")
        return _shooting_result(lmap, lmap, side, t_target, abs(offset))
    default = bracket is None
    lo, hi = _feasible_bracket(lmap, side) if default else bracket

    def evaluate(v: float) -> Tuple[str, float]:
        return _itinerary_after(_with_singular_value(lmap, side, v), side, t_target)

    word_lo, f_lo = evaluate(lo)
    word_hi, f_hi = evaluate(hi)
    if word_lo != word_hi:
        location = next((j for j, (a, b) in enumerate(zip(word_lo, word_hi)) if a != b), min(len(word_lo), len(word_hi)))
        raise BracketError(
            f"itinerary changes across the bracket at symbol {location + 1}: {word_lo!r} vs {word_hi!r}",
            location=location,
        )
    start_sign, end_sign = _sign(f_lo), _sign(f_hi)
    if start_sign * end_sign != -1:
        required = pullback(lmap, word_lo, lmap.c) if len(word_lo) == t_target - 1 else math.nan
        scope = "expansion-feasible range" if default else "bracket"
        raise BracketError(
            f"no sign change for t = {t_target}: required f(c_{side}) = {required:.5f} lies outside the "
            f"{scope} [{lo:.5f}, {hi:.5f}]"
        )
    start, end = lo, hi
    for _ in range(_BISECT_STEPS):
        middle = 0.5 * start + 0.5 * end
        word_mid, f_mid = evaluate(middle)
        if word_mid != word_lo:
            location = next((j for j, (a, b) in enumerate(zip(word_lo, word_mid)) if a != b), len(word_mid))
            raise BracketError(f"itinerary changes inside the bracket near {middle:.12g}", location=location)
        middle_sign = _sign(f_mid)
        if middle_sign == 0 or abs(f_mid) < tol * 1e-2 or middle in (start, end):
            start = end = middle
            break
        if start_sign != middle_sign:
            end = middle
        else:
            start = middle
            start_sign = middle_sign
    value = 0.5 * (start + end)
    tuned = _with_singular_value(lmap, side, value)
    _, residual = _itinerary_after(tuned, side, t_target)
    if abs(residual) >= tol:
        raise InfeasibleTuningError(f"shooting stalled with residual {abs(residual):.3e}")
    return _shooting_result(lmap, tuned, side, t_target, abs(residual))


def _shooting_result(original: LorenzMap, tuned: LorenzMap, side: Side, t: int, residual: float) -> TuningResult:
    floor = tuned.check_invariants()
    dist = metric_dist(original, tuned) if tuned is not original else 0.0
    logger.info(f"Shot {side} singular value to {singular_value(tuned, side):.12f}: t = {t}, residual {residual:.3e}")
    return TuningResult(
        map=tuned,
        hits={side: t},
        depths={side: t - 1},
        residuals={side: residual},
        metric_dist=dist,
        expansion_floor=floor,
    )
