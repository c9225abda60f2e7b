"""Forward orbits, singular orbits and periodic points.

Forward iteration carries an explicit error budget and stops once the budget
can no longer resolve the singularity; everything deep (periodic points,
preimages of c, shadow orbits) is computed through contracting inverse
branches instead.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import mpmath
import numpy as np
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from .config import C_TOL, ROUNDING_ULPS, get_settings
from .errors import BudgetExhaustedError, NoPeriodicPointError
from .lorenz_map import LEFT, RIGHT, SIDE_OF_SYMBOL, SYMBOL, LorenzMap, Side

logger = logging.getLogger(__name__)

T = TypeVar("T")

_PERIODIC_TOL = 1e-13
_MAX_PULLBACK_CYCLES = 5000


@dataclass(frozen=True)
class Itinerary:
    """A nonempty word over {L, R}."""

    symbols: str

    def __post_init__(self) -> None:
        if not self.symbols:
            raise ValueError("itinerary must be nonempty")
        if set(self.symbols) - {"L", "R"}:
            raise ValueError(f"itinerary {self.symbols!r} has symbols outside {{L, R}}")

    def __len__(self) -> int:
        return len(self.symbols)

    def __str__(self) -> str:
        return self.symbols

    def sides(self) -> List[Side]:
        return [SIDE_OF_SYMBOL[s] for s in self.symbols]

    @classmethod
    def from_sides(cls, sides: Sequence[Side]) -> "Itinerary":
        return cls("".join(SYMBOL[s] for s in sides))


@dataclass(frozen=True)
class OrbitRecord:
    """A forward orbit with its itinerary and error bookkeeping.

    ``symbols[j]`` is the side of ``points[j]``; a point that hit c carries no
    symbol, so ``len(symbols)`` is ``len(points) - 1`` exactly when
    ``hit_c_at`` is set.
    """

    points: np.ndarray
    offsets: np.ndarray
    symbols: str
    error_budget: float
    hit_c_at: Optional[int] = None
    truncated: Optional[str] = None
    precision: Optional[int] = None

    @property
    def itinerary(self) -> Optional[Itinerary]:
        return Itinerary(self.symbols) if self.symbols else None

    @property
    def singular_period(self) -> Optional[int]:
        """t with f^t(c_side) = c when this is a singular orbit that hit c."""
        return None if self.hit_c_at is None else self.hit_c_at + 1

    def __len__(self) -> int:
        return len(self.points)

    def log_derivatives(self, lmap: LorenzMap) -> np.ndarray:
        """log f' at every point that carries a symbol."""
        n = len(self.symbols)
        sides = np.array([s == "L" for s in self.symbols], dtype=bool)
        offsets = self.offsets[:n]
        out = np.empty(n)
        if sides.any():
            out[sides] = np.log(lmap.deriv_offset(LEFT, offsets[sides]))
        if (~sides).any():
            out[~sides] = np.log(lmap.deriv_offset(RIGHT, offsets[~sides]))
        return out

    def log_distances(self) -> np.ndarray:
        """|log|x_j - c|| at every point that carries a symbol."""
        return np.abs(np.log(self.offsets[: len(self.symbols)]))


def _ulp(y, precision: Optional[int]):
    if precision is None:
        return math.ulp(float(y))
    return mpmath.mpf(2) ** (-precision) * abs(y)


def step_rounding(lmap: LorenzMap, side: Side, x, y, deriv, precision: Optional[int]):
    """Rounding added by one branch step x -> y.

    Covers the offset |x - c| (amplified by the derivative), the evaluation of
    the image offset delta and the final sum f(c_side) -/+ delta, which cancels
    when y is close to 0 or 1.
    """
    base = lmap.eval_side(side)
    delta = abs(y - base)
    return (
        deriv * _ulp(max(abs(x), lmap.c), precision)
        + ROUNDING_ULPS * _ulp(delta, precision)
        + _ulp(max(abs(base), delta), precision)
    )


def iterate(
    lmap: LorenzMap,
    x0: float,
    n: int,
    c_tol: float = C_TOL,
    side: Optional[Side] = None,
    precision: Optional[int] = None,
) -> OrbitRecord:
    """Forward orbit of x0 for up to n steps.

    Args:
        lmap: The map.
        x0: Start point in [0, 1]. With ``side`` set it must equal c and the
            orbit starts at c on that side.
        n: Number of steps.
        c_tol: Distance to c counted as a hit.
        side: Side tag for starting at c.
        precision: mpmath mantissa in bits, or None for doubles.

    Returns:
        The orbit, truncated at a c-hit or once the budget exceeds c_tol/10.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if x0 < 0.0 or x0 > 1.0:
        raise ValueError(f"x0 = {x0} lies outside [0, 1]")
    if side is not None and x0 != lmap.c:
        raise ValueError("a side tag is only meaningful at x0 = c")
    if precision is None:
        return _iterate(lmap, x0, n, c_tol, side, None)
    with mpmath.workprec(precision):
        return _iterate(lmap, mpmath.mpf(x0), n, c_tol, side, precision)


def _iterate(lmap, x0, n, c_tol, side, precision) -> OrbitRecord:
    c = lmap.c
    points = [x0]
    offsets = [abs(x0 - c)]
    symbols: List[str] = []
    err = 0.0 if precision is None else mpmath.mpf(0)
    hit = None
    truncated = None
    x = x0
    for j in range(n + 1):
        u = abs(x - c)
        if j == 0 and side is not None:
            s = side
        elif u <= c_tol:
            hit = j
            truncated = "c-hit"
            break
        else:
            s = LEFT if x < c else RIGHT
        symbols.append(SYMBOL[s])
        if j == n:
            break
        y = lmap.eval_offset(s, u)
        d = lmap.deriv_offset(s, u) if u > 0 else 0.0
        err = d * err + step_rounding(lmap, s, x, y, d, precision)
        if err > c_tol / 10:
            truncated = "budget"
            logger.debug(f"Orbit truncated by error budget at step {j + 1}")
            break
        x = y
        points.append(x)
        offsets.append(abs(x - c))
    return OrbitRecord(
        points=np.array([float(p) for p in points]),
        offsets=np.array([float(o) for o in offsets]),
        symbols="".join(symbols),
        error_budget=float(err),
        hit_c_at=hit,
        truncated=truncated,
        precision=precision,
    )


def singular_orbit(
    lmap: LorenzMap,
    side: Side,
    horizon: int,
    c_tol: float = C_TOL,
    precision: Optional[int] = None,
) -> OrbitRecord:
    """Orbit of f(c_side); index 0 holds f(c_side) itself."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    full = iterate(lmap, lmap.c, horizon, c_tol=c_tol, side=side, precision=precision)
    hit = None if full.hit_c_at is None else full.hit_c_at - 1
    orbit = OrbitRecord(
        points=full.points[1:],
        offsets=full.offsets[1:],
        symbols=full.symbols[1:],
        error_budget=full.error_budget,
        hit_c_at=hit,
        truncated=full.truncated,
        precision=precision,
    )
    if hit is not None:
        logger.debug(f"Singular orbit from c{'-' if side == LEFT else '+'} hits c after {hit + 1} steps")
    return orbit


def pullback(lmap: LorenzMap, word: str, y: float) -> float:
    """Point x on the cylinder of ``word`` with f^{|word|}(x) = y."""
    for symbol in reversed(word):
        y = lmap.inverse_branch(SIDE_OF_SYMBOL[symbol], y)
    return y


def push_forward(lmap: LorenzMap, x: float, word: str) -> float:
    """Apply the branches of ``word`` in order, ignoring which side x is on."""
    c = lmap.c
    for symbol in word:
        x = lmap.eval_offset(SIDE_OF_SYMBOL[symbol], abs(x - c))
    return x


def _pull_interval(lmap: LorenzMap, side: Side, lo: float, hi: float) -> Optional[Tuple[float, float]]:
    img_lo, img_hi = lmap.branch_image(side)
    lo, hi = max(lo, img_lo), min(hi, img_hi)
    if lo > hi:
        return None
    return lmap.inverse_branch(side, lo), lmap.inverse_branch(side, hi)


def periodic_point(lmap: LorenzMap, word: Itinerary | str, precision: Optional[int] = None):
    """Fixed point of the inverse-branch composition along ``word``.

    With ``precision`` the double fixed point is refined by the same
    contraction in mpmath and returned as an mpf, which is what a forward
    check of long words needs: pushing a double forward |word| steps loses
    the itinerary once the expansion outgrows 1/eps.

    Raises:
        NoPeriodicPointError: If the nested pullback bracket becomes empty.
    """
    symbols = str(word)
    Itinerary(symbols)
    lo, hi = 0.0, 1.0
    for _ in range(_MAX_PULLBACK_CYCLES):
        for symbol in reversed(symbols):
            pulled = _pull_interval(lmap, SIDE_OF_SYMBOL[symbol], lo, hi)
            if pulled is None:
                raise NoPeriodicPointError(symbols)
            lo, hi = pulled
        if hi - lo < _PERIODIC_TOL:
            break
    x = 0.5 * (lo + hi)
    for _ in range(100):
        nxt = pullback(lmap, symbols, x)
        if abs(nxt - x) <= 1e-16:
            x = nxt
            break
        x = nxt
    if precision is None:
        return x
    with mpmath.workprec(precision):
        x = mpmath.mpf(x)
        tol = mpmath.mpf(2) ** (8 - precision)
        for _ in range(8 * precision):
            nxt = pullback(lmap, symbols, x)
            done = abs(nxt - x) <= tol
            x = nxt
            if done:
                break
        return +x


def shadow_orbit(lmap: LorenzMap, x0: float, n: int, c_tol: float = C_TOL) -> OrbitRecord:
    """A genuine orbit of length n+1 following the itinerary of x0.

    The forward pass in doubles only fixes the itinerary.  The points are then
    rebuilt backwards from the final point through inverse branches, which
    contract, and stored as offsets from c.  The error budget is the largest
    bound, over all points, on the distance from the exact orbit through the
    final point; it is accumulated through the inverse-branch derivatives.
    """
    c = lmap.c
    x = float(x0)
    sides: List[Side] = []
    coords = [x]
    hit = None
    for j in range(n + 1):
        if abs(x - c) <= c_tol:
            hit = j
            break
        s = LEFT if x < c else RIGHT
        sides.append(s)
        if j == n:
            break
        x = float(lmap.eval_offset(s, abs(x - c)))
        coords.append(x)
    last = len(coords) - 1
    offsets = np.empty(len(coords))
    errs = np.empty(len(coords))
    offsets[last] = abs(coords[last] - c)
    errs[last] = math.ulp(max(abs(coords[last]), c))
    for j in range(last - 1, -1, -1):
        if j + 1 == last:
            y = coords[last]
        else:
            y = c - offsets[j + 1] if sides[j + 1] == LEFT else c + offsets[j + 1]
        base = lmap.eval_side(sides[j])
        delta = min(max(lmap.delta_from_singular(sides[j], y), 0.0), lmap.scale(sides[j]))
        offsets[j] = lmap.inverse_offset(sides[j], delta)
        incoming = errs[j + 1] + math.ulp(max(abs(y), c)) + math.ulp(max(abs(base), delta))
        contraction = 1.0 / lmap.deriv_offset(sides[j], offsets[j]) if offsets[j] > 0 else 0.0
        errs[j] = incoming * contraction + ROUNDING_ULPS * math.ulp(offsets[j])
    signs = np.array([-1.0 if s == LEFT else 1.0 for s in sides] + ([0.0] if hit is not None else []))
    points = c + signs * offsets
    return OrbitRecord(
        points=points,
        offsets=offsets,
        symbols="".join(SYMBOL[s] for s in sides),
        error_budget=float(errs.max()),
        hit_c_at=hit,
        truncated="c-hit" if hit is not None else None,
    )


def run_with_precision_escalation(operation: Callable[..., T], *args, **kwargs) -> T:
    """Call ``operation(..., precision=...)`` in doubles, then in growing mpmath precision.

    Each retry after a BudgetExhaustedError doubles the mantissa, starting at
    the configured ``mp_prec``.
    """
    settings = get_settings()
    for attempt in Retrying(
        retry=retry_if_exception_type(BudgetExhaustedError),
        stop=stop_after_attempt(settings.precision_retries + 1),
        reraise=True,
    ):
        with attempt:
            number = attempt.retry_state.attempt_number
            precision = None if number == 1 else settings.mp_prec * 2 ** (number - 2)
            if precision is not None:
                logger.error(f"Error budget exhausted, retrying with {precision}-bit mantissa on attempt {number}")
            return operation(*args, precision=precision, **kwargs)
    raise AssertionError("unreachable")
