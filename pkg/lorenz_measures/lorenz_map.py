"""Non-flat expanding Lorenz maps.

A map in the family L(c, alpha, beta) is

    f(x) = d0 - phi0(x)**alpha         for x < c
    f(x) = 1 - d1 + phi1(x)**beta      for x > c

where each phi_j = d_j**(1/exp_j) * psi_j(|x - c| / u_max) and psi_j is an
orientation-fixed diffeomorphism of [0, 1] with psi_j(0) = 0, psi_j(1) = 1.
All branch arithmetic is written in the centred coordinate u = |x - c| so that
points close to the singularity never lose digits, and the same formulas run
on floats, numpy arrays and mpmath numbers.
"""

from __future__ import annotations

import logging
import math
from typing import Annotated, Any, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import A_PAD, A_QUANTUM, GRID_MIN_OFFSET, GRID_POINTS, HOLDER_LEVELS, HOLDER_PAD
from .errors import (
    DomainError,
    IncompatibleFamilyError,
    InvalidMapError,
    NoPreimageError,
    SingularityError,
)

logger = logging.getLogger(__name__)

Side = Literal["left", "right"]
LEFT: Side = "left"
RIGHT: Side = "right"
SIDES: Tuple[Side, Side] = (LEFT, RIGHT)
SYMBOL = {LEFT: "L", RIGHT: "R"}
SIDE_OF_SYMBOL = {"L": LEFT, "R": RIGHT}

# Below this log-offset exp() underflows and shapes are linearised at 0
_LOG_UNDERFLOW = -700.0


class AffineShape(BaseModel):
    """psi(s) = s, the canonical family."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["affine"] = "affine"

    def value(self, s):
        return s

    def deriv(self, s):
        return s * 0 + 1

    def inverse(self, z):
        return z

    def log_value(self, log_s):
        return log_s

    def log_inverse(self, log_z):
        return log_z

    @property
    def deriv_at_zero(self) -> float:
        return 1.0


class QuadraticShape(BaseModel):
    """psi(s) = (s + kappa s^2) / (1 + kappa), increasing on [0, 1] for kappa > -1/2."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["quadratic"] = "quadratic"
    kappa: float

    @field_validator("kappa")
    @classmethod
    def _kappa_range(cls, v: float) -> float:
        if not math.isfinite(v) or v <= -0.5:
            raise ValueError("kappa must be finite and greater than -1/2")
        return v

    def value(self, s):
        k = self.kappa
        return (s + k * s * s) / (1 + k)

    def deriv(self, s):
        k = self.kappa
        return (1 + 2 * k * s) / (1 + k)

    def inverse(self, z):
        k = self.kappa
        return 2 * (1 + k) * z / (1 + (1 + 4 * k * (1 + k) * z) ** 0.5)

    def log_value(self, log_s):
        log_s = np.asarray(log_s, dtype=float)
        s = np.exp(np.maximum(log_s, _LOG_UNDERFLOW))
        exact = np.log(self.value(s))
        linear = log_s - math.log1p(self.kappa)
        out = np.where(log_s > _LOG_UNDERFLOW, exact, linear)
        return out if out.ndim else float(out)

    def log_inverse(self, log_z):
        log_z = np.asarray(log_z, dtype=float)
        z = np.exp(np.maximum(log_z, _LOG_UNDERFLOW))
        exact = np.log(self.inverse(z))
        linear = log_z + math.log1p(self.kappa)
        out = np.where(log_z > _LOG_UNDERFLOW, exact, linear)
        return out if out.ndim else float(out)

    @property
    def deriv_at_zero(self) -> float:
        return 1.0 / (1.0 + self.kappa)


BranchShape = Annotated[Union[AffineShape, QuadraticShape], Field(discriminator="kind")]


class NonFlatBounds(BaseModel):
    """Sandwich and Hoelder constants of a map.

    (1/a)|x-c|^(-expo_low) <= f'(x) <= a|x-c|^(-expo_high) on both sides, and
    |log phi_j'(x) - log phi_j'(y)| <= holder_C |x-y|^holder_t.
    """

    model_config = ConfigDict(frozen=True)

    a: float
    a_raw: float
    expo_low: float
    expo_high: float
    holder_C: float
    holder_t: float
    expansion: float


class MetricBreakdown(BaseModel):
    model_config = ConfigDict(frozen=True)

    singular_term: float
    shape_terms: Tuple[float, float]
    total: float


class LorenzMap(BaseModel):
    """An expanding Lorenz map with non-flat singularity at c.

    Instances are immutable and double as the on-disk map document.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    c: float
    alpha: float
    beta: float
    d0: float
    d1: float
    family: Literal["canonical-affine", "extended"] = "canonical-affine"
    phi0: BranchShape = Field(default_factory=AffineShape)
    phi1: BranchShape = Field(default_factory=AffineShape)

    @model_validator(mode="after")
    def _check_parameters(self) -> "LorenzMap":
        for name in ("c", "alpha", "beta", "d0", "d1"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0.0 < self.c < 1.0:
            raise ValueError("c must lie in (0, 1)")
        if not (0.0 < self.alpha < 1.0 and 0.0 < self.beta < 1.0):
            raise ValueError("alpha and beta must lie in (0, 1)")
        if not (0.0 < self.d0 <= 1.0 and 0.0 < self.d1 <= 1.0):
            raise ValueError("d0 and d1 must lie in (0, 1]")
        affine = isinstance(self.phi0, AffineShape) and isinstance(self.phi1, AffineShape)
        if self.family == "canonical-affine" and not affine:
            raise ValueError("canonical-affine maps take affine phi descriptors only")
        return self

    # per-side data

    def u_max(self, side: Side) -> float:
        return self.c if side == LEFT else 1.0 - self.c

    def exponent(self, side: Side) -> float:
        return self.alpha if side == LEFT else self.beta

    def scale(self, side: Side) -> float:
        return self.d0 if side == LEFT else self.d1

    def shape(self, side: Side):
        return self.phi0 if side == LEFT else self.phi1

    def eval_side(self, side: Side) -> float:
        """One-sided limit f(c-) or f(c+)."""
        return self.d0 if side == LEFT else 1.0 - self.d1

    def branch_image(self, side: Side) -> Tuple[float, float]:
        return (0.0, self.d0) if side == LEFT else (1.0 - self.d1, 1.0)

    @property
    def is_affine(self) -> bool:
        return isinstance(self.phi0, AffineShape) and isinstance(self.phi1, AffineShape)

    def side_of(self, x) -> Side:
        if x == self.c:
            raise SingularityError("x = c needs an explicit side tag")
        return LEFT if x < self.c else RIGHT

    # centred-coordinate branch arithmetic

    def image_offset(self, side: Side, u):
        """|f(x) - f(c_side)| for x at offset u from c."""
        s = u / self.u_max(side)
        return self.scale(side) * self.shape(side).value(s) ** self.exponent(side)

    def eval_offset(self, side: Side, u):
        delta = self.image_offset(side, u)
        return self.d0 - delta if side == LEFT else (1.0 - self.d1) + delta

    def deriv_offset(self, side: Side, u):
        um = self.u_max(side)
        e = self.exponent(side)
        shape = self.shape(side)
        s = u / um
        return self.scale(side) * e * shape.value(s) ** (e - 1) * shape.deriv(s) / um

    def inverse_offset(self, side: Side, delta):
        """Offset u of the preimage whose image sits delta away from f(c_side)."""
        z = (delta / self.scale(side)) ** (1.0 / self.exponent(side))
        return self.u_max(side) * self.shape(side).inverse(z)

    def delta_from_singular(self, side: Side, y):
        """Distance of y from the singular value of the branch, signed into its image."""
        return self.d0 - y if side == LEFT else y - (1.0 - self.d1)

    # log-offset forms, for offsets far below float range

    def log_image_offset(self, side: Side, log_u):
        log_s = np.asarray(log_u, dtype=float) - math.log(self.u_max(side))
        out = math.log(self.scale(side)) + self.exponent(side) * self.shape(side).log_value(log_s)
        return out if np.ndim(out) else float(out)

    def log_deriv_offset(self, side: Side, log_u):
        um = self.u_max(side)
        e = self.exponent(side)
        shape = self.shape(side)
        log_s = np.asarray(log_u, dtype=float) - math.log(um)
        s = np.exp(np.maximum(log_s, _LOG_UNDERFLOW))
        log_shape_deriv = np.log(shape.deriv(np.where(log_s > _LOG_UNDERFLOW, s, 0.0)))
        out = (
            math.log(self.scale(side) * e / um)
            + (e - 1.0) * shape.log_value(log_s)
            + log_shape_deriv
        )
        return out if np.ndim(out) else float(out)

    def log_inverse_offset(self, side: Side, log_delta):
        log_z = (np.asarray(log_delta, dtype=float) - math.log(self.scale(side))) / self.exponent(side)
        out = math.log(self.u_max(side)) + self.shape(side).log_inverse(log_z)
        return out if np.ndim(out) else float(out)

    # coordinate API

    def _check_domain(self, x) -> None:
        if x < 0.0 or x > 1.0:
            raise DomainError(f"x = {x} lies outside [0, 1]")

    def eval(self, x):
        """f(x) for x in [0, 1] away from c."""
        self._check_domain(x)
        side = self.side_of(x)
        return self.eval_offset(side, abs(x - self.c))

    def deriv(self, x):
        self._check_domain(x)
        side = self.side_of(x)
        return self.deriv_offset(side, abs(x - self.c))

    def inverse_branch(self, side: Side, y, tol: float = 1e-15):
        """Preimage of y under the requested branch.

        Raises:
            NoPreimageError: If y lies outside the branch image.
        """
        lo, hi = self.branch_image(side)
        if y < lo - tol or y > hi + tol:
            raise NoPreimageError(f"y = {y} outside the {side} branch image [{lo}, {hi}]")
        delta = self.delta_from_singular(side, y)
        if delta < 0:
            delta = delta * 0
        scale = self.scale(side)
        if delta > scale:
            delta = delta * 0 + scale
        u = self.inverse_offset(side, delta)
        return self.c - u if side == LEFT else self.c + u

    def inverse_coords(self, side: Side, y: np.ndarray) -> np.ndarray:
        """Vectorised inverse branch without image checks; y is clipped into the image."""
        delta = np.clip(self.delta_from_singular(side, np.asarray(y, dtype=float)), 0.0, self.scale(side))
        u = self.inverse_offset(side, delta)
        return self.c - u if side == LEFT else self.c + u

    # derived constants

    @property
    def expansion_lambda(self) -> float:
        """Closed-form derivative infimum; exact for the canonical family."""
        return min(self.alpha * self.d0 / self.c, self.beta * self.d1 / (1.0 - self.c))

    def with_singular_values(self, d0: Optional[float] = None, d1: Optional[float] = None) -> "LorenzMap":
        data = self.model_dump()
        if d0 is not None:
            data["d0"] = d0
        if d1 is not None:
            data["d1"] = d1
        return LorenzMap.model_validate(data)

    def check_invariants(self, grid_n: int = GRID_POINTS, tol: float = 1e-12) -> float:
        """Assert endpoint and expansion invariants and return the expansion floor.

        Raises:
            InvalidMapError: If f(0), f(1), f(c-), f(c+) are off or f' <= 1 somewhere.
        """
        checks = {
            "f(0) = 0": (self.eval_offset(LEFT, self.c), 0.0),
            "f(1) = 1": (self.eval_offset(RIGHT, 1.0 - self.c), 1.0),
            "f(c-) = d0": (self.eval_offset(LEFT, 0.0), self.d0),
            "f(c+) = 1 - d1": (self.eval_offset(RIGHT, 0.0), 1.0 - self.d1),
        }
        for name, (got, want) in checks.items():
            if abs(got - want) > tol:
                raise InvalidMapError(f"{name} fails: got {got!r}")
        floor = expansion_floor(self, grid_n)
        if floor <= 1.0:
            raise InvalidMapError(f"expansion floor {floor:.6f} is not above 1")
        return floor


def canonical(c: float, alpha: float, beta: float, d0: float = 1.0, d1: float = 1.0) -> LorenzMap:
    """A canonical-affine map."""
    return LorenzMap(c=c, alpha=alpha, beta=beta, d0=d0, d1=d1)


def load_map(text: str) -> LorenzMap:
    """Parse a JSON map document."""
    return LorenzMap.model_validate_json(text)


def offset_grid(u_max: float, grid_n: int = GRID_POINTS) -> np.ndarray:
    """Log-spaced offsets from GRID_MIN_OFFSET up to u_max."""
    return np.geomspace(GRID_MIN_OFFSET, u_max, grid_n)


def expansion_floor(lmap: LorenzMap, grid_n: int = GRID_POINTS) -> float:
    """Minimum of f' over both side grids plus a uniform grid."""
    floor = math.inf
    for side in SIDES:
        um = lmap.u_max(side)
        grid = np.concatenate([offset_grid(um, grid_n), np.linspace(um / grid_n, um, grid_n)])
        floor = min(floor, float(np.min(lmap.deriv_offset(side, grid))))
    return floor


def _holder_pair(lmap: LorenzMap) -> Tuple[float, float]:
    if lmap.is_affine:
        return 0.0, 1.0

    def increments(side: Side, level: int) -> Tuple[np.ndarray, float]:
        um = lmap.u_max(side)
        h = um / 2**level
        u = np.arange(1, 2**level + 1) * h
        g = np.log(lmap.deriv_offset(side, u)) + (1.0 - lmap.exponent(side)) * np.log(u)
        return np.abs(np.diff(g)), h

    best_t = 1.0
    best_c = 0.0
    for t in (1.0, 0.5, 0.25):
        constants = []
        stable = True
        for side in SIDES:
            d_coarse, h_coarse = increments(side, HOLDER_LEVELS)
            d_fine, h_fine = increments(side, HOLDER_LEVELS + 2)
            c_coarse = float(np.max(d_coarse)) / h_coarse**t
            c_fine = float(np.max(d_fine)) / h_fine**t
            if c_fine > 1.1 * c_coarse + 1e-12:
                stable = False
                break
            constants.append(max(c_coarse, c_fine))
        if stable:
            best_t, best_c = t, max(constants)
            break
    else:
        logger.warning("Hoelder estimate did not stabilise; falling back to t = 0.25")
        best_t = 0.25
        best_c = max(
            float(np.max(increments(side, HOLDER_LEVELS + 2)[0]))
            / increments(side, HOLDER_LEVELS + 2)[1] ** best_t
            for side in SIDES
        )
    return HOLDER_PAD * best_c, best_t


def nonflat_bounds(lmap: LorenzMap, grid_n: int = GRID_POINTS) -> NonFlatBounds:
    """Grid-certified sandwich constant a with its exponents and Hoelder data."""
    expo_low = min(1.0 - lmap.alpha, 1.0 - lmap.beta)
    expo_high = max(1.0 - lmap.alpha, 1.0 - lmap.beta)
    a_raw = 1.0
    floor = math.inf
    for side in SIDES:
        u = offset_grid(lmap.u_max(side), grid_n)
        df = lmap.deriv_offset(side, u)
        floor = min(floor, float(np.min(df)))
        a_raw = max(a_raw, float(np.max(df * u**expo_high)), float(np.max(1.0 / (df * u**expo_low))))
    a = math.ceil(a_raw * (1.0 + A_PAD) / A_QUANTUM) * A_QUANTUM
    holder_c, holder_t = _holder_pair(lmap)
    expansion = lmap.expansion_lambda if lmap.is_affine else min(floor, expansion_floor(lmap, grid_n))
    return NonFlatBounds(
        a=round(a, 10),
        a_raw=a_raw,
        expo_low=expo_low,
        expo_high=expo_high,
        holder_C=holder_c,
        holder_t=holder_t,
        expansion=expansion,
    )


def sandwich_violations(lmap: LorenzMap, bounds: NonFlatBounds, grid_n: int = GRID_POINTS) -> int:
    """Number of grid points where the derivative sandwich fails."""
    count = 0
    for side in SIDES:
        u = offset_grid(lmap.u_max(side), grid_n)
        df = lmap.deriv_offset(side, u)
        lower = u ** (-bounds.expo_low) / bounds.a
        upper = bounds.a * u ** (-bounds.expo_high)
        count += int(np.sum((df < lower * (1 - 1e-12)) | (df > upper * (1 + 1e-12))))
    return count


def _holder_seminorm(values: np.ndarray, grid: np.ndarray, t: float) -> float:
    dv = np.abs(values[:, None] - values[None, :])
    dx = np.abs(grid[:, None] - grid[None, :]) ** t
    mask = dx > 0
    if not np.any(mask):
        return 0.0
    return float(np.max(dv[mask] / dx[mask]))


def metric_components(f: LorenzMap, g: LorenzMap, grid_n: int = GRID_POINTS) -> MetricBreakdown:
    """Singular-value term and per-branch C^{1+} shape distances."""
    if (f.c, f.alpha, f.beta) != (g.c, g.alpha, g.beta):
        raise IncompatibleFamilyError(
            f"maps differ in (c, alpha, beta): {(f.c, f.alpha, f.beta)} vs {(g.c, g.alpha, g.beta)}"
        )
    singular = abs(f.d0 - g.d0) + abs((1.0 - f.d1) - (1.0 - g.d1))
    s = np.linspace(0.0, 1.0, grid_n)
    t = min(_holder_pair(f)[1], _holder_pair(g)[1])
    terms = []
    for side in SIDES:
        sf, sg = f.shape(side), g.shape(side)
        if sf == sg:
            terms.append(0.0)
            continue
        dv = sf.value(s) - sg.value(s)
        dd = sf.deriv(s) - sg.deriv(s)
        terms.append(float(np.max(np.abs(dv)) + np.max(np.abs(dd)) + _holder_seminorm(dd, s, t)))
    return MetricBreakdown(singular_term=singular, shape_terms=(terms[0], terms[1]), total=singular + sum(terms))


def metric_dist(f: LorenzMap, g: LorenzMap, grid_n: int = GRID_POINTS) -> float:
    """Distance between two maps of the same family L(c, alpha, beta)."""
    return metric_components(f, g, grid_n).total


def describe(lmap: LorenzMap) -> dict[str, Any]:
    return {
        "map": lmap.model_dump(),
        "expansion_floor": expansion_floor(lmap),
        "singular_values": [lmap.eval_side(LEFT), lmap.eval_side(RIGHT)],
    }
