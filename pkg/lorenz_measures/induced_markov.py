"""Induced full Markov structure over a nice interval J = (c, p).

The first-return branches of J are found by refining monotone pieces of
f^n forward while tracking where their endpoints sit symbolically, so the
only coordinates ever produced are pullbacks of c and p along a word.  The
cylinder tower P_n(c) nests inside the leftmost branch (c, q) and is stored
in log-offset form because its widths leave double range after a handful of
levels.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import (
    C_TOL,
    LINEAR_SWITCH,
    MAX_WORD_LEN,
    MIN_WIDTH_REL,
    N_DEPTH,
    R_MAX,
    RESOLUTION_FLOOR,
    get_settings,
)
from .errors import (
    EmptyTowerError,
    InapplicableError,
    MarkovViolationError,
    NoPeriodicPointError,
    SearchExhaustedError,
)
from .lorenz_map import LEFT, RIGHT, SIDE_OF_SYMBOL, SYMBOL, LorenzMap, Side
from .orbit_engine import Itinerary, periodic_point, pullback, push_forward, singular_orbit

logger = logging.getLogger(__name__)

_LOG_SWITCH = math.log(LINEAR_SWITCH)


@dataclass(frozen=True)
class HypothesisGate:
    """Outcome of the hypothesis check for the induced construction."""

    t0: int
    r_cap: float
    cplus_word: str
    cplus_points: np.ndarray
    cminus_points: np.ndarray
    cminus_least_above_c: Optional[float]


def check_theorem_a_hypotheses(lmap: LorenzMap, r_cap: float, horizon: int = 200, c_tol: float = C_TOL) -> HypothesisGate:
    """Check that f^t(c+) = c for some t and that the c- orbit avoids (c, c + r_cap).

    Raises:
        InapplicableError: Naming "c+ connection" or "c- avoidance".
    """
    if not 0.0 < r_cap < 1.0 - lmap.c:
        raise ValueError(f"r_cap = {r_cap} must lie in (0, 1 - c)")
    plus = singular_orbit(lmap, RIGHT, horizon, c_tol=c_tol)
    if plus.hit_c_at is None:
        raise InapplicableError("c+ connection", f"f^n(c+) does not reach c within {horizon} steps")
    t0 = plus.singular_period
    minus = singular_orbit(lmap, LEFT, horizon, c_tol=c_tol)
    end = minus.hit_c_at if minus.hit_c_at is not None else len(minus.points)
    minus_points = minus.points[:end]
    above = minus_points[minus_points > lmap.c]
    least = float(above.min()) if above.size else None
    if least is not None and least < lmap.c + r_cap:
        raise InapplicableError(
            "c- avoidance", f"the c- orbit visits {least:.6f} inside (c, c + {r_cap})"
        )
    cplus_word = "R" + plus.symbols[: plus.hit_c_at]
    # stable recomputation of the connection orbit through inverse branches
    cplus_points = np.array([pullback(lmap, cplus_word[j:], lmap.c) for j in range(1, t0)] + [lmap.c])
    logger.info(f"Hypotheses hold: t0 = {t0}, least c- orbit point above c = {least}")
    return HypothesisGate(
        t0=t0,
        r_cap=r_cap,
        cplus_word=cplus_word,
        cplus_points=cplus_points,
        cminus_points=minus_points,
        cminus_least_above_c=least,
    )


@dataclass(frozen=True)
class NiceInterval:
    """J = (c, p) with p periodic of itinerary ``word``."""

    c: float
    p: float
    word: Itinerary
    r_cap: float
    t0: int
    connection_word: str
    orbit: np.ndarray

    @property
    def width(self) -> float:
        return self.p - self.c

    def as_dict(self) -> Dict[str, object]:
        return {"p": self.p, "word": str(self.word), "r_cap": self.r_cap, "t0": self.t0}


def _nice_violations(lmap: LorenzMap, p: float, word: str, gate: HypothesisGate) -> List[str]:
    c = lmap.c
    out = []
    if not c < p < c + gate.r_cap:
        out.append("p in (c, c + r_cap)")
    orbit = [p]
    x = p
    for symbol in word:
        x = push_forward(lmap, x, symbol)
        orbit.append(x)
    if abs(orbit[-1] - p) > 1e-10:
        out.append("periodicity")
    points = np.array(orbit[:-1])
    above = points[points > c]
    if above.size and float(above.min()) < p - 1e-12:
        out.append("p minimal in its orbit above c")
    plus_above = gate.cplus_points[:-1][gate.cplus_points[:-1] > c]
    if plus_above.size and not p < float(plus_above.min()):
        out.append("p below the c+ orbit")
    minus = gate.cminus_points
    if np.any((minus > c) & (minus < p)):
        out.append("c- orbit avoids J")
    return out


def find_nice_interval(
    lmap: LorenzMap,
    r_cap: float,
    max_word_len: int = MAX_WORD_LEN,
    gate: Optional[HypothesisGate] = None,
) -> NiceInterval:
    """Shortest-word periodic point p in (c, c + r_cap) whose interval (c, p) is nice.

    Raises:
        InapplicableError: If the hypothesis gate fails.
        SearchExhaustedError: If no admissible p has a word of length <= max_word_len.
    """
    gate = gate or check_theorem_a_hypotheses(lmap, r_cap)
    c = lmap.c
    # pieces: [lo, hi, ylo, yhi, ylo_at_c, yhi_at_c]
    pieces = [("", c, c + r_cap, c, c + r_cap, True, False)]
    for length in range(1, max_word_len + 1):
        advanced = []
        for word, lo, hi, ylo, yhi, lo_c, hi_c in pieces:
            side: Side = LEFT if (hi_c or yhi <= c) else RIGHT
            nlo = lmap.eval_side(side) if lo_c else lmap.eval_offset(side, abs(ylo - c))
            nhi = lmap.eval_side(side) if hi_c else lmap.eval_offset(side, abs(yhi - c))
            nword = word + SYMBOL[side]
            if nlo < c < nhi:
                split = pullback(lmap, nword, c)
                advanced.append((nword, lo, split, nlo, c, False, True))
                advanced.append((nword, split, hi, c, nhi, True, False))
            else:
                advanced.append((nword, lo, hi, nlo, nhi, False, False))
        pieces = [piece for piece in advanced if piece[2] - piece[1] > 1e-14]
        candidates = []
        for word, lo, hi, ylo, yhi, _, _ in pieces:
            if ylo <= lo and yhi >= hi:
                try:
                    p = periodic_point(lmap, word)
                except NoPeriodicPointError:
                    continue
                if lo - 1e-12 <= p <= hi + 1e-12:
                    violations = _nice_violations(lmap, p, word, gate)
                    if violations:
                        logger.debug(f"Candidate {word} at p={p:.12f} rejected: {violations}")
                    else:
                        candidates.append((p - c, word, p))
        if candidates:
            _, word, p = min(candidates)
            orbit = np.array([pullback(lmap, word[j:], p) if j else p for j in range(len(word))])
            logger.info(f"Nice interval found: p = {p:.12f}, word {word}")
            return NiceInterval(
                c=c,
                p=p,
                word=Itinerary(word),
                r_cap=r_cap,
                t0=gate.t0,
                connection_word=gate.cplus_word,
                orbit=orbit,
            )
    raise SearchExhaustedError(f"no admissible periodic point with word length <= {max_word_len}")


@dataclass(frozen=True)
class ReturnBranch:
    word: str
    lo: float
    hi: float
    markov_residual: float

    @property
    def R(self) -> int:
        return len(self.word)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def as_dict(self) -> Dict[str, object]:
        return {"word": self.word, "R": self.R, "interval": [self.lo, self.hi], "markov_residual": self.markov_residual}


@dataclass(frozen=True)
class ReturnBranchSet:
    J: NiceInterval
    branches: Tuple[ReturnBranch, ...]
    r_max: int
    pruned_length: float
    piece_cap_hit: bool

    def total_length(self) -> float:
        return float(sum(b.length for b in self.branches))

    def leftmost(self) -> Optional[ReturnBranch]:
        if self.branches and self.branches[0].lo == self.J.c:
            return self.branches[0]
        return None

    def __len__(self) -> int:
        return len(self.branches)


class _OrbitTable:
    """Forward orbits of c-, c+ and p, indexed by step, extended lazily."""

    def __init__(self, lmap: LorenzMap, J: NiceInterval):
        self.lmap = lmap
        c = lmap.c
        word = J.connection_word
        plus = [c] + [pullback(lmap, word[j:], c) for j in range(1, len(word))] + [c]
        self.tables: Dict[str, List[float]] = {"c+": plus, "c-": [c, lmap.eval_side(LEFT)]}
        self.p_orbit = list(J.orbit)

    def value(self, seed: str, k: int) -> float:
        if seed == "p":
            return float(self.p_orbit[k % len(self.p_orbit)])
        table = self.tables[seed]
        c = self.lmap.c
        while len(table) <= k:
            x = table[-1]
            if abs(x - c) <= C_TOL:
                # past a c-hit the orbit is undefined; keep it pinned at c
                table.append(c)
                continue
            side = LEFT if x < c else RIGHT
            table.append(float(self.lmap.eval_offset(side, abs(x - c))))
        return table[k]


def _markov_residual(lmap: LorenzMap, branch_word: str, lo: float, hi: float, J: NiceInterval) -> float:
    c = lmap.c
    img_lo = push_forward(lmap, lo, branch_word)
    img_hi = push_forward(lmap, hi, branch_word)
    return max(abs(img_lo - c), abs(img_hi - J.p)) / J.width


def enumerate_return_branches(
    lmap: LorenzMap,
    J: NiceInterval,
    r_max: int = R_MAX,
    min_width_rel: float = MIN_WIDTH_REL,
    piece_cap: Optional[int] = None,
) -> ReturnBranchSet:
    """First-return branches of J with return time <= r_max.

    Raises:
        MarkovViolationError: If some return image meets J without covering it.
    """
    c, p = lmap.c, J.p
    piece_cap = piece_cap or get_settings().piece_cap
    tol = 1e-9 * J.width
    min_width = min_width_rel * J.width
    table = _OrbitTable(lmap, J)
    # piece: (word, ilo, ihi, lo_label, hi_label)
    pieces = [("", c, p, ("c+", 0), ("p", 0))]
    branches: List[ReturnBranch] = []
    pruned = 0.0
    capped = False
    for depth in range(1, r_max + 1):
        nxt = []
        for word, ilo, ihi, lo_label, hi_label in pieces:
            ylo, yhi = table.value(*lo_label), table.value(*hi_label)
            side: Side = LEFT if yhi <= c + tol else RIGHT
            lo_label = _advance(table, lo_label, side)
            hi_label = _advance(table, hi_label, side)
            nword = word + SYMBOL[side]
            ylo, yhi = table.value(*lo_label), table.value(*hi_label)
            if yhi <= c + tol or ylo >= p - tol:
                nxt.append((nword, ilo, ihi, lo_label, hi_label))
                continue
            if ylo > c + tol or yhi < p - tol:
                raise MarkovViolationError(nword, (ylo, yhi))
            blo = pullback(lmap, nword, c) if ylo < c - tol else ilo
            bhi = pullback(lmap, nword, p) if yhi > p + tol else ihi
            branches.append(ReturnBranch(nword, blo, bhi, _markov_residual(lmap, nword, blo, bhi, J)))
            if ylo < c - tol:
                nxt.append((nword, ilo, blo, lo_label, ("c-", 0)))
            if yhi > p + tol:
                nxt.append((nword, bhi, ihi, ("p", 0), hi_label))
        alive = []
        for piece in nxt:
            if piece[2] - piece[1] < min_width:
                pruned += piece[2] - piece[1]
            else:
                alive.append(piece)
        if len(alive) > piece_cap:
            capped = True
            alive.sort(key=lambda piece: piece[2] - piece[1], reverse=True)
            pruned += sum(piece[2] - piece[1] for piece in alive[piece_cap:])
            alive = alive[:piece_cap]
            logger.warning(f"Piece cap {piece_cap} reached at return time {depth}")
        pieces = alive
        if not pieces:
            break
    branches.sort(key=lambda b: b.lo)
    logger.info(f"Enumerated {len(branches)} return branches up to R = {r_max}, covering {sum(b.length for b in branches) / J.width:.6f} of J")
    return ReturnBranchSet(J=J, branches=tuple(branches), r_max=r_max, pruned_length=pruned, piece_cap_hit=capped)


def _advance(table: _OrbitTable, label: Tuple[str, int], side: Side) -> Tuple[str, int]:
    seed, k = label
    if seed != "p" and k > 0 and abs(table.value(seed, k) - table.lmap.c) <= C_TOL:
        return ("c-" if side == LEFT else "c+", 1)
    if seed != "p" and k == 0:
        return ("c-" if side == LEFT else "c+", 1)
    return (seed, k + 1)


@dataclass(frozen=True)
class CylinderTower:
    """Nested cylinders P_n(c) and the atoms g^n(P) of the partition P*.

    Log offsets are log(x - c) for points of J.  Row n of the atom arrays
    holds the level-n atoms, one column per base branch.
    """

    lmap: LorenzMap
    J: NiceInterval
    t0: int
    q: float
    leftmost: ReturnBranch
    base: Tuple[ReturnBranch, ...]
    level_log_offsets: np.ndarray
    atom_log_lo: np.ndarray
    atom_log_hi: np.ndarray
    rep_log_offsets: np.ndarray
    base_lyapunov: np.ndarray
    base_log_distance: np.ndarray
    log_D: float
    connection_log_distance: float
    resolution_depth: int
    depth_capped: bool

    @property
    def depth(self) -> int:
        return self.atom_log_lo.shape[0] - 1

    @property
    def base_R(self) -> np.ndarray:
        return np.array([b.R for b in self.base], dtype=int)

    @property
    def atom_log_widths(self) -> np.ndarray:
        return self.atom_log_hi + np.log1p(-np.exp(self.atom_log_lo - self.atom_log_hi))

    @property
    def leftmost_word(self) -> str:
        return self.leftmost.word

    def Rc(self, level: int) -> int:
        return level + 1

    def R_tilde(self) -> np.ndarray:
        """f-time t0 n + R(P) of every atom, shape (depth + 1, K)."""
        n = np.arange(self.depth + 1)[:, None]
        return self.t0 * n + self.base_R[None, :]

    def level_of(self, log_offset) -> np.ndarray:
        """Tower level n with log|P_{n+1}(c)| < log_offset <= log|P_n(c)|."""
        levels = np.searchsorted(-self.level_log_offsets[1:], -np.asarray(log_offset, dtype=float), side="right")
        return levels

    def pull(self, log_h) -> np.ndarray:
        """g = (F|P0)^{-1} in log-offset form."""
        return _pull_leftmost(self.lmap, self.leftmost.word, self.log_D, log_h)

    def push(self, log_h: float) -> float:
        """F on P0 in log-offset form."""
        lmap = self.lmap
        log_delta = lmap.log_image_offset(RIGHT, log_h)
        if log_delta < _LOG_SWITCH:
            return float(log_delta + self.log_D)
        y = (1.0 - lmap.d1) + math.exp(log_delta)
        y = push_forward(lmap, y, self.leftmost.word[1:])
        return math.log(y - lmap.c) if y > lmap.c else -math.inf

    def segment_sums(self, log_h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Sums of log f' and |log|x - c|| over the t0 steps of one F-step from P0."""
        lmap = self.lmap
        log_h = np.atleast_1d(np.asarray(log_h, dtype=float))
        lyap = lmap.log_deriv_offset(RIGHT, log_h) + self.log_D
        dist = -log_h + self.connection_log_distance
        far = np.flatnonzero(lmap.log_image_offset(RIGHT, log_h) >= _LOG_SWITCH)
        for idx in far:
            x = lmap.c + math.exp(log_h.flat[idx])
            total_lyap, total_dist = 0.0, 0.0
            for symbol in self.leftmost.word:
                side = SIDE_OF_SYMBOL[symbol]
                u = abs(x - lmap.c)
                total_lyap += math.log(lmap.deriv_offset(side, u))
                total_dist += abs(math.log(u))
                x = lmap.eval_offset(side, u)
            lyap.flat[idx] = total_lyap
            dist.flat[idx] = total_dist
        return lyap, dist

    def deep_rep_log_offsets(self, max_level: int) -> np.ndarray:
        """Representative log offsets extended past the stored depth."""
        rows = [row for row in self.rep_log_offsets]
        while len(rows) <= max_level:
            rows.append(self.pull(rows[-1]))
        return np.array(rows[: max_level + 1])

    def restrict(self, depth: int, branches: Optional[Sequence[int]] = None) -> "CylinderTower":
        """Sub-tower with fewer levels and a subset of the base branches."""
        if depth < 0 or depth > self.depth:
            raise ValueError(f"depth must lie in [0, {self.depth}]")
        cols = list(range(len(self.base))) if branches is None else list(branches)
        if not cols:
            raise EmptyTowerError("restriction keeps no base branch")
        return replace(
            self,
            base=tuple(self.base[i] for i in cols),
            atom_log_lo=self.atom_log_lo[: depth + 1, cols],
            atom_log_hi=self.atom_log_hi[: depth + 1, cols],
            rep_log_offsets=self.rep_log_offsets[: depth + 1, cols],
            base_lyapunov=self.base_lyapunov[cols],
            base_log_distance=self.base_log_distance[cols],
            level_log_offsets=self.level_log_offsets[: depth + 2],
            resolution_depth=min(self.resolution_depth, depth),
        )

    def log_distance_rate(self) -> float:
        """Largest K with |log|x - c|| >= K (n + 1) on every level-n atom."""
        worst = -np.max(self.atom_log_hi, axis=1)
        return float(np.min(worst / (np.arange(self.depth + 1) + 1)))

    def summary(self) -> Dict[str, object]:
        return {
            "t0": self.t0,
            "q": self.q,
            "depth": self.depth,
            "resolution_depth": self.resolution_depth,
            "depth_capped": self.depth_capped,
            "log_widths": self.level_log_offsets.tolist(),
            "Rc": [self.Rc(n) for n in range(len(self.level_log_offsets))],
            "base_branches": len(self.base),
            "log_distance_rate": self.log_distance_rate(),
        }


def _pull_leftmost(lmap: LorenzMap, word: str, log_D: float, log_h) -> np.ndarray:
    log_h = np.asarray(log_h, dtype=float)
    out = np.empty_like(log_h)
    far = log_h > _LOG_SWITCH
    if far.any():
        y = lmap.c + np.exp(log_h[far])
        for symbol in reversed(word[1:]):
            y = lmap.inverse_coords(SIDE_OF_SYMBOL[symbol], y)
        delta = np.maximum(lmap.delta_from_singular(RIGHT, y), 0.0)
        out[far] = np.log(lmap.inverse_offset(RIGHT, delta))
    near = ~far
    if near.any():
        out[near] = lmap.log_inverse_offset(RIGHT, log_h[near] - log_D)
    return out


def _segment_from(lmap: LorenzMap, word: str, target: float) -> Tuple[float, float]:
    """log f' and |log|x - c|| sums along the cylinder of word, pulled back from target."""
    lyap, dist = 0.0, 0.0
    for k, symbol in enumerate(word):
        z = pullback(lmap, word[k:], target)
        u = abs(z - lmap.c)
        lyap += math.log(lmap.deriv_offset(SIDE_OF_SYMBOL[symbol], u))
        dist += abs(math.log(u))
    return lyap, dist


def cylinder_tower(
    lmap: LorenzMap,
    J: NiceInterval,
    branches: ReturnBranchSet,
    n_depth: int = N_DEPTH,
) -> CylinderTower:
    """Build P_n(c) for n <= n_depth + 1 and the level-n atoms g^n(P).

    Raises:
        ValueError: If the branch set lacks the leftmost branch (c, q).
        InapplicableError: If the leftmost return time differs from t0.
        EmptyTowerError: If no branch other than (c, q) was enumerated.
    """
    c = lmap.c
    leftmost = branches.leftmost()
    if leftmost is None:
        raise ValueError("branch set does not contain the leftmost branch (c, q)")
    if leftmost.R != J.t0:
        raise InapplicableError("leftmost return", f"R((c, q)) = {leftmost.R} differs from t0 = {J.t0}")
    base = tuple(b for b in branches.branches if b is not leftmost)
    if not base:
        raise EmptyTowerError("no branch besides (c, q)")
    word = leftmost.word
    log_D = 0.0
    connection_dist = 0.0
    for j in range(1, J.t0):
        z = pullback(lmap, word[j:], c)
        u = abs(z - c)
        log_D += math.log(lmap.deriv_offset(SIDE_OF_SYMBOL[word[j]], u))
        connection_dist += abs(math.log(u))

    levels = [math.log(J.p - c)]
    for _ in range(n_depth + 1):
        levels.append(float(_pull_leftmost(lmap, word, log_D, levels[-1])))
    levels_arr = np.array(levels)

    mid = 0.5 * (c + J.p)
    lo = np.array([math.log(b.lo - c) for b in base])
    hi = np.array([math.log(b.hi - c) for b in base])
    rep = np.array([math.log(pullback(lmap, b.word, mid) - c) for b in base])
    lo_rows, hi_rows, rep_rows = [lo], [hi], [rep]
    for _ in range(n_depth):
        lo_rows.append(_pull_leftmost(lmap, word, log_D, lo_rows[-1]))
        hi_rows.append(_pull_leftmost(lmap, word, log_D, hi_rows[-1]))
        rep_rows.append(_pull_leftmost(lmap, word, log_D, rep_rows[-1]))
    sums = [_segment_from(lmap, b.word, mid) for b in base]

    floor = math.log(RESOLUTION_FLOOR)
    resolved = int(np.sum(levels_arr[: n_depth + 1] >= floor)) - 1
    capped = resolved < n_depth
    if capped:
        logger.warning(f"Tower widths leave double range after level {resolved}; deeper levels kept in log form")
    tower = CylinderTower(
        lmap=lmap,
        J=J,
        t0=J.t0,
        q=leftmost.hi,
        leftmost=leftmost,
        base=base,
        level_log_offsets=levels_arr,
        atom_log_lo=np.array(lo_rows),
        atom_log_hi=np.array(hi_rows),
        rep_log_offsets=np.array(rep_rows),
        base_lyapunov=np.array([s[0] for s in sums]),
        base_log_distance=np.array([s[1] for s in sums]),
        log_D=log_D,
        connection_log_distance=connection_dist,
        resolution_depth=resolved,
        depth_capped=capped,
    )
    logger.info(f"Cylinder tower: t0 = {J.t0}, q = {leftmost.hi:.12f}, {len(base)} base branches, depth {n_depth}")
    return tower


def check_rc_exactness(tower: CylinderTower, samples: int = 1000, seed: int = 0) -> int:
    """Count sampled atoms where one F-step does not lower R_c by exactly one."""
    rng = np.random.default_rng(seed)
    if tower.depth < 1:
        return 0
    levels = rng.integers(1, tower.depth + 1, size=samples)
    cols = rng.integers(0, len(tower.base), size=samples)
    bad = 0
    for n, i in zip(levels, cols):
        ell = tower.rep_log_offsets[n, i]
        if int(tower.level_of(ell)) != n:
            bad += 1
            continue
        after = tower.push(ell)
        if int(tower.level_of(after)) != n - 1 or tower.Rc(n) != tower.Rc(n - 1) + 1:
            bad += 1
    return bad


def tower_markov_residual(tower: CylinderTower, levels: int = 5) -> float:
    """Relative endpoint error of F^n on level-n atoms against the base branches."""
    worst = 0.0
    for n in range(1, min(levels, tower.depth) + 1):
        for row, base_row in ((tower.atom_log_lo, tower.atom_log_lo[0]), (tower.atom_log_hi, tower.atom_log_hi[0])):
            for i in range(len(tower.base)):
                ell = row[n, i]
                for _ in range(n):
                    ell = tower.push(ell)
                worst = max(worst, abs(math.exp(ell) - math.exp(base_row[i])) / tower.J.width)
    return worst
