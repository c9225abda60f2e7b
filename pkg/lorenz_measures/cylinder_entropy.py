"""Brute-force f-level entropy of truncated P*-systems.

A truncated system keeps the atoms g^n(P_i) whose f-word
``leftmost^n + word_i`` is at most ``max_len`` symbols long.  Concatenating
i.i.d. atom words gives a stationary hidden-Markov process over {L, R}; its
entropy rate is bracketed by conditional block entropies and compared with the
Abramov value H(m) / E[len].
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .config import BLOCK_LEN
from .errors import EmptyTowerError
from .measures import MassDistribution

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TruncatedSystem:
    words: Tuple[str, ...]
    weights: np.ndarray
    levels: np.ndarray

    @property
    def mean_length(self) -> float:
        return float(np.sum(self.weights * np.array([len(w) for w in self.words])))

    @property
    def entropy(self) -> float:
        w = self.weights[self.weights > 0]
        return float(-np.sum(w * np.log(w)))


@dataclass(frozen=True)
class EntropyComparison:
    block_len: int
    lower: float
    upper: float
    abramov: float
    h_nu: float
    int_Rc: float
    int_R_eta: float
    relative_gap: float

    def as_dict(self) -> Dict[str, float]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def truncated_system(m: MassDistribution, max_len: int = BLOCK_LEN) -> TruncatedSystem:
    """Atoms of m whose f-word has at most max_len symbols, weights renormalized."""
    tower = m.tower
    lw = tower.leftmost.word
    atoms = m.atom_weights(tower.depth)
    words: List[str] = []
    weights: List[float] = []
    levels: List[int] = []
    for n in range(tower.depth + 1):
        for i, branch in enumerate(tower.base):
            if tower.t0 * n + branch.R <= max_len and atoms[n, i] > 0:
                words.append(lw * n + branch.word)
                weights.append(atoms[n, i])
                levels.append(n)
    if not words:
        raise EmptyTowerError(f"no atom has an f-word of length <= {max_len}")
    w = np.array(weights)
    return TruncatedSystem(words=tuple(words), weights=w / w.sum(), levels=np.array(levels))


class _RenewalChain:
    """States (atom, position) with deterministic emission and fresh draws at word ends."""

    def __init__(self, system: TruncatedSystem):
        lengths = np.array([len(w) for w in system.words])
        self.starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
        self.ends = self.starts + lengths - 1
        self.size = int(lengths.sum())
        self.symbols = np.array([s == "L" for w in system.words for s in w])
        self.fresh = np.zeros(self.size)
        self.fresh[self.starts] = system.weights
        self.stationary = np.repeat(system.weights, lengths) / system.mean_length
        self.is_end = np.zeros(self.size, dtype=bool)
        self.is_end[self.ends] = True
        self.remaining = np.concatenate([np.arange(n, 0, -1) for n in lengths])

    def step(self, alpha: np.ndarray) -> np.ndarray:
        out = np.zeros_like(alpha)
        out[1:] = np.where(self.is_end[:-1], 0.0, alpha[:-1])
        out += alpha[self.is_end].sum() * self.fresh
        return out

    def block_entropies(self, start: np.ndarray, k_max: int) -> np.ndarray:
        """H(Y_1..Y_k) for k = 0..k_max when the first symbol is emitted from ``start``."""
        H = np.zeros(k_max + 1)
        stack = [(start, 1)]
        while stack:
            alpha, k = stack.pop()
            for symbol in (True, False):
                filtered = np.where(self.symbols == symbol, alpha, 0.0)
                p = filtered.sum()
                if p <= 0.0:
                    continue
                H[k] -= p * math.log(p)
                if k < k_max:
                    stack.append((self.step(filtered), k + 1))
        return H


def block_entropy_bounds(system: TruncatedSystem, block_len: int = BLOCK_LEN) -> Tuple[float, float]:
    """H(Y_k | Y_<k, S_0) <= h <= H(Y_k | Y_<k) at k = block_len."""
    chain = _RenewalChain(system)
    H = chain.block_entropies(chain.stationary, block_len)
    upper = H[block_len] - H[block_len - 1]
    # Given S_0 the symbols up to the end of its word are determined, after
    # which the process restarts at a word boundary.
    G = chain.block_entropies(chain.fresh, block_len)
    def conditional(k: int) -> float:
        shortfall = np.maximum(k - chain.remaining, 0)
        return float(np.sum(chain.stationary * G[shortfall]))
    lower = conditional(block_len) - conditional(block_len - 1)
    return float(lower), float(upper)


def compare_with_abramov(
    m: MassDistribution, max_len: int = BLOCK_LEN, block_len: Optional[int] = None
) -> EntropyComparison:
    """Block-entropy bracket of the truncated system against its two-step Abramov chain."""
    block_len = max_len if block_len is None else block_len
    system = truncated_system(m, max_len)
    lower, upper = block_entropy_bounds(system, block_len)
    h_nu = system.entropy
    int_rc = float(np.sum(system.weights * (system.levels + 1)))
    int_r_eta = system.mean_length / int_rc
    abramov = h_nu / int_rc / int_r_eta
    mid = 0.5 * (lower + upper)
    gap = abs(abramov - mid) / abramov if abramov > 0 else abs(mid)
    logger.info(
        f"Truncated system with {len(system.words)} atoms: block bounds [{lower:.6f}, {upper:.6f}], "
        f"Abramov {abramov:.6f}"
    )
    return EntropyComparison(
        block_len=block_len,
        lower=lower,
        upper=upper,
        abramov=abramov,
        h_nu=h_nu,
        int_Rc=int_rc,
        int_R_eta=int_r_eta,
        relative_gap=gap,
    )
