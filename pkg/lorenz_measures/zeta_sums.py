"""Power sums and Riemann zeta values with Euler-Maclaurin tails.

The tower measures only ever need sums of k^(-s) and k^(-s) log k over
k >= 1.  They are evaluated by direct summation of the first terms and an
Euler-Maclaurin remainder, which also provides the error bound quoted in
reports.
"""

from __future__ import annotations

import math
from typing import TypedDict

import numpy as np

from .config import ZETA_DIRECT_TERMS


class SeriesValue(TypedDict):
    """Result of a series evaluation."""

    value: float
    error_bound: float
    terms: int


def _require_positive_int(n: int, name: str) -> int:
    """Validate that *n* is a positive integer.

    Raises:
        TypeError: If *n* is not an ``int``.
        ValueError: If *n* is not positive.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise TypeError(f"{name} must be an integer")
    if n <= 0:
        raise ValueError(f"{name} must be positive")
    return int(n)


def _require_finite(value: float, name: str) -> float:
    """Validate that *value* is a finite number.

    Raises:
        TypeError: If *value* is not numeric.
        ValueError: If *value* is infinite or NaN.
    """
    if not isinstance(value, (int, float, np.floating)):
        raise TypeError(f"{name} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite")
    return value


def _rising(s: float, count: int) -> float:
    out = 1.0
    for j in range(count):
        out *= s + j
    return out


def zeta(s: float, direct_terms: int = ZETA_DIRECT_TERMS) -> SeriesValue:
    """Riemann zeta function for real s > 1.

    Args:
        s: Exponent, must exceed 1.
        direct_terms: Number of leading terms summed directly.

    Returns:
        A ``SeriesValue`` whose error bound is the first omitted
        Euler-Maclaurin term.
    """
    s = _require_finite(s, "s")
    if s <= 1.0:
        raise ValueError("zeta(s) diverges for s <= 1")
    m = _require_positive_int(direct_terms, "direct_terms")
    k = np.arange(1, m, dtype=float)
    head = float(np.sum(k ** (-s)))
    tail = (
        m ** (1.0 - s) / (s - 1.0)
        + 0.5 * m ** (-s)
        + s * m ** (-s - 1.0) / 12.0
        - _rising(s, 3) * m ** (-s - 3.0) / 720.0
        + _rising(s, 5) * m ** (-s - 5.0) / 30240.0
    )
    error = _rising(s, 7) * m ** (-s - 7.0) / 1209600.0
    return SeriesValue(value=head + tail, error_bound=error + 1e-16 * (head + tail), terms=m)


def zeta_value(s: float) -> float:
    return zeta(s)["value"]


def zeta_log_moment(s: float, direct_terms: int = ZETA_DIRECT_TERMS) -> SeriesValue:
    """Sum of k^(-s) log k over k >= 1, i.e. -zeta'(s), for s > 1."""
    s = _require_finite(s, "s")
    if s <= 1.0:
        raise ValueError("the log moment diverges for s <= 1")
    m = _require_positive_int(direct_terms, "direct_terms")
    k = np.arange(1, m, dtype=float)
    head = float(np.sum(k ** (-s) * np.log(k)))
    lm = math.log(m)
    integral = m ** (1.0 - s) * (lm / (s - 1.0) + 1.0 / (s - 1.0) ** 2)
    f_m = m ** (-s) * lm
    d1 = m ** (-s - 1.0) * (1.0 - s * lm)
    d3 = m ** (-s - 3.0) * (3.0 * s * s + 6.0 * s + 2.0 - _rising(s, 3) * lm)
    tail = integral + 0.5 * f_m - d1 / 12.0 + d3 / 720.0
    error = _rising(s, 5) * m ** (-s - 5.0) * (lm + 1.0) / 30240.0
    return SeriesValue(value=head + tail, error_bound=error + 1e-16 * abs(head + tail), terms=m)


def power_sum(sigma: float, n: int, direct_terms: int = ZETA_DIRECT_TERMS) -> float:
    """Partial sum of k^(-sigma) for k = 1..n, any real sigma.

    Small n are summed directly.  Large n use an Euler-Maclaurin block from
    ``direct_terms`` to n, which keeps decade sweeps to n = 1e12 cheap.
    """
    sigma = _require_finite(sigma, "sigma")
    if n <= 0:
        return 0.0
    n = int(n)
    if n <= 100_000:
        k = np.arange(1, n + 1, dtype=float)
        return float(np.sum(k ** (-sigma)))
    m = direct_terms
    k = np.arange(1, m, dtype=float)
    head = float(np.sum(k ** (-sigma)))

    def f(x: float) -> float:
        return x ** (-sigma)

    def d1(x: float) -> float:
        return -sigma * x ** (-sigma - 1.0)

    def d3(x: float) -> float:
        return -_rising(sigma, 3) * x ** (-sigma - 3.0)

    if sigma == 1.0:
        integral = math.log(n / m)
    else:
        integral = (n ** (1.0 - sigma) - m ** (1.0 - sigma)) / (1.0 - sigma)
    block = integral + 0.5 * (f(m) + f(n)) + (d1(n) - d1(m)) / 12.0 - (d3(n) - d3(m)) / 720.0
    return head + block


def tail_bound_constant(ell: int, alpha_mass: float) -> float:
    """The bound 2(l+1) zeta(1+alpha) on tail entropy and tail return time."""
    return 2.0 * (ell + 1) * zeta_value(1.0 + alpha_mass)
