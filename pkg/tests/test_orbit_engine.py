from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

from lorenz_measures.errors import BudgetExhaustedError
from lorenz_measures.lorenz_map import LEFT, RIGHT
from lorenz_measures.orbit_engine import (
    Itinerary,
    iterate,
    periodic_point,
    pullback,
    push_forward,
    run_with_precision_escalation,
    shadow_orbit,
    singular_orbit,
)


def test_itinerary_validation():
    assert str(Itinerary("LRR")) == "LRR"
    assert Itinerary.from_sides([LEFT, RIGHT]).symbols == "LR"
    assert Itinerary("RL").sides() == [RIGHT, LEFT]
    with pytest.raises(ValueError):
        Itinerary("")
    with pytest.raises(ValueError):
        Itinerary("LX")


def test_iterate_symbols_follow_points(k1):
    orbit = iterate(k1, 0.3, 6)
    assert len(orbit.symbols) == len(orbit.points)
    for x, s in zip(orbit.points, orbit.symbols):
        assert s == ("L" if x < 0.5 else "R")
    assert orbit.points[1] == pytest.approx(k1.eval(0.3))
    assert orbit.truncated is None


def test_iterate_two_steps_from_a_quarter(k1):
    orbit = iterate(k1, 0.25, 2)
    assert orbit.symbols == "LLL"
    assert orbit.points[1] == pytest.approx(1.0 - 0.5**0.6, abs=1e-12)
    assert orbit.points[2] == pytest.approx(0.4957000, abs=1e-6)


@pytest.mark.parametrize("lmap_name", ["k1", "k2"])
def test_forward_error_budget_is_honest(lmap_name, request):
    lmap = request.getfixturevalue(lmap_name)
    rng = np.random.default_rng(11)
    starts = [0.00115, *rng.uniform(0.0, 1.0, 100)]
    for x0 in starts:
        fast = iterate(lmap, float(x0), 40)
        wide = iterate(lmap, float(x0), 40, precision=300)
        n = min(len(fast.points), len(wide.points))
        gap = np.abs(fast.points[:n] - wide.points[:n])
        assert gap.max() <= fast.error_budget + math.ulp(1.0), x0
        k = min(len(fast.symbols), len(wide.symbols))
        assert fast.symbols[:k] == wide.symbols[:k]


def test_iterate_arguments(k1):
    with pytest.raises(ValueError):
        iterate(k1, 0.3, 0)
    with pytest.raises(ValueError):
        iterate(k1, 1.2, 5)
    with pytest.raises(ValueError):
        iterate(k1, 0.3, 5, side=LEFT)


def test_iterate_truncates_on_budget(k1):
    orbit = iterate(k1, 0.3, 2000)
    assert orbit.truncated == "budget"
    assert orbit.error_budget > 1e-13
    assert len(orbit.points) < 2000


def test_iterate_in_mpmath_keeps_more_steps(k1):
    doubles = iterate(k1, 0.3, 2000)
    wide = iterate(k1, 0.3, 2000, precision=256)
    assert wide.precision == 256
    assert len(wide.points) > len(doubles.points)
    n = min(len(doubles.symbols), 20)
    assert wide.symbols[:n] == doubles.symbols[:n]


def test_singular_orbits_of_k1(k1):
    left = singular_orbit(k1, LEFT, 10)
    right = singular_orbit(k1, RIGHT, 10)
    assert np.allclose(left.points, 1.0)
    assert np.allclose(right.points, 0.0)
    assert left.hit_c_at is None and right.hit_c_at is None
    assert left.singular_period is None


def test_singular_orbit_connection_of_k2(k2):
    orbit = singular_orbit(k2, RIGHT, 20)
    assert orbit.singular_period == 5
    assert orbit.points[0] == pytest.approx(1.0 - k2.d1)
    assert orbit.points[:4] == pytest.approx([0.14912, 0.19143, 0.25144, 0.34251], abs=1e-4)
    assert orbit.symbols == "LLLL"
    assert orbit.truncated == "c-hit"


def test_pullback_and_push_forward(k1):
    x = pullback(k1, "RLR", 0.4)
    assert push_forward(k1, x, "RLR") == pytest.approx(0.4, abs=1e-12)
    assert iterate(k1, x, 3).symbols[:3] == "RLR"


def test_periodic_points(k1, k2):
    assert periodic_point(k1, "L") == pytest.approx(0.0, abs=1e-12)
    assert periodic_point(k1, "R") == pytest.approx(1.0, abs=1e-12)
    p = periodic_point(k2, "RL")
    assert p == pytest.approx(0.55237, abs=1e-4)
    assert push_forward(k2, p, "RL") == pytest.approx(p, abs=1e-12)
    q = periodic_point(k1, Itinerary("RLL"))
    assert iterate(k1, q, 3).symbols[:3] == "RLL"


def test_long_periodic_words_are_reproduced_in_extended_precision(k1):
    rng = np.random.default_rng(5)
    words = ["RL" * 30, "RLL" * 20] + ["".join(rng.choice(["L", "R"], size=n)) for n in (17, 33, 48, 60)]
    for word in words:
        p = periodic_point(k1, word, precision=400)
        assert abs(float(p) - periodic_point(k1, word)) <= 1e-12
        orbit = iterate(k1, p, len(word), precision=400)
        assert orbit.truncated is None
        assert orbit.symbols[: len(word)] == word
        assert abs(orbit.points[-1] - float(p)) <= 1e-8


def test_shadow_orbit_is_a_true_orbit(k1):
    orbit = shadow_orbit(k1, 0.3, 300)
    assert len(orbit.points) == 301
    assert orbit.truncated is None
    for j in range(299):
        side = LEFT if orbit.symbols[j] == "L" else RIGHT
        assert k1.eval_offset(side, orbit.offsets[j]) == pytest.approx(orbit.points[j + 1], abs=1e-9)
    doubles = iterate(k1, 0.3, 300)
    n = len(doubles.symbols) - 1
    assert orbit.symbols[:n] == doubles.symbols[:n]
    assert np.all(orbit.log_distances() >= 0.0)
    assert orbit.log_derivatives(k1).min() >= np.log(1.2) - 1e-12


def test_shadow_budget_bounds_the_exact_pullback(k1):
    orbit = shadow_orbit(k1, 0.3, 100)
    assert 0.0 < orbit.error_budget < 1e-13
    with mpmath.workprec(200):
        y = mpmath.mpf(orbit.points[-1])
        for j in range(len(orbit.points) - 2, -1, -1):
            side = LEFT if orbit.symbols[j] == "L" else RIGHT
            y = k1.inverse_branch(side, y)
            exact = float(abs(y - k1.c))
            assert abs(exact - orbit.offsets[j]) <= orbit.error_budget, j


def test_precision_escalation_retries_with_wider_mantissa():
    seen = []

    def flaky(value, precision=None):
        seen.append(precision)
        if precision is None:
            raise BudgetExhaustedError(3, 1e-9)
        return value * 2

    assert run_with_precision_escalation(flaky, 21) == 42
    assert seen == [None, 256]


def test_precision_escalation_gives_up():
    calls = []

    def hopeless(precision=None):
        calls.append(precision)
        raise BudgetExhaustedError(1, 1.0)

    with pytest.raises(BudgetExhaustedError):
        run_with_precision_escalation(hopeless)
    assert calls == [None, 256, 512, 1024]
