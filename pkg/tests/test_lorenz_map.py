from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from lorenz_measures.errors import (
    DomainError,
    IncompatibleFamilyError,
    InvalidMapError,
    NoPreimageError,
    SingularityError,
)
from lorenz_measures.lorenz_map import (
    LEFT,
    RIGHT,
    LorenzMap,
    canonical,
    describe,
    expansion_floor,
    load_map,
    metric_components,
    metric_dist,
    nonflat_bounds,
    sandwich_violations,
)


def _quadratic_map(kappa: float = 0.1) -> LorenzMap:
    return LorenzMap(
        c=0.5,
        alpha=0.6,
        beta=0.6,
        d0=1.0,
        d1=1.0,
        family="extended",
        phi0={"kind": "quadratic", "kappa": kappa},
    )


def test_endpoints_and_singular_values(k1):
    assert k1.eval(0.0) == pytest.approx(0.0, abs=1e-15)
    assert k1.eval(1.0) == pytest.approx(1.0, abs=1e-15)
    assert k1.eval_side(LEFT) == 1.0
    assert k1.eval_side(RIGHT) == 0.0


def test_reference_values(k1):
    assert k1.eval(0.25) == pytest.approx(0.340246, abs=1e-6)
    assert k1.eval(0.75) == pytest.approx(0.659754, abs=1e-6)
    assert k1.deriv(0.25) == pytest.approx(1.583410, abs=1e-6)


def test_eval_rejects_singularity_and_out_of_range(k1):
    with pytest.raises(SingularityError):
        k1.eval(0.5)
    with pytest.raises(DomainError):
        k1.eval(1.5)
    with pytest.raises(DomainError):
        k1.deriv(-0.1)


def test_derivative_blows_up_at_the_singularity(k1):
    assert k1.deriv(0.5 - 1e-8) > 1e3
    for side, sign in ((LEFT, -1.0), (RIGHT, 1.0)):
        values = [k1.deriv(0.5 + sign * 10.0**-k) for k in range(4, 13)]
        assert all(b > a for a, b in zip(values, values[1:]))


def test_derivative_floor_on_grid(k1):
    grid = np.linspace(0.0, 1.0, 2001)
    grid = grid[grid != 0.5]
    assert min(k1.deriv(x) for x in grid) >= 1.2 - 1e-12
    assert expansion_floor(k1) == pytest.approx(k1.expansion_lambda, abs=1e-9)
    assert k1.expansion_lambda == pytest.approx(1.2)


def test_inverse_branches(k1):
    assert k1.inverse_branch(LEFT, 0.340246) == pytest.approx(0.25, abs=1e-6)
    assert k1.inverse_branch(RIGHT, 0.5) == pytest.approx(0.657490, abs=1e-6)
    assert k1.inverse_branch(LEFT, 0.0) == pytest.approx(0.0, abs=1e-15)
    x = 0.123
    assert k1.inverse_branch(LEFT, k1.eval(x)) == pytest.approx(x, abs=1e-13)


@pytest.mark.parametrize("side", [LEFT, RIGHT])
def test_inverse_round_trips(k1, side):
    for lmap in (k1, _quadratic_map(0.3)):
        lo, hi = lmap.branch_image(side)
        # the grid stays off the singular value, where the preimage would be c itself
        for y in np.linspace(lo, hi, 10_002)[1:-1]:
            x = lmap.inverse_branch(side, y)
            assert lmap.side_of(x) == side
            assert abs(lmap.eval(x) - y) <= 1e-12


def test_inverse_branch_outside_image():
    lmap = canonical(0.5, 0.6, 0.6, d1=0.9)
    with pytest.raises(NoPreimageError):
        lmap.inverse_branch(RIGHT, 0.05)
    with pytest.raises(NoPreimageError):
        lmap.inverse_branch(LEFT, 1.5)


def test_invalid_parameters_are_rejected():
    with pytest.raises(ValidationError):
        canonical(1.2, 0.6, 0.6)
    with pytest.raises(ValidationError):
        canonical(0.5, 1.0, 0.6)
    with pytest.raises(ValidationError):
        canonical(0.5, 0.6, 0.6, d0=0.0)
    with pytest.raises(ValidationError):
        LorenzMap(c=0.5, alpha=0.6, beta=0.6, d0=1.0, d1=1.0, phi0={"kind": "quadratic", "kappa": 0.1})


def test_load_map_rejects_unknown_keys():
    with pytest.raises(ValidationError):
        load_map('{"c": 0.5, "alpha": 0.6, "beta": 0.6, "d0": 1, "d1": 1, "gamma": 2}')
    lmap = load_map('{"c": 0.5, "alpha": 0.6, "beta": 0.6, "d0": 1, "d1": 1}')
    assert lmap == canonical(0.5, 0.6, 0.6)


def test_check_invariants(k1):
    assert k1.check_invariants() == pytest.approx(1.2, abs=1e-9)
    weak = canonical(0.5, 0.6, 0.6, d0=0.8)
    with pytest.raises(InvalidMapError, match="expansion floor"):
        weak.check_invariants()


def test_nonflat_bounds_canonical(k1):
    bounds = nonflat_bounds(k1)
    assert bounds.a == pytest.approx(1.10)
    assert bounds.expo_low == pytest.approx(0.4)
    assert bounds.expo_high == pytest.approx(0.4)
    assert bounds.holder_C == 0.0
    assert bounds.holder_t == 1.0
    assert sandwich_violations(k1, bounds) == 0


def test_nonflat_bounds_extended_family():
    lmap = _quadratic_map()
    assert lmap.check_invariants() > 1.0
    bounds = nonflat_bounds(lmap)
    assert bounds.holder_C > 0.0
    assert sandwich_violations(lmap, bounds) == 0
    x = 0.3
    assert lmap.inverse_branch(LEFT, lmap.eval(x)) == pytest.approx(x, abs=1e-12)


def test_log_forms_match_direct_forms(k1):
    lmap = _quadratic_map()
    u = np.array([1e-9, 1e-4, 0.1, 0.4])
    for m in (k1, lmap):
        for side in (LEFT, RIGHT):
            assert np.allclose(m.log_image_offset(side, np.log(u)), np.log(m.image_offset(side, u)), rtol=0, atol=1e-12)
            assert np.allclose(m.log_deriv_offset(side, np.log(u)), np.log(m.deriv_offset(side, u)), rtol=0, atol=1e-12)
            delta = m.image_offset(side, u)
            assert np.allclose(m.log_inverse_offset(side, np.log(delta)), np.log(u), rtol=0, atol=1e-10)


def test_metric(k1):
    other = k1.with_singular_values(d0=0.9)
    assert metric_dist(k1, k1) == 0.0
    assert metric_dist(k1, other) == pytest.approx(0.1)
    assert metric_dist(k1, other) == pytest.approx(metric_dist(other, k1))
    parts = metric_components(k1, _quadratic_map())
    assert parts.singular_term == 0.0
    assert parts.shape_terms[0] > 0.0
    assert parts.shape_terms[1] == 0.0


def test_metric_is_symmetric_and_satisfies_the_triangle_inequality(k1):
    maps = [
        k1,
        k1.with_singular_values(d0=0.9),
        k1.with_singular_values(d0=0.95, d1=0.8),
        _quadratic_map(0.1),
        _quadratic_map(0.2).with_singular_values(d1=0.9),
    ]
    dist = [[metric_dist(f, g) for g in maps] for f in maps]
    for i in range(len(maps)):
        assert dist[i][i] == 0.0
        for j in range(len(maps)):
            assert dist[i][j] == pytest.approx(dist[j][i], rel=1e-12)
            for k in range(len(maps)):
                assert dist[i][k] <= dist[i][j] + dist[j][k] + 1e-12


def test_metric_needs_matching_family(k1):
    with pytest.raises(IncompatibleFamilyError):
        metric_dist(k1, canonical(0.45, 0.6, 0.6))


def test_describe(k1):
    doc = describe(k1)
    assert doc["map"]["c"] == 0.5
    assert doc["singular_values"] == [1.0, 0.0]
    assert math.isclose(doc["expansion_floor"], 1.2, abs_tol=1e-9)
