from __future__ import annotations

import math

import numpy as np
import pytest

from lorenz_measures.errors import MassDistributionError
from lorenz_measures.lorenz_map import nonflat_bounds
from lorenz_measures.measures import (
    base_functionals,
    base_measure,
    divergence_horizon,
    mass_distribution,
    measure_report,
    project_atoms,
    project_measure,
    rc_square_partial_sums,
    sample_superexpanding,
    tail_surrogate,
    tail_weight_ratio,
)
from lorenz_measures.zeta_sums import tail_bound_constant


def _point_mass(tower, columns):
    weights = np.zeros((tower.depth + 1, len(tower.base)))
    weights[0, columns] = 1.0
    return base_measure(tower, weights=weights)


@pytest.fixture(scope="module")
def k2_report(k2_mass):
    return measure_report(k2_mass)


def test_bernoulli_base_measure(k2_base, k2_tower):
    assert k2_base.weighting == "bernoulli"
    assert k2_base.pi0 == 0.5
    assert k2_base.weights.shape == (k2_tower.depth + 1, len(k2_tower.base))
    assert k2_base.weights.sum() + k2_base.beyond == pytest.approx(1.0, abs=1e-12)
    assert k2_base.mass_above(3) == pytest.approx(0.5**4)
    assert np.allclose(k2_base.conditional.sum(axis=1), 1.0)


def test_length_weighted_base_measure(k2_tower):
    base = base_measure(k2_tower)
    lengths = np.array([b.length for b in k2_tower.base])
    total = k2_tower.leftmost.length + lengths.sum()
    assert base.pi0 == pytest.approx(k2_tower.leftmost.length / total)
    assert base.weights[0] == pytest.approx(lengths / total)


def test_geometric_base_measure(k2_tower):
    base = base_measure(k2_tower, weighting="geometric")
    assert base.weights.sum() == pytest.approx(1.0)
    assert base.beyond == 0.0
    assert np.all(np.diff(base.level_mass) <= 0.0)
    assert base.level_mass[1] < base.level_mass[0]
    assert np.allclose(base.conditional.sum(axis=1), 1.0)


def test_user_weights(k2_tower):
    pair = k2_tower.restrict(0, [0, 1])
    base = base_measure(pair, weights=np.array([1.0, 1.0]))
    assert base.weighting == "user"
    assert base.weights.tolist() == [[0.5, 0.5]]
    single = base_measure(k2_tower.restrict(0, [0]), weights=np.array([3.0]))
    assert single.weights.tolist() == [[1.0]]


def test_base_measure_validation(k2_tower):
    with pytest.raises(ValueError):
        base_measure(k2_tower, leftmost_weight=1.0)
    with pytest.raises(ValueError):
        base_measure(k2_tower, weighting="uniform")
    with pytest.raises(ValueError, match="shape"):
        base_measure(k2_tower, weights=np.ones((2, 2)))
    with pytest.raises(ValueError):
        base_measure(k2_tower, weights=-np.ones(len(k2_tower.base)))


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
def test_mass_distribution_rejects_alpha(k2_base, k2_tower, alpha):
    with pytest.raises(MassDistributionError):
        mass_distribution(k2_base, k2_tower, 3, alpha)


def test_mass_distribution_needs_tower_depth(k2_base, k2_tower):
    with pytest.raises(MassDistributionError, match="depth"):
        mass_distribution(k2_base, k2_tower, k2_tower.depth, 0.5)
    with pytest.raises(MassDistributionError):
        mass_distribution(k2_base, k2_tower, -1, 0.5)


def test_mass_distribution_levels(k2_mass):
    m = k2_mass
    assert m.exponent == 2.5
    assert m.tail_mass == pytest.approx(0.5**4)
    total, error = m.total_mass()
    assert total == pytest.approx(1.0, abs=1e-12)
    assert error < 1e-12
    weights = m.level_weights(10)
    assert weights[:4] == pytest.approx(0.5 ** np.arange(4) * 0.5)
    assert weights[5] / weights[4] == pytest.approx(2.0**-2.5)
    assert m.atom_weights(10).sum(axis=1) == pytest.approx(weights)


def test_tail_bounds(k2_base, k2_tower):
    for ell in range(1, 7):
        for alpha in (0.25, 0.5, 0.75):
            report = measure_report(mass_distribution(k2_base, k2_tower, ell, alpha), n_levels_sq=1000)
            C = tail_bound_constant(ell, alpha)
            assert report.tail_bound_C == pytest.approx(C)
            assert report.entropy_tail_classes + report.entropy_tail_within <= C
            assert report.int_Rc_tail <= C
            assert report.entropy_Fc <= report.entropy_bound


def test_report_functionals(k2_report):
    report = k2_report
    assert math.isfinite(report.entropy_Fc)
    assert math.isfinite(report.int_Rc)
    assert report.int_Rc > 1.0
    assert report.h_mu == pytest.approx(report.h_nu / report.int_Rtilde)
    assert report.h_eta == pytest.approx(report.h_nu / report.int_Rc)
    assert report.int_R_eta == pytest.approx(report.int_R_eta_chain, rel=1e-9)
    assert report.total_mass == pytest.approx(1.0, abs=1e-12)


def test_second_moment_diverges(k2_report, k2_mass):
    report = k2_report
    assert report.int_Rc_sq_growth_exponent == pytest.approx(0.5, abs=0.1)
    assert report.int_Rc_sq_divergent
    assert report.divergence_horizon == 100_000
    assert np.all(np.diff(report.int_Rc_sq_partials) > 0.0)
    partial = rc_square_partial_sums(k2_mass, 10_000)
    assert partial[-1] > partial[100] > partial[10]
    horizon, surrogate = divergence_horizon(k2_mass)
    assert horizon == report.divergence_horizon
    assert surrogate == pytest.approx(report.surrogate_tail_value)


def test_partial_sums_grow(k2_report):
    assert len(k2_report.lyapunov_partials) == k2_report.n_partial + 1
    assert np.all(np.diff(k2_report.lyapunov_partials) > 0.0)
    assert np.all(np.diff(k2_report.recurrence_partials) > 0.0)


def test_report_rejects_deep_partials(k2_mass):
    with pytest.raises(ValueError, match="n_partial"):
        measure_report(k2_mass, n_partial=k2_mass.tower.depth + 1)


def test_recovery_of_base_functionals(k2_base, k2_tower):
    exact = base_functionals(k2_base, k2_tower)
    gaps = {key: [] for key in exact}
    for ell in range(1, 7):
        report = measure_report(mass_distribution(k2_base, k2_tower, ell, 0.5), n_levels_sq=1000)
        gaps["entropy"].append(abs(report.entropy_Fc - exact["entropy"]))
        gaps["int_Rc"].append(abs(report.int_Rc - exact["int_Rc"]))
        gaps["int_Rtilde"].append(abs(report.int_Rtilde - exact["int_Rtilde"]))
    for key, values in gaps.items():
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:])), key
        assert values[-1] < values[0]


def test_point_mass_has_zero_entropy(k2_tower):
    base = _point_mass(k2_tower, [0])
    report = measure_report(mass_distribution(base, k2_tower, 2, 0.5), n_levels_sq=100)
    assert report.entropy_Fc == pytest.approx(0.0, abs=1e-15)
    assert report.h_mu == pytest.approx(0.0, abs=1e-15)
    assert report.int_Rc == pytest.approx(1.0)
    assert report.int_Rtilde == pytest.approx(k2_tower.base[0].R)
    assert report.divergence_horizon is None
    assert not report.int_Rc_sq_divergent


def test_uniform_head_entropy(k2_tower):
    base = _point_mass(k2_tower, [0, 1, 2])
    report = measure_report(mass_distribution(base, k2_tower, 2, 0.5), n_levels_sq=100)
    assert report.entropy_Fc == pytest.approx(math.log(3.0))


def test_tail_surrogates(k2_mass):
    square_free = tail_surrogate(k2_mass, 2.0)
    assert square_free.tail_mass == pytest.approx(k2_mass.tail_mass)
    projection = project_measure(square_free, "F")
    assert projection.infinite
    assert projection.total_mass is None
    with pytest.raises(MassDistributionError):
        tail_surrogate(k2_mass, 1.0)


def test_tail_weight_ratio(k2_base, k2_tower):
    light = mass_distribution(k2_base, k2_tower, 3, 0.75)
    heavy = mass_distribution(k2_base, k2_tower, 3, 0.25)
    assert tail_weight_ratio(heavy, light, 5) != pytest.approx(1.0)
    assert tail_weight_ratio(heavy, light, 100) > tail_weight_ratio(heavy, light, 5)
    with pytest.raises(ValueError):
        tail_weight_ratio(heavy, light, 3)


def test_project_atoms():
    summary = project_atoms([(1.0, 5)])
    assert summary.total_mass == 5.0
    assert summary.segment_masses == pytest.approx([0.2] * 5)
    with pytest.raises(ValueError):
        project_atoms([])


def test_project_measure(k2_mass, k2_report):
    F = project_measure(k2_mass, "F")
    assert not F.infinite
    assert F.total_mass == pytest.approx(k2_report.int_Rc)
    assert F.second_moment.holds
    assert 0.5 <= F.second_moment.ratio <= 2.0
    f = project_measure(k2_mass, "f")
    assert f.total_mass == pytest.approx(k2_report.int_Rtilde)
    assert f.segment_masses[0] == pytest.approx(1.0 / k2_report.int_Rtilde)
    with pytest.raises(ValueError):
        project_measure(k2_mass, "g")


def test_sampling_is_deterministic(k2_mass):
    a = sample_superexpanding(k2_mass, seed=5, segments=500)
    b = sample_superexpanding(k2_mass, seed=5, segments=500)
    assert np.array_equal(a.levels, b.levels)
    assert np.array_equal(a.prefix_lyapunov, b.prefix_lyapunov)


def test_single_atom_sampling(k2_tower):
    base = _point_mass(k2_tower, [0])
    m = mass_distribution(base, k2_tower, 2, 0.5)
    sample = sample_superexpanding(m, seed=1, segments=50)
    assert sample.max_level_drawn == 0
    expected = k2_tower.base_lyapunov[0] / k2_tower.base[0].R
    assert sample.prefix_lyapunov == pytest.approx(np.full(50, expected))


@pytest.mark.slow
def test_sampled_orbits_are_superexpanding(k2, k2_mass):
    sample = sample_superexpanding(k2_mass, seed=42, segments=10_000)
    assert sample.max_level_drawn >= 100
    for threshold in (10.0, 20.0, 40.0, 1e20):
        assert sample.prefix_log_distance.max() > threshold
    bounds = nonflat_bounds(k2)
    floor = -math.log(bounds.a) + bounds.expo_low * sample.prefix_log_distance
    assert np.all(sample.prefix_lyapunov >= floor - 1e-9 * np.abs(floor) - 1e-9)
    assert 0.0 < sample.support_coverage <= 1.0
