from __future__ import annotations

import pytest

from lorenz_measures.induced_markov import (
    check_theorem_a_hypotheses,
    cylinder_tower,
    enumerate_return_branches,
    find_nice_interval,
)
from lorenz_measures.lorenz_map import RIGHT, LorenzMap, canonical
from lorenz_measures.measures import base_measure, mass_distribution
from lorenz_measures.perturbation import shoot_for_connection, tune_periodic_singularity


@pytest.fixture(scope="session")
def k1() -> LorenzMap:
    return canonical(0.5, 0.6, 0.6)


@pytest.fixture(scope="session")
def k2(k1):
    """K1 with d1 shot so that f^5(c+) = c."""
    return shoot_for_connection(k1, RIGHT, 5).map


@pytest.fixture(scope="session")
def k2_gate(k2):
    return check_theorem_a_hypotheses(k2, 0.25)


@pytest.fixture(scope="session")
def k2_interval(k2, k2_gate):
    return find_nice_interval(k2, 0.25, gate=k2_gate)


@pytest.fixture(scope="session")
def k2_branches(k2, k2_interval):
    return enumerate_return_branches(k2, k2_interval)


@pytest.fixture(scope="session")
def k2_tower(k2, k2_interval, k2_branches):
    return cylinder_tower(k2, k2_interval, k2_branches)


@pytest.fixture(scope="session")
def k2_base(k2_tower):
    return base_measure(k2_tower, leftmost_weight=0.5)


@pytest.fixture(scope="session")
def k2_mass(k2_base, k2_tower):
    return mass_distribution(k2_base, k2_tower, 3, 0.5)


@pytest.fixture(scope="session")
def k1_periodic(k1):
    """K1 with both singular orbits tuned onto c."""
    return tune_periodic_singularity(k1, 0.1, 0.02)
