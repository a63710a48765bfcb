from fractions import Fraction

import numpy as np

from hn_persistence.core.persmod import from_presentation
from hn_persistence.core.stabcond import diagnose
from hn_persistence.utils.random_modules import (presentation_points, random_condition, random_discrete_stability,
                                                 random_fraction, random_grid_module, random_module_map,
                                                 random_presentation, random_refinement, random_submodule)


def test_fractions_stay_on_the_lattice():
    rng = np.random.default_rng(0)
    for _ in range(50):
        q = random_fraction(rng, -1, 1, 4)
        assert -1 <= q <= 1
        assert (q * 4).denominator == 1


def test_same_seed_same_instances():
    a = random_presentation(np.random.default_rng(9), 2)
    b = random_presentation(np.random.default_rng(9), 2)
    assert a == b
    assert presentation_points(a)


def test_grid_modules_respect_the_dimension_bound():
    rng = np.random.default_rng(1)
    for _ in range(20):
        u = random_grid_module(rng, max_total_dim=5)
        assert 0 < u.total_dim <= 5
        assert u.validate() is u
        ds = random_discrete_stability(rng, u.poset)
        assert ds.is_nonnegative()
        assert all(b > 0 for b in ds.beta.values())


def test_submodules_and_maps_are_well_formed():
    rng = np.random.default_rng(2)
    for _ in range(10):
        u = random_grid_module(rng)
        assert random_submodule(rng, u).is_closed()
        assert random_module_map(rng, u, u).is_natural()


def test_conditions_are_valid():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(1, 3))
        pres = random_presentation(rng, n)
        z = random_condition(rng, n, pres.points)
        assert diagnose(z) == []
        assert z.beta.window.contains(tuple(Fraction(c) for c in pres.points[0]))


def test_refinement_keeps_the_old_coordinates():
    rng = np.random.default_rng(4)
    u = from_presentation(random_presentation(rng, 1, coords=(0, 1, 2)))
    fine = random_refinement(rng, u.grid, count=3)
    assert set(u.grid.axes[0]) <= set(fine.axes[0])
