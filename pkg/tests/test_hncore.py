import unittest.mock
from fractions import Fraction

import numpy as np
import pytest

from hn_persistence.core import hncore
from hn_persistence.core.errors import BudgetExceeded, UsageError
from hn_persistence.core.exactfield import RATIONALS, Subspace, prime_field
from hn_persistence.core.gridcomb import GridFunction
from hn_persistence.core.hncore import (DINKELBACH, all_submodules, check_functoriality, finite_skyscraper_invariant,
                                        hn_filtration, hn_theta, hn_theta_surjectivity, hn_type, is_semistable,
                                        is_stable, max_slope_destabilizer, oracle_hn_filtration, same_filtration,
                                        skyscraper_stability)
from hn_persistence.core.persmod import (Presentation, direct_sum, from_presentation, interval_module,
                                         quotient_with_projection, reduce_modulo, restrict_to_grid, sub_generated)
from hn_persistence.core.stabcond import DiscreteStability, slope
from hn_persistence.utils.random_modules import random_discrete_stability, random_grid_module

F2 = prime_field(2)
HALF = Fraction(1, 2)
LINE = GridFunction(((0, 1, 2),))


def two_chain():
    return from_presentation(Presentation(1, ((0,), (0,)), (((1,), (1, 0)), ((2,), (0, 1))), 2))


def stability(u, alpha, beta):
    vertices = list(u.poset.vertices())
    return DiscreteStability(u.poset, dict(zip(vertices, map(Fraction, alpha))),
                             dict(zip(vertices, map(Fraction, beta))))


def test_running_example_filtration():
    u = two_chain()
    ds = stability(u, (1, 0, 0), (1, 1, 1))
    filtration = hn_filtration(u, ds, verify=True)
    assert filtration.slopes == [1, HALF]
    assert [s.dimension_vector() for s in filtration.steps] == [(0, 0, 0), (1, 0, 0), (2, 1, 0)]
    assert hn_type(u, ds).entries == ((1, (1, 0, 0)), (HALF, (2, 1, 0)))
    assert hn_theta(u, ds, Fraction(3, 4)).dimension_vector() == (1, 0, 0)
    assert hn_theta(u, ds, HALF).is_full()
    assert hn_theta(u, ds, 2).is_zero()
    assert same_filtration(filtration, oracle_hn_filtration(u, ds))
    assert same_filtration(filtration, hn_filtration(u, ds, DINKELBACH))


def test_destabilizer_is_the_maximal_one():
    u = two_chain()
    ds = stability(u, (1, 0, 0), (1, 1, 1))
    w, mu = max_slope_destabilizer(u, ds)
    assert mu == 1
    assert w.dimension_vector() == (1, 0, 0)
    assert not is_semistable(u, ds)


def test_stable_and_semistable_examples():
    single = interval_module((0,), (1,), F2)
    assert is_stable(single, stability(single, (1, 0), (1, 1)))
    long = restrict_to_grid(interval_module((0,), (2,), F2), LINE)
    assert is_stable(long, stability(long, (1, 0, 0), (1, 1, 1)))
    double = direct_sum(single, single)
    ds = stability(double, (1, 0), (1, 1))
    assert is_semistable(double, ds)
    assert not is_stable(double, ds)


def test_finite_skyscraper_invariant():
    u = two_chain()
    types = finite_skyscraper_invariant(u, {(0,): Fraction(1), (1,): Fraction(1), (2,): Fraction(1)})
    assert types[(0,)].slopes == (1, HALF)
    assert types[(1,)].entries == ((1, (0, 1, 0)), (0, (2, 1, 0)))
    assert types[(2,)].slopes == (0,)


def test_surjectivity_along_a_skyscraper():
    u = two_chain()
    ds = skyscraper_stability(u, (0,), {(0,): Fraction(1), (1,): Fraction(1), (2,): Fraction(1)})
    for theta in (Fraction(1, 4), HALF, 1, 2):
        assert hn_theta_surjectivity(u, ds, theta)
    with pytest.raises(UsageError):
        hn_theta_surjectivity(u, ds, 0)


def test_functoriality_along_a_projection():
    u = two_chain()
    ds = stability(u, (1, 0, 0), (1, 1, 1))
    short = sub_generated(u, {(0,): Subspace.span([[1, 0]], 2, F2)})
    _, projection = quotient_with_projection(u, short)
    for theta in (-1, 0, HALF, Fraction(3, 4), 1, 2):
        assert check_functoriality(projection, ds, theta)


def test_submodule_lattice_enumeration():
    assert len(all_submodules(two_chain())) == 7
    single = interval_module((0,), (1,), F2)
    assert len(all_submodules(direct_sum(single, single))) == 5


def test_engine_guards():
    u = two_chain()
    ds = stability(u, (1, 0, 0), (1, 1, 1))
    with pytest.raises(UsageError):
        hn_filtration(reduce_modulo(u, RATIONALS), ds)
    with pytest.raises(UsageError):
        hn_filtration(u, stability(u, (-1, 0, 0), (1, 1, 1)))
    with pytest.raises(UsageError):
        hn_filtration(u, stability(interval_module((0,), (1,), F2), (1, 0), (1, 1)))
    with pytest.raises(BudgetExceeded):
        oracle_hn_filtration(u, ds, budget=2)
    with pytest.raises(BudgetExceeded):
        max_slope_destabilizer(u, ds, budget=1)


def test_oracle_accepts_signed_weights():
    u = two_chain()
    ds = stability(u, (1, -1, 0), (1, 1, 1))
    filtration = oracle_hn_filtration(u, ds)
    assert all(a > b for a, b in zip(filtration.slopes, filtration.slopes[1:]))
    assert filtration.steps[-1].is_full()


def test_engine_agrees_with_the_oracle_on_random_modules():
    rng = np.random.default_rng(2024)
    for _ in range(25):
        u = random_grid_module(rng, max_total_dim=6)
        ds = random_discrete_stability(rng, u.poset)
        oracle = oracle_hn_filtration(u, ds)
        assert same_filtration(hn_filtration(u, ds), oracle)
        assert same_filtration(hn_filtration(u, ds, DINKELBACH), oracle)


def test_flipped_slope_scoring_is_caught_by_the_oracle():
    u = two_chain()
    ds = stability(u, (1, 0, 0), (1, 1, 1))
    oracle = oracle_hn_filtration(u, ds)
    with unittest.mock.patch.object(hncore, "_destabilizer_slope", lambda d, dims: -slope(d, dims)):
        assert not same_filtration(hn_filtration(u, ds), oracle)
