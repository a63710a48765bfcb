from fractions import Fraction
from unittest import mock

import numpy as np
import pytest

from hn_persistence.core.errors import UsageError, ValidationError
from hn_persistence.core.exactfield import Matrix, Subspace, prime_field
from hn_persistence.core.gridcomb import INF, GridFunction, embedding
from hn_persistence.core.persmod import (GridModule, Presentation, apply_map_to_submodule, compose_maps,
                                         direct_sum, from_presentation, full_submodule, hom_basis, identity_map,
                                         interval_module, module_map_between, preimage_submodule, pullback,
                                         pushforward, quotient, quotient_with_projection, rank_invariant, refine,
                                         restrict_to_grid, shift_map, shift_module, spread_module, sub_generated,
                                         submodule_from_components, summand_maps, zero_submodule)
from hn_persistence.utils.random_modules import random_grid_module

F2 = prime_field(2)
HALF = Fraction(1, 2)
LINE = GridFunction(((0, 1, 2),))


def two_chain() -> GridModule:
    """K[0,1) + K[0,2) over F_2"""
    pres = Presentation(1, ((0,), (0,)), (((1,), (1, 0)), ((2,), (0, 1))), 2)
    return from_presentation(pres)


def interval_on_line(hi) -> GridModule:
    return restrict_to_grid(interval_module((0,), (hi,), F2), LINE)


def test_presentation_dimensions_and_ranks():
    v = two_chain()
    assert v.grid == LINE
    assert v.dimension_vector() == (2, 1, 0)
    assert rank_invariant(v, (0,), (1,)) == 1
    assert rank_invariant(v, (HALF,), (Fraction(3, 2),)) == 1
    assert rank_invariant(v, (0,), (2,)) == 0
    assert rank_invariant(v, (-1,), (0,)) == 0
    assert rank_invariant(v, (1,), (0,)) is INF


def test_presentation_validation():
    with pytest.raises(ValidationError):
        Presentation(1, ((1,),), (((0,), (1,)),)).validate()
    with pytest.raises(ValidationError):
        Presentation(2, ((0, 0),), (((1, 1), (1, 1)),)).validate()


def test_interval_module_support():
    v = interval_module((0, 0), (1, 1), F2)
    assert v.dim_at((HALF, HALF)) == 1
    assert v.dim_at((1, 0)) == 0
    assert v.dim_at((0, -HALF)) == 0
    assert v.validate() is v


def test_validate_rejects_a_square_that_does_not_commute():
    grid = GridFunction(((0, 1), (0, 1)))
    one, zero = Matrix.identity(1, F2), Matrix.zeros(1, 1, F2)
    dims = {p: 1 for p in grid.domain.vertices()}
    maps = {((0, 0), 0): one, ((0, 0), 1): one, ((1, 0), 1): one, ((0, 1), 0): zero}
    with pytest.raises(ValidationError):
        GridModule(grid, F2, dims, maps).validate()


def test_presented_modules_are_validated():
    broken = ValidationError(["square at (0, 0) on axes 0,1 does not commute (top (1, 1))"])
    pres = Presentation(2, ((0, 0),), (), 2)
    with mock.patch.object(GridModule, "validate", autospec=True, side_effect=broken) as check:
        with pytest.raises(ValidationError):
            from_presentation(pres)
    assert check.call_count == 1
    assert from_presentation(pres).dimension_vector() == (1,)


def test_spread_modules_need_convex_connected_sets():
    with pytest.raises(ValidationError):
        spread_module(LINE, [(0,), (2,)], F2)
    grid = GridFunction(((0, 1), (0, 1)))
    with pytest.raises(ValidationError):
        spread_module(grid, [(1, 0), (0, 1)], F2)
    assert spread_module(grid, [(0, 0), (1, 0)], F2).total_dim == 2


def test_generated_submodules_and_quotients():
    v = two_chain()
    short = sub_generated(v, {(0,): Subspace.span([[1, 0]], 2, F2)})
    assert short.dimension_vector() == (1, 0, 0)
    assert short.is_closed()
    assert quotient(v, short).dimension_vector() == (1, 1, 0)
    long = sub_generated(v, {(0,): Subspace.span([[0, 1]], 2, F2)})
    assert long.dimension_vector() == (1, 1, 0)
    assert long.as_module().validate().dimension_vector() == (1, 1, 0)
    assert zero_submodule(v) <= short <= full_submodule(v)


def test_quotient_projection_is_natural():
    rng = np.random.default_rng(11)
    for _ in range(10):
        v = random_grid_module(rng)
        w = sub_generated(v, {p: Subspace.full(v.dims[p], F2) for p in v.support_vertices()[:1]})
        q, projection = quotient_with_projection(v, w)
        assert projection.is_natural()
        assert q.total_dim == v.total_dim - w.total_dim
        assert preimage_submodule(projection, zero_submodule(q)) == w


def test_non_closed_family_is_rejected():
    v = two_chain()
    family = {(0,): Subspace.span([[0, 1]], 2, F2), (1,): Subspace.zero(1, F2), (2,): Subspace.zero(0, F2)}
    with pytest.raises(ValidationError):
        submodule_from_components(v, family)


def test_direct_sum_matches_the_presented_module():
    s = direct_sum(interval_module((0,), (1,), F2), interval_module((0,), (2,), F2))
    assert s.same_as(two_chain())
    total, (inc_a, inc_b, pr_a, pr_b) = summand_maps(interval_on_line(1), interval_on_line(2))
    for f in (inc_a, inc_b, pr_a, pr_b):
        assert f.is_natural()
    assert compose_maps(inc_a, pr_a).equals(identity_map(pr_a.target))


def test_hom_spaces_between_intervals():
    short, long = interval_on_line(1), interval_on_line(2)
    assert len(hom_basis(long, short)) == 1
    assert len(hom_basis(short, long)) == 0
    assert len(hom_basis(long, long)) == 1


def test_module_map_between_checks_naturality():
    short, long = interval_on_line(1), interval_on_line(2)
    f = module_map_between(long, short, {(0,): [[1]], (1,): [], (2,): []})
    assert apply_map_to_submodule(f, full_submodule(long)).dimension_vector() == (1, 0, 0)
    assert preimage_submodule(f, zero_submodule(short)).dimension_vector() == (0, 1, 0)
    with pytest.raises(ValidationError):
        module_map_between(short, long, {(0,): [[1]], (1,): [[]], (2,): []})


def test_pushforward_then_pullback_is_the_identity():
    v = two_chain()
    fine_grid = GridFunction(((0, HALF, 1, 2),))
    t = embedding(v.grid, fine_grid)
    fine = pushforward(t, v, fine_grid)
    assert fine.dimension_vector() == (2, 2, 1, 0)
    assert fine.same_as(refine(v, fine_grid))
    assert pullback(t, fine, v.grid).same_as(v)
    with pytest.raises(UsageError):
        refine(v, GridFunction(((0, 3),)))


def test_shifts():
    v = two_chain()
    moved = shift_module(v, (HALF,))
    assert moved.grid.axes == ((-HALF, HALF, Fraction(3, 2)),)
    assert rank_invariant(moved, (-HALF,), (HALF,)) == rank_invariant(v, (0,), (1,))
    sigma = shift_map(v, (1,))
    assert sigma.is_natural()
    assert sigma.source.same_as(restrict_to_grid(v, sigma.source.grid))
    with pytest.raises(UsageError):
        shift_map(v, (-1,))
