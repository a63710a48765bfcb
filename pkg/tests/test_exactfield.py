from fractions import Fraction

import numpy as np
import pytest

from hn_persistence.core.errors import (BudgetExceeded, HNError, InvariantViolation, ParseError, RefinementNeeded,
                                        UsageError, ValidationError)
from hn_persistence.core.exactfield import (RATIONALS, Matrix, Subspace, annihilator, complement_basis, enumerate_subspaces,
                                            gaussian_binomial, kernel_basis, preimage, prime_field, push,
                                            quotient_coordinates, rank, subspace_intersect, subspace_sum,
                                            subspaces_containing)

F2, F3, F5 = prime_field(2), prime_field(3), prime_field(5)


def random_matrix(rng, rows, cols, field):
    return Matrix.from_rows(rng.integers(0, field.characteristic, size=(rows, cols)).tolist(), cols, field)


# Errors

def test_exit_codes_are_distinct_per_failure_kind():
    codes = [UsageError.exit_code, ParseError.exit_code, ValidationError.exit_code,
             BudgetExceeded.exit_code, InvariantViolation.exit_code]
    assert len(set(codes)) == len(codes)
    assert all(issubclass(c, HNError) for c in (UsageError, ParseError, ValidationError, BudgetExceeded,
                                                RefinementNeeded, InvariantViolation))


def test_usage_error_is_a_value_error():
    with pytest.raises(ValueError):
        raise UsageError("bad shape")


def test_error_context():
    e = ParseError("unexpected token", 3, 7)
    assert (e.line, e.column) == (3, 7)
    assert "line 3, column 7" in str(e)
    v = ValidationError(["negative-point-mass: term 0", "beta-shape-mismatch: axis 1"])
    assert len(v.diagnostics) == 2
    assert InvariantViolation("hn-functoriality", "detail").invariant == "hn-functoriality"
    r = RefinementNeeded([[Fraction(1, 2)], []])
    assert "1/2" in str(r)


# Fields

def test_prime_field_inverses():
    for f in (F2, F3, F5):
        for a in range(1, f.characteristic):
            assert f.mul(a, f.inv(a)) == 1


def test_coerce_reduces_rationals_modulo_p():
    assert F3.coerce(Fraction(1, 2)) == 2
    assert F5.coerce("-1") == 4
    assert RATIONALS.coerce("3/6") == Fraction(1, 2)
    with pytest.raises(UsageError):
        F3.coerce(Fraction(1, 3))


def test_non_prime_characteristic_is_refused():
    with pytest.raises(UsageError):
        prime_field(4)


def test_inverse_of_zero():
    with pytest.raises(ZeroDivisionError):
        F5.inv(0)


# Matrices and subspaces

def test_matrix_shapes_are_checked():
    a = Matrix.from_rows([[1, 2]], 2, RATIONALS)
    with pytest.raises(UsageError):
        a @ a
    assert (a @ a.transpose()).entries == ((Fraction(5),),)


def test_subspaces_compare_by_echelon_basis():
    assert Subspace.span([[2, 0]], 2, RATIONALS) == Subspace.span([[1, 0]], 2, RATIONALS)
    assert Subspace.span([[1, 1], [1, 0]], 2, F2) == Subspace.full(2, F2)
    assert Subspace.zero(2, F2) <= Subspace.span([[1, 1]], 2, F2)
    assert not Subspace.span([[1, 0]], 2, F2) <= Subspace.span([[0, 1]], 2, F2)


def test_kernel_over_the_rationals():
    k = kernel_basis(Matrix.from_rows([[1, 1]], 2, RATIONALS))
    assert k.dim == 1
    assert k.contains_vector([Fraction(-1), Fraction(1)])


def test_push_and_preimage():
    m = Matrix.from_rows([[1, 0], [0, 0]], 2, F3)
    assert push(m, Subspace.full(2, F3)) == Subspace.span([[1, 0]], 2, F3)
    assert preimage(m, Subspace.zero(2, F3)) == Subspace.span([[0, 1]], 2, F3)


def test_intersection_and_annihilator():
    a = Subspace.span([[1, 0, 0], [0, 1, 0]], 3, RATIONALS)
    b = Subspace.span([[0, 1, 0], [0, 0, 1]], 3, RATIONALS)
    assert subspace_intersect(a, b) == Subspace.span([[0, 1, 0]], 3, RATIONALS)
    assert subspace_sum(a, b).is_full()
    assert annihilator(annihilator(a)) == a


def test_quotient_coordinates_split():
    s = Subspace.span([[1, 1, 0]], 3, F2)
    proj, lift = quotient_coordinates(s)
    assert proj.rows == 2
    assert (proj @ lift).entries == Matrix.identity(2, F2).entries
    for v in s.basis:
        assert all(c == 0 for c in proj.apply(v))


def test_complement_completes_the_echelon_basis():
    s = Subspace.span([[0, 1, 1]], 3, F3)
    extra = complement_basis(s)
    assert extra == [(1, 0, 0), (0, 0, 1)]
    assert subspace_sum(s, Subspace.span(extra, 3, F3)).dim == 3
    assert complement_basis(Subspace.full(2, F3)) == []
    _, lift = quotient_coordinates(Subspace.full(2, F3))
    assert (lift.rows, lift.cols) == (2, 0)


def test_rank_nullity_on_random_matrices():
    rng = np.random.default_rng(7)
    for _ in range(30):
        rows, cols = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        m = random_matrix(rng, rows, cols, F3)
        assert rank(m) + kernel_basis(m).dim == cols


# Enumeration

def test_subspace_counts_match_gaussian_binomials():
    assert len(enumerate_subspaces(2, F2)) == 5
    assert len(enumerate_subspaces(2, F3)) == 6
    assert gaussian_binomial(4, 2, 2) == 35
    assert sum(1 for s in enumerate_subspaces(4, F2) if s.dim == 2) == 35


def test_subspaces_containing_a_line():
    line = Subspace.span([[1, 0, 0]], 3, F2)
    found = subspaces_containing(line)
    assert all(line <= s for s in found)
    # the line, three planes through it, the whole space
    assert len(found) == 1 + 3 + 1


def test_enumeration_guards():
    with pytest.raises(BudgetExceeded):
        enumerate_subspaces(20, F2, budget=1000)
    with pytest.raises(UsageError):
        enumerate_subspaces(2, RATIONALS)
