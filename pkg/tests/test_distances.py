import logging
from fractions import Fraction

import pytest

from hn_persistence.core.distances import (InterleavingCertificate, erosion_distance, hn_distance,
                                           hn_distance_report, landscape_distance, perturb_presentation,
                                           sample_rho, sample_s, theta_candidates, verify_interleaving)
from hn_persistence.core.errors import UsageError
from hn_persistence.core.exactfield import prime_field
from hn_persistence.core.hninvariants import FilteredRankInvariant, theta_min
from hn_persistence.core.persmod import Presentation, from_presentation, interval_module, zero_module
from hn_persistence.core.stabcond import constant_beta, skyscraper_condition

F2 = prime_field(2)
HALF, QUARTER = Fraction(1, 2), Fraction(1, 4)
TWO_CHAIN = Presentation(1, ((0,), (0,)), (((1,), (1, 0)), ((2,), (0, 1))), 2)


def delta_zero():
    return skyscraper_condition((0,), constant_beta((0,), (2,)))


def test_erosion_between_nested_intervals():
    short, long = interval_module((0,), (1,), F2), interval_module((0,), (2,), F2)
    a = sample_rho(short, (-1,), (3,), HALF)
    b = sample_rho(long, (-1,), (3,), HALF)
    assert erosion_distance(a, b) == 1
    assert erosion_distance(a, a) == 0


def test_erosion_saturates_on_a_single_sample(caplog):
    a = sample_rho(interval_module((0,), (1,), F2), (0,), (0,), HALF)
    b = sample_rho(zero_module(1, F2), (0,), (0,), HALF)
    with caplog.at_level(logging.DEBUG, logger="hn_persistence.core.distances"):
        assert erosion_distance(a, b) == HALF
    assert "saturated" in caplog.text


def test_erosion_needs_a_common_lattice():
    v = interval_module((0,), (1,), F2)
    with pytest.raises(UsageError):
        erosion_distance(sample_rho(v, (0,), (2,), HALF), sample_rho(v, (0,), (2,), QUARTER))
    with pytest.raises(UsageError):
        sample_rho(v, (0,), (2,), 0)


def test_sampled_rows():
    v = interval_module((0, 0), (1, 1), F2)
    sampled = sample_rho(v, (0, 0), (1, 1), 1)
    rows = sampled.rows(theta=HALF)
    assert len(rows) == len(sampled.values) == 9
    assert all(len(row) == 6 for row in rows)
    assert rows[0] == ["0", "0", "0", "0", "1/2", "1"]


def test_theta_candidates_cover_the_profiles():
    inv = FilteredRankInvariant(from_presentation(TWO_CHAIN, F2), delta_zero())
    thetas = theta_candidates([inv], (0,), (1,), HALF)
    breakpoints = sorted(set().union(*(inv.theta_profile((x,)).breakpoints for x in (0, HALF, 1))))
    assert breakpoints and set(breakpoints) <= set(thetas)
    assert {(a + b) / 2 for a, b in zip(breakpoints, breakpoints[1:])} <= set(thetas)
    assert min(thetas) == theta_min(delta_zero()) - 1 == -1
    assert thetas == sorted(thetas)


def test_hn_distance_of_a_module_to_itself():
    v = from_presentation(TWO_CHAIN, F2)
    report = hn_distance_report(v, v, delta_zero(), (-1,), (2,), HALF)
    assert report and all(d == 0 for d in report.values())
    assert hn_distance(v, v, delta_zero(), (-1,), (2,), HALF, thetas=[0, 1]) == 0


def test_perturbation_certificate_and_stability():
    v = from_presentation(TWO_CHAIN, F2)
    for seed in (1, 2, 3):
        moved, cert = perturb_presentation(TWO_CHAIN, QUARTER, seed, F2)
        w = from_presentation(moved, F2)
        assert verify_interleaving(cert, v, w)
        rho = erosion_distance(sample_rho(v, (-1,), (3,), QUARTER), sample_rho(w, (-1,), (3,), QUARTER))
        assert rho <= QUARTER
        assert hn_distance(v, w, delta_zero(), (-HALF,), (Fraction(5, 2),), QUARTER) <= QUARTER


def test_broken_certificates_are_rejected():
    v = from_presentation(TWO_CHAIN, F2)
    moved, cert = perturb_presentation(TWO_CHAIN, QUARTER, 7, F2)
    w = from_presentation(moved, F2)
    assert not verify_interleaving(InterleavingCertificate(-QUARTER, cert.f, cert.g), v, w)
    assert not verify_interleaving(cert, v, interval_module((0,), (1,), F2))
    with pytest.raises(UsageError):
        perturb_presentation(TWO_CHAIN, -1, 0)


def test_zero_perturbation_keeps_the_presentation():
    moved, cert = perturb_presentation(TWO_CHAIN, 0, 5, F2)
    assert moved.generators == TWO_CHAIN.generators
    v = from_presentation(TWO_CHAIN, F2)
    assert verify_interleaving(cert, v, v)


def test_landscape_distance_between_nested_intervals():
    z = delta_zero()
    inv_short = FilteredRankInvariant(interval_module((0,), (1,), F2), z)
    inv_long = FilteredRankInvariant(interval_module((0,), (2,), F2), z)
    assert landscape_distance(inv_short, inv_long, 0, (1,), (0,), (2,), HALF, Fraction(1, 64)) == 1
    assert landscape_distance(inv_short, inv_short, 0, (1, 2), (0,), (2,), HALF, Fraction(1, 64)) == 0


def test_sampled_s_matches_rho_at_low_theta():
    v = from_presentation(TWO_CHAIN, F2)
    inv = FilteredRankInvariant(v, delta_zero())
    s = sample_s(inv, -1, (-1,), (2,), HALF)
    rho = sample_rho(v, (-1,), (2,), HALF)
    assert s.values == rho.values
