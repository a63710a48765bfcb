import json

import pytest

from hn_persistence.config.settings import HARNESS_SIZES
from hn_persistence.core.harness import (DRAWS_PER_INSTANCE, SLOPE_SIGN_FLIP, AcceptanceHarness, HarnessReport,
                                         InstanceSkipped, SuiteResult)


def test_cheap_suites_pass():
    report = AcceptanceHarness(seed=1, quick=True, progress=False,
                               suites=["oracle_equivalence", "example_a", "guardrails"]).run()
    assert [s.name for s in report.suites] == ["oracle_equivalence", "example_a", "guardrails"]
    assert report.ok, report.failed_invariants()
    assert all(s.checked + s.skipped > 0 for s in report.suites)
    doc = json.loads(json.dumps(report.to_dict()))
    assert doc['ok'] is True and doc['failed_invariants'] == []


def test_flipped_slopes_fail_the_run():
    report = AcceptanceHarness(seed=1, quick=True, progress=False, mutation=SLOPE_SIGN_FLIP,
                               suites=["oracle_equivalence"]).run()
    assert not report.ok
    assert report.failed_invariants()


def test_mutation_is_scoped_to_the_run():
    AcceptanceHarness(seed=1, quick=True, progress=False, mutation=SLOPE_SIGN_FLIP, suites=["guardrails"]).run()
    report = AcceptanceHarness(seed=1, quick=True, progress=False, suites=["oracle_equivalence"]).run()
    assert report.ok


def test_unknown_options_are_refused():
    with pytest.raises(ValueError):
        AcceptanceHarness(mutation="drop-pivots")
    with pytest.raises(ValueError):
        AcceptanceHarness(suites=["nonexistent"])


def test_report_bookkeeping():
    suite = SuiteResult("demo", checked=2, passed=1, failures=["hn-functoriality: instance 3: detail"])
    suite.note("seen")
    suite.note("seen")
    report = HarnessReport(seed=0, quick=True, mutation=None, suites=[suite, SuiteResult("other")])
    assert not report.ok
    assert report.failed_invariants() == ["hn-functoriality"]
    assert suite.notes == {"seen": 2}


@pytest.mark.slow
def test_full_quick_run():
    report = AcceptanceHarness(seed=0, quick=True, progress=False).run()
    assert len(report.suites) == len(AcceptanceHarness.SUITES)
    assert report.ok, report.failed_invariants()


def test_semistability_transfer_reaches_its_instance_count():
    report = AcceptanceHarness(seed=1, quick=True, progress=False, suites=["semistability_transfer"]).run()
    suite = report.suites[0]
    assert suite.ok, suite.failures
    assert suite.checked == HARNESS_SIZES["semistability_transfer"][1]
    assert "draws-exhausted" not in suite.notes


def test_unqualified_instances_are_skips():
    harness = AcceptanceHarness(progress=False)
    calls = []

    def every_other():
        calls.append(1)
        if len(calls) % 2:
            raise InstanceSkipped("zero")
        return None

    result = SuiteResult("demo")
    harness._until_checked(result, "demo", 3, every_other)
    assert (result.checked, result.passed, result.skipped) == (3, 3, 3)
    assert result.notes == {"zero": 3}

    def never():
        raise InstanceSkipped("unstable")

    starved = SuiteResult("starved")
    harness._until_checked(starved, "demo", 2, never)
    assert starved.checked == 0
    assert starved.skipped == 2 * DRAWS_PER_INSTANCE
    assert starved.notes["draws-exhausted"] == 1
