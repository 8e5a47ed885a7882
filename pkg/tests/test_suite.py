"""Tests for the acceptance battery and its reports."""

import json
import tempfile
from pathlib import Path

import pytest

from guarded_lab import theory_kit
from guarded_lab.errors import ExplosionError
from guarded_lab.order_core import AxiomCheck, AxiomReport
from guarded_lab.suite import (
    SUITE_CHECKS,
    CheckResult,
    RunReport,
    SuiteOptions,
    check_adequacy,
    check_bag_counts,
    check_classifying_filters,
    check_clock_categories,
    check_guarded_fixpoints,
    check_loeb_necessity,
    check_loeb_soundness,
    check_plump_ordering,
    check_stream_programs,
    digest_files,
    digest_params,
    jsonable,
    report_check,
    run_suite,
)
from guarded_lab.wtypes import WTree

SMALL = SuiteOptions(stages=3, bound=1, max_k=2, seed=0, max_poset_size=3)


def test_suite_has_twelve_checks():
    """Test the names of the battery."""
    assert len(SUITE_CHECKS) == 12
    assert "loeb_soundness" in SUITE_CHECKS
    assert "global_adequacy" in SUITE_CHECKS


def test_small_checks_pass():
    """Test each enumerative check at a reduced scale."""
    for check in (
        check_loeb_soundness,
        check_loeb_necessity,
        check_guarded_fixpoints,
        check_stream_programs,
        check_classifying_filters,
        check_bag_counts,
        check_plump_ordering,
        check_adequacy,
    ):
        result = check(SMALL)
        assert result.passed, result


def test_run_suite_small():
    """Test the whole battery at a reduced scale, merged in name order."""
    report = run_suite(SMALL._replace(workers=4))

    assert report.ok, report.failures()
    assert [r.name for r in report.results] == sorted(SUITE_CHECKS)
    assert report.command == "suite"
    assert report.inputs == digest_params(SMALL.params())


def test_run_suite_is_deterministic():
    """Test that two runs agree on everything except elapsed time."""
    names = ["loeb_necessity", "stream_programs", "plump_ordering"]
    first = run_suite(SMALL, names).to_json()
    second = run_suite(SMALL._replace(workers=3), names).to_json()

    first.pop("elapsed")
    second.pop("elapsed")
    assert first == second


def test_run_suite_rejects_unknown_checks():
    """Test that an unknown check name raises KeyError."""
    with pytest.raises(KeyError):
        run_suite(SMALL, ["no_such_check"])


def test_lab_errors_become_failed_results(monkeypatch):
    """Test that a check raising a LabError is reported, not propagated."""

    def explode(options):
        raise ExplosionError("everything", 10, 1)

    monkeypatch.setitem(SUITE_CHECKS, "loeb_necessity", explode)
    report = run_suite(SMALL, ["loeb_necessity"])

    assert not report.ok
    assert report.results[0].witness == {"error": "ExplosionError"}


def test_report_round_trip():
    """Test that a report survives conversion to JSON and back."""
    report = RunReport("suite", "abc", (CheckResult("a", True), CheckResult("b", False, {"x": [1, 2]}, "detail")), 1.23456)
    doc = json.loads(json.dumps(report.to_json()))

    assert doc["elapsed"] == 1.235
    restored = RunReport.from_json(doc)
    assert restored.results == report.results
    assert [r.name for r in restored.failures()] == ["b"]


def test_jsonable_witnesses():
    """Test conversion of witnesses to stable JSON values."""
    assert jsonable((1, "a")) == [1, "a"]
    assert jsonable(frozenset({3, 1, 2})) == [1, 2, 3]
    assert jsonable(WTree("node", (WTree("leaf"),))) == "node(leaf)"
    assert jsonable({1: (2,)}) == {"1": [2]}
    assert jsonable(None) is None


def test_report_check_names_first_failure():
    """Test folding an axiom report into one result."""
    report = AxiomReport((AxiomCheck("a", True), AxiomCheck("b", False, (1, 2)), AxiomCheck("c", False, (3,))))
    result = report_check("combined", report)

    assert not result.passed
    assert result.witness == {"axiom": "b", "witness": [1, 2]}
    assert report_check("fine", AxiomReport((AxiomCheck("a", True),))).passed


def test_digests():
    """Test that digests depend on content and parameters only."""
    with tempfile.TemporaryDirectory() as tmpdir:
        tmp_path = Path(tmpdir)
        first = tmp_path / "first.json"
        second = tmp_path / "second.json"
        first.write_text("{}")
        second.write_text("{}")

        assert digest_files([first]) == digest_files([second])
        second.write_text("[]")
        assert digest_files([first]) != digest_files([second])

    assert digest_params({"a": 1, "b": 2}) == digest_params({"b": 2, "a": 1})
    assert SuiteOptions(workers=1).params() == SuiteOptions(workers=8).params()


def test_bag_counts_catch_an_accept_everything_verifier(monkeypatch):
    """Test that bag counts are checked against direct sequent satisfaction."""
    monkeypatch.setattr(theory_kit, "bag_model_holds", lambda B, model: True)
    result = check_bag_counts(SMALL)

    assert not result.passed
    assert result.detail == "counts differ"


def test_clock_categories_name_the_law_fragment():
    """Test that the clock category result states where the composition laws were checked."""
    result = check_clock_categories(SMALL)

    assert result.passed, result
    assert result.detail == "1 clocks, depths <= 2; composition laws on 2 clocks, depths <= 1"
