"""Tests for CLI functionality."""

import json
import tempfile
from pathlib import Path

from click.testing import CliRunner

from guarded_lab import __version__
from guarded_lab.cli import main

DATA = Path(__file__).parent.parent / "data"


def test_check_wf_passes_on_omega():
    """Test that the strict order of a chain is a compatible well-founded relation."""
    runner = CliRunner()
    result = runner.invoke(main, ["check-wf", str(DATA / "omega5.json")])

    assert result.exit_code == 0
    assert "well_foundedness" in result.output
    assert "✓ PASS" in result.output


def test_check_wf_fails_on_a_loop():
    """Test that a reflexive prec pair fails with exit status 1 and a JSON witness."""
    with tempfile.TemporaryDirectory() as tmpdir:
        tmp_path = Path(tmpdir)
        poset = tmp_path / "loop.json"
        report = tmp_path / "report.json"
        poset.write_text(json.dumps({"elements": [0], "prec": [[0, 0]]}))

        runner = CliRunner()
        result = runner.invoke(main, ["check-wf", str(poset), "--json", str(report)])

        assert result.exit_code == 1
        doc = json.loads(report.read_text())
        failed = [r for r in doc["results"] if not r["passed"]]
        assert [r["name"] for r in failed] == ["well_foundedness"]
        assert failed[0]["witness"] == [0, 0]


def test_malformed_input_exits_with_status_2():
    """Test that a malformed poset names the offending JSON path."""
    with tempfile.TemporaryDirectory() as tmpdir:
        poset = Path(tmpdir) / "bad.json"
        poset.write_text(json.dumps({"elements": [0, 1], "leq": [[0, 1], [1, 2]]}))

        runner = CliRunner()
        result = runner.invoke(main, ["check-wf", str(poset)])

        assert result.exit_code == 2
        assert "$.leq[1][1]" in result.output


def test_check_loeb():
    """Test Loeb induction on a downset frame and on the loop frame."""
    runner = CliRunner()

    result = runner.invoke(main, ["check-loeb", str(DATA / "omega5.json")])
    assert result.exit_code == 0

    result = runner.invoke(main, ["check-loeb", str(DATA / "loop-frame.json")])
    assert result.exit_code == 1
    assert "FAIL" in result.output


def test_log_file_functionality():
    """Test that log file functionality captures the results table."""
    with tempfile.TemporaryDirectory() as tmpdir:
        log_file = Path(tmpdir) / "output.log"

        runner = CliRunner()
        result = runner.invoke(main, ["--log-file", str(log_file), "check-loeb", str(DATA / "omega5.json")])

        assert result.exit_code == 0
        assert log_file.exists()
        log_content = log_file.read_text()
        assert "check-loeb results" in log_content
        assert "✓ PASS" in log_content
        assert "Total time" in log_content


def test_plump_writes_a_poset():
    """Test that the unary plump order at depth 6 is printed as a 6-point poset."""
    runner = CliRunner()
    result = runner.invoke(main, ["plump", str(DATA / "unary.json"), "--depth", "6"])

    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert len(doc["elements"]) == 6
    assert len(doc["prec"]) == 15

    with tempfile.TemporaryDirectory() as tmpdir:
        output = Path(tmpdir) / "plump.json"
        result = runner.invoke(main, ["plump", str(DATA / "binary.json"), "--output", str(output)])

        assert result.exit_code == 0
        assert len(json.loads(output.read_text())["elements"]) == 3

        # the written poset is itself a valid input
        result = runner.invoke(main, ["check-wf", str(output)])
        assert result.exit_code == 0


def test_plump_cap():
    """Test that too many trees is reported as malformed input."""
    runner = CliRunner()
    result = runner.invoke(main, ["plump", str(DATA / "binary.json"), "--depth", "5", "--cap", "10"])
    assert result.exit_code == 2


def test_fixpoint():
    """Test the guarded fixed point of the naturals program."""
    with tempfile.TemporaryDirectory() as tmpdir:
        report = Path(tmpdir) / "report.json"

        runner = CliRunner()
        result = runner.invoke(main, ["fixpoint", str(DATA / "naturals.json"), "--stages", "4", "--json", str(report)])

        assert result.exit_code == 0
        assert "(0, 1, 2, 3)" in result.output
        doc = json.loads(report.read_text())
        assert [r["name"] for r in doc["results"]] == ["fixed_point", "unique"]
        assert doc["command"] == "fixpoint"


def test_eval_stream():
    """Test taking elements of coinductive streams."""
    runner = CliRunner()

    result = runner.invoke(main, ["eval-stream", "naturals", "--take", "4"])
    assert result.exit_code == 0
    assert "[0, 1, 2, 3]" in result.output

    result = runner.invoke(main, ["eval-stream", "alternating", "--take", "3"])
    assert "[0, 1, 0]" in result.output

    result = runner.invoke(main, ["eval-stream", str(DATA / "naturals.json"), "--take", "2"])
    assert "[0, 1]" in result.output

    result = runner.invoke(main, ["eval-stream", "no-such-stream"])
    assert result.exit_code == 2


def test_options_from_environment():
    """Test that options can be set through GUARDED_LAB_ variables."""
    runner = CliRunner()
    result = runner.invoke(main, ["eval-stream", "naturals", "--take", "3"], env={"GUARDED_LAB_EVAL_STREAM_MODULUS": "2"})

    assert result.exit_code == 0
    assert "[0, 1, 0]" in result.output


def test_models_of_empty_theory():
    """Test that the empty theory has exactly one model."""
    runner = CliRunner()
    result = runner.invoke(main, ["models", str(DATA / "empty-theory.json")])

    assert result.exit_code == 0
    assert "1 model" in result.output


def test_filters_of_diamond():
    """Test that the diamond has four filters, all of them models."""
    runner = CliRunner()
    result = runner.invoke(main, ["filters", str(DATA / "diamond.json")])

    assert result.exit_code == 0
    assert "4 filters" in result.output


def test_bag_counts():
    """Test IBag model counts of the filter theory of a 2-chain."""
    with tempfile.TemporaryDirectory() as tmpdir:
        report = Path(tmpdir) / "report.json"

        runner = CliRunner()
        result = runner.invoke(main, ["bag", str(DATA / "chain2-filters.json"), "--max-k", "3", "--inhabited", "--json", str(report)])

        assert result.exit_code == 0
        doc = json.loads(report.read_text())
        assert [r["name"] for r in doc["results"]] == ["size_1", "size_2", "size_3"]
        assert doc["results"][2]["detail"] == "8 of 8"


def test_check_multiclock_small():
    """Test the clock category checks on a small fragment."""
    with tempfile.TemporaryDirectory() as tmpdir:
        report = Path(tmpdir) / "report.json"

        runner = CliRunner()
        result = runner.invoke(main, ["check-multiclock", "--bound", "1", "--stages", "3", "--json", str(report)])

        assert result.exit_code == 0
        names = [r["name"] for r in json.loads(report.read_text())["results"]]
        assert names == ["clock_categories", "clock_presheaf_laws", "force_iso", "clock_irrelevance"]


def test_suite_uses_cache():
    """Test that a second identical suite run is answered from the cache."""
    with tempfile.TemporaryDirectory() as tmpdir:
        tmp_path = Path(tmpdir)
        cache_db = tmp_path / "reports.db"
        first = tmp_path / "first.json"
        second = tmp_path / "second.json"
        only = ["--only", "loeb_necessity", "--only", "plump_ordering"]
        args = ["suite", "--stages", "3", "--max-poset-size", "3", *only, "--cache-db", str(cache_db)]

        runner = CliRunner()
        result = runner.invoke(main, args + ["--json", str(first)])
        assert result.exit_code == 0
        assert "Using cached report" not in result.output

        result = runner.invoke(main, args + ["--json", str(second)])
        assert result.exit_code == 0
        assert "Using cached report" in result.output

        first_doc = json.loads(first.read_text())
        second_doc = json.loads(second.read_text())
        assert [r["name"] for r in first_doc["results"]] == ["loeb_necessity", "plump_ordering"]
        assert first_doc["results"] == second_doc["results"]


def test_version():
    """Test the version option."""
    runner = CliRunner()
    result = runner.invoke(main, ["--version"])

    assert result.exit_code == 0
    assert __version__ in result.output
