"""Tests for cache functionality."""

import sqlite3
import tempfile
from pathlib import Path

import pytest

from guarded_lab.cache import ReportCache
from guarded_lab.suite import CheckResult, RunReport


def _report(command: str = "suite") -> RunReport:
    return RunReport(command, "digest", (CheckResult("loeb_necessity", True, None, "loop frame refuted at bot"),), 0.5)


def test_cache_basic_operations():
    """Test basic cache operations."""
    with tempfile.TemporaryDirectory() as tmpdir:
        cache_path = Path(tmpdir) / "test_cache.db"
        cache = ReportCache(cache_path)

        report = _report()
        cache.store_report("digest", '{"stages": 8}', report)
        retrieved = cache.get_report("suite", "digest", '{"stages": 8}')

        assert retrieved == report

        # Test cache miss for different parameters
        assert cache.get_report("suite", "digest", '{"stages": 9}') is None

        # Test cache miss for different digest
        assert cache.get_report("suite", "other", '{"stages": 8}') is None

        # Test cache miss for different command
        assert cache.get_report("check-wf", "digest", '{"stages": 8}') is None

        cache.close()


def test_cache_is_keyed_by_version():
    """Test that entries written by another version are never returned."""
    with tempfile.TemporaryDirectory() as tmpdir:
        cache_path = Path(tmpdir) / "test_cache.db"

        with ReportCache(cache_path, version="0.0.1") as old:
            old.store_report("digest", "{}", _report())

        with ReportCache(cache_path, version="0.0.2") as new:
            assert new.get_report("suite", "digest", "{}") is None

        with ReportCache(cache_path, version="0.0.1") as old:
            assert old.get_report("suite", "digest", "{}") is not None


def test_cache_persistence():
    """Test that cache persists across instances."""
    with tempfile.TemporaryDirectory() as tmpdir:
        cache_path = Path(tmpdir) / "test_cache.db"

        cache1 = ReportCache(cache_path)
        cache1.store_report("digest", "{}", _report())
        cache1.close()

        cache2 = ReportCache(cache_path)
        retrieved = cache2.get_report("suite", "digest", "{}")
        assert retrieved is not None
        assert retrieved.results[0].name == "loeb_necessity"
        cache2.close()


def test_store_replaces_the_same_key():
    """Test that storing again under the same key keeps only the newer report."""
    with tempfile.TemporaryDirectory() as tmpdir:
        cache_path = Path(tmpdir) / "test_cache.db"

        with ReportCache(cache_path) as cache:
            cache.store_report("digest", "{}", _report())
            newer = RunReport("suite", "digest", (CheckResult("loeb_necessity", False, {"phi": "bot"}, "changed"),), 0.7)
            cache.store_report("digest", "{}", newer)

            assert cache.get_report("suite", "digest", "{}") == newer
            count = cache.connection.execute("SELECT COUNT(*) FROM report_cache").fetchone()[0]
            assert count == 1


def test_closed_cache_refuses_queries():
    """Test that a closed cache raises instead of reopening silently."""
    with tempfile.TemporaryDirectory() as tmpdir:
        cache = ReportCache(Path(tmpdir) / "test_cache.db")
        cache.close()
        cache.close()

        with pytest.raises(sqlite3.ProgrammingError):
            cache.get_report("suite", "digest", "{}")
