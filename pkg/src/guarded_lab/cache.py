"""Report cache database."""

import json
import logging
import sqlite3
import time
from pathlib import Path

from . import __version__
from .suite import RunReport

logger = logging.getLogger(__name__)

SCHEMA = """
CREATE TABLE IF NOT EXISTS report_cache (
    command TEXT NOT NULL,
    digest TEXT NOT NULL,
    params TEXT NOT NULL,
    version TEXT NOT NULL,
    report TEXT NOT NULL,
    created REAL NOT NULL,
    PRIMARY KEY (command, digest, params, version)
)
"""


class ReportCache:
    """
    SQLite store of finished run reports.

    An entry is found only by the exact command, input digest, canonical parameter
    JSON and package version it was stored under.
    """

    def __init__(self, cache_path: Path, version: str = __version__) -> None:
        self.cache_path = cache_path
        self.version = version
        self._connection: sqlite3.Connection | None = sqlite3.connect(str(cache_path))
        self._connection.execute("PRAGMA journal_mode=WAL")
        with self._connection:
            self._connection.execute(SCHEMA)

    @property
    def connection(self) -> sqlite3.Connection:
        if self._connection is None:
            raise sqlite3.ProgrammingError(f"report cache {self.cache_path} is closed")
        return self._connection

    def get_report(self, command: str, digest: str, params: str) -> RunReport | None:
        """
        Look up a report.

        Args:
            command: Subcommand name
            digest: Digest of the input files or parameters
            params: Canonical parameter JSON

        Returns:
            The cached report, or None on a miss
        """
        row = self.connection.execute(
            "SELECT report FROM report_cache WHERE command = ? AND digest = ? AND params = ? AND version = ?",
            (command, digest, params, self.version),
        ).fetchone()
        if row is None:
            logger.debug("cache miss for %s %s", command, digest[:12])
            return None
        logger.debug("cache hit for %s %s", command, digest[:12])
        return RunReport.from_json(json.loads(row[0]))

    def store_report(self, digest: str, params: str, report: RunReport) -> None:
        """Store `report` under its command, replacing any earlier report for the same key."""
        payload = json.dumps(report.to_json(), sort_keys=True)
        with self.connection:
            self.connection.execute(
                "INSERT OR REPLACE INTO report_cache (command, digest, params, version, report, created) VALUES (?, ?, ?, ?, ?, ?)",
                (report.command, digest, params, self.version, payload, time.time()),
            )

    def close(self) -> None:
        if self._connection is not None:
            self._connection.close()
            self._connection = None

    def __enter__(self) -> "ReportCache":
        return self

    def __exit__(self, exc_type: type[BaseException] | None, exc_val: BaseException | None, exc_tb: object) -> None:
        self.close()
