"""Document store: named keyspaces of self-describing JSON records.

Two backends share one contract: an in-memory store for tests and a
single-file SQLite store for deployments. Both expose get/put/delete/scan
plus compare-and-swap; CAS is the only primitive the services rely on for
cross-writer serialization, so swapping in a remote document database
later only has to honour revision semantics.

Revisions are per-document integers starting at 1. `compare_and_swap`
with expected_revision=None is a create-only write.
"""

from __future__ import annotations

import copy
import json
import sqlite3
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

# Domain keyspaces. Index/plumbing keyspaces (file_versions, sessions,
# grants, targets, leases) live beside them in the same store.
KEYSPACES = (
    "users",
    "collections",
    "files",
    "visas",
    "credentials",
    "requests",
    "upload_queue",
)


@dataclass(frozen=True)
class Versioned:
    """A document body with its store revision."""

    value: dict
    revision: int


class CasMismatch(Exception):
    """Compare-and-swap lost the race; caller may re-read and retry."""


class DocumentStore(ABC):
    @abstractmethod
    def get(self, keyspace: str, key: str) -> Versioned | None:
        ...

    @abstractmethod
    def put(self, keyspace: str, key: str, value: dict) -> int:
        """Unconditional upsert. Returns the new revision."""

    @abstractmethod
    def delete(self, keyspace: str, key: str) -> bool:
        """Idempotent delete. Returns whether the document existed."""

    @abstractmethod
    def scan(self, keyspace: str, prefix: str = "") -> Iterator[tuple[str, Versioned]]:
        """Snapshot iteration over a keyspace in key order."""

    @abstractmethod
    def compare_and_swap(
        self, keyspace: str, key: str, expected_revision: int | None, value: dict
    ) -> int:
        """Write iff the current revision matches; None means create-only.

        Raises CasMismatch when the document changed underneath the caller
        (or already exists, for create-only writes).
        """

    @abstractmethod
    def keyspace_version(self, keyspace: str) -> int:
        """Counter bumped by every successful write or delete in a keyspace.

        Lets read paths cache parsed snapshots and invalidate them cheaply
        instead of re-scanning on every call.
        """

    def count(self, keyspace: str) -> int:
        return sum(1 for _ in self.scan(keyspace))


class InMemoryDocumentStore(DocumentStore):
    """Dict-backed store; safe for concurrent use within one process."""

    def __init__(self) -> None:
        self._data: dict[str, dict[str, tuple[dict, int]]] = {}
        self._versions: dict[str, int] = {}
        self._lock = threading.RLock()

    def get(self, keyspace: str, key: str) -> Versioned | None:
        with self._lock:
            entry = self._data.get(keyspace, {}).get(key)
            if entry is None:
                return None
            value, revision = entry
            return Versioned(copy.deepcopy(value), revision)

    def put(self, keyspace: str, key: str, value: dict) -> int:
        with self._lock:
            space = self._data.setdefault(keyspace, {})
            current = space.get(key)
            revision = (current[1] if current else 0) + 1
            space[key] = (copy.deepcopy(value), revision)
            self._versions[keyspace] = self._versions.get(keyspace, 0) + 1
            return revision

    def delete(self, keyspace: str, key: str) -> bool:
        with self._lock:
            space = self._data.get(keyspace, {})
            existed = space.pop(key, None) is not None
            if existed:
                self._versions[keyspace] = self._versions.get(keyspace, 0) + 1
            return existed

    def scan(self, keyspace: str, prefix: str = "") -> Iterator[tuple[str, Versioned]]:
        with self._lock:
            snapshot = [
                (key, Versioned(copy.deepcopy(value), revision))
                for key, (value, revision) in sorted(self._data.get(keyspace, {}).items())
                if key.startswith(prefix)
            ]
        return iter(snapshot)

    def compare_and_swap(
        self, keyspace: str, key: str, expected_revision: int | None, value: dict
    ) -> int:
        with self._lock:
            space = self._data.setdefault(keyspace, {})
            current = space.get(key)
            current_revision = current[1] if current else None
            if current_revision != expected_revision:
                raise CasMismatch(f"{keyspace}/{key}: revision {current_revision} != {expected_revision}")
            revision = (current_revision or 0) + 1
            space[key] = (copy.deepcopy(value), revision)
            self._versions[keyspace] = self._versions.get(keyspace, 0) + 1
            return revision

    def keyspace_version(self, keyspace: str) -> int:
        with self._lock:
            return self._versions.get(keyspace, 0)


class SqliteDocumentStore(DocumentStore):
    """Single-file store for single-node deployments.

    One writer lock in-process; BEGIN IMMEDIATE guards cross-process
    writers sharing the file. Bodies are stored as JSON text so the
    persisted form stays inspectable.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._conn.execute("PRAGMA synchronous=NORMAL")
        self._conn.execute(
            """
            CREATE TABLE IF NOT EXISTS documents (
                keyspace TEXT NOT NULL,
                key      TEXT NOT NULL,
                revision INTEGER NOT NULL,
                body     TEXT NOT NULL,
                PRIMARY KEY (keyspace, key)
            )
            """
        )
        self._conn.execute(
            """
            CREATE TABLE IF NOT EXISTS keyspace_versions (
                keyspace TEXT PRIMARY KEY,
                version  INTEGER NOT NULL
            )
            """
        )
        self._conn.commit()

    def _bump(self, keyspace: str) -> None:
        # Caller holds the lock and an open transaction.
        self._conn.execute(
            "INSERT INTO keyspace_versions (keyspace, version) VALUES (?, 1) "
            "ON CONFLICT(keyspace) DO UPDATE SET version=version+1",
            (keyspace,),
        )

    def get(self, keyspace: str, key: str) -> Versioned | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT body, revision FROM documents WHERE keyspace=? AND key=?",
                (keyspace, key),
            ).fetchone()
        if row is None:
            return None
        return Versioned(json.loads(row[0]), row[1])

    def put(self, keyspace: str, key: str, value: dict) -> int:
        body = json.dumps(value)
        with self._lock:
            self._conn.execute("BEGIN IMMEDIATE")
            try:
                row = self._conn.execute(
                    "SELECT revision FROM documents WHERE keyspace=? AND key=?",
                    (keyspace, key),
                ).fetchone()
                revision = (row[0] if row else 0) + 1
                self._conn.execute(
                    "INSERT INTO documents (keyspace, key, revision, body) VALUES (?,?,?,?) "
                    "ON CONFLICT(keyspace, key) DO UPDATE SET revision=excluded.revision, body=excluded.body",
                    (keyspace, key, revision, body),
                )
                self._bump(keyspace)
                self._conn.commit()
            except Exception:
                self._conn.rollback()
                raise
        return revision

    def delete(self, keyspace: str, key: str) -> bool:
        with self._lock:
            self._conn.execute("BEGIN IMMEDIATE")
            try:
                cursor = self._conn.execute(
                    "DELETE FROM documents WHERE keyspace=? AND key=?", (keyspace, key)
                )
                if cursor.rowcount > 0:
                    self._bump(keyspace)
                self._conn.commit()
            except Exception:
                self._conn.rollback()
                raise
        return cursor.rowcount > 0

    def scan(self, keyspace: str, prefix: str = "") -> Iterator[tuple[str, Versioned]]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT key, body, revision FROM documents "
                "WHERE keyspace=? AND key GLOB ? ORDER BY key",
                (keyspace, _glob_escape(prefix) + "*"),
            ).fetchall()
        return iter([(key, Versioned(json.loads(body), revision)) for key, body, revision in rows])

    def compare_and_swap(
        self, keyspace: str, key: str, expected_revision: int | None, value: dict
    ) -> int:
        body = json.dumps(value)
        with self._lock:
            self._conn.execute("BEGIN IMMEDIATE")
            try:
                row = self._conn.execute(
                    "SELECT revision FROM documents WHERE keyspace=? AND key=?",
                    (keyspace, key),
                ).fetchone()
                current_revision = row[0] if row else None
                if current_revision != expected_revision:
                    self._conn.rollback()
                    raise CasMismatch(
                        f"{keyspace}/{key}: revision {current_revision} != {expected_revision}"
                    )
                revision = (current_revision or 0) + 1
                self._conn.execute(
                    "INSERT INTO documents (keyspace, key, revision, body) VALUES (?,?,?,?) "
                    "ON CONFLICT(keyspace, key) DO UPDATE SET revision=excluded.revision, body=excluded.body",
                    (keyspace, key, revision, body),
                )
                self._bump(keyspace)
                self._conn.commit()
            except CasMismatch:
                raise
            except Exception:
                self._conn.rollback()
                raise
        return revision

    def keyspace_version(self, keyspace: str) -> int:
        with self._lock:
            row = self._conn.execute(
                "SELECT version FROM keyspace_versions WHERE keyspace=?", (keyspace,)
            ).fetchone()
        return row[0] if row else 0

    def checkpoint(self) -> None:
        """Flush the WAL into the main database file."""
        with self._lock:
            self._conn.execute("PRAGMA wal_checkpoint(TRUNCATE)")

    def close(self) -> None:
        with self._lock:
            self.checkpoint()
            self._conn.close()


def _glob_escape(text: str) -> str:
    out = []
    for ch in text:
        if ch in "*?[":
            out.append(f"[{ch}]")
        else:
            out.append(ch)
    return "".join(out)


def open_store(path: str | Path | None) -> DocumentStore:
    """In-memory when no path is configured, SQLite otherwise."""
    if path is None:
        return InMemoryDocumentStore()
    return SqliteDocumentStore(path)
