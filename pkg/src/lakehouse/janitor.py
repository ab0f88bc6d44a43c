"""Ingestion reconciler: settles upload-queue entries after ticket expiry.

Every ticket leaves a queue entry. Once an entry's ticket has expired,
a sweep either commits the record (object present in storage) or purges
the ghost pending record (object absent), settling the entry exactly
once via compare-and-swap. Purging additionally waits out a grace window
of grace_factor x TTL from issuance to tolerate clock skew between the
gateway and the backend; commits need no grace.

Transport errors never settle anything: an unreachable backend leaves
the entry waiting for the next sweep, and a full reconciliation aborts
before mutating state.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from .catalogue import CatalogueService
from .config import Clock, ServiceConfig, default_clock
from .errors import ConflictError, NotFoundError, TransportError
from .models import FileStatus, QueueEntry, QueueState, from_iso, to_iso
from .storage.service import StorageService, UploadQueue
from .store import CasMismatch, DocumentStore

logger = logging.getLogger(__name__)

SWEEP_LEASE_KEY = "janitor-sweep"
SWEEP_LEASE_TTL_SECONDS = 300


@dataclass
class SweepReport:
    committed: int = 0
    purged: int = 0
    skipped: int = 0

    def to_dict(self) -> dict:
        return {"committed": self.committed, "purged": self.purged, "skipped": self.skipped}

    def summary(self) -> str:
        return (
            f"sweep: committed={self.committed} purged={self.purged} skipped={self.skipped}"
        )


@dataclass
class ReconcileReport:
    purged: int = 0
    ok: int = 0
    flagged: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"purged": self.purged, "ok": self.ok, "flagged": list(self.flagged)}

    def summary(self) -> str:
        return f"reconcile: purged={self.purged} ok={self.ok} flagged={len(self.flagged)}"


class JanitorService:
    def __init__(
        self,
        store: DocumentStore,
        catalogue: CatalogueService,
        storage: StorageService,
        config: ServiceConfig | None = None,
        clock: Clock = default_clock,
    ):
        self.store = store
        self.catalogue = catalogue
        self.storage = storage
        self.config = config or ServiceConfig()
        self.clock = clock
        self.queue = storage.queue

    # -- sweep ----------------------------------------------------------------

    def sweep(self, now: datetime | None = None) -> SweepReport:
        """Settle every due queue entry. Safe to run any time, any frequency."""
        now = now or self.clock()
        self._acquire_lease(now)
        try:
            return self._sweep_locked(now)
        finally:
            self._release_lease()

    def _sweep_locked(self, now: datetime) -> SweepReport:
        report = SweepReport()
        for entry in self.queue.entries():
            if entry.state is not QueueState.WAITING:
                continue
            if now < entry.expires_at:
                report.skipped += 1
                continue
            try:
                self._settle_entry(entry, now, report)
            except TransportError as exc:
                # Never purge on uncertainty; retry on the next sweep.
                logger.warning("sweep: backend error on %s: %s", entry.ticket_id, exc)
                report.skipped += 1
        return report

    def _settle_entry(self, entry: QueueEntry, now: datetime, report: SweepReport) -> None:
        try:
            record = self.catalogue.get_record(entry.file_id)
        except NotFoundError:
            self.queue.settle(entry.ticket_id, "record_missing")
            return
        if record.status is FileStatus.COMMITTED:
            if self.queue.settle(entry.ticket_id, "committed"):
                report.committed += 1
            return
        collection = self.catalogue.get_collection(record.collection_id)
        target = self.storage.get_target(collection.storage_type, record.bucket)
        if self.storage.object_exists(target, record.storage_path):
            self.catalogue.commit_file(record.id)
            if self.queue.settle(entry.ticket_id, "committed"):
                report.committed += 1
            return
        if now < self._purge_deadline(entry):
            report.skipped += 1  # expired but inside the grace window
            return
        try:
            self.catalogue.purge_pending(record.id)
        except ConflictError:
            # Eager commit slipped in between checks: settle as committed.
            if self.queue.settle(entry.ticket_id, "committed"):
                report.committed += 1
            return
        except NotFoundError:
            pass  # already purged by a reconcile run
        if self.queue.settle(entry.ticket_id, "purged"):
            report.purged += 1

    def _purge_deadline(self, entry: QueueEntry) -> datetime:
        ttl = entry.expires_at - entry.issued_at
        return entry.issued_at + ttl * self.config.janitor_grace_factor

    # -- full reconciliation -----------------------------------------------------

    def reconcile_full(self, now: datetime | None = None) -> ReconcileReport:
        """Cross-check every catalogue record against storage.

        Two phases: plan all actions with read-only checks, then apply.
        Any transport error during planning aborts with no mutations.
        Committed records with missing objects are flagged, never deleted.
        """
        now = now or self.clock()
        entries_by_file = {e.file_id: e for e in self.queue.entries()}
        to_purge: list[str] = []
        report = ReconcileReport()
        ttl = timedelta(seconds=self.config.upload_ticket_ttl_seconds)
        grace = ttl * self.config.janitor_grace_factor

        for _, doc in self.store.scan("files"):
            record = self.catalogue.get_record(doc.value["id"])
            collection = self.catalogue.get_collection(record.collection_id)
            target = self.storage.get_target(collection.storage_type, record.bucket)
            exists = self.storage.object_exists(target, record.storage_path)  # may raise
            if record.status is FileStatus.COMMITTED:
                if exists:
                    report.ok += 1
                else:
                    report.flagged.append(record.id)
            else:
                entry = entries_by_file.get(record.id)
                if entry is not None and entry.state is QueueState.WAITING:
                    deadline = self._purge_deadline(entry)
                elif entry is not None:
                    deadline = now  # settled entry left a pending record behind
                else:
                    deadline = record.requested_at + grace
                if not exists and now >= deadline:
                    to_purge.append(record.id)
                else:
                    report.ok += 1

        for file_id in to_purge:
            try:
                self.catalogue.purge_pending(file_id)
                report.purged += 1
            except (NotFoundError, ConflictError):
                report.ok += 1  # committed or purged since planning
        for entry in entries_by_file.values():
            if entry.state is QueueState.WAITING and entry.file_id in set(to_purge):
                self.queue.settle(entry.ticket_id, "purged")
        return report

    # -- singleton lease ------------------------------------------------------------

    def _acquire_lease(self, now: datetime) -> None:
        lease = {
            "holder": id(self),
            "acquired_at": to_iso(now),
            "expires_at": to_iso(now + timedelta(seconds=SWEEP_LEASE_TTL_SECONDS)),
        }
        found = self.store.get("leases", SWEEP_LEASE_KEY)
        try:
            if found is None:
                self.store.compare_and_swap("leases", SWEEP_LEASE_KEY, None, lease)
            elif now >= from_iso(found.value["expires_at"]):
                self.store.compare_and_swap("leases", SWEEP_LEASE_KEY, found.revision, lease)
            else:
                raise ConflictError("another sweep is already running")
        except CasMismatch:
            raise ConflictError("another sweep is already running") from None

    def _release_lease(self) -> None:
        self.store.delete("leases", SWEEP_LEASE_KEY)


class IntervalSweeper(threading.Thread):
    """Background trigger calling sweep() every interval_seconds."""

    def __init__(self, janitor: JanitorService, interval_seconds: float):
        super().__init__(name="janitor-sweeper", daemon=True)
        self.janitor = janitor
        self.interval = interval_seconds
        self._halt = threading.Event()

    def run(self) -> None:
        while not self._halt.wait(self.interval):
            try:
                report = self.janitor.sweep()
                if report.committed or report.purged:
                    logger.info(report.summary())
            except ConflictError:
                pass  # another trigger holds the lease
            except Exception:
                logger.exception("interval sweep failed")

    def stop(self) -> None:
        self._halt.set()
