"""Storage service: target registry, upload tickets, download grants.

Tickets and janitor queue entries are one document — issuing a ticket IS
enqueuing it, so the two can never diverge. Ticket and grant URLs point
at the gateway's raw endpoints for the local backend; the URL authorizes
exactly one object path until its expiry.
"""

from __future__ import annotations

import logging
from datetime import timedelta

from ..config import Clock, ServiceConfig, default_clock
from ..errors import (
    ConflictError,
    ForbiddenError,
    NotFoundError,
    ValidationError,
)
from ..governance import GovernanceService
from ..models import (
    Collection,
    FileRecord,
    FileStatus,
    QueueEntry,
    QueueState,
    Role,
    StorageTarget,
    StorageType,
    UploadTicket,
    User,
    from_iso,
    new_id,
    to_iso,
    validate_path_segment,
)
from ..store import CasMismatch, DocumentStore
from .adapters import (
    LocalStorageAdapter,
    MemoryStorageAdapter,
    StorageAdapter,
    UnconfiguredRemoteAdapter,
)

logger = logging.getLogger(__name__)


class UploadQueue:
    """Persisted upload queue; one entry per ticket, settled at most once."""

    def __init__(self, store: DocumentStore, clock: Clock = default_clock):
        self.store = store
        self.clock = clock

    def enqueue(self, ticket: UploadTicket) -> QueueEntry:
        entry = QueueEntry(
            ticket_id=ticket.ticket_id,
            file_id=ticket.file_id,
            upload_url=ticket.upload_url,
            issued_at=ticket.issued_at,
            expires_at=ticket.expires_at,
        )
        try:
            self.store.compare_and_swap("upload_queue", entry.ticket_id, None, entry.to_doc())
        except CasMismatch:
            raise ConflictError(f"ticket {ticket.ticket_id} is already enqueued") from None
        return entry

    def get(self, ticket_id: str) -> QueueEntry:
        found = self.store.get("upload_queue", ticket_id)
        if found is None:
            raise NotFoundError(f"upload ticket {ticket_id} not found")
        return QueueEntry.from_doc(found.value)

    def entries(self) -> list[QueueEntry]:
        return [QueueEntry.from_doc(doc.value) for _, doc in self.store.scan("upload_queue")]

    def settle(self, ticket_id: str, outcome: str) -> bool:
        """CAS waiting -> settled; False when another writer settled first."""
        found = self.store.get("upload_queue", ticket_id)
        if found is None or found.value["state"] != QueueState.WAITING.value:
            return False
        entry = QueueEntry.from_doc(found.value)
        entry.state = QueueState.SETTLED
        entry.settled_at = self.clock()
        entry.outcome = outcome
        try:
            self.store.compare_and_swap("upload_queue", ticket_id, found.revision, entry.to_doc())
            return True
        except CasMismatch:
            return False

    def settle_for_file(self, file_id: str, outcome: str) -> bool:
        for entry in self.entries():
            if entry.file_id == file_id and entry.state is QueueState.WAITING:
                return self.settle(entry.ticket_id, outcome)
        return False


class StorageService:
    def __init__(
        self,
        store: DocumentStore,
        governance: GovernanceService,
        config: ServiceConfig | None = None,
        clock: Clock = default_clock,
        queue: UploadQueue | None = None,
    ):
        self.store = store
        self.governance = governance
        self.config = config or ServiceConfig()
        self.clock = clock
        self.queue = queue or UploadQueue(store, clock)
        self._adapters: dict[str, StorageAdapter] = {}

    # -- target registry ---------------------------------------------------

    def register_target(
        self,
        actor: User,
        storage_type: StorageType | str,
        bucket: str,
        credential_id: str | None = None,
        root_dir: str | None = None,
        endpoint: str | None = None,
    ) -> StorageTarget:
        if actor.role is not Role.DATA_MANAGER:
            raise ForbiddenError("only data managers may register storage targets")
        storage_type = StorageType(storage_type)
        validate_path_segment(bucket, "bucket")
        if storage_type is not StorageType.LOCAL:
            if credential_id is None:
                raise ValidationError.for_fields(
                    "credential_id", message="non-local targets require a vault credential"
                )
            self.governance.get_credential(credential_id)  # must exist
        target = StorageTarget(
            storage_type=storage_type,
            bucket=bucket,
            credential_id=credential_id,
            root_dir=root_dir or self._default_root(bucket, storage_type),
            endpoint=endpoint,
        )
        key = StorageTarget.key_for(storage_type, bucket)
        try:
            self.store.compare_and_swap("targets", key, None, target.to_doc())
        except CasMismatch:
            raise ConflictError(f"target ({storage_type.value}, {bucket}) already registered") from None
        return target

    def _default_root(self, bucket: str, storage_type: StorageType) -> str | None:
        if storage_type is not StorageType.LOCAL:
            return None
        base = self.config.local_storage_root
        if base is None:
            raise ValidationError(
                "local_storage_root is not configured; cannot derive a bucket root directory"
            )
        return str(f"{base}/{bucket}")

    def list_targets(self) -> list[StorageTarget]:
        targets = [StorageTarget.from_doc(doc.value) for _, doc in self.store.scan("targets")]
        targets.sort(key=lambda t: (t.storage_type.value, t.bucket))
        return targets

    def get_target(self, storage_type: StorageType | str, bucket: str) -> StorageTarget:
        storage_type = StorageType(storage_type)
        found = self.store.get("targets", StorageTarget.key_for(storage_type, bucket))
        if found is None:
            raise NotFoundError(f"storage target ({storage_type.value}, {bucket}) not registered")
        return StorageTarget.from_doc(found.value)

    def adapter_for(self, target: StorageTarget) -> StorageAdapter:
        key = StorageTarget.key_for(target.storage_type, target.bucket)
        adapter = self._adapters.get(key)
        if adapter is None:
            adapter = self._build_adapter(target)
            self._adapters[key] = adapter
        return adapter

    def _build_adapter(self, target: StorageTarget) -> StorageAdapter:
        if target.storage_type is StorageType.LOCAL:
            if target.root_dir is None:
                raise ValidationError(f"local target {target.bucket} has no root directory")
            return LocalStorageAdapter(target.root_dir)
        return UnconfiguredRemoteAdapter(target.storage_type.value, target.bucket)

    def use_adapter(self, target: StorageTarget, adapter: StorageAdapter) -> None:
        """Pin an adapter instance for a target (tests, future remote wiring)."""
        self._adapters[StorageTarget.key_for(target.storage_type, target.bucket)] = adapter

    # -- tickets and grants --------------------------------------------------

    def issue_upload_ticket(self, record: FileRecord, collection: Collection) -> UploadTicket:
        if record.status is not FileStatus.PENDING:
            raise ConflictError(f"record {record.id} is already committed")
        self.get_target(collection.storage_type, record.bucket)  # must be registered
        now = self.clock()
        ticket_id = new_id()
        ticket = UploadTicket(
            ticket_id=ticket_id,
            file_id=record.id,
            upload_url=f"{self.config.resolved_base_url()}/raw/{ticket_id}",
            issued_at=now,
            expires_at=now + timedelta(seconds=self.config.upload_ticket_ttl_seconds),
        )
        self.queue.enqueue(ticket)
        return ticket

    def issue_download_url(self, record: FileRecord, collection: Collection, caller: User) -> dict:
        if record.status is not FileStatus.COMMITTED:
            raise NotFoundError(f"file {record.id} is not committed")
        if not self.governance.check_access(caller, collection):
            raise ForbiddenError("caller has no visa for this collection")
        now = self.clock()
        grant_id = new_id()
        grant = {
            "grant_id": grant_id,
            "file_id": record.id,
            "issued_at": to_iso(now),
            "expires_at": to_iso(now + timedelta(seconds=self.config.download_url_ttl_seconds)),
        }
        self.store.put("grants", grant_id, grant)
        return {
            "url": f"{self.config.resolved_base_url()}/raw/{grant_id}",
            "file_id": record.id,
            "expires_at": grant["expires_at"],
        }

    def resolve_upload_ticket(self, ticket_id: str) -> QueueEntry:
        """Validate a raw-upload capability: must exist, be waiting, be unexpired."""
        entry = self.queue.get(ticket_id)
        if entry.state is not QueueState.WAITING:
            raise ForbiddenError("upload ticket is no longer valid")
        if self.clock() >= entry.expires_at:
            raise ForbiddenError("upload ticket has expired")
        return entry

    def resolve_download_grant(self, grant_id: str) -> str:
        found = self.store.get("grants", grant_id)
        if found is None:
            raise NotFoundError(f"download grant {grant_id} not found")
        if self.clock() >= from_iso(found.value["expires_at"]):
            raise ForbiddenError("download URL has expired")
        return found.value["file_id"]

    # -- direct object operations ---------------------------------------------

    def object_exists(self, target: StorageTarget, path: str) -> bool:
        return self.adapter_for(target).object_exists(path)

    def delete_object(self, target: StorageTarget, path: str) -> None:
        self.adapter_for(target).delete_object(path)
