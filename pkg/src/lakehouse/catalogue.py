"""Data catalogue: collection index, file index, versioning, and search.

Version assignment is serialized per dedup key through a compare-and-swap
loop over a lineage document mapping version numbers to record ids, so
two concurrent registrations can never share a (key, version) pair. Auto
assignment continues from the current maximum; manual assignment may
leave gaps but rejects collisions. Lineages are append-only except that
the janitor may release the version of a purged pending record.

Pending records exist in the file index but stay out of every listing and
search until committed.
"""

from __future__ import annotations

import copy
import hashlib
import logging
from dataclasses import dataclass

from .config import Clock, ServiceConfig, default_clock
from .errors import (
    ConflictError,
    ForbiddenError,
    NotFoundError,
    PreconditionFailedError,
    ValidationError,
)
from .governance import GovernanceService
from .models import (
    Collection,
    DedupKey,
    FileCategory,
    FileQuery,
    FileRecord,
    FileStatus,
    StorageType,
    User,
    VersionOrigin,
    new_id,
    storage_path_for,
    to_iso,
    validate_path_segment,
)
from .store import CasMismatch, DocumentStore
from .storage.service import StorageService

logger = logging.getLogger(__name__)

DEFAULT_PAGE_LIMIT = 100
MAX_PAGE_LIMIT = 1000


def _clamp_page(offset: int, limit: int | None) -> tuple[int, int]:
    if offset < 0:
        raise ValidationError.for_fields("offset", message="offset must be nonnegative")
    if limit is None:
        return offset, DEFAULT_PAGE_LIMIT
    if limit < 1:
        raise ValidationError.for_fields("limit", message="limit must be positive")
    return offset, min(limit, MAX_PAGE_LIMIT)


def _lineage_doc_key(key: DedupKey) -> str:
    return hashlib.sha256(key.lineage_key().encode()).hexdigest()


@dataclass
class VersionAssignment:
    version: int
    storage_path: str


@dataclass
class _IndexEntry:
    """One committed record in the cached search index."""

    doc: dict
    record: FileRecord
    name_lower: str
    collection_id: str


class CatalogueService:
    def __init__(
        self,
        store: DocumentStore,
        governance: GovernanceService,
        storage: StorageService,
        config: ServiceConfig | None = None,
        clock: Clock = default_clock,
    ):
        self.store = store
        self.governance = governance
        self.storage = storage
        self.config = config or ServiceConfig()
        self.clock = clock
        self._index: tuple[int, list[_IndexEntry]] | None = None

    # -- collections --------------------------------------------------------

    def create_collection(
        self, name: str, storage_type: StorageType | str, bucket: str, owner: User
    ) -> Collection:
        storage_type = StorageType(storage_type)
        validate_path_segment(name, "name")
        self.storage.get_target(storage_type, bucket)  # unknown bucket -> not_found
        for _, doc in self.store.scan("collections"):
            if (
                doc.value["name"] == name
                and doc.value["storage_type"] == storage_type.value
                and doc.value["bucket"] == bucket
            ):
                raise ConflictError(
                    f"collection {name!r} already exists on ({storage_type.value}, {bucket})"
                )
        collection_id = new_id()
        visa = self.governance.issue_visa(collection_id, owner.id)
        collection = Collection(
            id=collection_id,
            name=name,
            storage_type=storage_type,
            bucket=bucket,
            owner_id=owner.id,
            visa_id=visa.visa_id,
            created_at=self.clock(),
        )
        self.store.put("collections", collection.id, collection.to_doc())
        return collection

    def get_collection(self, collection_id: str) -> Collection:
        found = self.store.get("collections", collection_id)
        if found is None:
            raise NotFoundError(f"collection {collection_id} not found")
        return Collection.from_doc(found.value)

    def list_collections(self, offset: int = 0, limit: int | None = None) -> list[Collection]:
        """All collections: metadata stays discoverable regardless of visas."""
        offset, limit = _clamp_page(offset, limit)
        collections = [Collection.from_doc(doc.value) for _, doc in self.store.scan("collections")]
        collections.sort(key=lambda c: (c.name, c.id))
        return collections[offset : offset + limit]

    # -- version resolution ---------------------------------------------------

    def resolve_version(
        self, key: DedupKey, requested: int | None = None, record_id: str | None = None
    ) -> VersionAssignment:
        """Reserve the next (or the requested) version for a dedup key.

        The reservation is the uniqueness authority: once a version is
        handed out for a key it is never handed out again while the
        holder exists, regardless of whether a record follows.
        """
        key.validate()
        if requested is not None and requested < 1:
            raise ValidationError.for_fields("version", message="requested version must be positive")
        collection = self.get_collection(key.collection_id)
        doc_key = _lineage_doc_key(key)
        holder = record_id or f"reservation:{new_id()}"
        while True:
            found = self.store.get("file_versions", doc_key)
            versions: dict[str, str] = dict(found.value["versions"]) if found else {}
            if requested is not None:
                if str(requested) in versions:
                    raise ConflictError(
                        f"version {requested} already taken for {key.file_name!r}"
                    )
                version = requested
            else:
                version = 1 + max((int(v) for v in versions), default=0)
            versions[str(version)] = holder
            doc = {
                "collection_id": key.collection_id,
                "file_category": key.file_category.value,
                "bucket": key.bucket,
                "file_name": key.file_name,
                "versions": versions,
            }
            try:
                self.store.compare_and_swap(
                    "file_versions", doc_key, found.revision if found else None, doc
                )
            except CasMismatch:
                continue  # lost the race; re-read and retry
            return VersionAssignment(version, storage_path_for(collection.name, version, key.file_name))

    def _release_version(self, key: DedupKey, version: int, holder: str) -> None:
        doc_key = _lineage_doc_key(key)
        while True:
            found = self.store.get("file_versions", doc_key)
            if found is None:
                return
            versions = dict(found.value["versions"])
            if versions.get(str(version)) != holder:
                return
            del versions[str(version)]
            doc = dict(found.value, versions=versions)
            try:
                self.store.compare_and_swap("file_versions", doc_key, found.revision, doc)
                return
            except CasMismatch:
                continue

    # -- file lifecycle ---------------------------------------------------------

    def register_file(
        self, key: DedupKey, uploader: User, requested_version: int | None = None
    ) -> FileRecord:
        key.validate()
        collection = self.get_collection(key.collection_id)
        if key.bucket != collection.bucket:
            raise ValidationError.for_fields(
                "bucket", message="dedup key bucket must match the collection's bucket"
            )
        if not self.governance.check_access(uploader, collection):
            raise ForbiddenError("uploader has no visa for this collection")
        record_id = new_id()
        assignment = self.resolve_version(key, requested_version, record_id=record_id)
        record = FileRecord(
            id=record_id,
            collection_id=collection.id,
            file_name=key.file_name,
            file_category=key.file_category,
            bucket=collection.bucket,
            version=assignment.version,
            version_origin=VersionOrigin.MANUAL if requested_version is not None else VersionOrigin.AUTO,
            storage_path=assignment.storage_path,
            status=FileStatus.PENDING,
            uploaded_by=uploader.id,
            requested_at=self.clock(),
        )
        self.store.put("files", record.id, record.to_doc())
        return record

    def get_record(self, file_id: str) -> FileRecord:
        found = self.store.get("files", file_id)
        if found is None:
            raise NotFoundError(f"file {file_id} not found")
        return FileRecord.from_doc(found.value)

    def commit_file(
        self, file_id: str, size_bytes: int | None = None, checksum: str | None = None
    ) -> FileRecord:
        """Commit after storage verification; idempotent on replays."""
        record = self.get_record(file_id)
        if record.status is FileStatus.COMMITTED:
            return record
        collection = self.get_collection(record.collection_id)
        target = self.storage.get_target(collection.storage_type, record.bucket)
        stat = self.storage.adapter_for(target).stat_object(record.storage_path)
        if stat is None:
            raise PreconditionFailedError(
                f"no object at {record.storage_path}; upload before committing"
            )
        if size_bytes is not None and size_bytes < 0:
            raise ValidationError.for_fields("size_bytes", message="size_bytes must be nonnegative")
        record.status = FileStatus.COMMITTED
        record.committed_at = self.clock()
        record.size_bytes = size_bytes if size_bytes is not None else stat.size
        record.checksum = checksum or record.checksum
        self.store.put("files", record.id, record.to_doc())
        return record

    def purge_pending(self, file_id: str) -> FileRecord:
        """Remove a pending record and release its version. Janitor-only path."""
        record = self.get_record(file_id)
        if record.status is not FileStatus.PENDING:
            raise ConflictError("only pending records may be purged")
        self.store.delete("files", file_id)
        self._release_version(record.dedup_key, record.version, record.id)
        return record

    # -- listing and search ------------------------------------------------------

    def _committed_index(self) -> list[_IndexEntry]:
        """Parsed, sorted committed records, rebuilt only after file writes.

        The version is read before the scan so a write landing mid-build
        invalidates the cache on the next call rather than being missed.
        """
        version = self.store.keyspace_version("files")
        cached = self._index
        if cached is not None and cached[0] == version:
            return cached[1]
        entries = []
        for _, doc in self.store.scan("files"):
            if doc.value["status"] != FileStatus.COMMITTED.value:
                continue
            entries.append(
                _IndexEntry(
                    doc=doc.value,
                    record=FileRecord.from_doc(doc.value),
                    name_lower=doc.value["file_name"].lower(),
                    collection_id=doc.value["collection_id"],
                )
            )
        entries.sort(key=lambda e: (e.doc["file_name"], e.doc["version"], e.doc["id"]))
        self._index = (version, entries)
        return entries

    @staticmethod
    def _page(entries: list[_IndexEntry], offset: int, limit: int) -> list[FileRecord]:
        # Shallow copies keep the cache isolated from callers: every record
        # field is an immutable scalar, enum, or datetime.
        return [copy.copy(e.record) for e in entries[offset : offset + limit]]

    def list_files(
        self, collection_id: str, offset: int = 0, limit: int | None = None
    ) -> list[FileRecord]:
        offset, limit = _clamp_page(offset, limit)
        self.get_collection(collection_id)  # unknown collection -> not_found
        hits = [e for e in self._committed_index() if e.collection_id == collection_id]
        return self._page(hits, offset, limit)

    def basic_search(self, keyword: str, offset: int = 0, limit: int | None = None) -> list[FileRecord]:
        """Committed records whose name contains the keyword, case-insensitively."""
        offset, limit = _clamp_page(offset, limit)
        keyword = keyword.strip()
        if not keyword:
            raise ValidationError.for_fields(
                "keyword", message="keyword must be nonempty; use browse for full listings"
            )
        needle = keyword.lower()
        hits = [e for e in self._committed_index() if needle in e.name_lower]
        return self._page(hits, offset, limit)

    def advanced_search(self, query: FileQuery) -> list[FileRecord]:
        """Conjunction of exact-match predicates; empty query means all committed."""
        offset, limit = _clamp_page(query.offset, query.limit)
        hits = [e for e in self._committed_index() if query.matches_doc(e.doc)]
        return self._page(hits, offset, limit)
