"""Storage: adapters, target registry, tickets, grants, upload queue."""

import pytest

from lakehouse.errors import (
    ConflictError,
    ForbiddenError,
    NotFoundError,
    TransportError,
    ValidationError,
)
from lakehouse.models import FileCategory, DedupKey, QueueState
from lakehouse.storage.adapters import (
    LocalStorageAdapter,
    MemoryStorageAdapter,
    UnconfiguredRemoteAdapter,
)


@pytest.fixture(params=["local", "memory"])
def adapter(request, tmp_path):
    if request.param == "local":
        return LocalStorageAdapter(tmp_path / "bucket")
    return MemoryStorageAdapter()


class TestAdapterContract:
    def test_roundtrip_is_byte_exact(self, adapter):
        payload = bytes(range(256)) * 3
        adapter.put_object("a/v1/blob.bin", payload)
        assert adapter.get_object("a/v1/blob.bin") == payload

    def test_overwrite_replaces(self, adapter):
        adapter.put_object("x", b"one")
        adapter.put_object("x", b"two")
        assert adapter.get_object("x") == b"two"

    def test_stat_absent_is_none(self, adapter):
        assert adapter.stat_object("missing") is None
        assert not adapter.object_exists("missing")

    def test_stat_reports_size(self, adapter):
        adapter.put_object("x", b"12345")
        assert adapter.stat_object("x").size == 5

    def test_get_missing_raises_not_found(self, adapter):
        with pytest.raises(NotFoundError):
            adapter.get_object("missing")

    def test_delete_is_idempotent(self, adapter):
        adapter.put_object("x", b"1")
        adapter.delete_object("x")
        adapter.delete_object("x")
        assert not adapter.object_exists("x")

    def test_list_objects_prefix(self, adapter):
        adapter.put_object("a/v1/x", b"1")
        adapter.put_object("a/v2/y", b"2")
        adapter.put_object("b/v1/z", b"3")
        assert adapter.list_objects("a/") == ["a/v1/x", "a/v2/y"]
        assert adapter.list_objects() == ["a/v1/x", "a/v2/y", "b/v1/z"]


class TestLocalAdapter:
    def test_rejects_path_traversal(self, tmp_path):
        adapter = LocalStorageAdapter(tmp_path / "bucket")
        for bad in ("../escape", "a/../../escape", "/abs", "a\\b", ""):
            with pytest.raises(ValidationError):
                adapter.put_object(bad, b"x")

    def test_partial_writes_never_visible(self, tmp_path):
        adapter = LocalStorageAdapter(tmp_path / "bucket")
        adapter.put_object("c/v1/f", b"done")
        leftovers = [p for p in (tmp_path / "bucket").rglob(".upload-*")]
        assert leftovers == []
        assert adapter.list_objects() == ["c/v1/f"]

    def test_unreachable_root_is_transport_error(self, tmp_path):
        adapter = LocalStorageAdapter(tmp_path / "bucket")
        (tmp_path / "bucket").rmdir()
        with pytest.raises(TransportError):
            adapter.stat_object("x")


class TestMemoryAdapterFaults:
    def test_fault_injection_raises_transport(self):
        adapter = MemoryStorageAdapter()
        adapter.put_object("x", b"1")
        adapter.fail_transport = True
        with pytest.raises(TransportError):
            adapter.stat_object("x")
        adapter.fail_transport = False
        assert adapter.object_exists("x")


class TestRemoteStub:
    def test_every_operation_fails_as_transport(self):
        stub = UnconfiguredRemoteAdapter("s3-compatible", "lab")
        with pytest.raises(TransportError):
            stub.put_object("x", b"1")
        with pytest.raises(TransportError):
            stub.stat_object("x")


class TestTargetRegistry:
    def test_register_requires_manager(self, context, owner):
        with pytest.raises(ForbiddenError):
            context.storage.register_target(owner, "local", "main")

    def test_register_and_get(self, context, manager):
        context.storage.register_target(manager, "local", "main")
        target = context.storage.get_target("local", "main")
        assert target.root_dir.endswith("/main")

    def test_duplicate_conflicts(self, context, manager):
        context.storage.register_target(manager, "local", "main")
        with pytest.raises(ConflictError):
            context.storage.register_target(manager, "local", "main")

    def test_unknown_target_not_found(self, context):
        with pytest.raises(NotFoundError):
            context.storage.get_target("local", "ghost")

    def test_remote_target_requires_credential(self, context, manager):
        with pytest.raises(ValidationError):
            context.storage.register_target(manager, "s3-compatible", "lab")
        credential = context.governance.add_credential(manager, "s3-compatible", "lab", "KEY")
        target = context.storage.register_target(
            manager, "s3-compatible", "lab", credential_id=credential.credential_id
        )
        assert target.credential_id == credential.credential_id

    def test_unknown_credential_not_found(self, context, manager):
        with pytest.raises(NotFoundError):
            context.storage.register_target(manager, "s3-compatible", "lab", credential_id="ghost")

    def test_public_dict_hides_root_dir(self, context, manager):
        context.storage.register_target(manager, "local", "main")
        payload = context.storage.list_targets()[0].public_dict()
        assert set(payload) == {"storage_type", "bucket", "credential_id"}

    def test_unsafe_bucket_name_rejected(self, context, manager):
        with pytest.raises(ValidationError):
            context.storage.register_target(manager, "local", "a/b")


@pytest.fixture
def collection(context, manager, owner):
    context.storage.register_target(manager, "local", "main")
    return context.catalogue.create_collection("trial", "local", "main", owner)


@pytest.fixture
def pending(context, owner, collection):
    key = DedupKey("zika.csv", collection.id, FileCategory.STRUCTURED, collection.bucket)
    return context.catalogue.register_file(key, owner)


class TestUploadTickets:
    def test_ticket_targets_raw_endpoint(self, context, collection, pending):
        ticket = context.storage.issue_upload_ticket(pending, collection)
        assert ticket.upload_url == f"http://testserver/raw/{ticket.ticket_id}"
        assert ticket.file_id == pending.id

    def test_ticket_is_also_a_queue_entry(self, context, collection, pending):
        ticket = context.storage.issue_upload_ticket(pending, collection)
        entry = context.storage.queue.get(ticket.ticket_id)
        assert entry.state is QueueState.WAITING
        assert entry.file_id == pending.id

    def test_committed_record_cannot_get_ticket(self, context, collection, pending):
        from lakehouse.storage.adapters import MemoryStorageAdapter

        target = context.storage.get_target(collection.storage_type, collection.bucket)
        memory = MemoryStorageAdapter()
        context.storage.use_adapter(target, memory)
        memory.put_object(pending.storage_path, b"x")
        committed = context.catalogue.commit_file(pending.id)
        with pytest.raises(ConflictError):
            context.storage.issue_upload_ticket(committed, collection)

    def test_resolve_honours_expiry(self, context, clock, collection, pending):
        ticket = context.storage.issue_upload_ticket(pending, collection)
        assert context.storage.resolve_upload_ticket(ticket.ticket_id).ticket_id == ticket.ticket_id
        clock.advance(context.config.upload_ticket_ttl_seconds + 1)
        with pytest.raises(ForbiddenError):
            context.storage.resolve_upload_ticket(ticket.ticket_id)

    def test_settled_ticket_rejected(self, context, collection, pending):
        ticket = context.storage.issue_upload_ticket(pending, collection)
        context.storage.queue.settle(ticket.ticket_id, "committed")
        with pytest.raises(ForbiddenError):
            context.storage.resolve_upload_ticket(ticket.ticket_id)

    def test_unknown_ticket_not_found(self, context):
        with pytest.raises(NotFoundError):
            context.storage.resolve_upload_ticket("ghost")


class TestUploadQueue:
    def test_settle_exactly_once(self, context, collection, pending):
        ticket = context.storage.issue_upload_ticket(pending, collection)
        assert context.storage.queue.settle(ticket.ticket_id, "committed") is True
        assert context.storage.queue.settle(ticket.ticket_id, "purged") is False
        entry = context.storage.queue.get(ticket.ticket_id)
        assert entry.outcome == "committed"

    def test_settle_for_file(self, context, collection, pending):
        ticket = context.storage.issue_upload_ticket(pending, collection)
        assert context.storage.queue.settle_for_file(pending.id, "committed") is True
        assert context.storage.queue.get(ticket.ticket_id).state is QueueState.SETTLED
        assert context.storage.queue.settle_for_file(pending.id, "committed") is False


class TestDownloadGrants:
    @pytest.fixture
    def committed(self, context, collection, pending):
        target = context.storage.get_target(collection.storage_type, collection.bucket)
        memory = MemoryStorageAdapter()
        context.storage.use_adapter(target, memory)
        memory.put_object(pending.storage_path, b"payload")
        return context.catalogue.commit_file(pending.id)

    def test_grant_flow(self, context, owner, collection, committed):
        grant = context.storage.issue_download_url(committed, collection, owner)
        grant_id = grant["url"].rsplit("/", 1)[1]
        assert context.storage.resolve_download_grant(grant_id) == committed.id

    def test_pending_record_is_not_downloadable(self, context, owner, collection, pending):
        with pytest.raises(NotFoundError):
            context.storage.issue_download_url(pending, collection, owner)

    def test_download_requires_access(self, context, reader, collection, committed):
        with pytest.raises(ForbiddenError):
            context.storage.issue_download_url(committed, collection, reader)

    def test_grant_expires(self, context, clock, owner, collection, committed):
        grant = context.storage.issue_download_url(committed, collection, owner)
        grant_id = grant["url"].rsplit("/", 1)[1]
        clock.advance(context.config.download_url_ttl_seconds + 1)
        with pytest.raises(ForbiddenError):
            context.storage.resolve_download_grant(grant_id)

    def test_unknown_grant_not_found(self, context):
        with pytest.raises(NotFoundError):
            context.storage.resolve_download_grant("ghost")
