"""Facades between the route layer and the services.

One facade per service module. Routes hold no business logic: they
validate, resolve authentication, call exactly one facade method, and
serialize the result. Cross-module orchestration (upload-request =
register + ticket, commit = commit + queue settle) lives here so the
services stay single-purpose.
"""

from __future__ import annotations

import logging

from ..errors import ForbiddenError, ValidationError
from ..models import (
    DedupKey,
    FileCategory,
    FileQuery,
    Role,
    StorageType,
    User,
)
from ..runtime import ServiceContext

logger = logging.getLogger(__name__)


class GovernanceFacade:
    def __init__(self, context: ServiceContext):
        self.ctx = context

    def login(self, login_or_email: str, password: str) -> dict:
        token = self.ctx.governance.login(login_or_email, password)
        user = self.ctx.governance.get_user(token.user_id)
        return {**token.public_dict(), "user": user.public_dict()}

    def create_user(self, body, actor: User | None) -> dict:
        user = self.ctx.governance.create_user(
            body.email, body.login, body.password, Role(body.role), actor=actor
        )
        return user.public_dict()

    def update_user(self, user_id: str, body, actor: User) -> dict:
        user = self.ctx.governance.update_user(
            user_id, actor, email=body.email, password=body.password, role=body.role
        )
        return user.public_dict()

    def delete_user(self, user_id: str, actor: User) -> dict:
        self.ctx.governance.delete_user(user_id, actor)
        return {"deleted": user_id}

    def password_reset(self, user_id: str, body, actor: User | None) -> dict:
        if body.reset_token is None and body.new_password is None:
            if actor is None:
                raise ForbiddenError("issuing a reset token requires authentication")
            token = self.ctx.governance.issue_password_reset(user_id, actor)
            return {"reset_token": token}
        if body.reset_token is None or body.new_password is None:
            raise ValidationError.for_fields(
                "reset_token", "new_password", message="redeeming needs both reset_token and new_password"
            )
        user = self.ctx.governance.redeem_password_reset(user_id, body.reset_token, body.new_password)
        return {"reset": user.id}

    def submit_access_request(self, body, actor: User) -> dict:
        collection = self.ctx.catalogue.get_collection(body.collection_id)
        request = self.ctx.governance.submit_access_request(actor, collection, body.message)
        return request.public_dict()

    def list_access_requests(self, collection_id: str | None, actor: User) -> list[dict]:
        collection = (
            self.ctx.catalogue.get_collection(collection_id) if collection_id is not None else None
        )
        requests = self.ctx.governance.list_access_requests(actor, collection)
        return [r.public_dict() for r in requests]

    def decide_access_request(self, request_id: str, body, actor: User) -> dict:
        request = self.ctx.governance.get_access_request(request_id)
        collection = self.ctx.catalogue.get_collection(request.collection_id)
        decided = self.ctx.governance.decide_access_request(request_id, body.decision, actor, collection)
        return decided.public_dict()

    def set_grant(self, visa_id: str, user_id: str, action: str, actor: User) -> dict:
        self.ctx.governance.get_user(user_id)  # subject must exist
        visa = self.ctx.governance.set_visa_grant(visa_id, user_id, action, actor)
        return visa.public_dict()

    def add_credential(self, body, actor: User) -> dict:
        credential = self.ctx.governance.add_credential(
            actor, StorageType(body.storage_type), body.label, body.key_material
        )
        return credential.public_dict()


class CatalogueFacade:
    def __init__(self, context: ServiceContext):
        self.ctx = context

    def create_collection(self, body, actor: User) -> dict:
        collection = self.ctx.catalogue.create_collection(
            body.name, StorageType(body.storage_type), body.bucket, actor
        )
        return collection.public_dict()

    def list_collections(self, offset: int, limit: int | None) -> list[dict]:
        return [c.public_dict() for c in self.ctx.catalogue.list_collections(offset, limit)]

    def get_collection(self, collection_id: str, actor: User) -> dict:
        collection = self.ctx.catalogue.get_collection(collection_id)
        payload = collection.public_dict()
        payload["has_access"] = self.ctx.governance.check_access(actor, collection)
        # Grant state is owner-facing detail; others only learn their own access.
        if actor.id == collection.owner_id or actor.role is Role.DATA_MANAGER:
            payload["visa"] = self.ctx.governance.get_visa(collection.visa_id).public_dict()
        return payload

    def list_files(self, collection_id: str, offset: int, limit: int | None) -> list[dict]:
        records = self.ctx.catalogue.list_files(collection_id, offset, limit)
        return [r.public_dict() for r in records]

    def basic_search(self, keyword: str, offset: int, limit: int | None) -> list[dict]:
        return [r.public_dict() for r in self.ctx.catalogue.basic_search(keyword, offset, limit)]

    def advanced_search(self, body) -> list[dict]:
        query = FileQuery.from_filters(body.filters, offset=body.offset, limit=body.limit)
        return [r.public_dict() for r in self.ctx.catalogue.advanced_search(query)]

    def commit_file(self, file_id: str, body, actor: User) -> dict:
        record = self.ctx.catalogue.get_record(file_id)
        collection = self.ctx.catalogue.get_collection(record.collection_id)
        if not self.ctx.governance.check_access(actor, collection):
            raise ForbiddenError("caller has no visa for this collection")
        committed = self.ctx.catalogue.commit_file(file_id, body.size_bytes, body.checksum)
        # Eager commit settles the janitor entry; a later sweep finds it done.
        self.ctx.storage.queue.settle_for_file(file_id, "committed")
        return committed.public_dict()


class StorageFacade:
    def __init__(self, context: ServiceContext):
        self.ctx = context

    def list_targets(self) -> list[dict]:
        return [t.public_dict() for t in self.ctx.storage.list_targets()]

    def register_target(self, body, actor: User) -> dict:
        target = self.ctx.storage.register_target(
            actor,
            StorageType(body.storage_type),
            body.bucket,
            credential_id=body.credential_id,
            root_dir=body.root_dir,
            endpoint=body.endpoint,
        )
        return target.public_dict()

    def request_upload(self, body, actor: User) -> dict:
        key = DedupKey(
            file_name=body.final_file_name,
            collection_id=body.collection_id,
            file_category=FileCategory(body.file_category),
            bucket=self.ctx.catalogue.get_collection(body.collection_id).bucket,
        )
        record = self.ctx.catalogue.register_file(key, actor, body.version)
        collection = self.ctx.catalogue.get_collection(record.collection_id)
        ticket = self.ctx.storage.issue_upload_ticket(record, collection)
        return {**ticket.public_dict(), "record": record.public_dict()}

    def download_url(self, file_id: str, actor: User) -> dict:
        record = self.ctx.catalogue.get_record(file_id)
        collection = self.ctx.catalogue.get_collection(record.collection_id)
        return self.ctx.storage.issue_download_url(record, collection, actor)

    def raw_upload(self, ticket_id: str, data: bytes) -> dict:
        entry = self.ctx.storage.resolve_upload_ticket(ticket_id)
        record = self.ctx.catalogue.get_record(entry.file_id)
        collection = self.ctx.catalogue.get_collection(record.collection_id)
        target = self.ctx.storage.get_target(collection.storage_type, record.bucket)
        # The ticket authorizes exactly one path: the record's storage_path.
        self.ctx.storage.adapter_for(target).put_object(record.storage_path, data)
        return {"object": record.storage_path, "size_bytes": len(data), "file_id": record.id}

    def raw_download(self, grant_id: str) -> tuple[bytes, str]:
        file_id = self.ctx.storage.resolve_download_grant(grant_id)
        record = self.ctx.catalogue.get_record(file_id)
        collection = self.ctx.catalogue.get_collection(record.collection_id)
        target = self.ctx.storage.get_target(collection.storage_type, record.bucket)
        data = self.ctx.storage.adapter_for(target).get_object(record.storage_path)
        return data, record.file_name


class JanitorFacade:
    def __init__(self, context: ServiceContext):
        self.ctx = context

    def sweep(self, actor: User) -> dict:
        if actor.role is not Role.DATA_MANAGER:
            raise ForbiddenError("janitor triggers are data-manager only")
        report = self.ctx.janitor.sweep()
        return report.to_dict()


class Facades:
    def __init__(self, context: ServiceContext):
        self.governance = GovernanceFacade(context)
        self.catalogue = CatalogueFacade(context)
        self.storage = StorageFacade(context)
        self.janitor = JanitorFacade(context)
