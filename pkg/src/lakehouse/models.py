"""Domain records and their document/JSON representations.

Records are plain dataclasses; `to_doc` produces the persisted document
and `public_dict` the API payload (secret material stripped). Timestamps
are timezone-aware UTC in memory and ISO-8601 strings on the wire.
"""

from __future__ import annotations

import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum


def new_id() -> str:
    return uuid.uuid4().hex


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def to_iso(ts: datetime | None) -> str | None:
    return ts.isoformat() if ts is not None else None


def from_iso(raw: str | None) -> datetime | None:
    if raw is None:
        return None
    ts = datetime.fromisoformat(raw)
    return ts if ts.tzinfo else ts.replace(tzinfo=timezone.utc)


class StorageType(str, Enum):
    LOCAL = "local"
    S3 = "s3-compatible"
    GCS = "gcs-compatible"
    HDFS = "hdfs-compatible"


class FileCategory(str, Enum):
    STRUCTURED = "structured"
    UNSTRUCTURED = "unstructured"


class FileStatus(str, Enum):
    PENDING = "pending"
    COMMITTED = "committed"


class VersionOrigin(str, Enum):
    AUTO = "auto"
    MANUAL = "manual"


class Role(str, Enum):
    CONSUMER = "consumer"
    PUBLISHER = "publisher"
    DATA_MANAGER = "data-manager"


class RequestStatus(str, Enum):
    PENDING = "pending"
    GRANTED = "granted"
    DENIED = "denied"


class QueueState(str, Enum):
    WAITING = "waiting"
    SETTLED = "settled"


# Names that end up as path segments must stay path-safe.
PATH_SAFE_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")
EMAIL_RE = re.compile(r"^\S+@\S+\.\S+$")
MAX_NAME_LENGTH = 255


def validate_path_segment(value: str, field_name: str) -> None:
    from .errors import ValidationError

    if not value or len(value) > MAX_NAME_LENGTH:
        raise ValidationError.for_fields(field_name, message=f"{field_name} must be 1-{MAX_NAME_LENGTH} characters")
    if value in (".", "..") or not PATH_SAFE_RE.match(value):
        raise ValidationError.for_fields(
            field_name,
            message=f"{field_name} may only contain alphanumerics, dot, dash, underscore",
        )


def storage_path_for(collection_name: str, version: int, file_name: str) -> str:
    """Canonical object path: <collection>/v<version>/<file_name>."""
    return f"{collection_name}/v{version}/{file_name}"


@dataclass
class Collection:
    id: str
    name: str
    storage_type: StorageType
    bucket: str
    owner_id: str
    visa_id: str
    created_at: datetime

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "storage_type": self.storage_type.value,
            "bucket": self.bucket,
            "owner_id": self.owner_id,
            "visa_id": self.visa_id,
            "created_at": to_iso(self.created_at),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Collection":
        return cls(
            id=doc["id"],
            name=doc["name"],
            storage_type=StorageType(doc["storage_type"]),
            bucket=doc["bucket"],
            owner_id=doc["owner_id"],
            visa_id=doc["visa_id"],
            created_at=from_iso(doc["created_at"]),
        )

    def public_dict(self) -> dict:
        return self.to_doc()


@dataclass(frozen=True)
class DedupKey:
    """Identity of a file lineage: versions increment within one key."""

    file_name: str
    collection_id: str
    file_category: FileCategory
    bucket: str

    def validate(self) -> None:
        from .errors import ValidationError

        missing = [
            name
            for name, value in (
                ("file_name", self.file_name),
                ("collection_id", self.collection_id),
                ("bucket", self.bucket),
            )
            if not value
        ]
        if missing:
            raise ValidationError.for_fields(*missing, message="dedup key fields must be nonempty")
        validate_path_segment(self.file_name, "file_name")

    def lineage_key(self) -> str:
        # \x1f never appears in validated fields; composition stays unambiguous.
        return "\x1f".join(
            (self.collection_id, self.file_category.value, self.bucket, self.file_name)
        )


@dataclass
class FileRecord:
    id: str
    collection_id: str
    file_name: str
    file_category: FileCategory
    bucket: str
    version: int
    version_origin: VersionOrigin
    storage_path: str
    status: FileStatus
    uploaded_by: str
    requested_at: datetime
    size_bytes: int | None = None
    checksum: str | None = None
    committed_at: datetime | None = None

    @property
    def dedup_key(self) -> DedupKey:
        return DedupKey(self.file_name, self.collection_id, self.file_category, self.bucket)

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "collection_id": self.collection_id,
            "file_name": self.file_name,
            "file_category": self.file_category.value,
            "bucket": self.bucket,
            "version": self.version,
            "version_origin": self.version_origin.value,
            "storage_path": self.storage_path,
            "status": self.status.value,
            "size_bytes": self.size_bytes,
            "checksum": self.checksum,
            "uploaded_by": self.uploaded_by,
            "requested_at": to_iso(self.requested_at),
            "committed_at": to_iso(self.committed_at),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "FileRecord":
        return cls(
            id=doc["id"],
            collection_id=doc["collection_id"],
            file_name=doc["file_name"],
            file_category=FileCategory(doc["file_category"]),
            bucket=doc["bucket"],
            version=doc["version"],
            version_origin=VersionOrigin(doc["version_origin"]),
            storage_path=doc["storage_path"],
            status=FileStatus(doc["status"]),
            size_bytes=doc.get("size_bytes"),
            checksum=doc.get("checksum"),
            uploaded_by=doc["uploaded_by"],
            requested_at=from_iso(doc["requested_at"]),
            committed_at=from_iso(doc.get("committed_at")),
        )

    def public_dict(self) -> dict:
        return self.to_doc()


# Fields advanced search may filter on.
QUERYABLE_FILE_FIELDS = ("file_name", "file_category", "collection_id", "version", "status", "bucket")


@dataclass
class FileQuery:
    """Conjunction of exact-match predicates over the queryable fields."""

    predicates: dict[str, object] = field(default_factory=dict)
    offset: int = 0
    limit: int | None = None

    @classmethod
    def from_filters(cls, filters: list[str], offset: int = 0, limit: int | None = None) -> "FileQuery":
        """Parse "field=value" tokens; duplicates and unknown fields reject."""
        from .errors import ValidationError

        predicates: dict[str, object] = {}
        for token in filters:
            if "=" not in token:
                raise ValidationError(f"malformed filter {token!r}: expected field=value")
            name, _, raw = token.partition("=")
            name = name.strip()
            raw = raw.strip()
            if name not in QUERYABLE_FILE_FIELDS:
                raise ValidationError.for_fields(name, message=f"unknown filter field {name!r}")
            if name in predicates:
                raise ValidationError.for_fields(name, message=f"duplicate filter field {name!r}")
            predicates[name] = _coerce_predicate(name, raw)
        return cls(predicates=predicates, offset=offset, limit=limit)

    def matches(self, record: FileRecord) -> bool:
        return self.matches_doc(record.to_doc())

    def matches_doc(self, doc: dict) -> bool:
        # plain loop: this runs once per record per query on the search path
        for name, value in self.predicates.items():
            if doc[name] != value:
                return False
        return True


def _coerce_predicate(name: str, raw: str) -> object:
    from .errors import ValidationError

    if name == "version":
        try:
            value = int(raw)
        except ValueError:
            raise ValidationError.for_fields(name, message="version must be an integer") from None
        if value < 1:
            raise ValidationError.for_fields(name, message="version must be positive")
        return value
    if name == "file_category":
        try:
            return FileCategory(raw).value
        except ValueError:
            raise ValidationError.for_fields(
                name, message=f"file_category must be one of {[c.value for c in FileCategory]}"
            ) from None
    if name == "status":
        try:
            return FileStatus(raw).value
        except ValueError:
            raise ValidationError.for_fields(
                name, message=f"status must be one of {[s.value for s in FileStatus]}"
            ) from None
    return raw


@dataclass
class User:
    id: str
    email: str
    login: str
    password_hash: str
    role: Role
    created_at: datetime
    reset_token_hash: str | None = None
    reset_token_expires_at: datetime | None = None

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "email": self.email,
            "login": self.login,
            "password_hash": self.password_hash,
            "role": self.role.value,
            "created_at": to_iso(self.created_at),
            "reset_token_hash": self.reset_token_hash,
            "reset_token_expires_at": to_iso(self.reset_token_expires_at),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "User":
        return cls(
            id=doc["id"],
            email=doc["email"],
            login=doc["login"],
            password_hash=doc["password_hash"],
            role=Role(doc["role"]),
            created_at=from_iso(doc["created_at"]),
            reset_token_hash=doc.get("reset_token_hash"),
            reset_token_expires_at=from_iso(doc.get("reset_token_expires_at")),
        )

    def public_dict(self) -> dict:
        return {
            "id": self.id,
            "email": self.email,
            "login": self.login,
            "role": self.role.value,
            "created_at": to_iso(self.created_at),
        }


@dataclass
class VisaGrantEvent:
    user_id: str
    action: str  # "grant" | "revoke"
    at: datetime

    def to_doc(self) -> dict:
        return {"user_id": self.user_id, "action": self.action, "at": to_iso(self.at)}

    @classmethod
    def from_doc(cls, doc: dict) -> "VisaGrantEvent":
        return cls(doc["user_id"], doc["action"], from_iso(doc["at"]))


@dataclass
class Visa:
    visa_id: str
    collection_id: str
    issuer_id: str
    events: list[VisaGrantEvent] = field(default_factory=list)
    active: dict[str, str] = field(default_factory=dict)  # user_id -> granted_at ISO

    def to_doc(self) -> dict:
        return {
            "visa_id": self.visa_id,
            "collection_id": self.collection_id,
            "issuer_id": self.issuer_id,
            "events": [e.to_doc() for e in self.events],
            "active": dict(self.active),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Visa":
        return cls(
            visa_id=doc["visa_id"],
            collection_id=doc["collection_id"],
            issuer_id=doc["issuer_id"],
            events=[VisaGrantEvent.from_doc(e) for e in doc.get("events", [])],
            active=dict(doc.get("active", {})),
        )

    def public_dict(self) -> dict:
        return {
            "visa_id": self.visa_id,
            "collection_id": self.collection_id,
            "issuer_id": self.issuer_id,
            "grants": [e.to_doc() for e in self.events],
            "active": sorted(self.active),
        }


@dataclass
class AccessRequest:
    request_id: str
    requester_id: str
    collection_id: str
    status: RequestStatus
    created_at: datetime
    message: str | None = None
    decided_by: str | None = None
    decided_at: datetime | None = None

    def to_doc(self) -> dict:
        return {
            "request_id": self.request_id,
            "requester_id": self.requester_id,
            "collection_id": self.collection_id,
            "status": self.status.value,
            "created_at": to_iso(self.created_at),
            "message": self.message,
            "decided_by": self.decided_by,
            "decided_at": to_iso(self.decided_at),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "AccessRequest":
        return cls(
            request_id=doc["request_id"],
            requester_id=doc["requester_id"],
            collection_id=doc["collection_id"],
            status=RequestStatus(doc["status"]),
            created_at=from_iso(doc["created_at"]),
            message=doc.get("message"),
            decided_by=doc.get("decided_by"),
            decided_at=from_iso(doc.get("decided_at")),
        )

    def public_dict(self) -> dict:
        return self.to_doc()


@dataclass
class StorageCredential:
    credential_id: str
    storage_type: StorageType
    label: str
    ciphertext: str
    registered_by: str
    created_at: datetime

    def to_doc(self) -> dict:
        return {
            "credential_id": self.credential_id,
            "storage_type": self.storage_type.value,
            "label": self.label,
            "ciphertext": self.ciphertext,
            "registered_by": self.registered_by,
            "created_at": to_iso(self.created_at),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "StorageCredential":
        return cls(
            credential_id=doc["credential_id"],
            storage_type=StorageType(doc["storage_type"]),
            label=doc["label"],
            ciphertext=doc["ciphertext"],
            registered_by=doc["registered_by"],
            created_at=from_iso(doc["created_at"]),
        )

    def public_dict(self) -> dict:
        # Ciphertext (and a fortiori the key material) never leaves the vault.
        return {
            "credential_id": self.credential_id,
            "storage_type": self.storage_type.value,
            "label": self.label,
            "registered_by": self.registered_by,
            "created_at": to_iso(self.created_at),
        }


@dataclass
class StorageTarget:
    storage_type: StorageType
    bucket: str
    credential_id: str | None = None
    root_dir: str | None = None  # local backend only
    endpoint: str | None = None  # remote backends

    @staticmethod
    def key_for(storage_type: StorageType, bucket: str) -> str:
        return f"{storage_type.value}\x1f{bucket}"

    def to_doc(self) -> dict:
        return {
            "storage_type": self.storage_type.value,
            "bucket": self.bucket,
            "credential_id": self.credential_id,
            "root_dir": self.root_dir,
            "endpoint": self.endpoint,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "StorageTarget":
        return cls(
            storage_type=StorageType(doc["storage_type"]),
            bucket=doc["bucket"],
            credential_id=doc.get("credential_id"),
            root_dir=doc.get("root_dir"),
            endpoint=doc.get("endpoint"),
        )

    def public_dict(self) -> dict:
        return {
            "storage_type": self.storage_type.value,
            "bucket": self.bucket,
            "credential_id": self.credential_id,
        }


@dataclass
class UploadTicket:
    ticket_id: str
    file_id: str
    upload_url: str
    issued_at: datetime
    expires_at: datetime

    def public_dict(self) -> dict:
        return {
            "ticket_id": self.ticket_id,
            "file_id": self.file_id,
            "upload_url": self.upload_url,
            "issued_at": to_iso(self.issued_at),
            "expires_at": to_iso(self.expires_at),
        }


@dataclass
class QueueEntry:
    """Upload-queue entry; doubles as the persisted ticket."""

    ticket_id: str
    file_id: str
    upload_url: str
    issued_at: datetime
    expires_at: datetime
    state: QueueState = QueueState.WAITING
    settled_at: datetime | None = None
    outcome: str | None = None

    def to_doc(self) -> dict:
        return {
            "ticket_id": self.ticket_id,
            "file_id": self.file_id,
            "upload_url": self.upload_url,
            "issued_at": to_iso(self.issued_at),
            "expires_at": to_iso(self.expires_at),
            "state": self.state.value,
            "settled_at": to_iso(self.settled_at),
            "outcome": self.outcome,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "QueueEntry":
        return cls(
            ticket_id=doc["ticket_id"],
            file_id=doc["file_id"],
            upload_url=doc["upload_url"],
            issued_at=from_iso(doc["issued_at"]),
            expires_at=from_iso(doc["expires_at"]),
            state=QueueState(doc["state"]),
            settled_at=from_iso(doc.get("settled_at")),
            outcome=doc.get("outcome"),
        )

    def ticket(self) -> UploadTicket:
        return UploadTicket(self.ticket_id, self.file_id, self.upload_url, self.issued_at, self.expires_at)


@dataclass
class AuthToken:
    token: str
    user_id: str
    issued_at: datetime
    expires_at: datetime

    def to_doc(self) -> dict:
        return {
            "user_id": self.user_id,
            "issued_at": to_iso(self.issued_at),
            "expires_at": to_iso(self.expires_at),
        }

    def public_dict(self) -> dict:
        return {
            "token": self.token,
            "user_id": self.user_id,
            "issued_at": to_iso(self.issued_at),
            "expires_at": to_iso(self.expires_at),
        }
