"""Users, auth tokens, visas, access requests, and the credential vault.

Login credentials and access permissions are deliberately separate
mechanisms: passwords are one-way hashed (scrypt, per-user salt), while
storage access keys are reversibly sealed with authenticated symmetric
encryption because they must be replayed to storage backends. Neither
ever appears in plaintext in a persisted document or an API payload.

Visas are the access-permission side: one visa per collection, holding an
append-only grant/revoke event log plus a materialized active-grant map.
Grant state for a user is the latest event; the owner's grant is
permanent.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import logging
import secrets
from datetime import timedelta

from cryptography.fernet import Fernet, InvalidToken

from .config import Clock, ServiceConfig, default_clock
from .errors import (
    AuthenticationError,
    ConflictError,
    ForbiddenError,
    NotFoundError,
    PreconditionFailedError,
    ValidationError,
)
from .models import (
    EMAIL_RE,
    AccessRequest,
    AuthToken,
    Collection,
    RequestStatus,
    Role,
    StorageCredential,
    StorageType,
    User,
    Visa,
    VisaGrantEvent,
    from_iso,
    new_id,
    to_iso,
)
from .store import CasMismatch, DocumentStore

logger = logging.getLogger(__name__)

RESET_TOKEN_TTL_SECONDS = 3600


# ---------------------------------------------------------------------------
# Password hashing
# ---------------------------------------------------------------------------


def hash_password(password: str, cost_log2: int = 14) -> str:
    """scrypt with a fresh salt; parameters travel inside the hash string."""
    if not password:
        raise ValidationError.for_fields("password", message="password must be nonempty")
    salt = secrets.token_bytes(16)
    n = 1 << cost_log2
    digest = hashlib.scrypt(password.encode(), salt=salt, n=n, r=8, p=1, maxmem=256 * 1024 * 1024)
    return "scrypt${}$8$1${}${}".format(
        cost_log2,
        base64.b64encode(salt).decode(),
        base64.b64encode(digest).decode(),
    )


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, cost_log2, r, p, salt_b64, digest_b64 = stored.split("$")
        if scheme != "scrypt":
            return False
        salt = base64.b64decode(salt_b64)
        expected = base64.b64decode(digest_b64)
        actual = hashlib.scrypt(
            password.encode(),
            salt=salt,
            n=1 << int(cost_log2),
            r=int(r),
            p=int(p),
            maxmem=256 * 1024 * 1024,
        )
    except (ValueError, TypeError):
        return False
    return secrets.compare_digest(actual, expected)


# ---------------------------------------------------------------------------
# Credential vault
# ---------------------------------------------------------------------------


class SecretVault:
    """Authenticated symmetric encryption around the deployment key.

    Accepts either a ready Fernet key or an arbitrary passphrase, which is
    stretched to a Fernet key via SHA-256. Sealing is nonce-randomized, so
    equal plaintexts produce distinct ciphertexts; any ciphertext
    modification fails decryption outright.
    """

    def __init__(self, secret_key: str):
        if not secret_key:
            raise ValidationError("vault secret key must be nonempty")
        try:
            self._fernet = Fernet(secret_key.encode("ascii"))
        except (ValueError, TypeError):
            derived = base64.urlsafe_b64encode(hashlib.sha256(secret_key.encode()).digest())
            self._fernet = Fernet(derived)

    def seal(self, plaintext: bytes | str) -> str:
        data = plaintext.encode() if isinstance(plaintext, str) else plaintext
        if not data:
            raise ValidationError("refusing to seal empty plaintext")
        return self._fernet.encrypt(data).decode("ascii")

    def open(self, ciphertext: str) -> bytes:
        try:
            raw = ciphertext.encode("ascii")
            # Base64 decoding is lenient about the dead bits in a final
            # partial quantum, so a tampered token could decode to the
            # original bytes. Require the canonical encoding instead.
            if base64.urlsafe_b64encode(base64.urlsafe_b64decode(raw)) != raw:
                raise PreconditionFailedError("ciphertext failed integrity check")
            return self._fernet.decrypt(raw)
        except PreconditionFailedError:
            raise
        except (InvalidToken, UnicodeEncodeError, binascii.Error, ValueError) as exc:
            raise PreconditionFailedError("ciphertext failed integrity check") from exc


# ---------------------------------------------------------------------------
# Governance service
# ---------------------------------------------------------------------------


class GovernanceService:
    def __init__(
        self,
        store: DocumentStore,
        vault: SecretVault,
        config: ServiceConfig | None = None,
        clock: Clock = default_clock,
    ):
        self.store = store
        self.vault = vault
        self.config = config or ServiceConfig()
        self.clock = clock

    # -- users ---------------------------------------------------------

    def create_user(
        self,
        email: str,
        login: str,
        password: str,
        role: Role | str = Role.CONSUMER,
        actor: User | None = None,
    ) -> User:
        role = Role(role)
        if not self.config.open_registration:
            if actor is None or actor.role is not Role.DATA_MANAGER:
                raise ForbiddenError("user creation is restricted to data managers")
        email = email.strip().lower()
        login = login.strip()
        if not EMAIL_RE.match(email):
            raise ValidationError.for_fields("email", message="email is not syntactically valid")
        if not login:
            raise ValidationError.for_fields("login", message="login must be nonempty")
        self._check_identity_free(email, login)
        user = User(
            id=new_id(),
            email=email,
            login=login,
            password_hash=hash_password(password, self.config.password_cost_log2),
            role=role,
            created_at=self.clock(),
        )
        self.store.put("users", user.id, user.to_doc())
        return user

    def get_user(self, user_id: str) -> User:
        found = self.store.get("users", user_id)
        if found is None:
            raise NotFoundError(f"user {user_id} not found")
        return User.from_doc(found.value)

    def update_user(
        self,
        user_id: str,
        actor: User,
        email: str | None = None,
        password: str | None = None,
        role: Role | str | None = None,
    ) -> User:
        user = self.get_user(user_id)
        self._require_self_or_manager(actor, user_id)
        if role is not None and actor.role is not Role.DATA_MANAGER:
            raise ForbiddenError("only a data manager may change roles")
        if email is not None:
            email = email.strip().lower()
            if not EMAIL_RE.match(email):
                raise ValidationError.for_fields("email", message="email is not syntactically valid")
            if email != user.email:
                self._check_identity_free(email, None)
            user.email = email
        if password is not None:
            user.password_hash = hash_password(password, self.config.password_cost_log2)
        if role is not None:
            user.role = Role(role)
        self.store.put("users", user.id, user.to_doc())
        return user

    def delete_user(self, user_id: str, actor: User) -> None:
        self._require_self_or_manager(actor, user_id)
        if not self.store.delete("users", user_id):
            raise NotFoundError(f"user {user_id} not found")
        for token, _ in list(self.store.scan("sessions")):
            entry = self.store.get("sessions", token)
            if entry and entry.value.get("user_id") == user_id:
                self.store.delete("sessions", token)

    def issue_password_reset(self, user_id: str, actor: User) -> str:
        """One-time reset token, returned to the data manager (no mail transport)."""
        if actor.role is not Role.DATA_MANAGER:
            raise ForbiddenError("password resets are issued by data managers")
        user = self.get_user(user_id)
        token = secrets.token_urlsafe(24)
        user.reset_token_hash = hashlib.sha256(token.encode()).hexdigest()
        user.reset_token_expires_at = self.clock() + timedelta(seconds=RESET_TOKEN_TTL_SECONDS)
        self.store.put("users", user.id, user.to_doc())
        return token

    def redeem_password_reset(self, user_id: str, reset_token: str, new_password: str) -> User:
        user = self.get_user(user_id)
        token_hash = hashlib.sha256(reset_token.encode()).hexdigest()
        if (
            user.reset_token_hash is None
            or user.reset_token_hash != token_hash
            or user.reset_token_expires_at is None
            or self.clock() >= user.reset_token_expires_at
        ):
            raise AuthenticationError("reset token is invalid or expired")
        user.password_hash = hash_password(new_password, self.config.password_cost_log2)
        user.reset_token_hash = None
        user.reset_token_expires_at = None
        self.store.put("users", user.id, user.to_doc())
        return user

    def _check_identity_free(self, email: str | None, login: str | None) -> None:
        for _, doc in self.store.scan("users"):
            if email is not None and doc.value["email"] == email:
                raise ConflictError(f"email {email} is already registered")
            if login is not None and doc.value["login"] == login:
                raise ConflictError(f"login {login} is already registered")

    @staticmethod
    def _require_self_or_manager(actor: User, user_id: str) -> None:
        if actor.id != user_id and actor.role is not Role.DATA_MANAGER:
            raise ForbiddenError("only the user themselves or a data manager may do this")

    # -- authentication --------------------------------------------------

    def login(self, login_or_email: str, password: str) -> AuthToken:
        needle = login_or_email.strip()
        user = None
        for _, doc in self.store.scan("users"):
            if doc.value["login"] == needle or doc.value["email"] == needle.lower():
                user = User.from_doc(doc.value)
                break
        # Same error for unknown user and bad password: no account enumeration.
        if user is None or not verify_password(password, user.password_hash):
            raise AuthenticationError("invalid credentials")
        now = self.clock()
        token = AuthToken(
            token=secrets.token_urlsafe(32),
            user_id=user.id,
            issued_at=now,
            expires_at=now + timedelta(seconds=self.config.token_ttl_seconds),
        )
        self.store.put("sessions", token.token, token.to_doc())
        return token

    def authenticate(self, token: str) -> User:
        if not token:
            raise AuthenticationError("missing bearer token")
        found = self.store.get("sessions", token)
        if found is None:
            raise AuthenticationError("invalid or expired token")
        expires_at = from_iso(found.value["expires_at"])
        if self.clock() >= expires_at:
            raise AuthenticationError("invalid or expired token")
        try:
            return self.get_user(found.value["user_id"])
        except NotFoundError:
            raise AuthenticationError("invalid or expired token") from None

    # -- visas (internal passport broker) --------------------------------

    def issue_visa(self, collection_id: str, owner_id: str) -> Visa:
        """Called at collection creation; the owner is granted immediately."""
        now = self.clock()
        visa = Visa(
            visa_id=new_id(),
            collection_id=collection_id,
            issuer_id=owner_id,
            events=[VisaGrantEvent(owner_id, "grant", now)],
            active={owner_id: to_iso(now)},
        )
        self.store.put("visas", visa.visa_id, visa.to_doc())
        return visa

    def get_visa(self, visa_id: str) -> Visa:
        found = self.store.get("visas", visa_id)
        if found is None:
            raise NotFoundError(f"visa {visa_id} not found")
        return Visa.from_doc(found.value)

    def set_visa_grant(self, visa_id: str, subject_user_id: str, action: str, actor: User) -> Visa:
        if action not in ("grant", "revoke"):
            raise ValidationError.for_fields("action", message="action must be grant or revoke")
        # Grant/revoke events on one visa are totally ordered via CAS append.
        while True:
            found = self.store.get("visas", visa_id)
            if found is None:
                raise NotFoundError(f"visa {visa_id} not found")
            visa = Visa.from_doc(found.value)
            if actor.id != visa.issuer_id and actor.role is not Role.DATA_MANAGER:
                raise ForbiddenError("only the collection owner may change grants")
            if action == "revoke" and subject_user_id == visa.issuer_id:
                raise ValidationError("the owner grant is permanent")
            now = self.clock()
            visa.events.append(VisaGrantEvent(subject_user_id, action, now))
            if action == "grant":
                visa.active[subject_user_id] = to_iso(now)
            else:
                visa.active.pop(subject_user_id, None)
            try:
                self.store.compare_and_swap("visas", visa_id, found.revision, visa.to_doc())
                return visa
            except CasMismatch:
                continue

    def check_access(self, user: User, collection: Collection) -> bool:
        if user.id == collection.owner_id or user.role is Role.DATA_MANAGER:
            return True
        visa = self.get_visa(collection.visa_id)
        return user.id in visa.active

    # -- access requests --------------------------------------------------

    def submit_access_request(
        self, requester: User, collection: Collection, message: str | None = None
    ) -> AccessRequest:
        if self.check_access(requester, collection):
            raise ConflictError("requester already has access to this collection")
        for _, doc in self.store.scan("requests"):
            if (
                doc.value["requester_id"] == requester.id
                and doc.value["collection_id"] == collection.id
                and doc.value["status"] == RequestStatus.PENDING.value
            ):
                raise ConflictError("a pending request for this collection already exists")
        request = AccessRequest(
            request_id=new_id(),
            requester_id=requester.id,
            collection_id=collection.id,
            status=RequestStatus.PENDING,
            created_at=self.clock(),
            message=message,
        )
        self.store.put("requests", request.request_id, request.to_doc())
        return request

    def get_access_request(self, request_id: str) -> AccessRequest:
        found = self.store.get("requests", request_id)
        if found is None:
            raise NotFoundError(f"access request {request_id} not found")
        return AccessRequest.from_doc(found.value)

    def list_access_requests(self, actor: User, collection: Collection | None = None) -> list[AccessRequest]:
        """Owner (or data manager) sees a collection's requests; anyone sees their own."""
        if collection is not None:
            if actor.id != collection.owner_id and actor.role is not Role.DATA_MANAGER:
                raise ForbiddenError("only the collection owner may list its requests")
            keep = lambda doc: doc["collection_id"] == collection.id  # noqa: E731
        else:
            keep = lambda doc: doc["requester_id"] == actor.id  # noqa: E731
        requests = [
            AccessRequest.from_doc(doc.value) for _, doc in self.store.scan("requests") if keep(doc.value)
        ]
        requests.sort(key=lambda r: (to_iso(r.created_at), r.request_id))
        return requests

    def decide_access_request(
        self, request_id: str, decision: str, actor: User, collection: Collection
    ) -> AccessRequest:
        if decision not in ("granted", "denied"):
            raise ValidationError.for_fields("decision", message="decision must be granted or denied")
        request = self.get_access_request(request_id)
        if request.collection_id != collection.id:
            raise ValidationError("request does not belong to the given collection")
        if actor.id != collection.owner_id and actor.role is not Role.DATA_MANAGER:
            raise ForbiddenError("only the collection owner may decide requests")
        if request.status is not RequestStatus.PENDING:
            raise ConflictError(f"request already decided: {request.status.value}")
        if decision == "granted":
            # Granting delegates to the visa broker, never duplicates grant logic.
            self.set_visa_grant(collection.visa_id, request.requester_id, "grant", actor)
        request.status = RequestStatus(decision)
        request.decided_by = actor.id
        request.decided_at = self.clock()
        self.store.put("requests", request.request_id, request.to_doc())
        return request

    # -- storage credentials ----------------------------------------------

    def add_credential(
        self, actor: User, storage_type: StorageType | str, label: str, key_material: str | bytes
    ) -> StorageCredential:
        if actor.role is not Role.DATA_MANAGER:
            raise ForbiddenError("only data managers may register storage credentials")
        if not label:
            raise ValidationError.for_fields("label", message="label must be nonempty")
        credential = StorageCredential(
            credential_id=new_id(),
            storage_type=StorageType(storage_type),
            label=label,
            ciphertext=self.vault.seal(key_material),
            registered_by=actor.id,
            created_at=self.clock(),
        )
        self.store.put("credentials", credential.credential_id, credential.to_doc())
        return credential

    def get_credential(self, credential_id: str) -> StorageCredential:
        found = self.store.get("credentials", credential_id)
        if found is None:
            raise NotFoundError(f"credential {credential_id} not found")
        return StorageCredential.from_doc(found.value)

    def open_credential_material(self, credential_id: str) -> bytes:
        """Decrypt for adapter use only; the plaintext is never persisted."""
        return self.vault.open(self.get_credential(credential_id).ciphertext)
