"""Request schemas: every body is validated before a handler runs."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

STORAGE_TYPES = Literal["local", "s3-compatible", "gcs-compatible", "hdfs-compatible"]
FILE_CATEGORIES = Literal["structured", "unstructured"]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LoginBody(StrictModel):
    login_or_email: str = Field(min_length=1, max_length=320)
    password: str = Field(min_length=1, max_length=1024)


class CreateUserBody(StrictModel):
    email: str = Field(min_length=3, max_length=320)
    login: str = Field(min_length=1, max_length=128)
    password: str = Field(min_length=1, max_length=1024)
    role: Literal["consumer", "publisher", "data-manager"] = "consumer"


class UpdateUserBody(StrictModel):
    email: str | None = Field(default=None, min_length=3, max_length=320)
    password: str | None = Field(default=None, min_length=1, max_length=1024)
    role: Literal["consumer", "publisher", "data-manager"] | None = None


class PasswordResetBody(StrictModel):
    # Without a token: issue one (data manager). With a token: redeem it.
    reset_token: str | None = Field(default=None, min_length=1, max_length=256)
    new_password: str | None = Field(default=None, min_length=1, max_length=1024)


class CreateCollectionBody(StrictModel):
    name: str = Field(min_length=1, max_length=255)
    storage_type: STORAGE_TYPES
    bucket: str = Field(min_length=1, max_length=255)


class UploadRequestBody(StrictModel):
    collection_id: str = Field(min_length=1, max_length=64)
    final_file_name: str = Field(min_length=1, max_length=255)
    file_category: FILE_CATEGORIES
    version: int | None = Field(default=None, ge=1)


class CommitBody(StrictModel):
    size_bytes: int | None = Field(default=None, ge=0)
    checksum: str | None = Field(default=None, max_length=128)


class AdvancedSearchBody(StrictModel):
    filters: list[str] = Field(default_factory=list, max_length=32)
    offset: int = Field(default=0, ge=0)
    limit: int | None = Field(default=None, ge=1, le=1000)


class RegisterTargetBody(StrictModel):
    storage_type: STORAGE_TYPES
    bucket: str = Field(min_length=1, max_length=255)
    credential_id: str | None = Field(default=None, max_length=64)
    root_dir: str | None = Field(default=None, max_length=1024)
    endpoint: str | None = Field(default=None, max_length=1024)


class AddCredentialBody(StrictModel):
    storage_type: STORAGE_TYPES
    label: str = Field(min_length=1, max_length=255)
    key_material: str = Field(min_length=1, max_length=65536)


class AccessRequestBody(StrictModel):
    collection_id: str = Field(min_length=1, max_length=64)
    message: str | None = Field(default=None, max_length=4096)


class DecisionBody(StrictModel):
    decision: Literal["granted", "denied"]


class GrantBody(StrictModel):
    user_id: str = Field(min_length=1, max_length=64)
