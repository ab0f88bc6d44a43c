"""Service configuration.

Loaded from a YAML (or JSON) file plus the environment. The deployment
secret key arrives only via LAKEHOUSE_SECRET_KEY; startup refuses to
proceed without it unless dev_insecure is set, which generates an
ephemeral key good for a single process lifetime.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable
from datetime import datetime

import yaml
from cryptography.fernet import Fernet

from .errors import ValidationError
from .models import utc_now

SECRET_KEY_ENV = "LAKEHOUSE_SECRET_KEY"

Clock = Callable[[], datetime]


@dataclass
class TargetConfig:
    storage_type: str
    bucket: str
    root_dir: str | None = None
    credential_label: str | None = None
    endpoint: str | None = None


@dataclass
class BootstrapUser:
    email: str
    login: str
    password: str
    role: str = "consumer"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    store_path: str | None = None
    base_url: str | None = None
    local_storage_root: str | None = None

    upload_ticket_ttl_seconds: int = 900
    download_url_ttl_seconds: int = 900
    token_ttl_seconds: int = 12 * 3600
    janitor_interval_seconds: int = 60
    janitor_grace_factor: float = 2.0

    open_registration: bool = True
    password_cost_log2: int = 14
    request_body_limit: int = 10 * 1024 * 1024

    secret_key: str | None = None
    dev_insecure: bool = False

    targets: list[TargetConfig] = field(default_factory=list)
    bootstrap_users: list[BootstrapUser] = field(default_factory=list)

    def resolved_base_url(self) -> str:
        return self.base_url or f"http://{self.host}:{self.port}"

    def resolve_secret_key(self) -> str:
        """Return the configured key, or fail startup without one."""
        key = self.secret_key or os.environ.get(SECRET_KEY_ENV)
        if key:
            return key
        if self.dev_insecure:
            return Fernet.generate_key().decode("ascii")
        raise ValidationError(
            f"{SECRET_KEY_ENV} is not set; refusing to start (pass --dev-insecure for a throwaway key)"
        )


def load_config(path: str | Path) -> ServiceConfig:
    raw = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(raw, dict):
        raise ValidationError(f"config file {path} must contain a mapping")
    known = {
        "host",
        "port",
        "store_path",
        "base_url",
        "local_storage_root",
        "upload_ticket_ttl_seconds",
        "download_url_ttl_seconds",
        "token_ttl_seconds",
        "janitor_interval_seconds",
        "janitor_grace_factor",
        "open_registration",
        "password_cost_log2",
        "request_body_limit",
        "targets",
        "bootstrap_users",
    }
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValidationError.for_fields(*unknown, message="unknown config keys: " + ", ".join(unknown))

    targets = [TargetConfig(**t) for t in raw.pop("targets", [])]
    users = [BootstrapUser(**u) for u in raw.pop("bootstrap_users", [])]
    return ServiceConfig(targets=targets, bootstrap_users=users, **raw)


default_clock: Clock = utc_now
