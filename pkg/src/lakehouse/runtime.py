"""Builds the full service graph from a ServiceConfig.

Construction order matters: governance has no service dependencies,
storage needs governance (credential lookups, access checks on
downloads), the catalogue needs both, and the janitor composes the lot.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .catalogue import CatalogueService
from .config import Clock, ServiceConfig, default_clock
from .errors import ConflictError, NotFoundError
from .governance import GovernanceService, SecretVault
from .janitor import JanitorService
from .models import Role, StorageType, User
from .storage.service import StorageService, UploadQueue
from .store import DocumentStore, open_store

logger = logging.getLogger(__name__)


@dataclass
class ServiceContext:
    config: ServiceConfig
    store: DocumentStore
    vault: SecretVault
    governance: GovernanceService
    storage: StorageService
    catalogue: CatalogueService
    janitor: JanitorService
    clock: Clock


def build_context(
    config: ServiceConfig,
    store: DocumentStore | None = None,
    clock: Clock = default_clock,
) -> ServiceContext:
    store = store if store is not None else open_store(config.store_path)
    vault = SecretVault(config.resolve_secret_key())
    governance = GovernanceService(store, vault, config, clock)
    queue = UploadQueue(store, clock)
    storage = StorageService(store, governance, config, clock, queue)
    catalogue = CatalogueService(store, governance, storage, config, clock)
    janitor = JanitorService(store, catalogue, storage, config, clock)
    context = ServiceContext(
        config=config,
        store=store,
        vault=vault,
        governance=governance,
        storage=storage,
        catalogue=catalogue,
        janitor=janitor,
        clock=clock,
    )
    _apply_bootstrap(context)
    return context


def _apply_bootstrap(context: ServiceContext) -> None:
    """Idempotently seed configured users and storage targets at startup."""
    config = context.config
    system_actor = _system_actor()
    for user_cfg in config.bootstrap_users:
        try:
            context.governance.create_user(
                user_cfg.email, user_cfg.login, user_cfg.password, Role(user_cfg.role)
            )
            logger.info("bootstrap: created user %s", user_cfg.login)
        except ConflictError:
            pass
    for target_cfg in config.targets:
        try:
            context.storage.get_target(target_cfg.storage_type, target_cfg.bucket)
            continue
        except NotFoundError:
            pass
        credential_id = None
        if target_cfg.credential_label:
            credential_id = _credential_by_label(context, target_cfg.credential_label)
        context.storage.register_target(
            system_actor,
            StorageType(target_cfg.storage_type),
            target_cfg.bucket,
            credential_id=credential_id,
            root_dir=target_cfg.root_dir,
            endpoint=target_cfg.endpoint,
        )
        logger.info("bootstrap: registered target %s/%s", target_cfg.storage_type, target_cfg.bucket)


def _credential_by_label(context: ServiceContext, label: str) -> str | None:
    for _, doc in context.store.scan("credentials"):
        if doc.value["label"] == label:
            return doc.value["credential_id"]
    return None


def _system_actor() -> User:
    """Synthetic data-manager identity for startup-time registrations."""
    from .models import utc_now

    return User(
        id="system",
        email="system@localhost.invalid",
        login="system",
        password_hash="",
        role=Role.DATA_MANAGER,
        created_at=utc_now(),
    )
