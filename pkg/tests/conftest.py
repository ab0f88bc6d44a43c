"""Shared fixtures: fake clock, service context, HTTP client, live server."""

from __future__ import annotations

import threading
from datetime import datetime, timedelta, timezone

import pytest
import uvicorn
from fastapi.testclient import TestClient

from lakehouse.config import ServiceConfig
from lakehouse.gateway import create_app
from lakehouse.models import Role
from lakehouse.runtime import ServiceContext, build_context
from lakehouse.store import InMemoryDocumentStore


class FakeClock:
    """Injectable time source; tests advance it explicitly."""

    def __init__(self, start: datetime | None = None):
        self.now = start or datetime(2026, 1, 1, 12, 0, 0, tzinfo=timezone.utc)

    def __call__(self) -> datetime:
        return self.now

    def advance(self, seconds: float) -> datetime:
        self.now = self.now + timedelta(seconds=seconds)
        return self.now


@pytest.fixture
def clock() -> FakeClock:
    return FakeClock()


@pytest.fixture
def config(tmp_path) -> ServiceConfig:
    return ServiceConfig(
        dev_insecure=True,
        base_url="http://testserver",
        local_storage_root=str(tmp_path / "objects"),
        password_cost_log2=4,  # keep hashing fast in tests
    )


@pytest.fixture
def context(config, clock) -> ServiceContext:
    return build_context(config, store=InMemoryDocumentStore(), clock=clock)


@pytest.fixture
def manager(context):
    return context.governance.create_user("manager@example.org", "manager", "pw-manager", Role.DATA_MANAGER)


@pytest.fixture
def owner(context):
    return context.governance.create_user("owner@example.org", "owner", "pw-owner", Role.PUBLISHER)


@pytest.fixture
def reader(context):
    return context.governance.create_user("reader@example.org", "reader", "pw-reader", Role.CONSUMER)


@pytest.fixture
def client(context) -> TestClient:
    app = create_app(context=context)
    with TestClient(app, raise_server_exceptions=False) as test_client:
        yield test_client


def login_headers(client: TestClient, login: str, password: str) -> dict:
    response = client.post("/auth/login", json={"login_or_email": login, "password": password})
    assert response.status_code == 200, response.text
    return {"Authorization": f"Bearer {response.json()['token']}"}


class LiveServer:
    """uvicorn in a thread on an ephemeral port; for CLI and scenario tests."""

    def __init__(self, context: ServiceContext):
        self.context = context
        app = create_app(context=context)
        self._config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
        self._server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self) -> "LiveServer":
        self._thread.start()
        while not self._server.started:
            if not self._thread.is_alive():
                raise RuntimeError("server thread died during startup")
            threading.Event().wait(0.01)
        return self

    @property
    def base_url(self) -> str:
        port = self._server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)


def start_live_server(config: ServiceConfig, store=None, clock=None) -> LiveServer:
    kwargs = {"store": store}
    if clock is not None:
        kwargs["clock"] = clock
    context = build_context(config, **kwargs)
    # Ticket/grant URLs must point at the real bound port.
    server = LiveServer(context).start()
    config.base_url = server.base_url
    return server
