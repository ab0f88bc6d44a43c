"""Fixtures: a real gateway on a loopback port plus raw-HTTP helpers.

The suite drives the service as a black box over HTTP. Standing the
server up is the only place the service package is imported; the shipped
client never imports it.
"""

from __future__ import annotations

import contextlib
import threading

import httpx
import pytest
import uvicorn

from lakehouse.config import BootstrapUser, ServiceConfig, TargetConfig
from lakehouse.gateway import create_app
from lakehouse.runtime import build_context
from lakehouse.store import InMemoryDocumentStore

from lake_sdk import LakeClient

PASSWORDS = {
    "olivia": "pw-olivia-publisher-1",
    "carlos": "pw-carlos-consumer-1",
    "admin": "pw-admin-manager-1",
}


class GatewayServer:
    """uvicorn in a thread on an ephemeral port."""

    def __init__(self, app):
        self._server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error"))
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self) -> "GatewayServer":
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


@pytest.fixture(scope="module")
def gateway(tmp_path_factory):
    config = ServiceConfig(
        dev_insecure=True,
        password_cost_log2=4,  # keep hashing fast in tests
        local_storage_root=str(tmp_path_factory.mktemp("objects")),
        targets=[TargetConfig(storage_type="local", bucket="main")],
        bootstrap_users=[
            BootstrapUser("olivia@example.org", "olivia", PASSWORDS["olivia"], "publisher"),
            BootstrapUser("carlos@example.org", "carlos", PASSWORDS["carlos"], "consumer"),
            BootstrapUser("admin@example.org", "admin", PASSWORDS["admin"], "data-manager"),
        ],
    )
    context = build_context(config, store=InMemoryDocumentStore())
    server = GatewayServer(create_app(context=context)).start()
    # Ticket and grant URLs must point at the real bound port.
    config.base_url = server.base_url
    yield server
    server.stop()


@contextlib.contextmanager
def raw_session(base_url: str, login: str):
    """Plain authenticated HTTP session, the reference for parity checks."""
    with httpx.Client(base_url=base_url, timeout=30) as client:
        response = client.post("/auth/login", json={"login_or_email": login, "password": PASSWORDS[login]})
        assert response.status_code == 200, response.text
        client.headers["Authorization"] = f"Bearer {response.json()['token']}"
        yield client


def raw_upload(raw: httpx.Client, collection_id: str, name: str, category: str, data: bytes) -> dict:
    """The three-step upload flow spelled out over raw HTTP."""
    import hashlib

    ticket = raw.post(
        "/files/upload-request",
        json={"collection_id": collection_id, "final_file_name": name, "file_category": category},
    )
    assert ticket.status_code == 201, ticket.text
    pushed = httpx.put(ticket.json()["upload_url"], content=data)
    assert pushed.status_code == 200, pushed.text
    committed = raw.post(
        f"/files/{ticket.json()['record']['id']}/commit",
        json={"size_bytes": len(data), "checksum": hashlib.sha256(data).hexdigest()},
    )
    assert committed.status_code == 200, committed.text
    return committed.json()


@pytest.fixture
def olivia(gateway):
    with LakeClient(gateway.base_url) as client:
        client.authenticate("olivia", PASSWORDS["olivia"])
        yield client


@pytest.fixture
def carlos(gateway):
    with LakeClient(gateway.base_url) as client:
        client.authenticate("carlos", PASSWORDS["carlos"])
        yield client


@pytest.fixture
def olivia_raw(gateway):
    with raw_session(gateway.base_url, "olivia") as client:
        yield client
