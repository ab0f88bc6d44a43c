"""Command-line surface: one subcommand per gateway capability.

The CLI talks to a running gateway over HTTP; nothing here imports the
service layer except `admin serve` and `admin janitor`, which boot or
operate a deployment in-process.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import stat
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click
import httpx

from .config import ServiceConfig, load_config
from .errors import LakehouseError, TransportError, ValidationError, error_for_code

TOKEN_ENV = "LAKE_TOKEN"
HOME_ENV = "LAKE_HOME"
DEFAULT_BASE_URL = "http://127.0.0.1:8000"

# Shell exit codes follow the sysexits convention per error class.
EXIT_CODE_BY_ERROR = {
    "validation": 64,
    "conflict": 65,
    "not_found": 66,
    "transport": 69,
    "internal": 70,
    "precondition_failed": 75,
    "forbidden": 76,
    "authentication": 77,
}

# Which endpoints each subcommand drives; the coverage test pins this
# against the gateway route table so no route is orphaned or doubled.
COMMAND_ROUTES = {
    "auth login": [("POST", "/auth/login")],
    "users create": [("POST", "/users")],
    "users update": [("PATCH", "/users/{user_id}")],
    "users delete": [("DELETE", "/users/{user_id}")],
    "users reset-password": [("POST", "/users/{user_id}/password-reset")],
    "collections list": [("GET", "/collections")],
    "collections create": [("POST", "/collections")],
    "collections show": [("GET", "/collections/{collection_id}")],
    "files list": [("GET", "/collections/{collection_id}/files")],
    "files search": [("GET", "/files/search"), ("POST", "/files/search")],
    "files upload": [("POST", "/files/upload-request"), ("POST", "/files/{file_id}/commit")],
    "files download": [("GET", "/files/{file_id}/download-url")],
    "buckets list": [("GET", "/buckets")],
    "buckets register": [("POST", "/buckets")],
    "credentials add": [("POST", "/credentials")],
    "access request": [("POST", "/access-requests")],
    "access list": [("GET", "/access-requests")],
    "access decide": [("POST", "/access-requests/{request_id}/decision")],
    "visas grant": [("POST", "/visas/{visa_id}/grants")],
    "visas revoke": [("DELETE", "/visas/{visa_id}/grants/{user_id}")],
}


def path_basename(raw: str) -> str:
    """Last path component under either separator convention.

    Upload clients historically shipped Windows paths verbatim, so the
    server-side name must be derived separator-agnostically.
    """
    trimmed = raw.rstrip("/\\")
    parts = re.split(r"[/\\]+", trimmed)
    name = parts[-1] if parts else ""
    if not name:
        raise ValidationError(f"cannot derive a file name from {raw!r}")
    return name


def profile_dir() -> Path:
    override = os.environ.get(HOME_ENV)
    if override:
        return Path(override)
    return Path.home() / ".config" / "lake"


def _profiles_file() -> Path:
    return profile_dir() / "profiles.json"


def load_profiles() -> dict:
    path = _profiles_file()
    if not path.exists():
        return {}
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError):
        return {}


def save_profiles(profiles: dict) -> None:
    path = _profiles_file()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(profiles, indent=2, sort_keys=True), encoding="utf-8")
    # Cached tokens are credentials: owner read/write only.
    os.chmod(path, stat.S_IRUSR | stat.S_IWUSR)


@dataclass
class CliState:
    profile: str = "default"
    base_url: str = DEFAULT_BASE_URL
    json_mode: bool = False
    quiet: bool = False
    profiles: dict = field(default_factory=dict)

    @property
    def token(self) -> str | None:
        env = os.environ.get(TOKEN_ENV)
        if env:
            return env
        return self.profiles.get(self.profile, {}).get("token")

    def remember(self, **fields) -> None:
        entry = self.profiles.setdefault(self.profile, {})
        entry.update(fields)
        save_profiles(self.profiles)


class ApiClient:
    def __init__(self, state: CliState):
        self.state = state

    def request(self, method: str, path: str, *, json_body=None, params=None, content=None) -> httpx.Response:
        url = path if path.startswith(("http://", "https://")) else self.state.base_url.rstrip("/") + path
        headers = {}
        if self.state.token:
            headers["Authorization"] = f"Bearer {self.state.token}"
        try:
            response = httpx.request(
                method, url, json=json_body, params=params, content=content, headers=headers, timeout=30.0
            )
        except httpx.HTTPError as exc:
            raise TransportError(f"cannot reach {url}: {exc}") from exc
        if response.status_code >= 400:
            raise self._error_from(response)
        return response

    def call(self, method: str, path: str, *, json_body=None, params=None):
        return self.request(method, path, json_body=json_body, params=params).json()

    @staticmethod
    def _error_from(response: httpx.Response) -> LakehouseError:
        try:
            envelope = response.json()["error"]
            return error_for_code(envelope["code"], envelope["message"], envelope.get("details"))
        except (ValueError, KeyError, TypeError):
            return TransportError(f"unexpected response {response.status_code} from gateway")


def emit(state: CliState, payload, columns: tuple[str, ...] | None = None) -> None:
    if state.quiet:
        return
    if state.json_mode:
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
        return
    if isinstance(payload, list):
        _emit_table(payload, columns)
    elif isinstance(payload, dict):
        for key in sorted(payload):
            click.echo(f"{key}: {_cell(payload[key])}")
    else:
        click.echo(str(payload))


def _cell(value) -> str:
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    if value is None:
        return "-"
    return str(value)


def _emit_table(rows: list, columns: tuple[str, ...] | None) -> None:
    if not rows:
        click.echo("(empty)")
        return
    if columns is None:
        columns = tuple(sorted({key for row in rows for key in row}))
    widths = {c: max(len(c), *(len(_cell(row.get(c))) for row in rows)) for c in columns}
    click.echo("  ".join(c.ljust(widths[c]) for c in columns).rstrip())
    for row in rows:
        click.echo("  ".join(_cell(row.get(c)).ljust(widths[c]) for c in columns).rstrip())


def run_guarded(func):
    """Translate service errors into exit codes without a traceback."""

    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except LakehouseError as exc:
            click.echo(f"error ({exc.code}): {exc}", err=True)
            sys.exit(EXIT_CODE_BY_ERROR.get(exc.code, 70))

    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper


@click.group()
@click.option("--profile", default="default", show_default=True, help="Named connection profile.")
@click.option("--base-url", default=None, help="Gateway base URL (overrides the profile).")
@click.option("--json", "json_mode", is_flag=True, help="Machine-readable output with sorted keys.")
@click.option("--quiet", is_flag=True, help="Suppress non-error output.")
@click.pass_context
def main(ctx, profile, base_url, json_mode, quiet):
    """Operate a data lakehouse deployment from the shell."""
    profiles = load_profiles()
    resolved = base_url or profiles.get(profile, {}).get("base_url") or DEFAULT_BASE_URL
    ctx.obj = CliState(
        profile=profile, base_url=resolved, json_mode=json_mode, quiet=quiet, profiles=profiles
    )


# -- auth ---------------------------------------------------------------------


@main.group()
def auth():
    """Session management."""


@auth.command("login")
@click.option("--login", "login_name", required=True, help="Login or email address.")
@click.option("--password", prompt=True, hide_input=True)
@click.pass_obj
@run_guarded
def auth_login(state: CliState, login_name, password):
    """Obtain a session token and cache it for later commands."""
    client = ApiClient(state)
    payload = client.call("POST", "/auth/login", json_body={"login_or_email": login_name, "password": password})
    state.remember(token=payload["token"], base_url=state.base_url)
    emit(state, {"token": payload["token"], "expires_at": payload["expires_at"]})


# -- users --------------------------------------------------------------------


@main.group()
def users():
    """Account management."""


@users.command("create")
@click.option("--email", required=True)
@click.option("--login", "login_name", required=True)
@click.option("--password", prompt=True, hide_input=True)
@click.option("--role", type=click.Choice(["consumer", "publisher", "data-manager"]), default="consumer")
@click.pass_obj
@run_guarded
def users_create(state: CliState, email, login_name, password, role):
    body = {"email": email, "login": login_name, "password": password, "role": role}
    emit(state, ApiClient(state).call("POST", "/users", json_body=body))


@users.command("update")
@click.argument("user_id")
@click.option("--email", default=None)
@click.option("--password", default=None)
@click.option("--role", type=click.Choice(["consumer", "publisher", "data-manager"]), default=None)
@click.pass_obj
@run_guarded
def users_update(state: CliState, user_id, email, password, role):
    body = {k: v for k, v in (("email", email), ("password", password), ("role", role)) if v is not None}
    emit(state, ApiClient(state).call("PATCH", f"/users/{user_id}", json_body=body))


@users.command("delete")
@click.argument("user_id")
@click.pass_obj
@run_guarded
def users_delete(state: CliState, user_id):
    emit(state, ApiClient(state).call("DELETE", f"/users/{user_id}"))


@users.command("reset-password")
@click.argument("user_id")
@click.option("--token", "reset_token", default=None, help="Redeem a previously issued reset token.")
@click.option("--new-password", default=None)
@click.pass_obj
@run_guarded
def users_reset_password(state: CliState, user_id, reset_token, new_password):
    body = {}
    if reset_token is not None:
        body["reset_token"] = reset_token
    if new_password is not None:
        body["new_password"] = new_password
    emit(state, ApiClient(state).call("POST", f"/users/{user_id}/password-reset", json_body=body))


# -- collections ----------------------------------------------------------------


@main.group()
def collections():
    """Collection catalogue."""


COLLECTION_COLUMNS = ("id", "name", "storage_type", "bucket", "owner_id")


@collections.command("list")
@click.option("--offset", default=0, show_default=True)
@click.option("--limit", default=None, type=int)
@click.pass_obj
@run_guarded
def collections_list(state: CliState, offset, limit):
    params = {"offset": offset}
    if limit is not None:
        params["limit"] = limit
    emit(state, ApiClient(state).call("GET", "/collections", params=params), COLLECTION_COLUMNS)


@collections.command("create")
@click.argument("name")
@click.option("--storage-type", type=click.Choice(["local", "s3-compatible", "gcs-compatible", "hdfs-compatible"]), required=True)
@click.option("--bucket", required=True)
@click.pass_obj
@run_guarded
def collections_create(state: CliState, name, storage_type, bucket):
    body = {"name": name, "storage_type": storage_type, "bucket": bucket}
    emit(state, ApiClient(state).call("POST", "/collections", json_body=body))


@collections.command("show")
@click.argument("collection_id")
@click.pass_obj
@run_guarded
def collections_show(state: CliState, collection_id):
    emit(state, ApiClient(state).call("GET", f"/collections/{collection_id}"))


# -- files ----------------------------------------------------------------------


@main.group()
def files():
    """File catalogue and transfer."""


FILE_COLUMNS = ("id", "file_name", "version", "file_category", "status", "size_bytes")


@files.command("list")
@click.argument("collection_id")
@click.option("--offset", default=0, show_default=True)
@click.option("--limit", default=None, type=int)
@click.pass_obj
@run_guarded
def files_list(state: CliState, collection_id, offset, limit):
    params = {"offset": offset}
    if limit is not None:
        params["limit"] = limit
    emit(state, ApiClient(state).call("GET", f"/collections/{collection_id}/files", params=params), FILE_COLUMNS)


@files.command("search")
@click.argument("keyword", required=False)
@click.option("--filter", "filters", multiple=True, help="field=value predicate; repeatable.")
@click.option("--offset", default=0, show_default=True)
@click.option("--limit", default=None, type=int)
@click.pass_obj
@run_guarded
def files_search(state: CliState, keyword, filters, offset, limit):
    """Keyword search, or field-predicate search with --filter."""
    client = ApiClient(state)
    if filters:
        body = {"filters": list(filters), "offset": offset}
        if limit is not None:
            body["limit"] = limit
        payload = client.call("POST", "/files/search", json_body=body)
    else:
        if not keyword:
            raise ValidationError("provide a keyword or at least one --filter")
        params = {"keyword": keyword, "offset": offset}
        if limit is not None:
            params["limit"] = limit
        payload = client.call("GET", "/files/search", params=params)
    emit(state, payload, FILE_COLUMNS)


@files.command("upload")
@click.argument("local_path")
@click.option("--collection", "collection_id", required=True)
@click.option("--category", type=click.Choice(["structured", "unstructured"]), required=True)
@click.option("--name", "final_name", default=None, help="Server-side file name (defaults to the basename).")
@click.option("--version", default=None, type=int, help="Pin a version instead of taking the next free one.")
@click.pass_obj
@run_guarded
def files_upload(state: CliState, local_path, collection_id, category, final_name, version):
    """Request a ticket, push the bytes, then commit the record."""
    source = Path(local_path)
    if not source.is_file():
        raise ValidationError(f"no such file: {local_path}")
    data = source.read_bytes()
    client = ApiClient(state)
    body = {
        "collection_id": collection_id,
        "final_file_name": final_name or path_basename(local_path),
        "file_category": category,
    }
    if version is not None:
        body["version"] = version
    ticket = client.call("POST", "/files/upload-request", json_body=body)
    client.request("PUT", ticket["upload_url"], content=data)
    committed = client.call(
        "POST",
        f"/files/{ticket['record']['id']}/commit",
        json_body={"size_bytes": len(data), "checksum": hashlib.sha256(data).hexdigest()},
    )
    emit(state, committed)


@files.command("download")
@click.argument("file_id")
@click.option("--output", "output_path", default=None, help="Destination path (defaults to the file name).")
@click.pass_obj
@run_guarded
def files_download(state: CliState, file_id, output_path):
    client = ApiClient(state)
    grant = client.call("GET", f"/files/{file_id}/download-url")
    response = client.request("GET", grant["url"])
    name = _attachment_name(response.headers.get("Content-Disposition", "")) or file_id
    dest = Path(output_path) if output_path else Path(path_basename(name))
    dest.write_bytes(response.content)
    emit(state, {"saved": str(dest), "size_bytes": len(response.content)})


def _attachment_name(header: str) -> str | None:
    match = re.search(r'filename="([^"]+)"', header)
    return match.group(1) if match else None


# -- buckets / credentials ---------------------------------------------------------


@main.group()
def buckets():
    """Storage targets."""


@buckets.command("list")
@click.pass_obj
@run_guarded
def buckets_list(state: CliState):
    emit(state, ApiClient(state).call("GET", "/buckets"), ("storage_type", "bucket", "credential_id"))


@buckets.command("register")
@click.option("--storage-type", type=click.Choice(["local", "s3-compatible", "gcs-compatible", "hdfs-compatible"]), required=True)
@click.option("--bucket", required=True)
@click.option("--credential", "credential_id", default=None)
@click.option("--root", "root_dir", default=None, help="Filesystem root for local buckets.")
@click.option("--endpoint", default=None)
@click.pass_obj
@run_guarded
def buckets_register(state: CliState, storage_type, bucket, credential_id, root_dir, endpoint):
    body = {"storage_type": storage_type, "bucket": bucket}
    if credential_id is not None:
        body["credential_id"] = credential_id
    if root_dir is not None:
        body["root_dir"] = root_dir
    if endpoint is not None:
        body["endpoint"] = endpoint
    emit(state, ApiClient(state).call("POST", "/buckets", json_body=body))


@main.group()
def credentials():
    """Sealed storage credentials."""


@credentials.command("add")
@click.option("--storage-type", type=click.Choice(["local", "s3-compatible", "gcs-compatible", "hdfs-compatible"]), required=True)
@click.option("--label", required=True)
@click.option("--key-material", default=None, help="Secret value; use --key-file for larger material.")
@click.option("--key-file", default=None, type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
@run_guarded
def credentials_add(state: CliState, storage_type, label, key_material, key_file):
    if (key_material is None) == (key_file is None):
        raise LakehouseError("provide exactly one of --key-material or --key-file")
    material = key_material if key_material is not None else Path(key_file).read_text(encoding="utf-8")
    body = {"storage_type": storage_type, "label": label, "key_material": material}
    emit(state, ApiClient(state).call("POST", "/credentials", json_body=body))


# -- access / visas -------------------------------------------------------------------


@main.group()
def access():
    """Access requests."""


REQUEST_COLUMNS = ("id", "collection_id", "requester_id", "status", "decided_by")


@access.command("request")
@click.argument("collection_id")
@click.option("--message", default=None)
@click.pass_obj
@run_guarded
def access_request(state: CliState, collection_id, message):
    body = {"collection_id": collection_id}
    if message is not None:
        body["message"] = message
    emit(state, ApiClient(state).call("POST", "/access-requests", json_body=body))


@access.command("list")
@click.option("--collection", "collection_id", default=None)
@click.pass_obj
@run_guarded
def access_list(state: CliState, collection_id):
    params = {"collection": collection_id} if collection_id else None
    emit(state, ApiClient(state).call("GET", "/access-requests", params=params), REQUEST_COLUMNS)


@access.command("decide")
@click.argument("request_id")
@click.option("--decision", type=click.Choice(["granted", "denied"]), required=True)
@click.pass_obj
@run_guarded
def access_decide(state: CliState, request_id, decision):
    body = {"decision": decision}
    emit(state, ApiClient(state).call("POST", f"/access-requests/{request_id}/decision", json_body=body))


@main.group()
def visas():
    """Per-collection grant management."""


@visas.command("grant")
@click.argument("visa_id")
@click.argument("user_id")
@click.pass_obj
@run_guarded
def visas_grant(state: CliState, visa_id, user_id):
    emit(state, ApiClient(state).call("POST", f"/visas/{visa_id}/grants", json_body={"user_id": user_id}))


@visas.command("revoke")
@click.argument("visa_id")
@click.argument("user_id")
@click.pass_obj
@run_guarded
def visas_revoke(state: CliState, visa_id, user_id):
    emit(state, ApiClient(state).call("DELETE", f"/visas/{visa_id}/grants/{user_id}"))


# -- admin -----------------------------------------------------------------------------


@main.group()
def admin():
    """Deployment operation."""


def _load_service_config(config_path: str | None, dev_insecure: bool) -> ServiceConfig:
    if config_path is not None:
        config = load_config(config_path)
    else:
        config = ServiceConfig()
    if dev_insecure:
        config.dev_insecure = True
    return config


@admin.command("serve")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
@click.option("--dev-insecure", is_flag=True, help="Generate a throwaway secret key; never for real data.")
@run_guarded
def admin_serve(config_path, host, port, dev_insecure):
    """Boot the gateway in-process and serve until interrupted."""
    import uvicorn

    from .gateway import create_app

    config = _load_service_config(config_path, dev_insecure)
    if host is not None:
        config.host = host
    if port is not None:
        config.port = port
    app = create_app(config, run_sweeper=True)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


@admin.group()
def janitor():
    """Reconciliation between the catalogue and object storage."""


@janitor.command("sweep")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--dev-insecure", is_flag=True, hidden=True)
@click.pass_obj
@run_guarded
def janitor_sweep(state: CliState, config_path, dev_insecure):
    """Settle due upload tickets; remote via the gateway, or local with --config."""
    if config_path is None:
        report = ApiClient(state).call("POST", "/admin/janitor/sweep")
    else:
        from .runtime import build_context

        context = build_context(_load_service_config(config_path, dev_insecure))
        report = context.janitor.sweep().to_dict()
    emit(state, report)
    if not state.quiet and not state.json_mode:
        click.echo(_sweep_summary(report))


def _sweep_summary(report: dict) -> str:
    return (
        f"sweep: {report.get('committed', 0)} committed, "
        f"{report.get('purged', 0)} purged, {report.get('skipped', 0)} skipped"
    )


@janitor.command("reconcile")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dev-insecure", is_flag=True, hidden=True)
@click.pass_obj
@run_guarded
def janitor_reconcile(state: CliState, config_path, dev_insecure):
    """Full catalogue-versus-storage audit; requires direct store access."""
    from .runtime import build_context

    context = build_context(_load_service_config(config_path, dev_insecure))
    report = context.janitor.reconcile_full()
    emit(state, report.to_dict())
    if not state.quiet and not state.json_mode:
        click.echo(
            f"reconcile: {report.ok} ok, {report.purged} purged, {len(report.flagged)} flagged"
        )


if __name__ == "__main__":
    main()
