"""The analyst-facing client for the lakehouse gateway.

Wraps the HTTP surface 1:1 behind one object so day-to-day work (browse,
search, fetch a table, push a table) is a single call each. Uploads run
the full ticket flow: request a direct-upload URL, push the bytes, then
commit the record.
"""

from __future__ import annotations

import hashlib
import io
import re
from pathlib import Path
from typing import Iterable

import httpx
import pandas as pd

from .exceptions import (
    LakeAuthenticationError,
    LakeTransportError,
    LakeValidationError,
    error_from_envelope,
)

_SEPARATORS = re.compile(r"[/\\]+")


def normalize_file_name(raw: str) -> str:
    """Basename of a path in either separator convention.

    Windows-style and POSIX-style inputs both reduce to the last segment,
    so "files\\sample\\sequences.fasta" and "files/sample/sequences.fasta"
    name the same server-side file.
    """
    trimmed = raw.strip().rstrip("/\\")
    parts = [part for part in _SEPARATORS.split(trimmed) if part]
    if not parts:
        raise LakeValidationError(f"cannot derive a file name from {raw!r}")
    return parts[-1]


class LakeClient:
    """One session against a gateway; authenticate before anything else.

    A client instance is not safe for concurrent use. Create one per
    thread of control.
    """

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._token: str | None = None
        self._http = httpx.Client(timeout=timeout)

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "LakeClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    @property
    def authenticated(self) -> bool:
        return self._token is not None

    # -- plumbing ---------------------------------------------------------

    def _request(self, method: str, url: str, *, authed: bool = True, **kwargs) -> httpx.Response:
        if authed:
            if self._token is None:
                raise LakeAuthenticationError("client is not authenticated; call authenticate() first")
            kwargs.setdefault("headers", {})["Authorization"] = f"Bearer {self._token}"
        if not url.startswith(("http://", "https://")):
            url = f"{self.base_url}{url}"
        try:
            response = self._http.request(method, url, **kwargs)
        except httpx.HTTPError as exc:
            raise LakeTransportError(f"gateway unreachable: {exc}") from exc
        if response.status_code >= 400:
            try:
                payload = response.json()
            except ValueError:
                payload = None
            raise error_from_envelope(payload, response.status_code)
        return response

    def _call(self, method: str, path: str, *, authed: bool = True, **kwargs):
        return self._request(method, path, authed=authed, **kwargs).json()

    def _push_and_commit(
        self,
        data: bytes,
        final_file_name: str,
        file_category: str,
        collection_id: str,
        version: int | None,
    ) -> dict:
        body = {
            "collection_id": collection_id,
            "final_file_name": final_file_name,
            "file_category": file_category,
        }
        if version is not None:
            body["version"] = version
        ticket = self._call("POST", "/files/upload-request", json=body)
        self._request("PUT", ticket["upload_url"], content=data)
        return self._call(
            "POST",
            f"/files/{ticket['record']['id']}/commit",
            json={"size_bytes": len(data), "checksum": hashlib.sha256(data).hexdigest()},
        )

    def _fetch_bytes(self, file_id: str) -> tuple[bytes, str | None]:
        grant = self._call("GET", f"/files/{file_id}/download-url")
        response = self._request("GET", grant["url"])
        match = re.search(r'filename="([^"]+)"', response.headers.get("Content-Disposition", ""))
        return response.content, match.group(1) if match else None

    # -- session ----------------------------------------------------------

    def authenticate(self, login_or_email: str, password: str) -> dict:
        """Log in and keep the session token on the client. Returns the user."""
        payload = self._call(
            "POST",
            "/auth/login",
            authed=False,
            json={"login_or_email": login_or_email, "password": password},
        )
        self._token = payload["token"]
        return payload["user"]

    # -- catalogue --------------------------------------------------------

    def list_collections(self, offset: int = 0, limit: int | None = None) -> list[dict]:
        return self._call("GET", "/collections", params=_page(offset, limit))

    def list_files(self, collection_id: str, offset: int = 0, limit: int | None = None) -> list[dict]:
        return self._call("GET", f"/collections/{collection_id}/files", params=_page(offset, limit))

    def search_files(self, keyword: str, offset: int = 0, limit: int | None = None) -> list[dict]:
        """Committed files whose name contains the keyword, case-insensitively."""
        params = {"keyword": keyword, **_page(offset, limit)}
        return self._call("GET", "/files/search", params=params)

    def query_files(
        self, filters: Iterable[str], offset: int = 0, limit: int | None = None
    ) -> list[dict]:
        """Field search from "field=value" strings, combined conjunctively."""
        body: dict = {"filters": list(filters), "offset": offset}
        if limit is not None:
            body["limit"] = limit
        return self._call("POST", "/files/search", json=body)

    def list_buckets(self) -> list[dict]:
        return self._call("GET", "/buckets")

    def create_collection(self, collection_name: str, storage_type: str, bucket_name: str) -> dict:
        return self._call(
            "POST",
            "/collections",
            json={"name": collection_name, "storage_type": storage_type, "bucket": bucket_name},
        )

    # -- files ------------------------------------------------------------

    def upload_file(
        self,
        local_file_path: str,
        final_file_name: str | None,
        file_category: str,
        collection_catalogue_id: str,
        version: int | None = None,
    ) -> dict:
        """Ticket request, byte push, and commit as one call.

        ``final_file_name`` (or, when it is None, the local path) may use
        either separator convention; only the basename reaches the server.
        """
        source = Path(local_file_path)
        if not source.is_file():
            raise LakeValidationError(f"no such file: {local_file_path}")
        name = normalize_file_name(final_file_name or str(local_file_path))
        return self._push_and_commit(
            source.read_bytes(), name, file_category, collection_catalogue_id, version
        )

    def download_file(self, file_id: str, dest_path: str) -> Path:
        """Fetch the bytes behind a committed file to a local path.

        When ``dest_path`` is a directory, the server's file name is used
        inside it. Returns the path written.
        """
        data, server_name = self._fetch_bytes(file_id)
        dest = Path(dest_path)
        if dest.is_dir():
            dest = dest / (server_name or file_id)
        dest.write_bytes(data)
        return dest

    # -- dataframes ---------------------------------------------------------

    def get_dataframe(self, file_id: str) -> pd.DataFrame:
        """Download a structured file and parse the CSV into a DataFrame.

        Empty cells come back as empty strings rather than NaN, so text
        columns survive a round trip unchanged.
        """
        data, _ = self._fetch_bytes(file_id)
        return pd.read_csv(io.BytesIO(data), keep_default_na=False)

    def upload_dataframe(
        self,
        table: pd.DataFrame,
        final_file_name: str,
        collection_catalogue_id: str,
        version: int | None = None,
    ) -> dict:
        """Serialize a DataFrame to CSV (header row included) and upload it
        as a structured file."""
        data = table.to_csv(index=False).encode()
        name = normalize_file_name(final_file_name)
        return self._push_and_commit(data, name, "structured", collection_catalogue_id, version)

    # -- governance ---------------------------------------------------------

    def request_access(self, collection_id: str, message: str | None = None) -> dict:
        body: dict = {"collection_id": collection_id}
        if message is not None:
            body["message"] = message
        return self._call("POST", "/access-requests", json=body)


def _page(offset: int, limit: int | None) -> dict:
    params: dict = {"offset": offset}
    if limit is not None:
        params["limit"] = limit
    return params
