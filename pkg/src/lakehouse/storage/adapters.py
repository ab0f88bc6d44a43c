"""Storage backend adapters.

One contract federates every backend: put/get/stat/delete/list on opaque
object paths. Stored bytes are never transformed — read-back equals write
exactly. The local adapter is the production backend at desk scale; the
remote types (s3/gcs/hdfs-compatible) share the contract but ship as
unconfigured stubs until a deployment wires real endpoints.
"""

from __future__ import annotations

import os
import tempfile
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

from ..errors import NotFoundError, TransportError, ValidationError


@dataclass(frozen=True)
class ObjectStat:
    size: int


class StorageAdapter(ABC):
    """Backend contract. Paths are forward-slash relative object names."""

    @abstractmethod
    def put_object(self, path: str, data: bytes) -> None:
        ...

    @abstractmethod
    def get_object(self, path: str) -> bytes:
        ...

    @abstractmethod
    def stat_object(self, path: str) -> ObjectStat | None:
        """None when the object is absent; raises TransportError when unsure."""

    @abstractmethod
    def delete_object(self, path: str) -> None:
        """Idempotent: deleting an absent object succeeds."""

    @abstractmethod
    def list_objects(self, prefix: str = "") -> list[str]:
        ...

    def object_exists(self, path: str) -> bool:
        return self.stat_object(path) is not None


class LocalStorageAdapter(StorageAdapter):
    """Objects as files under one root directory per bucket.

    Writes land in a temp file and rename into place, so a partially
    uploaded object is never visible to stat/exists. Every path is
    resolved and must stay inside the root; traversal attempts reject.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _resolve(self, path: str) -> Path:
        if not path or path.startswith(("/", "\\")) or "\\" in path:
            raise ValidationError(f"invalid object path {path!r}")
        candidate = (self.root / path).resolve()
        if not candidate.is_relative_to(self.root.resolve()):
            raise ValidationError(f"object path escapes storage root: {path!r}")
        return candidate

    def put_object(self, path: str, data: bytes) -> None:
        target = self._resolve(path)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=".upload-")
            try:
                with os.fdopen(fd, "wb") as handle:
                    handle.write(data)
                os.replace(tmp_name, target)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
        except OSError as exc:
            raise TransportError(f"local backend write failed: {exc}") from exc

    def get_object(self, path: str) -> bytes:
        target = self._resolve(path)
        try:
            return target.read_bytes()
        except FileNotFoundError:
            raise NotFoundError(f"object {path} not found") from None
        except OSError as exc:
            raise TransportError(f"local backend read failed: {exc}") from exc

    def stat_object(self, path: str) -> ObjectStat | None:
        target = self._resolve(path)
        if not self.root.exists():
            raise TransportError(f"storage root {self.root} is unreachable")
        try:
            if not target.is_file():
                return None
            return ObjectStat(size=target.stat().st_size)
        except OSError as exc:
            raise TransportError(f"local backend stat failed: {exc}") from exc

    def delete_object(self, path: str) -> None:
        target = self._resolve(path)
        try:
            target.unlink(missing_ok=True)
        except OSError as exc:
            raise TransportError(f"local backend delete failed: {exc}") from exc

    def list_objects(self, prefix: str = "") -> list[str]:
        if not self.root.exists():
            raise TransportError(f"storage root {self.root} is unreachable")
        paths = []
        for file in self.root.rglob("*"):
            if file.is_file() and not file.name.startswith(".upload-"):
                rel = file.relative_to(self.root).as_posix()
                if rel.startswith(prefix):
                    paths.append(rel)
        return sorted(paths)


class MemoryStorageAdapter(StorageAdapter):
    """Dict-backed backend for tests and adapter-contract checks."""

    def __init__(self) -> None:
        self._objects: dict[str, bytes] = {}
        self.fail_transport = False  # when set, every call raises TransportError

    def _check(self) -> None:
        if self.fail_transport:
            raise TransportError("memory backend unreachable (test fault injected)")

    def put_object(self, path: str, data: bytes) -> None:
        self._check()
        self._objects[path] = bytes(data)

    def get_object(self, path: str) -> bytes:
        self._check()
        if path not in self._objects:
            raise NotFoundError(f"object {path} not found")
        return self._objects[path]

    def stat_object(self, path: str) -> ObjectStat | None:
        self._check()
        data = self._objects.get(path)
        return ObjectStat(size=len(data)) if data is not None else None

    def delete_object(self, path: str) -> None:
        self._check()
        self._objects.pop(path, None)

    def list_objects(self, prefix: str = "") -> list[str]:
        self._check()
        return sorted(p for p in self._objects if p.startswith(prefix))


class UnconfiguredRemoteAdapter(StorageAdapter):
    """Contract stub for s3/gcs/hdfs-compatible targets.

    Wiring real vendor endpoints is deployment work; until then every
    operation fails loudly as a transport error.
    """

    def __init__(self, storage_type: str, bucket: str):
        self.storage_type = storage_type
        self.bucket = bucket

    def _fail(self) -> TransportError:
        return TransportError(
            f"adapter not configured for {self.storage_type} bucket {self.bucket!r}"
        )

    def put_object(self, path: str, data: bytes) -> None:
        raise self._fail()

    def get_object(self, path: str) -> bytes:
        raise self._fail()

    def stat_object(self, path: str) -> ObjectStat | None:
        raise self._fail()

    def delete_object(self, path: str) -> None:
        raise self._fail()

    def list_objects(self, prefix: str = "") -> list[str]:
        raise self._fail()
