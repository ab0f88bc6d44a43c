from .adapters import (
    LocalStorageAdapter,
    MemoryStorageAdapter,
    ObjectStat,
    StorageAdapter,
    UnconfiguredRemoteAdapter,
)
from .service import StorageService, UploadQueue

__all__ = [
    "LocalStorageAdapter",
    "MemoryStorageAdapter",
    "ObjectStat",
    "StorageAdapter",
    "StorageService",
    "UnconfiguredRemoteAdapter",
    "UploadQueue",
]
