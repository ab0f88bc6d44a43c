"""Client library for the lakehouse governance gateway."""

from .client import LakeClient, normalize_file_name
from .exceptions import (
    LakeAuthenticationError,
    LakeConflictError,
    LakeError,
    LakeForbiddenError,
    LakeInternalError,
    LakeNotFoundError,
    LakePreconditionFailedError,
    LakeTransportError,
    LakeValidationError,
)

__all__ = [
    "LakeClient",
    "normalize_file_name",
    "LakeError",
    "LakeValidationError",
    "LakeAuthenticationError",
    "LakeForbiddenError",
    "LakeNotFoundError",
    "LakeConflictError",
    "LakePreconditionFailedError",
    "LakeTransportError",
    "LakeInternalError",
]
