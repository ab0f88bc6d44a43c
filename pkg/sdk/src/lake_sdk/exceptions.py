"""Typed errors mirroring the gateway's error envelope.

Every failed call raises a subclass carrying the server's error code
verbatim plus any field details, so callers can branch on the class (or
on ``.code``) instead of inspecting HTTP statuses.
"""

from __future__ import annotations


class LakeError(Exception):
    """Base class; ``code`` matches the gateway envelope's error code."""

    code = "internal"

    def __init__(self, message: str, details: list | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or []


class LakeValidationError(LakeError):
    code = "validation"


class LakeAuthenticationError(LakeError):
    code = "authentication"


class LakeForbiddenError(LakeError):
    code = "forbidden"


class LakeNotFoundError(LakeError):
    code = "not_found"


class LakeConflictError(LakeError):
    code = "conflict"


class LakePreconditionFailedError(LakeError):
    code = "precondition_failed"


class LakeTransportError(LakeError):
    code = "transport"


class LakeInternalError(LakeError):
    code = "internal"


_ERROR_BY_CODE = {
    cls.code: cls
    for cls in (
        LakeValidationError,
        LakeAuthenticationError,
        LakeForbiddenError,
        LakeNotFoundError,
        LakeConflictError,
        LakePreconditionFailedError,
        LakeTransportError,
        LakeInternalError,
    )
}


def error_from_envelope(payload: object, status: int) -> LakeError:
    """Build the typed error for a >=400 response body."""
    body = payload.get("error", {}) if isinstance(payload, dict) else {}
    if not isinstance(body, dict):
        body = {}
    cls = _ERROR_BY_CODE.get(body.get("code"), LakeInternalError)
    message = body.get("message") or f"gateway returned HTTP {status}"
    details = body.get("details")
    return cls(message, details if isinstance(details, list) else None)
