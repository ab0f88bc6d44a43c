"""Error taxonomy shared by all service layers.

Every failure surfaced to a caller carries exactly one code from
ERROR_CODES; the gateway maps codes onto HTTP statuses and the CLI maps
them onto exit codes. Internal retry signals (CAS races) are not part of
the taxonomy and never leave the service layer.
"""

from __future__ import annotations

ERROR_CODES = frozenset(
    {
        "validation",
        "authentication",
        "forbidden",
        "not_found",
        "conflict",
        "precondition_failed",
        "transport",
        "internal",
    }
)

HTTP_STATUS_BY_CODE = {
    "validation": 422,
    "authentication": 401,
    "forbidden": 403,
    "not_found": 404,
    "conflict": 409,
    "precondition_failed": 412,
    "transport": 502,
    "internal": 500,
}


class LakehouseError(Exception):
    """Base error; `code` must be a member of ERROR_CODES."""

    code = "internal"

    def __init__(self, message: str, details: list[dict] | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or []

    def to_envelope(self) -> dict:
        body: dict = {"error": {"code": self.code, "message": self.message}}
        if self.details:
            body["error"]["details"] = self.details
        return body


class ValidationError(LakehouseError):
    code = "validation"

    @classmethod
    def for_fields(cls, *fields: str, message: str | None = None) -> "ValidationError":
        msg = message or "invalid fields: " + ", ".join(fields)
        return cls(msg, details=[{"field": f} for f in fields])


class AuthenticationError(LakehouseError):
    code = "authentication"


class ForbiddenError(LakehouseError):
    code = "forbidden"


class NotFoundError(LakehouseError):
    code = "not_found"


class ConflictError(LakehouseError):
    code = "conflict"


class PreconditionFailedError(LakehouseError):
    code = "precondition_failed"


class TransportError(LakehouseError):
    code = "transport"


class InternalError(LakehouseError):
    code = "internal"


_ERROR_BY_CODE = {
    "validation": ValidationError,
    "authentication": AuthenticationError,
    "forbidden": ForbiddenError,
    "not_found": NotFoundError,
    "conflict": ConflictError,
    "precondition_failed": PreconditionFailedError,
    "transport": TransportError,
    "internal": InternalError,
}


def error_for_code(code: str, message: str, details: list[dict] | None = None) -> LakehouseError:
    cls = _ERROR_BY_CODE.get(code, InternalError)
    return cls(message, details)
