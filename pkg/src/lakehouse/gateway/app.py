"""Application factory wiring the service context to the HTTP surface."""

from __future__ import annotations

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..config import ServiceConfig
from ..errors import HTTP_STATUS_BY_CODE, LakehouseError, ValidationError
from ..janitor import IntervalSweeper
from ..runtime import ServiceContext, build_context
from .facade import Facades
from .routes import router

log = logging.getLogger(__name__)


def _error_response(exc: LakehouseError) -> JSONResponse:
    return JSONResponse(status_code=HTTP_STATUS_BY_CODE[exc.code], content=exc.to_envelope())


def _validation_fields(exc: RequestValidationError) -> list[dict]:
    details = []
    for issue in exc.errors():
        locations = [str(part) for part in issue.get("loc", []) if part not in ("body", "query", "path")]
        details.append({"field": ".".join(locations) or "body", "message": issue.get("msg", "invalid value")})
    return details


def create_app(
    config: ServiceConfig | None = None,
    context: ServiceContext | None = None,
    run_sweeper: bool = False,
) -> FastAPI:
    if context is None:
        context = build_context(config or ServiceConfig(dev_insecure=True))
    limit = context.config.request_body_limit

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        sweeper = None
        if run_sweeper:
            sweeper = IntervalSweeper(context.janitor, context.config.janitor_interval_seconds)
            sweeper.start()
        try:
            yield
        finally:
            if sweeper is not None:
                sweeper.stop()

    app = FastAPI(docs_url=None, redoc_url=None, openapi_url=None, lifespan=lifespan)
    app.state.context = context
    app.state.facades = Facades(context)

    @app.exception_handler(LakehouseError)
    async def lakehouse_error_handler(request: Request, exc: LakehouseError):
        return _error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def request_validation_handler(request: Request, exc: RequestValidationError):
        error = ValidationError("request validation failed", details=_validation_fields(exc))
        return _error_response(error)

    @app.middleware("http")
    async def body_size_guard(request: Request, call_next):
        # Raw object uploads are exempt; the cap protects metadata endpoints only.
        if not request.url.path.startswith("/raw/"):
            declared = request.headers.get("content-length")
            if declared is not None and declared.isdigit() and int(declared) > limit:
                error = ValidationError(f"request body exceeds {limit} bytes")
                return _error_response(error)
        return await call_next(request)

    app.include_router(router)
    return app
