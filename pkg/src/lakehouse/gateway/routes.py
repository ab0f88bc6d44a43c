"""Route layer: the full HTTP surface, one facade call per endpoint."""

from __future__ import annotations

from fastapi import APIRouter, Depends, Query, Request, Response

from ..errors import AuthenticationError
from ..models import User
from .facade import Facades
from . import schemas

# The documented surface; the coverage test walks this table.
ROUTE_TABLE = [
    ("POST", "/auth/login"),
    ("POST", "/users"),
    ("PATCH", "/users/{user_id}"),
    ("DELETE", "/users/{user_id}"),
    ("POST", "/users/{user_id}/password-reset"),
    ("GET", "/collections"),
    ("POST", "/collections"),
    ("GET", "/collections/{collection_id}"),
    ("GET", "/collections/{collection_id}/files"),
    ("GET", "/files/search"),
    ("POST", "/files/search"),
    ("POST", "/files/upload-request"),
    ("POST", "/files/{file_id}/commit"),
    ("GET", "/files/{file_id}/download-url"),
    ("GET", "/buckets"),
    ("POST", "/buckets"),
    ("POST", "/credentials"),
    ("POST", "/access-requests"),
    ("GET", "/access-requests"),
    ("POST", "/access-requests/{request_id}/decision"),
    ("POST", "/visas/{visa_id}/grants"),
    ("DELETE", "/visas/{visa_id}/grants/{user_id}"),
]

# Byte-transfer and operator endpoints, outside the metadata surface.
RAW_ROUTE_TABLE = [
    ("PUT", "/raw/{ticket_id}"),
    ("GET", "/raw/{grant_id}"),
    ("POST", "/admin/janitor/sweep"),
]

router = APIRouter()


def _facades(request: Request) -> Facades:
    return request.app.state.facades


def _bearer_token(request: Request) -> str:
    header = request.headers.get("Authorization", "")
    scheme, _, token = header.partition(" ")
    if scheme.lower() != "bearer" or not token.strip():
        raise AuthenticationError("missing bearer token")
    return token.strip()


def require_user(request: Request) -> User:
    context = request.app.state.context
    return context.governance.authenticate(_bearer_token(request))


def optional_user(request: Request) -> User | None:
    if "Authorization" not in request.headers:
        return None
    return require_user(request)


# -- auth / users -------------------------------------------------------------


@router.post("/auth/login")
def login(body: schemas.LoginBody, request: Request):
    return _facades(request).governance.login(body.login_or_email, body.password)


@router.post("/users", status_code=201)
def create_user(body: schemas.CreateUserBody, request: Request, actor: User | None = Depends(optional_user)):
    return _facades(request).governance.create_user(body, actor)


@router.patch("/users/{user_id}")
def update_user(user_id: str, body: schemas.UpdateUserBody, request: Request, actor: User = Depends(require_user)):
    return _facades(request).governance.update_user(user_id, body, actor)


@router.delete("/users/{user_id}")
def delete_user(user_id: str, request: Request, actor: User = Depends(require_user)):
    return _facades(request).governance.delete_user(user_id, actor)


@router.post("/users/{user_id}/password-reset")
def password_reset(
    user_id: str,
    body: schemas.PasswordResetBody,
    request: Request,
    actor: User | None = Depends(optional_user),
):
    return _facades(request).governance.password_reset(user_id, body, actor)


# -- collections ---------------------------------------------------------------


@router.get("/collections")
def list_collections(
    request: Request,
    actor: User = Depends(require_user),
    offset: int = Query(default=0, ge=0),
    limit: int | None = Query(default=None, ge=1, le=1000),
):
    return _facades(request).catalogue.list_collections(offset, limit)


@router.post("/collections", status_code=201)
def create_collection(body: schemas.CreateCollectionBody, request: Request, actor: User = Depends(require_user)):
    return _facades(request).catalogue.create_collection(body, actor)


@router.get("/collections/{collection_id}")
def get_collection(collection_id: str, request: Request, actor: User = Depends(require_user)):
    return _facades(request).catalogue.get_collection(collection_id, actor)


@router.get("/collections/{collection_id}/files")
def list_files(
    collection_id: str,
    request: Request,
    actor: User = Depends(require_user),
    offset: int = Query(default=0, ge=0),
    limit: int | None = Query(default=None, ge=1, le=1000),
):
    return _facades(request).catalogue.list_files(collection_id, offset, limit)


# -- files ----------------------------------------------------------------------


@router.get("/files/search")
def basic_search(
    request: Request,
    actor: User = Depends(require_user),
    keyword: str = Query(min_length=1),
    offset: int = Query(default=0, ge=0),
    limit: int | None = Query(default=None, ge=1, le=1000),
):
    return _facades(request).catalogue.basic_search(keyword, offset, limit)


@router.post("/files/search")
def advanced_search(body: schemas.AdvancedSearchBody, request: Request, actor: User = Depends(require_user)):
    return _facades(request).catalogue.advanced_search(body)


@router.post("/files/upload-request", status_code=201)
def upload_request(body: schemas.UploadRequestBody, request: Request, actor: User = Depends(require_user)):
    return _facades(request).storage.request_upload(body, actor)


@router.post("/files/{file_id}/commit")
def commit_file(file_id: str, body: schemas.CommitBody, request: Request, actor: User = Depends(require_user)):
    return _facades(request).catalogue.commit_file(file_id, body, actor)


@router.get("/files/{file_id}/download-url")
def download_url(file_id: str, request: Request, actor: User = Depends(require_user)):
    return _facades(request).storage.download_url(file_id, actor)


# -- buckets / credentials ---------------------------------------------------------


@router.get("/buckets")
def list_buckets(request: Request, actor: User = Depends(require_user)):
    return _facades(request).storage.list_targets()


@router.post("/buckets", status_code=201)
def register_bucket(body: schemas.RegisterTargetBody, request: Request, actor: User = Depends(require_user)):
    return _facades(request).storage.register_target(body, actor)


@router.post("/credentials", status_code=201)
def add_credential(body: schemas.AddCredentialBody, request: Request, actor: User = Depends(require_user)):
    return _facades(request).governance.add_credential(body, actor)


# -- access requests / visas ----------------------------------------------------------


@router.post("/access-requests", status_code=201)
def submit_access_request(body: schemas.AccessRequestBody, request: Request, actor: User = Depends(require_user)):
    return _facades(request).governance.submit_access_request(body, actor)


@router.get("/access-requests")
def list_access_requests(
    request: Request,
    actor: User = Depends(require_user),
    collection: str | None = Query(default=None),
):
    return _facades(request).governance.list_access_requests(collection, actor)


@router.post("/access-requests/{request_id}/decision")
def decide_access_request(
    request_id: str, body: schemas.DecisionBody, request: Request, actor: User = Depends(require_user)
):
    return _facades(request).governance.decide_access_request(request_id, body, actor)


@router.post("/visas/{visa_id}/grants")
def grant_visa(visa_id: str, body: schemas.GrantBody, request: Request, actor: User = Depends(require_user)):
    return _facades(request).governance.set_grant(visa_id, body.user_id, "grant", actor)


@router.delete("/visas/{visa_id}/grants/{user_id}")
def revoke_visa(visa_id: str, user_id: str, request: Request, actor: User = Depends(require_user)):
    return _facades(request).governance.set_grant(visa_id, user_id, "revoke", actor)


# -- raw byte transfer (ticket/grant is the capability; no bearer header) -------------


@router.put("/raw/{ticket_id}")
async def raw_upload(ticket_id: str, request: Request):
    data = await request.body()
    return _facades(request).storage.raw_upload(ticket_id, data)


@router.get("/raw/{grant_id}")
def raw_download(grant_id: str, request: Request):
    data, file_name = _facades(request).storage.raw_download(grant_id)
    return Response(
        content=data,
        media_type="application/octet-stream",
        headers={"Content-Disposition": f'attachment; filename="{file_name}"'},
    )


# -- admin ------------------------------------------------------------------------------


@router.post("/admin/janitor/sweep")
def janitor_sweep(request: Request, actor: User = Depends(require_user)):
    return _facades(request).janitor.sweep(actor)
