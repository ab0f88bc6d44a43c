"""HTTP surface: route coverage, auth, error envelopes, end-to-end flows."""

import pytest

from lakehouse.errors import HTTP_STATUS_BY_CODE
from lakehouse.gateway.routes import RAW_ROUTE_TABLE, ROUTE_TABLE, router

from conftest import login_headers


def test_route_table_matches_registered_routes():
    registered = set()
    for route in router.routes:
        for method in route.methods - {"HEAD", "OPTIONS"}:
            registered.add((method, route.path))
    assert registered == set(ROUTE_TABLE) | set(RAW_ROUTE_TABLE)


def test_documented_route_count():
    assert len(ROUTE_TABLE) == 22
    assert len(set(ROUTE_TABLE)) == 22


@pytest.fixture
def manager_headers(client, manager):
    return login_headers(client, "manager", "pw-manager")


@pytest.fixture
def owner_headers(client, owner):
    return login_headers(client, "owner", "pw-owner")


@pytest.fixture
def reader_headers(client, reader):
    return login_headers(client, "reader", "pw-reader")


@pytest.fixture
def collection_id(client, manager_headers, owner_headers):
    response = client.post("/buckets", json={"storage_type": "local", "bucket": "main"}, headers=manager_headers)
    assert response.status_code == 201
    response = client.post(
        "/collections",
        json={"name": "trial", "storage_type": "local", "bucket": "main"},
        headers=owner_headers,
    )
    assert response.status_code == 201
    return response.json()["id"]


def upload_file(client, headers, collection_id, name="zika.csv", category="structured", data=b"a,b\n1,2\n"):
    response = client.post(
        "/files/upload-request",
        json={"collection_id": collection_id, "final_file_name": name, "file_category": category},
        headers=headers,
    )
    assert response.status_code == 201, response.text
    ticket = response.json()
    response = client.put(f"/raw/{ticket['ticket_id']}", content=data)
    assert response.status_code == 200, response.text
    response = client.post(f"/files/{ticket['record']['id']}/commit", json={}, headers=headers)
    assert response.status_code == 200, response.text
    return response.json()


class TestAuthSurface:
    def test_login_returns_token_and_user(self, client, reader):
        response = client.post("/auth/login", json={"login_or_email": "reader", "password": "pw-reader"})
        assert response.status_code == 200
        body = response.json()
        assert body["user"]["login"] == "reader"
        assert "token" in body and "expires_at" in body

    def test_bad_login_is_401_envelope(self, client, reader):
        response = client.post("/auth/login", json={"login_or_email": "reader", "password": "nope"})
        assert response.status_code == 401
        assert response.json()["error"]["code"] == "authentication"

    def test_missing_bearer_token(self, client):
        response = client.get("/collections")
        assert response.status_code == 401
        assert response.json()["error"]["code"] == "authentication"

    def test_malformed_authorization_header(self, client, reader_headers):
        response = client.get("/collections", headers={"Authorization": "Basic abc"})
        assert response.status_code == 401

    def test_expired_token_rejected(self, client, clock, reader, context):
        headers = login_headers(client, "reader", "pw-reader")
        clock.advance(context.config.token_ttl_seconds + 1)
        assert client.get("/collections", headers=headers).status_code == 401

    def test_signup_open_registration(self, client):
        response = client.post(
            "/users", json={"email": "new@b.io", "login": "new", "password": "pw"}
        )
        assert response.status_code == 201
        assert response.json()["role"] == "consumer"
        assert "password_hash" not in response.json()

    def test_password_reset_issue_and_redeem(self, client, manager_headers, reader):
        response = client.post(f"/users/{reader.id}/password-reset", json={}, headers=manager_headers)
        assert response.status_code == 200
        token = response.json()["reset_token"]
        response = client.post(
            f"/users/{reader.id}/password-reset",
            json={"reset_token": token, "new_password": "brand-new"},
        )
        assert response.status_code == 200
        assert client.post(
            "/auth/login", json={"login_or_email": "reader", "password": "brand-new"}
        ).status_code == 200

    def test_reset_redeem_needs_both_fields(self, client, reader):
        response = client.post(f"/users/{reader.id}/password-reset", json={"reset_token": "x"})
        assert response.status_code == 422


class TestErrorEnvelopes:
    def test_not_found_envelope(self, client, reader_headers):
        response = client.get("/collections/ghost", headers=reader_headers)
        assert response.status_code == 404
        body = response.json()["error"]
        assert body["code"] == "not_found" and body["message"]

    def test_validation_envelope_names_fields(self, client, reader_headers):
        response = client.post(
            "/collections", json={"name": "x", "storage_type": "floppy", "bucket": "b"}, headers=reader_headers
        )
        assert response.status_code == 422
        details = response.json()["error"]["details"]
        assert any("storage_type" in d["field"] for d in details)

    def test_unknown_body_fields_rejected(self, client, reader):
        response = client.post(
            "/auth/login", json={"login_or_email": "reader", "password": "pw-reader", "extra": 1}
        )
        assert response.status_code == 422

    def test_status_map_is_total(self):
        assert set(HTTP_STATUS_BY_CODE) == {
            "validation",
            "authentication",
            "forbidden",
            "not_found",
            "conflict",
            "precondition_failed",
            "transport",
            "internal",
        }

    def test_oversized_metadata_body_rejected(self, client, context, reader_headers):
        response = client.post(
            "/files/search",
            content=b"{}",
            headers={**reader_headers, "Content-Length": str(context.config.request_body_limit + 1),
                     "Content-Type": "application/json"},
        )
        assert response.status_code == 422

    def test_raw_endpoint_exempt_from_body_cap(self, client, context, owner_headers, collection_id):
        response = client.post(
            "/files/upload-request",
            json={"collection_id": collection_id, "final_file_name": "big.bin", "file_category": "unstructured"},
            headers=owner_headers,
        )
        ticket = response.json()
        big = b"x" * (2 * 1024 * 1024)
        assert client.put(f"/raw/{ticket['ticket_id']}", content=big).status_code == 200


class TestCollectionsSurface:
    def test_create_list_show(self, client, owner_headers, collection_id):
        listing = client.get("/collections", headers=owner_headers).json()
        assert [c["id"] for c in listing] == [collection_id]
        shown = client.get(f"/collections/{collection_id}", headers=owner_headers).json()
        assert shown["has_access"] is True
        assert "visa" in shown  # owner sees grant state

    def test_non_owner_sees_no_visa_detail(self, client, reader_headers, collection_id):
        shown = client.get(f"/collections/{collection_id}", headers=reader_headers).json()
        assert shown["has_access"] is False
        assert "visa" not in shown

    def test_duplicate_collection_conflicts(self, client, owner_headers, collection_id):
        response = client.post(
            "/collections",
            json={"name": "trial", "storage_type": "local", "bucket": "main"},
            headers=owner_headers,
        )
        assert response.status_code == 409


class TestFileSurface:
    def test_upload_and_listing(self, client, owner_headers, collection_id):
        committed = upload_file(client, owner_headers, collection_id)
        assert committed["status"] == "committed"
        assert committed["storage_path"] == "trial/v1/zika.csv"
        files = client.get(f"/collections/{collection_id}/files", headers=owner_headers).json()
        assert [f["id"] for f in files] == [committed["id"]]

    def test_search_both_modes(self, client, owner_headers, collection_id):
        upload_file(client, owner_headers, collection_id, name="sequences.fasta", category="unstructured")
        hits = client.get("/files/search", params={"keyword": "sequences"}, headers=owner_headers).json()
        assert [h["file_name"] for h in hits] == ["sequences.fasta"]
        hits = client.post(
            "/files/search",
            json={"filters": ["file_name=sequences.fasta", "file_category=unstructured"]},
            headers=owner_headers,
        ).json()
        assert len(hits) == 1

    def test_pending_upload_not_visible(self, client, owner_headers, collection_id):
        client.post(
            "/files/upload-request",
            json={"collection_id": collection_id, "final_file_name": "ghost.csv", "file_category": "structured"},
            headers=owner_headers,
        )
        assert client.get("/files/search", params={"keyword": "ghost"}, headers=owner_headers).json() == []

    def test_version_conflict_over_http(self, client, owner_headers, collection_id):
        body = {
            "collection_id": collection_id,
            "final_file_name": "v.csv",
            "file_category": "structured",
            "version": 1,
        }
        assert client.post("/files/upload-request", json=body, headers=owner_headers).status_code == 201
        response = client.post("/files/upload-request", json=body, headers=owner_headers)
        assert response.status_code == 409

    def test_upload_requires_visa(self, client, reader_headers, collection_id):
        response = client.post(
            "/files/upload-request",
            json={"collection_id": collection_id, "final_file_name": "x.csv", "file_category": "structured"},
            headers=reader_headers,
        )
        assert response.status_code == 403

    def test_commit_before_bytes_is_precondition_failure(self, client, owner_headers, collection_id):
        ticket = client.post(
            "/files/upload-request",
            json={"collection_id": collection_id, "final_file_name": "late.csv", "file_category": "structured"},
            headers=owner_headers,
        ).json()
        response = client.post(f"/files/{ticket['record']['id']}/commit", json={}, headers=owner_headers)
        assert response.status_code == 412

    def test_raw_roundtrip_and_download_url(self, client, owner_headers, collection_id):
        committed = upload_file(client, owner_headers, collection_id, data=b"payload")
        grant = client.get(f"/files/{committed['id']}/download-url", headers=owner_headers).json()
        response = client.get(grant["url"])
        assert response.status_code == 200
        assert response.content == b"payload"
        assert 'filename="zika.csv"' in response.headers["Content-Disposition"]

    def test_expired_ticket_rejected_with_403(self, client, clock, context, owner_headers, collection_id):
        ticket = client.post(
            "/files/upload-request",
            json={"collection_id": collection_id, "final_file_name": "slow.csv", "file_category": "structured"},
            headers=owner_headers,
        ).json()
        clock.advance(context.config.upload_ticket_ttl_seconds + 1)
        assert client.put(f"/raw/{ticket['ticket_id']}", content=b"late").status_code == 403

    def test_expired_download_url_rejected_with_403(self, client, clock, context, owner_headers, collection_id):
        committed = upload_file(client, owner_headers, collection_id, name="exp.csv")
        grant = client.get(f"/files/{committed['id']}/download-url", headers=owner_headers).json()
        clock.advance(context.config.download_url_ttl_seconds + 1)
        assert client.get(grant["url"]).status_code == 403

    def test_download_needs_access(self, client, owner_headers, reader_headers, collection_id):
        committed = upload_file(client, owner_headers, collection_id, name="gated.csv")
        response = client.get(f"/files/{committed['id']}/download-url", headers=reader_headers)
        assert response.status_code == 403


class TestGovernanceSurface:
    def test_access_request_grant_flow(self, client, owner_headers, reader_headers, reader, collection_id):
        committed = upload_file(client, owner_headers, collection_id, name="shared.csv")
        request = client.post(
            "/access-requests", json={"collection_id": collection_id}, headers=reader_headers
        ).json()
        inbox = client.get(
            "/access-requests", params={"collection": collection_id}, headers=owner_headers
        ).json()
        assert [r["request_id"] for r in inbox] == [request["request_id"]]
        decided = client.post(
            f"/access-requests/{request['request_id']}/decision",
            json={"decision": "granted"},
            headers=owner_headers,
        )
        assert decided.status_code == 200
        grant = client.get(f"/files/{committed['id']}/download-url", headers=reader_headers)
        assert grant.status_code == 200

    def test_non_owner_cannot_read_inbox(self, client, reader_headers, collection_id):
        response = client.get(
            "/access-requests", params={"collection": collection_id}, headers=reader_headers
        )
        assert response.status_code == 403

    def test_decide_twice_conflicts(self, client, owner_headers, reader_headers, collection_id):
        request = client.post(
            "/access-requests", json={"collection_id": collection_id}, headers=reader_headers
        ).json()
        url = f"/access-requests/{request['request_id']}/decision"
        assert client.post(url, json={"decision": "denied"}, headers=owner_headers).status_code == 200
        assert client.post(url, json={"decision": "granted"}, headers=owner_headers).status_code == 409

    def test_visa_grant_and_revoke_routes(self, client, owner_headers, reader, collection_id):
        visa_id = client.get(f"/collections/{collection_id}", headers=owner_headers).json()["visa"]["visa_id"]
        granted = client.post(f"/visas/{visa_id}/grants", json={"user_id": reader.id}, headers=owner_headers)
        assert granted.status_code == 200
        assert reader.id in granted.json()["active"]
        revoked = client.delete(f"/visas/{visa_id}/grants/{reader.id}", headers=owner_headers)
        assert revoked.status_code == 200
        assert reader.id not in revoked.json()["active"]

    def test_grant_to_unknown_user_404(self, client, owner_headers, collection_id):
        visa_id = client.get(f"/collections/{collection_id}", headers=owner_headers).json()["visa"]["visa_id"]
        response = client.post(f"/visas/{visa_id}/grants", json={"user_id": "ghost"}, headers=owner_headers)
        assert response.status_code == 404

    def test_credentials_manager_only(self, client, manager_headers, reader_headers):
        body = {"storage_type": "s3-compatible", "label": "lab", "key_material": "KEY"}
        assert client.post("/credentials", json=body, headers=reader_headers).status_code == 403
        response = client.post("/credentials", json=body, headers=manager_headers)
        assert response.status_code == 201
        assert "key_material" not in response.json()
        assert "ciphertext" not in response.json()


class TestAdminSurface:
    def test_sweep_is_manager_only(self, client, manager_headers, reader_headers):
        assert client.post("/admin/janitor/sweep", headers=reader_headers).status_code == 403
        response = client.post("/admin/janitor/sweep", headers=manager_headers)
        assert response.status_code == 200
        assert set(response.json()) == {"committed", "purged", "skipped"}

    def test_buckets_listing(self, client, manager_headers, collection_id):
        listing = client.get("/buckets", headers=manager_headers).json()
        assert listing == [{"storage_type": "local", "bucket": "main", "credential_id": None}]
