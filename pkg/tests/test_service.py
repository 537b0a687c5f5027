"""HTTP session tests: endpoints mirror audit-core, writes persist."""

from __future__ import annotations

import json
import threading
from pathlib import Path

import httpx
import pytest

from effaudit.audit import (
    CALLER_CHECKED,
    SAFE,
    AuditFile,
    annotate,
    new_audit,
)
from effaudit.scanner import scan_package
from effaudit.service import AuditSession, make_server

FIXTURES = Path(__file__).parent / "fixtures" / "scan"


@pytest.fixture()
def session(tmp_path):
    root = FIXTURES / "sink_net"
    scan = scan_package(root)
    audit = new_audit(scan)
    audit_path = tmp_path / "audit.json"
    audit_path.write_text(audit.dumps(), encoding="utf-8")
    return AuditSession(scan, audit, root, audit_path=audit_path)


@pytest.fixture()
def client(session):
    server = make_server(session)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_port}"
    with httpx.Client(base_url=base, timeout=5.0) as c:
        yield c
    server.shutdown()
    server.server_close()


def test_meta_and_progress(client, session):
    meta = client.get("/api/meta").json()
    assert meta["package"] == "sink-net 0.1.0"
    assert meta["fingerprint"] == session.scan.fingerprint()
    assert meta["status"] == "partial"
    progress = client.get("/api/progress").json()
    assert progress == {
        "total": 1,
        "annotated": 0,
        "remaining": 1,
        "by_annotation": {"Safe": 0, "Unsafe": 0, "CallerChecked": 0},
        "status": "partial",
    }


def test_item_list_and_filters(client):
    items = client.get("/api/items").json()["items"]
    assert len(items) == 1
    assert items[0]["kind"]["name"] == "SinkCall"
    assert items[0]["containing_fn"] == "sink_net::AddrIncoming::new"
    assert client.get("/api/items", params={"kind": "SinkCall"}).json()["items"]
    assert client.get(
        "/api/items", params={"kind": "SinkCall(std::net)"}
    ).json()["items"]
    assert client.get("/api/items", params={"kind": "FFICall"}).json()["items"] == []
    assert client.get(
        "/api/items", params={"state": "unannotated"}
    ).json()["items"]
    assert client.get("/api/items", params={"state": "Safe"}).json()["items"] == []


def test_context_returns_containing_fn_span(client):
    items = client.get("/api/items").json()["items"]
    ctx = client.get(f"/api/items/{items[0]['id']}/context").json()
    assert ctx["function"] == "sink_net::AddrIncoming::new"
    assert ctx["file"] == "src/lib.rs"
    assert (ctx["start_line"], ctx["end_line"]) == (6, 10)
    assert any("TcpListener::bind" in line for line in ctx["lines"])
    assert ctx["item"]["location"]["line"] == 7


def test_function_context_endpoint(client):
    ctx = client.get(
        "/api/context", params={"fn": "sink_net::serve"}
    ).json()
    assert (ctx["start_line"], ctx["end_line"]) == (13, 15)
    assert "AddrIncoming::new(addr)" in ctx["lines"][1]


def test_callers_navigation(client):
    data = client.get(
        "/api/callers", params={"fn": "sink_net::AddrIncoming::new"}
    ).json()
    assert len(data["callers"]) == 1
    assert data["callers"][0]["caller"] == "sink_net::serve"
    assert data["callers"][0]["dispatch"] == "direct"
    leaf = client.get("/api/callers", params={"fn": "sink_net::serve"}).json()
    assert leaf["callers"] == []


def test_annotate_caller_checked_spawns_wrapper_site(client, session):
    items = client.get("/api/items").json()["items"]
    resp = client.post(
        f"/api/items/{items[0]['id']}/annotate",
        json={"annotation": CALLER_CHECKED},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["item"]["annotation"] == CALLER_CHECKED
    assert len(body["spawned"]) == 1
    spawned = body["spawned"][0]
    assert spawned["containing_fn"] == "sink_net::serve"
    assert spawned["origin"] == "propagated"
    assert body["progress"]["annotated"] == 1
    assert body["progress"]["remaining"] == 1
    assert body["exported_cc"] == ["sink_net::AddrIncoming::new"]
    # the judgment landed on disk before the response
    on_disk = AuditFile.from_json(
        json.loads(session.audit_path.read_text("utf-8"))
    )
    assert on_disk.dumps() == session.audit.dumps()
    assert len(on_disk.items) == 2


def test_annotate_errors(client, session):
    assert client.post(
        "/api/items/ffffffffffffffff/annotate", json={"annotation": SAFE}
    ).status_code == 404
    items = client.get("/api/items").json()["items"]
    assert client.post(
        f"/api/items/{items[0]['id']}/annotate", json={"annotation": "Fine"}
    ).status_code == 400
    assert client.post(
        f"/api/items/{items[0]['id']}/annotate", content=b"not json"
    ).status_code == 400
    session.audit.fingerprint = "0" * 64
    assert client.post(
        f"/api/items/{items[0]['id']}/annotate", json={"annotation": SAFE}
    ).status_code == 409


def test_unknown_paths_are_404(client):
    assert client.get("/api/nope").status_code == 404
    assert client.get("/api/items/zzz/context").status_code == 404
    assert client.get("/api/context", params={"fn": "sink_net::ghost"}).status_code == 404


def test_fallback_index_served_without_ui(client):
    resp = client.get("/")
    assert resp.status_code == 200
    assert "effaudit session" in resp.text


def test_static_ui_dir_served(tmp_path):
    root = FIXTURES / "sink_net"
    scan = scan_package(root)
    ui = tmp_path / "dist"
    ui.mkdir()
    (ui / "index.html").write_text("<html><body>bundle</body></html>")
    (ui / "app.js").write_text("console.log(1)")
    session = AuditSession(scan, new_audit(scan), root, ui_dir=ui)
    server = make_server(session)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_port}"
    try:
        with httpx.Client(base_url=base, timeout=5.0) as c:
            assert "bundle" in c.get("/").text
            js = c.get("/app.js")
            assert js.status_code == 200
            assert "javascript" in js.headers["content-type"]
            assert c.get("/../secret").status_code == 404
            assert c.get("/missing.css").status_code == 404
    finally:
        server.shutdown()
        server.server_close()


def test_service_and_direct_annotation_produce_identical_files(client, session, tmp_path):
    items = client.get("/api/items").json()["items"]
    client.post(
        f"/api/items/{items[0]['id']}/annotate",
        json={"annotation": CALLER_CHECKED},
    )
    spawned = client.get("/api/items", params={"state": "unannotated"}).json()["items"]
    client.post(
        f"/api/items/{spawned[0]['id']}/annotate", json={"annotation": SAFE}
    )
    via_service = session.audit_path.read_text("utf-8")

    scan = scan_package(FIXTURES / "sink_net")
    audit = new_audit(scan)
    audit = annotate(audit, scan, items[0]["id"], CALLER_CHECKED)
    audit = annotate(audit, scan, spawned[0]["id"], SAFE)
    assert audit.dumps() == via_service
