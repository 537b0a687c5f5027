"""Loopback HTTP service for one interactive audit session.

A pure view/command layer: every mutation goes through audit-core's
annotate and lands in the audit file on disk before the response is sent.
Reads serve JSON snapshots of the session. Binds 127.0.0.1 only.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path as FsPath
from typing import Optional
from urllib.parse import parse_qs, urlparse

from .audit import (
    ANNOTATIONS,
    AuditError,
    AuditFile,
    FingerprintMismatch,
    UnknownItemError,
    annotate,
)
from .canon import canonical_dumps
from .effects import parse_path, path_str
from .scanner import ScanResult

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".map": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}

_FALLBACK_INDEX = """<!doctype html>
<html><head><meta charset="utf-8"><title>effaudit session</title></head>
<body><h1>effaudit session</h1>
<p>No UI bundle configured. The JSON API is live under <code>/api/</code>.</p>
</body></html>
"""


class AuditSession:
    """One package scan, one audit file, one writer."""

    def __init__(
        self,
        scan: ScanResult,
        audit: AuditFile,
        package_root: FsPath,
        audit_path: Optional[FsPath] = None,
        ui_dir: Optional[FsPath] = None,
    ) -> None:
        self.scan = scan
        self.audit = audit
        self.package_root = FsPath(package_root)
        self.audit_path = FsPath(audit_path) if audit_path else None
        self.ui_dir = FsPath(ui_dir) if ui_dir else None
        self.lock = threading.Lock()

    # ----- reads

    def meta(self) -> dict:
        return {
            "package": self.audit.package,
            "fingerprint": self.audit.fingerprint,
            "status": self.audit.status,
            "total_loc": self.scan.total_loc,
            "exported_cc": list(self.audit.exported_cc),
        }

    def items_payload(
        self, kind: Optional[str] = None, state: Optional[str] = None
    ) -> list[dict]:
        out = []
        for item in self.audit.items:
            if kind is not None and kind not in (item.kind.name, item.kind.label()):
                continue
            if state is not None:
                want = None if state == "unannotated" else state
                if item.annotation != want:
                    continue
            out.append(item.to_json())
        return out

    def item_context(self, item_id: str) -> dict:
        item = self.audit.item_by_id().get(item_id)
        if item is None:
            raise UnknownItemError(f"no item {item_id!r}")
        return {"item": item.to_json(), **self.function_context(item.containing_fn)}

    def function_context(self, fn) -> dict:
        node = self.scan.graph.nodes.get(fn)
        if node is None:
            raise UnknownItemError(f"no function {path_str(fn)!r}")
        source = (self.package_root / node.file).read_text(encoding="utf-8")
        lines = source.splitlines()[node.start_line - 1 : node.end_line]
        return {
            "function": path_str(fn),
            "file": node.file,
            "start_line": node.start_line,
            "end_line": node.end_line,
            "lines": lines,
        }

    def callers(self, fn_str: str) -> list[dict]:
        return [
            {
                "caller": path_str(e.caller),
                "site": e.site.to_json(),
                "dispatch": e.dispatch,
            }
            for e in sorted(
                self.scan.graph.callers_of(parse_path(fn_str)),
                key=lambda e: e.sort_key(),
            )
        ]

    def progress(self) -> dict:
        return self.audit.progress()

    # ----- the single write path

    def annotate_item(self, item_id: str, annotation: str) -> dict:
        with self.lock:
            before = set(self.audit.item_by_id())
            self.audit = annotate(self.audit, self.scan, item_id, annotation)
            if self.audit_path is not None:
                self.audit_path.write_text(self.audit.dumps(), encoding="utf-8")
            by_id = self.audit.item_by_id()
            spawned = sorted(set(by_id) - before)
            return {
                "item": by_id[item_id].to_json(),
                "spawned": [by_id[i].to_json() for i in spawned],
                "exported_cc": list(self.audit.exported_cc),
                "progress": self.progress(),
            }


def _make_handler(session: AuditSession):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt: str, *args) -> None:  # keep tests quiet
            pass

        def _send(self, code: int, body: bytes, ctype: str) -> None:
            self.send_response(code)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _json(self, obj, code: int = 200) -> None:
            self._send(
                code,
                canonical_dumps(obj).encode("utf-8"),
                "application/json; charset=utf-8",
            )

        def _error(self, code: int, message: str) -> None:
            self._json({"error": message}, code)

        def _static(self, rel: str) -> None:
            if session.ui_dir is None:
                if rel in ("", "index.html"):
                    self._send(200, _FALLBACK_INDEX.encode(), _CONTENT_TYPES[".html"])
                else:
                    self._error(404, "no such resource")
                return
            target = (session.ui_dir / (rel or "index.html")).resolve()
            if (
                session.ui_dir.resolve() not in target.parents
                and target != session.ui_dir.resolve()
            ) or not target.is_file():
                self._error(404, "no such resource")
                return
            ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
            self._send(200, target.read_bytes(), ctype)

        def do_GET(self) -> None:  # noqa: N802 (http.server API)
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            query = {k: v[0] for k, v in parse_qs(url.query).items()}
            try:
                if parts[:1] != ["api"]:
                    self._static("/".join(parts))
                elif parts == ["api", "meta"]:
                    self._json(session.meta())
                elif parts == ["api", "progress"]:
                    self._json(session.progress())
                elif parts == ["api", "items"]:
                    self._json(
                        {
                            "items": session.items_payload(
                                kind=query.get("kind"), state=query.get("state")
                            )
                        }
                    )
                elif len(parts) == 3 and parts[:2] == ["api", "items"]:
                    item = session.audit.item_by_id().get(parts[2])
                    if item is None:
                        self._error(404, f"no item {parts[2]!r}")
                    else:
                        self._json(item.to_json())
                elif len(parts) == 4 and parts[:2] == ["api", "items"] and parts[3] == "context":
                    self._json(session.item_context(parts[2]))
                elif parts == ["api", "context"] and "fn" in query:
                    self._json(session.function_context(parse_path(query["fn"])))
                elif parts == ["api", "callers"] and "fn" in query:
                    self._json(
                        {"fn": query["fn"], "callers": session.callers(query["fn"])}
                    )
                else:
                    self._error(404, "no such endpoint")
            except UnknownItemError as exc:
                self._error(404, str(exc))
            except OSError as exc:
                self._error(500, str(exc))

        def do_POST(self) -> None:  # noqa: N802
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            if not (
                len(parts) == 4
                and parts[:2] == ["api", "items"]
                and parts[3] == "annotate"
            ):
                self._error(404, "no such endpoint")
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length) or b"{}")
            except (ValueError, json.JSONDecodeError):
                self._error(400, "body must be JSON")
                return
            annotation = payload.get("annotation")
            if annotation not in ANNOTATIONS:
                self._error(
                    400, f"annotation must be one of {', '.join(ANNOTATIONS)}"
                )
                return
            try:
                self._json(session.annotate_item(parts[2], annotation))
            except UnknownItemError as exc:
                self._error(404, str(exc))
            except FingerprintMismatch as exc:
                self._error(409, str(exc))
            except AuditError as exc:
                self._error(400, str(exc))

    return Handler


def make_server(session: AuditSession, port: int = 0) -> ThreadingHTTPServer:
    """HTTP server on loopback; port 0 picks a free one (server_port tells)."""
    return ThreadingHTTPServer(("127.0.0.1", port), _make_handler(session))
