"""Command-line surface: scan, audit, default-audit, chain, stats, serve.

Thin wrappers over the library modules. Every mutation is written to disk
before the process exits. Exit codes: 0 ok, 1 fatal error, 2 bad usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path as FsPath
from typing import Optional

from . import __version__
from .audit import (
    AuditError,
    AuditFile,
    FingerprintMismatch,
    annotate,
    audited_metrics,
    default_audit,
    metrics_row,
    new_audit,
)
from .canon import canonical_dumps
from .chain import ChainError, chain_default_audits, prune_unreachable, write_chain
from .effects import builtin_registry, load_sink_registry, path_str
from .scanner import PackageError, scan_package
from .service import AuditSession, make_server
from .stats import batch_scan, plot_data, to_csv

ENV_SINKS = "EFFAUDIT_SINKS"


class UsageError(Exception):
    """Invalid flag combination; maps to exit code 2."""


def _registry(sinks_path: Optional[str]):
    path = sinks_path or os.environ.get(ENV_SINKS)
    if not path:
        return builtin_registry()
    return load_sink_registry(FsPath(path).read_text(encoding="utf-8"))


def _emit(document: str, out: Optional[str]) -> None:
    if out:
        FsPath(out).write_text(document, encoding="utf-8")
    else:
        sys.stdout.write(document)


def _warn_parse_failures(result) -> None:
    if result.errors:
        print(
            f"warning: {len(result.errors)} file(s) could not be analyzed",
            file=sys.stderr,
        )


def cmd_scan(args) -> int:
    result = scan_package(FsPath(args.path), _registry(args.sinks))
    _warn_parse_failures(result)
    _emit(result.dumps(), args.json_out)
    return 0


def _load_or_create_audit(scan, audit_path: FsPath, create_default: bool):
    if audit_path.is_file():
        audit = AuditFile.from_json(json.loads(audit_path.read_text("utf-8")))
        if audit.fingerprint != scan.fingerprint():
            raise AuditError(
                f"{audit_path} is stale: the source changed since it was "
                "written; re-run scan and start a fresh audit"
            )
        return audit
    audit = default_audit(scan) if create_default else new_audit(scan)
    audit_path.write_text(audit.dumps(), encoding="utf-8")
    return audit


def cmd_audit(args) -> int:
    if (args.item is None) != (args.annotation is None):
        raise UsageError("--item and --annotation must be given together")
    scan = scan_package(FsPath(args.path), _registry(args.sinks))
    _warn_parse_failures(scan)
    audit_path = FsPath(args.audit_file)
    audit = _load_or_create_audit(scan, audit_path, create_default=False)
    if args.item is not None:
        before = set(audit.item_by_id())
        audit = annotate(audit, scan, args.item, args.annotation)
        audit_path.write_text(audit.dumps(), encoding="utf-8")
        spawned = len(set(audit.item_by_id()) - before)
        print(f"{args.item} -> {args.annotation}; {spawned} new item(s)")
    if args.list:
        for item in audit.items:
            loc = item.location
            print(
                f"{item.id} {item.kind.label()} {loc.file}:{loc.line}:{loc.col}"
                f" in {path_str(item.containing_fn)}"
                f" [{item.annotation or 'unannotated'}]"
            )
    p = audit.progress()
    print(
        f"{audit.package}: {p['annotated']}/{p['total']} annotated, "
        f"{p['remaining']} remaining ({audit.status})"
    )
    return 0


def cmd_default_audit(args) -> int:
    scan = scan_package(FsPath(args.path), _registry(args.sinks))
    _warn_parse_failures(scan)
    audit = default_audit(scan)
    _emit(audit.dumps(), args.audit_file)
    if args.audit_file:
        m = audited_metrics(audit, scan)
        print(metrics_row(scan, m))
    return 0


def cmd_chain(args) -> int:
    root = FsPath(args.root)
    search = [FsPath(s) for s in args.source] if args.source else None
    chain = chain_default_audits(root, search=search, registry=_registry(args.sinks))
    out_dir = FsPath(args.out) if args.out else root / "audits"
    manifest = write_chain(chain, out_dir)
    presented = prune_unreachable(chain)
    for pid in chain.order:
        pkg = chain.packages[pid]
        print(
            f"{pid}: {len(pkg.audit.items)} item(s), "
            f"{len(presented[pid])} presented"
        )
    print(f"chain manifest: {manifest}")
    return 0


def cmd_stats(args) -> int:
    rows = batch_scan(FsPath(args.corpus), workers=args.workers)
    _emit(to_csv(rows), args.csv)
    if args.json:
        FsPath(args.json).write_text(
            canonical_dumps(plot_data(rows)), encoding="utf-8"
        )
    failures = sum(1 for r in rows if r.failed)
    if failures:
        print(f"warning: {failures} package(s) failed to scan", file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    package_root = FsPath(args.path)
    scan = scan_package(package_root, _registry(args.sinks))
    _warn_parse_failures(scan)
    audit_path = FsPath(args.audit_file)
    audit = _load_or_create_audit(scan, audit_path, create_default=args.default)
    session = AuditSession(
        scan,
        audit,
        package_root,
        audit_path=audit_path,
        ui_dir=FsPath(args.ui) if args.ui else None,
    )
    server = make_server(session, args.port)
    print(f"auditing {audit.package} at http://127.0.0.1:{server.server_port}/")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="effaudit",
        description="Static effect analysis and interactive auditing for "
        "Rust packages.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_sinks(p):
        p.add_argument(
            "--sinks",
            help=f"sink registry file (default: ${ENV_SINKS} or builtins)",
        )

    p = sub.add_parser("scan", help="scan one package and emit its effects")
    p.add_argument("path")
    p.add_argument("--json-out", help="write the document here instead of stdout")
    add_sinks(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("audit", help="create or update an interactive audit")
    p.add_argument("path")
    p.add_argument("--audit-file", required=True)
    p.add_argument("--item", help="item id to judge")
    p.add_argument("--annotation", choices=("Safe", "Unsafe", "CallerChecked"))
    p.add_argument("--list", action="store_true", help="print every item")
    add_sinks(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser(
        "default-audit", help="machine audit: everything caller-checked"
    )
    p.add_argument("path")
    p.add_argument("--audit-file", help="write here instead of stdout")
    add_sinks(p)
    p.set_defaults(func=cmd_default_audit)

    p = sub.add_parser("chain", help="default-audit a whole dependency tree")
    p.add_argument("root", help="root package directory (with Cargo.lock)")
    p.add_argument(
        "--source",
        action="append",
        help="directory containing dependency sources (repeatable)",
    )
    p.add_argument("--out", help="output directory (default ROOT/audits)")
    add_sinks(p)
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("stats", help="batch-scan a corpus directory")
    p.add_argument("corpus")
    p.add_argument("--workers", type=int, default=16)
    p.add_argument("--csv", help="write the per-package table here")
    p.add_argument("--json", help="write aggregate plot data here")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="serve an interactive session over HTTP")
    p.add_argument("path")
    p.add_argument("--audit-file", required=True)
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--ui", help="directory with a built UI bundle to serve")
    p.add_argument(
        "--default",
        action="store_true",
        help="start from a default audit when creating the file",
    )
    add_sinks(p)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (PackageError, ChainError, AuditError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
