"""Cross-package audit composition over a resolved dependency DAG.

A chain scans a root package and every dependency named in its lockfile,
generating default audits dependencies-first. Each package is scanned with
its direct dependencies' exported caller-checked functions installed as
exact-path sinks, so context-sensitive effects surface at the call sites
that cross package boundaries. Nothing here resolves versions: the lockfile
is taken as ground truth and sources must already be on disk.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Iterable, Optional

try:
    import tomllib
except ModuleNotFoundError:  # 3.10 fallback
    import tomli as tomllib

from .audit import (
    SAFE,
    AuditFile,
    FingerprintMismatch,
    annotate,
    default_audit,
    reapply_judgments,
)
from .canon import canonical_dumps
from .effects import SinkPattern, builtin_registry, parse_path, path_str
from .scanner import ScanResult, read_package_meta, scan_package


class ChainError(Exception):
    """Chain construction or resolution failure."""


def import_dependency_audit(
    registry: frozenset[SinkPattern],
    dep_audit: AuditFile,
    dep_scan: Optional[ScanResult] = None,
) -> frozenset[SinkPattern]:
    """Extend a sink registry with a dependency's exported caller-checked fns.

    Each exported path becomes an exact-match pattern tagged with the
    exporting package, so re-scanning the dependent package turns calls into
    those functions into SinkCall effects.
    """
    if dep_scan is not None and dep_audit.fingerprint != dep_scan.fingerprint():
        raise FingerprintMismatch(
            f"audit for {dep_audit.package} does not match its scan"
        )
    extra = {
        SinkPattern(parse_path(p), imported_from=dep_audit.package)
        for p in dep_audit.exported_cc
    }
    return frozenset(registry | extra)


def read_lockfile(lock_path: FsPath) -> dict[str, dict]:
    """Resolved package table from a lockfile: id -> {name, version, deps}.

    Dependency entries may be bare names or "name version" pairs; bare names
    must be unambiguous within the lockfile.
    """
    if not lock_path.is_file():
        raise ChainError(f"lockfile not found: {lock_path}")
    data = tomllib.loads(lock_path.read_text(encoding="utf-8"))
    packages: dict[str, dict] = {}
    by_name: dict[str, list[str]] = {}
    for entry in data.get("package", []):
        pid = f"{entry['name']} {entry['version']}"
        packages[pid] = {
            "name": entry["name"],
            "version": entry["version"],
            "deps_raw": list(entry.get("dependencies", [])),
        }
        by_name.setdefault(entry["name"], []).append(pid)
    for pid, info in packages.items():
        deps = []
        for ref in info["deps_raw"]:
            if " " in ref:
                if ref not in packages:
                    raise ChainError(f"{pid} depends on unknown {ref!r}")
                deps.append(ref)
            else:
                matches = by_name.get(ref, [])
                if len(matches) != 1:
                    raise ChainError(
                        f"{pid} dependency {ref!r} is "
                        f"{'ambiguous' if matches else 'unknown'} in the lockfile"
                    )
                deps.append(matches[0])
        info["deps"] = sorted(deps)
        del info["deps_raw"]
    return packages


def discover_sources(search: Iterable[FsPath]) -> dict[str, FsPath]:
    """Map package names to source directories found under the search roots."""
    found: dict[str, FsPath] = {}
    for base in search:
        if not base.is_dir():
            continue
        for child in sorted(base.iterdir()):
            if not (child / "Cargo.toml").is_file():
                continue
            try:
                meta = read_package_meta(child)
            except Exception:
                continue
            found.setdefault(meta.name, child)
    return found


def _topo_order(dag: dict[str, list[str]]) -> list[str]:
    """Dependencies-first order; deterministic; cycles are fatal."""
    pending = {pid: set(deps) for pid, deps in dag.items()}
    order: list[str] = []
    while pending:
        ready = sorted(pid for pid, deps in pending.items() if not deps)
        if not ready:
            raise ChainError(
                "dependency cycle among: " + ", ".join(sorted(pending))
            )
        for pid in ready:
            order.append(pid)
            del pending[pid]
        for deps in pending.values():
            deps.difference_update(ready)
    return order


@dataclass
class ChainPackage:
    id: str
    name: str
    version: str
    source: FsPath
    deps: list[str]
    registry: frozenset[SinkPattern]
    scan: ScanResult
    audit: AuditFile


@dataclass
class AuditChain:
    root_id: str
    packages: dict[str, ChainPackage]
    order: list[str]  # dependencies before dependents; root last
    base_registry: frozenset[SinkPattern]

    def total_items(self) -> int:
        return sum(len(p.audit.items) for p in self.packages.values())


def chain_default_audits(
    root_dir: FsPath,
    sources: Optional[dict[str, FsPath]] = None,
    search: Optional[list[FsPath]] = None,
    registry: Optional[frozenset[SinkPattern]] = None,
) -> AuditChain:
    """Scan and default-audit the whole dependency tree of `root_dir`.

    Dependency sources are located by package name: explicit `sources`
    entries first, then directories under each search root (default: the
    root package's parent directory).
    """
    root_dir = FsPath(root_dir)
    base_registry = registry if registry is not None else builtin_registry()
    meta = read_package_meta(root_dir)
    table = read_lockfile(root_dir / "Cargo.lock")
    if meta.id not in table:
        raise ChainError(f"root package {meta.id!r} missing from its lockfile")

    # restrict to what the root actually pulls in
    keep: set[str] = set()
    queue = deque([meta.id])
    while queue:
        pid = queue.popleft()
        if pid in keep:
            continue
        keep.add(pid)
        queue.extend(table[pid]["deps"])
    dag = {pid: table[pid]["deps"] for pid in keep}

    dirs = dict(sources or {})
    search_roots = search if search is not None else [root_dir.parent]
    for name, path in discover_sources(search_roots).items():
        dirs.setdefault(name, path)
    dirs[meta.name] = root_dir

    order = _topo_order(dag)
    packages: dict[str, ChainPackage] = {}
    for pid in order:
        info = table[pid]
        source = dirs.get(info["name"])
        if source is None:
            raise ChainError(f"missing dependency source: {pid}")
        pkg_registry = base_registry
        for dep_id in dag[pid]:
            dep = packages[dep_id]
            pkg_registry = import_dependency_audit(
                pkg_registry, dep.audit, dep.scan
            )
        scan = scan_package(source, pkg_registry)
        if scan.id != pid:
            raise ChainError(
                f"source at {source} is {scan.id!r}, lockfile wants {pid!r}"
            )
        packages[pid] = ChainPackage(
            id=pid,
            name=info["name"],
            version=info["version"],
            source=source,
            deps=dag[pid],
            registry=pkg_registry,
            scan=scan,
            audit=default_audit(scan),
        )
    return AuditChain(
        root_id=meta.id,
        packages=packages,
        order=order,
        base_registry=base_registry,
    )


def prune_unreachable(chain: AuditChain) -> dict[str, set[str]]:
    """Item ids presented per package: reachable from the root package.

    Forward reachability starts at every root-package function and crosses a
    package boundary only through callees the dependency exports as
    caller-checked; functions holding audit items are always public-entry
    reachable through such an export, so nothing presentable is missed.
    """
    out_edges = {
        pid: pkg.scan.graph.out_edges() for pid, pkg in chain.packages.items()
    }
    exported = {
        pid: set(pkg.audit.exported_cc) for pid, pkg in chain.packages.items()
    }
    root = chain.packages[chain.root_id]
    seen: set[tuple[str, tuple]] = {
        (chain.root_id, p) for p in root.scan.graph.nodes
    }
    queue = deque(seen)
    while queue:
        pid, fn = queue.popleft()
        pkg = chain.packages[pid]
        for edge in out_edges[pid].get(fn, ()):
            callee = edge.callee
            hops = []
            if callee in pkg.scan.graph.nodes:
                hops.append((pid, callee))
            else:
                callee_str = path_str(callee)
                for dep_id in pkg.deps:
                    dep = chain.packages[dep_id]
                    if (
                        callee_str in exported[dep_id]
                        and callee in dep.scan.graph.nodes
                    ):
                        hops.append((dep_id, callee))
            for hop in hops:
                if hop not in seen:
                    seen.add(hop)
                    queue.append(hop)
    return {
        pid: {
            item.id
            for item in pkg.audit.items
            if (pid, item.containing_fn) in seen
        }
        for pid, pkg in chain.packages.items()
    }


def propagate_resolution(
    chain: AuditChain, pkg_id: str, item_id: str, annotation: str = SAFE
) -> AuditChain:
    """Apply a judgment inside one package and ripple it up the DAG.

    The judged package's audit is recomputed; every dependent whose imported
    sink registry changed is rescanned and its surviving judgments reapplied,
    so items derived solely from a now-safe export disappear everywhere.
    """
    if pkg_id not in chain.packages:
        raise ChainError(f"unknown package {pkg_id!r}")
    pkg = chain.packages[pkg_id]
    pkg.audit = annotate(pkg.audit, pkg.scan, item_id, annotation)
    for pid in chain.order:
        p = chain.packages[pid]
        desired = chain.base_registry
        for dep_id in p.deps:
            desired = import_dependency_audit(desired, chain.packages[dep_id].audit)
        if desired != p.registry:
            judgments = p.audit.judgments()
            p.registry = desired
            p.scan = scan_package(p.source, desired)
            p.audit = reapply_judgments(p.scan, judgments)
    return chain


def write_chain(chain: AuditChain, out_dir: FsPath) -> FsPath:
    """Persist one audit file per package plus a chain manifest."""
    out_dir = FsPath(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    audit_files: dict[str, str] = {}
    for pid in chain.order:
        pkg = chain.packages[pid]
        fname = f"{pkg.name}-{pkg.version}.audit.json"
        (out_dir / fname).write_text(pkg.audit.dumps(), encoding="utf-8")
        audit_files[pid] = fname
    presented = prune_unreachable(chain)
    manifest = {
        "root": chain.root_id,
        "packages": {
            pid: {
                "source": str(pkg.source),
                "audit_file": audit_files[pid],
                "dependencies": pkg.deps,
                "presented_items": sorted(presented[pid]),
            }
            for pid, pkg in sorted(chain.packages.items())
        },
    }
    manifest_path = out_dir / "chain.json"
    manifest_path.write_text(canonical_dumps(manifest), encoding="utf-8")
    return manifest_path
