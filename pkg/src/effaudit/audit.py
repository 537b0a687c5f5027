"""Annotations, caller-checked propagation, audit files, audit-effort metrics.

An audit file is a judgment layer over one scan. Base items mirror the scan's
effect instances one-to-one. Judging an item CallerChecked spawns one derived
item per call site of the item's containing function; those items are judged
in turn, growing a forest rooted at base effects. The forest is never edited
in place: it is recomputed from the full judgment set after every change, so
re-annotation prunes or regrows derived subtrees deterministically.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

from .callgraph import CallEdge, CallGraph
from .canon import canonical_dumps
from .effects import (
    EffectKind,
    Path,
    SourceLocation,
    parse_path,
    path_str,
)
from .scanner import ScanResult

FORMAT_VERSION = 1

SAFE = "Safe"
UNSAFE = "Unsafe"
CALLER_CHECKED = "CallerChecked"
ANNOTATIONS = (SAFE, UNSAFE, CALLER_CHECKED)

STATUSES = ("default", "partial", "complete")


class AuditError(Exception):
    """Invalid audit operation."""


class UnknownItemError(AuditError):
    """Item id not present in the audit."""


class FingerprintMismatch(AuditError):
    """Audit refers to a different scan than the one supplied."""


def propagated_item_id(root: str, caller: Path, site: SourceLocation) -> str:
    """Stable id for the derived item at one (root effect, call site) pair."""
    raw = "\x1f".join(
        ["prop", root, path_str(caller), site.file, str(site.line), str(site.col)]
    )
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()[:32]


@dataclass(frozen=True)
class AuditItem:
    id: str
    root: str
    parent: Optional[str]
    kind: EffectKind
    location: SourceLocation
    containing_fn: Path
    annotation: Optional[str]

    def __post_init__(self) -> None:
        if self.annotation is not None and self.annotation not in ANNOTATIONS:
            raise ValueError(f"bad annotation {self.annotation!r}")

    @property
    def origin(self) -> str:
        return "base" if self.parent is None else "propagated"

    def sort_key(self) -> tuple:
        return (self.location.sort_key(), self.root, self.id)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "root": self.root,
            "parent": self.parent,
            "origin": self.origin,
            "kind": self.kind.to_json(),
            "location": self.location.to_json(),
            "containing_fn": path_str(self.containing_fn),
            "annotation": self.annotation,
        }

    @staticmethod
    def from_json(d: dict) -> "AuditItem":
        return AuditItem(
            id=d["id"],
            root=d["root"],
            parent=d["parent"],
            kind=EffectKind.from_json(d["kind"]),
            location=SourceLocation.from_json(d["location"]),
            containing_fn=parse_path(d["containing_fn"]),
            annotation=d["annotation"],
        )


@dataclass
class AuditFile:
    package: str
    fingerprint: str
    items: list[AuditItem]
    exported_cc: list[str]
    status: str
    format_version: int = FORMAT_VERSION

    def item_by_id(self) -> dict[str, AuditItem]:
        return {i.id: i for i in self.items}

    def judgments(self) -> dict[str, str]:
        return {i.id: i.annotation for i in self.items if i.annotation is not None}

    def progress(self) -> dict:
        by_annotation = {a: 0 for a in ANNOTATIONS}
        annotated = 0
        for item in self.items:
            if item.annotation is not None:
                annotated += 1
                by_annotation[item.annotation] += 1
        return {
            "total": len(self.items),
            "annotated": annotated,
            "remaining": len(self.items) - annotated,
            "by_annotation": by_annotation,
            "status": self.status,
        }

    def to_json(self) -> dict:
        return {
            "format_version": self.format_version,
            "package": self.package,
            "fingerprint": self.fingerprint,
            "status": self.status,
            "items": [i.to_json() for i in self.items],
            "exported_cc": list(self.exported_cc),
        }

    def dumps(self) -> str:
        return canonical_dumps(self.to_json())

    @staticmethod
    def from_json(d: dict) -> "AuditFile":
        if d.get("format_version") != FORMAT_VERSION:
            raise AuditError(f"unsupported audit format {d.get('format_version')!r}")
        if d["status"] not in STATUSES:
            raise AuditError(f"bad status {d['status']!r}")
        return AuditFile(
            package=d["package"],
            fingerprint=d["fingerprint"],
            items=[AuditItem.from_json(i) for i in d["items"]],
            exported_cc=list(d["exported_cc"]),
            status=d["status"],
            format_version=d["format_version"],
        )


def _compute_items(
    scan: ScanResult, judgments: dict[str, str], force_cc: bool = False
) -> list[AuditItem]:
    """Rebuild the item forest from base effects and the judgment set.

    Expansion visits each (root effect, call site) pair at most once, which
    bounds recursion through call cycles.
    """
    in_edges = scan.graph.in_edges()
    items: list[AuditItem] = []
    seen: set[tuple] = set()
    frontier: list[AuditItem] = []

    for eff in sorted(scan.effects, key=lambda e: e.sort_key()):
        ann = CALLER_CHECKED if force_cc else judgments.get(eff.id)
        item = AuditItem(
            id=eff.id,
            root=eff.id,
            parent=None,
            kind=eff.kind,
            location=eff.location,
            containing_fn=eff.containing_fn,
            annotation=ann,
        )
        items.append(item)
        if ann == CALLER_CHECKED:
            frontier.append(item)

    while frontier:
        item = frontier.pop()
        edges = sorted(in_edges.get(item.containing_fn, ()), key=CallEdge.sort_key)
        for edge in edges:
            key = (item.root, edge.site.sort_key())
            if key in seen:
                continue
            seen.add(key)
            cid = propagated_item_id(item.root, edge.caller, edge.site)
            ann = CALLER_CHECKED if force_cc else judgments.get(cid)
            child = AuditItem(
                id=cid,
                root=item.root,
                parent=item.id,
                kind=item.kind,
                location=edge.site,
                containing_fn=edge.caller,
                annotation=ann,
            )
            items.append(child)
            if ann == CALLER_CHECKED:
                frontier.append(child)

    items.sort(key=AuditItem.sort_key)
    return items


def _exported_cc(items: list[AuditItem], graph: CallGraph) -> list[str]:
    out: set[str] = set()
    for item in items:
        if item.annotation != CALLER_CHECKED:
            continue
        node = graph.nodes.get(item.containing_fn)
        if node is not None and node.is_public:
            out.add(path_str(item.containing_fn))
    return sorted(out)


def _derived_status(items: list[AuditItem]) -> str:
    if all(i.annotation is not None for i in items):
        return "complete"
    return "partial"


def new_audit(scan: ScanResult) -> AuditFile:
    items = _compute_items(scan, {})
    return AuditFile(
        package=scan.id,
        fingerprint=scan.fingerprint(),
        items=items,
        exported_cc=[],
        status=_derived_status(items),
    )


def default_audit(scan: ScanResult) -> AuditFile:
    """Machine audit: every effect caller-checked, propagated to fixpoint."""
    items = _compute_items(scan, {}, force_cc=True)
    return AuditFile(
        package=scan.id,
        fingerprint=scan.fingerprint(),
        items=items,
        exported_cc=_exported_cc(items, scan.graph),
        status="default",
    )


def annotate(
    audit: AuditFile, scan: ScanResult, item_id: str, annotation: str
) -> AuditFile:
    """Apply one judgment and recompute the forest it touches.

    Judgments on items that fall out of the recomputed forest are dropped
    with them; re-judging an ancestor regrows children unannotated.
    """
    if annotation not in ANNOTATIONS:
        raise AuditError(f"bad annotation {annotation!r}")
    if audit.fingerprint != scan.fingerprint():
        raise FingerprintMismatch(
            f"audit fingerprint {audit.fingerprint[:12]} does not match scan"
        )
    if item_id not in audit.item_by_id():
        raise UnknownItemError(f"no item {item_id!r}")
    judgments = audit.judgments()
    judgments[item_id] = annotation
    items = _compute_items(scan, judgments)
    return AuditFile(
        package=audit.package,
        fingerprint=audit.fingerprint,
        items=items,
        exported_cc=_exported_cc(items, scan.graph),
        status=_derived_status(items),
    )


def reapply_judgments(scan: ScanResult, judgments: dict[str, str]) -> AuditFile:
    """Rebuild a default audit of `scan`, then overlay surviving judgments.

    Used when a package is rescanned (its sink registry changed): item ids
    are location-derived, so judgments on unchanged code carry over, and
    judgments on vanished items are dropped.
    """
    audit = default_audit(scan)
    overrides = {
        iid: ann for iid, ann in judgments.items() if ann != CALLER_CHECKED
    }
    changed = True
    while changed:
        changed = False
        live = audit.item_by_id()
        for iid, ann in sorted(overrides.items()):
            item = live.get(iid)
            if item is not None and item.annotation != ann:
                audit = annotate(audit, scan, iid, ann)
                changed = True
                break
    return audit


def audited_metrics(
    audit: AuditFile, scan: ScanResult, presented: Optional[set[str]] = None
) -> dict:
    """Audit effort in whole functions and their line spans.

    A function counts once it holds any judged-Safe/Unsafe item, or any item
    at all when the whole audit is in scope. `presented` restricts the
    in-scope items (chain pruning passes the root-reachable set here);
    Safe/Unsafe judgments always count since that review happened.
    """
    if audit.fingerprint != scan.fingerprint():
        raise FingerprintMismatch("metrics requested against a different scan")
    judged = {
        i.containing_fn for i in audit.items if i.annotation in (SAFE, UNSAFE)
    }
    if presented is None:
        in_scope = {i.containing_fn for i in audit.items}
    else:
        in_scope = {i.containing_fn for i in audit.items if i.id in presented}
    fns = judged | in_scope
    loc = sum(
        scan.graph.nodes[f].loc for f in sorted(fns) if f in scan.graph.nodes
    )
    total = scan.total_loc
    percent = (100.0 * loc / total) if total else 0.0
    return {
        "functions_audited": len(fns),
        "loc_audited": loc,
        "total_loc": total,
        "percent": percent,
    }


def metrics_row(scan: ScanResult, metrics: dict) -> str:
    """One summary line per package: `name-version: N fn, M LoC`."""
    return (
        f"{scan.name}-{scan.version}: "
        f"{metrics['functions_audited']} fn, {metrics['loc_audited']} LoC"
    )


def cc_public_shares(audit: AuditFile, scan: ScanResult) -> dict:
    """Share of public functions marked caller-checked, both denominators.

    Whether the interesting denominator is all public functions or only the
    effect-reachable ones is a judgment call; report both.
    """
    public = {p for p, n in scan.graph.nodes.items() if n.is_public}
    cc_public = {parse_path(p) for p in audit.exported_cc}
    base_fns = {i.containing_fn for i in audit.items if i.parent is None}
    reachable_public = public & scan.graph.reaching(base_fns)
    return {
        "cc_public": len(cc_public),
        "public": len(public),
        "effect_reachable_public": len(reachable_public),
        "share_of_public": (len(cc_public) / len(public)) if public else 0.0,
        "share_of_reachable": (
            len(cc_public) / len(reachable_public) if reachable_public else 0.0
        ),
    }


def locations_per_effect(audit: AuditFile) -> dict[str, int]:
    """Audit locations (base + propagated) per root effect."""
    counts: dict[str, int] = {}
    for item in audit.items:
        counts[item.root] = counts.get(item.root, 0) + 1
    return counts


def mean_locations_per_effect(audit: AuditFile) -> float:
    counts = locations_per_effect(audit)
    if not counts:
        return 0.0
    return sum(counts.values()) / len(counts)
