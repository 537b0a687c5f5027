"""Batch corpus scanning and ecosystem-level effect statistics.

Each package is scanned independently with builtin sinks only (no
cross-dependency tracking); aggregation then answers the census questions:
how many packages are effect-free, which kinds dominate, and how
concentrated effects are across the corpus.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Optional

from .effects import (
    BUILTIN_SINK_PREFIXES,
    HIGHER_ORDER_KINDS,
    UNSAFE_KINDS,
    path_str,
)
from .scanner import ScanResult, scan_package

ALL_KIND_LABELS: tuple[str, ...] = tuple(
    sorted(
        list(UNSAFE_KINDS)
        + list(HIGHER_ORDER_KINDS)
        + [f"SinkCall({path_str(p)})" for p in BUILTIN_SINK_PREFIXES]
    )
)

HISTOGRAM_BUCKETS = ("0", "1-9", "10-99", "100-999", "1000+")


@dataclass
class CrateStats:
    id: str
    name: str
    version: str
    counts: dict[str, int] = field(default_factory=dict)
    total_effects: int = 0
    total_loc: int = 0
    is_sys: bool = False
    failed: bool = False
    error: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "package": self.id,
            "name": self.name,
            "version": self.version,
            "counts": dict(sorted(self.counts.items())),
            "total_effects": self.total_effects,
            "total_loc": self.total_loc,
            "is_sys": self.is_sys,
            "failed": self.failed,
            "error": self.error,
        }


def stats_for(scan: ScanResult) -> CrateStats:
    counts = {label: 0 for label in ALL_KIND_LABELS}
    for eff in scan.effects:
        label = eff.kind.label()
        counts[label] = counts.get(label, 0) + 1
    return CrateStats(
        id=scan.id,
        name=scan.name,
        version=scan.version,
        counts=counts,
        total_effects=len(scan.effects),
        total_loc=scan.total_loc,
        is_sys=scan.name.endswith("-sys") or scan.links is not None,
    )


def _scan_one(path: FsPath) -> CrateStats:
    try:
        return stats_for(scan_package(path))
    except Exception as exc:  # a bad package never kills the batch
        return CrateStats(
            id=path.name,
            name=path.name,
            version="",
            counts={label: 0 for label in ALL_KIND_LABELS},
            failed=True,
            error=str(exc),
        )


def batch_scan(corpus: FsPath, workers: int = 16) -> list[CrateStats]:
    """Scan every package directory under `corpus`, in parallel.

    Row order follows sorted directory names regardless of worker count or
    completion order, so output is reproducible.
    """
    corpus = FsPath(corpus)
    dirs = sorted(
        (d for d in corpus.iterdir() if d.is_dir()), key=lambda d: d.name
    )
    if not dirs:
        return []
    workers = max(1, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_scan_one, dirs))


def _bucket(total: int) -> str:
    if total == 0:
        return "0"
    if total < 10:
        return "1-9"
    if total < 100:
        return "10-99"
    if total < 1000:
        return "100-999"
    return "1000+"


def usable(rows: list[CrateStats]) -> list[CrateStats]:
    return [r for r in rows if not r.failed]


def effect_histogram(rows: list[CrateStats]) -> dict[str, int]:
    """Packages bucketed by order of magnitude of their effect totals.

    Bucket "0" is the pure-package count. Failed rows are excluded here and
    from every aggregate below.
    """
    buckets = {b: 0 for b in HISTOGRAM_BUCKETS}
    for row in usable(rows):
        buckets[_bucket(row.total_effects)] += 1
    return buckets


def effect_frequency(
    rows: list[CrateStats], exclude_sys: bool = False
) -> dict[str, dict]:
    """Per kind: packages containing it, and its share of all instances."""
    pool = usable(rows)
    if exclude_sys:
        pool = [r for r in pool if not r.is_sys]
    grand_total = sum(r.total_effects for r in pool)
    out: dict[str, dict] = {}
    for label in ALL_KIND_LABELS:
        instances = sum(r.counts.get(label, 0) for r in pool)
        out[label] = {
            "packages": sum(1 for r in pool if r.counts.get(label, 0) > 0),
            "instances": instances,
            "share": (instances / grand_total) if grand_total else 0.0,
        }
    return out


def concentration(rows: list[CrateStats], top_fraction: float) -> float:
    """Instance share held by the top ⌈fraction·n⌉ packages by effect count."""
    if not 0.0 < top_fraction <= 1.0:
        raise ValueError("top_fraction must be in (0, 1]")
    pool = usable(rows)
    if not pool:
        return 0.0
    grand_total = sum(r.total_effects for r in pool)
    if grand_total == 0:
        return 0.0
    ranked = sorted(pool, key=lambda r: (-r.total_effects, r.id))
    k = math.ceil(top_fraction * len(ranked))
    return sum(r.total_effects for r in ranked[:k]) / grand_total


def to_csv(rows: list[CrateStats]) -> str:
    """One row per package, one column per effect kind."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["package", "name", "version", "total_effects", "total_loc",
         "is_sys", "failed", "error", *ALL_KIND_LABELS]
    )
    for row in rows:
        writer.writerow(
            [row.id, row.name, row.version, row.total_effects, row.total_loc,
             int(row.is_sys), int(row.failed), row.error or "",
             *[row.counts.get(label, 0) for label in ALL_KIND_LABELS]]
        )
    return buf.getvalue()


def plot_data(rows: list[CrateStats]) -> dict:
    """Aggregates in plot-ready form; rendering is someone else's job."""
    return {
        "corpus_size": len(rows),
        "failed": sum(1 for r in rows if r.failed),
        "histogram": effect_histogram(rows),
        "frequency": effect_frequency(rows),
        "frequency_excluding_sys": effect_frequency(rows, exclude_sys=True),
        "rows": [r.to_json() for r in rows],
    }
