"""Effect taxonomy, sink-pattern registry, and stable effect identifiers.

The taxonomy is closed: 7 unsafe kinds, SinkCall (carrying a pattern), and
2 higher-order kinds. Sink patterns match resolved call paths by prefix;
patterns imported from a dependency audit match an exact function path.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

Path = tuple[str, ...]

UNSAFE_KINDS = (
    "FFICall",
    "FFIDecl",
    "StaticExt",
    "StaticMut",
    "UnsafeCall",
    "UnionField",
    "RawPointer",
)
HIGHER_ORDER_KINDS = ("FnPtrCreation", "ClosureCreation")
KIND_NAMES = UNSAFE_KINDS + ("SinkCall",) + HIGHER_ORDER_KINDS

# The 16 builtin system-call sink prefixes.
BUILTIN_SINK_PREFIXES: tuple[Path, ...] = (
    ("std", "fs"),
    ("std", "io"),
    ("std", "os"),
    ("std", "ffi"),
    ("std", "net"),
    ("std", "env"),
    ("std", "arch"),
    ("std", "path"),
    ("std", "mem"),
    ("std", "simd"),
    ("std", "panic"),
    ("std", "process"),
    ("std", "backtrace"),
    ("std", "intrinsics"),
    ("libc",),
    ("winapi",),
)


def path_str(path: Sequence[str]) -> str:
    return "::".join(path)


def parse_path(text: str) -> Path:
    return tuple(seg for seg in text.split("::") if seg)


@dataclass(frozen=True)
class SinkPattern:
    """A dangerous-library path prefix, or an imported exact function path.

    `imported_from` is None for builtin/configured prefixes (prefix match)
    and the exporting package id for patterns imported from a dependency
    audit (exact match).
    """

    prefix: Path
    imported_from: Optional[str] = None

    @property
    def is_imported(self) -> bool:
        return self.imported_from is not None

    def matches(self, path: Sequence[str]) -> bool:
        if self.is_imported:
            return tuple(path) == self.prefix
        n = len(self.prefix)
        return len(path) >= n and tuple(path[:n]) == self.prefix

    def label(self) -> str:
        return path_str(self.prefix)


def sink_pattern_to_json(p: SinkPattern) -> dict:
    return {
        "prefix": path_str(p.prefix),
        "origin": "builtin" if not p.is_imported else {"imported": p.imported_from},
    }


def sink_pattern_from_json(data: dict) -> SinkPattern:
    origin = data["origin"]
    imported_from = None if origin == "builtin" else origin["imported"]
    return SinkPattern(parse_path(data["prefix"]), imported_from)


def builtin_registry() -> frozenset[SinkPattern]:
    return frozenset(SinkPattern(p) for p in BUILTIN_SINK_PREFIXES)


def load_sink_registry(text: str) -> frozenset[SinkPattern]:
    """Parse a line-oriented list of path prefixes into a sink registry.

    Blank lines and lines starting with `#` are skipped. When a registry
    file is given it replaces the builtin set.
    """
    patterns = set()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        patterns.add(SinkPattern(parse_path(line)))
    return frozenset(patterns)


@dataclass(frozen=True)
class EffectKind:
    """One of the 10 effect constructors; SinkCall carries its pattern."""

    name: str
    sink: Optional[SinkPattern] = None

    def __post_init__(self) -> None:
        if self.name not in KIND_NAMES:
            raise ValueError(f"unknown effect kind: {self.name}")
        if (self.name == "SinkCall") != (self.sink is not None):
            raise ValueError("SinkCall carries exactly one pattern")

    def label(self) -> str:
        if self.sink is not None:
            return f"SinkCall({self.sink.label()})"
        return self.name

    def to_json(self) -> dict:
        out: dict = {"name": self.name}
        if self.sink is not None:
            out["pattern"] = sink_pattern_to_json(self.sink)
        return out

    @staticmethod
    def from_json(data: dict) -> "EffectKind":
        sink = None
        if "pattern" in data:
            sink = sink_pattern_from_json(data["pattern"])
        return EffectKind(data["name"], sink)


FFI_CALL = EffectKind("FFICall")
FFI_DECL = EffectKind("FFIDecl")
STATIC_EXT = EffectKind("StaticExt")
STATIC_MUT = EffectKind("StaticMut")
UNSAFE_CALL = EffectKind("UnsafeCall")
UNION_FIELD = EffectKind("UnionField")
RAW_POINTER = EffectKind("RawPointer")
FN_PTR_CREATION = EffectKind("FnPtrCreation")
CLOSURE_CREATION = EffectKind("ClosureCreation")


def sink_call(pattern: SinkPattern) -> EffectKind:
    return EffectKind("SinkCall", pattern)


def match_sink(
    path: Sequence[str], registry: Iterable[SinkPattern]
) -> Optional[SinkPattern]:
    """Return the sink pattern matching a resolved call path, if any.

    Longest prefix wins; an imported exact-path match beats a builtin
    prefix of the same length (it carries provenance). Total function.
    """
    best: Optional[SinkPattern] = None
    for pattern in registry:
        if not pattern.matches(path):
            continue
        if best is None:
            best = pattern
            continue
        key = (len(pattern.prefix), pattern.is_imported)
        best_key = (len(best.prefix), best.is_imported)
        if key > best_key:
            best = pattern
    return best


@dataclass(frozen=True)
class SourceLocation:
    """1-based line/column position in a package-relative file."""

    file: str
    line: int
    col: int

    def to_json(self) -> dict:
        return {"file": self.file, "line": self.line, "col": self.col}

    @staticmethod
    def from_json(data: dict) -> "SourceLocation":
        return SourceLocation(data["file"], data["line"], data["col"])

    def sort_key(self) -> tuple:
        return (self.file, self.line, self.col)


def effect_id(
    package_id: str,
    location: SourceLocation,
    kind: EffectKind,
    containing_fn: Sequence[str],
) -> str:
    """Deterministic, collision-resistant identifier for an effect instance.

    A function of (package id, file, line, column, kind, containing
    function), so an id survives re-scans of unchanged source and goes
    stale when the code moves.
    """
    material = "\x1f".join(
        (
            package_id,
            location.file,
            str(location.line),
            str(location.col),
            kind.label(),
            path_str(containing_fn),
        )
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()[:32]


@dataclass(frozen=True)
class EffectInstance:
    """One occurrence of an effect at a source location."""

    id: str
    kind: EffectKind
    location: SourceLocation
    containing_fn: Path
    callee_path: Optional[Path] = None

    CALL_SHAPED = frozenset({"FFICall", "UnsafeCall", "SinkCall"})

    def __post_init__(self) -> None:
        if (self.kind.name in self.CALL_SHAPED) != (self.callee_path is not None):
            raise ValueError(
                f"callee_path must be present iff kind is call-shaped "
                f"(kind={self.kind.label()})"
            )

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "kind": self.kind.to_json(),
            "location": self.location.to_json(),
            "containing_fn": path_str(self.containing_fn),
        }
        if self.callee_path is not None:
            out["callee_path"] = path_str(self.callee_path)
        return out

    @staticmethod
    def from_json(data: dict) -> "EffectInstance":
        callee = data.get("callee_path")
        return EffectInstance(
            id=data["id"],
            kind=EffectKind.from_json(data["kind"]),
            location=SourceLocation.from_json(data["location"]),
            containing_fn=parse_path(data["containing_fn"]),
            callee_path=parse_path(callee) if callee is not None else None,
        )

    def sort_key(self) -> tuple:
        return self.location.sort_key() + (self.kind.label(),)
