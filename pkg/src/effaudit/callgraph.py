"""Call-graph model: function nodes, call edges, reachability.

Nodes are functions the scanner discovered in a package (including foreign
declarations and trait default bodies). Edges may point at external paths
that have no node; traversals follow only in-graph endpoints.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .effects import Path, SourceLocation, parse_path, path_str

DISPATCH_KINDS = ("direct", "static-trait", "dynamic-trait", "external")


@dataclass(frozen=True)
class FunctionNode:
    path: Path
    file: str
    start_line: int
    end_line: int
    visibility: str  # declared: pub | crate | private
    is_public: bool  # visible outside the package
    is_trait_method: bool = False
    trait_path: Optional[Path] = None
    is_foreign: bool = False
    is_unsafe: bool = False
    loc: int = 0

    def to_json(self) -> dict:
        return {
            "path": path_str(self.path),
            "file": self.file,
            "start_line": self.start_line,
            "end_line": self.end_line,
            "visibility": self.visibility,
            "is_public": self.is_public,
            "is_trait_method": self.is_trait_method,
            "trait": path_str(self.trait_path) if self.trait_path else None,
            "is_foreign": self.is_foreign,
            "is_unsafe": self.is_unsafe,
            "loc": self.loc,
        }

    @staticmethod
    def from_json(d: dict) -> "FunctionNode":
        return FunctionNode(
            path=parse_path(d["path"]),
            file=d["file"],
            start_line=d["start_line"],
            end_line=d["end_line"],
            visibility=d["visibility"],
            is_public=d["is_public"],
            is_trait_method=d["is_trait_method"],
            trait_path=parse_path(d["trait"]) if d.get("trait") else None,
            is_foreign=d["is_foreign"],
            is_unsafe=d["is_unsafe"],
            loc=d["loc"],
        )


@dataclass(frozen=True)
class CallEdge:
    caller: Path
    callee: Path  # may be an external path with no node
    site: SourceLocation
    dispatch: str

    def __post_init__(self) -> None:
        if self.dispatch not in DISPATCH_KINDS:
            raise ValueError(f"unknown dispatch kind: {self.dispatch}")

    def to_json(self) -> dict:
        return {
            "caller": path_str(self.caller),
            "callee": path_str(self.callee),
            "site": self.site.to_json(),
            "dispatch": self.dispatch,
        }

    @staticmethod
    def from_json(d: dict) -> "CallEdge":
        return CallEdge(
            caller=parse_path(d["caller"]),
            callee=parse_path(d["callee"]),
            site=SourceLocation.from_json(d["site"]),
            dispatch=d["dispatch"],
        )

    def sort_key(self) -> tuple:
        return (
            path_str(self.caller),
            path_str(self.callee),
            self.site.sort_key(),
            self.dispatch,
        )


@dataclass
class CallGraph:
    nodes: dict[Path, FunctionNode] = field(default_factory=dict)
    edges: list[CallEdge] = field(default_factory=list)

    def add_node(self, node: FunctionNode) -> None:
        self.nodes[node.path] = node

    def add_edge(self, edge: CallEdge) -> None:
        self.edges.append(edge)

    def out_edges(self) -> dict[Path, list[CallEdge]]:
        out: dict[Path, list[CallEdge]] = defaultdict(list)
        for e in self.edges:
            out[e.caller].append(e)
        return out

    def in_edges(self) -> dict[Path, list[CallEdge]]:
        inc: dict[Path, list[CallEdge]] = defaultdict(list)
        for e in self.edges:
            inc[e.callee].append(e)
        return inc

    def callers_of(self, path: Path) -> list[CallEdge]:
        return [e for e in self.edges if e.callee == path]

    def reachable_from(self, starts: Iterable[Path]) -> set[Path]:
        """Forward closure over in-graph nodes, including the starts."""
        out = self.out_edges()
        seen: set[Path] = set()
        queue = deque(p for p in starts if p in self.nodes)
        seen.update(queue)
        while queue:
            cur = queue.popleft()
            for e in out.get(cur, ()):
                if e.callee in self.nodes and e.callee not in seen:
                    seen.add(e.callee)
                    queue.append(e.callee)
        return seen

    def reaching(self, targets: Iterable[Path]) -> set[Path]:
        """All nodes from which some target is reachable, targets included."""
        inc = self.in_edges()
        seen: set[Path] = {p for p in targets if p in self.nodes}
        queue = deque(seen)
        while queue:
            cur = queue.popleft()
            for e in inc.get(cur, ()):
                if e.caller in self.nodes and e.caller not in seen:
                    seen.add(e.caller)
                    queue.append(e.caller)
        return seen

    def public_nodes(self) -> list[FunctionNode]:
        return [n for n in self.nodes.values() if n.is_public]

    def sorted_edges(self) -> list[CallEdge]:
        return sorted(self.edges, key=CallEdge.sort_key)

    def to_json(self) -> dict:
        return {
            "nodes": [
                self.nodes[p].to_json()
                for p in sorted(self.nodes, key=path_str)
            ],
            "edges": [e.to_json() for e in self.sorted_edges()],
        }

    @staticmethod
    def from_json(d: dict) -> "CallGraph":
        g = CallGraph()
        for nd in d["nodes"]:
            g.add_node(FunctionNode.from_json(nd))
        g.edges = [CallEdge.from_json(ed) for ed in d["edges"]]
        return g
