"""Package scanner: one syntactic pass over a Rust package.

Walks the module tree from the crate root, collects declarations (functions,
methods, traits, unions, statics, foreign items), then scans every function
body for effects and call edges. Resolution is per-module and
over-approximating: calls that cannot be pinned to an in-package function
become external edges under their best-known path, and name-based method
dispatch fans out to every candidate as dynamic-trait edges.

Deliberate approximations, stated once here:
- Static/const initializer expressions are not scanned; only function bodies
  (and FFI declarations) carry effects.
- Item-level macro invocations are not expanded; argument tokens of macro
  calls inside bodies are scanned as plain expressions.
- Prelude constructors (Some/None/Ok/Err) never produce call edges.
- A method call on a receiver of unknown type matches builtin sinks only
  when the receiver's declared type path is known; otherwise it cannot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .callgraph import CallEdge, CallGraph, FunctionNode
from .canon import canonical_dumps, fingerprint
from .effects import (
    CLOSURE_CREATION,
    FFI_CALL,
    FFI_DECL,
    FN_PTR_CREATION,
    RAW_POINTER,
    STATIC_EXT,
    STATIC_MUT,
    UNION_FIELD,
    UNSAFE_CALL,
    EffectInstance,
    EffectKind,
    Path,
    SinkPattern,
    SourceLocation,
    builtin_registry,
    effect_id,
    match_sink,
    path_str,
    sink_call,
    sink_pattern_from_json,
    sink_pattern_to_json,
)
from .rustlex import LexError, Token, lex, token_lines
from .rustparse import (
    FnItem,
    ForeignBlock,
    Group,
    ImplItem,
    ModItem,
    ParseError,
    StaticItem,
    TokenTree,
    TraitItem,
    TypeDefItem,
    UnionItem,
    UseDecl,
    build_trees,
    parse_fn_at,
    parse_items,
    parse_use_at,
)


class PackageError(Exception):
    """The package cannot be scanned at all (bad manifest, no crate root)."""


@dataclass(frozen=True)
class PackageMeta:
    name: str
    version: str
    links: Optional[str]
    root: FsPath
    entry: str  # package-relative crate-root file

    @property
    def id(self) -> str:
        return f"{self.name} {self.version}"

    @property
    def crate_ident(self) -> str:
        return self.name.replace("-", "_")


def read_package_meta(root: FsPath | str) -> PackageMeta:
    root = FsPath(root)
    manifest = root / "Cargo.toml"
    if not manifest.is_file():
        raise PackageError(f"no Cargo.toml under {root}")
    try:
        with open(manifest, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise PackageError(f"{manifest}: {exc}") from exc
    pkg = data.get("package")
    if not isinstance(pkg, dict) or "name" not in pkg:
        raise PackageError(f"{manifest} has no [package] name")
    name = pkg["name"]
    version = str(pkg.get("version", "0.0.0"))
    links = pkg.get("links")
    entry = data.get("lib", {}).get("path")
    if entry is None:
        if (root / "src" / "lib.rs").is_file():
            entry = "src/lib.rs"
        elif (root / "src" / "main.rs").is_file():
            entry = "src/main.rs"
        else:
            raise PackageError(f"{root}: no src/lib.rs or src/main.rs")
    return PackageMeta(name, version, links, root, entry)


@dataclass
class Module:
    path: Path
    file: str
    child_dir: FsPath
    public_chain: bool
    imports: dict[str, Path] = field(default_factory=dict)
    globs: list[Path] = field(default_factory=list)


@dataclass
class FnDecl:
    node_path: Path
    item: FnItem
    module: Module
    file: str
    self_type: Optional[str] = None
    trait_path: Optional[Path] = None
    is_default_body: bool = False
    is_foreign: bool = False
    is_nested: bool = False


@dataclass
class Frame:
    """Effect container: the function top level or one closure body."""

    site: Optional[SourceLocation]  # None for the function's own frame
    primitives: list[tuple[EffectKind, SourceLocation, Optional[Path]]] = field(
        default_factory=list
    )
    candidates: list[tuple[SourceLocation, Path]] = field(default_factory=list)
    children: list["Frame"] = field(default_factory=list)


@dataclass
class ScanResult:
    name: str
    version: str
    links: Optional[str]
    effects: list[EffectInstance]
    graph: CallGraph
    total_loc: int
    files: list[str]
    errors: list[dict]
    registry: frozenset[SinkPattern]

    @property
    def id(self) -> str:
        return f"{self.name} {self.version}"

    def body_json(self) -> dict:
        return {
            "package": {"name": self.name, "version": self.version, "links": self.links},
            "effects": [e.to_json() for e in sorted(self.effects, key=EffectInstance.sort_key)],
            "graph": self.graph.to_json(),
            "total_loc": self.total_loc,
            "files": sorted(self.files),
            "errors": sorted(self.errors, key=lambda e: e["file"]),
            "sink_registry": sorted(
                (sink_pattern_to_json(p) for p in self.registry),
                key=lambda d: (d["prefix"], str(d["origin"])),
            ),
        }

    def fingerprint(self) -> str:
        return fingerprint(self.body_json())

    def to_json(self) -> dict:
        out = self.body_json()
        out["fingerprint"] = self.fingerprint()
        return out

    def dumps(self) -> str:
        return canonical_dumps(self.to_json())

    @staticmethod
    def from_json(d: dict) -> "ScanResult":
        return ScanResult(
            name=d["package"]["name"],
            version=d["package"]["version"],
            links=d["package"]["links"],
            effects=[EffectInstance.from_json(e) for e in d["effects"]],
            graph=CallGraph.from_json(d["graph"]),
            total_loc=d["total_loc"],
            files=list(d["files"]),
            errors=list(d["errors"]),
            registry=frozenset(sink_pattern_from_json(p) for p in d["sink_registry"]),
        )


def scan_package(
    root: FsPath | str, registry: Optional[frozenset[SinkPattern]] = None
) -> ScanResult:
    meta = read_package_meta(root)
    return PackageScanner(meta, registry or builtin_registry()).run()


# Identifier heads that start a new expression rather than continue one.
_EXPR_START_KEYWORDS = frozenset(
    {"return", "break", "continue", "in", "match", "if", "while", "loop",
     "else", "move", "let", "mut", "ref", "yield", "do", "await", "unsafe"}
)
_NON_PATH_KEYWORDS = _EXPR_START_KEYWORDS | frozenset(
    {"fn", "use", "as", "where", "impl", "dyn", "for", "static", "const",
     "pub", "trait", "struct", "enum", "union", "extern", "type", "box", "async"}
)
_PRELUDE_CTORS = frozenset({"Some", "None", "Ok", "Err"})


class PackageScanner:
    def __init__(self, meta: PackageMeta, registry: frozenset[SinkPattern]) -> None:
        self.meta = meta
        self.registry = registry
        self.modules: dict[Path, Module] = {}
        self.file_tokens: dict[str, list[Token]] = {}
        self.errors: list[dict] = []
        self.fns: dict[Path, FnDecl] = {}
        self.types: dict[Path, bool] = {}  # canonical type path -> is public
        self.type_index: dict[tuple[Path, str], Path] = {}
        self.unions: dict[Path, list[str]] = {}
        self.union_names: set[str] = set()
        self.union_fields: set[str] = set()
        self.statics: dict[Path, str] = {}  # path -> mut | plain | foreign
        self.traits: dict[Path, dict] = {}
        self.trait_index: dict[tuple[Path, str], Path] = {}
        self.methods_of_type: dict[Path, dict[str, list[tuple[str, Optional[Path], Path]]]] = {}
        self.trait_method_named: dict[str, list[Path]] = {}
        self.inherent_named: dict[str, list[Path]] = {}
        self.decl_effects: list[tuple[EffectKind, SourceLocation, Path, Optional[Path]]] = []
        self.frames: dict[Path, Frame] = {}
        self.edges: dict[Path, list[CallEdge]] = {}

    # ------------------------------------------------------------------
    # Module walking

    def run(self) -> ScanResult:
        entry_abs = self.meta.root / self.meta.entry
        items = self._load_file(entry_abs, self.meta.entry)
        root_mod = Module(
            path=(self.meta.crate_ident,),
            file=self.meta.entry,
            child_dir=entry_abs.parent,
            public_chain=True,
        )
        if items is not None:
            self._register_module(root_mod, items)
        self._scan_bodies()
        return self._assemble()

    def _load_file(self, abs_path: FsPath, rel: str) -> Optional[list]:
        if not abs_path.is_file():
            self.errors.append({"file": rel, "error": "module file not found"})
            return None
        text = abs_path.read_text(encoding="utf-8", errors="replace")
        try:
            tokens = lex(text)
            trees = build_trees(tokens)
            items = parse_items(trees)
        except (LexError, ParseError) as exc:
            self.errors.append({"file": rel, "error": str(exc)})
            return None
        self.file_tokens[rel] = tokens
        return items

    def _register_module(self, mod: Module, items: list) -> None:
        if mod.path in self.modules:
            return
        self.modules[mod.path] = mod
        deferred_impls: list[ImplItem] = []
        for item in items:
            if isinstance(item, UseDecl):
                self._register_use(mod, item)
            elif isinstance(item, ModItem):
                self._register_submodule(mod, item)
            elif isinstance(item, TypeDefItem):
                self._register_type(mod, item.name, item.vis)
            elif isinstance(item, UnionItem):
                tp = self._register_type(mod, item.name, item.vis)
                self.unions[tp] = item.fields
                self.union_names.add(item.name)
                self.union_fields.update(item.fields)
            elif isinstance(item, StaticItem):
                self.statics[mod.path + (item.name,)] = "mut" if item.is_mut else "plain"
            elif isinstance(item, ForeignBlock):
                self._register_foreign(mod, item)
            elif isinstance(item, FnItem):
                self._register_fn(mod, item, mod.path + (item.name,))
            elif isinstance(item, TraitItem):
                self._register_trait(mod, item)
            elif isinstance(item, ImplItem):
                deferred_impls.append(item)
        # Impl registration needs the module's types and traits in place.
        for impl in deferred_impls:
            self._register_impl(mod, impl)

    def _register_use(self, mod: Module, use: UseDecl) -> None:
        for alias, target in use.entries:
            mod.imports[alias] = self._normalize_import(mod, target)
        for g in use.globs:
            mod.globs.append(self._normalize_import(mod, g))

    def _normalize_import(self, mod: Module, target: Path) -> Path:
        absolute = self._absolutize(mod, target)
        return absolute if absolute is not None else target

    def _absolutize(self, mod: Module, segs: Path) -> Optional[Path]:
        if not segs:
            return None
        if segs[0] == "crate":
            return (self.meta.crate_ident,) + tuple(segs[1:])
        if segs[0] == "self" and len(segs) > 1:
            return mod.path + tuple(segs[1:])
        if segs[0] == "super":
            base = mod.path
            rest = list(segs)
            while rest and rest[0] == "super":
                if len(base) > 1:
                    base = base[:-1]
                rest = rest[1:]
            return base + tuple(rest)
        if segs[0] == self.meta.crate_ident:
            return tuple(segs)
        return None

    def _register_submodule(self, parent: Module, item: ModItem) -> None:
        sub_path = parent.path + (item.name,)
        public = parent.public_chain and item.vis == "pub"
        if item.inline:
            sub = Module(sub_path, parent.file, parent.child_dir / item.name, public)
            self._register_module(sub, item.items)
            return
        for candidate in (
            parent.child_dir / f"{item.name}.rs",
            parent.child_dir / item.name / "mod.rs",
        ):
            if candidate.is_file():
                rel = candidate.relative_to(self.meta.root).as_posix()
                items = self._load_file(candidate, rel)
                sub = Module(sub_path, rel, parent.child_dir / item.name, public)
                if items is not None:
                    self._register_module(sub, items)
                return
        missing = (parent.child_dir / f"{item.name}.rs").relative_to(self.meta.root)
        self.errors.append({"file": missing.as_posix(), "error": "module file not found"})

    def _register_type(self, mod: Module, name: str, vis: str) -> Path:
        tp = mod.path + (name,)
        self.types[tp] = vis == "pub" and mod.public_chain
        self.type_index[(mod.path, name)] = tp
        return tp

    def _register_foreign(self, mod: Module, block: ForeignBlock) -> None:
        for fn in block.fns:
            node_path = mod.path + (fn.name,)
            if node_path in self.fns:
                continue
            self.fns[node_path] = FnDecl(
                node_path, fn, mod, mod.file, is_foreign=True
            )
            loc = SourceLocation(mod.file, fn.line, 1)
            self.decl_effects.append((FFI_DECL, loc, node_path, None))
        for st in block.statics:
            self.statics[mod.path + (st.name,)] = "foreign"

    def _register_fn(
        self,
        mod: Module,
        item: FnItem,
        node_path: Path,
        self_type: Optional[str] = None,
        trait_path: Optional[Path] = None,
        is_default_body: bool = False,
        is_nested: bool = False,
    ) -> Optional[FnDecl]:
        if node_path in self.fns:
            return None
        decl = FnDecl(
            node_path, item, mod, mod.file,
            self_type=self_type, trait_path=trait_path,
            is_default_body=is_default_body, is_nested=is_nested,
        )
        self.fns[node_path] = decl
        if item.body is not None:
            self._extract_body_items(mod, item.body.tokens, node_path)
        return decl

    def _extract_body_items(self, mod: Module, trees: list[TokenTree], base: Path) -> None:
        """Find nested named fns and local use declarations in a body."""
        i = 0
        while i < len(trees):
            t = trees[i]
            if isinstance(t, Token) and t.is_ident("fn"):
                nxt = trees[i + 1] if i + 1 < len(trees) else None
                if isinstance(nxt, Token) and nxt.kind == "ident":
                    prev = trees[i - 1] if i > 0 else None
                    is_unsafe = isinstance(prev, Token) and prev.is_ident("unsafe")
                    fn, end = parse_fn_at(trees, i, is_unsafe)
                    if fn is not None:
                        self._register_fn(mod, fn, base + (fn.name,), is_nested=True)
                        i = end
                        continue
            if isinstance(t, Token) and t.is_ident("use"):
                use, end = parse_use_at(trees, i)
                if use is not None:
                    # Local imports are folded into the module table
                    # (scope widening is an accepted over-approximation).
                    self._register_use(mod, use)
                    i = end
                    continue
            if isinstance(t, Group):
                self._extract_body_items(mod, t.tokens, base)
            i += 1

    def _register_trait(self, mod: Module, item: TraitItem) -> None:
        tp = mod.path + (item.name,)
        self.trait_index[(mod.path, item.name)] = tp
        info = {
            "public": item.vis == "pub" and mod.public_chain,
            "methods": {m.name for m in item.methods},
            "defaults": {},
            "impls": [],
        }
        self.traits[tp] = info
        for m in item.methods:
            if m.body is None:
                continue
            fn_path = tp + (m.name,)
            decl = self._register_fn(
                mod, m, fn_path, trait_path=tp, is_default_body=True
            )
            if decl is not None:
                info["defaults"][m.name] = fn_path
                self.trait_method_named.setdefault(m.name, []).append(fn_path)

    def _register_impl(self, mod: Module, impl: ImplItem) -> None:
        resolved_type = self._resolve_type_name(mod, impl.self_type)
        type_path = resolved_type if resolved_type is not None else (impl.self_type,)
        trait_path: Optional[Path] = None
        if impl.trait_path is not None:
            trait_path = self._resolve_trait_path(mod, impl.trait_path)
        methods = self.methods_of_type.setdefault(type_path, {})
        impl_map: dict[str, Path] = {}
        for fn in impl.fns:
            fn_path = mod.path + (impl.self_type, fn.name)
            if fn_path in self.fns and trait_path is not None:
                fn_path = mod.path + (impl.self_type, trait_path[-1], fn.name)
            decl = self._register_fn(
                mod, fn, fn_path,
                self_type=impl.self_type, trait_path=trait_path,
            )
            if decl is None:
                continue
            kind = "inherent" if trait_path is None else "trait"
            methods.setdefault(fn.name, []).append((kind, trait_path, fn_path))
            if trait_path is None:
                self.inherent_named.setdefault(fn.name, []).append(fn_path)
            else:
                impl_map[fn.name] = fn_path
                self.trait_method_named.setdefault(fn.name, []).append(fn_path)
        if trait_path is not None and trait_path in self.traits:
            self.traits[trait_path]["impls"].append((type_path, impl_map))

    def _resolve_type_name(self, mod: Module, name: str) -> Optional[Path]:
        if (mod.path, name) in self.type_index:
            return self.type_index[(mod.path, name)]
        if name in mod.imports:
            target = mod.imports[name]
            return target if target in self.types else None
        for g in mod.globs:
            if g + (name,) in self.types:
                return g + (name,)
        return None

    def _resolve_trait_path(self, mod: Module, path: Path) -> Path:
        if len(path) == 1:
            name = path[0]
            if (mod.path, name) in self.trait_index:
                return self.trait_index[(mod.path, name)]
            if name in mod.imports:
                return mod.imports[name]
            for g in mod.globs:
                if g + (name,) in self.traits:
                    return g + (name,)
            return path
        absolute = self._absolutize(mod, path)
        if absolute is not None:
            return absolute
        head = path[0]
        if head in mod.imports:
            return mod.imports[head] + path[1:]
        return path

    # ------------------------------------------------------------------
    # Path resolution for calls and value uses

    def resolve_path(self, mod: Module, scope: Path, segs: Path) -> tuple[str, Path]:
        """Resolve a path expression to ('fn'|'static'|'external', path)."""
        absolute = self._absolutize(mod, segs)
        if absolute is not None:
            return self._classify(absolute)
        head = segs[0]
        if head in mod.imports:
            full = mod.imports[head] + tuple(segs[1:])
            return self._classify(full)
        cur = scope
        while len(cur) >= len(mod.path):
            candidate = cur + tuple(segs)
            kind, path = self._classify(candidate)
            if kind != "external":
                return kind, path
            if len(cur) == len(mod.path):
                break
            cur = cur[:-1]
        for g in mod.globs:
            kind, path = self._classify(g + tuple(segs))
            if kind != "external":
                return kind, path
        return "external", tuple(segs)

    def _classify(self, path: Path) -> tuple[str, Path]:
        if path in self.fns:
            return "fn", path
        if path in self.statics:
            return "static", path
        return "external", path

    # ------------------------------------------------------------------
    # Body scanning

    def _scan_bodies(self) -> None:
        for path in sorted(self.fns, key=path_str):
            decl = self.fns[path]
            if decl.is_foreign or decl.item.body is None:
                continue
            walker = _BodyWalker(self, decl)
            frame, edges = walker.scan()
            self.frames[path] = frame
            self.edges[path] = edges

    # ------------------------------------------------------------------
    # Fixpoint over fn-reference candidates and closure flagging

    def _fn_effectful_fixpoint(self) -> dict[Path, bool]:
        effectful: dict[Path, bool] = {}
        for path, decl in self.fns.items():
            effectful[path] = decl.is_foreign
        changed = True
        while changed:
            changed = False
            for path, frame in self.frames.items():
                now = self._frame_flagged(frame, effectful)
                if now and not effectful[path]:
                    effectful[path] = True
                    changed = True
        return effectful

    def _frame_flagged(self, frame: Frame, effectful: dict[Path, bool]) -> bool:
        if frame.primitives:
            return True
        if any(effectful.get(t, False) for _, t in frame.candidates):
            return True
        return any(self._frame_flagged(c, effectful) for c in frame.children)

    # ------------------------------------------------------------------
    # Assembly

    def _assemble(self) -> ScanResult:
        effectful = self._fn_effectful_fixpoint()
        pkg_id = self.meta.id
        effects: list[EffectInstance] = []

        for kind, loc, containing, callee in self.decl_effects:
            effects.append(
                EffectInstance(
                    effect_id(pkg_id, loc, kind, containing), kind, loc, containing, callee
                )
            )
        for path, frame in self.frames.items():
            for kind, loc, callee in frame.primitives:
                effects.append(
                    EffectInstance(
                        effect_id(pkg_id, loc, kind, path), kind, loc, path, callee
                    )
                )
            for loc, target in frame.candidates:
                if effectful.get(target, False):
                    effects.append(
                        EffectInstance(
                            effect_id(pkg_id, loc, FN_PTR_CREATION, path),
                            FN_PTR_CREATION, loc, path, None,
                        )
                    )
            for child in frame.children:
                if self._frame_flagged(child, effectful):
                    effects.append(
                        EffectInstance(
                            effect_id(pkg_id, child.site, CLOSURE_CREATION, path),
                            CLOSURE_CREATION, child.site, path, None,
                        )
                    )

        graph = CallGraph()
        loc_by_fn = self._function_loc()
        for path in sorted(self.fns, key=path_str):
            decl = self.fns[path]
            graph.add_node(
                FunctionNode(
                    path=path,
                    file=decl.file,
                    start_line=decl.item.line,
                    end_line=decl.item.end_line,
                    visibility=decl.item.vis,
                    is_public=self._is_public(decl),
                    is_trait_method=decl.trait_path is not None,
                    trait_path=decl.trait_path,
                    is_foreign=decl.is_foreign,
                    is_unsafe=decl.item.is_unsafe,
                    loc=loc_by_fn.get(path, 0),
                )
            )
        seen_edges: set = set()
        for path in sorted(self.edges, key=path_str):
            for e in self.edges[path]:
                key = e.sort_key()
                if key not in seen_edges:
                    seen_edges.add(key)
                    graph.add_edge(e)

        total_loc = sum(len(token_lines(t)) for t in self.file_tokens.values())
        unique: dict[str, EffectInstance] = {}
        for e in effects:
            unique.setdefault(e.id, e)
        effects = list(unique.values())
        effects.sort(key=EffectInstance.sort_key)
        return ScanResult(
            name=self.meta.name,
            version=self.meta.version,
            links=self.meta.links,
            effects=effects,
            graph=graph,
            total_loc=total_loc,
            files=sorted(self.file_tokens),
            errors=self.errors,
            registry=self.registry,
        )

    def _is_public(self, decl: FnDecl) -> bool:
        if decl.is_nested:
            return False
        chain = decl.module.public_chain
        if decl.is_foreign:
            return chain and decl.item.vis == "pub"
        if decl.is_default_body:
            info = self.traits.get(decl.trait_path)
            return chain and bool(info and info["public"])
        if decl.self_type is not None:
            tp = self._resolve_type_name(decl.module, decl.self_type)
            type_public = self.types.get(tp, True) if tp is not None else True
            if decl.trait_path is not None:
                info = self.traits.get(decl.trait_path)
                trait_public = info["public"] if info is not None else True
                return chain and type_public and trait_public
            return chain and type_public and decl.item.vis == "pub"
        return chain and decl.item.vis == "pub"

    def _function_loc(self) -> dict[Path, int]:
        pools = {f: set(token_lines(t)) for f, t in self.file_tokens.items()}
        loc: dict[Path, int] = {}
        order = sorted(
            self.fns.values(),
            key=lambda d: (-len(d.node_path), d.file, d.item.line, path_str(d.node_path)),
        )
        for decl in order:
            pool = pools.get(decl.file, set())
            owned = {l for l in pool if decl.item.line <= l <= decl.item.end_line}
            pool -= owned
            loc[decl.node_path] = len(owned)
        return loc


class _BodyWalker:
    """Expression-level pattern scan of one function body."""

    def __init__(self, pkg: PackageScanner, decl: FnDecl) -> None:
        self.pkg = pkg
        self.decl = decl
        self.mod = decl.module
        self.file = decl.file
        self.locals: dict[str, Path] = {}
        self.edges: list[CallEdge] = []
        self.root = Frame(site=None)

    def scan(self) -> tuple[Frame, list[CallEdge]]:
        item = self.decl.item
        self._seed_params(item)
        unsafe = 1 if item.is_unsafe else 0
        self._walk(item.body.tokens, unsafe, self.root)
        return self.root, self.edges

    def _seed_params(self, item: FnItem) -> None:
        params = next(
            (t for t in item.signature if isinstance(t, Group) and t.delim == "("), None
        )
        if params is None:
            return
        groups: list[list[TokenTree]] = [[]]
        for t in params.tokens:
            if isinstance(t, Token) and t.is_punct(","):
                groups.append([])
            else:
                groups[-1].append(t)
        for g in groups:
            if any(isinstance(t, Token) and t.is_ident("self") for t in g):
                owner = self.decl.self_type or (
                    self.decl.trait_path[-1] if self.decl.trait_path else None
                )
                if owner:
                    self.locals["self"] = (owner,)
                continue
            name: Optional[str] = None
            type_path: Optional[Path] = None
            for idx, t in enumerate(g):
                if isinstance(t, Token) and t.is_punct(":"):
                    before = [x for x in g[:idx] if isinstance(x, Token) and x.kind == "ident"]
                    before = [x for x in before if x.text not in ("mut", "ref")]
                    if len(before) == 1:
                        name = before[0].text
                    type_path = _type_head_path(g[idx + 1 :])
                    break
            if name and type_path:
                self.locals[name] = type_path

    # -- main walk ------------------------------------------------------

    def _walk(self, trees: list[TokenTree], unsafe: int, frame: Frame) -> None:
        i = 0
        prev: Optional[TokenTree] = None
        n = len(trees)
        while i < n:
            t = trees[i]
            nxt = trees[i + 1] if i + 1 < n else None

            if isinstance(t, Token) and t.kind == "ident":
                if t.text == "unsafe" and isinstance(nxt, Group) and nxt.delim == "{":
                    self._walk(nxt.tokens, unsafe + 1, frame)
                    prev = nxt
                    i += 2
                    continue
                if t.text == "fn" and isinstance(nxt, Token) and nxt.kind == "ident":
                    fn, end = parse_fn_at(trees, i, False)
                    if fn is not None:
                        prev = None
                        i = end
                        continue
                if t.text == "use":
                    _, end = parse_use_at(trees, i)
                    prev = None
                    i = end
                    continue
                if t.text == "let":
                    self._record_let(trees, i)
                    prev = t
                    i += 1
                    continue
                if t.text == "move" and isinstance(nxt, Token) and nxt.text in ("|", "||"):
                    i = self._scan_closure(trees, i + 1, unsafe, frame)
                    prev = None
                    continue
                if t.text in _NON_PATH_KEYWORDS:
                    prev = t
                    i += 1
                    continue
                i, prev = self._scan_path_expr(trees, i, unsafe, frame, prev)
                continue

            if isinstance(t, Token) and t.is_punct("."):
                i, prev = self._scan_dot(trees, i, unsafe, frame, prev)
                continue

            if isinstance(t, Token) and t.text in ("|", "||") and self._expr_position(prev):
                i = self._scan_closure(trees, i, unsafe, frame)
                prev = None
                continue

            if isinstance(t, Token) and t.is_punct("*") and self._expr_position(prev):
                if not (isinstance(nxt, Token) and (nxt.is_ident("mut") or nxt.is_ident("const"))):
                    if unsafe > 0:
                        loc = SourceLocation(self.file, t.line, t.col)
                        frame.primitives.append((RAW_POINTER, loc, None))
                prev = t
                i += 1
                continue

            if isinstance(t, Group):
                self._walk(t.tokens, unsafe, frame)
                prev = t
                i += 1
                continue

            prev = t
            i += 1

    def _expr_position(self, prev: Optional[TokenTree]) -> bool:
        if prev is None:
            return True
        if isinstance(prev, Group):
            return False
        if prev.kind == "punct":
            return prev.text not in (")", "]", "}")
        if prev.kind == "ident":
            return prev.text in _EXPR_START_KEYWORDS
        return False

    # -- let binding type tracking ---------------------------------------

    def _record_let(self, trees: list[TokenTree], i: int) -> None:
        j = i + 1
        n = len(trees)
        if j < n and isinstance(trees[j], Token) and trees[j].is_ident("mut"):
            j += 1
        if j >= n or not isinstance(trees[j], Token) or trees[j].kind != "ident":
            return
        name = trees[j].text
        j += 1
        # Untyped bindings still shadow item names; () marks unknown type.
        self.locals[name] = ()
        if j < n and isinstance(trees[j], Token) and trees[j].is_punct(":"):
            ty = _type_head_path(_until_stmt_or_eq(trees, j + 1))
            if ty:
                self.locals[name] = ty
            return
        if j < n and isinstance(trees[j], Token) and trees[j].is_punct("="):
            segs, k = _collect_path(trees, j + 1)
            if not segs:
                return
            after = trees[k] if k < n else None
            if isinstance(after, Group) and after.delim == "{":
                self.locals[name] = tuple(segs)
            elif isinstance(after, Group) and after.delim == "(" and len(segs) >= 2:
                # constructor convention: T::new(..) binds a T
                self.locals[name] = tuple(segs[:-1])

    # -- path expressions -------------------------------------------------

    def _scan_path_expr(
        self,
        trees: list[TokenTree],
        i: int,
        unsafe: int,
        frame: Frame,
        prev: Optional[TokenTree],
    ) -> tuple[int, Optional[TokenTree]]:
        start_tok = trees[i]
        segs, j = _collect_path(trees, i)
        if not segs:
            return i + 1, start_tok
        nxt = trees[j] if j < len(trees) else None
        loc = SourceLocation(self.file, start_tok.line, start_tok.col)

        if isinstance(nxt, Token) and nxt.is_punct("!"):
            # macro invocation: scan argument tokens as expressions
            after = trees[j + 1] if j + 1 < len(trees) else None
            if isinstance(after, Group):
                self._walk(after.tokens, unsafe, frame)
                return j + 2, after
            return j + 1, nxt

        if isinstance(nxt, Group) and nxt.delim == "(":
            self._handle_call(segs, loc, unsafe, frame)
            self._walk(nxt.tokens, unsafe, frame)
            return j + 1, nxt

        self._handle_value_path(segs, loc, unsafe, frame, trees, j)
        return j, trees[j - 1] if j > 0 else prev

    def _handle_call(self, segs: list[str], loc, unsafe: int, frame: Frame) -> None:
        if len(segs) == 1 and (segs[0] in self.locals or segs[0] in _PRELUDE_CTORS):
            return  # closure/fn-pointer variable call, or prelude constructor
        if segs[0] == "Self" and self.decl.self_type:
            segs = [self.decl.self_type] + segs[1:]
        kind, path = self.pkg.resolve_path(self.mod, self.decl.node_path, tuple(segs))
        if kind == "fn":
            decl = self.pkg.fns[path]
            if decl.is_foreign:
                frame.primitives.append((FFI_CALL, loc, path))
            else:
                sink = match_sink(path, self.pkg.registry)
                if sink is not None:
                    frame.primitives.append((sink_call(sink), loc, path))
                elif decl.item.is_unsafe:
                    frame.primitives.append((UNSAFE_CALL, loc, path))
            self.edges.append(CallEdge(self.decl.node_path, path, loc, "direct"))
            return
        if kind == "static":
            return
        sink = match_sink(path, self.pkg.registry)
        if sink is not None:
            frame.primitives.append((sink_call(sink), loc, path))
        elif unsafe > 0:
            frame.primitives.append((UNSAFE_CALL, loc, path))
        self.edges.append(CallEdge(self.decl.node_path, path, loc, "external"))

    def _handle_value_path(
        self, segs: list[str], loc, unsafe: int, frame: Frame,
        trees: list[TokenTree], j: int,
    ) -> None:
        if len(segs) == 1 and (segs[0] in self.locals or segs[0] in _PRELUDE_CTORS):
            return
        if segs[0] == "Self" and self.decl.self_type:
            segs = [self.decl.self_type] + segs[1:]
        kind, path = self.pkg.resolve_path(self.mod, self.decl.node_path, tuple(segs))
        if kind == "static":
            flavor = self.pkg.statics[path]
            if flavor == "mut":
                frame.primitives.append((STATIC_MUT, loc, None))
            elif flavor == "foreign":
                frame.primitives.append((STATIC_EXT, loc, None))
            return
        if kind == "fn":
            frame.candidates.append((loc, path))

    # -- field and method access ------------------------------------------

    def _scan_dot(
        self,
        trees: list[TokenTree],
        i: int,
        unsafe: int,
        frame: Frame,
        prev: Optional[TokenTree],
    ) -> tuple[int, Optional[TokenTree]]:
        nxt = trees[i + 1] if i + 1 < len(trees) else None
        if not isinstance(nxt, Token) or nxt.kind not in ("ident", "num"):
            return i + 1, trees[i]
        after_idx = i + 2
        after = trees[after_idx] if after_idx < len(trees) else None
        if isinstance(after, Token) and after.is_punct("::"):
            # method turbofish: skip `::<..>` and look for the call group
            depth = 0
            k = after_idx + 1
            while k < len(trees):
                tk = trees[k]
                if isinstance(tk, Token) and tk.kind == "punct":
                    if tk.text in ("<", "<<"):
                        depth += len(tk.text)
                    elif tk.text in (">", ">>"):
                        depth -= len(tk.text)
                        if depth <= 0:
                            k += 1
                            break
                k += 1
            after_idx = k
            after = trees[after_idx] if after_idx < len(trees) else None
        loc = SourceLocation(self.file, nxt.line, nxt.col)

        if nxt.kind == "ident" and isinstance(after, Group) and after.delim == "(":
            recv_type: Optional[Path] = None
            if isinstance(prev, Token) and prev.kind == "ident":
                recv_type = self.locals.get(prev.text)
            self._handle_method(nxt.text, recv_type, loc, unsafe, frame)
            self._walk(after.tokens, unsafe, frame)
            return after_idx + 1, after

        if nxt.kind == "ident" and nxt.text != "await":
            receiver_union = (
                isinstance(prev, Token)
                and prev.kind == "ident"
                and self.locals.get(prev.text, ())
                and self.locals.get(prev.text)[-1] in self.pkg.union_names
            )
            if receiver_union or (unsafe > 0 and nxt.text in self.pkg.union_fields):
                frame.primitives.append((UNION_FIELD, loc, None))
        return i + 2, nxt

    def _handle_method(
        self, name: str, recv_type: Optional[Path], loc, unsafe: int, frame: Frame
    ) -> None:
        pkg = self.pkg
        targets: list[tuple[Path, str]] = []  # (fn path, dispatch)

        if recv_type:
            resolved = self._resolve_receiver_type(recv_type)
            if resolved is not None:
                res_kind, res_path = resolved
                if res_kind == "trait":
                    info = pkg.traits[res_path]
                    for _, impl_map in info["impls"]:
                        if name in impl_map:
                            targets.append((impl_map[name], "dynamic-trait"))
                    if name in info["defaults"]:
                        targets.append((info["defaults"][name], "dynamic-trait"))
                elif res_kind == "type":
                    for kind, _, fn_path in pkg.methods_of_type.get(res_path, {}).get(name, []):
                        dispatch = "direct" if kind == "inherent" else "static-trait"
                        targets.append((fn_path, dispatch))
                    if not targets:
                        # traits implemented by this type may supply a default
                        for trait_path, info in pkg.traits.items():
                            if name not in info["defaults"]:
                                continue
                            if any(tp == res_path for tp, _ in info["impls"]):
                                targets.append((info["defaults"][name], "static-trait"))
                elif res_kind == "external":
                    callee = res_path + (name,)
                    sink = match_sink(callee, pkg.registry)
                    if sink is not None:
                        frame.primitives.append((sink_call(sink), loc, callee))
                    elif unsafe > 0:
                        frame.primitives.append((UNSAFE_CALL, loc, callee))
                    self.edges.append(
                        CallEdge(self.decl.node_path, callee, loc, "external")
                    )
                    return

        if not targets:
            named = pkg.trait_method_named.get(name) or pkg.inherent_named.get(name)
            if named:
                targets = [(p, "dynamic-trait") for p in named]

        if not targets:
            callee = ("<receiver>", name)
            if unsafe > 0:
                frame.primitives.append((UNSAFE_CALL, loc, callee))
            self.edges.append(CallEdge(self.decl.node_path, callee, loc, "external"))
            return

        unsafe_targets = sorted(
            (p for p, _ in targets if pkg.fns[p].item.is_unsafe), key=path_str
        )
        if unsafe_targets:
            frame.primitives.append((UNSAFE_CALL, loc, unsafe_targets[0]))
        for fn_path, dispatch in targets:
            self.edges.append(CallEdge(self.decl.node_path, fn_path, loc, dispatch))

    def _resolve_receiver_type(self, recv: Path) -> Optional[tuple[str, Path]]:
        if len(recv) == 1:
            name = recv[0]
            if (self.mod.path, name) in self.pkg.trait_index:
                return "trait", self.pkg.trait_index[(self.mod.path, name)]
            tp = self.pkg._resolve_type_name(self.mod, name)
            if tp is not None:
                return "type", tp
            if name in self.mod.imports:
                target = self.mod.imports[name]
                if target in self.pkg.traits:
                    return "trait", target
                if target in self.pkg.types:
                    return "type", target
                return "external", target
            return None
        absolute = self.pkg._absolutize(self.mod, recv)
        if absolute is not None:
            if absolute in self.pkg.traits:
                return "trait", absolute
            if absolute in self.pkg.types:
                return "type", absolute
            return None
        head = recv[0]
        if head in self.mod.imports:
            full = self.mod.imports[head] + recv[1:]
            if full in self.pkg.traits:
                return "trait", full
            if full in self.pkg.types:
                return "type", full
            return "external", full
        return "external", recv

    # -- closures -----------------------------------------------------------

    def _scan_closure(self, trees: list[TokenTree], i: int, unsafe: int, frame: Frame) -> int:
        bar = trees[i]
        loc = SourceLocation(self.file, bar.line, bar.col)
        arg_names: dict[str, Path] = {}
        j = i + 1
        if bar.text == "|":
            arg_tokens: list[TokenTree] = []
            while j < len(trees):
                t = trees[j]
                if isinstance(t, Token) and t.text in ("|", "||"):
                    j += 1
                    break
                arg_tokens.append(t)
                j += 1
            arg_names = _closure_args(arg_tokens)
        body_trees: list[TokenTree]
        nxt = trees[j] if j < len(trees) else None
        if isinstance(nxt, Group) and nxt.delim == "{":
            body_trees = nxt.tokens
            end = j + 1
        else:
            body_trees = []
            end = j
            while end < len(trees):
                t = trees[end]
                if isinstance(t, Token) and t.kind == "punct" and t.text in (",", ";"):
                    break
                body_trees.append(t)
                end += 1
        child = Frame(site=loc)
        frame.children.append(child)
        saved = dict(self.locals)
        self.locals.update(arg_names)
        # unsafe contexts do not extend into a closure's body
        self._walk(body_trees, 0, child)
        self.locals = saved
        return end


def _closure_args(tokens: list[TokenTree]) -> dict[str, Path]:
    out: dict[str, Path] = {}
    groups: list[list[TokenTree]] = [[]]
    for t in tokens:
        if isinstance(t, Token) and t.is_punct(","):
            groups.append([])
        else:
            groups[-1].append(t)
    for g in groups:
        name: Optional[str] = None
        ty: Optional[Path] = None
        colon = next(
            (idx for idx, t in enumerate(g) if isinstance(t, Token) and t.is_punct(":")),
            None,
        )
        pattern = g if colon is None else g[:colon]
        idents = [
            t.text for t in pattern
            if isinstance(t, Token) and t.kind == "ident" and t.text not in ("mut", "ref")
        ]
        if len(idents) == 1:
            name = idents[0]
        if colon is not None:
            ty = _type_head_path(g[colon + 1 :])
        if name and ty:
            out[name] = ty
    return out


def _collect_path(trees: list[TokenTree], i: int) -> tuple[list[str], int]:
    """Collect a `::`-joined identifier chain starting at trees[i]."""
    segs: list[str] = []
    n = len(trees)
    t = trees[i] if i < n else None
    if not (isinstance(t, Token) and t.kind == "ident") or t.text in _NON_PATH_KEYWORDS:
        return segs, i
    segs.append(t.text)
    j = i + 1
    while j + 1 < n:
        sep = trees[j]
        if not (isinstance(sep, Token) and sep.is_punct("::")):
            break
        after = trees[j + 1]
        if isinstance(after, Token) and after.kind == "ident":
            segs.append(after.text)
            j += 2
            continue
        if isinstance(after, Token) and after.text in ("<", "<<"):
            # turbofish: skip to the matching close, then maybe continue
            depth = 0
            k = j + 1
            while k < n:
                tk = trees[k]
                if isinstance(tk, Token) and tk.kind == "punct":
                    if tk.text in ("<", "<<"):
                        depth += len(tk.text)
                    elif tk.text in (">", ">>"):
                        depth -= len(tk.text)
                        if depth <= 0:
                            k += 1
                            break
                k += 1
            j = k
            continue
        break
    return segs, j


def _until_stmt_or_eq(trees: list[TokenTree], i: int) -> list[TokenTree]:
    out: list[TokenTree] = []
    depth = 0
    for t in trees[i:]:
        if isinstance(t, Token) and t.kind == "punct":
            if t.text in ("<", "<<"):
                depth += len(t.text)
            elif t.text in (">", ">>"):
                depth -= len(t.text)
            elif t.text in ("=", ";") and depth <= 0:
                break
        out.append(t)
    return out


def _type_head_path(trees: list[TokenTree]) -> Optional[Path]:
    """Extract the head type path from type tokens (`&mut a::B<T>` -> a::B)."""
    segs: list[str] = []
    depth = 0
    for t in trees:
        if isinstance(t, Group):
            continue
        if t.kind == "punct":
            if t.text in ("<", "<<"):
                depth += len(t.text)
                if segs:
                    break
            elif t.text in (">", ">>"):
                depth -= len(t.text)
            elif t.text == "::":
                continue
            elif t.text in ("&", "*"):
                continue
            elif depth == 0 and segs:
                break
            continue
        if depth > 0:
            continue
        if t.kind == "lifetime":
            continue
        if t.kind == "ident":
            if t.text in ("mut", "const", "dyn", "impl", "ref"):
                continue
            segs.append(t.text)
    return tuple(segs) if segs else None
