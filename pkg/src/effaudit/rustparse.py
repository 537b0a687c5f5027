"""Structural Rust parser: balanced token trees and item-level grammar.

Only (), [], {} nest; generics are handled by angle-depth skipping over the
flat token stream. Expression bodies stay as token trees for the scanner's
pattern pass. Item-level macro invocations are not expanded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .rustlex import LexError, Token, lex

OPEN = {"(": ")", "[": "]", "{": "}"}
CLOSE = {v: k for k, v in OPEN.items()}


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{message} at {line}:{col}")
        self.line = line
        self.col = col


@dataclass
class Group:
    delim: str
    tokens: list["TokenTree"]
    line: int
    col: int
    end_line: int


TokenTree = Union[Token, Group]


def build_trees(tokens: list[Token]) -> list[TokenTree]:
    stack: list[Group] = []
    top: list[TokenTree] = []

    def sink() -> list[TokenTree]:
        return stack[-1].tokens if stack else top

    for tok in tokens:
        if tok.kind == "punct" and tok.text in OPEN:
            stack.append(Group(tok.text, [], tok.line, tok.col, tok.line))
        elif tok.kind == "punct" and tok.text in CLOSE:
            if not stack or OPEN[stack[-1].delim] != tok.text:
                raise ParseError(f"unbalanced '{tok.text}'", tok.line, tok.col)
            grp = stack.pop()
            grp.end_line = tok.line
            sink().append(grp)
        else:
            sink().append(tok)
    if stack:
        grp = stack[-1]
        raise ParseError(f"unclosed '{grp.delim}'", grp.line, grp.col)
    return top


def parse_file(text: str) -> list["Item"]:
    return parse_items(build_trees(lex(text)))


# ---------------------------------------------------------------------------
# Item model


@dataclass
class FnItem:
    name: str
    vis: str  # "pub" | "crate" | "private"
    is_unsafe: bool
    abi: Optional[str]  # extern fn ABI string, None otherwise
    signature: list[TokenTree]  # params group + return/where tokens
    body: Optional[Group]  # None for declarations
    line: int
    end_line: int

    @property
    def has_self_receiver(self) -> bool:
        params = next((t for t in self.signature if isinstance(t, Group) and t.delim == "("), None)
        if params is None:
            return False
        for t in params.tokens:
            if isinstance(t, Token) and t.is_punct(","):
                break
            if isinstance(t, Token) and t.is_ident("self"):
                return True
        return False


@dataclass
class StaticItem:
    name: str
    vis: str
    is_mut: bool
    line: int


@dataclass
class ForeignBlock:
    abi: str
    fns: list[FnItem]
    statics: list[StaticItem]
    line: int


@dataclass
class UseDecl:
    entries: list[tuple[str, tuple[str, ...]]]  # alias -> full path
    globs: list[tuple[str, ...]]
    vis: str
    line: int


@dataclass
class TypeDefItem:  # struct or enum; only the name matters downstream
    kw: str
    name: str
    vis: str
    line: int


@dataclass
class UnionItem:
    name: str
    vis: str
    fields: list[str]
    line: int


@dataclass
class TraitItem:
    name: str
    vis: str
    methods: list[FnItem]
    line: int
    end_line: int


@dataclass
class ImplItem:
    self_type: str  # last type-head identifier
    trait_path: Optional[tuple[str, ...]]
    fns: list[FnItem]
    line: int
    end_line: int


@dataclass
class ModItem:
    name: str
    vis: str
    inline: bool
    items: list["Item"] = field(default_factory=list)
    line: int = 0


Item = Union[
    FnItem, StaticItem, ForeignBlock, UseDecl, TypeDefItem,
    UnionItem, TraitItem, ImplItem, ModItem,
]


# ---------------------------------------------------------------------------
# Item parsing over token trees


class _Stream:
    def __init__(self, trees: list[TokenTree]) -> None:
        self.trees = trees
        self.i = 0

    def peek(self, offset: int = 0) -> Optional[TokenTree]:
        j = self.i + offset
        return self.trees[j] if j < len(self.trees) else None

    def next(self) -> Optional[TokenTree]:
        t = self.peek()
        self.i += 1
        return t

    def at_ident(self, *names: str) -> bool:
        t = self.peek()
        return isinstance(t, Token) and t.kind == "ident" and t.text in names

    def at_punct(self, text: str) -> bool:
        t = self.peek()
        return isinstance(t, Token) and t.is_punct(text)

    def skip_to_semi(self) -> None:
        while (t := self.next()) is not None:
            if isinstance(t, Token) and t.is_punct(";"):
                return

    def skip_angles(self) -> None:
        """Consume a generics section starting at `<`."""
        depth = 0
        while (t := self.peek()) is not None:
            if isinstance(t, Token) and t.kind == "punct":
                if t.text in ("<", "<<"):
                    depth += len(t.text)
                elif t.text in (">", ">>"):
                    depth -= len(t.text)
                elif t.text == ";" and depth <= 0:
                    return
            self.next()
            if depth <= 0:
                return


def _tree_line(t: TokenTree) -> int:
    return t.line


def parse_items(trees: list[TokenTree]) -> list[Item]:
    s = _Stream(trees)
    items: list[Item] = []
    while s.peek() is not None:
        item = _parse_one(s)
        if item is not None:
            items.append(item)
    return items


def parse_fn_at(
    trees: list[TokenTree], start: int, is_unsafe: bool = False
) -> tuple[Optional[FnItem], int]:
    """Parse a fn item at trees[start] (the `fn` keyword).

    Returns the item and the index just past it, for callers walking
    expression streams that contain nested named functions.
    """
    s = _Stream(trees)
    s.i = start
    line = trees[start].line
    fn = _parse_fn(s, "private", is_unsafe, None, line)
    return fn, s.i


def parse_use_at(trees: list[TokenTree], start: int) -> tuple[Optional[UseDecl], int]:
    """Parse a use declaration at trees[start] (the `use` keyword)."""
    s = _Stream(trees)
    s.i = start
    line = trees[start].line
    decl = _parse_use(s, "private", line)
    return decl, s.i


def _skip_attributes(s: _Stream) -> None:
    while s.at_punct("#"):
        nxt = s.peek(1)
        if isinstance(nxt, Group) and nxt.delim == "[":
            s.next(), s.next()
        elif isinstance(nxt, Token) and nxt.is_punct("!") and isinstance(s.peek(2), Group):
            s.next(), s.next(), s.next()
        else:
            return


def _parse_vis(s: _Stream) -> str:
    if not s.at_ident("pub"):
        return "private"
    s.next()
    nxt = s.peek()
    if isinstance(nxt, Group) and nxt.delim == "(":
        s.next()
        return "crate"  # pub(crate)/pub(super)/pub(in ...) are not cross-package
    return "pub"


def _parse_one(s: _Stream) -> Optional[Item]:
    _skip_attributes(s)
    if s.peek() is None:
        return None
    start = s.peek()
    start_line = _tree_line(start)
    vis = _parse_vis(s)

    is_unsafe = False
    abi: Optional[str] = None
    while True:
        if s.at_ident("unsafe"):
            s.next()
            is_unsafe = True
        elif s.at_ident("async", "default"):
            s.next()
        elif s.at_ident("const") and not _is_const_item(s):
            s.next()  # const fn
        elif s.at_ident("extern") and not _is_extern_block_or_crate(s):
            s.next()
            t = s.peek()
            abi = t.text if isinstance(t, Token) and t.kind == "str" else '"C"'
            if isinstance(t, Token) and t.kind == "str":
                s.next()
        else:
            break

    if s.at_ident("fn"):
        return _parse_fn(s, vis, is_unsafe, abi, start_line)
    if s.at_ident("mod"):
        return _parse_mod(s, vis, start_line)
    if s.at_ident("use"):
        return _parse_use(s, vis, start_line)
    if s.at_ident("static"):
        return _parse_static(s, vis, start_line)
    if s.at_ident("const"):
        s.next()
        s.skip_to_semi()
        return None
    if s.at_ident("extern"):
        return _parse_extern(s, start_line)
    if s.at_ident("struct", "enum"):
        return _parse_typedef(s, vis, start_line)
    if s.at_ident("union") and isinstance(s.peek(1), Token) and s.peek(1).kind == "ident":
        return _parse_union(s, vis, start_line)
    if s.at_ident("trait"):
        return _parse_trait(s, vis, start_line)
    if s.at_ident("auto") and _ident_at(s, 1) == "trait":
        s.next()
        return _parse_trait(s, vis, start_line)
    if s.at_ident("impl"):
        return _parse_impl(s, start_line)
    if s.at_ident("type"):
        s.next()
        s.skip_to_semi()
        return None
    if s.at_ident("macro_rules") or s.at_ident("macro"):
        s.next()
        while s.peek() is not None and not isinstance(s.peek(), Group):
            s.next()
        s.next()  # the definition body
        return None
    # Item-level macro invocation or unrecognized construct: skip one tree.
    s.next()
    return None


def _ident_at(s: _Stream, offset: int) -> Optional[str]:
    t = s.peek(offset)
    return t.text if isinstance(t, Token) and t.kind == "ident" else None


def _is_const_item(s: _Stream) -> bool:
    # `const NAME:` or `const _:` is an item; `const fn`/`const unsafe fn` is a modifier.
    nxt = _ident_at(s, 1)
    return nxt is not None and nxt not in ("fn", "unsafe", "async", "extern")


def _is_extern_block_or_crate(s: _Stream) -> bool:
    nxt = s.peek(1)
    if isinstance(nxt, Token) and nxt.is_ident("crate"):
        return True
    if isinstance(nxt, Group) and nxt.delim == "{":
        return True
    if isinstance(nxt, Token) and nxt.kind == "str":
        after = s.peek(2)
        return isinstance(after, Group) and after.delim == "{"
    return False


def _parse_fn(
    s: _Stream, vis: str, is_unsafe: bool, abi: Optional[str], start_line: int
) -> Optional[FnItem]:
    fn_tok = s.next()
    name_tok = s.next()
    if not isinstance(name_tok, Token) or name_tok.kind != "ident":
        return None
    if s.at_punct("<") or s.at_punct("<<"):
        s.skip_angles()
    signature: list[TokenTree] = []
    body: Optional[Group] = None
    end_line = fn_tok.line
    while (t := s.peek()) is not None:
        if isinstance(t, Group) and t.delim == "{":
            body = t
            end_line = t.end_line
            s.next()
            break
        if isinstance(t, Token) and t.is_punct(";"):
            end_line = t.line
            s.next()
            break
        signature.append(t)
        s.next()
    return FnItem(name_tok.text, vis, is_unsafe, abi, signature, body, start_line, end_line)


def _parse_mod(s: _Stream, vis: str, start_line: int) -> Optional[ModItem]:
    s.next()
    name_tok = s.next()
    if not isinstance(name_tok, Token) or name_tok.kind != "ident":
        return None
    t = s.peek()
    if isinstance(t, Group) and t.delim == "{":
        s.next()
        return ModItem(name_tok.text, vis, True, parse_items(t.tokens), start_line)
    s.skip_to_semi()
    return ModItem(name_tok.text, vis, False, [], start_line)


def _parse_static(s: _Stream, vis: str, start_line: int) -> Optional[StaticItem]:
    s.next()
    is_mut = False
    if s.at_ident("mut"):
        s.next()
        is_mut = True
    name_tok = s.next()
    s.skip_to_semi()
    if not isinstance(name_tok, Token) or name_tok.kind != "ident":
        return None
    return StaticItem(name_tok.text, vis, is_mut, start_line)


def _parse_extern(s: _Stream, start_line: int) -> Optional[Item]:
    s.next()
    t = s.peek()
    if isinstance(t, Token) and t.is_ident("crate"):
        s.next()
        crate_tok = s.next()
        alias = crate_tok.text if isinstance(crate_tok, Token) else ""
        target = alias
        if s.at_ident("as"):
            s.next()
            alias_tok = s.next()
            if isinstance(alias_tok, Token):
                alias = alias_tok.text
        s.skip_to_semi()
        if not target:
            return None
        return UseDecl([(alias, (target,))], [], "private", start_line)
    abi = '"C"'
    if isinstance(t, Token) and t.kind == "str":
        abi = t.text
        s.next()
        t = s.peek()
    if not (isinstance(t, Group) and t.delim == "{"):
        s.next()
        return None
    s.next()
    fns: list[FnItem] = []
    statics: list[StaticItem] = []
    inner = _Stream(t.tokens)
    while inner.peek() is not None:
        _skip_attributes(inner)
        vis = _parse_vis(inner)
        line = inner.peek().line if inner.peek() is not None else start_line
        if inner.at_ident("fn"):
            fn = _parse_fn(inner, vis, False, abi, line)
            if fn is not None:
                fns.append(fn)
        elif inner.at_ident("static"):
            st = _parse_static(inner, vis, line)
            if st is not None:
                statics.append(st)
        else:
            inner.next()
    return ForeignBlock(abi, fns, statics, start_line)


def _parse_typedef(s: _Stream, vis: str, start_line: int) -> Optional[TypeDefItem]:
    kw_tok = s.next()
    name_tok = s.next()
    if not isinstance(name_tok, Token) or name_tok.kind != "ident":
        return None
    if s.at_punct("<") or s.at_punct("<<"):
        s.skip_angles()
    # unit struct `;`, tuple struct `(..);`, or braced body
    while (t := s.peek()) is not None:
        if isinstance(t, Group) and t.delim == "{":
            s.next()
            break
        if isinstance(t, Token) and t.is_punct(";"):
            s.next()
            break
        s.next()
    return TypeDefItem(kw_tok.text, name_tok.text, vis, start_line)


def _parse_union(s: _Stream, vis: str, start_line: int) -> Optional[UnionItem]:
    s.next()
    name_tok = s.next()
    if s.at_punct("<") or s.at_punct("<<"):
        s.skip_angles()
    body = s.peek()
    fields: list[str] = []
    if isinstance(body, Group) and body.delim == "{":
        s.next()
        # field grammar: name ':' type ','
        expecting_name = True
        depth_guard = _Stream(body.tokens)
        while (t := depth_guard.next()) is not None:
            if isinstance(t, Token) and t.kind == "ident" and expecting_name:
                if t.text == "pub":
                    continue
                nxt = depth_guard.peek()
                if isinstance(nxt, Token) and nxt.is_punct(":"):
                    fields.append(t.text)
                    expecting_name = False
            elif isinstance(t, Token) and t.is_punct(","):
                expecting_name = True
    if not isinstance(name_tok, Token):
        return None
    return UnionItem(name_tok.text, vis, fields, start_line)


def _parse_trait(s: _Stream, vis: str, start_line: int) -> Optional[TraitItem]:
    s.next()
    name_tok = s.next()
    if not isinstance(name_tok, Token) or name_tok.kind != "ident":
        return None
    body: Optional[Group] = None
    end_line = start_line
    while (t := s.peek()) is not None:
        if isinstance(t, Group) and t.delim == "{":
            body = t
            end_line = t.end_line
            s.next()
            break
        if isinstance(t, Token) and t.is_punct(";"):
            s.next()
            break
        if isinstance(t, Token) and t.text in ("<", "<<"):
            s.skip_angles()
            continue
        s.next()
    methods: list[FnItem] = []
    if body is not None:
        for item in parse_items(body.tokens):
            if isinstance(item, FnItem):
                methods.append(item)
    return TraitItem(name_tok.text, vis, methods, start_line, end_line)


def _parse_impl(s: _Stream, start_line: int) -> Optional[ImplItem]:
    s.next()
    if s.at_punct("<") or s.at_punct("<<"):
        s.skip_angles()
    head: list[TokenTree] = []
    body: Optional[Group] = None
    end_line = start_line
    while (t := s.peek()) is not None:
        if isinstance(t, Group) and t.delim == "{":
            body = t
            end_line = t.end_line
            s.next()
            break
        if isinstance(t, Token) and t.is_ident("where"):
            s.next()
            continue
        head.append(t)
        s.next()
    trait_path: Optional[tuple[str, ...]] = None
    depth = 0
    for idx, t in enumerate(head):
        if isinstance(t, Token) and t.kind == "punct":
            if t.text in ("<", "<<"):
                depth += len(t.text)
            elif t.text in (">", ">>"):
                depth -= len(t.text)
        if isinstance(t, Token) and t.is_ident("for") and depth == 0:
            trait_path = _head_path(head[:idx])
            head = head[idx + 1 :]
            break
    self_type = _head_type_name(head)
    fns: list[FnItem] = []
    if body is not None:
        for item in parse_items(body.tokens):
            if isinstance(item, FnItem):
                fns.append(item)
    if self_type is None:
        return None
    return ImplItem(self_type, trait_path, fns, start_line, end_line)


def _head_path(trees: list[TokenTree]) -> Optional[tuple[str, ...]]:
    segs: list[str] = []
    for t in trees:
        if isinstance(t, Token) and t.kind == "ident":
            if t.text in ("dyn", "mut", "const"):
                continue
            segs.append(t.text)
        elif isinstance(t, Token) and t.is_punct("::"):
            continue
        elif isinstance(t, Token) and t.text in ("<", "<<"):
            break
    return tuple(segs) if segs else None


def _head_type_name(trees: list[TokenTree]) -> Optional[str]:
    """Last identifier of the type head before any generic arguments."""
    name: Optional[str] = None
    depth = 0
    for t in trees:
        if isinstance(t, Token) and t.kind == "punct":
            if t.text in ("<", "<<"):
                depth += len(t.text)
            elif t.text in (">", ">>"):
                depth -= len(t.text)
        elif isinstance(t, Token) and t.kind == "ident" and depth == 0:
            if t.text not in ("dyn", "mut", "const", "where"):
                name = t.text
    return name


def _parse_use(s: _Stream, vis: str, start_line: int) -> Optional[UseDecl]:
    s.next()
    entries: list[tuple[str, tuple[str, ...]]] = []
    globs: list[tuple[str, ...]] = []
    tree_tokens: list[TokenTree] = []
    while (t := s.peek()) is not None:
        if isinstance(t, Token) and t.is_punct(";"):
            s.next()
            break
        tree_tokens.append(t)
        s.next()
    e, g = _use_tree(_Stream(tree_tokens), ())
    entries.extend(e)
    globs.extend(g)
    return UseDecl(entries, globs, vis, start_line)


def _use_tree(
    s: _Stream, base: tuple[str, ...]
) -> tuple[list[tuple[str, tuple[str, ...]]], list[tuple[str, ...]]]:
    entries: list[tuple[str, tuple[str, ...]]] = []
    globs: list[tuple[str, ...]] = []
    path = list(base)
    while (t := s.peek()) is not None:
        if isinstance(t, Token) and t.kind == "ident":
            path.append(t.text)
            s.next()
            nxt = s.peek()
            if isinstance(nxt, Token) and nxt.is_punct("::"):
                s.next()
                continue
            if isinstance(nxt, Token) and nxt.is_ident("as"):
                s.next()
                alias_tok = s.next()
                if isinstance(alias_tok, Token):
                    entries.append((alias_tok.text, tuple(path)))
                path = list(base)
                continue
            # leaf
            if path:
                if path[-1] == "self" and len(path) > 1:
                    entries.append((path[-2], tuple(path[:-1])))
                else:
                    entries.append((path[-1], tuple(path)))
            path = list(base)
            continue
        if isinstance(t, Token) and t.is_punct("*"):
            s.next()
            if path:
                globs.append(tuple(path))
            path = list(base)
            continue
        if isinstance(t, Group) and t.delim == "{":
            s.next()
            e, g = _use_tree(_Stream(t.tokens), tuple(path))
            entries.extend(e)
            globs.extend(g)
            path = list(base)
            continue
        if isinstance(t, Token) and t.is_punct(","):
            s.next()
            path = list(base)
            continue
        s.next()
    return entries, globs
