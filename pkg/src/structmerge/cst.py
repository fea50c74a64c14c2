"""Generic concrete syntax tree shared by the parser, matcher and merger."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterator, Optional


class Origin(enum.Enum):
    BASE = "base"
    LEFT = "left"
    RIGHT = "right"
    SYNTHETIC = "synthetic"


class IdentifierCollisionError(ValueError):
    """Two siblings were given the same identifier."""

    def __init__(self, identifier: str, first: "Span", second: "Span"):
        self.identifier = identifier
        self.first = first
        self.second = second
        super().__init__(
            f"identifier {identifier!r} assigned twice among siblings: "
            f"{first} and {second}"
        )


@dataclass(frozen=True)
class Span:
    """Half-open character range ``[start, end)`` into the source text.

    Offsets index the decoded ``str``; lines and columns are 1-based.
    """

    start: int
    end: int
    start_line: int = 1
    start_col: int = 1
    end_line: int = 1
    end_col: int = 1

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"invalid span {self.start}..{self.end}")

    def __str__(self):
        return f"{self.start_line}:{self.start_col}-{self.end_line}:{self.end_col}"

    @property
    def width(self) -> int:
        return self.end - self.start


def span_from_offsets(text: str, start: int, end: int) -> Span:
    sl = text.count("\n", 0, start) + 1
    sc = start - (text.rfind("\n", 0, start) + 1) + 1
    el = sl + text.count("\n", start, end)
    ec = end - (text.rfind("\n", 0, end) + 1) + 1
    return Span(start, end, sl, sc, el, ec)


@dataclass(frozen=True, eq=False)
class Node:
    """A Terminal (``value`` set, no children) or NonTerminal node.

    Nodes are immutable; every transformation builds new nodes.  Equality
    is identity; use :func:`deep_equal` for structural comparison.
    """

    kind: str
    span: Span
    value: Optional[str] = None
    children: tuple["Node", ...] = ()
    unordered: bool = False
    identifier: Optional[str] = None
    node_id: int = -1
    origin: Origin = Origin.BASE

    def __post_init__(self):
        if self.value is not None:
            if self.children:
                raise ValueError(f"terminal {self.kind!r} cannot have children")
            if self.unordered:
                raise ValueError(f"terminal {self.kind!r} cannot be unordered")

    @property
    def is_terminal(self) -> bool:
        return self.value is not None

    @property
    def is_anonymous(self) -> bool:
        """Keyword or punctuation leaf whose kind is its own text."""
        return self.value is not None and self.kind == self.value

    @cached_property
    def size(self) -> int:
        return 1 + sum(c.size for c in self.children)

    @cached_property
    def digest(self) -> int:
        h = hashlib.blake2b(digest_size=8)
        h.update(b"T" if self.is_terminal else (b"U" if self.unordered else b"N"))
        for part in (self.kind, self.identifier, self.value):
            if part is None:
                h.update(b"\x00")
            else:
                encoded = part.encode("utf-8")
                h.update(len(encoded).to_bytes(4, "little"))
                h.update(encoded)
        h.update(len(self.children).to_bytes(4, "little"))
        for child in self.children:
            h.update(child.digest.to_bytes(8, "little"))
        return int.from_bytes(h.digest(), "little")

    def walk(self) -> Iterator["Node"]:
        """Pre-order traversal."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def terminals(self) -> Iterator["Node"]:
        return (n for n in self.walk() if n.is_terminal)

    def text(self, source: str) -> str:
        return source[self.span.start:self.span.end]


@dataclass(frozen=True, eq=False)
class Tree:
    root: Node
    source: str
    language: str = "minilang"
    origin: Origin = Origin.BASE

    @cached_property
    def parents(self) -> dict[int, tuple[Node, int]]:
        """Map node_id to ``(parent, index_in_parent)``."""
        out = {}
        for node in self.root.walk():
            for i, child in enumerate(node.children):
                out[child.node_id] = (node, i)
        return out


def subtree_size(node: Node) -> int:
    return node.size


def structural_hash(node: Node) -> int:
    """64-bit digest over kind, arity, identifier, value and children."""
    return node.digest


def deep_equal(a: Node, b: Node) -> bool:
    if a is b:
        return True
    if a.digest != b.digest:
        return False
    return _deep_equal(a, b)


def _deep_equal(a: Node, b: Node) -> bool:
    if (
        a.kind != b.kind
        or a.is_terminal != b.is_terminal
        or a.value != b.value
        or a.identifier != b.identifier
        or a.unordered != b.unordered
        or len(a.children) != len(b.children)
    ):
        return False
    return all(_deep_equal(x, y) for x, y in zip(a.children, b.children))


def check_unique_identifiers(node: Node) -> None:
    seen: dict[str, Node] = {}
    for child in node.children:
        if child.identifier is None:
            continue
        other = seen.get(child.identifier)
        if other is not None:
            raise IdentifierCollisionError(child.identifier, other.span, child.span)
        seen[child.identifier] = child


def renumber(root: Node, origin: Origin | None = None) -> Node:
    """Rebuild ``root`` with pre-order node ids starting at 0."""
    counter = iter(range(1 << 62))

    def go(node: Node) -> Node:
        nid = next(counter)
        children = tuple(go(c) for c in node.children)
        changes = {"node_id": nid, "children": children}
        if origin is not None:
            changes["origin"] = origin
        return replace(node, **changes)

    return go(root)


def dump(node: Node) -> str:
    """S-expression debug form: ``(kind[:identifier] child...)``."""
    if node.is_terminal:
        return _quote(node.value)
    head = node.kind if node.identifier is None else f"{node.kind}:{node.identifier}"
    if not node.children:
        return f"({head})"
    return "(" + head + " " + " ".join(dump(c) for c in node.children) + ")"


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def make_terminal(kind: str, value: str, span: Span, **kw) -> Node:
    return Node(kind=kind, span=span, value=value, **kw)


def make_nonterminal(kind: str, children, span: Span, **kw) -> Node:
    return Node(kind=kind, span=span, children=tuple(children), **kw)


__all__ = [
    "Origin",
    "Span",
    "Node",
    "Tree",
    "IdentifierCollisionError",
    "span_from_offsets",
    "subtree_size",
    "structural_hash",
    "deep_equal",
    "check_unique_identifiers",
    "renumber",
    "dump",
    "make_terminal",
    "make_nonterminal",
]
