"""Print merged trees back to text.

Every node prints the exact text of its span in the revision it came from.
The gap between two siblings is copied from a revision in which they were
already neighbours; failing that, from the gap before the node (or after
its predecessor) in its own revision; failing that, a single space.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Optional, Union

from .cst import Node, Origin, Tree
from .merge import Conflict, ConflictNode, MergedNode, MergedTree, wrap

if TYPE_CHECKING:
    from .langconfig import LanguageProfile

BASE, LEFT, RIGHT = Origin.BASE, Origin.LEFT, Origin.RIGHT
_WORD = re.compile(r"\w")


class RenderError(Exception):
    pass


@dataclass(frozen=True)
class RenderOptions:
    marker_size: int = 7
    base_label: str = "base"
    left_label: str = "left"
    right_label: str = "right"
    show_base_in_conflicts: bool = True

    def __post_init__(self):
        if self.marker_size < 3:
            raise ValueError("marker_size must be at least 3")


def newline_of(text: str) -> str:
    return "\r\n" if "\r\n" in text else "\n"


class _Renderer:
    def __init__(self, trees: Mapping[Origin, Tree], opts: RenderOptions, newline: str = "\n"):
        self.trees = trees
        self.opts = opts
        self.newline = newline
        self.out: list[str] = []
        self.after_conflict = False
        self.indent = ""
        self.blocks = 0
        self._empty: dict[int, bool] = {}

    # helpers -------------------------------------------------------------

    def source(self, origin: Origin) -> str:
        try:
            return self.trees[origin].source
        except KeyError:
            raise RenderError(f"no source supplied for {origin.value} revision") from None

    def is_empty(self, item) -> bool:
        if isinstance(item, ConflictNode):
            return False
        key = id(item)
        cached = self._empty.get(key)
        if cached is None:
            inst = item.node
            if item.is_terminal or not item.children:
                cached = inst.span.width == 0 and not item.children
            else:
                cached = (not self._leading(item) and not self._trailing(item)
                          and all(self.is_empty(c) for c in item.children))
            self._empty[key] = cached
        return cached

    def _leading(self, m: MergedNode) -> str:
        inst = m.node
        src = self.source(m.primary)
        if inst.children:
            return src[inst.span.start:inst.children[0].span.start]
        return src[inst.span.start:inst.span.end]

    def _trailing(self, m: MergedNode) -> str:
        inst = m.node
        if not inst.children:
            return ""
        return self.source(m.primary)[inst.children[-1].span.end:inst.span.end]

    def _edge_instances(self, item, last: bool) -> dict[Origin, Node]:
        if isinstance(item, MergedNode):
            return item.instances
        c = item.conflict
        out = {}
        for origin, part in ((LEFT, c.left_part), (RIGHT, c.right_part), (BASE, c.base_part)):
            if part:
                out[origin] = part[-1] if last else part[0]
        return out

    def _siblings(self, origin: Origin, node: Node):
        entry = self.trees[origin].parents.get(node.node_id) if origin in self.trees else None
        if entry is None or entry[0].children[entry[1]] is not node:
            return None
        return entry

    def _consecutive(self, origin: Origin, a: Node, b: Node) -> bool:
        ea, eb = self._siblings(origin, a), self._siblings(origin, b)
        if ea is None or eb is None or ea[0] is not eb[0] or eb[1] <= ea[1]:
            return False
        between = ea[0].children[ea[1] + 1:eb[1]]
        return all(n.span.width == 0 for n in between)

    def _neighbour(self, origin: Origin, node: Node, step: int) -> Optional[Node]:
        entry = self._siblings(origin, node)
        if entry is None:
            return None
        parent, i = entry
        i += step
        while 0 <= i < len(parent.children):
            if parent.children[i].span.width:
                return parent.children[i]
            i += step
        return None

    def separator(self, prev, cur) -> str:
        pi = self._edge_instances(prev, last=True)
        ci = self._edge_instances(cur, last=False)
        order = []
        for o in (getattr(cur, "primary", None), getattr(prev, "primary", None), LEFT, RIGHT, BASE):
            if o is not None and o not in order:
                order.append(o)
        for o in order:
            a, b = pi.get(o), ci.get(o)
            if a is None or b is None or a.span.width == 0:
                continue
            if self._consecutive(o, a, b):
                return self.source(o)[a.span.end:b.span.start]
        for o in order:
            b = ci.get(o)
            if b is None:
                continue
            before = self._neighbour(o, b, -1)
            if before is not None:
                return self.source(o)[before.span.end:b.span.start]
        for o in order:
            a = pi.get(o)
            if a is None or a.span.width == 0:
                continue
            after = self._neighbour(o, a, +1)
            if after is not None:
                return self.source(o)[a.span.end:after.span.start]
        return " "

    # output --------------------------------------------------------------

    def emit_gap(self, text: str) -> None:
        if not text:
            return
        if self.after_conflict:
            self.after_conflict = False
            nl = text.find("\n")
            text = text[nl + 1:] if nl >= 0 else self.indent
        self.out.append(text)

    def emit_text(self, text: str) -> None:
        if not text:
            return
        if self.after_conflict:
            self.after_conflict = False
            self.out.append(self.indent)
        self.out.append(text)

    def _last_char(self, upto: int) -> str:
        for piece in reversed(self.out[:upto]):
            if piece:
                return piece[-1]
        return ""

    def _first_char(self, start: int) -> str:
        for piece in self.out[start:]:
            if piece:
                return piece[0]
        return ""

    def render(self, item) -> None:
        if isinstance(item, ConflictNode):
            self.render_conflict(item.conflict)
            return
        if item.is_terminal:
            inst = item.node
            self.emit_text(inst.text(self.source(item.primary)))
            return
        self.emit_gap(self._leading(item))
        prev = None
        for child in item.children:
            if self.is_empty(child):
                continue
            if prev is not None:
                sep = self.separator(prev, child)
                mark, blocks = len(self.out), self.blocks
                self.emit_gap(sep)
                self.render(child)
                # keep adjacent words apart when no original gap was found
                if sep == "" and blocks == self.blocks:
                    if _WORD.match(self._last_char(mark)) and _WORD.match(self._first_char(mark)):
                        self.out.insert(mark, " ")
            else:
                self.render(child)
            prev = child
        self.emit_gap(self._trailing(item))

    def render_nodes(self, nodes: list[Node], origin: Origin) -> str:
        sub = _Renderer(self.trees, self.opts, self.newline)
        sub.render(MergedNode(
            kind="#part", value=None, identifier=None, unordered=False,
            children=[wrap(n, origin) for n in nodes],
            instances={origin: _PartHolder.of(nodes)}, primary=origin,
        ))
        return "".join(sub.out)

    def render_conflict(self, conflict: Conflict) -> None:
        text = "".join(self.out)
        cut = text.rfind("\n") + 1
        line = text[cut:]
        if line.strip():
            indent = line[:len(line) - len(line.lstrip())]
            text = text.rstrip(" \t") + self.newline
        else:
            indent = line
            text = text[:cut]
        self.out = [text]
        nl = self.newline
        n = self.opts.marker_size

        def block(nodes, origin):
            if not nodes:
                return ""
            body = indent + self.render_nodes(nodes, origin)
            return body if body.endswith("\n") else body + nl

        parts = ["<" * n + " " + self.opts.left_label + nl, block(conflict.left_part, LEFT)]
        if self.opts.show_base_in_conflicts:
            parts += ["|" * n + " " + self.opts.base_label + nl, block(conflict.base_part, BASE)]
        parts += ["=" * n + nl, block(conflict.right_part, RIGHT), ">" * n + " " + self.opts.right_label + nl]
        self.out.extend(parts)
        self.indent = indent
        self.after_conflict = True
        self.blocks += 1


class _PartHolder:
    """Stand-in parent instance spanning a run of sibling nodes."""

    @staticmethod
    def of(nodes: list[Node]) -> Node:
        from .cst import Span

        if nodes:
            span = Span(nodes[0].span.start, nodes[-1].span.end)
        else:
            span = Span(0, 0)
        return Node(kind="#part", span=span, children=tuple(nodes))


def render(
    merged: Union[MergedTree, MergedNode],
    sources: Optional[Mapping[Origin, Tree]] = None,
    opts: RenderOptions = RenderOptions(),
) -> str:
    if isinstance(merged, MergedTree):
        trees = sources if sources is not None else merged.revisions
        root = merged.root
    else:
        trees = sources or {}
        root = merged
    nl = newline_of(trees[BASE].source) if BASE in trees else "\n"
    r = _Renderer(trees, opts, nl)
    r.render(root)
    return "".join(r.out)


def render_tree(tree: Tree) -> str:
    """Print an unmerged tree; equals ``tree.source`` for parsed trees."""
    return render(wrap(tree.root, tree.origin), {tree.origin: tree})


# canonical printing ------------------------------------------------------


def canonical_print(tree: Tree, profile: "LanguageProfile") -> str:
    from .parser import BACKENDS

    tokenize = BACKENDS[profile.backend].tokenize
    lines: list[str] = []
    current: list[str] = []
    depth = 0

    def flush():
        if current:
            lines.append("  " * depth + " ".join(current))
            current.clear()

    for leaf in tree.root.terminals():
        toks = tokenize(leaf.value)
        if not toks:
            continue
        if toks[0] == "}" and len(toks) == 1:
            flush()
            depth = max(depth - 1, 0)
        current.extend(toks)
        if toks[-1] == "{" and len(toks) == 1:
            flush()
            depth += 1
        elif toks[-1] in (";", "}"):
            flush()
    flush()
    return "".join(line + "\n" for line in lines)


def normalize(text: str, profile: "LanguageProfile") -> str:
    from .parser import parse

    return canonical_print(parse(text, profile), profile)
