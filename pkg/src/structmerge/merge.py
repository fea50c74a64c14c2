"""Three-way amalgamation of matched trees.

The merge walks the base tree depth-first together with its left and right
counterparts.  Ordered children are merged diff3-style around anchors
(base children matched on both sides); unordered children are unioned.
Deletions that one side accepted silently are collected while walking and
re-checked in a final pass (see :attr:`MergeOptions.strict_delete_edit`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .cst import Node, Origin, Span, Tree, deep_equal, renumber
from .matching import MatchingStore, compute_matchings

BASE, LEFT, RIGHT = Origin.BASE, Origin.LEFT, Origin.RIGHT


class MergeError(Exception):
    pass


@dataclass(frozen=True)
class MergeOptions:
    strict_delete_edit: bool = True
    resolve_by_reorder: bool = True


class ConflictClass(str, enum.Enum):
    INSERT_INSERT = "InsertInsert"
    MODIFY_MODIFY = "ModifyModify"
    MODIFY_DELETE = "ModifyDelete"
    DELETE_EDIT = "DeleteEdit"

    def __str__(self):
        return self.value


@dataclass
class Conflict:
    kind: ConflictClass
    base_part: list[Node]
    left_part: list[Node]
    right_part: list[Node]
    location: Span

    @property
    def base_node(self) -> Optional[Node]:
        return self.base_part[0] if self.base_part else None

    def summary(self) -> str:
        def side(nodes):
            if not nodes:
                return "<deleted>"
            text = " ".join(_summary_text(n) for n in nodes)
            return text if len(text) <= 40 else text[:37] + "..."

        return f"left: {side(self.left_part)} | right: {side(self.right_part)}"


def _summary_text(node: Node) -> str:
    if node.identifier:
        return f"{node.kind} {node.identifier}"
    if node.is_terminal:
        return node.value
    return node.kind


@dataclass(eq=False)
class MergedNode:
    """A node of the merged tree.

    ``instances`` holds the revision nodes this node stands for; the
    ``primary`` one supplies text for Terminals and outer trivia.
    """

    kind: str
    value: Optional[str]
    identifier: Optional[str]
    unordered: bool
    children: list[Union["MergedNode", "ConflictNode"]]
    instances: dict[Origin, Node]
    primary: Origin

    @property
    def is_terminal(self) -> bool:
        return self.value is not None

    @property
    def node(self) -> Node:
        return self.instances[self.primary]

    def as_node(self) -> Node:
        """Plain :class:`Node` copy; fails if a conflict is embedded."""

        def go(m: MergedNode) -> Node:
            if isinstance(m, ConflictNode):
                raise MergeError("merged tree contains conflicts")
            inst = m.node
            return Node(
                kind=m.kind,
                span=inst.span,
                value=m.value,
                children=tuple(go(c) for c in m.children),
                unordered=m.unordered,
                identifier=m.identifier,
                origin=m.primary,
            )

        return renumber(go(self))


@dataclass(eq=False)
class ConflictNode:
    conflict: Conflict


@dataclass(eq=False)
class _Deletion:
    """A deletion accepted while walking, re-checked after reconstruction."""

    base_part: list[Node]
    survivor: list[Node]
    deleter: Origin
    location: Span


@dataclass
class MergedTree:
    root: MergedNode
    conflicts: list[Conflict]
    revisions: dict[Origin, Tree] = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return not self.conflicts


def wrap(node: Node, origin: Origin, instances: Optional[dict[Origin, Node]] = None) -> MergedNode:
    """MergedNode view of an unmodified revision subtree."""
    return MergedNode(
        kind=node.kind,
        value=node.value,
        identifier=node.identifier,
        unordered=node.unordered,
        children=[wrap(c, origin) for c in node.children],
        instances=instances or {origin: node},
        primary=origin,
    )


def seq_equal(xs: Sequence[Node], ys: Sequence[Node]) -> bool:
    return len(xs) == len(ys) and all(deep_equal(x, y) for x, y in zip(xs, ys))


def edit_only(base: Node, other: Node, store: MatchingStore) -> bool:
    """True when ``other`` differs from ``base`` only by in-place leaf edits:
    every changed position swaps one Terminal for another of the same kind,
    with no child inserted or removed anywhere in the subtree."""
    if deep_equal(base, other):
        return True
    if base.is_terminal or other.is_terminal:
        return base.is_terminal and other.is_terminal and base.kind == other.kind
    if store.match(base, other) == 0:
        return False
    pairs = store.alignment(base, other)
    for i, j in pairs:
        if not edit_only(base.children[i], other.children[j], store):
            return False
    if base.unordered and other.unordered:
        left_b = sorted(c.kind for k, c in enumerate(base.children) if k not in {i for i, _ in pairs} and c.is_terminal)
        left_o = sorted(c.kind for k, c in enumerate(other.children) if k not in {j for _, j in pairs} and c.is_terminal)
        n_b = len(base.children) - len(pairs)
        n_o = len(other.children) - len(pairs)
        return left_b == left_o and len(left_b) == n_b and len(left_o) == n_o
    pb = po = 0
    for i, j in list(pairs) + [(len(base.children), len(other.children))]:
        if not _leaf_swap(base.children[pb:i], other.children[po:j]):
            return False
        pb, po = i + 1, j + 1
    return True


def _leaf_swap(xs: Sequence[Node], ys: Sequence[Node]) -> bool:
    return len(xs) == len(ys) and all(
        x.is_terminal and y.is_terminal and x.kind == y.kind for x, y in zip(xs, ys)
    )


def seq_edit_only(xs: Sequence[Node], ys: Sequence[Node], store: MatchingStore) -> bool:
    return len(xs) == len(ys) and all(edit_only(x, y, store) for x, y in zip(xs, ys))


class _Merger:
    def __init__(self, stores, opts: MergeOptions):
        self.bl, self.br, self.lr = stores
        self.opts = opts

    # node level ----------------------------------------------------------

    def merge_node(self, b: Node, l: Node, r: Node):
        instances = {BASE: b, LEFT: l, RIGHT: r}
        same_l = deep_equal(l, b)
        same_r = deep_equal(r, b)
        if b.is_terminal and not (same_l and same_r):
            if l.value == r.value:
                return wrap(l, LEFT, instances)
            if l.value == b.value:
                return wrap(r, RIGHT, instances)
            if r.value == b.value:
                return wrap(l, LEFT, instances)
            return ConflictNode(Conflict(ConflictClass.MODIFY_MODIFY, [b], [l], [r], b.span))
        if same_l and same_r:
            return wrap(*self._pick_text(b, l, r), instances)
        if same_l:
            return wrap(r, RIGHT, instances)
        if same_r or deep_equal(l, r):
            return wrap(l, LEFT, instances)
        if b.unordered and l.unordered and r.unordered and self.opts.resolve_by_reorder:
            children = self.merge_children_unordered(b, l, r)
        else:
            children = self.merge_children_ordered(b, l, r)
        return MergedNode(
            kind=b.kind,
            value=None,
            identifier=b.identifier,
            unordered=b.unordered,
            children=children,
            instances=instances,
            primary=BASE,
        )

    def _pick_text(self, b: Node, l: Node, r: Node):
        """Structurally equal triple: keep whichever side changed formatting."""
        tb, tl, tr = (self.texts[o](n) for o, n in ((BASE, b), (LEFT, l), (RIGHT, r)))
        if tl == tr or tl != tb:
            return l, LEFT
        return r, RIGHT

    # ordered -------------------------------------------------------------

    def merge_children_ordered(self, b: Node, l: Node, r: Node):
        bl = dict(self.bl.alignment(b, l))
        br = dict(self.br.alignment(b, r))
        anchors = []
        last_l = last_r = -1
        for i in range(len(b.children)):
            jl, jr = bl.get(i), br.get(i)
            if jl is not None and jr is not None and jl > last_l and jr > last_r:
                anchors.append((i, jl, jr))
                last_l, last_r = jl, jr
        out = []
        pb = pl = pr = 0
        end = (len(b.children), len(l.children), len(r.children))
        for i, jl, jr in anchors + [end]:
            out.extend(
                self.resolve_region(
                    b.children[pb:i], l.children[pl:jl], r.children[pr:jr], b
                )
            )
            if (i, jl, jr) == end:
                break
            out.append(self.merge_node(b.children[i], l.children[jl], r.children[jr]))
            pb, pl, pr = i + 1, jl + 1, jr + 1
        return out

    def resolve_region(self, bseg, lseg, rseg, parent: Node):
        if not (bseg or lseg or rseg):
            return []
        if seq_equal(lseg, bseg):
            if bseg and not rseg:
                return [_Deletion(list(bseg), list(lseg), RIGHT, bseg[0].span)]
            return [wrap(n, RIGHT) for n in rseg]
        if seq_equal(rseg, bseg):
            if bseg and not lseg:
                return [_Deletion(list(bseg), list(rseg), LEFT, bseg[0].span)]
            return [wrap(n, LEFT) for n in lseg]
        if seq_equal(lseg, rseg):
            return [wrap(x, LEFT, {LEFT: x, RIGHT: y}) for x, y in zip(lseg, rseg)]
        if not bseg:
            return [ConflictNode(Conflict(ConflictClass.INSERT_INSERT, [], list(lseg), list(rseg), _insert_location(parent, lseg, rseg)))]
        if not lseg or not rseg:
            deleter = LEFT if not lseg else RIGHT
            survivor = rseg if deleter is LEFT else lseg
            store = self.br if deleter is LEFT else self.bl
            if seq_edit_only(bseg, survivor, store):
                return [_Deletion(list(bseg), list(survivor), deleter, bseg[0].span)]
            return [ConflictNode(Conflict(ConflictClass.MODIFY_DELETE, list(bseg), list(lseg), list(rseg), bseg[0].span))]
        return [ConflictNode(Conflict(ConflictClass.MODIFY_MODIFY, list(bseg), list(lseg), list(rseg), bseg[0].span))]

    # unordered -----------------------------------------------------------

    def merge_children_unordered(self, b: Node, l: Node, r: Node):
        bl = dict(self.bl.alignment(b, l))
        br = dict(self.br.alignment(b, r))
        lb = {j: i for i, j in bl.items()}
        rb = {k: i for i, k in br.items()}
        lr = dict(self.lr.alignment(l, r))
        rl = {k: j for j, k in lr.items()}
        used_l: set[int] = set()
        used_r: set[int] = set()

        tail = len(b.children)
        while tail > 0 and b.children[tail - 1].is_anonymous:
            tail -= 1

        def base_child(i: int):
            bc = b.children[i]
            j, k = bl.get(i), br.get(i)
            if j is not None and j in used_l:
                j = None
            if k is not None and k in used_r:
                k = None
            if j is not None and k is not None:
                used_l.add(j)
                used_r.add(k)
                return [self.merge_node(bc, l.children[j], r.children[k])]
            if j is None and k is None:
                # deleted on both sides, or already merged through a partner
                return []
            if j is not None:
                used_l.add(j)
                partner = lr.get(j)
                if self._free_partner(partner, used_r, rb, bl):
                    used_r.add(partner)
                    return [self.merge_node(bc, l.children[j], r.children[partner])]
                return self._one_sided_delete(bc, l.children[j], RIGHT)
            used_r.add(k)
            partner = rl.get(k)
            if self._free_partner(partner, used_l, lb, br):
                used_l.add(partner)
                return [self.merge_node(bc, l.children[partner], r.children[k])]
            return self._one_sided_delete(bc, r.children[k], LEFT)

        out = []
        for i in range(tail):
            out.extend(base_child(i))

        right_pending = []
        for j, lc in enumerate(l.children):
            if j in used_l or j in lb:
                continue
            k = lr.get(j)
            if k is not None and k not in used_r and k not in rb:
                rc = r.children[k]
                if deep_equal(lc, rc):
                    used_r.add(k)
                    out.append(wrap(lc, LEFT, {LEFT: lc, RIGHT: rc}))
                    continue
                if lc.identifier is not None and lc.identifier == rc.identifier:
                    used_r.add(k)
                    out.append(ConflictNode(Conflict(ConflictClass.INSERT_INSERT, [], [lc], [rc], _insert_location(b, [lc], [rc]))))
                    continue
            out.append(wrap(lc, LEFT))
        for k, rc in enumerate(r.children):
            if k in used_r or k in rb:
                continue
            right_pending.append(wrap(rc, RIGHT))
        out.extend(right_pending)

        for i in range(tail, len(b.children)):
            out.extend(base_child(i))
        return out

    @staticmethod
    def _free_partner(partner, used, partner_base, base_side) -> bool:
        """The other side's counterpart found through the left/right matching
        may stand in for a deleted node unless it is already taken or its
        own base node survives on this side."""
        if partner is None or partner in used:
            return False
        i = partner_base.get(partner)
        return i is None or i not in base_side

    def _one_sided_delete(self, bc: Node, survivor: Node, deleter: Origin):
        store = self.bl if deleter is RIGHT else self.br
        if edit_only(bc, survivor, store):
            return [_Deletion([bc], [survivor], deleter, bc.span)]
        left, right = ([survivor], []) if deleter is RIGHT else ([], [survivor])
        return [ConflictNode(Conflict(ConflictClass.MODIFY_DELETE, [bc], left, right, bc.span))]

    # post-pass -----------------------------------------------------------

    def finalize(self, node, conflicts: list[Conflict]):
        if isinstance(node, ConflictNode):
            conflicts.append(node.conflict)
            return node
        if node.is_terminal:
            return node
        children = []
        for child in node.children:
            if isinstance(child, _Deletion):
                if self.opts.strict_delete_edit and not seq_equal(child.survivor, child.base_part):
                    left, right = (child.survivor, []) if child.deleter is RIGHT else ([], child.survivor)
                    conflict = Conflict(ConflictClass.DELETE_EDIT, child.base_part, left, right, child.location)
                    children.append(ConflictNode(conflict))
                    conflicts.append(conflict)
                continue
            children.append(self.finalize(child, conflicts))
        node.children = children
        return node


def _insert_location(parent: Node, lseg, rseg) -> Span:
    return parent.span


def three_way_merge(
    base: Tree,
    left: Tree,
    right: Tree,
    stores: Optional[tuple[MatchingStore, MatchingStore, MatchingStore]] = None,
    opts: MergeOptions = MergeOptions(),
) -> MergedTree:
    if not (base.root.kind == left.root.kind == right.root.kind):
        raise MergeError(
            f"root kinds differ: {base.root.kind!r}, {left.root.kind!r}, {right.root.kind!r}"
        )
    if stores is None:
        stores = compute_matchings(base, left, right)
    merger = _Merger(stores, opts)
    sources = {BASE: base.source, LEFT: left.source, RIGHT: right.source}
    merger.texts = {o: (lambda n, s=s: n.text(s)) for o, s in sources.items()}
    root = merger.merge_node(base.root, left.root, right.root)
    if isinstance(root, ConflictNode):
        raise MergeError("root terminals conflict")
    conflicts: list[Conflict] = []
    root = merger.finalize(root, conflicts)
    return MergedTree(root=root, conflicts=conflicts, revisions={BASE: base, LEFT: left, RIGHT: right})
