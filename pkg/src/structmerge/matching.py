"""Level-wise maximum matching between two trees.

Terminals match when their values are identical.  Ordered NonTerminals
align their children with an order-preserving dynamic program; unordered
ones with a maximum-weight assignment.  A node never matches across tree
levels, across kinds, between a Terminal and a NonTerminal, or when both carry
different identifiers.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Iterator, Sequence

from .assignment import max_weight_assignment
from .cst import Node, Tree, deep_equal

Alignment = tuple[tuple[int, int], ...]


class MatchingStore:
    """Scores and chosen child alignments for node pairs of two trees.

    Keys are ``(node_id in tree A, node_id in tree B)``.
    """

    def __init__(self):
        self.scores: dict[tuple[int, int], int] = {}
        self.alignments: dict[tuple[int, int], Alignment] = {}

    def __len__(self):
        return len(self.scores)

    def score(self, a: Node, b: Node) -> int:
        """Matching score of ``(a, b)``, computed on first use."""
        return match_trees(a, b, self)

    match = score

    def alignment(self, a: Node, b: Node) -> Alignment:
        """Child index pairs chosen for ``(a, b)``; empty if they do not match."""
        if self.match(a, b) == 0:
            return ()
        return self.alignments.get((a.node_id, b.node_id), ())

    def triples(self) -> Iterator[tuple[int, int, int]]:
        for (ia, ib), s in sorted(self.scores.items()):
            if s > 0:
                yield ia, ib, s

    def dump(self) -> str:
        return "".join(f"{a}\t{b}\t{s}\n" for a, b, s in self.triples())

    def node_map(self, root_a: Node, root_b: Node) -> dict[int, Node]:
        """node_id in A -> matched node in B, following chosen alignments top-down."""
        out: dict[int, Node] = {}
        if self.match(root_a, root_b) == 0:
            return out
        stack = [(root_a, root_b)]
        while stack:
            a, b = stack.pop()
            out[a.node_id] = b
            for i, j in self.alignments.get((a.node_id, b.node_id), ()):
                stack.append((a.children[i], b.children[j]))
        return out


def root_matchable(a: Node, b: Node) -> bool:
    if a.is_terminal != b.is_terminal or a.kind != b.kind:
        return False
    return a.identifier is None or b.identifier is None or a.identifier == b.identifier


def match_trees(a: Node, b: Node, store: MatchingStore) -> int:
    key = (a.node_id, b.node_id)
    cached = store.scores.get(key)
    if cached is not None:
        return cached
    if not root_matchable(a, b):
        return 0
    if a.is_terminal:
        if a.value != b.value:
            return 0
        store.scores[key] = 1
        return 1
    if deep_equal(a, b):
        score = a.size
        alignment = tuple((i, i) for i in range(len(a.children)))
    else:
        if a.unordered and b.unordered:
            value, pairs = match_children_unordered(a.children, b.children, store)
        else:
            value, pairs = match_children_ordered(a.children, b.children, store)
        score = 1 + value
        alignment = tuple((i, j) for i, j, _ in pairs)
    store.scores[key] = score
    store.alignments[key] = alignment
    return score


def _candidates(xs: Sequence[Node], ys: Sequence[Node]) -> list[list[int]]:
    """For each x, the indices of ys it could possibly match."""
    by_kind: dict[tuple[str, bool], dict] = defaultdict(lambda: {"any": [], "ids": defaultdict(list)})
    for j, y in enumerate(ys):
        bucket = by_kind[(y.kind, y.is_terminal)]
        bucket["any"].append(j)
        if y.identifier is not None:
            bucket["ids"][y.identifier].append(j)
    anon = {}
    for key, bucket in by_kind.items():
        anon[key] = [j for j in bucket["any"] if ys[j].identifier is None]
    out = []
    for x in xs:
        key = (x.kind, x.is_terminal)
        bucket = by_kind.get(key)
        if bucket is None:
            out.append([])
        elif x.identifier is None:
            out.append(bucket["any"])
        else:
            out.append(sorted(bucket["ids"].get(x.identifier, []) + anon[key]))
    return out


def _weights(xs, ys, store) -> tuple[dict[tuple[int, int], int], int]:
    """Sparse pair weights ``score * scale + deep_equal``; the tie-break term
    never outweighs one unit of score."""
    scale = min(len(xs), len(ys)) + 1
    weights = {}
    for i, cands in enumerate(_candidates(xs, ys)):
        x = xs[i]
        for j in cands:
            s = match_trees(x, ys[j], store)
            if s:
                weights[(i, j)] = s * scale + (1 if deep_equal(x, ys[j]) else 0)
    return weights, scale


def match_children_ordered(
    xs: Sequence[Node], ys: Sequence[Node], store: MatchingStore
) -> tuple[int, list[tuple[int, int, int]]]:
    """Order-preserving maximum matching of two child sequences.

    Returns the total score and ``(i, j, score)`` triples in order.
    """
    n, m = len(xs), len(ys)
    if n == 0 or m == 0:
        return 0, []
    weights, scale = _weights(xs, ys, store)
    # Among equally good alignments prefer pairs that moved least; this only
    # matters for repeated children such as duplicate statements.
    span = max(n, m)
    shift = n * m + 1
    weights = {(i, j): w * shift + span - abs(i - j) for (i, j), w in weights.items()}
    scale *= shift
    # dp[i][j]: best weight for xs[:i], ys[:j]
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        prev = dp[i - 1]
        cur = dp[i]
        for j in range(1, m + 1):
            best = prev[j] if prev[j] >= cur[j - 1] else cur[j - 1]
            w = weights.get((i - 1, j - 1))
            if w is not None and prev[j - 1] + w > best:
                best = prev[j - 1] + w
            cur[j] = best
    pairs = []
    i, j = n, m
    while i > 0 and j > 0:
        w = weights.get((i - 1, j - 1))
        if w is not None and dp[i][j] == dp[i - 1][j - 1] + w:
            pairs.append((i - 1, j - 1, w // scale))
            i -= 1
            j -= 1
        elif dp[i][j] == dp[i - 1][j]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return dp[n][m] // scale, pairs


def match_children_unordered(
    xs: Sequence[Node], ys: Sequence[Node], store: MatchingStore
) -> tuple[int, list[tuple[int, int, int]]]:
    """Maximum matching of two child multisets (any order).

    The bipartite graph of positive-score pairs is split into connected
    components, each solved exactly by the assignment routine.
    """
    weights, scale = _weights(xs, ys, store)
    if not weights:
        return 0, []
    parent: dict = {}

    def find(k):
        while parent.setdefault(k, k) != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for i, j in weights:
        ra, rb = find(("x", i)), find(("y", j))
        if ra != rb:
            parent[ra] = rb
    groups: dict = defaultdict(lambda: (set(), set()))
    for i, j in weights:
        rows, cols = groups[find(("x", i))]
        rows.add(i)
        cols.add(j)

    pairs = []
    for rows, cols in groups.values():
        rows, cols = sorted(rows), sorted(cols)
        if len(rows) == 1 and len(cols) == 1:
            pairs.append((rows[0], cols[0], weights[(rows[0], cols[0])]))
            continue
        matrix = [[weights.get((i, j), 0) for j in cols] for i in rows]
        for r, c in max_weight_assignment(matrix):
            w = matrix[r][c]
            if w:
                pairs.append((rows[r], cols[c], w))
    pairs.sort()
    total = sum(w for _, _, w in pairs)
    return total // scale, [(i, j, w // scale) for i, j, w in pairs]


def compute_matchings(
    base: Tree, left: Tree, right: Tree
) -> tuple[MatchingStore, MatchingStore, MatchingStore]:
    """Stores for (base, left), (base, right) and (left, right)."""
    stores = []
    for a, b in ((base, left), (base, right), (left, right)):
        store = MatchingStore()
        match_trees(a.root, b.root, store)
        stores.append(store)
    return tuple(stores)
